use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Coefficients smaller than this (relative to 1) are treated as cancelled.
const ZERO_EPS: f64 = 1e-14;

/// A polynomial over constituent probabilities `x_0 .. x_{k-1}`.
///
/// Terms are kept canonical: each monomial (a sorted list of constituent
/// indices, possibly empty for the constant term) appears once, monomials
/// are sorted, and cancelled terms are dropped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![(c, Vec::new())])
    }

    /// `coef * Σ_{i ∈ indices} x_i`
    pub fn linear_sum(indices: &[usize], coef: f64) -> Self {
        Self::from_terms(indices.iter().map(|&i| (coef, vec![i as u32])).collect())
    }

    pub fn from_terms(terms: Vec<(f64, Vec<u32>)>) -> Self {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (c, mut m) in terms {
            m.sort_unstable();
            *acc.entry(m).or_insert(0.0) += c;
        }
        Self {
            terms: acc
                .into_iter()
                .filter(|(_, c)| c.abs() > ZERO_EPS)
                .map(|(m, c)| (c, m))
                .collect(),
        }
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for constants and the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, m)| m.len()).max().unwrap_or(0)
    }

    /// True when no monomial repeats an index.
    pub fn is_multilinear(&self) -> bool {
        self.terms
            .iter()
            .all(|(_, m)| m.windows(2).all(|w| w[0] != w[1]))
    }

    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|(_, m)| m.is_empty())
            .map_or(0.0, |(c, _)| *c)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(terms)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(c, m)| (c * factor, m.clone()))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, ma) in &self.terms {
            for (cb, mb) in &other.terms {
                let mut m = Vec::with_capacity(ma.len() + mb.len());
                m.extend_from_slice(ma);
                m.extend_from_slice(mb);
                terms.push((ca * cb, m));
            }
        }
        Self::from_terms(terms)
    }

    pub fn product<'a>(factors: impl IntoIterator<Item = &'a Polynomial>) -> Polynomial {
        factors
            .into_iter()
            .fold(Polynomial::constant(1.0), |acc, f| acc.mul(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, m)| c * m.iter().map(|&i| x[i as usize]).product::<f64>())
            .sum()
    }

    /// Dense coefficients of a degree-≤1 polynomial plus its constant term.
    pub fn linear_coefficients(&self, k: usize) -> Option<(Vec<f64>, f64)> {
        if self.degree() > 1 {
            return None;
        }
        let mut coeffs = vec![0.0; k];
        let mut constant = 0.0;
        for (c, m) in &self.terms {
            match m.as_slice() {
                [] => constant += c,
                [i] => coeffs[*i as usize] += c,
                _ => unreachable!(),
            }
        }
        Some((coeffs, constant))
    }

    /// Bit-exact key, used for deduplication.
    pub(crate) fn key(&self) -> Vec<(u64, Vec<u32>)> {
        self.terms
            .iter()
            .map(|(c, m)| (c.to_bits(), m.clone()))
            .collect()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (c, m)) in self.terms.iter().enumerate() {
            let magnitude = c.abs();
            if n == 0 {
                if *c < 0.0 {
                    f.write_str("-")?;
                }
            } else if *c < 0.0 {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if m.is_empty() {
                write!(f, "{magnitude}")?;
                continue;
            }
            if magnitude != 1.0 {
                write!(f, "{magnitude}*")?;
            }
            let vars: Vec<String> = m.iter().map(|i| format!("x{i}")).collect();
            f.write_str(&vars.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization_merges_and_cancels() {
        let p = Polynomial::from_terms(vec![
            (1.0, vec![4, 0]),
            (1.0, vec![0, 12]),
            (-1.0, vec![0, 4]),
            (-1.0, vec![4, 8]),
        ]);
        assert_eq!(p.terms(), &[(1.0, vec![0, 12]), (-1.0, vec![4, 8])]);
        assert_eq!(p.to_string(), "x0*x12 - x4*x8");
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::linear_sum(&[0, 1], 1.0);
        let b = Polynomial::linear_sum(&[2], 1.0);
        let ab = a.mul(&b);
        assert_eq!(ab.terms(), &[(1.0, vec![0, 2]), (1.0, vec![1, 2])]);
        assert!(a.sub(&a).is_zero());
        let x = [0.1, 0.2, 0.3];
        assert!((ab.eval(&x) - 0.3 * 0.3).abs() < 1e-15);
        assert_eq!(Polynomial::constant(2.0).add(&a).constant_term(), 2.0);
        let (coeffs, c) = a
            .add(&Polynomial::constant(-1.0))
            .linear_coefficients(3)
            .unwrap();
        assert_eq!(coeffs, vec![1.0, 1.0, 0.0]);
        assert_eq!(c, -1.0);
        assert!(ab.linear_coefficients(3).is_none());
    }
}
