use serde::{Deserialize, Serialize};

use super::{SampleSet, SamplerError};
use crate::model::Network;
use crate::statements::ProbTerm;

/// Index sets of a query, resolved once for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryEvaluator {
    numerator: Vec<usize>,
    denominator: Option<Vec<usize>>,
}

impl QueryEvaluator {
    pub fn new(network: &Network, query: &ProbTerm) -> Self {
        match &query.given {
            None => Self {
                numerator: network.index_set(&query.target),
                denominator: None,
            },
            Some(given) => Self {
                numerator: query
                    .target
                    .and(given)
                    .map(|e| network.index_set(&e))
                    .unwrap_or_default(),
                denominator: Some(network.index_set(given)),
            },
        }
    }

    /// The query value at `x`; `None` when a conditional's denominator is 0.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        let num: f64 = self.numerator.iter().map(|&i| x[i]).sum();
        match &self.denominator {
            None => Some(num),
            Some(den) => {
                let d: f64 = den.iter().map(|&i| x[i]).sum();
                (d > 0.0).then(|| num / d)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderDistribution {
    pub query: String,
    pub bin_count: usize,
    pub bin_counts: Vec<u64>,
    /// Fraction of defined samples per bin; sums to 1.
    pub densities: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for one sample.
    pub sample_sd: f64,
    pub min: f64,
    pub max: f64,
    pub defined_count: u64,
    pub undefined_count: u64,
}

impl SecondOrderDistribution {
    /// Bins values over `[0, 1]` in `bins` equal-width bins; 1.0 lands in the
    /// last bin. `None` values are counted as undefined.
    pub fn from_values(
        query: impl Into<String>,
        values: impl IntoIterator<Item = Option<f64>>,
        bins: usize,
    ) -> Result<Self, SamplerError> {
        if bins == 0 {
            return Err(SamplerError::InvalidArgument(
                "bin count must be at least 1".into(),
            ));
        }
        let mut bin_counts = vec![0u64; bins];
        let (mut defined, mut undefined) = (0u64, 0u64);
        let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        let mut defined_values = Vec::new();
        for v in values {
            let Some(v) = v else {
                undefined += 1;
                continue;
            };
            let clamped = v.clamp(0.0, 1.0);
            let b = ((clamped * bins as f64) as usize).min(bins - 1);
            bin_counts[b] += 1;
            defined += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
            defined_values.push(v);
        }
        if defined == 0 {
            return Err(if undefined == 0 {
                SamplerError::EmptySampleSet
            } else {
                SamplerError::AllUndefined
            });
        }
        let mean = sum / defined as f64;
        let sample_sd = if defined > 1 {
            let ss: f64 = defined_values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (defined - 1) as f64).sqrt()
        } else {
            0.0
        };
        let densities = bin_counts
            .iter()
            .map(|&c| c as f64 / defined as f64)
            .collect();
        Ok(Self {
            query: query.into(),
            bin_count: bins,
            bin_counts,
            densities,
            mean,
            sample_sd,
            min,
            max,
            defined_count: defined,
            undefined_count: undefined,
        })
    }

    /// Lower and upper edge of bin `b`.
    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        let n = self.bin_count as f64;
        (b as f64 / n, (b + 1) as f64 / n)
    }
}

/// Histogram, mean and spread of `query` over the accepted samples.
pub fn second_order(
    samples: &SampleSet,
    network: &Network,
    query: &ProbTerm,
    bins: usize,
) -> Result<SecondOrderDistribution, SamplerError> {
    if samples.is_empty() {
        return Err(SamplerError::EmptySampleSet);
    }
    let eval = QueryEvaluator::new(network, query);
    let label = crate::statements::format_query(network, query);
    SecondOrderDistribution::from_values(label, samples.accepted.iter().map(|x| eval.eval(x)), bins)
}

/// Mean of `query` over the samples where it is defined.
pub fn expected_value(
    samples: &SampleSet,
    network: &Network,
    query: &ProbTerm,
) -> Result<f64, SamplerError> {
    second_order(samples, network, query, 1).map(|d| d.mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_edges_and_counts() {
        let d = SecondOrderDistribution::from_values(
            "q",
            [Some(0.0), Some(0.5), Some(1.0), Some(0.25), None],
            4,
        )
        .unwrap();
        assert_eq!(d.bin_counts, vec![1, 1, 1, 1]);
        assert_eq!(d.undefined_count, 1);
        assert_eq!(d.defined_count, 4);
        assert!((d.densities.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(d.bin_edges(3), (0.75, 1.0));
        assert!((d.mean - 0.4375).abs() < 1e-15);
        assert_eq!((d.min, d.max), (0.0, 1.0));
    }

    #[test]
    fn point_mass_fills_one_bin() {
        let d = SecondOrderDistribution::from_values("q", vec![Some(1.0); 10], 50).unwrap();
        assert_eq!(d.bin_counts[49], 10);
        assert_eq!(d.sample_sd, 0.0);
        assert_eq!(d.densities.iter().filter(|v| **v > 0.0).count(), 1);
    }

    #[test]
    fn undefined_everywhere() {
        assert_eq!(
            SecondOrderDistribution::from_values("q", [None, None], 5),
            Err(SamplerError::AllUndefined)
        );
        assert_eq!(
            SecondOrderDistribution::from_values("q", [], 5),
            Err(SamplerError::EmptySampleSet)
        );
    }
}
