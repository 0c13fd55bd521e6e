//! Statement compilation into (in)equalities over constituent probabilities.
//!
//! Conditional probabilities are handled by clearing denominators: every
//! cleared denominator is required to be strictly positive by an extra
//! positivity constraint, which makes the polynomial form equivalent to the
//! original ratio form.

use thiserror::Error;

use super::{Constraint, ConstraintRelation, ConstraintSystem, Polynomial, Provenance, Role};
use crate::model::{Event, Network};
use crate::statements::{
    validate, Finding, ProbTerm, Relation, Severity, Sign, Statement, StatementBody,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("statement {statement}: {message}")]
    Invalid { statement: String, message: String },
    #[error("{} statements failed to compile: {}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Many(Vec<CompileError>),
}

impl CompileError {
    fn from_finding(f: &Finding) -> Self {
        CompileError::Invalid {
            statement: f.statement.clone(),
            message: f.message.clone(),
        }
    }
}

/// Normalization (`Σ x_i = 1`) followed by the `k` non-negativity constraints.
pub fn compile_axioms(k: usize) -> Vec<Constraint> {
    let all: Vec<usize> = (0..k).collect();
    let mut out = Vec::with_capacity(k + 1);
    out.push(Constraint::new(
        Polynomial::linear_sum(&all, 1.0),
        ConstraintRelation::Eq,
        1.0,
        Provenance::axiom(),
    ));
    for i in 0..k {
        out.push(Constraint::new(
            Polynomial::linear_sum(&[i], 1.0),
            ConstraintRelation::Ge,
            0.0,
            Provenance::axiom(),
        ));
    }
    out
}

/// `Pr(event)` as a linear polynomial.
fn prob(network: &Network, event: &Event) -> Polynomial {
    Polynomial::linear_sum(&network.index_set(event), 1.0)
}

/// `Pr(a ∧ b)`; the zero polynomial when the conjunction is impossible.
fn prob_and(network: &Network, a: &Event, b: &Event) -> Polynomial {
    a.and(b)
        .map_or_else(Polynomial::zero, |e| prob(network, &e))
}

/// `Pr(var ≥ value at position m ∧ context)`: values at positions `0..=m`.
fn prob_at_least(network: &Network, var: usize, m: usize, context: &Event) -> Polynomial {
    (0..=m).fold(Polynomial::zero(), |acc, pos| {
        acc.add(&prob(network, &context.with(var, pos)))
    })
}

/// Numerator and optional denominator of a probability term.
fn fraction(network: &Network, term: &ProbTerm) -> (Polynomial, Option<Polynomial>) {
    match &term.given {
        None => (prob(network, &term.target), None),
        Some(given) => (
            prob_and(network, &term.target, given),
            Some(prob(network, given)),
        ),
    }
}

struct Emitter<'a> {
    statement: &'a Statement,
    out: Vec<Constraint>,
}

impl<'a> Emitter<'a> {
    fn new(statement: &'a Statement) -> Self {
        Self {
            statement,
            out: Vec::new(),
        }
    }

    fn main(&mut self, lhs: Polynomial, relation: ConstraintRelation, rhs: f64) -> &mut Constraint {
        let mut c = Constraint::new(
            lhs,
            relation,
            rhs,
            Provenance::of(&self.statement.id, Role::Main),
        );
        c.tol_eq = self.statement.tol_eq;
        self.out.push(c);
        self.out.last_mut().unwrap()
    }

    fn positive(&mut self, denominator: &Polynomial) {
        self.out.push(Constraint::new(
            denominator.clone(),
            ConstraintRelation::Gt,
            0.0,
            Provenance::of(&self.statement.id, Role::Positivity),
        ));
    }

    /// Emits `lhs ⋈ 0` where `sign` picks `≥` (positive), `≤` (negative,
    /// stored negated) or `=` (zero, banded by `scale`).
    fn signed(&mut self, sign: Sign, lhs: Polynomial, scale: Polynomial) {
        match sign {
            Sign::Positive => {
                self.main(lhs, ConstraintRelation::Ge, 0.0);
            }
            Sign::Negative => {
                self.main(lhs.scale(-1.0), ConstraintRelation::Ge, 0.0);
            }
            Sign::Zero => {
                self.main(lhs, ConstraintRelation::Eq, 0.0).band_scale = Some(scale);
            }
        }
    }
}

/// `Pr(b) = p` is `Σ_{I_b} x_i = p`; `Pr(b1|b2) = p` becomes
/// `Pr(b1 b2) − p·Pr(b2) = 0` and `Pr(b2) > 0`.
fn emit_point(em: &mut Emitter<'_>, network: &Network, term: &ProbTerm, p: f64) {
    match fraction(network, term) {
        (num, None) => {
            em.main(num, ConstraintRelation::Eq, p);
        }
        (num, Some(den)) => {
            em.main(num.sub(&den.scale(p)), ConstraintRelation::Eq, 0.0)
                .band_scale = Some(den.clone());
            em.positive(&den);
        }
    }
}

/// `lo ≤ Pr(..) ≤ hi`: two bounds, plus positivity of the denominator for a
/// conditional.
fn emit_interval(em: &mut Emitter<'_>, network: &Network, term: &ProbTerm, lo: f64, hi: f64) {
    match fraction(network, term) {
        (num, None) => {
            em.main(num.clone(), ConstraintRelation::Ge, lo);
            em.main(num.scale(-1.0), ConstraintRelation::Ge, -hi);
        }
        (num, Some(den)) => {
            em.main(num.sub(&den.scale(lo)), ConstraintRelation::Ge, 0.0);
            em.main(den.scale(hi).sub(&num), ConstraintRelation::Ge, 0.0);
            em.positive(&den);
        }
    }
}

/// `a1·Pr(..) ⋈ a2·Pr(..)`, cross-multiplied by any denominators.
fn emit_comparison(
    em: &mut Emitter<'_>,
    network: &Network,
    lhs_coef: f64,
    lhs: &ProbTerm,
    relation: Relation,
    rhs_coef: f64,
    rhs: &ProbTerm,
) {
    let (ln, ld) = fraction(network, lhs);
    let (rn, rd) = fraction(network, rhs);
    let one = Polynomial::constant(1.0);
    let left = ln.scale(lhs_coef).mul(rd.as_ref().unwrap_or(&one));
    let right = rn.scale(rhs_coef).mul(ld.as_ref().unwrap_or(&one));
    match relation {
        Relation::Ge => {
            em.main(left.sub(&right), ConstraintRelation::Ge, 0.0);
        }
        Relation::Gt => {
            em.main(left.sub(&right), ConstraintRelation::Gt, 0.0);
        }
        Relation::Le => {
            em.main(right.sub(&left), ConstraintRelation::Ge, 0.0);
        }
        Relation::Lt => {
            em.main(right.sub(&left), ConstraintRelation::Gt, 0.0);
        }
        Relation::Eq => {
            let c = em.main(left.sub(&right), ConstraintRelation::Eq, 0.0);
            if ld.is_some() || rd.is_some() {
                c.band_scale = Some(ld.as_ref().unwrap_or(&one).mul(rd.as_ref().unwrap_or(&one)));
            }
        }
    }
    for den in [ld, rd].into_iter().flatten() {
        em.positive(&den);
    }
}

/// All assignments of `vars`, mixed radix with the last variable fastest and
/// every variable starting at its highest value.
pub(crate) fn assignments(network: &Network, vars: &[usize]) -> Vec<Event> {
    let mut out = vec![Event::sure()];
    for &v in vars {
        let arity = network.variable(v).arity();
        out = out
            .into_iter()
            .flat_map(|e| (0..arity).map(move |pos| e.with(v, pos)))
            .collect();
    }
    out
}

/// Value pairs `(i, j)` with `i` higher than `j`.
pub(crate) fn ordered_pairs(arity: usize) -> Vec<(usize, usize)> {
    (0..arity)
        .flat_map(|i| (i + 1..arity).map(move |j| (i, j)))
        .collect()
}

fn other_parents(network: &Network, child: usize, exclude: &[usize]) -> Vec<usize> {
    network
        .parents(child)
        .iter()
        .copied()
        .filter(|p| !exclude.contains(p))
        .collect()
}

/// `S±(V1, V0)`: one dominance inequality per threshold of V0, value pair of
/// V1 and assignment of V0's other parents.
fn emit_influence(
    em: &mut Emitter<'_>,
    network: &Network,
    sign: Sign,
    source: usize,
    target: usize,
) {
    let k0 = network.variable(target).arity();
    let k1 = network.variable(source).arity();
    for b in assignments(network, &other_parents(network, target, &[source])) {
        for m in 0..k0 - 1 {
            for (i, j) in ordered_pairs(k1) {
                let ctx_i = b.with(source, i);
                let ctx_j = b.with(source, j);
                let (num_i, den_i) = (
                    prob_at_least(network, target, m, &ctx_i),
                    prob(network, &ctx_i),
                );
                let (num_j, den_j) = (
                    prob_at_least(network, target, m, &ctx_j),
                    prob(network, &ctx_j),
                );
                let lhs = num_i.mul(&den_j).sub(&num_j.mul(&den_i));
                em.signed(sign, lhs, den_i.mul(&den_j));
                em.positive(&den_i);
                em.positive(&den_j);
            }
        }
    }
}

/// `Y±({V1, V2}, V0)`: the sum of conditionals along the diagonal compared
/// with the anti-diagonal, cleared of its four denominators.
fn emit_additive_synergy(
    em: &mut Emitter<'_>,
    network: &Network,
    sign: Sign,
    (v1, v2): (usize, usize),
    target: usize,
) {
    let k0 = network.variable(target).arity();
    let k1 = network.variable(v1).arity();
    let k2 = network.variable(v2).arity();
    for b in assignments(network, &other_parents(network, target, &[v1, v2])) {
        for m in 0..k0 - 1 {
            for (i, j) in ordered_pairs(k1) {
                for (ip, jp) in ordered_pairs(k2) {
                    // (v1 value, v2 value, sign in the sum)
                    let cells = [(i, ip, 1.0), (j, jp, 1.0), (i, jp, -1.0), (j, ip, -1.0)];
                    let parts: Vec<(Polynomial, Polynomial, f64)> = cells
                        .iter()
                        .map(|&(a, c, s)| {
                            let ctx = b.with(v1, a).with(v2, c);
                            (
                                prob_at_least(network, target, m, &ctx),
                                prob(network, &ctx),
                                s,
                            )
                        })
                        .collect();
                    let mut lhs = Polynomial::zero();
                    for (t, (num, _, s)) in parts.iter().enumerate() {
                        let others = parts
                            .iter()
                            .enumerate()
                            .filter(|&(u, _)| u != t)
                            .map(|(_, p)| &p.1);
                        lhs = lhs.add(&num.mul(&Polynomial::product(others)).scale(*s));
                    }
                    let scale = Polynomial::product(parts.iter().map(|p| &p.1));
                    em.signed(sign, lhs, scale);
                    for (_, den, _) in &parts {
                        em.positive(den);
                    }
                }
            }
        }
    }
}

/// `X±({V1, V2}, v0)`: for a higher value of V2, `Pr(V1 ≥ v | V2, v0, b)` is
/// lower (negative), higher (positive) or equal (zero).
fn emit_product_synergy(
    em: &mut Emitter<'_>,
    network: &Network,
    sign: Sign,
    (v1, v2): (usize, usize),
    effect_var: usize,
    effect_value: usize,
) {
    let k1 = network.variable(v1).arity();
    let k2 = network.variable(v2).arity();
    for b in assignments(network, &other_parents(network, effect_var, &[v1, v2])) {
        let context = b.with(effect_var, effect_value);
        for t in 0..k1 - 1 {
            for (ip, jp) in ordered_pairs(k2) {
                let ctx_i = context.with(v2, ip);
                let ctx_j = context.with(v2, jp);
                let (num_i, den_i) = (prob_at_least(network, v1, t, &ctx_i), prob(network, &ctx_i));
                let (num_j, den_j) = (prob_at_least(network, v1, t, &ctx_j), prob(network, &ctx_j));
                let lhs = num_i.mul(&den_j).sub(&num_j.mul(&den_i));
                em.signed(sign, lhs, den_i.mul(&den_j));
                em.positive(&den_i);
                em.positive(&den_j);
            }
        }
    }
}

/// Compiles one statement. The statement must already pass [`validate`]
/// without errors.
pub fn compile_statement(statement: &Statement, network: &Network) -> Vec<Constraint> {
    let mut em = Emitter::new(statement);
    match &statement.body {
        StatementBody::Point { term, p } => emit_point(&mut em, network, term, *p),
        StatementBody::Interval { term, lo, hi } => emit_interval(&mut em, network, term, *lo, *hi),
        StatementBody::Comparison {
            lhs_coef,
            lhs,
            relation,
            rhs_coef,
            rhs,
        } => emit_comparison(&mut em, network, *lhs_coef, lhs, *relation, *rhs_coef, rhs),
        StatementBody::Influence {
            sign,
            source,
            target,
        } => emit_influence(&mut em, network, *sign, *source, *target),
        StatementBody::AdditiveSynergy { sign, pair, target } => {
            emit_additive_synergy(&mut em, network, *sign, *pair, *target)
        }
        StatementBody::ProductSynergy {
            sign,
            pair,
            effect_var,
            effect_value,
        } => emit_product_synergy(&mut em, network, *sign, *pair, *effect_var, *effect_value),
    }
    em.out
}

/// Axioms first, then each statement's constraints in statement order.
/// No deduplication happens here; see [`super::normalize`].
pub fn compile_system(
    statements: &[Statement],
    network: &Network,
) -> Result<ConstraintSystem, CompileError> {
    let errors: Vec<CompileError> = validate(statements, network)
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .map(CompileError::from_finding)
        .collect();
    match errors.len() {
        0 => {}
        1 => return Err(errors.into_iter().next().unwrap()),
        _ => return Err(CompileError::Many(errors)),
    }
    let mut constraints = compile_axioms(network.k());
    for s in statements {
        constraints.extend(compile_statement(s, network));
    }
    Ok(ConstraintSystem {
        k: network.k(),
        constraints,
        dedup_applied: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{normalize, Role};
    use crate::statements::{parse_document, Document};

    const HIV: &str = "var H : h > no_h\nvar N : n > no_n\nvar I : i > no_i\nvar C : c > no_c\n\
                       edge N -> H\nedge I -> H\nedge C -> H\nedge I -> C\n";

    fn hiv(statements: &str) -> Document {
        parse_document(&format!("{HIV}{statements}")).unwrap()
    }

    fn compiled(statements: &str) -> Vec<Constraint> {
        let d = hiv(statements);
        compile_statement(&d.statements[0], &d.network)
    }

    fn roles(cs: &[Constraint]) -> (usize, usize) {
        let main = cs
            .iter()
            .filter(|c| c.provenance.role == Role::Main)
            .count();
        let pos = cs
            .iter()
            .filter(|c| c.provenance.role == Role::Positivity)
            .count();
        (main, pos)
    }

    #[test]
    fn axioms() {
        assert_eq!(compile_axioms(16).len(), 17);
        let two = compile_axioms(2);
        assert_eq!(two[0].to_string(), "x0 + x1 = 1");
        assert_eq!(two[1].to_string(), "x0 >= 0");
        assert_eq!(two[2].to_string(), "x1 >= 0");
    }

    #[test]
    fn influence_on_hiv() {
        let cs = compiled("S+(N,H)\n");
        assert_eq!(roles(&cs), (4, 8));
        assert_eq!(cs[0].to_string(), "x0*x12 - x4*x8 >= 0");
        assert!(cs
            .iter()
            .filter(|c| c.provenance.role == Role::Positivity)
            .all(|c| c.strict() && c.is_linear()));
        let neg = compiled("S-(N,H)\n");
        assert_eq!(neg[0].lhs, cs[0].lhs.scale(-1.0));
        let zero = compiled("S0(N,H)\n");
        assert_eq!(zero[0].relation, ConstraintRelation::Eq);
        assert!(zero[0].band_scale.is_some());
    }

    #[test]
    fn additive_synergy_on_hiv() {
        let cs = compiled("Y-({I,C},H)\n");
        assert_eq!(roles(&cs), (2, 8));
        for c in cs.iter().filter(|c| c.provenance.role == Role::Main) {
            assert_eq!(c.degree(), 4);
            assert!(c.lhs.is_multilinear());
            let coeffs: Vec<f64> = c.lhs.terms().iter().map(|t| t.0).collect();
            assert!(coeffs.iter().all(|v| [-2.0, -1.0, 1.0, 2.0].contains(v)));
            assert!(coeffs.contains(&2.0) && coeffs.contains(&-2.0));
        }
    }

    #[test]
    fn product_synergy_on_hiv() {
        let cs = compiled("X-({N,I},h)\n");
        assert_eq!(roles(&cs), (2, 4));
        let expected = Polynomial::from_terms(vec![(1.0, vec![2, 4]), (-1.0, vec![0, 6])]);
        assert_eq!(cs[0].lhs, expected);
        assert_eq!(cs[0].relation, ConstraintRelation::Ge);
        let zero = compiled("X0({N,I},h)\n");
        assert_eq!(zero[0].relation, ConstraintRelation::Eq);
    }

    #[test]
    fn point_conditional_with_certainty() {
        let cs = compiled("P(i | c) = 1\n");
        assert_eq!(cs.len(), 2);
        // Pr(ic) − Pr(c) = −Pr(¬i ∧ c)
        let d = hiv("");
        let not_i_c = d.network.event(&[("I", "no_i"), ("C", "c")]).unwrap();
        let expected = Polynomial::linear_sum(&d.network.index_set(&not_i_c), -1.0);
        assert_eq!(cs[0].lhs, expected);
        assert_eq!(cs[0].relation, ConstraintRelation::Eq);
        assert_eq!(cs[1].provenance.role, Role::Positivity);
        assert_eq!(
            cs[1].to_string(),
            "x0 + x2 + x4 + x6 + x8 + x10 + x12 + x14 > 0"
        );
    }

    #[test]
    fn self_conditional_is_trivial() {
        let d = parse_document("var A : a > b\nP(a | a) = 1\n");
        // a conditional on its own variable is only a warning
        let d = d.unwrap();
        let cs = compile_statement(&d.statements[0], &d.network);
        assert!(cs[0].lhs.is_zero());
        assert_eq!(cs.len(), 2);
    }

    #[test]
    fn priors_intervals_comparisons() {
        let cs = compiled("P(h) = 0.005\n");
        assert_eq!(cs.len(), 1);
        assert_eq!(
            cs[0].lhs,
            Polynomial::linear_sum(&(0..8).collect::<Vec<_>>(), 1.0)
        );
        assert_eq!(cs[0].rhs, 0.005);

        assert_eq!(compiled("0.2 <= P(h) <= 0.3\n").len(), 2);
        let cs = compiled("0.1 <= P(n | h) <= 0.25\n");
        assert_eq!(roles(&cs), (2, 1));

        let cs = compiled("P(i) > P(n)\n");
        assert_eq!(cs.len(), 1);
        assert!(cs[0].strict() && cs[0].is_linear());

        let cs = compiled("P(h | n) > P(h | i)\n");
        assert_eq!(roles(&cs), (1, 2));
        assert_eq!(cs[0].degree(), 2);

        let cs = compiled("P(h) = P(h)\n");
        assert!(cs[0].lhs.is_zero());
    }

    #[test]
    fn hiv_example_system_counts() {
        let d = hiv("P(i | c) = 1\nP(i) > P(n)\nP(h | n) > P(h | i)\n0.1 <= P(n | h) <= 0.25\n");
        assert_eq!(compile_system(&d.statements, &d.network).unwrap().len(), 26);
        let empty = hiv("");
        assert_eq!(
            compile_system(&empty.statements, &empty.network)
                .unwrap()
                .len(),
            17
        );
        let s = hiv("S+(N,H)\n");
        assert_eq!(compile_system(&s.statements, &s.network).unwrap().len(), 29);
    }

    #[test]
    fn invalid_statement_is_rejected() {
        let d = hiv("S+(C,N)\n");
        assert!(matches!(
            compile_system(&d.statements, &d.network),
            Err(CompileError::Invalid { .. })
        ));
    }

    #[test]
    fn normalize_collapses_shared_positivity() {
        let d = hiv("S+(N,H)\nY-({I,C},H)\n");
        let raw = compile_system(&d.statements, &d.network).unwrap();
        let norm = normalize(&raw);
        assert!(norm.dedup_applied);
        assert!(norm.len() < raw.len());
        assert_eq!(normalize(&norm).constraints, norm.constraints);
    }

    #[test]
    fn trivial_interval_is_flagged_redundant() {
        let d = hiv("0 <= P(h) <= 1\n");
        let sys = normalize(&compile_system(&d.statements, &d.network).unwrap());
        let flagged: Vec<_> = sys.from_statement("s1").collect();
        assert_eq!(flagged.len(), 2);
        assert!(flagged.iter().all(|c| c.redundant));
    }
}
