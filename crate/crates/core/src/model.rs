//! Network structure, constituent enumeration and exact evaluation of
//! event probabilities at a point of the distribution hyperspace.
//!
//! Constituents are indexed 0-based in mixed radix over the declared
//! variable order, with the last declared variable varying fastest. A
//! variable's values are listed from highest to lowest, so value position 0
//! is the "highest" value.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the number of constituent assignments.
pub const DEFAULT_MAX_CONSTITUENTS: usize = 1 << 20;

/// Tolerance used when checking that a point lies on the simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{0}` is declared more than once")]
    DuplicateVariable(String),
    #[error("variable `{name}` needs at least 2 values, got {count}")]
    DomainTooSmall { name: String, count: usize },
    #[error("variable `{var}` lists value `{value}` more than once")]
    DuplicateValue { var: String, value: String },
    #[error("edge endpoint `{0}` is not a declared variable")]
    UnknownEndpoint(String),
    #[error("edge {0} -> {0} is a self-loop")]
    SelfLoop(String),
    #[error("the edges contain a cycle through `{0}`")]
    Cycle(String),
    #[error("network has {k} constituents, above the cap of {cap}")]
    TooManyConstituents { k: u128, cap: usize },
    #[error("network declares no variables")]
    Empty,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}` has no value `{value}`")]
    UnknownValue { var: String, value: String },
    #[error("event mentions variable `{0}` twice")]
    RepeatedVariable(String),
    #[error("point has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("conditional probability is undefined: the conditioning event has probability 0")]
    UndefinedConditional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    /// Values from highest to lowest.
    pub values: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn value_position(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// A validated belief-network structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    /// (parent, child) pairs, sorted and unique.
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
    by_name: HashMap<String, usize>,
    table: ConstituentTable,
}

impl Network {
    /// Validates variables and edges and builds the constituent table.
    pub fn build<S: AsRef<str>>(
        variables: Vec<Variable>,
        edges: &[(S, S)],
    ) -> Result<Self, ModelError> {
        Self::build_with_cap(variables, edges, DEFAULT_MAX_CONSTITUENTS)
    }

    pub fn build_with_cap<S: AsRef<str>>(
        variables: Vec<Variable>,
        edges: &[(S, S)],
        cap: usize,
    ) -> Result<Self, ModelError> {
        if variables.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut by_name = HashMap::new();
        for (idx, var) in variables.iter().enumerate() {
            if by_name.insert(var.name.clone(), idx).is_some() {
                return Err(ModelError::DuplicateVariable(var.name.clone()));
            }
            if var.values.len() < 2 {
                return Err(ModelError::DomainTooSmall {
                    name: var.name.clone(),
                    count: var.values.len(),
                });
            }
            let mut seen = BTreeSet::new();
            for value in &var.values {
                if !seen.insert(value.as_str()) {
                    return Err(ModelError::DuplicateValue {
                        var: var.name.clone(),
                        value: value.clone(),
                    });
                }
            }
        }

        let mut edge_set = BTreeSet::new();
        for (p, c) in edges {
            let (p, c) = (p.as_ref(), c.as_ref());
            let pi = *by_name
                .get(p)
                .ok_or_else(|| ModelError::UnknownEndpoint(p.to_string()))?;
            let ci = *by_name
                .get(c)
                .ok_or_else(|| ModelError::UnknownEndpoint(c.to_string()))?;
            if pi == ci {
                return Err(ModelError::SelfLoop(p.to_string()));
            }
            edge_set.insert((pi, ci));
        }
        let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();

        let n = variables.len();
        let mut parents = vec![Vec::new(); n];
        for &(p, c) in &edges {
            parents[c].push(p);
        }
        for ps in &mut parents {
            ps.sort_unstable();
        }
        let topo_order = topological_order(n, &edges)
            .map_err(|v| ModelError::Cycle(variables[v].name.clone()))?;

        let sizes: Vec<usize> = variables.iter().map(Variable::arity).collect();
        let table = ConstituentTable::new(&sizes, cap)?;

        Ok(Self {
            variables,
            edges,
            parents,
            topo_order,
            by_name,
            table,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, idx: usize) -> &Variable {
        &self.variables[idx]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Direct predecessors of `var`, in declaration order.
    pub fn parents(&self, var: usize) -> &[usize] {
        &self.parents[var]
    }

    pub fn is_parent(&self, parent: usize, child: usize) -> bool {
        self.parents[child].binary_search(&parent).is_ok()
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn require_var(&self, name: &str) -> Result<usize, ModelError> {
        self.var_index(name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    }

    pub fn table(&self) -> &ConstituentTable {
        &self.table
    }

    pub fn k(&self) -> usize {
        self.table.k()
    }

    /// Resolves `(variable name, value name)` literals into an [`Event`].
    pub fn event<S: AsRef<str>>(&self, literals: &[(S, S)]) -> Result<Event, ModelError> {
        let mut lits = Vec::with_capacity(literals.len());
        for (var, value) in literals {
            let vi = self.require_var(var.as_ref())?;
            let pos = self.variables[vi]
                .value_position(value.as_ref())
                .ok_or_else(|| ModelError::UnknownValue {
                    var: var.as_ref().to_string(),
                    value: value.as_ref().to_string(),
                })?;
            lits.push((vi, pos));
        }
        Event::from_indices(self, lits)
    }

    /// Index set of `event`: the constituents whose disjunction is the event.
    pub fn index_set(&self, event: &Event) -> Vec<usize> {
        self.table.index_set(event.literals())
    }

    /// Human-readable label of constituent `index`, e.g. `h,n,~i,c`.
    pub fn constituent_label(&self, index: usize) -> String {
        self.table
            .decode(index)
            .iter()
            .zip(&self.variables)
            .map(|(&pos, var)| var.values[pos].clone())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Kahn's algorithm; ties resolved by declaration order. On a cycle returns
/// one of the variables that could not be ordered.
fn topological_order(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, usize> {
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(p, c) in edges {
        indegree[c] += 1;
        children[p].push(c);
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&v| indegree[v] > 0).unwrap_or(0))
    }
}

/// A conjunction of literals over distinct variables. The empty event is the
/// sure event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Event {
    /// (variable index, value position), sorted by variable.
    literals: Vec<(usize, usize)>,
}

impl Event {
    pub fn sure() -> Self {
        Self::default()
    }

    pub fn from_indices(
        network: &Network,
        mut literals: Vec<(usize, usize)>,
    ) -> Result<Self, ModelError> {
        literals.sort_unstable();
        for w in literals.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ModelError::RepeatedVariable(
                    network.variables[w[0].0].name.clone(),
                ));
            }
        }
        for &(v, pos) in &literals {
            let var = network
                .variables
                .get(v)
                .ok_or_else(|| ModelError::UnknownVariable(format!("#{v}")))?;
            if pos >= var.arity() {
                return Err(ModelError::UnknownValue {
                    var: var.name.clone(),
                    value: format!("#{pos}"),
                });
            }
        }
        Ok(Self { literals })
    }

    pub fn literals(&self) -> &[(usize, usize)] {
        &self.literals
    }

    pub fn is_sure(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn value_of(&self, var: usize) -> Option<usize> {
        self.literals
            .binary_search_by_key(&var, |&(v, _)| v)
            .ok()
            .map(|i| self.literals[i].1)
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.literals.iter().map(|&(v, _)| v)
    }

    pub fn shares_variable(&self, other: &Event) -> bool {
        self.variables().any(|v| other.value_of(v).is_some())
    }

    /// Conjunction of two events; `None` when they assign different values
    /// to the same variable (the conjunction is impossible).
    pub fn and(&self, other: &Event) -> Option<Event> {
        let mut literals = self.literals.clone();
        for &(v, pos) in &other.literals {
            match self.value_of(v) {
                Some(p) if p != pos => return None,
                Some(_) => {}
                None => literals.push((v, pos)),
            }
        }
        literals.sort_unstable();
        Some(Event { literals })
    }

    /// Adds one literal; the variable must not already be constrained.
    pub fn with(&self, var: usize, pos: usize) -> Event {
        debug_assert!(self.value_of(var).is_none());
        let mut literals = self.literals.clone();
        literals.push((var, pos));
        literals.sort_unstable();
        Event { literals }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstituentTable {
    k: usize,
    sizes: Vec<usize>,
    strides: Vec<usize>,
}

impl ConstituentTable {
    pub fn new(sizes: &[usize], cap: usize) -> Result<Self, ModelError> {
        let k: u128 = sizes.iter().map(|&s| s as u128).product();
        if k > cap as u128 {
            return Err(ModelError::TooManyConstituents { k, cap });
        }
        let mut strides = vec![1usize; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        Ok(Self {
            k: k as usize,
            sizes: sizes.to_vec(),
            strides,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn index_of(&self, positions: &[usize]) -> usize {
        positions
            .iter()
            .zip(&self.strides)
            .map(|(p, s)| p * s)
            .sum()
    }

    /// Value positions of every variable in constituent `index`.
    pub fn decode(&self, index: usize) -> Vec<usize> {
        self.sizes
            .iter()
            .zip(&self.strides)
            .map(|(&size, &stride)| (index / stride) % size)
            .collect()
    }

    #[inline]
    pub fn position(&self, index: usize, var: usize) -> usize {
        (index / self.strides[var]) % self.sizes[var]
    }

    /// Ascending indices of the constituents consistent with `literals`.
    pub fn index_set(&self, literals: &[(usize, usize)]) -> Vec<usize> {
        let base: usize = literals.iter().map(|&(v, p)| p * self.strides[v]).sum();
        let free: Vec<usize> = (0..self.sizes.len())
            .filter(|v| !literals.iter().any(|&(lv, _)| lv == *v))
            .collect();
        let count: usize = free.iter().map(|&v| self.sizes[v]).product();
        let mut out = Vec::with_capacity(count);
        let mut digits = vec![0usize; free.len()];
        for _ in 0..count {
            let offset: usize = free
                .iter()
                .zip(&digits)
                .map(|(&v, &d)| d * self.strides[v])
                .sum();
            out.push(base + offset);
            // Increment the mixed-radix counter, last free variable fastest.
            for slot in (0..free.len()).rev() {
                digits[slot] += 1;
                if digits[slot] < self.sizes[free[slot]] {
                    break;
                }
                digits[slot] = 0;
            }
        }
        out.sort_unstable();
        out
    }
}

/// `Pr(event)` at the joint distribution `x`.
pub fn evaluate_prior(network: &Network, x: &[f64], event: &Event) -> Result<f64, ModelError> {
    check_dimension(network, x)?;
    Ok(network.index_set(event).iter().map(|&i| x[i]).sum())
}

/// `Pr(target | given)` at `x`. Fails with [`ModelError::UndefinedConditional`]
/// when `Pr(given)` is zero.
pub fn evaluate_conditional(
    network: &Network,
    x: &[f64],
    target: &Event,
    given: &Event,
) -> Result<f64, ModelError> {
    check_dimension(network, x)?;
    let denominator = evaluate_prior(network, x, given)?;
    if denominator <= 0.0 {
        return Err(ModelError::UndefinedConditional);
    }
    let numerator = match target.and(given) {
        Some(joint) => evaluate_prior(network, x, &joint)?,
        None => 0.0,
    };
    Ok(numerator / denominator)
}

fn check_dimension(network: &Network, x: &[f64]) -> Result<(), ModelError> {
    if x.len() != network.k() {
        return Err(ModelError::DimensionMismatch {
            expected: network.k(),
            got: x.len(),
        });
    }
    Ok(())
}
