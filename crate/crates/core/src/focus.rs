//! Chordal decomposition of a network into cliques, so that elicitation can
//! proceed on one clique's variables at a time.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Network, Variable};
use crate::statements::{Statement, StatementBody};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    nodes: Vec<String>,
    adjacency: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(nodes: Vec<String>) -> Self {
        let n = nodes.len();
        Self {
            nodes,
            adjacency: vec![BTreeSet::new(); n],
        }
    }

    pub fn with_edges(nodes: &[&str], edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(nodes.iter().map(|s| s.to_string()).collect());
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds `a − b`; self-loops are ignored. Returns whether the edge is new.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        self.adjacency[b].insert(a);
        self.adjacency[a].insert(b)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adjacency[v]
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_complete(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &a)| vertices[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }
}

/// Drops edge directions and joins every pair of parents sharing a child.
pub fn moralize(network: &Network) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(network.variables().iter().map(|v| v.name.clone()).collect());
    for &(p, c) in network.edges() {
        g.add_edge(p, c);
    }
    for child in 0..network.len() {
        let parents = network.parents(child);
        for (i, &a) in parents.iter().enumerate() {
            for &b in &parents[i + 1..] {
                g.add_edge(a, b);
            }
        }
    }
    g
}

/// Maximum cardinality search: repeatedly visits the unvisited vertex with
/// the most visited neighbours, ties to the lowest index.
pub fn mcs_order(graph: &UndirectedGraph) -> Vec<usize> {
    let n = graph.len();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !visited[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("an unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        for &u in graph.neighbors(v) {
            if !visited[u] {
                weight[u] += 1;
            }
        }
    }
    order
}

/// Edges added by eliminating vertices in reverse `order` (the elimination
/// game). Empty exactly when the reversed order is a perfect elimination
/// ordering.
pub fn fill_in(graph: &UndirectedGraph, order: &[usize]) -> Vec<(usize, usize)> {
    elimination(graph, order).1
}

fn elimination(graph: &UndirectedGraph, order: &[usize]) -> (UndirectedGraph, Vec<(usize, usize)>) {
    let mut g = graph.clone();
    let mut eliminated = vec![false; graph.len()];
    let mut fill = Vec::new();
    for &v in order.iter().rev() {
        let remaining: Vec<usize> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| !eliminated[u])
            .collect();
        for (i, &a) in remaining.iter().enumerate() {
            for &b in &remaining[i + 1..] {
                if g.add_edge(a, b) {
                    fill.push((a.min(b), a.max(b)));
                }
            }
        }
        eliminated[v] = true;
    }
    (g, fill)
}

pub fn is_chordal(graph: &UndirectedGraph) -> bool {
    fill_in(graph, &mcs_order(graph)).is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangulation {
    pub graph: UndirectedGraph,
    /// Maximum cardinality search order; elimination runs in reverse.
    pub order: Vec<usize>,
    pub fill_in: Vec<(usize, usize)>,
}

/// Chordal supergraph from maximum cardinality search plus fill-in.
pub fn triangulate(graph: &UndirectedGraph) -> Triangulation {
    let order = mcs_order(graph);
    let (chordal, fill_in) = elimination(graph, &order);
    Triangulation {
        graph: chordal,
        order,
        fill_in,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FocusError {
    #[error("the graph is not chordal under the given order")]
    NotChordal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueSet {
    /// Maximal cliques as sorted variable indices, in running-intersection
    /// order.
    pub cliques: Vec<Vec<usize>>,
    pub order: Vec<usize>,
}

impl CliqueSet {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn names(&self, graph: &UndirectedGraph) -> Vec<Vec<String>> {
        self.cliques
            .iter()
            .map(|c| c.iter().map(|&v| graph.nodes()[v].clone()).collect())
            .collect()
    }

    /// Cliques containing every variable in `vars`.
    pub fn containing(&self, vars: &[usize]) -> Vec<usize> {
        (0..self.cliques.len())
            .filter(|&c| {
                vars.iter()
                    .all(|v| self.cliques[c].binary_search(v).is_ok())
            })
            .collect()
    }
}

/// Maximal cliques of a chordal graph: each vertex with its neighbours
/// visited earlier in `order`, keeping the maximal ones.
pub fn extract_cliques(graph: &UndirectedGraph, order: &[usize]) -> Result<CliqueSet, FocusError> {
    if !fill_in(graph, order).is_empty() {
        return Err(FocusError::NotChordal);
    }
    let mut position = vec![0; graph.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let candidates: Vec<Vec<usize>> = order
        .iter()
        .map(|&v| {
            let mut c: Vec<usize> = graph
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| position[u] < position[v])
                .chain([v])
                .collect();
            c.sort_unstable();
            c
        })
        .collect();
    let subset = |a: &[usize], b: &[usize]| a.iter().all(|x| b.binary_search(x).is_ok());
    let cliques = candidates
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            !candidates
                .iter()
                .enumerate()
                .any(|(j, d)| j != *i && d.len() > c.len() && subset(c, d))
        })
        .map(|(_, c)| c.clone())
        .collect();
    Ok(CliqueSet {
        cliques,
        order: order.to_vec(),
    })
}

/// Each clique's overlap with all earlier cliques lies inside one of them.
pub fn has_running_intersection(cliques: &[Vec<usize>]) -> bool {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for (i, c) in cliques.iter().enumerate() {
        let sep: Vec<usize> = c.iter().copied().filter(|v| seen.contains(v)).collect();
        if i > 0
            && !cliques[..i]
                .iter()
                .any(|d| sep.iter().all(|v| d.contains(v)))
        {
            return false;
        }
        seen.extend(c.iter().copied());
    }
    true
}

/// Every family (variable plus parents) lies inside some clique.
pub fn family_check(network: &Network, cliques: &CliqueSet) -> bool {
    (0..network.len()).all(|v| {
        let mut family = network.parents(v).to_vec();
        family.push(v);
        !cliques.containing(&family).is_empty()
    })
}

/// Moralize, triangulate and extract cliques in one step.
pub fn decompose(network: &Network) -> (Triangulation, CliqueSet) {
    let tri = triangulate(&moralize(network));
    let cliques = extract_cliques(&tri.graph, &tri.order)
        .expect("triangulation output is chordal by construction");
    (tri, cliques)
}

/// The network restricted to `clique`: its variables in declaration order
/// and the edges between them.
pub fn clique_network(network: &Network, clique: &[usize]) -> Network {
    let vars: Vec<Variable> = clique
        .iter()
        .map(|&v| network.variable(v).clone())
        .collect();
    let edges: Vec<(String, String)> = network
        .edges()
        .iter()
        .filter(|(p, c)| clique.contains(p) && clique.contains(c))
        .map(|&(p, c)| {
            (
                network.variable(p).name.clone(),
                network.variable(c).name.clone(),
            )
        })
        .collect();
    Network::build(vars, &edges).expect("a sub-network of a valid network is valid")
}

/// Variables a statement constrains. Qualitative statements quantify over
/// every assignment of the target's other parents, so they cover the
/// target's whole family.
pub fn statement_scope(network: &Network, statement: &Statement) -> Vec<usize> {
    let mut vars = statement.variables();
    match &statement.body {
        StatementBody::Influence { target, .. } | StatementBody::AdditiveSynergy { target, .. } => {
            vars.extend(network.parents(*target));
        }
        StatementBody::ProductSynergy { effect_var, .. } => {
            vars.extend(network.parents(*effect_var));
        }
        _ => {}
    }
    vars.sort_unstable();
    vars.dedup();
    vars
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCliqueFinding {
    pub statement: String,
    /// Cliques that share at least one of the statement's variables.
    pub cliques: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueAssignment {
    /// Statement ids whose scope fits inside each clique.
    pub per_clique: Vec<Vec<String>>,
    pub findings: Vec<CrossCliqueFinding>,
}

/// Attributes statements to the cliques that contain their scope. Statements
/// that fit no single clique are reported against every clique they touch.
pub fn assign_statements(
    network: &Network,
    cliques: &CliqueSet,
    statements: &[Statement],
) -> CliqueAssignment {
    let mut per_clique = vec![Vec::new(); cliques.len()];
    let mut findings = Vec::new();
    for s in statements {
        let scope = statement_scope(network, s);
        let home = cliques.containing(&scope);
        if home.is_empty() {
            let touched: Vec<usize> = (0..cliques.len())
                .filter(|&c| scope.iter().any(|v| cliques.cliques[c].contains(v)))
                .collect();
            for &c in &touched {
                per_clique[c].push(s.id.clone());
            }
            let names: Vec<&str> = scope
                .iter()
                .map(|&v| network.variable(v).name.as_str())
                .collect();
            findings.push(CrossCliqueFinding {
                statement: s.id.clone(),
                cliques: touched,
                message: format!(
                    "variables {{{}}} span more than one clique",
                    names.join(",")
                ),
            });
        } else {
            for c in home {
                per_clique[c].push(s.id.clone());
            }
        }
    }
    CliqueAssignment {
        per_clique,
        findings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::hiv;
    use crate::statements::parse_document;

    #[test]
    fn hiv_moralizes_to_k4() {
        let g = moralize(&hiv());
        assert_eq!(g.edge_count(), 6);
        assert!(g.is_complete(&[0, 1, 2, 3]));
        let tri = triangulate(&g);
        assert!(tri.fill_in.is_empty());
        let cliques = extract_cliques(&tri.graph, &tri.order).unwrap();
        assert_eq!(cliques.cliques, vec![vec![0, 1, 2, 3]]);
        assert!(family_check(&hiv(), &cliques));
    }

    #[test]
    fn chain_needs_no_marriage() {
        let net = Network::build(
            vec![
                Variable::new("A", &["a", "na"]),
                Variable::new("B", &["b", "nb"]),
                Variable::new("C", &["c", "nc"]),
            ],
            &[("A", "B"), ("B", "C")],
        )
        .unwrap();
        let g = moralize(&net);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        let (_, cliques) = decompose(&net);
        assert_eq!(cliques.cliques, vec![vec![0, 1], vec![1, 2]]);
        assert!(family_check(&net, &cliques));
        assert!(has_running_intersection(&cliques.cliques));
    }

    #[test]
    fn four_cycle_gets_one_chord() {
        let g =
            UndirectedGraph::with_edges(&["A", "B", "C", "D"], &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(!is_chordal(&g));
        let tri = triangulate(&g);
        assert_eq!(tri.fill_in.len(), 1);
        assert!([(0, 2), (1, 3)].contains(&tri.fill_in[0]));
        assert!(is_chordal(&tri.graph));
        assert!(extract_cliques(&g, &mcs_order(&g)).is_err());
        assert_eq!(extract_cliques(&tri.graph, &tri.order).unwrap().len(), 2);
    }

    #[test]
    fn edgeless_graph_has_singleton_cliques() {
        let g = UndirectedGraph::with_edges(&["A", "B", "C"], &[]);
        let tri = triangulate(&g);
        let c = extract_cliques(&tri.graph, &tri.order).unwrap();
        assert_eq!(c.cliques, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn mutated_cliques_fail_the_family_check() {
        let (_, mut cliques) = decompose(&hiv());
        cliques.cliques[0].retain(|&v| v != 2);
        assert!(!family_check(&hiv(), &cliques));
    }

    #[test]
    fn statements_spanning_cliques_are_reported() {
        let d = parse_document(
            "var A : a > na\nvar B : b > nb\nvar C : c > nc\nedge A -> B\nedge B -> C\n\
             P(a) = 0.3\nP(c | b) = 0.5\nP(c | a) = 0.4\nS+(A,B)\n",
        )
        .unwrap();
        let (_, cliques) = decompose(&d.network);
        let a = assign_statements(&d.network, &cliques, &d.statements);
        assert_eq!(a.per_clique[0], vec!["s1", "s3", "s4"]);
        assert_eq!(a.per_clique[1], vec!["s2", "s3"]);
        assert_eq!(a.findings.len(), 1);
        assert_eq!(a.findings[0].statement, "s3");
        assert_eq!(a.findings[0].cliques, vec![0, 1]);
    }

    #[test]
    fn clique_sub_network() {
        let (_, cliques) = decompose(&hiv());
        let sub = clique_network(&hiv(), &cliques.cliques[0]);
        assert_eq!(sub.k(), 16);
        assert_eq!(sub.edges().len(), 4);
    }
}
