//! Weighted closed-loop graph over partition elements plus a target node,
//! and the exact maximization of the per-path bit-rate average.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coarsening::DMap;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("node {0} has no successors; the controller is malformed")]
    NoSuccessors(usize),
    #[error("graph has a cycle through nodes {0:?}")]
    Cycle(Vec<usize>),
    #[error("graph has no non-target nodes")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// `log₂ #D(n)`
    IncludeTarget,
    /// `log₂ #(D(n) \ {T})`, zero when `D(n) = {T}`
    ExcludeTarget,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::IncludeTarget => "include-target",
            WeightMode::ExcludeTarget => "exclude-target",
        }
    }
}

/// Nodes `0..n` are partition elements; node `n` is the target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedLoopGraph {
    pub successors: Vec<BTreeSet<usize>>,
    pub to_target: Vec<bool>,
    pub weight_include: Vec<f64>,
    pub weight_exclude: Vec<f64>,
    pub labels: Vec<String>,
}

impl ClosedLoopGraph {
    pub fn node_count(&self) -> usize {
        self.successors.len()
    }

    pub fn target(&self) -> usize {
        self.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(BTreeSet::len).sum::<usize>() + self.to_target.iter().filter(|&&t| t).count()
    }

    pub fn weights(&self, mode: WeightMode) -> &[f64] {
        match mode {
            WeightMode::IncludeTarget => &self.weight_include,
            WeightMode::ExcludeTarget => &self.weight_exclude,
        }
    }

    /// Successor list of `n` with the target encoded as [`Self::target`].
    pub fn out_edges(&self, n: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.successors[n].iter().copied().collect();
        if self.to_target[n] {
            out.push(self.target());
        }
        out
    }
}

/// Builds the graph from `D`; every non-target node must have an edge.
pub fn build_graph(d: &DMap, labels: Option<Vec<String>>) -> Result<ClosedLoopGraph, GraphError> {
    let n = d.len();
    let mut weight_include = Vec::with_capacity(n);
    let mut weight_exclude = Vec::with_capacity(n);
    for g in 0..n {
        let inner = d.successors[g].len();
        let total = inner + usize::from(d.to_target[g]);
        if total == 0 {
            return Err(GraphError::NoSuccessors(g));
        }
        weight_include.push((total as f64).log2());
        weight_exclude.push(if inner == 0 { 0.0 } else { (inner as f64).log2() });
    }
    Ok(ClosedLoopGraph {
        successors: d.successors.clone(),
        to_target: d.to_target.clone(),
        weight_include,
        weight_exclude,
        labels: labels.unwrap_or_else(|| (0..n).map(|g| format!("A{g}")).collect()),
    })
}

/// Topological order of the non-target nodes (edges point forward), or a
/// node cycle.
pub fn check_acyclic(graph: &ClosedLoopGraph) -> Result<Vec<usize>, GraphError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let n = graph.node_count();
    let mut mark = vec![Mark::New; n];
    let mut post_order = Vec::with_capacity(n);
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(root, graph.successors[root].iter().copied().collect())];
        mark[root] = Mark::Open;
        while let Some((node, pending)) = stack.last_mut() {
            let node = *node;
            match pending.pop() {
                Some(next) => match mark[next] {
                    Mark::New => {
                        mark[next] = Mark::Open;
                        stack.push((next, graph.successors[next].iter().copied().collect()));
                    }
                    Mark::Open => {
                        let start = stack.iter().position(|(m, _)| *m == next).unwrap_or(0);
                        return Err(GraphError::Cycle(stack[start..].iter().map(|(m, _)| *m).collect()));
                    }
                    Mark::Done => {}
                },
                None => {
                    mark[node] = Mark::Done;
                    post_order.push(node);
                    stack.pop();
                }
            }
        }
    }
    post_order.reverse();
    Ok(post_order)
}

/// One path to the target with its averaged value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathValue {
    /// Non-target nodes; the target follows implicitly.
    pub path: Vec<usize>,
    pub edge_count: usize,
    pub weight_sum: f64,
    pub value: f64,
}

impl PathValue {
    /// Evaluates `(Σ weights of all but the last node + log₂ N₀) / edges`.
    pub fn evaluate(graph: &ClosedLoopGraph, mode: WeightMode, path: Vec<usize>) -> PathValue {
        let w = graph.weights(mode);
        let edge_count = path.len();
        let weight_sum: f64 = path[..edge_count.saturating_sub(1)].iter().map(|&n| w[n]).sum();
        let log_n0 = (graph.node_count() as f64).log2();
        PathValue { path, edge_count, weight_sum, value: (weight_sum + log_n0) / edge_count as f64 }
    }
}

/// `N(R)` with its maximizing path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyBound {
    pub mode: WeightMode,
    pub value: f64,
    pub witness: PathValue,
    pub longest_path: usize,
}

/// Exact maximum over all paths to the target via a table indexed by
/// node and edge count.
pub fn max_path_value(graph: &ClosedLoopGraph, mode: WeightMode) -> Result<EntropyBound, GraphError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let order = check_acyclic(graph)?;
    let w = graph.weights(mode);

    // longest edge count from each node to T
    let mut longest = vec![0usize; n];
    for &v in order.iter().rev() {
        let via_inner = graph.successors[v].iter().map(|&m| longest[m] + 1).max();
        let direct = graph.to_target[v].then_some(1);
        longest[v] = via_inner.into_iter().chain(direct).max().ok_or(GraphError::NoSuccessors(v))?;
    }
    let max_len = longest.iter().copied().max().unwrap_or(1);

    // best[v][l]: max weight sum over paths from v with l edges to T
    let neg = f64::NEG_INFINITY;
    let mut best = vec![vec![neg; max_len + 1]; n];
    let mut choice = vec![vec![usize::MAX; max_len + 1]; n];
    for &v in order.iter().rev() {
        if graph.to_target[v] {
            best[v][1] = 0.0;
        }
        for l in 2..=longest[v] {
            for &m in &graph.successors[v] {
                let cand = w[v] + best[m][l - 1];
                if cand > best[v][l] {
                    best[v][l] = cand;
                    choice[v][l] = m;
                }
            }
        }
    }

    let log_n0 = (n as f64).log2();
    let mut top: Option<(f64, usize, usize)> = None;
    for v in 0..n {
        for l in 1..=longest[v] {
            if best[v][l] == neg {
                continue;
            }
            let value = (best[v][l] + log_n0) / l as f64;
            if top.is_none_or(|(b, _, _)| value > b + 1e-12) {
                top = Some((value, v, l));
            }
        }
    }
    let (value, start, len) = top.ok_or(GraphError::NoSuccessors(0))?;
    let mut path = vec![start];
    let (mut v, mut l) = (start, len);
    while l > 1 {
        v = choice[v][l];
        l -= 1;
        path.push(v);
    }
    let witness = PathValue::evaluate(graph, mode, path);
    debug_assert!((witness.value - value).abs() < 1e-9);
    Ok(EntropyBound { mode, value, witness, longest_path: max_len })
}

/// All root-to-target paths (each non-target node a root).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathEnumeration {
    pub paths: Vec<Vec<usize>>,
    pub overflow: bool,
}

pub fn enumerate_spanning_set(graph: &ClosedLoopGraph, limit: usize) -> Result<PathEnumeration, GraphError> {
    check_acyclic(graph)?;
    let mut paths = Vec::new();
    let mut overflow = false;
    'roots: for root in 0..graph.node_count() {
        let mut stack = vec![vec![root]];
        while let Some(path) = stack.pop() {
            let last = *path.last().expect("non-empty");
            if graph.to_target[last] {
                if paths.len() == limit {
                    overflow = true;
                    break 'roots;
                }
                paths.push(path.clone());
            }
            for &m in graph.successors[last].iter().rev() {
                let mut next = path.clone();
                next.push(m);
                stack.push(next);
            }
        }
    }
    Ok(PathEnumeration { paths, overflow })
}

/// Renders the graph; edge labels carry the source node's weight.
pub fn export_dot(graph: &ClosedLoopGraph, mode: WeightMode) -> String {
    let w = graph.weights(mode);
    let mut out = String::from("digraph closed_loop {\n  rankdir=LR;\n");
    let _ = writeln!(out, "  T [label=\"T\", shape=doublecircle, style=filled, fillcolor=lightgrey];");
    for v in 0..graph.node_count() {
        let _ = writeln!(out, "  n{v} [label=\"{} ({:.4})\"];", graph.labels[v], w[v]);
    }
    for v in 0..graph.node_count() {
        for &m in &graph.successors[v] {
            let _ = writeln!(out, "  n{v} -> n{m} [label=\"{:.4}\"];", w[v]);
        }
        if graph.to_target[v] {
            let _ = writeln!(out, "  n{v} -> T [label=\"{:.4}\"];", w[v]);
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(succ: &[&[usize]], to_t: &[bool]) -> ClosedLoopGraph {
        let d =
            DMap { successors: succ.iter().map(|s| s.iter().copied().collect()).collect(), to_target: to_t.to_vec() };
        build_graph(&d, None).unwrap()
    }

    #[test]
    fn example1_graph() {
        let g = graph(&[&[], &[]], &[true, true]);
        assert_eq!(g.weight_include, vec![0.0, 0.0]);
        assert_eq!(check_acyclic(&g).unwrap().len(), 2);
        for mode in [WeightMode::IncludeTarget, WeightMode::ExcludeTarget] {
            assert_eq!(max_path_value(&g, mode).unwrap().value, 1.0);
        }
        let e = enumerate_spanning_set(&g, 100).unwrap();
        assert_eq!(e.paths, vec![vec![0], vec![1]]);
    }

    #[test]
    fn example2_chain() {
        // A₁ -> A₂ -> T
        let g = graph(&[&[1], &[]], &[false, true]);
        assert_eq!(g.weight_include, vec![0.0, 0.0]);
        assert_eq!(g.weight_exclude, vec![0.0, 0.0]);
        assert_eq!(check_acyclic(&g).unwrap(), vec![0, 1]);
        let b = max_path_value(&g, WeightMode::IncludeTarget).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.witness.path, vec![1]);
        assert_eq!(PathValue::evaluate(&g, WeightMode::IncludeTarget, vec![0, 1]).value, 0.5);
        let mut e = enumerate_spanning_set(&g, 100).unwrap().paths;
        e.sort();
        assert_eq!(e, vec![vec![0, 1], vec![1]]);
    }

    #[test]
    fn mixed_successor_weights() {
        let g = graph(&[&[1], &[]], &[true, true]);
        assert_eq!(g.weight_include[0], 1.0);
        assert_eq!(g.weight_exclude[0], 0.0);
    }

    #[test]
    fn single_node() {
        let g = graph(&[&[]], &[true]);
        assert_eq!(max_path_value(&g, WeightMode::IncludeTarget).unwrap().value, 0.0);
    }

    #[test]
    fn cycle_detected() {
        let g = graph(&[&[1], &[0]], &[true, true]);
        let err = check_acyclic(&g).unwrap_err();
        assert!(matches!(err, GraphError::Cycle(ref c) if {
            let mut c = c.clone(); c.sort(); c == vec![0, 1]
        }));
        assert!(max_path_value(&g, WeightMode::IncludeTarget).is_err());
    }

    #[test]
    fn no_successor_rejected() {
        let d = DMap { successors: vec![BTreeSet::new()], to_target: vec![false] };
        assert_eq!(build_graph(&d, None), Err(GraphError::NoSuccessors(0)));
    }

    #[test]
    fn parallel_paths() {
        // g -> {g1, g2}, g1 -> T, g2 -> T
        let g = graph(&[&[1, 2], &[], &[]], &[false, true, true]);
        let e = enumerate_spanning_set(&g, 100).unwrap();
        let mut lens: Vec<usize> = e.paths.iter().map(|p| p.len() + 1).collect();
        lens.sort();
        assert_eq!(lens, vec![2, 2, 3, 3]);
        assert!(!e.overflow);
        let capped = enumerate_spanning_set(&g, 3).unwrap();
        assert!(capped.overflow && capped.paths.len() == 3);
    }

    #[test]
    fn dot_output() {
        let g = graph(&[&[], &[]], &[true, true]);
        let dot = export_dot(&g, WeightMode::IncludeTarget);
        assert_eq!(dot.matches("->").count(), 2);
        assert!(dot.contains("label=\"0.0000\""));
        let empty = build_graph(&DMap { successors: vec![], to_target: vec![] }, None).unwrap();
        let dot = export_dot(&empty, WeightMode::IncludeTarget);
        assert!(dot.contains("T [") && !dot.contains("->"));
    }
}
