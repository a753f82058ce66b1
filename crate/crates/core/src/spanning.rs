//! Covers, cover-sequence control maps and reach-spanning sets.
//!
//! A sequence is a list of [`Node`]s whose last entry should be
//! [`Node::Target`]; the one-element sequence `[Target]` stands for `T`
//! itself.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::system::{FiniteReachSpec, TransitionSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Node {
    Elem(usize),
    Target,
}

impl Node {
    pub fn elem(self) -> Option<usize> {
        match self {
            Node::Elem(e) => Some(e),
            Node::Target => None,
        }
    }
}

/// Indexed family of state sets. Elements are normally distinct; families
/// reconstructed from closed-loop traces may repeat a set under a
/// different symbol.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Cover {
    pub elements: Vec<BTreeSet<usize>>,
}

impl Cover {
    pub fn new(elements: Vec<BTreeSet<usize>>) -> Self {
        Cover { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn union(&self) -> BTreeSet<usize> {
        self.elements.iter().flatten().copied().collect()
    }
}

/// The map `G` from cover-element sequences to inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ControlMap {
    Constant(usize),
    /// Input per cover element; depends only on the last element.
    Memoryless(Vec<usize>),
    #[serde(serialize_with = "prefix_entries")]
    Prefix(BTreeMap<Vec<usize>, usize>),
}

fn prefix_entries<S: serde::Serializer>(map: &BTreeMap<Vec<usize>, usize>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(map.iter())
}

impl ControlMap {
    pub fn input_for(&self, prefix: &[usize]) -> Option<usize> {
        match self {
            ControlMap::Constant(u) => Some(*u),
            ControlMap::Memoryless(per) => prefix.last().and_then(|&e| per.get(e).copied()),
            ControlMap::Prefix(map) => map.get(prefix).copied(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SpanningSet {
    pub sequences: BTreeSet<Vec<Node>>,
}

impl SpanningSet {
    /// `{T}`
    pub fn trivial() -> Self {
        SpanningSet { sequences: BTreeSet::from([vec![Node::Target]]) }
    }

    /// `{αT | α ∈ paths} ∪ {T}`
    pub fn from_element_paths(paths: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let mut sequences: BTreeSet<Vec<Node>> =
            paths.into_iter().map(|p| p.into_iter().map(Node::Elem).chain([Node::Target]).collect()).collect();
        sequences.insert(vec![Node::Target]);
        SpanningSet { sequences }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.sequences.len() == 1 && self.sequences.contains(&vec![Node::Target])
    }

    /// `R₀`: first elements other than `T`.
    pub fn first_elements(&self) -> BTreeSet<usize> {
        self.sequences.iter().filter_map(|s| s.first().and_then(|n| n.elem())).collect()
    }

    /// `P_R` for every proper prefix occurring in the set.
    pub fn successor_map(&self) -> HashMap<Vec<Node>, BTreeSet<Node>> {
        let mut map: HashMap<Vec<Node>, BTreeSet<Node>> = HashMap::new();
        for s in &self.sequences {
            for t in 0..s.len().saturating_sub(1) {
                map.entry(s[..=t].to_vec()).or_default().insert(s[t + 1]);
            }
        }
        map
    }

    pub fn max_len(&self) -> usize {
        self.sequences.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Value of `N(R)` together with a maximizing sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NValue {
    pub value: f64,
    pub witness: Vec<Node>,
}

/// `B(α)` for every member and their maximum `N(R)`. With
/// `count_target` the successor counts use `P_R` instead of `P̂_R`.
pub fn n_value(r: &SpanningSet, count_target: bool) -> NValue {
    let succ = r.successor_map();
    let r0 = r.first_elements().len();
    let log_r0 = if r0 == 0 { 0.0 } else { (r0 as f64).log2() };
    let mut best = NValue { value: 0.0, witness: vec![Node::Target] };
    let mut first = true;
    for s in &r.sequences {
        let b = b_value_with(s, &succ, log_r0, count_target);
        if first || b > best.value {
            best = NValue { value: b, witness: s.clone() };
            first = false;
        }
    }
    best
}

fn b_value_with(s: &[Node], succ: &HashMap<Vec<Node>, BTreeSet<Node>>, log_r0: f64, count_target: bool) -> f64 {
    let tau = s.len();
    if tau <= 1 {
        return 0.0;
    }
    let mut sum = log_r0;
    for t in 0..tau.saturating_sub(2) {
        let children = &succ[&s[..=t]];
        let n = children.iter().filter(|c| count_target || **c != Node::Target).count();
        sum += (n as f64).log2();
    }
    sum / (tau - 1) as f64
}

/// `B(α)` of one member of `r`.
pub fn b_value(r: &SpanningSet, alpha: &[Node], count_target: bool) -> f64 {
    let succ = r.successor_map();
    let r0 = r.first_elements().len();
    let log_r0 = if r0 == 0 { 0.0 } else { (r0 as f64).log2() };
    b_value_with(alpha, &succ, log_r0, count_target)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// A cover element is empty or not inside `Q \ T`.
    BadCoverElement(usize),
    /// The cover misses these states of `Q \ T`.
    CoverIncomplete(Vec<usize>),
    UnknownElement(usize),
    /// Condition 1: states of `Q` not covered by first elements.
    Uncovered(Vec<usize>),
    /// Condition 2: `T` missing at the end or present in the interior.
    TargetPlacement(Vec<Node>),
    /// Condition 3: successors escaping the elements offered by `P_R`.
    Escapes {
        prefix: Vec<Node>,
        states: Vec<usize>,
    },
    MissingControl(Vec<usize>),
    /// `R = {T}` but the constant input does not drive `Q \ T` into `T`.
    TrivialFails(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanningReport {
    pub violations: Vec<Violation>,
}

impl SpanningReport {
    pub fn is_spanning(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates_condition(&self, k: u8) -> bool {
        self.violations.iter().any(|v| {
            matches!(
                (k, v),
                (1, Violation::Uncovered(_)) | (2, Violation::TargetPlacement(_)) | (3, Violation::Escapes { .. })
            )
        })
    }
}

/// States of `free` from which every run under the fixed `input` enters
/// `target` without leaving `free ∪ target` or blocking.
pub fn single_input_attractor<S: TransitionSystem + ?Sized>(
    sys: &S,
    free: &BTreeSet<usize>,
    target: &BTreeSet<usize>,
    input: usize,
) -> BTreeSet<usize> {
    let mut won: BTreeSet<usize> = BTreeSet::new();
    let mut buf = Vec::new();
    loop {
        let fresh: Vec<usize> = free
            .iter()
            .copied()
            .filter(|x| !won.contains(x))
            .filter(|&x| {
                sys.successors(x, input, &mut buf);
                !buf.is_empty() && buf.iter().all(|y| target.contains(y) || won.contains(y))
            })
            .collect();
        if fresh.is_empty() {
            return won;
        }
        won.extend(fresh);
    }
}

/// Checks the three reach-spanning conditions for `r` in `(cover, g)`.
pub fn verify_spanning_set<S: TransitionSystem + ?Sized>(
    sys: &S,
    spec: &FiniteReachSpec,
    cover: &Cover,
    g: &ControlMap,
    r: &SpanningSet,
) -> SpanningReport {
    let free = spec.free();
    let mut violations = Vec::new();

    for (i, e) in cover.elements.iter().enumerate() {
        if e.is_empty() || !e.is_subset(&free) {
            violations.push(Violation::BadCoverElement(i));
        }
    }
    let missing: Vec<usize> = free.difference(&cover.union()).copied().collect();
    if !missing.is_empty() && !r.is_trivial() {
        violations.push(Violation::CoverIncomplete(missing));
    }

    if r.is_trivial() {
        if !free.is_empty() {
            match g.input_for(&[0]) {
                None => violations.push(Violation::MissingControl(vec![0])),
                Some(u) => {
                    let won = single_input_attractor(sys, &free, &spec.target, u);
                    let fails: Vec<usize> = free.difference(&won).copied().collect();
                    if !fails.is_empty() {
                        violations.push(Violation::TrivialFails(fails));
                    }
                }
            }
        }
        return SpanningReport { violations };
    }

    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for s in &r.sequences {
        match s.first() {
            Some(Node::Target) => covered.extend(spec.target.iter().copied()),
            Some(Node::Elem(e)) => {
                if let Some(set) = cover.elements.get(*e) {
                    covered.extend(set.iter().copied());
                }
            }
            None => {}
        }
    }
    let uncovered: Vec<usize> = spec.safe.difference(&covered).copied().collect();
    if !uncovered.is_empty() {
        violations.push(Violation::Uncovered(uncovered));
    }

    for s in &r.sequences {
        let well_placed = s.last() == Some(&Node::Target) && s[..s.len() - 1].iter().all(|n| *n != Node::Target);
        if !well_placed {
            violations.push(Violation::TargetPlacement(s.clone()));
        }
        for n in s {
            if let Node::Elem(e) = n {
                if *e >= cover.len() {
                    violations.push(Violation::UnknownElement(*e));
                }
            }
        }
    }
    if !violations.is_empty() {
        return SpanningReport { violations };
    }

    let succ = r.successor_map();
    let mut checked: BTreeSet<Vec<Node>> = BTreeSet::new();
    let mut buf = Vec::new();
    for s in &r.sequences {
        for t in 0..s.len() - 1 {
            let prefix = s[..=t].to_vec();
            if !checked.insert(prefix.clone()) {
                continue;
            }
            let elems: Vec<usize> = prefix.iter().filter_map(|n| n.elem()).collect();
            let Some(u) = g.input_for(&elems) else {
                violations.push(Violation::MissingControl(elems));
                continue;
            };
            let mut allowed: BTreeSet<usize> = BTreeSet::new();
            for child in &succ[&prefix] {
                match child {
                    Node::Target => allowed.extend(spec.target.iter().copied()),
                    Node::Elem(e) => allowed.extend(cover.elements[*e].iter().copied()),
                }
            }
            let mut escaped = BTreeSet::new();
            for &x in &cover.elements[elems[t]] {
                sys.successors(x, u, &mut buf);
                escaped.extend(buf.iter().copied().filter(|y| !allowed.contains(y)));
            }
            if !escaped.is_empty() {
                violations.push(Violation::Escapes { prefix, states: escaped.into_iter().collect() });
            }
        }
    }
    SpanningReport { violations }
}
