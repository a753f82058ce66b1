//! Coder-controllers built from reach-spanning sets, closed-loop symbol
//! enumeration, the transmission data rate, and trajectory simulation.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::GridAbstraction;
use crate::coarsening::{CoarsePartition, DMap};
use crate::spanning::{ControlMap, Cover, Node, SpanningSet};
use crate::system::{FiniteReachSpec, TransitionSystem};

#[derive(Debug, Error, PartialEq)]
pub enum CoderError {
    #[error(
        "state {state} after symbols {prefix:?} lies in no admissible cover element; the set is not reach-spanning"
    )]
    NoSymbol { state: usize, prefix: Vec<usize> },
    #[error("no control input for symbols {0:?}")]
    MissingControl(Vec<usize>),
    #[error("state {state} has no successor under input {input}")]
    Blocking { state: usize, input: usize },
    #[error("closed loop left the safe set at state {0}")]
    LeftSafe(usize),
    #[error("closed loop did not reach the target within {0} steps")]
    StepBudget(usize),
    #[error("more than {0} closed-loop prefixes; enumeration abandoned")]
    NodeBudget(usize),
    #[error("spanning-set sequence {0:?} is malformed")]
    Malformed(Vec<Node>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum TieBreak {
    #[default]
    Lowest,
    /// Pseudo-random choice fixed by `(seed, prefix, state)`.
    Seeded(u64),
}

/// Which symbols may follow a symbol prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SymbolStructure {
    Explicit(BTreeMap<Vec<usize>, BTreeSet<usize>>),
    /// Children depend on the last symbol only.
    Graph {
        roots: BTreeSet<usize>,
        successors: Vec<BTreeSet<usize>>,
    },
}

/// `H = (S̄, γ, δ)`. Symbols are cover element ids; `s∅` is implicit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoderController {
    pub cover: Cover,
    pub structure: SymbolStructure,
    pub control: ControlMap,
    pub fixed_input: usize,
    pub tie_break: TieBreak,
    /// Never transmits; applies `fixed_input` throughout.
    pub trivial: bool,
}

impl CoderController {
    /// Symbols allowed after `prefix`.
    pub fn next_symbols(&self, prefix: &[usize]) -> BTreeSet<usize> {
        match &self.structure {
            SymbolStructure::Explicit(map) => map.get(prefix).cloned().unwrap_or_default(),
            SymbolStructure::Graph { roots, successors } => match prefix.last() {
                None => roots.clone(),
                Some(&e) => successors.get(e).cloned().unwrap_or_default(),
            },
        }
    }

    /// `γ`: `None` stands for `s∅`.
    pub fn encode(&self, prefix: &[usize], state: usize, in_target: bool) -> Result<Option<usize>, CoderError> {
        if in_target || self.trivial {
            return Ok(None);
        }
        let candidates: Vec<usize> = self
            .next_symbols(prefix)
            .into_iter()
            .filter(|&e| self.cover.elements.get(e).is_some_and(|s| s.contains(&state)))
            .collect();
        if candidates.is_empty() {
            return Err(CoderError::NoSymbol { state, prefix: prefix.to_vec() });
        }
        Ok(Some(match self.tie_break {
            TieBreak::Lowest => candidates[0],
            TieBreak::Seeded(seed) => {
                let mut h = DefaultHasher::new();
                (seed, prefix, state).hash(&mut h);
                candidates[(h.finish() % candidates.len() as u64) as usize]
            }
        }))
    }

    /// `δ` applied to the symbols received so far.
    pub fn decode(&self, symbols: &[usize]) -> Result<usize, CoderError> {
        if self.trivial || symbols.is_empty() {
            return Ok(self.fixed_input);
        }
        self.control.input_for(symbols).ok_or_else(|| CoderError::MissingControl(symbols.to_vec()))
    }

    pub fn symbol_count(&self) -> usize {
        self.cover.len()
    }
}

/// The construction from a verified spanning set. For `R = {T}` the
/// constant input of `g` is applied throughout; otherwise the first input.
pub fn build_coder_controller(
    r: &SpanningSet,
    cover: &Cover,
    g: &ControlMap,
    tie_break: TieBreak,
) -> Result<CoderController, CoderError> {
    if r.is_trivial() {
        return Ok(CoderController {
            cover: cover.clone(),
            structure: SymbolStructure::Explicit(BTreeMap::new()),
            control: g.clone(),
            fixed_input: g.input_for(&[]).or_else(|| g.input_for(&[0])).unwrap_or(0),
            tie_break,
            trivial: true,
        });
    }
    let mut next: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
    for s in &r.sequences {
        if s == &[Node::Target] {
            continue;
        }
        let ids: Vec<usize> = s[..s.len() - 1]
            .iter()
            .map(|n| n.elem().ok_or_else(|| CoderError::Malformed(s.clone())))
            .collect::<Result<_, _>>()?;
        if s.last() != Some(&Node::Target) {
            return Err(CoderError::Malformed(s.clone()));
        }
        for t in 0..ids.len() {
            next.entry(ids[..t].to_vec()).or_default().insert(ids[t]);
        }
    }
    Ok(CoderController {
        cover: cover.clone(),
        structure: SymbolStructure::Explicit(next),
        control: g.clone(),
        fixed_input: 0,
        tie_break,
        trivial: false,
    })
}

/// Coder-controller on a coarse partition: every group may start a
/// sequence and `D` supplies the successors.
pub fn coder_from_partition(partition: &CoarsePartition, d: &DMap, tie_break: TieBreak) -> CoderController {
    CoderController {
        cover: Cover::new(partition.groups.iter().map(|g| g.iter().copied().collect()).collect()),
        structure: SymbolStructure::Graph { roots: (0..partition.len()).collect(), successors: d.successors.clone() },
        control: ControlMap::Memoryless(partition.group_input.clone()),
        fixed_input: 0,
        tie_break,
        trivial: false,
    }
}

/// Closed-loop symbol sequences from every state of `Q \ T`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SymbolLog {
    /// `Ẑ` as the sequences `ω` before the final `s∅`.
    pub z_hat: BTreeSet<Vec<usize>>,
    /// `Z(ζ|[0;t))`: the symbols of `S` that follow each prefix.
    pub prefix_successors: BTreeMap<Vec<usize>, BTreeSet<usize>>,
    /// States at which each prefix was emitted (its last symbol coding them).
    pub prefix_states: BTreeMap<Vec<usize>, BTreeSet<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumBudget {
    pub max_steps: usize,
    pub max_prefixes: usize,
}

impl EnumBudget {
    pub fn for_states(n: usize) -> Self {
        EnumBudget { max_steps: n + 1, max_prefixes: 1_000_000 }
    }
}

/// Breadth-first exploration over `(state, symbols)` covering every
/// nondeterministic branch.
pub fn enumerate_symbol_sequences<S: TransitionSystem + ?Sized>(
    sys: &S,
    h: &CoderController,
    spec: &FiniteReachSpec,
    budget: EnumBudget,
) -> Result<SymbolLog, CoderError> {
    let mut log = SymbolLog::default();
    let free = spec.free();
    if h.trivial || free.is_empty() {
        check_fixed_input(sys, h.fixed_input, spec, budget.max_steps)?;
        log.z_hat.insert(Vec::new());
        log.prefix_successors.insert(Vec::new(), BTreeSet::new());
        return Ok(log);
    }
    let mut seen: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, Vec<usize>)> = free.iter().map(|&x| (x, Vec::new())).collect();
    let mut buf = Vec::new();
    while let Some((x, prefix)) = queue.pop_front() {
        if prefix.len() >= budget.max_steps {
            return Err(CoderError::StepBudget(budget.max_steps));
        }
        if !seen.insert((x, prefix.clone())) {
            continue;
        }
        if seen.len() > budget.max_prefixes {
            return Err(CoderError::NodeBudget(budget.max_prefixes));
        }
        let s = h.encode(&prefix, x, false)?.expect("non-target state");
        log.prefix_successors.entry(prefix.clone()).or_default().insert(s);
        let mut next = prefix;
        next.push(s);
        log.prefix_states.entry(next.clone()).or_default().insert(x);
        let u = h.decode(&next)?;
        sys.successors(x, u, &mut buf);
        if buf.is_empty() {
            return Err(CoderError::Blocking { state: x, input: u });
        }
        for &y in &buf {
            if spec.target.contains(&y) {
                log.z_hat.insert(next.clone());
            } else if spec.safe.contains(&y) {
                queue.push_back((y, next.clone()));
            } else {
                return Err(CoderError::LeftSafe(y));
            }
        }
    }
    Ok(log)
}

fn check_fixed_input<S: TransitionSystem + ?Sized>(
    sys: &S,
    u: usize,
    spec: &FiniteReachSpec,
    max_steps: usize,
) -> Result<(), CoderError> {
    let mut frontier: BTreeSet<usize> = spec.free();
    let mut buf = Vec::new();
    for _ in 0..max_steps {
        if frontier.is_empty() {
            return Ok(());
        }
        let mut next = BTreeSet::new();
        for &x in &frontier {
            sys.successors(x, u, &mut buf);
            if buf.is_empty() {
                return Err(CoderError::Blocking { state: x, input: u });
            }
            for &y in &buf {
                if !spec.safe.contains(&y) {
                    return Err(CoderError::LeftSafe(y));
                }
                if !spec.target.contains(&y) {
                    next.insert(y);
                }
            }
        }
        frontier = next;
    }
    if frontier.is_empty() {
        Ok(())
    } else {
        Err(CoderError::StepBudget(max_steps))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    #[serde(rename = "R_H")]
    pub r_h: f64,
    pub num_sequences: usize,
    /// Longest `ζ ∈ Ẑ`, counting the final `s∅`.
    pub max_sequence_length: usize,
    pub witness: Vec<usize>,
}

/// `R(H) = max_ζ (1/(τ−1)) Σ_{t=0}^{τ−2} log₂ #Z(ζ|[0;t))`; zero for `Ẑ = {s∅}`.
pub fn transmission_rate(log: &SymbolLog) -> RateReport {
    let mut best = (0.0, Vec::new());
    for omega in &log.z_hat {
        if omega.is_empty() {
            continue;
        }
        let sum: f64 = (0..omega.len())
            .map(|t| {
                let n = log.prefix_successors.get(&omega[..t]).map_or(1, BTreeSet::len);
                (n.max(1) as f64).log2()
            })
            .sum();
        let v = sum / omega.len() as f64;
        if best.1.is_empty() || v > best.0 {
            best = (v, omega.clone());
        }
    }
    RateReport {
        r_h: best.0,
        num_sequences: log.z_hat.len(),
        max_sequence_length: log.z_hat.iter().map(|w| w.len() + 1).max().unwrap_or(0),
        witness: best.1,
    }
}

/// Spanning set recovered from closed-loop traces: one element per
/// `(symbol, A(ζ|[0;j]))`, sequences `{αT} ∪ {T}`, and `G` read off `δ`.
pub fn spanning_set_from_traces(log: &SymbolLog, h: &CoderController) -> (Cover, ControlMap, SpanningSet) {
    if h.trivial || log.z_hat.iter().all(Vec::is_empty) {
        return (Cover::default(), ControlMap::Constant(h.fixed_input), SpanningSet::trivial());
    }
    let mut ids: BTreeMap<(usize, BTreeSet<usize>), usize> = BTreeMap::new();
    let mut elements = Vec::new();
    let mut element_of = BTreeMap::new();
    for (prefix, states) in &log.prefix_states {
        let key = (*prefix.last().expect("non-empty prefix"), states.clone());
        let id = *ids.entry(key).or_insert_with(|| {
            elements.push(states.clone());
            elements.len() - 1
        });
        element_of.insert(prefix.clone(), id);
    }
    let translate =
        |symbols: &[usize]| -> Vec<usize> { (1..=symbols.len()).map(|j| element_of[&symbols[..j]]).collect() };
    let mut control = BTreeMap::new();
    for prefix in log.prefix_states.keys() {
        if let Ok(u) = h.decode(prefix) {
            control.insert(translate(prefix), u);
        }
    }
    let paths: Vec<Vec<usize>> = log.z_hat.iter().filter(|w| !w.is_empty()).map(|w| translate(w)).collect();
    (Cover::new(elements), ControlMap::Prefix(control), SpanningSet::from_element_paths(paths))
}

/// One step of a simulated closed loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimStep {
    pub t: usize,
    pub state: Vec<f64>,
    pub cell: usize,
    pub symbol: Option<usize>,
    pub input: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimTrace {
    pub steps: Vec<SimStep>,
    pub reached_target: bool,
    pub symbols: Vec<usize>,
}

impl SimTrace {
    pub fn to_csv(&self, input_label: impl Fn(usize) -> String) -> String {
        let dim = self.steps.first().map_or(0, |s| s.state.len());
        let mut out = String::from("t,");
        for i in 0..dim {
            out.push_str(&format!("x{i},"));
        }
        out.push_str("cell,symbol,input\n");
        for s in &self.steps {
            out.push_str(&format!("{},", s.t));
            for v in &s.state {
                out.push_str(&format!("{v},"));
            }
            let sym = s.symbol.map_or_else(|| "s0".to_string(), |e| e.to_string());
            let input = s.input.map_or_else(String::new, &input_label);
            out.push_str(&format!("{},{sym},\"{input}\"\n", s.cell));
        }
        out
    }
}

/// Closed loop of the concrete system: the coder sees the cell of `x`,
/// the plant moves exactly. Stops on target entry or after `steps`.
pub fn simulate_concrete(
    abs: &GridAbstraction,
    h: &CoderController,
    x0: &[f64],
    steps: usize,
) -> Result<SimTrace, CoderError> {
    let mut x = x0.to_vec();
    let mut symbols = Vec::new();
    let mut out = Vec::new();
    for t in 0..=steps {
        let cell = abs.relate(&x);
        if !abs.is_safe_cell(cell) {
            return Err(CoderError::LeftSafe(cell));
        }
        let in_target = abs.is_target_cell(cell);
        let symbol = h.encode(&symbols, cell, in_target)?;
        if in_target {
            out.push(SimStep { t, state: x, cell, symbol: None, input: None });
            return Ok(SimTrace { steps: out, reached_target: true, symbols });
        }
        if t == steps {
            out.push(SimStep { t, state: x, cell, symbol, input: None });
            break;
        }
        if let Some(s) = symbol {
            symbols.push(s);
        }
        let u = h.decode(&symbols)?;
        let next = abs.eval(&x, u);
        out.push(SimStep { t, state: x, cell, symbol, input: Some(u) });
        x = next;
    }
    Ok(SimTrace { steps: out, reached_target: false, symbols })
}

/// Closed loop of a finite system; nondeterminism resolved by `rng`.
pub fn simulate_finite<S: TransitionSystem + ?Sized, R: Rng>(
    sys: &S,
    h: &CoderController,
    spec: &FiniteReachSpec,
    x0: usize,
    steps: usize,
    rng: &mut R,
) -> Result<SimTrace, CoderError> {
    let mut x = x0;
    let mut symbols = Vec::new();
    let mut out = Vec::new();
    let mut buf = Vec::new();
    for t in 0..=steps {
        if !spec.safe.contains(&x) {
            return Err(CoderError::LeftSafe(x));
        }
        let in_target = spec.target.contains(&x);
        let symbol = h.encode(&symbols, x, in_target)?;
        if in_target {
            out.push(SimStep { t, state: vec![x as f64], cell: x, symbol: None, input: None });
            return Ok(SimTrace { steps: out, reached_target: true, symbols });
        }
        if t == steps {
            break;
        }
        if let Some(s) = symbol {
            symbols.push(s);
        }
        let u = h.decode(&symbols)?;
        sys.successors(x, u, &mut buf);
        let &next = buf.choose(rng).ok_or(CoderError::Blocking { state: x, input: u })?;
        out.push(SimStep { t, state: vec![x as f64], cell: x, symbol, input: Some(u) });
        x = next;
    }
    Ok(SimTrace { steps: out, reached_target: false, symbols })
}
