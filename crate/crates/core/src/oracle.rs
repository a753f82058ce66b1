//! Exact reachability entropy of small finite systems.
//!
//! Reach-spanning sets are searched as trees: each node is a cover element
//! `S` with an input `u`, and its non-target successors `F(S,u) \ T` are
//! split into `k` child elements. With `λ` fixed, whether some tree has
//! every `B(α) ≤ λ` is a dynamic program over subsets of `Q \ T`. The
//! smallest feasible `λ` is found among the finitely many values `B` can
//! take, so the result is exact within the search bounds.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::spanning::{n_value, single_input_attractor, verify_spanning_set, ControlMap, Cover, SpanningSet};
use crate::system::{FiniteReachSpec, TransitionSystem};

pub const MAX_FREE_STATES: usize = 8;
pub const MAX_SEQUENCE_LEN: usize = 16;

const TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("#(Q\\T) = {0} exceeds the exhaustive-search cap of {MAX_FREE_STATES}; use the abstraction pipeline for an upper bound instead")]
    TooLarge(usize),
    #[error("sequence length bound {0} is outside 2..={MAX_SEQUENCE_LEN}")]
    BadLength(usize),
    #[error("branching bound must be at least 1")]
    BadBranching,
    #[error("state {0} is not a state of the system")]
    UnknownState(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchBounds {
    /// Most child elements per tree node (and root elements).
    pub max_cover_size: usize,
    /// Longest sequence, counting the final `T`.
    pub max_len: usize,
}

impl SearchBounds {
    pub fn defaults(free_states: usize) -> Self {
        SearchBounds { max_cover_size: free_states.max(1), max_len: free_states.max(1) + 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    #[serde(serialize_with = "serialize_entropy")]
    pub entropy: f64,
    pub trivial_input: Option<usize>,
    pub witness_cover: Option<Cover>,
    pub witness_control: Option<ControlMap>,
    pub witness_spanning_set: Option<SpanningSet>,
    pub search_bounds: SearchBounds,
}

impl OracleResult {
    pub fn is_finite(&self) -> bool {
        self.entropy.is_finite()
    }

    /// JSON with state and input names; sequences as `A<i> … T`.
    pub fn to_labelled_json<S: TransitionSystem + ?Sized>(&self, sys: &S) -> serde_json::Value {
        use serde_json::json;
        let cover = self.witness_cover.as_ref().map(|c| {
            c.elements.iter().map(|e| e.iter().map(|&x| sys.state_label(x)).collect::<Vec<_>>()).collect::<Vec<_>>()
        });
        let control = self.witness_control.as_ref().map(|g| match g {
            ControlMap::Constant(u) => json!({ "constant": sys.input_label(*u) }),
            ControlMap::Memoryless(per) => json!(per.iter().map(|&u| sys.input_label(u)).collect::<Vec<_>>()),
            ControlMap::Prefix(map) => json!(map
                .iter()
                .map(|(p, &u)| json!({ "prefix": p.iter().map(|e| format!("A{e}")).collect::<Vec<_>>(), "input": sys.input_label(u) }))
                .collect::<Vec<_>>()),
        });
        let spanning = self.witness_spanning_set.as_ref().map(|r| {
            r.sequences
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|n| n.elem().map_or_else(|| "T".to_string(), |e| format!("A{e}")))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect::<Vec<_>>()
        });
        json!({
            "entropy": if self.entropy.is_finite() { json!(crate::report::sig6(self.entropy)) } else { json!("inf") },
            "trivial_input": self.trivial_input.map(|u| sys.input_label(u)),
            "witness_cover": cover,
            "witness_control": control,
            "witness_spanning_set": spanning,
            "search_bounds": self.search_bounds,
        })
    }
}

fn serialize_entropy<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

/// First input that alone drives all of `Q \ T` into `T` inside `Q`.
pub fn trivial_input<S: TransitionSystem + ?Sized>(sys: &S, spec: &FiniteReachSpec) -> Option<usize> {
    let free = spec.free();
    (0..sys.input_count()).find(|&u| single_input_attractor(sys, &free, &spec.target, u).len() == free.len())
}

struct Local {
    n: usize,
    inputs: usize,
    /// per state and input: non-blocking with successors inside `Q`
    ok: Vec<Vec<bool>>,
    hit: Vec<Vec<bool>>,
    next: Vec<Vec<u32>>,
}

impl Local {
    fn new<S: TransitionSystem + ?Sized>(sys: &S, spec: &FiniteReachSpec, free: &[usize]) -> Self {
        let bit: BTreeMap<usize, usize> = free.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let inputs = sys.input_count();
        let mut ok = vec![vec![false; inputs]; free.len()];
        let mut hit = vec![vec![false; inputs]; free.len()];
        let mut next = vec![vec![0u32; inputs]; free.len()];
        let mut buf = Vec::new();
        for (i, &x) in free.iter().enumerate() {
            for u in 0..inputs {
                sys.successors(x, u, &mut buf);
                ok[i][u] = !buf.is_empty() && buf.iter().all(|y| spec.safe.contains(y));
                for y in &buf {
                    if spec.target.contains(y) {
                        hit[i][u] = true;
                    } else if let Some(&j) = bit.get(y) {
                        next[i][u] |= 1 << j;
                    }
                }
            }
        }
        Local { n: free.len(), inputs, ok, hit, next }
    }

    /// `(valid, hits T, non-target successors)` of the element `s`.
    fn step(&self, s: u32, u: usize) -> (bool, bool, u32) {
        let (mut valid, mut hit, mut next) = (true, false, 0);
        for i in bits(s) {
            valid &= self.ok[i][u];
            hit |= self.hit[i][u];
            next |= self.next[i][u];
        }
        (valid, hit, next)
    }
}

fn bits(mut s: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (s != 0).then(|| {
            let i = s.trailing_zeros() as usize;
            s &= s - 1;
            i
        })
    })
}

/// Decision tables at one `λ`; `depth` indexes the position in a sequence.
struct Tables {
    f_input: Vec<Vec<usize>>,
    f_blocks: Vec<Vec<usize>>,
    /// `split[j][k][M]`: first block of the best `k`-split of `M` at depth `j`
    split: Vec<Vec<Vec<u32>>>,
    root_blocks: usize,
    root_value: f64,
}

fn solve(local: &Local, bounds: SearchBounds, lambda: f64) -> Tables {
    let full = 1usize << local.n;
    let cap = bounds.max_cover_size.min(local.n.max(1));
    let deepest = bounds.max_len - 2;
    let inf = f64::INFINITY;
    let log: Vec<f64> = (0..=cap).map(|k| (k.max(1) as f64).log2()).collect();

    let mut f_input = vec![vec![usize::MAX; full]; deepest + 1];
    let mut f_blocks = vec![vec![0usize; full]; deepest + 1];
    let mut split = vec![Vec::new(); deepest + 1];

    // best k-split values at depth j+1; ∞ below the deepest level
    let mut g_next = vec![vec![inf; full]; cap + 1];
    for j in (0..=deepest).rev() {
        let mut f = vec![inf; full];
        for s in 1..full {
            let mut best = inf;
            for u in 0..local.inputs {
                let (valid, hit, next) = local.step(s as u32, u);
                if !valid {
                    continue;
                }
                let mut v = if hit { 0.0 } else { f64::NEG_INFINITY };
                let mut k_best = 0;
                if next != 0 {
                    let mut inner = inf;
                    for k in 1..=cap.min(next.count_ones() as usize) {
                        let c = log[k] - lambda + g_next[k][next as usize];
                        if c < inner {
                            inner = c;
                            k_best = k;
                        }
                    }
                    v = v.max(inner);
                }
                if v < best {
                    best = v;
                    f_input[j][s] = u;
                    f_blocks[j][s] = k_best;
                }
            }
            f[s] = best;
        }
        let (g, choice) = block_splits(&f, cap);
        split[j] = choice;
        g_next = g;
    }

    let all = (full - 1) as u32;
    let mut root_value = inf;
    let mut root_blocks = 0;
    if local.n > 0 {
        for k in 1..=cap.min(local.n) {
            let c = log[k] - lambda + g_next[k][all as usize];
            if c < root_value {
                root_value = c;
                root_blocks = k;
            }
        }
    }
    Tables { f_input, f_blocks, split, root_blocks, root_value }
}

/// `g[k][M]`: least worst-block value over splits of `M` into `k` blocks.
fn block_splits(f: &[f64], cap: usize) -> (Vec<Vec<f64>>, Vec<Vec<u32>>) {
    let full = f.len();
    let mut g = vec![vec![f64::INFINITY; full]; cap + 1];
    let mut choice = vec![vec![0u32; full]; cap + 1];
    g[1].copy_from_slice(f);
    for m in 1..full {
        choice[1][m] = m as u32;
    }
    for k in 2..=cap {
        for m in 1..full {
            let m32 = m as u32;
            if (m32.count_ones() as usize) < k {
                continue;
            }
            let low = m32 & m32.wrapping_neg();
            let rest = m32 ^ low;
            // blocks containing the lowest bit, excluding M itself
            let mut sub = rest;
            loop {
                let b = sub | low;
                if b != m32 {
                    let v = f[b as usize].max(g[k - 1][(m32 ^ b) as usize]);
                    if v < g[k][m] {
                        g[k][m] = v;
                        choice[k][m] = b;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }
    (g, choice)
}

/// All values `log₂(P)/d` that `B` can take within the bounds, ascending.
fn candidate_values(bounds: SearchBounds, n: usize) -> Vec<f64> {
    let cap = bounds.max_cover_size.min(n.max(1)) as u64;
    let mut products: BTreeSet<u64> = BTreeSet::from([1]);
    let mut out = vec![0.0];
    for d in 1..bounds.max_len {
        products = products.iter().flat_map(|&p| (1..=cap).map(move |k| p * k)).collect();
        out.extend(products.iter().map(|&p| (p as f64).log2() / d as f64));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

struct Witness {
    cover: Cover,
    control: ControlMap,
    spanning: SpanningSet,
}

fn reconstruct(local: &Local, tables: &Tables, free: &[usize]) -> Witness {
    let split_into = |j: usize, k: usize, m: u32| -> Vec<u32> {
        let (mut rest, mut out) = (m, Vec::new());
        for kk in (1..=k).rev() {
            let b = tables.split[j][kk][rest as usize];
            out.push(b);
            rest ^= b;
        }
        out
    };
    let mut ids: BTreeMap<u32, usize> = BTreeMap::new();
    let mut elements = Vec::new();
    let mut id_of = |s: u32| -> usize {
        *ids.entry(s).or_insert_with(|| {
            elements.push(bits(s).map(|i| free[i]).collect::<BTreeSet<usize>>());
            elements.len() - 1
        })
    };
    let mut control = BTreeMap::new();
    let mut terminal = Vec::new();
    let all = ((1usize << local.n) - 1) as u32;
    let mut stack: Vec<(u32, usize, Vec<usize>)> =
        split_into(0, tables.root_blocks, all).into_iter().rev().map(|b| (b, 0, Vec::new())).collect();
    while let Some((s, j, parent)) = stack.pop() {
        let mut prefix = parent;
        prefix.push(id_of(s));
        let u = tables.f_input[j][s as usize];
        control.insert(prefix.clone(), u);
        let (_, hit, next) = local.step(s, u);
        if hit {
            terminal.push(prefix.clone());
        }
        if next != 0 {
            let k = tables.f_blocks[j][s as usize];
            for b in split_into(j + 1, k, next).into_iter().rev() {
                stack.push((b, j + 1, prefix.clone()));
            }
        }
    }
    Witness {
        cover: Cover::new(elements),
        control: ControlMap::Prefix(control),
        spanning: SpanningSet::from_element_paths(terminal),
    }
}

/// `h(Q,T)` by exhaustive search; `+∞` when no spanning set exists within
/// the bounds. `None` bounds use [`SearchBounds::defaults`].
pub fn exact_entropy<S: TransitionSystem + ?Sized>(
    sys: &S,
    spec: &FiniteReachSpec,
    bounds: Option<SearchBounds>,
) -> Result<OracleResult, OracleError> {
    if let Some(&x) = spec.safe.iter().find(|&&x| x >= sys.state_count()) {
        return Err(OracleError::UnknownState(x));
    }
    let free: Vec<usize> = spec.free().into_iter().collect();
    if free.len() > MAX_FREE_STATES {
        return Err(OracleError::TooLarge(free.len()));
    }
    let bounds = bounds.unwrap_or_else(|| SearchBounds::defaults(free.len()));
    if !(2..=MAX_SEQUENCE_LEN).contains(&bounds.max_len) {
        return Err(OracleError::BadLength(bounds.max_len));
    }
    if bounds.max_cover_size == 0 {
        return Err(OracleError::BadBranching);
    }

    let trivial = if free.is_empty() { Some(0) } else { trivial_input(sys, spec) };
    if let Some(u) = trivial {
        let cover = if free.is_empty() { Vec::new() } else { vec![free.iter().copied().collect()] };
        return Ok(OracleResult {
            entropy: 0.0,
            trivial_input: Some(u),
            witness_cover: Some(Cover::new(cover)),
            witness_control: Some(ControlMap::Constant(u)),
            witness_spanning_set: Some(SpanningSet::trivial()),
            search_bounds: bounds,
        });
    }
    let none = OracleResult {
        entropy: f64::INFINITY,
        trivial_input: None,
        witness_cover: None,
        witness_control: None,
        witness_spanning_set: None,
        search_bounds: bounds,
    };
    let local = Local::new(sys, spec, &free);
    let candidates = candidate_values(bounds, free.len());
    let feasible = |lambda: f64| {
        let t = solve(&local, bounds, lambda);
        (t.root_value <= TOL).then_some(t)
    };
    let Some(mut tables) = feasible(*candidates.last().expect("nonempty")) else {
        return Ok(none);
    };
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(candidates[mid]) {
            Some(t) => {
                hi = mid;
                tables = t;
            }
            None => lo = mid + 1,
        }
    }
    if hi == candidates.len() - 1 {
        tables = feasible(candidates[hi]).expect("checked above");
    }

    let w = reconstruct(&local, &tables, &free);
    debug_assert!(verify_spanning_set(sys, spec, &w.cover, &w.control, &w.spanning).is_spanning());
    let entropy = n_value(&w.spanning, false).value;
    Ok(OracleResult {
        entropy,
        witness_cover: Some(w.cover),
        witness_control: Some(w.control),
        witness_spanning_set: Some(w.spanning),
        ..none
    })
}
