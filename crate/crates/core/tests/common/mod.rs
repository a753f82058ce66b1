#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use reach_entropy::coarsening::DMap;
use reach_entropy::frr::RefinementWitness;
use reach_entropy::system::{FiniteReachSpec, FiniteSystem};

/// Random finite system with `free` non-target states, 1–2 target states,
/// 2 to `inputs` inputs and posts of size 1–`branching`. Most draws give
/// each state one input that moves it down a hidden ranking.
pub fn random_system<R: Rng>(
    rng: &mut R,
    free: usize,
    inputs: usize,
    branching: usize,
) -> (FiniteSystem, FiniteReachSpec) {
    let targets = rng.gen_range(1..=2);
    let n = free + targets;
    let m = rng.gen_range(2.min(inputs)..=inputs);
    let mut sys = FiniteSystem::with_sizes(n, m);
    let ranked = rng.gen_bool(0.8);
    for x in 0..free {
        let good = rng.gen_range(0..m);
        for u in 0..m {
            if rng.gen_bool(0.05) {
                continue;
            }
            let k = rng.gen_range(1..=branching);
            let pool: Vec<usize> = if ranked && u == good {
                // strictly lower rank: earlier free states and the targets
                (0..x).chain(free..n).collect()
            } else {
                (0..n).collect()
            };
            let mut succ: BTreeSet<usize> = (0..k).map(|_| *pool.choose(rng).expect("nonempty pool")).collect();
            if ranked && u != good && rng.gen_bool(0.7) {
                succ.insert(x);
            }
            sys.set_post(x, u, succ).expect("valid transition");
        }
    }
    for t in free..n {
        for u in 0..m {
            sys.set_post(t, u, [t]).expect("valid transition");
        }
    }
    let safe: BTreeSet<usize> = (0..n).collect();
    let target: BTreeSet<usize> = (free..n).collect();
    let spec = FiniteReachSpec::new(safe, target).expect("valid spec");
    (sys, spec)
}

/// Concrete system refining `sys2`: each abstract state is split into
/// 1–`max_split` copies, inputs are permuted, and every concrete post is a
/// nonempty subset of the preimage of the abstract post.
pub struct RefinementPair {
    pub sys1: FiniteSystem,
    pub spec1: FiniteReachSpec,
    pub witness: RefinementWitness,
}

pub fn refine<R: Rng>(
    rng: &mut R,
    sys2: &FiniteSystem,
    spec2: &FiniteReachSpec,
    max_split: usize,
    max_free1: usize,
) -> RefinementPair {
    let n2 = sys2.states().len();
    let m = sys2.inputs().len();
    let mut q: Vec<usize> = Vec::new();
    let mut free1 = 0;
    for x2 in 0..n2 {
        let free = !spec2.target.contains(&x2);
        let later = spec2.free().iter().filter(|&&y| y > x2).count();
        let room = max_free1.saturating_sub(free1 + later).max(1);
        let copies = if free { rng.gen_range(1..=max_split.min(room)) } else { rng.gen_range(1..=max_split) };
        if free {
            free1 += copies;
        }
        q.extend(std::iter::repeat_n(x2, copies));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let input_map: BTreeMap<usize, usize> = (0..m).map(|u2| (u2, perm[u2])).collect();
    let pre: Vec<Vec<usize>> = (0..n2).map(|x2| (0..q.len()).filter(|&x1| q[x1] == x2).collect()).collect();

    let mut sys1 = FiniteSystem::with_sizes(q.len(), m);
    for x1 in 0..q.len() {
        for u2 in 0..m {
            let post2 = sys2.post(q[x1], u2).expect("valid");
            if post2.is_empty() {
                continue;
            }
            let pool: Vec<usize> = post2.iter().flat_map(|&y| pre[y].iter().copied()).collect();
            let k = rng.gen_range(1..=pool.len());
            let succ: BTreeSet<usize> = pool.choose_multiple(rng, k).copied().collect();
            sys1.set_post(x1, perm[u2], succ).expect("valid transition");
        }
    }
    let lift = |set: &BTreeSet<usize>| -> BTreeSet<usize> { (0..q.len()).filter(|x| set.contains(&q[*x])).collect() };
    let spec1 = FiniteReachSpec::new(lift(&spec2.safe), lift(&spec2.target)).expect("valid spec");
    RefinementPair { sys1, spec1, witness: RefinementWitness::from_function(&q, input_map) }
}

/// Random DAG D-map: node `i` only points to nodes `j > i`, the last node
/// always reaches the target and every node has at least one successor.
pub fn random_dag<R: Rng>(rng: &mut R, nodes: usize) -> DMap {
    let mut successors = vec![BTreeSet::new(); nodes];
    let mut to_target = vec![false; nodes];
    for i in 0..nodes {
        for j in i + 1..nodes {
            if rng.gen_bool(0.35) {
                successors[i].insert(j);
            }
        }
        to_target[i] = i + 1 == nodes || rng.gen_bool(0.3) || successors[i].is_empty();
    }
    // random relabelling so that the order is not the index order
    let mut perm: Vec<usize> = (0..nodes).collect();
    perm.shuffle(rng);
    let mut s2 = vec![BTreeSet::new(); nodes];
    let mut t2 = vec![false; nodes];
    for i in 0..nodes {
        s2[perm[i]] = successors[i].iter().map(|&j| perm[j]).collect();
        t2[perm[i]] = to_target[i];
    }
    DMap { successors: s2, to_target: t2 }
}

pub const T: usize = usize::MAX;

/// Max over every root-to-target path of `B(α)`, computed from the
/// explicit path list: `P` and `P̂` are read off the prefixes.
pub fn brute_force_n(d: &DMap, include_target: bool) -> f64 {
    let n = d.successors.len();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    fn walk(d: &DMap, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if d.to_target[v] {
            let mut p = path.clone();
            p.push(T);
            out.push(p);
        }
        for &m in &d.successors[v] {
            path.push(m);
            walk(d, path, out);
            path.pop();
        }
    }
    for root in 0..n {
        walk(d, &mut vec![root], &mut paths);
    }
    let mut children: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
    for p in &paths {
        for t in 0..p.len() - 1 {
            children.entry(p[..=t].to_vec()).or_default().insert(p[t + 1]);
        }
    }
    let r0: BTreeSet<usize> = paths.iter().map(|p| p[0]).collect();
    let mut best = f64::NEG_INFINITY;
    for p in &paths {
        let tau = p.len();
        let mut sum = (r0.len() as f64).log2();
        for t in 0..tau.saturating_sub(2) {
            let c = &children[&p[..=t]];
            let k = c.iter().filter(|&&x| include_target || x != T).count();
            sum += (k as f64).log2();
        }
        best = best.max(sum / (tau - 1) as f64);
    }
    best
}

use reach_entropy::coarsening::CoarsenMode;
use reach_entropy::coder::{
    build_coder_controller, enumerate_symbol_sequences, spanning_set_from_traces, transmission_rate, EnumBudget,
    TieBreak,
};
use reach_entropy::frr::{check_frr, check_theorem2_preconditions, pull_back};
use reach_entropy::oracle::{exact_entropy, MAX_FREE_STATES};
use reach_entropy::pipeline::finite_pipeline;
use reach_entropy::spanning::{n_value, verify_spanning_set};

/// Quantities compared by the data-rate checks on one system.
#[derive(Debug)]
pub struct RateCase {
    pub n_include: f64,
    pub n_exclude: f64,
    pub r_h: f64,
    pub n_traces: f64,
    pub traces_spanning: bool,
    pub pipeline_spanning: bool,
    pub oracle: f64,
}

/// `None` when synthesis does not cover `Q`.
pub fn rate_case(sys: &FiniteSystem, spec: &FiniteReachSpec) -> Option<RateCase> {
    let outcome = finite_pipeline(sys, spec, CoarsenMode::ByInput).ok()?;
    if !outcome.satisfiability.satisfied {
        return None;
    }
    let (cover, g, r, overflow) = outcome.spanning_set(1_000_000).expect("acyclic graph");
    assert!(!overflow);
    let pipeline_spanning = verify_spanning_set(sys, spec, &cover, &g, &r).is_spanning();
    let n_exclude = n_value(&r, false).value;
    assert!((n_exclude - outcome.exclude.value).abs() < 1e-9, "graph bound differs from N of its spanning set");

    let h = build_coder_controller(&r, &cover, &g, TieBreak::Lowest).expect("coder");
    let log =
        enumerate_symbol_sequences(sys, &h, spec, EnumBudget::for_states(sys.states().len())).expect("closed loop");
    let r_h = transmission_rate(&log).r_h;
    let (c2, g2, r2) = spanning_set_from_traces(&log, &h);
    let traces_spanning = verify_spanning_set(sys, spec, &c2, &g2, &r2).is_spanning();
    let n_traces = n_value(&r2, false).value;

    let oracle = if spec.free().len() <= MAX_FREE_STATES {
        exact_entropy(sys, spec, None).expect("within caps").entropy
    } else {
        f64::NAN
    };
    Some(RateCase {
        n_include: outcome.include.value,
        n_exclude,
        r_h,
        n_traces,
        traces_spanning,
        pipeline_spanning,
        oracle,
    })
}

#[derive(Debug)]
pub struct TransportCase {
    pub frr_holds: bool,
    pub preconditions: bool,
    pub pulled_back_spanning: bool,
    pub n_abstract: f64,
    pub n_concrete: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Pulls the pipeline's spanning set of `sys2` back along a refinement and
/// compares oracle entropies. `None` when `sys2` is not satisfiable.
pub fn transport_case<R: Rng>(rng: &mut R, sys2: &FiniteSystem, spec2: &FiniteReachSpec) -> Option<TransportCase> {
    let outcome = finite_pipeline(sys2, spec2, CoarsenMode::ByInput).ok()?;
    if !outcome.satisfiability.satisfied {
        return None;
    }
    let pair = refine(rng, sys2, spec2, 3, MAX_FREE_STATES);
    let verdict = check_frr(&pair.sys1, sys2, &pair.witness).expect("checkable");
    let pre = check_theorem2_preconditions(pair.sys1.states().len(), &pair.witness, &pair.spec1, spec2);
    let (cover, g, r, _) = outcome.spanning_set(1_000_000).expect("acyclic graph");
    let (c1, g1, r1) = pull_back(&cover, &g, &r, &pair.witness);
    let pulled_back_spanning = verify_spanning_set(&pair.sys1, &pair.spec1, &c1, &g1, &r1).is_spanning();
    let h1 = exact_entropy(&pair.sys1, &pair.spec1, None).expect("within caps").entropy;
    let h2 = exact_entropy(sys2, spec2, None).expect("within caps").entropy;
    Some(TransportCase {
        frr_holds: verdict.holds,
        preconditions: pre.holds(),
        pulled_back_spanning,
        n_abstract: n_value(&r, false).value,
        n_concrete: n_value(&r1, false).value,
        h1,
        h2,
    })
}
