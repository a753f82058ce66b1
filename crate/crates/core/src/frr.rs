//! Feedback refinement relations between finite systems, the entropy
//! ordering they imply, and sampled soundness checks for grid
//! abstractions.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::GridAbstraction;
use crate::coarsening::CoarsenMode;
use crate::oracle::{exact_entropy, MAX_FREE_STATES};
use crate::pipeline::finite_pipeline;
use crate::spanning::{ControlMap, Cover, SpanningSet};
use crate::system::{FiniteReachSpec, FiniteSystem, TransitionSystem};

#[derive(Debug, Error, PartialEq)]
pub enum FrrError {
    #[error("input map is not defined for abstract input {0}")]
    InputMapNotTotal(usize),
    #[error("concrete state {0} is related to no abstract state")]
    NotStrict(usize),
    #[error("relation mentions unknown state ({0}, {1})")]
    UnknownPair(usize, usize),
    #[error("input map sends {0} to unknown input {1}")]
    UnknownInput(usize, usize),
    #[error("witness line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("refinement does not hold: {0}")]
    NotRefinement(String),
}

/// Relation `R ⊆ X₁ × X₂` with the input map `r : U₂ → U₁`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RefinementWitness {
    pub relation: BTreeSet<(usize, usize)>,
    pub input_map: BTreeMap<usize, usize>,
}

impl RefinementWitness {
    pub fn identity(sys: &FiniteSystem) -> Self {
        RefinementWitness {
            relation: (0..sys.state_count()).map(|x| (x, x)).collect(),
            input_map: (0..sys.input_count()).map(|u| (u, u)).collect(),
        }
    }

    /// Witness of a state map `x₁ ↦ q(x₁)`.
    pub fn from_function(q: &[usize], input_map: BTreeMap<usize, usize>) -> Self {
        RefinementWitness { relation: q.iter().enumerate().map(|(x1, &x2)| (x1, x2)).collect(), input_map }
    }

    /// `R(x₁)`
    pub fn image(&self, x1: usize) -> BTreeSet<usize> {
        self.relation.range((x1, 0)..=(x1, usize::MAX)).map(|&(_, x2)| x2).collect()
    }

    /// `R⁻¹(set)`
    pub fn preimage(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        self.relation.iter().filter(|(_, x2)| set.contains(x2)).map(|&(x1, _)| x1).collect()
    }

    /// Lines `pair,<x1>,<x2>` and `input,<u2>,<u1>` with state and input
    /// names; `#` starts a comment.
    pub fn from_csv(text: &str, sys1: &FiniteSystem, sys2: &FiniteSystem) -> Result<Self, FrrError> {
        let mut w = RefinementWitness::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| FrrError::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match fields.as_slice() {
                ["pair", a, b] => {
                    let x1 = sys1.state_id(a).map_err(|e| err(e.to_string()))?;
                    let x2 = sys2.state_id(b).map_err(|e| err(e.to_string()))?;
                    w.relation.insert((x1, x2));
                }
                ["input", a, b] => {
                    let u2 = sys2.input_id(a).map_err(|e| err(e.to_string()))?;
                    let u1 = sys1.input_id(b).map_err(|e| err(e.to_string()))?;
                    if w.input_map.insert(u2, u1).is_some() {
                        return Err(err(format!("input `{a}` mapped twice")));
                    }
                }
                _ => return Err(err(format!("expected `pair,x1,x2` or `input,u2,u1`, got `{line}`"))),
            }
        }
        Ok(w)
    }

    fn validate<S1, S2>(&self, sys1: &S1, sys2: &S2) -> Result<(), FrrError>
    where
        S1: TransitionSystem + ?Sized,
        S2: TransitionSystem + ?Sized,
    {
        if let Some(&(a, b)) = self.relation.iter().find(|(a, b)| *a >= sys1.state_count() || *b >= sys2.state_count())
        {
            return Err(FrrError::UnknownPair(a, b));
        }
        for u2 in 0..sys2.input_count() {
            match self.input_map.get(&u2) {
                None => return Err(FrrError::InputMapNotTotal(u2)),
                Some(&u1) if u1 >= sys1.input_count() => return Err(FrrError::UnknownInput(u2, u1)),
                _ => {}
            }
        }
        let related: BTreeSet<usize> = self.relation.iter().map(|&(a, _)| a).collect();
        if let Some(x1) = (0..sys1.state_count()).find(|x| !related.contains(x)) {
            return Err(FrrError::NotStrict(x1));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub x1: usize,
    pub x2: usize,
    pub u2: usize,
    /// Concrete successor whose related states escape `F₂(x₂,u)`.
    pub successor: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrrVerdict {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

/// `R(F₁(x₁, r(u))) ⊆ F₂(x₂, u)` for all `(x₁,x₂) ∈ R`, `u ∈ U₂`.
pub fn check_frr<S1, S2>(sys1: &S1, sys2: &S2, w: &RefinementWitness) -> Result<FrrVerdict, FrrError>
where
    S1: TransitionSystem + ?Sized,
    S2: TransitionSystem + ?Sized,
{
    w.validate(sys1, sys2)?;
    let images: Vec<BTreeSet<usize>> = (0..sys1.state_count()).map(|x| w.image(x)).collect();
    let pairs: Vec<(usize, usize)> = w.relation.iter().copied().collect();
    let counterexample = pairs
        .par_iter()
        .flat_map_iter(|&(x1, x2)| (0..sys2.input_count()).map(move |u2| (x1, x2, u2)))
        .map_init(
            || (Vec::new(), Vec::new()),
            |(b1, b2), (x1, x2, u2)| {
                sys1.successors(x1, w.input_map[&u2], b1);
                sys2.successors(x2, u2, b2);
                b1.iter()
                    .find(|&&y1| !images[y1].iter().all(|y2| b2.binary_search(y2).is_ok()))
                    .map(|&successor| Counterexample { x1, x2, u2, successor })
            },
        )
        .flatten()
        .min_by_key(|c| (c.x1, c.x2, c.u2, c.successor));
    Ok(FrrVerdict { holds: counterexample.is_none(), counterexample })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Theorem2Report {
    /// `Q₁ = R⁻¹(Q₂)`
    pub safe_is_preimage: bool,
    /// `T₁ = R⁻¹(T₂)`
    pub target_is_preimage: bool,
    /// `#R(x₁) = 1` for all `x₁`
    pub single_valued: bool,
    /// `R⁻¹(x₂) ≠ ∅` for all `x₂ ∈ Q₂`
    pub onto_safe: bool,
    pub failures: Vec<String>,
}

impl Theorem2Report {
    pub fn holds(&self) -> bool {
        self.safe_is_preimage && self.target_is_preimage && self.single_valued && self.onto_safe
    }
}

pub fn check_theorem2_preconditions(
    state_count1: usize,
    w: &RefinementWitness,
    spec1: &FiniteReachSpec,
    spec2: &FiniteReachSpec,
) -> Theorem2Report {
    let mut r = Theorem2Report::default();
    let q_pre = w.preimage(&spec2.safe);
    r.safe_is_preimage = q_pre == spec1.safe;
    if !r.safe_is_preimage {
        r.failures.push(format!("Q1 = {:?} but R^-1(Q2) = {:?}", spec1.safe, q_pre));
    }
    let t_pre = w.preimage(&spec2.target);
    r.target_is_preimage = t_pre == spec1.target;
    if !r.target_is_preimage {
        r.failures.push(format!("T1 = {:?} but R^-1(T2) = {:?}", spec1.target, t_pre));
    }
    let multi: Vec<usize> = (0..state_count1).filter(|&x| w.image(x).len() != 1).collect();
    r.single_valued = multi.is_empty();
    if !r.single_valued {
        r.failures.push(format!("#R(x1) != 1 for x1 in {multi:?}"));
    }
    let hit: BTreeSet<usize> = w.relation.iter().map(|&(_, b)| b).collect();
    let orphans: Vec<usize> = spec2.safe.difference(&hit).copied().collect();
    r.onto_safe = orphans.is_empty();
    if !r.onto_safe {
        r.failures.push(format!("R^-1(x2) is empty for x2 in {orphans:?}"));
    }
    r
}

/// `R₁ := {(R⁻¹(α(j)))_j}`: same sequences over pulled-back elements with
/// inputs translated by `r`.
pub fn pull_back(
    cover: &Cover,
    g: &ControlMap,
    r: &SpanningSet,
    w: &RefinementWitness,
) -> (Cover, ControlMap, SpanningSet) {
    let cover1 = Cover::new(cover.elements.iter().map(|a| w.preimage(a)).collect());
    let map = |u: usize| w.input_map.get(&u).copied().unwrap_or(u);
    let g1 = match g {
        ControlMap::Constant(u) => ControlMap::Constant(map(*u)),
        ControlMap::Memoryless(per) => ControlMap::Memoryless(per.iter().map(|&u| map(u)).collect()),
        ControlMap::Prefix(m) => ControlMap::Prefix(m.iter().map(|(p, &u)| (p.clone(), map(u))).collect()),
    };
    (cover1, g1, r.clone())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub h1: f64,
    pub h2: f64,
    /// Both values are exact entropies rather than upper bounds.
    pub exact: bool,
    /// `h₁ ≤ h₂`; only decided when both values are exact.
    pub ordering_holds: Option<bool>,
}

/// Entropies of both systems (exact within the oracle cap, otherwise
/// include-target graph bounds) and their ordering when exact.
pub fn check_entropy_monotonicity(
    sys1: &FiniteSystem,
    sys2: &FiniteSystem,
    w: &RefinementWitness,
    spec1: &FiniteReachSpec,
    spec2: &FiniteReachSpec,
) -> Result<MonotonicityReport, FrrError> {
    let verdict = check_frr(sys1, sys2, w)?;
    if let Some(c) = verdict.counterexample {
        return Err(FrrError::NotRefinement(format!("inclusion fails at {c:?}")));
    }
    let pre = check_theorem2_preconditions(sys1.state_count(), w, spec1, spec2);
    if !pre.holds() {
        return Err(FrrError::NotRefinement(pre.failures.join("; ")));
    }
    let small = spec1.free().len() <= MAX_FREE_STATES && spec2.free().len() <= MAX_FREE_STATES;
    let value = |sys: &FiniteSystem, spec: &FiniteReachSpec| -> f64 {
        if small {
            exact_entropy(sys, spec, None).map_or(f64::INFINITY, |r| r.entropy)
        } else {
            finite_pipeline(sys, spec, CoarsenMode::ByInput).map_or(f64::INFINITY, |o| o.include.value)
        }
    };
    let (h1, h2) = (value(sys1, spec1), value(sys2, spec2));
    Ok(MonotonicityReport { h1, h2, exact: small, ordering_holds: small.then_some(h1 <= h2 + 1e-9) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleViolation {
    pub x: Vec<f64>,
    pub input: usize,
    pub cell: usize,
    pub successor_cell: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub samples: usize,
    pub violations: Vec<SampleViolation>,
}

/// Samples `x` in safe cells and inputs `u`; checks that the cell of
/// `f(x,u)` is an abstract successor of the cell of `x`.
pub fn sample_abstraction_soundness<R: Rng>(abs: &GridAbstraction, samples: usize, rng: &mut R) -> SoundnessReport {
    let cells: Vec<usize> = abs.q_cells().into_iter().collect();
    let mut violations = Vec::new();
    let mut buf = Vec::new();
    let mut done = 0;
    while done < samples && !cells.is_empty() {
        let c = cells[rng.gen_range(0..cells.len())];
        let cell = abs.cell_box(c);
        let x: Vec<f64> =
            cell.0.iter().map(|iv| if iv.hi > iv.lo { rng.gen_range(iv.lo..=iv.hi) } else { iv.lo }).collect();
        if !cell.contains(&x) {
            continue;
        }
        done += 1;
        let u = rng.gen_range(0..abs.input_count());
        let y = abs.eval(&x, u);
        let d = abs.relate(&y);
        abs.successors(c, u, &mut buf);
        if !buf.contains(&d) {
            violations.push(SampleViolation { x, input: u, cell: c, successor_cell: d });
        }
    }
    SoundnessReport { samples: done, violations }
}
