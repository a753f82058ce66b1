//! Abstraction, synthesis, coarsening and graph entropy end to end.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::GridAbstraction;
use crate::cache::load_or_build;
use crate::coarsening::{coarse_d_map, coarsen, CoarsePartition, CoarsenMode, DMap};
use crate::coder::{
    coder_from_partition, enumerate_symbol_sequences, simulate_concrete, simulate_finite, transmission_rate,
    CoderController, EnumBudget, RateReport, SimTrace, TieBreak,
};
use crate::config::{Config, InitialState, Problem};
use crate::graph::{
    build_graph, check_acyclic, enumerate_spanning_set, export_dot, max_path_value, ClosedLoopGraph, EntropyBound,
    GraphError, WeightMode,
};
use crate::report::sig6;
use crate::spanning::{ControlMap, Cover, SpanningSet};
use crate::synthesis::{check_reachability_satisfiable, synthesize, ReachController, Satisfiability};
use crate::system::{FiniteReachSpec, FiniteSystem, TransitionSystem};

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}\n  hint: {hint}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
    pub hint: &'static str,
}

fn fail<E: Display>(stage: &'static str, hint: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError { stage, message: e.to_string(), hint }
}

/// Everything computed from a controller onwards.
#[derive(Clone, Debug)]
pub struct EntropyOutcome {
    pub controller: ReachController,
    pub satisfiability: Satisfiability,
    pub partition: CoarsePartition,
    pub mode_requested: CoarsenMode,
    pub fallback_triggered: bool,
    pub d_map: DMap,
    pub graph: ClosedLoopGraph,
    pub include: EntropyBound,
    pub exclude: EntropyBound,
}

impl EntropyOutcome {
    pub fn bound(&self, mode: WeightMode) -> &EntropyBound {
        match mode {
            WeightMode::IncludeTarget => &self.include,
            WeightMode::ExcludeTarget => &self.exclude,
        }
    }

    /// Spanning set of all graph paths with the partition as cover.
    pub fn spanning_set(&self, limit: usize) -> Result<(Cover, ControlMap, SpanningSet, bool), GraphError> {
        let paths = enumerate_spanning_set(&self.graph, limit)?;
        let cover = Cover::new(self.partition.groups.iter().map(|g| g.iter().copied().collect()).collect());
        let g = ControlMap::Memoryless(self.partition.group_input.clone());
        Ok((cover, g, SpanningSet::from_element_paths(paths.paths), paths.overflow))
    }

    pub fn coder(&self, tie_break: TieBreak) -> CoderController {
        coder_from_partition(&self.partition, &self.d_map, tie_break)
    }

    /// `(controller domain ∪ T, T)`, the states the closed loop starts from.
    pub fn closed_loop_spec(&self, t_cells: &BTreeSet<usize>) -> FiniteReachSpec {
        let mut safe = self.controller.domain();
        safe.extend(t_cells.iter().copied());
        FiniteReachSpec::allowing_full_target(safe, t_cells.clone()).expect("T inside the safe set")
    }
}

/// Synthesis, coarsening (falling back to input-and-value grouping when
/// the input grouping is cyclic) and both graph bounds.
pub fn entropy_stage<S: TransitionSystem + ?Sized>(
    sys: &S,
    q: &BTreeSet<usize>,
    t: &BTreeSet<usize>,
    mode: CoarsenMode,
) -> Result<EntropyOutcome, PipelineError> {
    let controller = synthesize(sys, q, t).map_err(fail("synthesis", "check that T lies inside Q"))?;
    let satisfiability = check_reachability_satisfiable(&controller, q, t);
    let group = |mode| -> Result<(CoarsePartition, DMap, ClosedLoopGraph, bool), PipelineError> {
        let partition = coarsen(&controller, mode)
            .map_err(fail("coarsening", "no state of Q\\T can be steered into T; enlarge Q, T or the input set"))?;
        let d_map = coarse_d_map(sys, &partition, t).map_err(fail("coarsening", "controller is inconsistent"))?;
        let graph = build_graph(&d_map, None).map_err(fail("graph", "controller is malformed"))?;
        let acyclic = check_acyclic(&graph).is_ok();
        Ok((partition, d_map, graph, acyclic))
    };
    let (mut partition, mut d_map, mut graph, acyclic) = group(mode)?;
    let fallback_triggered = !acyclic;
    if fallback_triggered {
        (partition, d_map, graph, _) = group(CoarsenMode::ByInputAndValue)?;
    }
    let hint = "the grouped closed-loop graph must be acyclic";
    let include = max_path_value(&graph, WeightMode::IncludeTarget).map_err(fail("entropy", hint))?;
    let exclude = max_path_value(&graph, WeightMode::ExcludeTarget).map_err(fail("entropy", hint))?;
    debug_assert!(exclude.value <= include.value + 1e-12);
    Ok(EntropyOutcome {
        controller,
        satisfiability,
        partition,
        mode_requested: mode,
        fallback_triggered,
        d_map,
        graph,
        include,
        exclude,
    })
}

pub fn finite_pipeline(
    sys: &FiniteSystem,
    spec: &FiniteReachSpec,
    mode: CoarsenMode,
) -> Result<EntropyOutcome, PipelineError> {
    entropy_stage(sys, &spec.safe, &spec.target, mode)
}

#[derive(Clone, Debug)]
pub enum Plant {
    Finite { sys: FiniteSystem, spec: FiniteReachSpec },
    Grid { abs: Box<GridAbstraction>, from_cache: bool },
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub use_cache: bool,
    pub coarsen: Option<CoarsenMode>,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub config: Config,
    pub plant: Plant,
    pub q_cells: BTreeSet<usize>,
    pub t_cells: BTreeSet<usize>,
    pub transition_count: usize,
    pub outcome: EntropyOutcome,
    /// Seconds per stage; kept out of the report.
    pub timings: Vec<(&'static str, f64)>,
}

/// Abstraction only, for the `abstract` command.
pub fn abstraction_stage(config: &Config, use_cache: bool) -> Result<(Plant, usize), PipelineError> {
    let problem = config.problem().map_err(fail("config", "fix the named config section"))?;
    Ok(match problem {
        Problem::Finite { sys, spec } => {
            let n = sys.transition_count();
            (Plant::Finite { sys, spec }, n)
        }
        Problem::Continuous { sys, spec, layout, inputs } => {
            let loaded = load_or_build(&sys, &spec, layout, inputs, use_cache)
                .map_err(fail("abstraction", "check grid bounds, eta and that T covers at least one whole cell"))?;
            (Plant::Grid { abs: Box::new(loaded.abstraction), from_cache: loaded.from_cache }, loaded.transition_count)
        }
    })
}

pub fn run_pipeline(config: &Config, opts: &RunOptions) -> Result<PipelineRun, PipelineError> {
    let mut timings = Vec::new();
    let clock = Instant::now();
    let (plant, transition_count) = abstraction_stage(config, opts.use_cache)?;
    timings.push(("abstraction", clock.elapsed().as_secs_f64()));
    let mode = match opts.coarsen {
        Some(m) => m,
        None => config.entropy.coarsen_mode().map_err(fail("config", "use input, input-value or none"))?,
    };
    let clock = Instant::now();
    let (q_cells, t_cells, outcome) = match &plant {
        Plant::Finite { sys, spec } => (spec.safe.clone(), spec.target.clone(), finite_pipeline(sys, spec, mode)?),
        Plant::Grid { abs, .. } => {
            let (q, t) = (abs.q_cells(), abs.t_cells());
            let outcome = entropy_stage(abs.as_ref(), &q, &t, mode)?;
            (q, t, outcome)
        }
    };
    timings.push(("synthesis+entropy", clock.elapsed().as_secs_f64()));
    Ok(PipelineRun { config: config.clone(), plant, q_cells, t_cells, transition_count, outcome, timings })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbstractionStats {
    pub q_cell_count: usize,
    pub t_cell_count: usize,
    pub transition_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControllerStats {
    pub domain_size: usize,
    pub max_value: u32,
    pub satisfiable: bool,
    pub uncovered_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseningStats {
    pub group_count: usize,
    pub mode_requested: String,
    pub mode_used: String,
    pub fallback_triggered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyStats {
    #[serde(rename = "N_R_include_target")]
    pub n_r_include_target: f64,
    #[serde(rename = "N_R_exclude_target")]
    pub n_r_exclude_target: f64,
    pub witness_path: Vec<String>,
    pub witness_path_exclude_target: Vec<String>,
    pub node_count: usize,
    pub edge_count: usize,
    pub longest_path: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison<T> {
    pub reference: T,
    pub computed: T,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceComparison {
    pub domain_size: Option<Comparison<usize>>,
    pub group_count: Option<Comparison<usize>>,
    #[serde(rename = "N_R")]
    pub n_r: Option<Comparison<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub config_hash: String,
    pub system_kind: &'static str,
    pub abstraction_stats: AbstractionStats,
    pub controller_stats: ControllerStats,
    pub coarsening_stats: CoarseningStats,
    pub entropy: EntropyStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceComparison>,
}

/// Entropy of one weight mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    #[serde(rename = "N_R")]
    pub n_r: f64,
    pub weight_mode: WeightMode,
    pub witness_path: Vec<String>,
    pub node_count: usize,
    pub edge_count: usize,
    pub longest_path: usize,
}

impl PipelineRun {
    pub fn system(&self) -> &dyn TransitionSystem {
        match &self.plant {
            Plant::Finite { sys, .. } => sys,
            Plant::Grid { abs, .. } => abs.as_ref(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.plant {
            Plant::Finite { .. } => "finite",
            Plant::Grid { .. } => "continuous",
        }
    }

    pub fn cell_label(&self, c: usize) -> String {
        match &self.plant {
            Plant::Finite { sys, .. } => sys.state_label(c),
            Plant::Grid { abs, .. } => {
                if c == abs.sink() {
                    return "unsafe".into();
                }
                let b = abs.cell_box(c);
                let lo: Vec<String> = b.0.iter().map(|iv| format!("{}", sig6(iv.lo))).collect();
                let hi: Vec<String> = b.0.iter().map(|iv| format!("{}", sig6(iv.hi))).collect();
                format!("[{}]-[{}]", lo.join(";"), hi.join(";"))
            }
        }
    }

    pub fn input_label(&self, u: usize) -> String {
        match &self.plant {
            Plant::Finite { sys, .. } => sys.input_label(u),
            Plant::Grid { abs, .. } => abs.inputs.label(u),
        }
    }

    fn path_labels(&self, path: &[usize]) -> Vec<String> {
        path.iter().map(|&g| format!("A{g}")).chain(["T".to_string()]).collect()
    }

    pub fn entropy_report(&self, mode: WeightMode) -> EntropyReport {
        let b = self.outcome.bound(mode);
        EntropyReport {
            n_r: sig6(b.value),
            weight_mode: mode,
            witness_path: self.path_labels(&b.witness.path),
            node_count: self.outcome.graph.node_count(),
            edge_count: self.outcome.graph.edge_count(),
            longest_path: b.longest_path,
        }
    }

    pub fn report(&self) -> PipelineReport {
        let o = &self.outcome;
        let mode_used = if o.fallback_triggered { CoarsenMode::ByInputAndValue } else { o.mode_requested };
        let reference = self.config.reference.as_ref().map(|r| ReferenceComparison {
            domain_size: r.domain_size.map(|reference| Comparison {
                reference,
                computed: o.controller.domain_size(),
                delta: o.controller.domain_size() as f64 - reference as f64,
            }),
            group_count: r.group_count.map(|reference| Comparison {
                reference,
                computed: o.partition.len(),
                delta: o.partition.len() as f64 - reference as f64,
            }),
            n_r: r.n_r.map(|reference| Comparison {
                reference,
                computed: sig6(o.include.value),
                delta: sig6(o.include.value - reference),
            }),
        });
        PipelineReport {
            config_hash: self.config.hash(),
            system_kind: self.kind(),
            abstraction_stats: AbstractionStats {
                q_cell_count: self.q_cells.len(),
                t_cell_count: self.t_cells.len(),
                transition_count: self.transition_count,
            },
            controller_stats: ControllerStats {
                domain_size: o.controller.domain_size(),
                max_value: o.controller.max_value(),
                satisfiable: o.satisfiability.satisfied,
                uncovered_count: o.satisfiability.uncovered.len(),
            },
            coarsening_stats: CoarseningStats {
                group_count: o.partition.len(),
                mode_requested: o.mode_requested.to_string(),
                mode_used: mode_used.to_string(),
                fallback_triggered: o.fallback_triggered,
            },
            entropy: EntropyStats {
                n_r_include_target: sig6(o.include.value),
                n_r_exclude_target: sig6(o.exclude.value),
                witness_path: self.path_labels(&o.include.witness.path),
                witness_path_exclude_target: self.path_labels(&o.exclude.witness.path),
                node_count: o.graph.node_count(),
                edge_count: o.graph.edge_count(),
                longest_path: o.include.longest_path,
            },
            reference,
        }
    }

    pub fn dot(&self, mode: WeightMode) -> String {
        export_dot(&self.outcome.graph, mode)
    }

    pub fn controller_csv(&self) -> String {
        self.outcome.controller.to_csv(|c| self.cell_label(c), |u| self.input_label(u))
    }

    pub fn partition_csv(&self) -> String {
        self.outcome.partition.to_csv(|c| self.cell_label(c), |u| self.input_label(u))
    }

    /// Simulates the closed loop and, when affordable, enumerates every
    /// symbol sequence of the abstract loop for `R(H)`.
    pub fn simulate(
        &self,
        x0: Option<&InitialState>,
        steps: usize,
        seed: u64,
        tie_break: TieBreak,
    ) -> Result<(SimTrace, Option<RateReport>), PipelineError> {
        let h = self.outcome.coder(tie_break);
        let spec = self.outcome.closed_loop_spec(&self.t_cells);
        let mut rng = StdRng::seed_from_u64(seed);
        let hint = "pick x0 inside the controller domain";
        let trace = match (&self.plant, x0) {
            (Plant::Finite { sys, .. }, x0) => {
                let start = match x0 {
                    Some(InitialState::State(name)) => sys.state_id(name).map_err(fail("simulate", hint))?,
                    Some(InitialState::Point(_)) => {
                        return Err(fail("simulate", hint)("finite systems take a state name as x0"))
                    }
                    None => random_element(&self.outcome.controller.domain(), &mut rng),
                };
                simulate_finite(sys, &h, &spec, start, steps, &mut rng).map_err(fail("simulate", hint))?
            }
            (Plant::Grid { abs, .. }, x0) => {
                let start = match x0 {
                    Some(InitialState::Point(x)) => x.clone(),
                    Some(InitialState::State(s)) => {
                        return Err(fail("simulate", hint)(format!("expected a point, got `{s}`")))
                    }
                    None => {
                        let c = random_element(&self.outcome.controller.domain(), &mut rng);
                        let b = abs.cell_box(c);
                        b.0.iter().map(|iv| 0.5 * (iv.lo + iv.hi)).collect()
                    }
                };
                simulate_concrete(abs, &h, &start, steps).map_err(fail("simulate", hint))?
            }
        };
        let budget = EnumBudget { max_steps: self.system().state_count() + 1, max_prefixes: 200_000 };
        let rate = enumerate_symbol_sequences(self.system(), &h, &spec, budget).ok().map(|log| {
            let mut r = transmission_rate(&log);
            r.r_h = sig6(r.r_h);
            r
        });
        Ok((trace, rate))
    }
}

fn random_element(set: &BTreeSet<usize>, rng: &mut StdRng) -> usize {
    let v: Vec<usize> = set.iter().copied().collect();
    v[rng.gen_range(0..v.len())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::models;

    #[test]
    fn example1_pipeline() {
        let (sys, spec) = models::example1();
        let o = finite_pipeline(&sys, &spec, CoarsenMode::ByInput).unwrap();
        assert_eq!(o.include.value, 1.0);
        assert_eq!(o.exclude.value, 1.0);
        assert_eq!(o.partition.len(), 2);
        assert!(!o.fallback_triggered);
    }

    #[test]
    fn cyclic_grouping_falls_back() {
        // 2 -a-> 1 -a-> 0 and 3 -b-> 0: grouping {1,2} under a loops on itself
        let sys = FiniteSystem::from_named_transitions(
            &["0", "1", "2", "3"],
            &["a", "b"],
            &[("1", "a", "0"), ("2", "a", "1"), ("3", "b", "0")],
        )
        .unwrap();
        let spec = FiniteReachSpec::new([0, 1, 2, 3].into(), [0].into()).unwrap();
        let o = finite_pipeline(&sys, &spec, CoarsenMode::ByInput).unwrap();
        assert!(o.fallback_triggered);
        assert_eq!(o.partition.len(), 3);
        assert_eq!(o.include.value, 3f64.log2());
    }

    #[test]
    fn nothing_to_control_is_an_error() {
        let sys = FiniteSystem::from_named_transitions(&["0", "1"], &["a"], &[]).unwrap();
        let spec = FiniteReachSpec::new([0, 1].into(), [0].into()).unwrap();
        let err = finite_pipeline(&sys, &spec, CoarsenMode::ByInput).unwrap_err();
        assert_eq!(err.stage, "coarsening");
    }
}
