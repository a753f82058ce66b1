use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use reach_entropy::coarsening::CoarsenMode;
use reach_entropy::coder::TieBreak;
use reach_entropy::config::{Config, InitialState, Problem};
use reach_entropy::frr::{check_entropy_monotonicity, check_frr, check_theorem2_preconditions, RefinementWitness};
use reach_entropy::graph::WeightMode;
use reach_entropy::oracle::exact_entropy;
use reach_entropy::pipeline::{abstraction_stage, run_pipeline, PipelineRun, Plant, RunOptions};
use reach_entropy::report::{sig6, to_json};
use reach_entropy::system::{FiniteReachSpec, FiniteSystem};

#[derive(Parser)]
#[command(name = "reach-entropy", version, about = "Reach-while-stay entropy bounds via finite abstractions")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Rebuild the abstraction instead of reading the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// Grouping of controller cells: input, input-value or none.
    #[arg(long)]
    coarsen: Option<String>,
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the abstraction and print its statistics.
    Abstract(Common),
    /// Synthesize the controller and print it as CSV.
    Synthesize(Common),
    /// Compute N(R) for one weight mode.
    Entropy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_weight_mode)]
        weight_mode: Option<WeightMode>,
    },
    /// Simulate the coder-controller loop.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial state: comma-separated coordinates or a state name.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Trajectory CSV destination (default: stdout).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Exact entropy of a small finite system.
    Oracle {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a feedback refinement relation between two finite systems.
    CheckFrr {
        concrete: PathBuf,
        abstract_: PathBuf,
        witness: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline and print the JSON report.
    Report {
        #[command(flatten)]
        common: Common,
        /// Also print stage timings to stderr.
        #[arg(long)]
        timings: bool,
    },
    /// Export the closed-loop graph in DOT format.
    ExportGraph {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_weight_mode)]
        weight_mode: Option<WeightMode>,
    },
}

fn parse_weight_mode(s: &str) -> Result<WeightMode, String> {
    match s {
        "include-target" => Ok(WeightMode::IncludeTarget),
        "exclude-target" => Ok(WeightMode::ExcludeTarget),
        other => Err(format!("unknown weight mode `{other}` (expected include-target or exclude-target)")),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Config> {
    Config::load(path).with_context(|| format!("loading {}", path.display()))
}

fn run(common: &Common, no_cache: bool) -> Result<PipelineRun> {
    let config = load(&common.config)?;
    let coarsen = common.coarsen.as_deref().map(str::parse::<CoarsenMode>).transpose()?;
    Ok(run_pipeline(&config, &RunOptions { use_cache: !no_cache, coarsen })?)
}

fn finite(path: &Path) -> Result<(FiniteSystem, FiniteReachSpec)> {
    match load(path)?.problem()? {
        Problem::Finite { sys, spec } => Ok((sys, spec)),
        Problem::Continuous { .. } => {
            bail!("{} describes a continuous system; a finite one is required", path.display())
        }
    }
}

fn parse_x0(s: &str) -> InitialState {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if !v.is_empty() => InitialState::Point(v),
        _ => InitialState::State(s.to_string()),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Abstract(common) => {
            let config = load(&common.config)?;
            let (plant, transitions) = abstraction_stage(&config, !cli.no_cache)?;
            let stats = match &plant {
                Plant::Finite { sys, spec } => serde_json::json!({
                    "system_kind": "finite",
                    "state_count": sys.states().len(),
                    "q_cell_count": spec.safe.len(),
                    "t_cell_count": spec.target.len(),
                    "transition_count": transitions,
                }),
                Plant::Grid { abs, from_cache } => {
                    eprintln!("abstraction {}", if *from_cache { "read from cache" } else { "built" });
                    serde_json::json!({
                        "system_kind": "continuous",
                        "cell_count": abs.cell_count(),
                        "input_count": abs.inputs.len(),
                        "q_cell_count": abs.q_cells().len(),
                        "t_cell_count": abs.t_cells().len(),
                        "transition_count": transitions,
                    })
                }
            };
            emit(common.output.as_deref(), &to_json(&stats))
        }
        Command::Synthesize(common) => {
            let r = run(common, cli.no_cache)?;
            let o = &r.outcome;
            eprintln!(
                "domain {} of {} cells, satisfiable: {}",
                o.controller.domain_size(),
                r.q_cells.len() - r.t_cells.len(),
                o.satisfiability.satisfied
            );
            emit(common.output.as_deref(), &r.controller_csv())
        }
        Command::Entropy { common, weight_mode } => {
            let r = run(common, cli.no_cache)?;
            let mode = weight_mode.unwrap_or(r.config.entropy.weight_mode);
            emit(common.output.as_deref(), &to_json(&r.entropy_report(mode)))
        }
        Command::Simulate { common, x0, steps, seed, trajectory } => {
            let r = run(common, cli.no_cache)?;
            let sim = &r.config.simulate;
            let x0 = x0.as_deref().map(parse_x0).or_else(|| sim.x0.clone());
            let seed = seed.unwrap_or(sim.seed);
            let tie = match sim.tie_break.as_str() {
                "lowest" => TieBreak::Lowest,
                "seeded" => TieBreak::Seeded(seed),
                other => bail!("[simulate] tie_break must be lowest or seeded, got `{other}`"),
            };
            let (trace, rate) = r.simulate(x0.as_ref(), steps.unwrap_or(sim.steps), seed, tie)?;
            emit(trajectory.as_deref(), &trace.to_csv(|u| r.input_label(u)))?;
            let report = serde_json::json!({
                "R_H": rate.as_ref().map(|x| x.r_h),
                "num_sequences": rate.as_ref().map(|x| x.num_sequences),
                "max_sequence_length": rate.as_ref().map(|x| x.max_sequence_length),
                "reached_target": trace.reached_target,
                "steps": trace.steps.len(),
                "symbols": trace.symbols,
            });
            match (&common.output, trajectory) {
                (Some(p), _) => emit(Some(p), &to_json(&report)),
                (None, Some(_)) => emit(None, &to_json(&report)),
                (None, None) => {
                    eprint!("{}", to_json(&report));
                    Ok(())
                }
            }
        }
        Command::Oracle { config, output } => {
            let (sys, spec) = finite(config)?;
            let result = exact_entropy(&sys, &spec, None)?;
            emit(output.as_deref(), &to_json(&result.to_labelled_json(&sys)))
        }
        Command::CheckFrr { concrete, abstract_, witness, output } => {
            let (sys1, spec1) = finite(concrete)?;
            let (sys2, spec2) = finite(abstract_)?;
            let text = std::fs::read_to_string(witness).with_context(|| format!("reading {}", witness.display()))?;
            let w = RefinementWitness::from_csv(&text, &sys1, &sys2)?;
            let verdict = check_frr(&sys1, &sys2, &w)?;
            let pre = check_theorem2_preconditions(sys1.states().len(), &w, &spec1, &spec2);
            let mono = if verdict.holds && pre.holds() {
                Some(check_entropy_monotonicity(&sys1, &sys2, &w, &spec1, &spec2)?)
            } else {
                None
            };
            let label = |c: &reach_entropy::frr::Counterexample| {
                serde_json::json!({
                    "x1": sys1.states()[c.x1], "x2": sys2.states()[c.x2],
                    "u": sys2.inputs()[c.u2], "successor": sys1.states()[c.successor],
                })
            };
            let json = serde_json::json!({
                "frr_holds": verdict.holds,
                "counterexample": verdict.counterexample.as_ref().map(label),
                "theorem2_preconditions": pre,
                "entropy": mono.map(|m| serde_json::json!({
                    "h1": if m.h1.is_finite() { serde_json::json!(sig6(m.h1)) } else { serde_json::json!("inf") },
                    "h2": if m.h2.is_finite() { serde_json::json!(sig6(m.h2)) } else { serde_json::json!("inf") },
                    "exact": m.exact,
                    "ordering_holds": m.ordering_holds,
                })),
            });
            emit(output.as_deref(), &to_json(&json))?;
            if !verdict.holds {
                bail!("refinement check failed");
            }
            Ok(())
        }
        Command::Report { common, timings } => {
            let r = run(common, cli.no_cache)?;
            if *timings {
                for (stage, secs) in &r.timings {
                    eprintln!("{stage}: {secs:.3} s");
                }
            }
            emit(common.output.as_deref(), &to_json(&r.report()))
        }
        Command::ExportGraph { common, weight_mode } => {
            let r = run(common, cli.no_cache)?;
            let mode = weight_mode.unwrap_or(r.config.entropy.weight_mode);
            emit(common.output.as_deref(), &r.dot(mode))
        }
    }
}
