use std::path::PathBuf;

use reach_entropy::abstraction::{build_abstraction, CellLayout, InputSet};
use reach_entropy::config::Config;
use reach_entropy::interval::{Interval, IntervalBox};
use reach_entropy::pipeline::{run_pipeline, RunOptions};
use reach_entropy::report::to_json;
use reach_entropy::synthesis::{check_reachability_satisfiable, synthesize};
use reach_entropy::system::{models, TransitionSystem};

fn example2_layout() -> CellLayout {
    CellLayout::Explicit(vec![
        IntervalBox(vec![Interval { lo: 3.75, hi: 6.0, lo_closed: false, hi_closed: true }]),
        IntervalBox::closed(&[2.0], &[3.75]),
        IntervalBox::closed(&[0.0], &[1.4]),
    ])
}

fn load(name: &str) -> Config {
    Config::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

#[test]
fn example2_transitions() {
    let (sys, spec) = models::example2();
    let inputs = InputSet::explicit(vec![vec![-0.5], vec![0.75]]);
    let abs = build_abstraction(&sys, &spec, example2_layout(), inputs).unwrap();
    let mut buf = Vec::new();
    abs.successors(0, 1, &mut buf);
    assert_eq!(buf, vec![1]);
    abs.successors(1, 0, &mut buf);
    assert_eq!(buf, vec![2]);
    assert_eq!(abs.image(1, 0), IntervalBox::closed(&[0.5], &[1.375]));
}

#[test]
fn example2_with_only_the_larger_input() {
    let (sys, spec) = models::example2();
    let abs = build_abstraction(&sys, &spec, example2_layout(), InputSet::explicit(vec![vec![0.75]])).unwrap();
    // [2,3.75] maps to [1.75,2.625], which meets the gap between the safe sets
    assert_eq!(abs.image(1, 0), IntervalBox::closed(&[1.75], &[2.625]));
    let (q, t) = (abs.q_cells(), abs.t_cells());
    let ctl = synthesize(&abs, &q, &t).unwrap();
    let sat = check_reachability_satisfiable(&ctl, &q, &t);
    assert!(!sat.satisfied);
    // the upper cell only reaches the lower one, which is lost itself
    assert_eq!(sat.uncovered, vec![0, 1]);
}

#[test]
fn config_runs_match_direct_computation() {
    let opts = RunOptions { use_cache: false, coarsen: None };
    let r = run_pipeline(&load("example2.toml"), &opts).unwrap();
    assert_eq!(r.outcome.controller.value.values().copied().collect::<Vec<_>>(), vec![2, 1]);
    assert_eq!(r.outcome.include.value, 1.0);
    assert_eq!(r.partition_csv().lines().count(), 7);
    assert_eq!(to_json(&r.report()), to_json(&run_pipeline(&load("example2.toml"), &opts).unwrap().report()));

    let r = run_pipeline(&load("example1.toml"), &opts).unwrap();
    assert!(r.outcome.satisfiability.satisfied);
    assert_eq!(r.outcome.partition.len(), 2);
    assert!(!r.outcome.fallback_triggered);
}
