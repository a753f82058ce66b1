use reach_entropy::abstraction::{CellLayout, InputSet};
use reach_entropy::cache::{cache_key, load_or_build, CACHE_ENV};
use reach_entropy::interval::{Interval, IntervalBox};
use reach_entropy::system::models;

#[test]
fn abstraction_round_trips_through_the_cache() {
    let dir = std::env::temp_dir().join(format!("reach-entropy-cache-test-{}", std::process::id()));
    std::env::set_var(CACHE_ENV, &dir);
    let (sys, spec) = models::example2();
    let layout = CellLayout::Explicit(vec![
        IntervalBox(vec![Interval { lo: 3.75, hi: 6.0, lo_closed: false, hi_closed: true }]),
        IntervalBox::closed(&[2.0], &[3.75]),
        IntervalBox::closed(&[0.0], &[1.4]),
    ]);
    let inputs = InputSet::explicit(models::EXAMPLE2_INPUTS.iter().map(|&u| vec![u]).collect());

    let first = load_or_build(&sys, &spec, layout.clone(), inputs.clone(), true).unwrap();
    assert!(!first.from_cache);
    let second = load_or_build(&sys, &spec, layout.clone(), inputs.clone(), true).unwrap();
    assert!(second.from_cache);
    assert_eq!(first.transition_count, second.transition_count);
    assert_eq!(first.abstraction.q_cells(), second.abstraction.q_cells());
    assert_eq!(first.abstraction.t_cells(), second.abstraction.t_cells());

    let bypass = load_or_build(&sys, &spec, layout.clone(), inputs.clone(), false).unwrap();
    assert!(!bypass.from_cache);

    let other = InputSet::explicit(vec![vec![0.75]]);
    assert_ne!(cache_key(&sys, &spec, &layout, &inputs), cache_key(&sys, &spec, &layout, &other));
    std::fs::remove_dir_all(&dir).ok();
}
