//! Finite transition systems, continuous-state control systems and the
//! built-in dynamics registry.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{Interval, IntervalBox};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("duplicate identifier `{0}`")]
    Duplicate(String),
    #[error("input component {index} = {value} lies outside [{lo}, {hi}]")]
    InputOutOfRange { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid reach specification: {0}")]
    InvalidSpec(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("trajectory step {step}: {to} is not a successor of ({from}, {input})")]
    InvalidStep { step: usize, from: String, input: String, to: String },
}

/// Read access to a set-valued transition relation over dense state and
/// input indices.
pub trait TransitionSystem: Sync {
    fn state_count(&self) -> usize;
    fn input_count(&self) -> usize;
    /// Clears `out` and fills it with the successors of `(state, input)`.
    fn successors(&self, state: usize, input: usize, out: &mut Vec<usize>);

    fn successor_vec(&self, state: usize, input: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.successors(state, input, &mut out);
        out
    }

    fn state_label(&self, state: usize) -> String {
        state.to_string()
    }

    fn input_label(&self, input: usize) -> String {
        input.to_string()
    }
}

/// Explicit finite system `(X, U, F)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSystem {
    states: Vec<String>,
    inputs: Vec<String>,
    /// Row-major `[state][input]`, each list sorted and deduplicated.
    transitions: Vec<Vec<usize>>,
}

impl FiniteSystem {
    pub fn new<S: Into<String>, U: Into<String>>(
        states: impl IntoIterator<Item = S>,
        inputs: impl IntoIterator<Item = U>,
    ) -> Result<Self, ModelError> {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let inputs: Vec<String> = inputs.into_iter().map(Into::into).collect();
        for names in [&states, &inputs] {
            let mut seen = BTreeSet::new();
            for n in names.iter() {
                if !seen.insert(n) {
                    return Err(ModelError::Duplicate(n.clone()));
                }
            }
        }
        let transitions = vec![Vec::new(); states.len() * inputs.len()];
        Ok(FiniteSystem { states, inputs, transitions })
    }

    /// Anonymous system with states `0..n` and inputs `0..m`.
    pub fn with_sizes(n: usize, m: usize) -> Self {
        FiniteSystem::new((0..n).map(|i| i.to_string()), (0..m).map(|i| i.to_string()))
            .expect("numeric names are unique")
    }

    pub fn from_named_transitions(
        states: &[&str],
        inputs: &[&str],
        transitions: &[(&str, &str, &str)],
    ) -> Result<Self, ModelError> {
        let mut sys = FiniteSystem::new(states.iter().copied(), inputs.iter().copied())?;
        for &(s, u, t) in transitions {
            let (s, u, t) = (sys.state_id(s)?, sys.input_id(u)?, sys.state_id(t)?);
            sys.add_transition(s, u, t)?;
        }
        Ok(sys)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn state_id(&self, name: &str) -> Result<usize, ModelError> {
        self.states.iter().position(|s| s == name).ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn input_id(&self, name: &str) -> Result<usize, ModelError> {
        self.inputs.iter().position(|s| s == name).ok_or_else(|| ModelError::UnknownInput(name.to_string()))
    }

    fn check(&self, state: usize, input: usize) -> Result<usize, ModelError> {
        if state >= self.states.len() {
            return Err(ModelError::UnknownState(state.to_string()));
        }
        if input >= self.inputs.len() {
            return Err(ModelError::UnknownInput(input.to_string()));
        }
        Ok(state * self.inputs.len() + input)
    }

    pub fn add_transition(&mut self, from: usize, input: usize, to: usize) -> Result<(), ModelError> {
        let slot = self.check(from, input)?;
        if to >= self.states.len() {
            return Err(ModelError::UnknownState(to.to_string()));
        }
        let succ = &mut self.transitions[slot];
        if let Err(pos) = succ.binary_search(&to) {
            succ.insert(pos, to);
        }
        Ok(())
    }

    /// Replaces the successor set of `(from, input)`.
    pub fn set_post(
        &mut self,
        from: usize,
        input: usize,
        to: impl IntoIterator<Item = usize>,
    ) -> Result<(), ModelError> {
        let slot = self.check(from, input)?;
        let mut succ: Vec<usize> = to.into_iter().collect();
        succ.sort_unstable();
        succ.dedup();
        if let Some(&bad) = succ.iter().find(|&&t| t >= self.states.len()) {
            return Err(ModelError::UnknownState(bad.to_string()));
        }
        self.transitions[slot] = succ;
        Ok(())
    }

    /// `F(state, input)`; empty when the pair is blocking.
    pub fn post(&self, state: usize, input: usize) -> Result<&[usize], ModelError> {
        let slot = self.check(state, input)?;
        Ok(&self.transitions[slot])
    }

    pub fn post_by_name(&self, state: &str, input: &str) -> Result<BTreeSet<String>, ModelError> {
        let succ = self.post(self.state_id(state)?, self.input_id(input)?)?;
        Ok(succ.iter().map(|&t| self.states[t].clone()).collect())
    }

    /// Image of a state set under one input.
    pub fn post_set<'a>(&self, states: impl IntoIterator<Item = &'a usize>, input: usize) -> BTreeSet<usize> {
        states.into_iter().flat_map(|&s| self.transitions[s * self.inputs.len() + input].iter().copied()).collect()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }
}

impl TransitionSystem for FiniteSystem {
    fn state_count(&self) -> usize {
        self.states.len()
    }

    fn input_count(&self) -> usize {
        self.inputs.len()
    }

    fn successors(&self, state: usize, input: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend_from_slice(&self.transitions[state * self.inputs.len() + input]);
    }

    fn state_label(&self, state: usize) -> String {
        self.states.get(state).cloned().unwrap_or_else(|| state.to_string())
    }

    fn input_label(&self, input: usize) -> String {
        self.inputs.get(input).cloned().unwrap_or_else(|| input.to_string())
    }
}

/// Safe set `Q` and target set `T` over the states of a finite system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteReachSpec {
    pub safe: BTreeSet<usize>,
    pub target: BTreeSet<usize>,
}

impl FiniteReachSpec {
    /// Requires `∅ ≠ T ⊂ Q` strictly.
    pub fn new(safe: BTreeSet<usize>, target: BTreeSet<usize>) -> Result<Self, ModelError> {
        let spec = FiniteReachSpec::allowing_full_target(safe, target)?;
        if spec.safe == spec.target {
            return Err(ModelError::InvalidSpec("T = Q; use allowing_full_target for the trivial case".into()));
        }
        Ok(spec)
    }

    /// Like [`FiniteReachSpec::new`] but accepts the degenerate `T = Q`.
    pub fn allowing_full_target(safe: BTreeSet<usize>, target: BTreeSet<usize>) -> Result<Self, ModelError> {
        if target.is_empty() {
            return Err(ModelError::InvalidSpec("target set is empty".into()));
        }
        if !target.is_subset(&safe) {
            return Err(ModelError::InvalidSpec("target set is not contained in the safe set".into()));
        }
        Ok(FiniteReachSpec { safe, target })
    }

    pub fn from_names(sys: &FiniteSystem, safe: &[&str], target: &[&str]) -> Result<Self, ModelError> {
        let ids = |names: &[&str]| names.iter().map(|n| sys.state_id(n)).collect::<Result<BTreeSet<_>, _>>();
        FiniteReachSpec::allowing_full_target(ids(safe)?, ids(target)?)
    }

    /// `Q \ T`
    pub fn free(&self) -> BTreeSet<usize> {
        self.safe.difference(&self.target).copied().collect()
    }
}

/// A finite run of a finite system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub inputs: Vec<usize>,
}

impl Trajectory {
    pub fn validate(&self, sys: &FiniteSystem) -> Result<(), ModelError> {
        if self.states.len() != self.inputs.len() + 1 {
            return Err(ModelError::Dimension { expected: self.inputs.len() + 1, got: self.states.len() });
        }
        for (k, &u) in self.inputs.iter().enumerate() {
            let (x, y) = (self.states[k], self.states[k + 1]);
            if !sys.post(x, u)?.contains(&y) {
                return Err(ModelError::InvalidStep {
                    step: k,
                    from: sys.state_label(x),
                    input: sys.input_label(u),
                    to: sys.state_label(y),
                });
            }
        }
        Ok(())
    }

    /// Index of the first state outside `safe`, if any.
    pub fn first_exit(&self, safe: &BTreeSet<usize>) -> Option<usize> {
        self.states.iter().position(|s| !safe.contains(s))
    }
}

/// Parameters of the circular-building room temperature model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t_outside: f64,
    pub t_heater: f64,
}

impl Default for RoomParams {
    fn default() -> Self {
        RoomParams { alpha: 0.45, beta: 0.045, gamma: 0.09, t_outside: -1.0, t_heater: 50.0 }
    }
}

/// Heater valve range of the room model.
pub const ROOM_INPUT_RANGE: (f64, f64) = (0.0, 0.6);

/// `x⁺ = A x + B u + c`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineParams {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub c: Vec<f64>,
}

/// Closed registry of dynamics with sound image computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum Dynamics {
    RoomTemperature(RoomParams),
    ScalarLinear,
    Affine(AffineParams),
}

/// The map `x ↦ A x + c` obtained by fixing the input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().zip(&self.c).map(|(row, ci)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + ci).collect()
    }

    /// Interval hull of the image of `b`. Exact, including which faces of
    /// the hull are attained.
    pub fn image(&self, b: &IntervalBox) -> IntervalBox {
        IntervalBox(
            self.a
                .iter()
                .zip(&self.c)
                .map(|(row, &ci)| {
                    let mut iv = Interval::point(ci);
                    for (&aij, x) in row.iter().zip(&b.0) {
                        if aij > 0.0 {
                            iv.lo += aij * x.lo;
                            iv.hi += aij * x.hi;
                            iv.lo_closed &= x.lo_closed;
                            iv.hi_closed &= x.hi_closed;
                        } else if aij < 0.0 {
                            iv.lo += aij * x.hi;
                            iv.hi += aij * x.lo;
                            iv.lo_closed &= x.hi_closed;
                            iv.hi_closed &= x.lo_closed;
                        }
                    }
                    iv
                })
                .collect(),
        )
    }
}

impl Dynamics {
    pub fn name(&self) -> &'static str {
        match self {
            Dynamics::RoomTemperature(_) => "room_temperature",
            Dynamics::ScalarLinear => "scalar_linear",
            Dynamics::Affine(_) => "affine",
        }
    }

    pub fn state_dim(&self, rooms: usize) -> usize {
        match self {
            Dynamics::RoomTemperature(_) => rooms,
            Dynamics::ScalarLinear => 1,
            Dynamics::Affine(p) => p.a.len(),
        }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<(), ModelError> {
        match self {
            Dynamics::RoomTemperature(p) => {
                if n < 2 || m != n {
                    return Err(ModelError::InvalidParams(format!(
                        "room model needs one input per room and at least two rooms (n={n}, m={m})"
                    )));
                }
                if [p.alpha, p.beta, p.gamma, p.t_outside, p.t_heater].iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidParams("non-finite room parameter".into()));
                }
            }
            Dynamics::ScalarLinear => {
                if n != 1 || m != 1 {
                    return Err(ModelError::InvalidParams("scalar model is one-dimensional".into()));
                }
            }
            Dynamics::Affine(p) => {
                let square = p.a.len() == n && p.a.iter().all(|r| r.len() == n);
                let b_ok = p.b.len() == n && p.b.iter().all(|r| r.len() == m);
                let c_ok = p.c.is_empty() || p.c.len() == n;
                if !(square && b_ok && c_ok) {
                    return Err(ModelError::InvalidParams("affine matrices do not match dimensions".into()));
                }
            }
        }
        Ok(())
    }

    /// Fixes the input and returns the resulting affine state map. Room
    /// dynamics additionally check the coordinatewise monotonicity
    /// condition `1 - 2α - β - γ u_i ≥ 0`.
    pub fn affine_map(&self, u: &[f64]) -> Result<AffineMap, ModelError> {
        match self {
            Dynamics::RoomTemperature(p) => {
                let n = u.len();
                check_room_input(u)?;
                let mut a = vec![vec![0.0; n]; n];
                let mut c = vec![0.0; n];
                for i in 0..n {
                    let diag = 1.0 - 2.0 * p.alpha - p.beta - p.gamma * u[i];
                    if diag < 0.0 {
                        return Err(ModelError::InvalidParams(format!(
                            "room model is not monotone: 1 - 2α - β - γ·u[{i}] = {diag}"
                        )));
                    }
                    a[i][i] += diag;
                    a[i][(i + 1) % n] += p.alpha;
                    a[i][(i + n - 1) % n] += p.alpha;
                    c[i] = p.beta * p.t_outside + p.gamma * p.t_heater * u[i];
                }
                Ok(AffineMap { a, c })
            }
            Dynamics::ScalarLinear => {
                if u.len() != 1 {
                    return Err(ModelError::Dimension { expected: 1, got: u.len() });
                }
                Ok(AffineMap { a: vec![vec![0.5]], c: vec![u[0]] })
            }
            Dynamics::Affine(p) => {
                let n = p.a.len();
                let m = p.b.first().map_or(0, Vec::len);
                if u.len() != m {
                    return Err(ModelError::Dimension { expected: m, got: u.len() });
                }
                let c = (0..n)
                    .map(|i| p.b[i].iter().zip(u).map(|(b, v)| b * v).sum::<f64>() + p.c.get(i).copied().unwrap_or(0.0))
                    .collect();
                Ok(AffineMap { a: p.a.clone(), c })
            }
        }
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, ModelError> {
        match self {
            Dynamics::RoomTemperature(p) => eval_room_dynamics(x, u, p),
            Dynamics::ScalarLinear => {
                if x.len() != 1 || u.len() != 1 {
                    return Err(ModelError::Dimension { expected: 1, got: x.len().max(u.len()) });
                }
                Ok(vec![eval_scalar_linear(x[0], u[0])])
            }
            Dynamics::Affine(_) => {
                let map = self.affine_map(u)?;
                if x.len() != map.a.len() {
                    return Err(ModelError::Dimension { expected: map.a.len(), got: x.len() });
                }
                Ok(map.apply(x))
            }
        }
    }
}

fn check_room_input(u: &[f64]) -> Result<(), ModelError> {
    let (lo, hi) = ROOM_INPUT_RANGE;
    for (index, &value) in u.iter().enumerate() {
        if !(lo..=hi).contains(&value) {
            return Err(ModelError::InputOutOfRange { index, value, lo, hi });
        }
    }
    Ok(())
}

/// One step of the circular-building temperature model; room indices wrap.
pub fn eval_room_dynamics(temps: &[f64], u: &[f64], p: &RoomParams) -> Result<Vec<f64>, ModelError> {
    let n = temps.len();
    if u.len() != n {
        return Err(ModelError::Dimension { expected: n, got: u.len() });
    }
    check_room_input(u)?;
    Ok((0..n)
        .map(|i| {
            let t = temps[i];
            let next = temps[(i + 1) % n];
            let prev = temps[(i + n - 1) % n];
            t + p.alpha * (next + prev - 2.0 * t) + p.beta * (p.t_outside - t) + p.gamma * (p.t_heater - t) * u[i]
        })
        .collect())
}

pub fn eval_scalar_linear(x: f64, u: f64) -> f64 {
    0.5 * x + u
}

/// Hyper-rectangle domain plus dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSystem {
    pub dimension: usize,
    pub input_dimension: usize,
    pub dynamics: Dynamics,
    /// Union of closed boxes.
    pub state_domain: Vec<IntervalBox>,
}

impl ContinuousSystem {
    pub fn new(dynamics: Dynamics, input_dimension: usize, state_domain: Vec<IntervalBox>) -> Result<Self, ModelError> {
        let dimension = state_domain.first().map_or(0, IntervalBox::dim);
        if dimension == 0 {
            return Err(ModelError::InvalidParams("state domain is empty".into()));
        }
        for b in &state_domain {
            if b.dim() != dimension {
                return Err(ModelError::Dimension { expected: dimension, got: b.dim() });
            }
            if b.0.iter().any(|iv| !(iv.lo < iv.hi)) {
                return Err(ModelError::InvalidParams("degenerate state domain box".into()));
            }
        }
        dynamics.validate(dimension, input_dimension)?;
        Ok(ContinuousSystem { dimension, input_dimension, dynamics, state_domain })
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.state_domain.iter().any(|b| b.contains(x))
    }
}

/// `Q` and `T` as unions of closed boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxReachSpec {
    pub safe: Vec<IntervalBox>,
    pub target: Vec<IntervalBox>,
}

impl BoxReachSpec {
    pub fn new(safe: Vec<IntervalBox>, target: Vec<IntervalBox>) -> Result<Self, ModelError> {
        if safe.is_empty() || target.is_empty() {
            return Err(ModelError::InvalidSpec("Q and T must be non-empty".into()));
        }
        if !target.iter().all(|t| t.is_covered_by(&safe)) {
            return Err(ModelError::InvalidSpec("T is not contained in Q".into()));
        }
        Ok(BoxReachSpec { safe, target })
    }

    pub fn in_safe(&self, x: &[f64]) -> bool {
        self.safe.iter().any(|b| b.contains(x))
    }

    pub fn in_target(&self, x: &[f64]) -> bool {
        self.target.iter().any(|b| b.contains(x))
    }
}

/// Built-in instances used throughout the examples and tests.
pub mod models {
    use super::*;

    /// Four states, two inputs: `0 -a-> 1`, `0 -b-> 3`, `2 -b-> 1`, `2 -a-> 3`.
    pub fn example1() -> (FiniteSystem, FiniteReachSpec) {
        let sys = FiniteSystem::from_named_transitions(
            &["0", "1", "2", "3"],
            &["a", "b"],
            &[("0", "a", "1"), ("0", "b", "3"), ("2", "b", "1"), ("2", "a", "3")],
        )
        .expect("well-formed");
        let spec = FiniteReachSpec::from_names(&sys, &["0", "1", "2"], &["1"]).expect("well-formed");
        (sys, spec)
    }

    /// `x⁺ = 0.5x + u` on ℝ with `Q = [0,1.4] ∪ [2,6]`, `T = [0,1.4]`.
    pub fn example2() -> (ContinuousSystem, BoxReachSpec) {
        let sys = ContinuousSystem::new(Dynamics::ScalarLinear, 1, vec![IntervalBox::closed(&[-1e6], &[1e6])])
            .expect("well-formed");
        let spec = BoxReachSpec::new(
            vec![IntervalBox::closed(&[0.0], &[1.4]), IntervalBox::closed(&[2.0], &[6.0])],
            vec![IntervalBox::closed(&[0.0], &[1.4])],
        )
        .expect("well-formed");
        (sys, spec)
    }

    pub const EXAMPLE2_INPUTS: [f64; 2] = [-0.5, 0.75];

    /// Three rooms, `Q = [17.4,24]³`, `T = [22,24]³`.
    pub fn example3() -> (ContinuousSystem, BoxReachSpec) {
        let q = IntervalBox::closed(&[17.4; 3], &[24.0; 3]);
        let t = IntervalBox::closed(&[22.0; 3], &[24.0; 3]);
        let sys = ContinuousSystem::new(Dynamics::RoomTemperature(RoomParams::default()), 3, vec![q.clone()])
            .expect("well-formed");
        (sys, BoxReachSpec::new(vec![q], vec![t]).expect("well-formed"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example1_post() {
        let (sys, _) = models::example1();
        assert_eq!(sys.post_by_name("0", "a").unwrap(), BTreeSet::from(["1".to_string()]));
        assert_eq!(sys.post_by_name("0", "b").unwrap(), BTreeSet::from(["3".to_string()]));
        assert!(sys.post_by_name("1", "a").unwrap().is_empty());
        assert_eq!(sys.post_by_name("9", "a"), Err(ModelError::UnknownState("9".into())));
        assert_eq!(sys.post(0, 7), Err(ModelError::UnknownInput("7".into())));
    }

    #[test]
    fn room_dynamics_values() {
        let p = RoomParams::default();
        let c = 7.5;
        let eq = RoomParams { t_outside: c, ..p.clone() };
        assert_eq!(eval_room_dynamics(&[c; 3], &[0.0; 3], &eq).unwrap(), vec![c; 3]);

        let y = eval_room_dynamics(&[20.0; 3], &[0.0; 3], &p).unwrap();
        for v in y {
            assert!((v - 19.055).abs() < 1e-12);
        }
        let y = eval_room_dynamics(&[20.0; 3], &[0.6; 3], &p).unwrap();
        for v in y {
            assert!((v - 20.675).abs() < 1e-12);
        }
        assert!(matches!(
            eval_room_dynamics(&[20.0; 3], &[0.0, 0.7, 0.0], &p),
            Err(ModelError::InputOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn scalar_values() {
        assert_eq!(eval_scalar_linear(0.0, 0.0), 0.0);
        assert_eq!(eval_scalar_linear(6.0, 0.75), 3.75);
        assert_eq!(eval_scalar_linear(2.0, -0.5), 0.5);
    }

    #[test]
    fn trajectory_validation() {
        let (sys, spec) = models::example1();
        let ok = Trajectory { states: vec![0, 1], inputs: vec![0] };
        assert!(ok.validate(&sys).is_ok());
        let bad = Trajectory { states: vec![0, 1], inputs: vec![1] };
        assert!(matches!(bad.validate(&sys), Err(ModelError::InvalidStep { step: 0, .. })));
        let exits = Trajectory { states: vec![0, 3], inputs: vec![1] };
        assert_eq!(exits.first_exit(&spec.safe), Some(1));
    }

    #[test]
    fn spec_rules() {
        let q: BTreeSet<usize> = [0, 1, 2].into();
        assert!(FiniteReachSpec::new(q.clone(), q.clone()).is_err());
        assert!(FiniteReachSpec::allowing_full_target(q.clone(), q.clone()).is_ok());
        assert!(FiniteReachSpec::new(q, [5].into()).is_err());
    }

    #[test]
    fn room_affine_matches_eval() {
        let d = Dynamics::RoomTemperature(RoomParams::default());
        let u = [0.1, 0.35, 0.6];
        let x = [18.0, 21.5, 23.0];
        let map = d.affine_map(&u).unwrap();
        let a = map.apply(&x);
        let b = d.eval(&x, &u).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn non_monotone_room_rejected() {
        let d = Dynamics::RoomTemperature(RoomParams { alpha: 0.5, ..RoomParams::default() });
        assert!(d.affine_map(&[0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn room_monotone_per_coordinate(
            x in proptest::collection::vec(17.4f64..24.0, 3),
            u in proptest::collection::vec(0.0f64..=0.6, 3),
            k in 0usize..3,
            d in 0.0f64..2.0,
        ) {
            let p = RoomParams::default();
            let mut bumped = x.clone();
            bumped[k] += d;
            let lo = eval_room_dynamics(&x, &u, &p).unwrap();
            let hi = eval_room_dynamics(&bumped, &u, &p).unwrap();
            for i in 0..3 {
                prop_assert!(hi[i] >= lo[i] - 1e-12);
            }
        }

        #[test]
        fn scalar_is_affine(x1 in -10.0f64..10.0, x2 in -10.0f64..10.0, u in -1.0f64..1.0, l in 0.0f64..=1.0) {
            let lhs = eval_scalar_linear(l * x1 + (1.0 - l) * x2, u);
            let rhs = l * eval_scalar_linear(x1, u) + (1.0 - l) * eval_scalar_linear(x2, u);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
