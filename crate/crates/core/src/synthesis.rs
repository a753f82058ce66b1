//! Reach-while-stay controller synthesis by a backward fixed point.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::system::TransitionSystem;

#[derive(Debug, Error, PartialEq)]
pub enum SynthesisError {
    #[error("target cells are not contained in the safe cells")]
    TargetOutsideSafe,
    #[error("cell {0} is not a state of the system")]
    UnknownCell(usize),
}

/// Memoryless controller `C : B → U` with its fixed-point entry steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReachController {
    pub assignment: BTreeMap<usize, usize>,
    /// Iteration at which each controlled cell entered the attractor (≥ 1).
    pub value: BTreeMap<usize, u32>,
    pub iterations: u32,
}

impl ReachController {
    pub fn domain(&self) -> BTreeSet<usize> {
        self.assignment.keys().copied().collect()
    }

    pub fn domain_size(&self) -> usize {
        self.assignment.len()
    }

    pub fn max_value(&self) -> u32 {
        self.value.values().copied().max().unwrap_or(0)
    }

    pub fn input(&self, cell: usize) -> Option<usize> {
        self.assignment.get(&cell).copied()
    }

    /// Checks the value-decrease certificate: every successor under the
    /// assigned input is a target cell or a controlled cell of strictly
    /// smaller value. Returns the first offending cell.
    pub fn check_certificate<S: TransitionSystem + ?Sized>(
        &self,
        sys: &S,
        t_cells: &BTreeSet<usize>,
    ) -> Result<(), usize> {
        let mut buf = Vec::new();
        for (&c, &u) in &self.assignment {
            sys.successors(c, u, &mut buf);
            let v = self.value[&c];
            let ok =
                !buf.is_empty() && buf.iter().all(|s| t_cells.contains(s) || self.value.get(s).is_some_and(|&w| w < v));
            if !ok {
                return Err(c);
            }
        }
        Ok(())
    }

    /// CSV rows `cell,input,value` with caller-supplied labels.
    pub fn to_csv(&self, cell_label: impl Fn(usize) -> String, input_label: impl Fn(usize) -> String) -> String {
        let mut out = String::from("cell,input,value\n");
        for (&c, &u) in &self.assignment {
            out.push_str(&format!("\"{}\",\"{}\",{}\n", cell_label(c), input_label(u), self.value[&c]));
        }
        out
    }
}

/// Minimal fixed point `W₀ = T`, `W_{k+1} = W_k ∪ {c ∈ Q \ T | ∃u: ∅ ≠ F(c,u) ⊆ W_k}`.
/// Among witnessing inputs the lowest index wins.
pub fn synthesize<S: TransitionSystem + ?Sized>(
    sys: &S,
    q_cells: &BTreeSet<usize>,
    t_cells: &BTreeSet<usize>,
) -> Result<ReachController, SynthesisError> {
    if !t_cells.is_subset(q_cells) {
        return Err(SynthesisError::TargetOutsideSafe);
    }
    if let Some(&c) = q_cells.iter().find(|&&c| c >= sys.state_count()) {
        return Err(SynthesisError::UnknownCell(c));
    }
    let mut winning = vec![false; sys.state_count()];
    for &t in t_cells {
        winning[t] = true;
    }
    let mut pending: Vec<usize> = q_cells.difference(t_cells).copied().collect();
    let mut assignment = BTreeMap::new();
    let mut value = BTreeMap::new();
    let mut iteration = 0u32;
    loop {
        let snapshot = &winning;
        let won: Vec<(usize, usize)> = pending
            .par_iter()
            .map_init(Vec::new, |buf, &c| {
                (0..sys.input_count())
                    .find(|&u| {
                        sys.successors(c, u, buf);
                        !buf.is_empty() && buf.iter().all(|&s| snapshot[s])
                    })
                    .map(|u| (c, u))
            })
            .flatten()
            .collect();
        if won.is_empty() {
            break;
        }
        iteration += 1;
        for &(c, u) in &won {
            winning[c] = true;
            assignment.insert(c, u);
            value.insert(c, iteration);
        }
        pending.retain(|c| !winning[*c]);
    }
    Ok(ReachController { assignment, value, iterations: iteration })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Satisfiability {
    pub satisfied: bool,
    pub uncovered: Vec<usize>,
}

/// Reachability holds on all of `Q` iff `domain ∪ T ⊇ Q`.
pub fn check_reachability_satisfiable(
    controller: &ReachController,
    q_cells: &BTreeSet<usize>,
    t_cells: &BTreeSet<usize>,
) -> Satisfiability {
    let uncovered: Vec<usize> =
        q_cells.iter().copied().filter(|c| !t_cells.contains(c) && !controller.assignment.contains_key(c)).collect();
    Satisfiability { satisfied: uncovered.is_empty(), uncovered }
}
