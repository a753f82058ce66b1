//! Grouping controller cells that share a control input, and the
//! set-valued successor map `D` on the resulting partition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::synthesis::ReachController;
use crate::system::TransitionSystem;

#[derive(Debug, Error, PartialEq)]
pub enum CoarsenError {
    #[error("controller domain is empty")]
    EmptyDomain,
    #[error("cell {cell} reaches {successor}, which is neither a target cell nor in the partition")]
    Inconsistent { cell: usize, successor: usize },
    #[error("unknown coarsening mode `{0}` (expected input, input-value or none)")]
    UnknownMode(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoarsenMode {
    /// One group per cell.
    None,
    ByInput,
    ByInputAndValue,
}

impl fmt::Display for CoarsenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoarsenMode::None => "none",
            CoarsenMode::ByInput => "input",
            CoarsenMode::ByInputAndValue => "input-value",
        })
    }
}

impl FromStr for CoarsenMode {
    type Err = CoarsenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(CoarsenMode::None),
            "input" | "by-input" => Ok(CoarsenMode::ByInput),
            "input-value" | "by-input-and-value" => Ok(CoarsenMode::ByInputAndValue),
            other => Err(CoarsenError::UnknownMode(other.to_string())),
        }
    }
}

/// Partition of the controller domain with one input per group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoarsePartition {
    /// Groups ordered by their smallest cell; cells sorted.
    pub groups: Vec<Vec<usize>>,
    pub group_input: Vec<usize>,
    pub group_of: BTreeMap<usize, usize>,
    pub mode: CoarsenMode,
}

impl CoarsePartition {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// CSV `cell,group` followed by `group,input`.
    pub fn to_csv(&self, cell_label: impl Fn(usize) -> String, input_label: impl Fn(usize) -> String) -> String {
        let mut out = String::from("cell,group\n");
        for (&c, &g) in &self.group_of {
            out.push_str(&format!("\"{}\",{g}\n", cell_label(c)));
        }
        out.push_str("\ngroup,input\n");
        for (g, &u) in self.group_input.iter().enumerate() {
            out.push_str(&format!("{g},\"{}\"\n", input_label(u)));
        }
        out
    }
}

pub fn coarsen(controller: &ReachController, mode: CoarsenMode) -> Result<CoarsePartition, CoarsenError> {
    if controller.assignment.is_empty() {
        return Err(CoarsenError::EmptyDomain);
    }
    let mut classes: BTreeMap<(usize, u32, usize), Vec<usize>> = BTreeMap::new();
    for (&c, &u) in &controller.assignment {
        let key = match mode {
            CoarsenMode::None => (u, 0, c),
            CoarsenMode::ByInput => (u, 0, 0),
            CoarsenMode::ByInputAndValue => (u, controller.value[&c], 0),
        };
        classes.entry(key).or_default().push(c);
    }
    let mut groups: Vec<(usize, Vec<usize>)> = classes.into_iter().map(|((u, _, _), cells)| (u, cells)).collect();
    groups.sort_by_key(|(_, cells)| cells[0]);
    let mut group_of = BTreeMap::new();
    for (g, (_, cells)) in groups.iter().enumerate() {
        for &c in cells {
            group_of.insert(c, g);
        }
    }
    let group_input = groups.iter().map(|(u, _)| *u).collect();
    let groups = groups.into_iter().map(|(_, cells)| cells).collect();
    Ok(CoarsePartition { groups, group_input, group_of, mode })
}

/// `D(g)`: the groups met by the image of `g` under its input, and whether
/// the target is met.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DMap {
    pub successors: Vec<BTreeSet<usize>>,
    pub to_target: Vec<bool>,
}

impl DMap {
    pub fn len(&self) -> usize {
        self.successors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.successors.is_empty()
    }
}

pub fn coarse_d_map<S: TransitionSystem + ?Sized>(
    sys: &S,
    partition: &CoarsePartition,
    t_cells: &BTreeSet<usize>,
) -> Result<DMap, CoarsenError> {
    let mut successors = vec![BTreeSet::new(); partition.len()];
    let mut to_target = vec![false; partition.len()];
    let mut buf = Vec::new();
    for (g, cells) in partition.groups.iter().enumerate() {
        let u = partition.group_input[g];
        for &c in cells {
            sys.successors(c, u, &mut buf);
            for &s in &buf {
                if t_cells.contains(&s) {
                    to_target[g] = true;
                } else if let Some(&h) = partition.group_of.get(&s) {
                    successors[g].insert(h);
                } else {
                    return Err(CoarsenError::Inconsistent { cell: c, successor: s });
                }
            }
        }
    }
    Ok(DMap { successors, to_target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::synthesize;
    use crate::system::{models, FiniteSystem};

    #[test]
    fn example1_groups() {
        let (sys, spec) = models::example1();
        let ctrl = synthesize(&sys, &spec.safe, &spec.target).unwrap();
        let p = coarsen(&ctrl, CoarsenMode::ByInput).unwrap();
        assert_eq!(p.groups, vec![vec![0], vec![2]]);
        let d = coarse_d_map(&sys, &p, &spec.target).unwrap();
        assert_eq!(d.to_target, vec![true, true]);
        assert!(d.successors.iter().all(BTreeSet::is_empty));
    }

    #[test]
    fn distinct_inputs_give_singletons() {
        let ctrl = ReachController {
            assignment: BTreeMap::from([(0, 0), (1, 1), (2, 2)]),
            value: BTreeMap::from([(0, 1), (1, 1), (2, 1)]),
            iterations: 1,
        };
        let p = coarsen(&ctrl, CoarsenMode::ByInput).unwrap();
        assert_eq!(p.groups, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(p.group_input, vec![0, 1, 2]);
    }

    #[test]
    fn modes_refine() {
        // chain 2 -> 1 -> 0 all under input a; 3 -> 0 under b
        let sys = FiniteSystem::from_named_transitions(
            &["0", "1", "2", "3"],
            &["a", "b"],
            &[("1", "a", "0"), ("2", "a", "1"), ("3", "b", "0")],
        )
        .unwrap();
        let ctrl = synthesize(&sys, &[0, 1, 2, 3].into(), &[0].into()).unwrap();
        let by_input = coarsen(&ctrl, CoarsenMode::ByInput).unwrap();
        let by_value = coarsen(&ctrl, CoarsenMode::ByInputAndValue).unwrap();
        assert_eq!(by_input.groups, vec![vec![1, 2], vec![3]]);
        assert_eq!(by_value.groups, vec![vec![1], vec![2], vec![3]]);
        // every input-value group sits inside one input group
        for g in &by_value.groups {
            let owner = by_input.group_of[&g[0]];
            assert!(g.iter().all(|c| by_input.group_of[c] == owner));
        }
        // merging 1 and 2 creates a self-loop in D
        let d = coarse_d_map(&sys, &by_input, &[0].into()).unwrap();
        assert!(d.successors[0].contains(&0));
    }

    #[test]
    fn single_group_into_target() {
        let sys = FiniteSystem::from_named_transitions(&["0", "1", "2"], &["a"], &[("1", "a", "0"), ("2", "a", "0")])
            .unwrap();
        let ctrl = synthesize(&sys, &[0, 1, 2].into(), &[0].into()).unwrap();
        let p = coarsen(&ctrl, CoarsenMode::ByInput).unwrap();
        let d = coarse_d_map(&sys, &p, &[0].into()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(d.to_target, vec![true]);
        assert!(d.successors[0].is_empty());
    }

    #[test]
    fn empty_domain_rejected() {
        let ctrl = ReachController { assignment: BTreeMap::new(), value: BTreeMap::new(), iterations: 0 };
        assert_eq!(coarsen(&ctrl, CoarsenMode::ByInput), Err(CoarsenError::EmptyDomain));
    }
}
