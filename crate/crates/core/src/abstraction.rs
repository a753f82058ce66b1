//! Finite abstractions of continuous systems over a cell layout.
//!
//! The quantizer maps every point of the layout to exactly one cell, and
//! every cell not inside `Q` (as well as everything outside the layout) to
//! a single `unsafe` sink. Abstract successors of `(cell, u)` are the cells
//! meeting the exact interval hull of the cell's image, plus the sink
//! whenever that hull is not inside the union of safe cells. This makes the
//! quantizer a feedback refinement relation with the identity input map.
//!
//! Transitions are not stored: they are recomputed on demand from the
//! per-input affine maps, which keeps fine input grids tractable.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{Interval, IntervalBox};
use crate::system::{
    BoxReachSpec, ContinuousSystem, Dynamics, FiniteReachSpec, FiniteSystem, ModelError, TransitionSystem,
};

/// Grid positions within this many cell widths of a grid line are treated
/// as lying on it.
pub const SNAP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AbstractionError {
    #[error("degenerate grid bounds on axis {axis}: [{lo}, {hi}]")]
    DegenerateBounds { axis: usize, lo: f64, hi: f64 },
    #[error("cell width on axis {axis} must be positive, got {eta}")]
    NonPositiveEta { axis: usize, eta: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point {0:?} lies outside the grid")]
    OutOfDomain(Vec<f64>),
    #[error("no cell lies entirely inside the target set")]
    EmptyTarget,
    #[error("explicit cells {0} and {1} overlap")]
    OverlappingCells(usize, usize),
    #[error("input set is empty")]
    NoInputs,
    #[error("abstraction is unsound for this model: {0}")]
    Soundness(#[from] ModelError),
}

/// Uniform grid anchored at `lower`; the last cell per axis is clipped to
/// `upper` and closed there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eta: Vec<f64>,
    pub counts: Vec<usize>,
}

fn snapped(p: f64) -> Option<i64> {
    let r = p.round();
    ((p - r).abs() <= SNAP).then_some(r as i64)
}

impl Grid {
    pub fn new(lower: &[f64], upper: &[f64], eta: &[f64]) -> Result<Self, AbstractionError> {
        if upper.len() != lower.len() || eta.len() != lower.len() {
            return Err(AbstractionError::Dimension { expected: lower.len(), got: upper.len().min(eta.len()) });
        }
        let mut counts = Vec::with_capacity(lower.len());
        for axis in 0..lower.len() {
            let (lo, hi, e) = (lower[axis], upper[axis], eta[axis]);
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(AbstractionError::DegenerateBounds { axis, lo, hi });
            }
            if !(e > 0.0) || !e.is_finite() {
                return Err(AbstractionError::NonPositiveEta { axis, eta: e });
            }
            let span = (hi - lo) / e;
            let n = match snapped(span) {
                Some(k) => k.max(1) as usize,
                None => span.ceil() as usize,
            };
            counts.push(n);
        }
        Ok(Grid { lower: lower.to_vec(), upper: upper.to_vec(), eta: eta.to_vec(), counts })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Grid line `k` on `axis`; line `counts[axis]` is the upper face.
    pub fn line(&self, axis: usize, k: usize) -> f64 {
        if k >= self.counts[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + k as f64 * self.eta[axis]
        }
    }

    pub fn axis_cell(&self, axis: usize, k: usize) -> Interval {
        let last = k + 1 == self.counts[axis];
        Interval { lo: self.line(axis, k), hi: self.line(axis, k + 1), lo_closed: true, hi_closed: last }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut multi = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            multi[axis] = flat % self.counts[axis];
            flat /= self.counts[axis];
        }
        multi
    }

    pub fn cell_box(&self, flat: usize) -> IntervalBox {
        IntervalBox(self.multi_index(flat).iter().enumerate().map(|(axis, &k)| self.axis_cell(axis, k)).collect())
    }

    fn position(&self, axis: usize, x: f64) -> f64 {
        (x - self.lower[axis]) / self.eta[axis]
    }

    fn upper_position(&self, axis: usize) -> f64 {
        self.position(axis, self.upper[axis])
    }

    fn axis_index(&self, axis: usize, x: f64) -> Option<usize> {
        let p = self.position(axis, x);
        let top = self.upper_position(axis);
        if p < -SNAP || p > top + SNAP {
            return None;
        }
        let k = match snapped(p) {
            Some(k) => k.max(0) as usize,
            None => p.floor() as usize,
        };
        Some(k.min(self.counts[axis] - 1))
    }

    /// The unique cell whose half-open box contains `x`.
    pub fn quantize(&self, x: &[f64]) -> Result<usize, AbstractionError> {
        if x.len() != self.dim() {
            return Err(AbstractionError::Dimension { expected: self.dim(), got: x.len() });
        }
        let multi = (0..self.dim())
            .map(|axis| self.axis_index(axis, x[axis]))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| AbstractionError::OutOfDomain(x.to_vec()))?;
        Ok(self.flat_index(&multi))
    }

    /// Cells on `axis` met by `iv`, and whether `iv` leaves the grid.
    pub fn axis_range(&self, axis: usize, iv: &Interval) -> (Option<(usize, usize)>, bool) {
        if iv.is_empty() {
            return (None, false);
        }
        let top = self.upper_position(axis);
        let pa = self.position(axis, iv.lo);
        let pb = self.position(axis, iv.hi);
        let exits = pa < -SNAP || pb > top + SNAP;
        if pb < -SNAP || pa > top + SNAP {
            return (None, exits);
        }
        let last = self.counts[axis] - 1;
        let lo = if pa <= 0.0 {
            0
        } else {
            match snapped(pa) {
                Some(k) => k.max(0) as usize,
                None => pa.floor() as usize,
            }
        };
        let hi = if pb > top + SNAP {
            last
        } else {
            match snapped(pb) {
                Some(k) if iv.hi_closed => k.max(0) as usize,
                // open right end on grid line k stops in cell k - 1
                Some(k) if k <= 0 => return (None, exits),
                Some(k) => (k - 1) as usize,
                None => pb.floor() as usize,
            }
        };
        let (lo, hi) = (lo.min(last), hi.min(last));
        if lo > hi {
            (None, exits)
        } else {
            (Some((lo, hi)), exits)
        }
    }

    /// Moves `v` onto grid line `k` of `axis` when it lies within [`SNAP`].
    pub fn snap_value(&self, axis: usize, v: f64) -> f64 {
        match snapped(self.position(axis, v)) {
            Some(k) if k >= 0 && (k as usize) <= self.counts[axis] => self.line(axis, k as usize),
            _ if (v - self.upper[axis]).abs() <= SNAP * self.eta[axis] => self.upper[axis],
            _ => v,
        }
    }
}

/// `build_grid`: uniform grid over a closed box.
pub fn build_grid(bounds: &IntervalBox, eta: &[f64]) -> Result<Grid, AbstractionError> {
    Grid::new(&bounds.lower_corner(), &bounds.upper_corner(), eta)
}

/// Finite input alphabet of a continuous system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSet {
    pub values: Vec<Vec<f64>>,
}

impl InputSet {
    pub fn explicit(values: Vec<Vec<f64>>) -> Self {
        InputSet { values }
    }

    /// Cell centres of a uniform grid over `[lower, upper]`, in row-major
    /// order (the first component varies slowest).
    pub fn grid_centres(lower: &[f64], upper: &[f64], eta: &[f64]) -> Result<Self, AbstractionError> {
        let grid = Grid::new(lower, upper, eta)?;
        let values = (0..grid.cell_count())
            .map(|flat| {
                grid.multi_index(flat)
                    .iter()
                    .enumerate()
                    .map(|(axis, &k)| {
                        let iv = grid.axis_cell(axis, k);
                        0.5 * (iv.lo + iv.hi)
                    })
                    .collect()
            })
            .collect();
        Ok(InputSet { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self, u: usize) -> String {
        let v = &self.values[u];
        if v.len() == 1 {
            format!("{}", v[0])
        } else {
            format!("({})", v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","))
        }
    }
}

/// Sound image of a box under one input.
pub fn overapprox_image(dynamics: &Dynamics, cell: &IntervalBox, u: &[f64]) -> Result<IntervalBox, AbstractionError> {
    let map = dynamics.affine_map(u)?;
    if map.a.len() != cell.dim() {
        return Err(AbstractionError::Dimension { expected: map.a.len(), got: cell.dim() });
    }
    Ok(map.image(cell))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellLayout {
    Uniform(Grid),
    /// Pairwise disjoint boxes given by hand.
    Explicit(Vec<IntervalBox>),
}

impl CellLayout {
    pub fn cell_count(&self) -> usize {
        match self {
            CellLayout::Uniform(g) => g.cell_count(),
            CellLayout::Explicit(cells) => cells.len(),
        }
    }

    pub fn cell_box(&self, cell: usize) -> IntervalBox {
        match self {
            CellLayout::Uniform(g) => g.cell_box(cell),
            CellLayout::Explicit(cells) => cells[cell].clone(),
        }
    }

    pub fn quantize(&self, x: &[f64]) -> Result<usize, AbstractionError> {
        match self {
            CellLayout::Uniform(g) => g.quantize(x),
            CellLayout::Explicit(cells) => {
                cells.iter().position(|c| c.contains(x)).ok_or_else(|| AbstractionError::OutOfDomain(x.to_vec()))
            }
        }
    }
}

/// A finite abstraction together with its quantization relation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridAbstraction {
    #[serde(with = "embedded_json")]
    pub system: ContinuousSystem,
    pub layout: CellLayout,
    pub inputs: InputSet,
    maps: Vec<crate::system::AffineMap>,
    cell_boxes: Vec<IntervalBox>,
    safe: Vec<bool>,
    target: Vec<bool>,
}

/// The tagged model enum needs a self-describing format, so binary
/// encodings carry it as a JSON string.
mod embedded_json {
    use serde::de::Error as _;
    use serde::ser::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::system::ContinuousSystem;

    pub fn serialize<S: Serializer>(sys: &ContinuousSystem, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&serde_json::to_string(sys).map_err(S::Error::custom)?)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ContinuousSystem, D::Error> {
        serde_json::from_str(&String::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Abstract states are cell indices; the sink follows the last cell.
impl GridAbstraction {
    pub fn cell_count(&self) -> usize {
        self.cell_boxes.len()
    }

    pub fn sink(&self) -> usize {
        self.cell_count()
    }

    pub fn q_cells(&self) -> BTreeSet<usize> {
        (0..self.cell_count()).filter(|&c| self.safe[c]).collect()
    }

    pub fn t_cells(&self) -> BTreeSet<usize> {
        (0..self.cell_count()).filter(|&c| self.target[c]).collect()
    }

    pub fn is_safe_cell(&self, c: usize) -> bool {
        c < self.safe.len() && self.safe[c]
    }

    pub fn is_target_cell(&self, c: usize) -> bool {
        c < self.target.len() && self.target[c]
    }

    pub fn cell_box(&self, c: usize) -> &IntervalBox {
        &self.cell_boxes[c]
    }

    /// The quantization relation: the safe cell containing `x`, or the sink.
    pub fn relate(&self, x: &[f64]) -> usize {
        match self.layout.quantize(x) {
            Ok(c) if self.safe[c] => c,
            _ => self.sink(),
        }
    }

    pub fn eval(&self, x: &[f64], u: usize) -> Vec<f64> {
        self.maps[u].apply(x)
    }

    pub fn image(&self, cell: usize, u: usize) -> IntervalBox {
        self.maps[u].image(&self.cell_boxes[cell])
    }

    /// Successor cells of an image box; `true` when the sink is reached.
    fn cells_meeting(&self, image: &IntervalBox, out: &mut Vec<usize>) -> bool {
        match &self.layout {
            CellLayout::Uniform(grid) => {
                let mut ranges = Vec::with_capacity(grid.dim());
                let mut unsafe_ = false;
                for (axis, iv) in image.0.iter().enumerate() {
                    let (range, exits) = grid.axis_range(axis, iv);
                    unsafe_ |= exits;
                    match range {
                        Some(r) => ranges.push(r),
                        None => return true,
                    }
                }
                let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                loop {
                    let c = grid.flat_index(&multi);
                    if self.safe[c] {
                        out.push(c);
                    } else {
                        unsafe_ = true;
                    }
                    let mut axis = grid.dim();
                    loop {
                        if axis == 0 {
                            return unsafe_;
                        }
                        axis -= 1;
                        if multi[axis] < ranges[axis].1 {
                            multi[axis] += 1;
                            break;
                        }
                        multi[axis] = ranges[axis].0;
                    }
                }
            }
            CellLayout::Explicit(_) => {
                let mut safe_boxes = Vec::new();
                for (c, b) in self.cell_boxes.iter().enumerate() {
                    if self.safe[c] {
                        safe_boxes.push(b);
                        if b.intersects(image) {
                            out.push(c);
                        }
                    }
                }
                !image.is_covered_by(safe_boxes)
            }
        }
    }

    /// Explicit finite system over a subset of inputs; state `cell_count()`
    /// is the sink, labelled `unsafe`.
    pub fn materialize(&self, inputs: &[usize]) -> (FiniteSystem, FiniteReachSpec) {
        let mut names: Vec<String> = (0..self.cell_count()).map(|c| c.to_string()).collect();
        names.push("unsafe".into());
        let input_names: Vec<String> = inputs.iter().map(|&u| format!("u{u}:{}", self.inputs.label(u))).collect();
        let mut sys = FiniteSystem::new(names, input_names).expect("unique labels");
        let mut buf = Vec::new();
        for c in 0..self.cell_count() {
            for (k, &u) in inputs.iter().enumerate() {
                self.successors(c, u, &mut buf);
                sys.set_post(c, k, buf.iter().copied()).expect("valid ids");
            }
        }
        let spec = FiniteReachSpec::allowing_full_target(self.q_cells(), self.t_cells()).expect("t ⊆ q");
        (sys, spec)
    }

    /// Total number of stored-equivalent transitions over all safe cells.
    pub fn transition_count(&self) -> usize {
        (0..self.cell_count())
            .into_par_iter()
            .filter(|&c| self.safe[c])
            .map_init(Vec::new, |buf, c| {
                (0..self.inputs.len())
                    .map(|u| {
                        self.successors(c, u, buf);
                        buf.len()
                    })
                    .sum::<usize>()
            })
            .sum()
    }
}

impl TransitionSystem for GridAbstraction {
    fn state_count(&self) -> usize {
        self.cell_count() + 1
    }

    fn input_count(&self) -> usize {
        self.inputs.len()
    }

    fn successors(&self, state: usize, input: usize, out: &mut Vec<usize>) {
        out.clear();
        if !self.is_safe_cell(state) {
            return;
        }
        let image = self.image(state, input);
        if self.cells_meeting(&image, out) {
            out.push(self.sink());
        }
    }

    fn state_label(&self, state: usize) -> String {
        if state == self.sink() {
            return "unsafe".into();
        }
        match &self.layout {
            CellLayout::Uniform(g) => format!("{:?}", g.multi_index(state)),
            CellLayout::Explicit(_) => format!("cell{state}"),
        }
    }

    fn input_label(&self, input: usize) -> String {
        self.inputs.label(input)
    }
}

fn snapped_box(layout: &CellLayout, b: &IntervalBox) -> IntervalBox {
    match layout {
        CellLayout::Uniform(g) => IntervalBox(
            b.0.iter()
                .enumerate()
                .map(|(axis, iv)| Interval { lo: g.snap_value(axis, iv.lo), hi: g.snap_value(axis, iv.hi), ..*iv })
                .collect(),
        ),
        CellLayout::Explicit(_) => b.clone(),
    }
}

/// Builds the abstraction, marking safe and target cells by inner
/// approximation of `Q` and `T`.
pub fn build_abstraction(
    system: &ContinuousSystem,
    spec: &BoxReachSpec,
    layout: CellLayout,
    inputs: InputSet,
) -> Result<GridAbstraction, AbstractionError> {
    if inputs.is_empty() {
        return Err(AbstractionError::NoInputs);
    }
    let n = system.dimension;
    let layout_dim = match &layout {
        CellLayout::Uniform(g) => g.dim(),
        CellLayout::Explicit(cells) => cells.first().map_or(n, IntervalBox::dim),
    };
    if layout_dim != n {
        return Err(AbstractionError::Dimension { expected: n, got: layout_dim });
    }
    if let CellLayout::Explicit(cells) = &layout {
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                if cells[i].intersects(&cells[j]) {
                    return Err(AbstractionError::OverlappingCells(i, j));
                }
            }
        }
    }
    let maps = inputs
        .values
        .iter()
        .map(|u| {
            if u.len() != system.input_dimension {
                return Err(AbstractionError::Dimension { expected: system.input_dimension, got: u.len() });
            }
            Ok(system.dynamics.affine_map(u)?)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cell_boxes: Vec<IntervalBox> = (0..layout.cell_count()).map(|c| layout.cell_box(c)).collect();
    let q: Vec<IntervalBox> = spec.safe.iter().map(|b| snapped_box(&layout, b)).collect();
    let t: Vec<IntervalBox> = spec.target.iter().map(|b| snapped_box(&layout, b)).collect();
    let domain: Vec<IntervalBox> = system.state_domain.iter().map(|b| snapped_box(&layout, b)).collect();
    let safe: Vec<bool> = cell_boxes.par_iter().map(|b| b.is_covered_by(&q) && b.is_covered_by(&domain)).collect();
    let target: Vec<bool> = cell_boxes.par_iter().zip(&safe).map(|(b, &s)| s && b.is_covered_by(&t)).collect();
    if !target.iter().any(|&t| t) {
        return Err(AbstractionError::EmptyTarget);
    }
    Ok(GridAbstraction { system: system.clone(), layout, inputs, maps, cell_boxes, safe, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::models;

    #[test]
    fn grid_counts() {
        let g = Grid::new(&[0.0], &[2.0], &[1.0]).unwrap();
        assert_eq!(g.counts, vec![2]);
        assert_eq!(g.axis_cell(0, 0), Interval::half_open(0.0, 1.0));
        assert_eq!(g.axis_cell(0, 1), Interval::closed(1.0, 2.0));

        let g = Grid::new(&[17.4; 3], &[24.0; 3], &[1.2; 3]).unwrap();
        assert_eq!(g.counts, vec![6, 6, 6]);
        let last = g.axis_cell(0, 5);
        assert!((last.width() - 0.6).abs() < 1e-12 && last.hi == 24.0 && last.hi_closed);

        let g = Grid::new(&[0.0], &[0.6], &[0.01]).unwrap();
        assert_eq!(g.counts, vec![60]);

        assert!(matches!(Grid::new(&[1.0], &[1.0], &[0.5]), Err(AbstractionError::DegenerateBounds { .. })));
        assert!(matches!(Grid::new(&[0.0], &[1.0], &[0.0]), Err(AbstractionError::NonPositiveEta { .. })));
    }

    #[test]
    fn quantize_conventions() {
        let g = Grid::new(&[0.0], &[2.0], &[1.0]).unwrap();
        assert_eq!(g.quantize(&[0.0]).unwrap(), 0);
        assert_eq!(g.quantize(&[1.0]).unwrap(), 1);
        assert_eq!(g.quantize(&[2.0]).unwrap(), 1);
        assert!(matches!(g.quantize(&[2.5]), Err(AbstractionError::OutOfDomain(_))));

        let g = Grid::new(&[17.4; 3], &[24.0; 3], &[1.2; 3]).unwrap();
        assert_eq!(g.quantize(&[17.4; 3]).unwrap(), 0);
        assert_eq!(g.quantize(&[24.0; 3]).unwrap(), g.cell_count() - 1);
    }

    #[test]
    fn axis_range_respects_openness() {
        let g = Grid::new(&[0.0], &[3.0], &[1.0]).unwrap();
        assert_eq!(g.axis_range(0, &Interval::closed(0.5, 1.0)), (Some((0, 1)), false));
        assert_eq!(g.axis_range(0, &Interval::half_open(0.5, 1.0)), (Some((0, 0)), false));
        assert_eq!(g.axis_range(0, &Interval::closed(2.5, 3.0)), (Some((2, 2)), false));
        assert_eq!(g.axis_range(0, &Interval::closed(2.5, 3.5)), (Some((2, 2)), true));
        assert_eq!(g.axis_range(0, &Interval::closed(-1.0, -0.5)), (None, true));
    }

    #[test]
    fn scalar_images() {
        let d = Dynamics::ScalarLinear;
        let img = overapprox_image(&d, &IntervalBox::closed(&[2.0], &[3.75]), &[-0.5]).unwrap();
        assert_eq!(img, IntervalBox::closed(&[0.5], &[1.375]));
        let img = overapprox_image(&d, &IntervalBox::closed(&[3.75], &[6.0]), &[0.75]).unwrap();
        assert_eq!(img, IntervalBox::closed(&[2.625], &[3.75]));
        let img = overapprox_image(&d, &IntervalBox::point(&[1.0]), &[0.25]).unwrap();
        assert_eq!(img, IntervalBox::point(&[0.75]));
    }

    fn example2_layout() -> CellLayout {
        // A₁ = (3.75, 6], A₂ = [2, 3.75], T = [0, 1.4]
        CellLayout::Explicit(vec![
            IntervalBox(vec![Interval { lo: 3.75, hi: 6.0, lo_closed: false, hi_closed: true }]),
            IntervalBox::closed(&[2.0], &[3.75]),
            IntervalBox::closed(&[0.0], &[1.4]),
        ])
    }

    #[test]
    fn example2_transitions() {
        let (sys, spec) = models::example2();
        let inputs = InputSet::explicit(models::EXAMPLE2_INPUTS.iter().map(|&u| vec![u]).collect());
        let abs = build_abstraction(&sys, &spec, example2_layout(), inputs).unwrap();
        assert_eq!(abs.q_cells(), BTreeSet::from([0, 1, 2]));
        assert_eq!(abs.t_cells(), BTreeSet::from([2]));
        // inputs: 0 = -0.5, 1 = 0.75
        assert_eq!(abs.successor_vec(0, 1), vec![1]);
        assert_eq!(abs.successor_vec(1, 0), vec![2]);
        assert!(abs.successor_vec(1, 1).contains(&abs.sink()));
        assert!(abs.successor_vec(0, 0).contains(&abs.sink()));
    }

    #[test]
    fn single_target_cell() {
        let sys = ContinuousSystem::new(Dynamics::ScalarLinear, 1, vec![IntervalBox::closed(&[0.0], &[1.0])]).unwrap();
        let spec =
            BoxReachSpec::new(vec![IntervalBox::closed(&[0.0], &[1.0])], vec![IntervalBox::closed(&[0.0], &[1.0])])
                .unwrap();
        let grid = Grid::new(&[0.0], &[1.0], &[1.0]).unwrap();
        let abs =
            build_abstraction(&sys, &spec, CellLayout::Uniform(grid), InputSet::explicit(vec![vec![0.0]])).unwrap();
        assert_eq!(abs.q_cells(), abs.t_cells());
        assert_eq!(abs.t_cells().len(), 1);
    }

    #[test]
    fn empty_target_rejected() {
        let sys = ContinuousSystem::new(Dynamics::ScalarLinear, 1, vec![IntervalBox::closed(&[0.0], &[4.0])]).unwrap();
        let spec =
            BoxReachSpec::new(vec![IntervalBox::closed(&[0.0], &[4.0])], vec![IntervalBox::closed(&[0.5], &[1.5])])
                .unwrap();
        let grid = Grid::new(&[0.0], &[4.0], &[1.0]).unwrap();
        let res = build_abstraction(&sys, &spec, CellLayout::Uniform(grid), InputSet::explicit(vec![vec![0.0]]));
        assert!(matches!(res, Err(AbstractionError::EmptyTarget)));
    }

    #[test]
    fn example3_structure() {
        let (sys, spec) = models::example3();
        let grid = Grid::new(&[17.4; 3], &[24.0; 3], &[1.2; 3]).unwrap();
        let inputs = InputSet::grid_centres(&[0.0; 3], &[0.6; 3], &[0.2; 3]).unwrap();
        let abs = build_abstraction(&sys, &spec, CellLayout::Uniform(grid), inputs).unwrap();
        assert_eq!(abs.q_cells().len(), 216);
        // cells [22.2, 23.4) and [23.4, 24] per axis lie inside T = [22, 24]
        assert_eq!(abs.t_cells().len(), 8);
    }

    #[test]
    fn input_grid_centres() {
        let inputs = InputSet::grid_centres(&[0.0], &[0.6], &[0.01]).unwrap();
        assert_eq!(inputs.len(), 60);
        assert!((inputs.values[0][0] - 0.005).abs() < 1e-12);
        assert!((inputs.values[59][0] - 0.595).abs() < 1e-12);
    }
}
