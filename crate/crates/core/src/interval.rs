//! Intervals and hyper-rectangles with explicit endpoint closedness.
//!
//! Grid cells are half-open and images of half-open boxes under monotone
//! maps keep their open faces, so every interval tracks whether each
//! endpoint belongs to it. All set operations here are exact in the sense
//! that they never compare endpoints with a tolerance.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }

    pub fn point(x: f64) -> Self {
        Interval::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        !self.intersect(other).is_empty()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        let lo_ok = self.lo > other.lo || (self.lo == other.lo && (other.lo_closed || !self.lo_closed));
        let hi_ok = self.hi < other.hi || (self.hi == other.hi && (other.hi_closed || !self.hi_closed));
        lo_ok && hi_ok
    }

    /// The parts of `self` strictly below and strictly above `other`.
    fn outside_parts(&self, other: &Interval) -> (Interval, Interval) {
        let below = Interval { lo: self.lo, lo_closed: self.lo_closed, hi: other.lo, hi_closed: !other.lo_closed }
            .intersect(self);
        let above = Interval { lo: other.hi, lo_closed: !other.hi_closed, hi: self.hi, hi_closed: self.hi_closed }
            .intersect(self);
        (below, above)
    }
}

/// Axis-aligned box; the product of one interval per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox(pub Vec<Interval>);

impl IntervalBox {
    pub fn closed(lower: &[f64], upper: &[f64]) -> Self {
        IntervalBox(lower.iter().zip(upper).map(|(&l, &u)| Interval::closed(l, u)).collect())
    }

    pub fn point(x: &[f64]) -> Self {
        IntervalBox(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().any(Interval::is_empty)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.0.len() == x.len() && self.0.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    pub fn intersect(&self, other: &IntervalBox) -> IntervalBox {
        IntervalBox(self.0.iter().zip(&other.0).map(|(a, b)| a.intersect(b)).collect())
    }

    pub fn intersects(&self, other: &IntervalBox) -> bool {
        !self.intersect(other).is_empty()
    }

    pub fn is_subset_of(&self, other: &IntervalBox) -> bool {
        self.is_empty() || self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset_of(b))
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        self.0.iter().map(|iv| iv.lo).collect()
    }

    pub fn upper_corner(&self) -> Vec<f64> {
        self.0.iter().map(|iv| iv.hi).collect()
    }

    /// `self \ other` as a list of pairwise disjoint non-empty boxes.
    pub fn difference(&self, other: &IntervalBox) -> Vec<IntervalBox> {
        if self.is_empty() {
            return Vec::new();
        }
        if !self.intersects(other) {
            return vec![self.clone()];
        }
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        for axis in 0..self.dim() {
            let (below, above) = rest.0[axis].outside_parts(&other.0[axis]);
            for part in [below, above] {
                if !part.is_empty() {
                    let mut piece = rest.clone();
                    piece.0[axis] = part;
                    pieces.push(piece);
                }
            }
            rest.0[axis] = rest.0[axis].intersect(&other.0[axis]);
        }
        pieces
    }

    /// True iff `self` lies inside the union of `cover`.
    pub fn is_covered_by<'a, I>(&self, cover: I) -> bool
    where
        I: IntoIterator<Item = &'a IntervalBox>,
    {
        let mut remaining = if self.is_empty() { Vec::new() } else { vec![self.clone()] };
        for piece in cover {
            if remaining.is_empty() {
                break;
            }
            remaining = remaining.iter().flat_map(|r| r.difference(piece)).collect();
        }
        remaining.is_empty()
    }
}
