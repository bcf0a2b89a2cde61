//! Uniform grids over the preference parameter and over the query space.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Result};
use crate::preference::Query;

/// Uniform grid over the preference parameter θ.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ThetaGrid {
    lo: f64,
    hi: f64,
    n_points: usize,
}

impl ThetaGrid {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        finite("theta_grid.lo", lo)?;
        finite("theta_grid.hi", hi)?;
        if lo >= hi {
            return Err(invalid("theta_grid", "lo must be below hi"));
        }
        if n_points < 3 {
            return Err(invalid("theta_grid.n_points", "need at least 3 points"));
        }
        Ok(Self { lo, hi, n_points })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        axis_point(self.lo, self.hi, self.n_points, k)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.point(k))
    }

    /// Index of the cell containing `theta` (nearest grid point, clamped).
    pub fn nearest_index(&self, theta: f64) -> usize {
        let t = (theta - self.lo) / self.cell_width();
        let k = libm::round(t);
        if k <= 0.0 {
            0
        } else if k >= (self.n_points - 1) as f64 {
            self.n_points - 1
        } else {
            k as usize
        }
    }
}

impl Default for ThetaGrid {
    /// [-6, 6] with step 0.05.
    fn default() -> Self {
        Self {
            lo: -6.0,
            hi: 6.0,
            n_points: 241,
        }
    }
}

/// All ordered pairs `(x1, x2)` from a uniform axis grid, enumerated
/// row-major by `x1` then `x2`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QueryGrid {
    lo: f64,
    hi: f64,
    n_per_axis: usize,
}

impl QueryGrid {
    pub fn new(lo: f64, hi: f64, n_per_axis: usize) -> Result<Self> {
        finite("query_grid.lo", lo)?;
        finite("query_grid.hi", hi)?;
        if lo >= hi {
            return Err(invalid("query_grid", "lo must be below hi"));
        }
        if n_per_axis < 2 {
            return Err(invalid("query_grid.n_per_axis", "need at least 2 points"));
        }
        Ok(Self { lo, hi, n_per_axis })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn axis_point(&self, j: usize) -> f64 {
        axis_point(self.lo, self.hi, self.n_per_axis, j)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n_per_axis - 1) as f64
    }

    /// Number of candidates, `n_per_axis²`.
    pub fn len(&self) -> usize {
        self.n_per_axis * self.n_per_axis
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn candidate(&self, index: usize) -> Query {
        let n = self.n_per_axis;
        Query {
            x1: self.axis_point(index / n),
            x2: self.axis_point(index % n),
        }
    }

    pub fn candidates(&self) -> impl Iterator<Item = Query> + '_ {
        (0..self.len()).map(move |i| self.candidate(i))
    }

    /// Index of the candidate `(x2, x1)`.
    pub fn swapped_index(&self, index: usize) -> usize {
        let n = self.n_per_axis;
        (index % n) * n + index / n
    }

    pub fn is_diagonal(&self, index: usize) -> bool {
        let n = self.n_per_axis;
        index / n == index % n
    }

    /// Candidate index of `q` when both coordinates lie on the axis grid.
    pub fn index_of(&self, q: Query) -> Option<usize> {
        let i = self.axis_index(q.x1)?;
        let j = self.axis_index(q.x2)?;
        Some(i * self.n_per_axis + j)
    }

    fn axis_index(&self, x: f64) -> Option<usize> {
        let t = libm::round((x - self.lo) / self.step());
        if t < 0.0 || t > (self.n_per_axis - 1) as f64 {
            return None;
        }
        let j = t as usize;
        ((self.axis_point(j) - x).abs() <= 1e-9 * self.step()).then_some(j)
    }
}

impl Default for QueryGrid {
    /// [-6, 6] with step 0.25 per axis (2401 candidates).
    fn default() -> Self {
        Self {
            lo: -6.0,
            hi: 6.0,
            n_per_axis: 49,
        }
    }
}

fn axis_point(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if k + 1 == n {
        hi
    } else {
        lo + (hi - lo) * (k as f64) / ((n - 1) as f64)
    }
}
