//! Boltzmann-rational choice over finite candidate sets.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Error, Result};
use crate::grid::QueryGrid;
use crate::math::exp;
use crate::preference::Query;
use crate::rng::SeededRng;

/// Rationality coefficient β ≥ 0. Zero is uniformly random choice.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Rationality(f64);

impl Rationality {
    pub fn new(beta: f64) -> Result<Self> {
        finite("beta", beta)?;
        if beta < 0.0 {
            return Err(invalid("beta", "must be nonnegative"));
        }
        Ok(Self(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Rationality {
    fn default() -> Self {
        Self(50.0)
    }
}

/// `probs[i] ∝ exp(β·u[i])`, max-subtracted.
pub fn softmax_policy(utilities: &[f64], beta: Rationality) -> Result<Vec<f64>> {
    if utilities.is_empty() {
        return Err(Error::Empty("utilities"));
    }
    if utilities.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite("utilities"));
    }
    let b = beta.value();
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = utilities.iter().map(|u| exp(b * (u - max))).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(probs)
}

/// Log-probabilities of [`softmax_policy`].
pub fn log_softmax(utilities: &[f64], beta: Rationality) -> Result<Vec<f64>> {
    if utilities.is_empty() {
        return Err(Error::Empty("utilities"));
    }
    let b = beta.value();
    let scaled: Vec<f64> = utilities.iter().map(|u| b * u).collect();
    let lz = crate::math::log_sum_exp(&scaled);
    Ok(scaled.into_iter().map(|s| s - lz).collect())
}

/// Inverse-CDF draw in enumeration order.
pub fn sample_index(probs: &[f64], rng: &mut SeededRng) -> usize {
    let u = rng.next_f64();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    // u landed in the rounding slack above the final cumulative sum
    last_positive
}

/// Largest entry, lowest index on ties.
pub fn argmax_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SelectionMode {
    #[default]
    Sample,
    Argmax,
}

impl SelectionMode {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMode::Sample => "sample",
            SelectionMode::Argmax => "argmax",
        }
    }
}

impl core::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(SelectionMode::Sample),
            "argmax" => Ok(SelectionMode::Argmax),
            _ => Err(invalid("selection", "expected `sample` or `argmax`")),
        }
    }
}

/// A distribution over the candidates of a [`QueryGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct QueryPolicy {
    grid: QueryGrid,
    probs: Vec<f64>,
}

impl QueryPolicy {
    pub fn new(grid: QueryGrid, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != grid.len() {
            return Err(invalid("probs", "length must equal the candidate count"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("probs", "entries must be finite and nonnegative"));
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("probs", "entries must sum to 1"));
        }
        Ok(Self { grid, probs })
    }

    pub fn grid(&self) -> &QueryGrid {
        &self.grid
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn argmax(&self) -> usize {
        argmax_index(&self.probs).unwrap_or(0)
    }

    /// Realizes one query from the policy.
    pub fn select(&self, mode: SelectionMode, rng: &mut SeededRng) -> Query {
        let i = match mode {
            SelectionMode::Sample => sample_index(&self.probs, rng),
            SelectionMode::Argmax => self.argmax(),
        };
        self.grid.candidate(i)
    }
}
