//! The learner's belief over θ: a two-group Gaussian mixture and its
//! discretization onto a [`ThetaGrid`].

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Error, Result};
use crate::grid::ThetaGrid;
use crate::math::normal_pdf;

/// Densities below this are treated as zero before renormalizing.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Bimodal mixture `p_z·N(μ₁, σ₁²) + (1 - p_z)·N(μ₂, σ₂²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BeliefParams {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub p_z: f64,
}

impl BeliefParams {
    pub fn new(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64, p_z: f64) -> Result<Self> {
        let bp = Self {
            mu1,
            sigma1,
            mu2,
            sigma2,
            p_z,
        };
        bp.validate()?;
        Ok(bp)
    }

    pub fn validate(&self) -> Result<()> {
        finite("mu1", self.mu1)?;
        finite("mu2", self.mu2)?;
        finite("sigma1", self.sigma1)?;
        finite("sigma2", self.sigma2)?;
        finite("p_z", self.p_z)?;
        if self.sigma1 <= 0.0 {
            return Err(invalid("sigma1", "must be positive"));
        }
        if self.sigma2 <= 0.0 {
            return Err(invalid("sigma2", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_z) {
            return Err(invalid("p_z", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn is_canonical(&self) -> bool {
        self.mu1 <= self.mu2
    }

    /// Canonical form: the lower mean is listed first.
    pub fn canonical(self) -> Self {
        if self.mu1 > self.mu2 {
            Self {
                mu1: self.mu2,
                sigma1: self.sigma2,
                mu2: self.mu1,
                sigma2: self.sigma1,
                p_z: 1.0 - self.p_z,
            }
        } else {
            self
        }
    }

    #[inline]
    pub(crate) fn density_unchecked(&self, theta: f64) -> f64 {
        self.p_z * normal_pdf(theta, self.mu1, self.sigma1)
            + (1.0 - self.p_z) * normal_pdf(theta, self.mu2, self.sigma2)
    }
}

pub fn mixture_density(bp: &BeliefParams, theta: f64) -> Result<f64> {
    bp.validate()?;
    finite("theta", theta)?;
    Ok(bp.density_unchecked(theta))
}

pub fn canonicalize(bp: &BeliefParams) -> BeliefParams {
    bp.canonical()
}

/// Probability mass over the cells of a [`ThetaGrid`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridBelief {
    grid: ThetaGrid,
    mass: Vec<f64>,
}

impl GridBelief {
    /// Validates an already-normalized mass vector.
    pub fn from_mass(grid: ThetaGrid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(invalid("mass", "length must equal the grid size"));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(invalid("mass", "entries must be finite and nonnegative"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("mass", "entries must sum to 1"));
        }
        Ok(Self { grid, mass })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(grid: ThetaGrid, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(invalid("weights", "length must equal the grid size"));
        }
        if weights.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(invalid("weights", "entries must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateBelief);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            grid,
            mass: weights,
        })
    }

    pub fn uniform(grid: ThetaGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            mass: alloc::vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(grid: ThetaGrid, k: usize) -> Result<Self> {
        if k >= grid.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: grid.len(),
            });
        }
        let mut mass = alloc::vec![0.0; grid.len()];
        mass[k] = 1.0;
        Ok(Self { grid, mass })
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_at(&self, theta: f64) -> f64 {
        self.mass[self.grid.nearest_index(theta)]
    }

    /// Total mass on cells with θ strictly above `theta`.
    pub fn mass_above(&self, theta: f64) -> f64 {
        self.grid
            .points()
            .zip(&self.mass)
            .filter(|(t, _)| *t > theta)
            .map(|(_, m)| m)
            .sum()
    }
}

/// `mass[k] ∝ mixture_density(bp, θ_k)`.
pub fn discretize_belief(bp: &BeliefParams, grid: &ThetaGrid) -> Result<GridBelief> {
    bp.validate()?;
    let weights = grid
        .points()
        .map(|t| {
            let d = bp.density_unchecked(t);
            if d < DENSITY_FLOOR {
                0.0
            } else {
                d
            }
        })
        .collect();
    GridBelief::from_weights(*grid, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2_prior() -> BeliefParams {
        BeliefParams::new(-3.0, 1.0, 3.0, 1.0, 0.9).unwrap()
    }

    #[test]
    fn density_examples() {
        let bp = BeliefParams::new(0.0, 1.0, 5.0, 2.0, 1.0).unwrap();
        assert!((mixture_density(&bp, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-12);
        // 0.9·φ(0) + 0.1·φ(6) = 0.9·0.3989422804014327 + 0.1·6.075882849823286e-9
        let expected = 0.9 * 0.398_942_280_401_432_7 + 0.1 * 6.075_882_849_823_286e-9;
        assert!((mixture_density(&fig2_prior(), -3.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.359_048).abs() < 1e-6);
    }

    #[test]
    fn density_integrates_to_one() {
        let grid = ThetaGrid::default();
        // modes well inside [-6, 6] so truncation loses < 1e-6
        let bp = BeliefParams::new(-1.0, 0.8, 1.5, 1.0, 0.4).unwrap();
        let ys: Vec<f64> = grid
            .points()
            .map(|t| mixture_density(&bp, t).unwrap())
            .collect();
        let h = grid.cell_width();
        let trap = h * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[ys.len() - 1]));
        assert!((trap - 1.0).abs() < 1e-4, "{trap}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(BeliefParams::new(0.0, 0.0, 0.0, 1.0, 0.5).is_err());
        assert!(BeliefParams::new(0.0, 1.0, 0.0, -1.0, 0.5).is_err());
        assert!(BeliefParams::new(0.0, 1.0, 0.0, 1.0, 1.5).is_err());
        let bad = BeliefParams {
            sigma1: -1.0,
            ..fig2_prior()
        };
        assert!(mixture_density(&bad, 0.0).is_err());
    }

    #[test]
    fn point_like_mixture_concentrates() {
        let grid = ThetaGrid::default();
        let s = grid.cell_width() / 100.0;
        let bp = BeliefParams::new(grid.point(80), s, grid.point(80), s, 0.5).unwrap();
        let b = discretize_belief(&bp, &grid).unwrap();
        assert!(b.mass()[80] >= 0.99);
    }

    #[test]
    fn fig2_prior_mass_split() {
        // Exact mass below 0 of the mixture truncated to [-6, 6]:
        // (0.9·(Φ(3) - Φ(-3)) + 0.1·(Φ(-3) - Φ(-9))) / (Φ(9) - Φ(-3)).
        let grid = ThetaGrid::default();
        let b = discretize_belief(&fig2_prior(), &grid).unwrap();
        let below: f64 = grid
            .points()
            .zip(b.mass())
            .filter(|(t, _)| *t < 0.0)
            .map(|(_, m)| m)
            .sum();
        let half_cell_at_zero = b.mass()[120] / 2.0;
        assert!(
            (below + half_cell_at_zero - 0.898_918).abs() < 1e-4,
            "{below}"
        );
    }

    #[test]
    fn underflow_is_degenerate() {
        let grid = ThetaGrid::default();
        let bp = BeliefParams::new(1000.0, 0.1, 1000.0, 0.1, 0.5).unwrap();
        assert_eq!(discretize_belief(&bp, &grid), Err(Error::DegenerateBelief));
    }

    #[test]
    fn canonicalize_examples() {
        let bp = BeliefParams::new(3.0, 1.0, -3.0, 1.0, 0.1).unwrap();
        let c = canonicalize(&bp);
        assert_eq!((c.mu1, c.sigma1, c.mu2, c.sigma2), (-3.0, 1.0, 3.0, 1.0));
        assert!((c.p_z - 0.9).abs() < 1e-15);
        assert_eq!(canonicalize(&c), c);
    }

    proptest! {
        #[test]
        fn canonicalize_preserves_density(
            mu1 in -6.0..6.0f64, mu2 in -6.0..6.0f64,
            s1 in 0.1..3.0f64, s2 in 0.1..3.0f64, pz in 0.0..=1.0f64,
            theta in -8.0..8.0f64,
        ) {
            let bp = BeliefParams::new(mu1, s1, mu2, s2, pz).unwrap();
            let c = canonicalize(&bp);
            prop_assert!(c.is_canonical());
            let a = mixture_density(&bp, theta).unwrap();
            let b = mixture_density(&c, theta).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn discretized_beliefs_are_normalized(
            mu1 in -6.0..6.0f64, mu2 in -6.0..6.0f64,
            s1 in 0.05..3.0f64, s2 in 0.05..3.0f64, pz in 0.0..=1.0f64,
        ) {
            let bp = BeliefParams::new(mu1, s1, mu2, s2, pz).unwrap();
            let b = discretize_belief(&bp, &ThetaGrid::default()).unwrap();
            prop_assert!(b.mass().iter().all(|m| *m >= 0.0));
            prop_assert!((b.mass().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}
