//! Level-3 Theory of Mind: reweighting candidate learner beliefs by how
//! likely each would have produced the observed queries under the level-2
//! policy.

use alloc::vec::Vec;

use crate::error::Result;
use crate::policy::Rationality;
use crate::preference::Query;

use super::level2::LevelTwo;
use super::{reweight, BeliefEnsemble, GridEnsemble, Model};

/// `w'_j ∝ π_L2(observed | b_j)·w_j`.
pub fn tom_posterior(
    model: &Model,
    ensemble: &BeliefEnsemble,
    observed: Query,
    beta_a: Rationality,
) -> Result<BeliefEnsemble> {
    let grid = ensemble.discretize(model.theta_grid())?;
    let updated = tom_posterior_grid(model, &grid, &[observed], beta_a)?;
    Ok(ensemble.with_weights(updated.weights().to_vec()))
}

/// Batch update after observing every query in `observed`.
pub fn tom_posterior_grid(
    model: &Model,
    ensemble: &GridEnsemble,
    observed: &[Query],
    beta_a: Rationality,
) -> Result<GridEnsemble> {
    let log_lik: Vec<f64> = ensemble
        .beliefs()
        .iter()
        .map(|b| {
            let l2 = LevelTwo::new(model, b, beta_a);
            observed.iter().map(|q| l2.log_prob_of(model, b, *q)).sum()
        })
        .collect();
    Ok(ensemble.with_weights(reweight(ensemble.weights(), &log_lik)?))
}
