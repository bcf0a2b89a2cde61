//! The agency ladder.
//!
//! - level 2: [`level2`], a learner that asks EIG-softmax queries;
//! - level 3: [`tom`] (belief attribution from observed queries) and
//!   [`teaching`] (answers and examples that steer the learner);
//! - level 4/5: [`pragmatic`], queries that make the learner's belief
//!   identifiable, and the literal-vs-rhetorical Bayes factor;
//! - [`mle`]: maximum-likelihood belief attribution over the mixture family.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::bayes::AnswerTable;
use crate::belief::{discretize_belief, BeliefParams, GridBelief};
use crate::error::{invalid, Error, Result};
use crate::grid::{QueryGrid, ThetaGrid};
use crate::math::{exp, ln, log_sum_exp};
use crate::preference::{Query, RewardForm};

pub mod level2;
pub mod mle;
pub mod pragmatic;
pub mod teaching;
pub mod tom;

pub use level2::{l2_query_policy, LevelTwo};
pub use mle::{
    mle_belief, mle_objective, MleEstimate, MleSearchConfig, MleSearcher, ParamRange,
    QueryLikelihood,
};
pub use pragmatic::{bayes_factor, l4_query_policy, l4_utility, Pragmatics};
pub use teaching::{l3_answer_policy, l3_teaching_policy, l3_teaching_utility, TeachingPolicy};
pub use tom::{tom_posterior, tom_posterior_grid};

/// The shared setting: θ grid, query grid, reward form and the cached
/// likelihood table over every query candidate.
#[derive(Clone, Debug)]
pub struct Model {
    theta: ThetaGrid,
    queries: QueryGrid,
    table: AnswerTable,
}

impl Model {
    pub fn new(theta: ThetaGrid, queries: QueryGrid, form: RewardForm) -> Self {
        Self {
            theta,
            queries,
            table: AnswerTable::from_grid(theta, &queries, form),
        }
    }

    pub fn theta_grid(&self) -> &ThetaGrid {
        &self.theta
    }

    pub fn query_grid(&self) -> &QueryGrid {
        &self.queries
    }

    pub fn form(&self) -> RewardForm {
        self.table.form()
    }

    pub fn table(&self) -> &AnswerTable {
        &self.table
    }

    pub fn discretize(&self, bp: &BeliefParams) -> Result<GridBelief> {
        discretize_belief(bp, &self.theta)
    }

    pub fn eig_map(&self, b: &GridBelief) -> Vec<f64> {
        self.table.eig_map(b)
    }

    /// EIG of an arbitrary query, using the cached row when `q` is a grid
    /// candidate.
    pub fn eig_at(&self, b: &GridBelief, q: Query) -> f64 {
        match self.queries.index_of(q) {
            Some(i) => self.table.eig(i, b.mass()),
            None => {
                AnswerTable::from_queries(self.theta, alloc::vec![q], self.form()).eig(0, b.mass())
            }
        }
    }
}

impl Default for Model {
    fn default() -> Self {
        Self::new(
            ThetaGrid::default(),
            QueryGrid::default(),
            RewardForm::default(),
        )
    }
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Empty("ensemble"));
    }
    if weights.len() != n {
        return Err(invalid("weights", "one weight per particle"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(invalid("weights", "entries must be finite and nonnegative"));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("weights", "entries must sum to 1"));
    }
    Ok(())
}

/// Reweights by `exp(log_lik)` in log space and renormalizes.
pub(crate) fn reweight(weights: &[f64], log_lik: &[f64]) -> Result<Vec<f64>> {
    let logs: Vec<f64> = weights
        .iter()
        .zip(log_lik)
        .map(|(w, l)| ln(*w) + l)
        .collect();
    let lz = log_sum_exp(&logs);
    if !lz.is_finite() {
        return Err(Error::ImpossibleEvidence);
    }
    Ok(logs.into_iter().map(|l| exp(l - lz)).collect())
}

/// A second-order belief: weighted mixture-parameter particles.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BeliefEnsemble {
    particles: Vec<BeliefParams>,
    weights: Vec<f64>,
}

impl BeliefEnsemble {
    /// Particles are stored in canonical form.
    pub fn new(particles: Vec<BeliefParams>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, particles.len())?;
        for p in &particles {
            p.validate()?;
        }
        Ok(Self {
            particles: particles.into_iter().map(BeliefParams::canonical).collect(),
            weights,
        })
    }

    pub fn uniform(particles: Vec<BeliefParams>) -> Result<Self> {
        let n = particles.len();
        if n == 0 {
            return Err(Error::Empty("ensemble"));
        }
        Self::new(particles, alloc::vec![1.0 / n as f64; n])
    }

    pub fn single(particle: BeliefParams) -> Result<Self> {
        Self::new(alloc::vec![particle], alloc::vec![1.0])
    }

    pub fn particles(&self) -> &[BeliefParams] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn discretize(&self, grid: &ThetaGrid) -> Result<GridEnsemble> {
        let beliefs = self
            .particles
            .iter()
            .map(|p| discretize_belief(p, grid))
            .collect::<Result<Vec<_>>>()?;
        GridEnsemble::new(beliefs, self.weights.clone())
    }

    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> Self {
        Self {
            particles: self.particles.clone(),
            weights,
        }
    }
}

/// Weighted grid beliefs; what the agents actually compute with. Lets a
/// particle be any grid belief, e.g. the uniform belief of a non-adaptive
/// teacher.
#[derive(Clone, Debug, PartialEq)]
pub struct GridEnsemble {
    beliefs: Vec<GridBelief>,
    weights: Vec<f64>,
}

impl GridEnsemble {
    pub fn new(beliefs: Vec<GridBelief>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, beliefs.len())?;
        if beliefs.windows(2).any(|w| w[0].grid() != w[1].grid()) {
            return Err(invalid("beliefs", "all particles must share one θ grid"));
        }
        Ok(Self { beliefs, weights })
    }

    pub fn single(belief: GridBelief) -> Self {
        Self {
            beliefs: alloc::vec![belief],
            weights: alloc::vec![1.0],
        }
    }

    pub fn beliefs(&self) -> &[GridBelief] {
        &self.beliefs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn theta_grid(&self) -> &ThetaGrid {
        self.beliefs[0].grid()
    }

    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> Self {
        Self {
            beliefs: self.beliefs.clone(),
            weights,
        }
    }
}
