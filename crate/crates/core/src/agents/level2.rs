//! The level-2 learner: queries drawn with probability ∝ exp(β_a·EIG).

use alloc::vec::Vec;

use crate::belief::GridBelief;
use crate::math::log_sum_exp;
use crate::policy::{softmax_policy, QueryPolicy, Rationality};
use crate::preference::Query;

use super::Model;

pub fn l2_query_policy(model: &Model, b: &GridBelief, beta_a: Rationality) -> QueryPolicy {
    let eig = model.eig_map(b);
    let probs = softmax_policy(&eig, beta_a).expect("query grid is nonempty and EIG is finite");
    QueryPolicy::new(*model.query_grid(), probs).expect("softmax output is a distribution")
}

/// One belief's level-2 policy in log space, kept around so the policy
/// probability of any query (on or off the grid) can be read off cheaply.
#[derive(Clone, Debug)]
pub struct LevelTwo {
    eig: Vec<f64>,
    beta: Rationality,
    log_normalizer: f64,
}

impl LevelTwo {
    pub fn new(model: &Model, b: &GridBelief, beta: Rationality) -> Self {
        Self::from_eig(model.eig_map(b), beta)
    }

    pub fn from_eig(eig: Vec<f64>, beta: Rationality) -> Self {
        let scaled: Vec<f64> = eig.iter().map(|e| beta.value() * e).collect();
        Self {
            log_normalizer: log_sum_exp(&scaled),
            eig,
            beta,
        }
    }

    pub fn eig(&self) -> &[f64] {
        &self.eig
    }

    /// `ln Σ_ξ exp(β·EIG(ξ))` over the query grid.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn log_prob(&self, index: usize) -> f64 {
        self.beta.value() * self.eig[index] - self.log_normalizer
    }

    /// Log policy probability of a query given its EIG under this belief.
    pub fn log_prob_of_eig(&self, eig: f64) -> f64 {
        self.beta.value() * eig - self.log_normalizer
    }

    pub fn log_prob_of(&self, model: &Model, b: &GridBelief, q: Query) -> f64 {
        match model.query_grid().index_of(q) {
            Some(i) => self.log_prob(i),
            None => self.log_prob_of_eig(model.eig_at(b, q)),
        }
    }
}
