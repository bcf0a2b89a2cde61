//! Level-3 strategic teaching: pick answers, or whole labeled examples, that
//! push the learner's posterior toward the teacher's true θ.

use alloc::vec::Vec;

use crate::bayes::posterior_update;
use crate::belief::GridBelief;
use crate::error::{finite, Result};
use crate::grid::QueryGrid;
use crate::policy::{argmax_index, softmax_policy, Rationality};
use crate::preference::{Answer, LabeledExample, Query, RewardForm};

use super::{GridEnsemble, Model};

/// Posterior mass at the cell containing `theta_true` after the learner
/// updates `b` with `example`.
pub fn l3_teaching_utility(
    example: &LabeledExample,
    theta_true: f64,
    b: &GridBelief,
    form: RewardForm,
) -> Result<f64> {
    finite("theta_true", theta_true)?;
    let post = posterior_update(b, example.query, example.answer, form)?;
    Ok(post.mass_at(theta_true))
}

/// Softmax over labeled examples `(candidate, y)`, enumerated as
/// `2·candidate + y`.
#[derive(Clone, Debug, PartialEq)]
pub struct TeachingPolicy {
    grid: QueryGrid,
    utilities: Vec<f64>,
    probs: Vec<f64>,
}

impl TeachingPolicy {
    pub fn grid(&self) -> &QueryGrid {
        &self.grid
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn example(&self, index: usize) -> LabeledExample {
        LabeledExample {
            query: self.grid.candidate(index / 2),
            answer: if index % 2 == 1 {
                Answer::PrefersSecond
            } else {
                Answer::PrefersFirst
            },
        }
    }

    /// Highest-utility example (lowest index on ties) and its utility.
    pub fn argmax(&self) -> (LabeledExample, f64) {
        let i = argmax_index(&self.utilities).unwrap_or(0);
        (self.example(i), self.utilities[i])
    }

    /// Per query candidate, the better of its two answers.
    pub fn best_per_query(&self) -> Vec<f64> {
        self.utilities
            .chunks_exact(2)
            .map(|u| u[0].max(u[1]))
            .collect()
    }
}

/// `p(x1, x2, y) ∝ exp(β_h·Σ_j w_j·U_L3)` over every grid query and answer.
pub fn l3_teaching_policy(
    model: &Model,
    theta_true: f64,
    ensemble: &GridEnsemble,
    beta_h: Rationality,
) -> Result<TeachingPolicy> {
    finite("theta_true", theta_true)?;
    let table = model.table();
    let k_true = model.theta_grid().nearest_index(theta_true);
    let mut utilities = alloc::vec![0.0; 2 * table.len()];
    for (b, w) in ensemble.beliefs().iter().zip(ensemble.weights()) {
        let mass = b.mass();
        for c in 0..table.len() {
            for a in Answer::ALL {
                utilities[2 * c + a.bit() as usize] +=
                    w * table.posterior_mass_at(c, a, mass, k_true);
            }
        }
    }
    let probs = softmax_policy(&utilities, beta_h)?;
    Ok(TeachingPolicy {
        grid: *model.query_grid(),
        utilities,
        probs,
    })
}

/// Probability that a strategic teacher answers `y = 1` to `q`.
pub fn l3_answer_policy(
    theta_true: f64,
    q: Query,
    ensemble: &GridEnsemble,
    beta_h: Rationality,
    form: RewardForm,
) -> Result<f64> {
    let mut u = [0.0; 2];
    for (b, w) in ensemble.beliefs().iter().zip(ensemble.weights()) {
        for a in Answer::ALL {
            let ex = LabeledExample {
                query: q,
                answer: a,
            };
            u[a.bit() as usize] += w * l3_teaching_utility(&ex, theta_true, b, form)?;
        }
    }
    Ok(softmax_policy(&u, beta_h)?[1])
}
