//! Level 4 and 5: pragmatic questions and intention inference.
//!
//! A level-4 learner also values how much a query reveals its own belief to
//! a level-3 observer. With `λ` the weight on that term, the utility (in
//! nats) of query ξ for the learner whose belief is particle `t` is
//!
//! `(1 - λ)·EIG_t(ξ) + λ·ln 2·p(b_t | ξ)`
//!
//! so both terms share the `[0, ln 2]` range and `λ = 0` is exactly the
//! level-2 learner. A level-5 observer compares the level-2 and level-4
//! marginal likelihoods of a query (the Bayes factor; `> 1` reads literal,
//! `< 1` rhetorical).

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};
use crate::math::{exp, ln, log_sum_exp};
use crate::policy::{softmax_policy, QueryPolicy, Rationality};
use crate::preference::Query;

use super::level2::LevelTwo;
use super::{GridEnsemble, Model};

fn check_lambda(lambda: f64) -> Result<f64> {
    if lambda.is_finite() && (0.0..=1.0).contains(&lambda) {
        Ok(lambda)
    } else {
        Err(invalid("lambda", "must lie in [0, 1]"))
    }
}

/// Per-particle level-2 policies for an ensemble, precomputed once.
#[derive(Clone, Debug)]
pub struct Pragmatics<'a> {
    model: &'a Model,
    ensemble: &'a GridEnsemble,
    beta: Rationality,
    level_two: Vec<LevelTwo>,
    log_weights: Vec<f64>,
}

impl<'a> Pragmatics<'a> {
    pub fn new(model: &'a Model, ensemble: &'a GridEnsemble, beta_a: Rationality) -> Result<Self> {
        if ensemble.theta_grid() != model.theta_grid() {
            return Err(invalid("ensemble", "θ grid differs from the model's"));
        }
        Ok(Self {
            model,
            ensemble,
            beta: beta_a,
            level_two: ensemble
                .beliefs()
                .iter()
                .map(|b| LevelTwo::new(model, b, beta_a))
                .collect(),
            log_weights: ensemble.weights().iter().map(|w| ln(*w)).collect(),
        })
    }

    fn check_index(&self, true_index: usize) -> Result<()> {
        if true_index >= self.ensemble.len() {
            return Err(Error::IndexOutOfRange {
                index: true_index,
                len: self.ensemble.len(),
            });
        }
        Ok(())
    }

    /// Per-particle `(EIG_j(q), ln π_L2(q | b_j))`.
    fn query_terms(&self, q: Query) -> Vec<(f64, f64)> {
        let on_grid = self.model.query_grid().index_of(q);
        self.level_two
            .iter()
            .zip(self.ensemble.beliefs())
            .map(|(l2, b)| {
                let eig = match on_grid {
                    Some(i) => l2.eig()[i],
                    None => self.model.eig_at(b, q),
                };
                (eig, l2.log_prob_of_eig(eig))
            })
            .collect()
    }

    fn identifiability(&self, terms: &[(f64, f64)], true_index: usize) -> f64 {
        let joint: Vec<f64> = self
            .log_weights
            .iter()
            .zip(terms)
            .map(|(lw, (_, lp))| lw + lp)
            .collect();
        let lz = log_sum_exp(&joint);
        if lz.is_finite() {
            exp(joint[true_index] - lz)
        } else {
            0.0
        }
    }

    /// `p(b_true | q, b_h)`: the observer's posterior weight on the true
    /// particle after seeing `q`.
    pub fn l4_utility(&self, q: Query, true_index: usize) -> Result<f64> {
        self.check_index(true_index)?;
        Ok(self.identifiability(&self.query_terms(q), true_index))
    }

    /// Mixed utility in nats over the whole query grid for particle `t`.
    fn l4_utilities(&self, true_index: usize, lambda: f64) -> Vec<f64> {
        let n = self.model.query_grid().len();
        (0..n)
            .map(|i| {
                let terms: Vec<(f64, f64)> = self
                    .level_two
                    .iter()
                    .map(|l2| (l2.eig()[i], l2.log_prob(i)))
                    .collect();
                mix(
                    terms[true_index].0,
                    self.identifiability(&terms, true_index),
                    lambda,
                )
            })
            .collect()
    }

    pub fn l4_query_policy(&self, true_index: usize, lambda: f64) -> Result<QueryPolicy> {
        self.check_index(true_index)?;
        let lambda = check_lambda(lambda)?;
        let probs = softmax_policy(&self.l4_utilities(true_index, lambda), self.beta)?;
        QueryPolicy::new(*self.model.query_grid(), probs)
    }

    /// `Σ_j w_j π_L2(q | b_j) / Σ_j w_j π_L4(q | b_j)`.
    pub fn bayes_factor(&self, q: Query, lambda: f64) -> Result<f64> {
        let lambda = check_lambda(lambda)?;
        let terms = self.query_terms(q);
        let beta = self.beta.value();
        let mut literal = Vec::with_capacity(terms.len());
        let mut rhetorical = Vec::with_capacity(terms.len());
        for (t, lw) in self.log_weights.iter().enumerate() {
            literal.push(lw + terms[t].1);
            let grid_utils: Vec<f64> = self
                .l4_utilities(t, lambda)
                .iter()
                .map(|u| beta * u)
                .collect();
            let log_z = log_sum_exp(&grid_utils);
            let u_q = mix(terms[t].0, self.identifiability(&terms, t), lambda);
            rhetorical.push(lw + beta * u_q - log_z);
        }
        let den = log_sum_exp(&rhetorical);
        if !den.is_finite() {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(exp(log_sum_exp(&literal) - den))
    }
}

#[inline]
fn mix(eig: f64, identifiability: f64, lambda: f64) -> f64 {
    (1.0 - lambda) * eig + lambda * LN_2 * identifiability
}

pub fn l4_utility(
    model: &Model,
    q: Query,
    true_index: usize,
    ensemble: &GridEnsemble,
    beta_a: Rationality,
) -> Result<f64> {
    Pragmatics::new(model, ensemble, beta_a)?.l4_utility(q, true_index)
}

pub fn l4_query_policy(
    model: &Model,
    true_index: usize,
    ensemble: &GridEnsemble,
    lambda: f64,
    beta_a: Rationality,
) -> Result<QueryPolicy> {
    Pragmatics::new(model, ensemble, beta_a)?.l4_query_policy(true_index, lambda)
}

pub fn bayes_factor(
    model: &Model,
    q: Query,
    ensemble: &GridEnsemble,
    beta_a: Rationality,
    lambda: f64,
) -> Result<f64> {
    Pragmatics::new(model, ensemble, beta_a)?.bayes_factor(q, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::l2_query_policy;
    use crate::belief::BeliefParams;
    use crate::grid::{QueryGrid, ThetaGrid};
    use crate::RewardForm;

    fn model() -> Model {
        Model::new(
            ThetaGrid::default(),
            QueryGrid::new(-6.0, 6.0, 13).unwrap(),
            RewardForm::AbsoluteDistance,
        )
    }

    fn pair(m: &Model) -> GridEnsemble {
        let a = m
            .discretize(&BeliefParams::new(-3.0, 1.0, 3.0, 1.0, 0.9).unwrap())
            .unwrap();
        let b = m
            .discretize(&BeliefParams::new(-3.0, 1.0, 3.0, 1.0, 0.1).unwrap())
            .unwrap();
        GridEnsemble::new(alloc::vec![a, b], alloc::vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn singleton_is_always_identified() {
        let m = model();
        let e = GridEnsemble::single(pair(&m).beliefs()[0].clone());
        let beta = Rationality::default();
        for q in m.query_grid().candidates().step_by(11) {
            assert!((l4_utility(&m, q, 0, &e, beta).unwrap() - 1.0).abs() < 1e-12);
        }
        let p = l4_query_policy(&m, 0, &e, 1.0, beta).unwrap();
        let n = m.query_grid().len() as f64;
        assert!(p.probs().iter().all(|x| (x - 1.0 / n).abs() < 1e-12));
        assert!(l4_utility(&m, Query::new(0.0, 1.0).unwrap(), 1, &e, beta).is_err());
    }

    #[test]
    fn lambda_zero_is_level_two() {
        let m = model();
        let e = pair(&m);
        let beta = Rationality::default();
        let l4 = l4_query_policy(&m, 1, &e, 0.0, beta).unwrap();
        let l2 = l2_query_policy(&m, &e.beliefs()[1], beta);
        for (a, b) in l4.probs().iter().zip(l2.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
        let q = Query::new(-3.5, -2.5).unwrap();
        assert!((bayes_factor(&m, q, &e, beta, 0.0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identifiability_sums_to_one() {
        let m = model();
        let e = pair(&m);
        let p = Pragmatics::new(&m, &e, Rationality::default()).unwrap();
        let q = Query::new(2.0, 4.0).unwrap();
        let total = p.l4_utility(q, 0).unwrap() + p.l4_utility(q, 1).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(p.l4_query_policy(0, 1.5).is_err());
    }
}
