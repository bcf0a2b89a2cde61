//! Maximum-likelihood belief attribution: find the mixture parameters under
//! which an observed set of queries is most plausible for a level-2 learner.
//!
//! Search is a coarse grid over canonical parameter space (`μ₁ ≤ μ₂`,
//! log-spaced σ) followed by a few rounds of a 3⁵ local grid around the
//! incumbent, halving (by default) the step each round.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::bayes::AnswerTable;
use crate::belief::{discretize_belief, BeliefParams, GridBelief};
use crate::error::{finite, invalid, Error, Result};
use crate::math::{exp, ln, log_sum_exp};
use crate::par::map_indexed;
use crate::policy::Rationality;
use crate::preference::Query;

use super::Model;

/// `count` evenly spaced values on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let r = Self { lo, hi, count };
        r.validate("range")?;
        Ok(r)
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        finite(name, self.lo)?;
        finite(name, self.hi)?;
        if self.count == 0 {
            return Err(invalid(name, "count must be at least 1"));
        }
        if self.lo > self.hi {
            return Err(invalid(name, "lo must not exceed hi"));
        }
        Ok(())
    }

    fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else if i + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }

    fn step(&self) -> f64 {
        if self.count > 1 {
            (self.hi - self.lo) / (self.count - 1) as f64
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MleSearchConfig {
    pub mu1: ParamRange,
    pub mu2: ParamRange,
    /// Applied to both σ₁ and σ₂, log-spaced.
    pub sigma: ParamRange,
    pub p_z: ParamRange,
    pub refine_iters: usize,
    pub refine_shrink: f64,
}

impl Default for MleSearchConfig {
    fn default() -> Self {
        Self {
            mu1: ParamRange {
                lo: -6.0,
                hi: 0.0,
                count: 13,
            },
            mu2: ParamRange {
                lo: 0.0,
                hi: 6.0,
                count: 13,
            },
            sigma: ParamRange {
                lo: 0.25,
                hi: 2.0,
                count: 4,
            },
            p_z: ParamRange {
                lo: 0.1,
                hi: 0.9,
                count: 9,
            },
            refine_iters: 3,
            refine_shrink: 0.5,
        }
    }
}

impl MleSearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.mu1.validate("mle.mu1")?;
        self.mu2.validate("mle.mu2")?;
        self.sigma.validate("mle.sigma")?;
        self.p_z.validate("mle.p_z")?;
        if self.sigma.lo <= 0.0 {
            return Err(invalid("mle.sigma", "must be positive"));
        }
        if self.p_z.lo < 0.0 || self.p_z.hi > 1.0 {
            return Err(invalid("mle.p_z", "must lie in [0, 1]"));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return Err(invalid("mle.refine_shrink", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn log_sigma(&self) -> ParamRange {
        ParamRange {
            lo: ln(self.sigma.lo),
            hi: ln(self.sigma.hi),
            count: self.sigma.count,
        }
    }

    /// Coarse grid in enumeration order μ₁, σ₁, μ₂, σ₂, p_z (last fastest).
    pub fn coarse_points(&self) -> Vec<BeliefParams> {
        let ls = self.log_sigma();
        let mut out = Vec::with_capacity(
            self.mu1.count * self.mu2.count * self.sigma.count * self.sigma.count * self.p_z.count,
        );
        for a in 0..self.mu1.count {
            for b in 0..self.sigma.count {
                for c in 0..self.mu2.count {
                    for d in 0..self.sigma.count {
                        for e in 0..self.p_z.count {
                            out.push(
                                BeliefParams {
                                    mu1: self.mu1.value(a),
                                    sigma1: exp(ls.value(b)),
                                    mu2: self.mu2.value(c),
                                    sigma2: exp(ls.value(d)),
                                    p_z: self.p_z.value(e),
                                }
                                .canonical(),
                            );
                        }
                    }
                }
            }
        }
        out
    }
}

/// How observed queries are scored against a candidate belief.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum QueryLikelihood {
    /// `Σ_i EIG(q_i)`: the level-2 log-likelihood with the belief-dependent
    /// softmax normalizer dropped.
    SumEig,
    /// `Σ_i [β·EIG(q_i) - ln Σ_ξ exp(β·EIG(ξ))]`.
    #[default]
    Softmax,
}

fn log_normalizer(model: &Model, mass: &[f64], beta: Rationality) -> f64 {
    let scaled: Vec<f64> = model
        .table()
        .eig_map_seq(mass)
        .into_iter()
        .map(|e| beta.value() * e)
        .collect();
    log_sum_exp(&scaled)
}

pub fn mle_objective(
    model: &Model,
    dataset: &[Query],
    bp: &BeliefParams,
    likelihood: QueryLikelihood,
    beta_a: Rationality,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Empty("query dataset"));
    }
    let b = model.discretize(bp)?;
    let sum: f64 = dataset.iter().map(|q| model.eig_at(&b, *q)).sum();
    Ok(match likelihood {
        QueryLikelihood::SumEig => sum,
        QueryLikelihood::Softmax => {
            beta_a.value() * sum - dataset.len() as f64 * log_normalizer(model, b.mass(), beta_a)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MleEstimate {
    pub params: BeliefParams,
    pub objective: f64,
    /// Best objective over the coarse grid alone.
    pub coarse_objective: f64,
}

/// Reusable search state. With the softmax likelihood the per-belief
/// normalizers over the coarse grid do not depend on the data, so they are
/// computed once here and shared by every [`MleSearcher::estimate`] call.
#[derive(Clone, Debug)]
pub struct MleSearcher<'m> {
    model: &'m Model,
    cfg: MleSearchConfig,
    likelihood: QueryLikelihood,
    beta: Rationality,
    coarse: Vec<BeliefParams>,
    coarse_log_z: Option<Vec<f64>>,
}

impl<'m> MleSearcher<'m> {
    pub fn new(
        model: &'m Model,
        cfg: MleSearchConfig,
        likelihood: QueryLikelihood,
        beta_a: Rationality,
    ) -> Result<Self> {
        let mut s = Self::bare(model, cfg, likelihood, beta_a)?;
        if likelihood == QueryLikelihood::Softmax {
            let pts = &s.coarse;
            s.coarse_log_z = Some(map_indexed(pts.len(), |i| {
                match discretize_belief(&pts[i], model.theta_grid()) {
                    Ok(b) => log_normalizer(model, b.mass(), beta_a),
                    Err(_) => f64::NAN,
                }
            }));
        }
        Ok(s)
    }

    /// Reuses normalizers from an earlier searcher with the same model,
    /// config and rationality.
    pub fn with_coarse_log_normalizers(
        model: &'m Model,
        cfg: MleSearchConfig,
        beta_a: Rationality,
        log_z: Vec<f64>,
    ) -> Result<Self> {
        let mut s = Self::bare(model, cfg, QueryLikelihood::Softmax, beta_a)?;
        if log_z.len() != s.coarse.len() {
            return Err(invalid("log_z", "one normalizer per coarse grid point"));
        }
        s.coarse_log_z = Some(log_z);
        Ok(s)
    }

    fn bare(
        model: &'m Model,
        cfg: MleSearchConfig,
        likelihood: QueryLikelihood,
        beta: Rationality,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            model,
            coarse: cfg.coarse_points(),
            cfg,
            likelihood,
            beta,
            coarse_log_z: None,
        })
    }

    pub fn coarse_points(&self) -> &[BeliefParams] {
        &self.coarse
    }

    pub fn coarse_log_normalizers(&self) -> Option<&[f64]> {
        self.coarse_log_z.as_deref()
    }

    fn score(&self, rows: &AnswerTable, b: &GridBelief, log_z: Option<f64>) -> f64 {
        let mass = b.mass();
        let sum: f64 = (0..rows.len()).map(|i| rows.eig(i, mass)).sum();
        match self.likelihood {
            QueryLikelihood::SumEig => sum,
            QueryLikelihood::Softmax => {
                let lz = log_z.unwrap_or_else(|| log_normalizer(self.model, mass, self.beta));
                self.beta.value() * sum - rows.len() as f64 * lz
            }
        }
    }

    fn score_params(&self, rows: &AnswerTable, bp: &BeliefParams, log_z: Option<f64>) -> f64 {
        match discretize_belief(bp, self.model.theta_grid()) {
            Ok(b) => {
                let s = self.score(rows, &b, log_z);
                if s.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    s
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub fn estimate(&self, dataset: &[Query]) -> Result<MleEstimate> {
        if dataset.is_empty() {
            return Err(Error::Empty("query dataset"));
        }
        let rows = AnswerTable::from_queries(
            *self.model.theta_grid(),
            dataset.to_vec(),
            self.model.form(),
        );
        let scores = map_indexed(self.coarse.len(), |i| {
            let lz = self.coarse_log_z.as_ref().map(|v| v[i]);
            self.score_params(&rows, &self.coarse[i], lz)
        });
        let (mut best, mut best_score) = (self.coarse[0], scores[0]);
        for (p, s) in self.coarse.iter().zip(&scores).skip(1) {
            if *s > best_score {
                best = *p;
                best_score = *s;
            }
        }
        if !best_score.is_finite() {
            return Err(Error::DegenerateBelief);
        }
        let coarse_objective = best_score;

        let ls = self.cfg.log_sigma();
        let mut step = [
            self.cfg.mu1.step(),
            ls.step(),
            self.cfg.mu2.step(),
            ls.step(),
            self.cfg.p_z.step(),
        ];
        for _ in 0..self.cfg.refine_iters {
            step.iter_mut().for_each(|s| *s *= self.cfg.refine_shrink);
            let local = self.local_grid(&best, &step);
            let scores = map_indexed(local.len(), |i| self.score_params(&rows, &local[i], None));
            for (p, s) in local.iter().zip(&scores) {
                if *s > best_score {
                    best = *p;
                    best_score = *s;
                }
            }
        }
        Ok(MleEstimate {
            params: best,
            objective: best_score,
            coarse_objective,
        })
    }

    /// The 3⁵ neighbourhood of `center`, clamped to the coarse ranges
    /// (p_z to [0, 1]) and canonicalized.
    fn local_grid(&self, center: &BeliefParams, step: &[f64; 5]) -> Vec<BeliefParams> {
        let c = [
            center.mu1,
            ln(center.sigma1),
            center.mu2,
            ln(center.sigma2),
            center.p_z,
        ];
        let ls = self.cfg.log_sigma();
        let bounds = [
            (self.cfg.mu1.lo, self.cfg.mu1.hi),
            (ls.lo, ls.hi),
            (self.cfg.mu2.lo, self.cfg.mu2.hi),
            (ls.lo, ls.hi),
            (0.0, 1.0),
        ];
        let mut out = Vec::with_capacity(243);
        for code in 0..243usize {
            let mut v = [0.0; 5];
            let mut rest = code;
            for d in 0..5 {
                let offset = (rest % 3) as f64 - 1.0;
                rest /= 3;
                let (lo, hi) = bounds[d];
                let lo = lo.min(c[d]);
                let hi = hi.max(c[d]);
                v[d] = (c[d] + offset * step[d]).clamp(lo, hi);
            }
            out.push(
                BeliefParams {
                    mu1: v[0],
                    sigma1: exp(v[1]),
                    mu2: v[2],
                    sigma2: exp(v[3]),
                    p_z: v[4],
                }
                .canonical(),
            );
        }
        out
    }
}

/// One-shot search; see [`MleSearcher`] to reuse normalizers across datasets.
pub fn mle_belief(
    model: &Model,
    dataset: &[Query],
    cfg: &MleSearchConfig,
    likelihood: QueryLikelihood,
    beta_a: Rationality,
) -> Result<MleEstimate> {
    MleSearcher::new(model, *cfg, likelihood, beta_a)?.estimate(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{QueryGrid, ThetaGrid};
    use crate::RewardForm;

    fn small_model() -> Model {
        Model::new(
            ThetaGrid::new(-6.0, 6.0, 121).unwrap(),
            QueryGrid::new(-6.0, 6.0, 13).unwrap(),
            RewardForm::AbsoluteDistance,
        )
    }

    fn small_cfg() -> MleSearchConfig {
        MleSearchConfig {
            mu1: ParamRange::new(-6.0, 0.0, 7).unwrap(),
            mu2: ParamRange::new(0.0, 6.0, 7).unwrap(),
            sigma: ParamRange::new(0.5, 2.0, 3).unwrap(),
            p_z: ParamRange::new(0.1, 0.9, 5).unwrap(),
            refine_iters: 2,
            refine_shrink: 0.5,
        }
    }

    #[test]
    fn default_coarse_grid_matches_documented_values() {
        let cfg = MleSearchConfig::default();
        let pts = cfg.coarse_points();
        assert_eq!(pts.len(), 13 * 13 * 4 * 4 * 9);
        let mut sigmas: Vec<f64> = pts.iter().map(|p| p.sigma1).collect();
        sigmas.sort_by(f64::total_cmp);
        sigmas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(sigmas.len(), 4);
        for (s, want) in sigmas.iter().zip([0.25, 0.5, 1.0, 2.0]) {
            assert!((s - want).abs() < 1e-12);
        }
        assert!(pts.iter().all(BeliefParams::is_canonical));
    }

    #[test]
    fn diagonal_dataset_scores_zero() {
        let m = small_model();
        let d = [
            Query::new(1.0, 1.0).unwrap(),
            Query::new(-2.0, -2.0).unwrap(),
        ];
        for bp in small_cfg().coarse_points().iter().step_by(97) {
            assert_eq!(
                mle_objective(&m, &d, bp, QueryLikelihood::SumEig, Rationality::default()).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn zero_beta_softmax_is_uniform_log_likelihood() {
        let m = small_model();
        let d = [
            Query::new(-4.0, -2.0).unwrap(),
            Query::new(0.0, 3.0).unwrap(),
        ];
        let want = -2.0 * libm::log(m.query_grid().len() as f64);
        for bp in small_cfg().coarse_points().iter().step_by(131) {
            let v = mle_objective(
                &m,
                &d,
                bp,
                QueryLikelihood::Softmax,
                Rationality::new(0.0).unwrap(),
            )
            .unwrap();
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn output_beats_every_coarse_point() {
        let m = small_model();
        let d = [
            Query::new(-4.0, -2.0).unwrap(),
            Query::new(-3.5, -2.5).unwrap(),
            Query::new(2.0, 4.0).unwrap(),
        ];
        let cfg = small_cfg();
        for lik in [QueryLikelihood::SumEig, QueryLikelihood::Softmax] {
            let beta = Rationality::new(20.0).unwrap();
            let est = mle_belief(&m, &d, &cfg, lik, beta).unwrap();
            assert!(est.params.is_canonical());
            let direct = mle_objective(&m, &d, &est.params, lik, beta).unwrap();
            assert!((direct - est.objective).abs() < 1e-9);
            for bp in cfg.coarse_points().iter().step_by(17) {
                assert!(est.objective >= mle_objective(&m, &d, bp, lik, beta).unwrap() - 1e-12);
            }
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        let m = small_model();
        assert!(mle_belief(
            &m,
            &[],
            &small_cfg(),
            QueryLikelihood::SumEig,
            Rationality::default()
        )
        .is_err());
    }
}
