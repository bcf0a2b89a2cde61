//! Seeded reproductions of the identifiability and belief-correction
//! experiments, plus a generic learner/teacher loop.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde::Serialize;

use hoal_core::agents::{
    l2_query_policy, l3_answer_policy, l3_teaching_policy, MleEstimate, MleSearcher, Pragmatics,
    QueryLikelihood,
};
use hoal_core::bayes::posterior_update;
use hoal_core::stats::pearson;
use hoal_core::{
    derive_subseed, entropy, sample_answer, Answer, BeliefParams, GridBelief, GridEnsemble,
    LabeledExample, Model, Query, SeededRng,
};

use crate::config::ScenarioConfig;
use crate::error::{HoalError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TeachingOutcome {
    pub example: LabeledExample,
    pub utility: f64,
    /// Learner posterior mass at the cell of θ_true after the example,
    /// under the learner's actual belief.
    pub learner_mass_at_truth: f64,
    /// Per query candidate, the utility of the better answer.
    pub utility_map: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TeachingReport {
    pub theta_true: f64,
    pub prior_mass_at_truth: f64,
    pub uniform: TeachingOutcome,
    pub adaptive: TeachingOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub queries: Vec<Query>,
    pub estimate: MleEstimate,
    /// Mass of the estimated belief on θ > 0.
    pub estimated_mass_above_zero: f64,
    pub true_eig: Vec<f64>,
    pub estimated_eig: Vec<f64>,
    /// Pearson correlation over the off-diagonal candidates.
    pub correlation: f64,
    pub estimated_belief: Vec<f64>,
    pub teaching: Option<TeachingReport>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopStep {
    pub round: usize,
    pub query: Query,
    pub answer: Answer,
    pub entropy: f64,
    pub mass_at_truth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopTrace {
    pub learner_level: u8,
    pub teacher_level: u8,
    pub initial_entropy: f64,
    pub initial_mass_at_truth: f64,
    pub steps: Vec<LoopStep>,
}

struct Timer(Vec<(String, f64)>, Instant);

impl Timer {
    fn new() -> Self {
        Self(Vec::new(), Instant::now())
    }

    fn lap(&mut self, label: &str) {
        let now = Instant::now();
        self.0
            .push((label.to_string(), (now - self.1).as_secs_f64()));
        self.1 = now;
    }
}

fn check(cfg: &ScenarioConfig) -> Result<()> {
    cfg.validate().map_err(|(key, message)| {
        HoalError::Config(crate::config::ConfigError {
            line: None,
            key: Some(key.to_string()),
            message,
        })
    })
}

type NormalizerCache = Mutex<HashMap<String, Arc<Vec<f64>>>>;

/// Coarse-grid normalizers depend only on the model, search grid and β_a,
/// so they are shared by every run in the process.
fn coarse_normalizers(cfg: &ScenarioConfig, model: &Model) -> Result<Arc<Vec<f64>>> {
    static CACHE: OnceLock<NormalizerCache> = OnceLock::new();
    let key = format!(
        "{:?}|{:?}|{:?}|{:?}|{}",
        cfg.theta_grid,
        cfg.query_grid,
        cfg.reward,
        cfg.mle,
        cfg.beta_a.to_bits()
    );
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().expect("cache lock").get(&key) {
        return Ok(v.clone());
    }
    let searcher = MleSearcher::new(
        model,
        cfg.mle,
        QueryLikelihood::Softmax,
        cfg.rationality_a(),
    )?;
    let v = Arc::new(
        searcher
            .coarse_log_normalizers()
            .unwrap_or_default()
            .to_vec(),
    );
    cache.lock().expect("cache lock").insert(key, v.clone());
    Ok(v)
}

/// MLE of the belief behind `queries`.
pub fn estimate_belief(
    cfg: &ScenarioConfig,
    model: &Model,
    queries: &[Query],
) -> Result<MleEstimate> {
    check(cfg)?;
    let searcher = match cfg.likelihood() {
        QueryLikelihood::Softmax => {
            let lz = coarse_normalizers(cfg, model)?;
            MleSearcher::with_coarse_log_normalizers(
                model,
                cfg.mle,
                cfg.rationality_a(),
                lz.to_vec(),
            )?
        }
        QueryLikelihood::SumEig => {
            MleSearcher::new(model, cfg.mle, QueryLikelihood::SumEig, cfg.rationality_a())?
        }
    };
    Ok(searcher.estimate(queries)?)
}

/// Draws `cfg.n_queries` queries from the level-2 policy of `b`.
pub fn sample_queries(cfg: &ScenarioConfig, model: &Model, b: &GridBelief) -> Result<Vec<Query>> {
    let policy = l2_query_policy(model, b, cfg.rationality_a());
    let mut rng = SeededRng::new(derive_subseed(cfg.seed, "queries", 0)?);
    Ok((0..cfg.n_queries)
        .map(|_| policy.select(cfg.selection, &mut rng))
        .collect())
}

/// Pearson correlation of two EIG maps, skipping diagonal candidates.
pub fn off_diagonal_correlation(model: &Model, a: &[f64], b: &[f64]) -> f64 {
    let qg = model.query_grid();
    let keep = |v: &[f64]| -> Vec<f64> {
        (0..qg.len())
            .filter(|i| !qg.is_diagonal(*i))
            .map(|i| v[i])
            .collect()
    };
    pearson(&keep(a), &keep(b)).unwrap_or(0.0)
}

fn identifiability(cfg: &ScenarioConfig, name: &str) -> Result<RunReport> {
    check(cfg)?;
    let mut t = Timer::new();
    let model = cfg.model();
    t.lap("setup");
    let truth = model.discretize(&cfg.prior)?;
    let queries = sample_queries(cfg, &model, &truth)?;
    t.lap("sample_queries");
    let estimate = estimate_belief(cfg, &model, &queries)?;
    t.lap("estimate");
    let est = model.discretize(&estimate.params)?;
    let true_eig = model.eig_map(&truth);
    let estimated_eig = model.eig_map(&est);
    let correlation = off_diagonal_correlation(&model, &true_eig, &estimated_eig);
    t.lap("eig_maps");
    Ok(RunReport {
        experiment: name.to_string(),
        seed: cfg.seed,
        queries,
        estimate,
        estimated_mass_above_zero: est.mass_above(0.0),
        true_eig,
        estimated_eig,
        correlation,
        estimated_belief: est.mass().to_vec(),
        teaching: None,
        timings: t.0,
    })
}

/// Samples queries from the configured (unimodal) belief and checks whether
/// the belief can be recovered from them.
pub fn run_unimodal_identifiability(cfg: &ScenarioConfig) -> Result<RunReport> {
    identifiability(cfg, "unimodal_identifiability")
}

/// As [`run_unimodal_identifiability`] for a belief split over two modes.
pub fn run_bimodal_identifiability(cfg: &ScenarioConfig) -> Result<RunReport> {
    identifiability(cfg, "bimodal_identifiability")
}

fn teaching_outcome(
    cfg: &ScenarioConfig,
    model: &Model,
    teacher_model: GridBelief,
    learner: &GridBelief,
) -> Result<TeachingOutcome> {
    let policy = l3_teaching_policy(
        model,
        cfg.theta_true,
        &GridEnsemble::single(teacher_model),
        cfg.rationality_h(),
    )?;
    let (example, utility) = policy.argmax();
    let post = posterior_update(learner, example.query, example.answer, model.form())?;
    Ok(TeachingOutcome {
        example,
        utility,
        learner_mass_at_truth: post.mass_at(cfg.theta_true),
        utility_map: policy.best_per_query(),
    })
}

/// The learner holds `cfg.prior`, which puts little mass near θ_true. The
/// teacher watches `cfg.n_queries` of its queries, infers its belief, and
/// picks one labeled example; a teacher assuming a uniform learner belief is
/// the baseline.
pub fn run_belief_correction(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut report = identifiability(cfg, "belief_correction")?;
    let mut t = Timer::new();
    let model = cfg.model();
    let learner = model.discretize(&cfg.prior)?;
    let inferred = model.discretize(&report.estimate.params)?;
    let uniform = teaching_outcome(
        cfg,
        &model,
        GridBelief::uniform(*model.theta_grid()),
        &learner,
    )?;
    let adaptive = teaching_outcome(cfg, &model, inferred, &learner)?;
    t.lap("teaching");
    report.teaching = Some(TeachingReport {
        theta_true: cfg.theta_true,
        prior_mass_at_truth: learner.mass_at(cfg.theta_true),
        uniform,
        adaptive,
    });
    report.timings.extend(t.0);
    Ok(report)
}

/// The p_z-flipped alternative the level-4 learner distinguishes itself from.
fn flipped(bp: &BeliefParams) -> BeliefParams {
    BeliefParams {
        p_z: 1.0 - bp.p_z,
        ..*bp
    }
}

/// Learner (level 2 or 4) asks, teacher (level 1 or 3) answers, for
/// `cfg.rounds` rounds. The learner updates literally on every answer.
pub fn run_interaction_loop(cfg: &ScenarioConfig) -> Result<LoopTrace> {
    check(cfg)?;
    let model = cfg.model();
    let form = model.form();
    let mut rng = SeededRng::new(derive_subseed(cfg.seed, "loop", 0)?);
    let mut belief = model.discretize(&cfg.prior)?;
    let mut alternative = model.discretize(&flipped(&cfg.prior))?;
    let initial_entropy = entropy(&belief);
    let initial_mass_at_truth = belief.mass_at(cfg.theta_true);
    let mut steps = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let query = match cfg.learner_level {
            2 => l2_query_policy(&model, &belief, cfg.rationality_a())
                .select(cfg.selection, &mut rng),
            4 => {
                let ens =
                    GridEnsemble::new(vec![belief.clone(), alternative.clone()], vec![0.5, 0.5])?;
                Pragmatics::new(&model, &ens, cfg.rationality_a())?
                    .l4_query_policy(0, cfg.lambda)?
                    .select(cfg.selection, &mut rng)
            }
            l => return Err(HoalError::Setup(format!("unsupported learner level {l}"))),
        };
        let answer = match cfg.teacher_level {
            1 => sample_answer(cfg.theta_true, query, form, &mut rng)?,
            3 => {
                let p1 = l3_answer_policy(
                    cfg.theta_true,
                    query,
                    &GridEnsemble::single(belief.clone()),
                    cfg.rationality_h(),
                    form,
                )?;
                if rng.next_f64() < p1 {
                    Answer::PrefersSecond
                } else {
                    Answer::PrefersFirst
                }
            }
            l => return Err(HoalError::Setup(format!("unsupported teacher level {l}"))),
        };
        belief = posterior_update(&belief, query, answer, form)?;
        if cfg.learner_level == 4 {
            alternative =
                posterior_update(&alternative, query, answer, form).unwrap_or(alternative);
        }
        steps.push(LoopStep {
            round,
            query,
            answer,
            entropy: entropy(&belief),
            mass_at_truth: belief.mass_at(cfg.theta_true),
        });
    }
    Ok(LoopTrace {
        learner_level: cfg.learner_level,
        teacher_level: cfg.teacher_level,
        initial_entropy,
        initial_mass_at_truth,
        steps,
    })
}
