//! Scenario configuration and its flat `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! prior.mu1 = -3
//! agent.beta_a = 50
//! agent.reward = absolute_distance
//! run.seed = 7
//! ```
//!
//! Unknown keys are rejected; missing keys keep their defaults. Defaults
//! are the unimodal identifiability scenario (`ScenarioConfig::fig2`).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use hoal_core::agents::{MleSearchConfig, QueryLikelihood};
use hoal_core::{
    BeliefParams, Model, QueryGrid, Rationality, RewardForm, SelectionMode, ThetaGrid,
};

use crate::error::{HoalError, Result};
use crate::export::format_real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub prior: BeliefParams,
    pub theta_true: f64,
    pub beta_h: f64,
    pub beta_a: f64,
    pub lambda: f64,
    pub reward: RewardForm,
    pub selection: SelectionMode,
    pub theta_grid: GridSpec,
    pub query_grid: GridSpec,
    pub seed: u64,
    pub n_queries: usize,
    pub exact_likelihood: bool,
    pub mle: MleSearchConfig,
    pub rounds: usize,
    pub learner_level: u8,
    pub teacher_level: u8,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::fig2()
    }
}

impl ScenarioConfig {
    /// Unimodal identifiability: a 0.9/0.1 mixture at ±3 with unit variance.
    pub fn fig2() -> Self {
        Self {
            prior: BeliefParams {
                mu1: -3.0,
                sigma1: 1.0,
                mu2: 3.0,
                sigma2: 1.0,
                p_z: 0.9,
            },
            theta_true: 2.0,
            beta_h: 50.0,
            beta_a: 50.0,
            lambda: 0.5,
            reward: RewardForm::AbsoluteDistance,
            selection: SelectionMode::Sample,
            theta_grid: GridSpec {
                lo: -6.0,
                hi: 6.0,
                n: 241,
            },
            query_grid: GridSpec {
                lo: -6.0,
                hi: 6.0,
                n: 49,
            },
            seed: 0,
            n_queries: 5,
            exact_likelihood: true,
            mle: MleSearchConfig::default(),
            rounds: 20,
            learner_level: 2,
            teacher_level: 1,
        }
    }

    /// Bimodal identifiability: σ = 0.5 per group, p_z = 0.6, 20 queries.
    pub fn fig3() -> Self {
        Self {
            prior: BeliefParams {
                mu1: -3.0,
                sigma1: 0.5,
                mu2: 3.0,
                sigma2: 0.5,
                p_z: 0.6,
            },
            n_queries: 20,
            ..Self::fig2()
        }
    }

    /// False-belief correction: the unimodal prior, θ_true = 2 in the
    /// minority group, 5 observed queries.
    pub fn fig4() -> Self {
        Self::fig2()
    }

    pub fn theta(&self) -> ThetaGrid {
        ThetaGrid::new(self.theta_grid.lo, self.theta_grid.hi, self.theta_grid.n)
            .expect("validated config")
    }

    pub fn queries(&self) -> QueryGrid {
        QueryGrid::new(self.query_grid.lo, self.query_grid.hi, self.query_grid.n)
            .expect("validated config")
    }

    pub fn model(&self) -> Model {
        Model::new(self.theta(), self.queries(), self.reward)
    }

    pub fn rationality_a(&self) -> Rationality {
        Rationality::new(self.beta_a).expect("validated config")
    }

    pub fn rationality_h(&self) -> Rationality {
        Rationality::new(self.beta_h).expect("validated config")
    }

    pub fn likelihood(&self) -> QueryLikelihood {
        if self.exact_likelihood {
            QueryLikelihood::Softmax
        } else {
            QueryLikelihood::SumEig
        }
    }

    /// Checks every invariant; on failure names the offending key.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let p = &self.prior;
        for (key, v) in [
            ("prior.mu1", p.mu1),
            ("prior.mu2", p.mu2),
            ("prior.sigma1", p.sigma1),
            ("prior.sigma2", p.sigma2),
            ("prior.p_z", p.p_z),
        ] {
            if !v.is_finite() {
                return Err((key, "must be finite".into()));
            }
        }
        if p.sigma1 <= 0.0 {
            return Err(("prior.sigma1", "must be positive".into()));
        }
        if p.sigma2 <= 0.0 {
            return Err(("prior.sigma2", "must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p.p_z) {
            return Err(("prior.p_z", "must lie in [0, 1]".into()));
        }
        for (key, v) in [
            ("agent.beta_a", self.beta_a),
            ("teacher.beta_h", self.beta_h),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err((key, "must be finite and nonnegative".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(("agent.lambda", "must lie in [0, 1]".into()));
        }
        if let Err(e) = ThetaGrid::new(self.theta_grid.lo, self.theta_grid.hi, self.theta_grid.n) {
            let key = if self.theta_grid.n < 3 {
                "grid.theta_n"
            } else {
                "grid.theta_hi"
            };
            return Err((key, e.to_string()));
        }
        if let Err(e) = QueryGrid::new(self.query_grid.lo, self.query_grid.hi, self.query_grid.n) {
            let key = if self.query_grid.n < 2 {
                "grid.query_n"
            } else {
                "grid.query_hi"
            };
            return Err((key, e.to_string()));
        }
        if !self.theta_true.is_finite()
            || self.theta_true < self.theta_grid.lo
            || self.theta_true > self.theta_grid.hi
        {
            return Err(("teacher.theta_true", "must lie inside the θ grid".into()));
        }
        if self.n_queries == 0 {
            return Err(("run.n_queries", "must be at least 1".into()));
        }
        let m = &self.mle;
        for (n_key, hi_key, r) in [
            ("mle.mu1_n", "mle.mu1_hi", m.mu1),
            ("mle.mu2_n", "mle.mu2_hi", m.mu2),
            ("mle.sigma_n", "mle.sigma_hi", m.sigma),
            ("mle.pz_n", "mle.pz_hi", m.p_z),
        ] {
            if r.count == 0 {
                return Err((n_key, "must be at least 1".into()));
            }
            if !r.lo.is_finite() || !r.hi.is_finite() || r.lo > r.hi {
                return Err((hi_key, "range must be finite with lo <= hi".into()));
            }
        }
        if m.sigma.lo <= 0.0 {
            return Err(("mle.sigma_lo", "must be positive".into()));
        }
        if m.p_z.lo < 0.0 || m.p_z.hi > 1.0 {
            return Err(("mle.pz_hi", "p_z range must lie in [0, 1]".into()));
        }
        if !(m.refine_shrink > 0.0 && m.refine_shrink < 1.0) {
            return Err(("mle.refine_shrink", "must lie in (0, 1)".into()));
        }
        if self.rounds == 0 {
            return Err(("loop.rounds", "must be at least 1".into()));
        }
        if !matches!(self.learner_level, 2 | 4) {
            return Err(("loop.learner", "learner level must be 2 or 4".into()));
        }
        if !matches!(self.teacher_level, 1 | 3) {
            return Err(("loop.teacher", "teacher level must be 1 or 3".into()));
        }
        Ok(())
    }

    /// Every key with its resolved value, in the canonical key order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        FIELDS.iter().map(|f| (f.key, (f.get)(self))).collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Serializes every key; parsing the result yields an equal config.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "config line {l}: `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "config line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "config `{k}`: {}", self.message),
            (None, None) => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Setter = fn(&mut ScenarioConfig, &str) -> std::result::Result<(), String>;
type Getter = fn(&ScenarioConfig) -> String;

struct Field {
    key: &'static str,
    get: Getter,
    set: Setter,
}

fn real(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("must be finite".into())
    }
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse()
        .map_err(|_| format!("expected a nonnegative integer, got `{v}`"))
}

fn level(v: &str) -> std::result::Result<u8, String> {
    v.parse()
        .map_err(|_| format!("expected an agent level, got `{v}`"))
}

macro_rules! field {
    ($key:literal, real, $($path:tt)+) => {
        Field {
            key: $key,
            get: |c| format_real(c.$($path)+),
            set: |c, v| {
                c.$($path)+ = real(v)?;
                Ok(())
            },
        }
    };
    ($key:literal, count, $($path:tt)+) => {
        Field {
            key: $key,
            get: |c| c.$($path)+.to_string(),
            set: |c, v| {
                c.$($path)+ = count(v)?;
                Ok(())
            },
        }
    };
    ($key:literal, level, $($path:tt)+) => {
        Field {
            key: $key,
            get: |c| c.$($path)+.to_string(),
            set: |c, v| {
                c.$($path)+ = level(v)?;
                Ok(())
            },
        }
    };
}

static FIELDS: &[Field] = &[
    field!("prior.mu1", real, prior.mu1),
    field!("prior.sigma1", real, prior.sigma1),
    field!("prior.mu2", real, prior.mu2),
    field!("prior.sigma2", real, prior.sigma2),
    field!("prior.p_z", real, prior.p_z),
    field!("teacher.theta_true", real, theta_true),
    field!("teacher.beta_h", real, beta_h),
    field!("agent.beta_a", real, beta_a),
    field!("agent.lambda", real, lambda),
    Field {
        key: "agent.reward",
        get: |c| c.reward.name().to_string(),
        set: |c, v| {
            c.reward = v.parse().map_err(|e: hoal_core::Error| e.to_string())?;
            Ok(())
        },
    },
    Field {
        key: "agent.selection",
        get: |c| c.selection.name().to_string(),
        set: |c, v| {
            c.selection = v.parse().map_err(|e: hoal_core::Error| e.to_string())?;
            Ok(())
        },
    },
    field!("grid.theta_lo", real, theta_grid.lo),
    field!("grid.theta_hi", real, theta_grid.hi),
    field!("grid.theta_n", count, theta_grid.n),
    field!("grid.query_lo", real, query_grid.lo),
    field!("grid.query_hi", real, query_grid.hi),
    field!("grid.query_n", count, query_grid.n),
    Field {
        key: "run.seed",
        get: |c| c.seed.to_string(),
        set: |c, v| {
            c.seed = v
                .parse()
                .map_err(|_| format!("expected a 64-bit unsigned seed, got `{v}`"))?;
            Ok(())
        },
    },
    field!("run.n_queries", count, n_queries),
    Field {
        key: "run.exact_likelihood",
        get: |c| c.exact_likelihood.to_string(),
        set: |c, v| {
            c.exact_likelihood = v
                .parse()
                .map_err(|_| format!("expected true or false, got `{v}`"))?;
            Ok(())
        },
    },
    field!("mle.mu1_lo", real, mle.mu1.lo),
    field!("mle.mu1_hi", real, mle.mu1.hi),
    field!("mle.mu1_n", count, mle.mu1.count),
    field!("mle.mu2_lo", real, mle.mu2.lo),
    field!("mle.mu2_hi", real, mle.mu2.hi),
    field!("mle.mu2_n", count, mle.mu2.count),
    field!("mle.sigma_lo", real, mle.sigma.lo),
    field!("mle.sigma_hi", real, mle.sigma.hi),
    field!("mle.sigma_n", count, mle.sigma.count),
    field!("mle.pz_lo", real, mle.p_z.lo),
    field!("mle.pz_hi", real, mle.p_z.hi),
    field!("mle.pz_n", count, mle.p_z.count),
    field!("mle.refine_iters", count, mle.refine_iters),
    field!("mle.refine_shrink", real, mle.refine_shrink),
    field!("loop.rounds", count, rounds),
    field!("loop.learner", level, learner_level),
    field!("loop.teacher", level, teacher_level),
];

/// Parses config text over `base`.
pub fn parse_config_str(
    text: &str,
    base: ScenarioConfig,
) -> std::result::Result<ScenarioConfig, ConfigError> {
    let mut cfg = base;
    let mut lines_by_key: HashMap<&'static str, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line_no),
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(field) = FIELDS.iter().find(|f| f.key == key) else {
            return Err(ConfigError {
                line: Some(line_no),
                key: Some(key.to_string()),
                message: "unknown key".into(),
            });
        };
        if let Some(prev) = lines_by_key.insert(field.key, line_no) {
            return Err(ConfigError {
                line: Some(line_no),
                key: Some(key.to_string()),
                message: format!("duplicate key (first set on line {prev})"),
            });
        }
        (field.set)(&mut cfg, value).map_err(|message| ConfigError {
            line: Some(line_no),
            key: Some(key.to_string()),
            message,
        })?;
    }
    cfg.validate().map_err(|(key, message)| ConfigError {
        line: lines_by_key.get(key).copied(),
        key: Some(key.to_string()),
        message,
    })?;
    Ok(cfg)
}

/// Reads a config file over the default scenario.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config_file(path, ScenarioConfig::default())
}

pub fn parse_config_file(path: &Path, base: ScenarioConfig) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HoalError::io(path, e))?;
    Ok(parse_config_str(&text, base)?)
}
