//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hoal_core::agents::Pragmatics;
use hoal_core::{BeliefParams, GridEnsemble, Query};

use crate::config::{parse_config_file, ScenarioConfig};
use crate::error::{HoalError, Result};
use crate::export::{
    format_real, read_queries_csv, render_heatmap_svg, write_belief_csv, write_bytes,
    write_eig_csv, write_manifest, write_queries_csv, write_teaching_csv, write_trace_csv,
    Manifest,
};
use crate::harness::{
    estimate_belief, run_belief_correction, run_bimodal_identifiability, run_interaction_loop,
    run_unimodal_identifiability, RunReport,
};

#[derive(Parser, Debug)]
#[command(
    name = "hoal",
    version,
    about = "Recursive preference-learning agents on a 1-D preference grid"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file; missing keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Score queries with the normalized level-2 likelihood (the default).
    #[arg(long, global = true, conflicts_with = "sum_eig_likelihood")]
    exact_likelihood: bool,
    /// Score queries with the unnormalized sum of EIG.
    #[arg(long, global = true)]
    sum_eig_likelihood: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one of the three experiments and write every artifact.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// EIG map of the configured prior.
    EigMap,
    /// Maximum-likelihood belief behind a queries CSV (header `x1,x2`).
    EstimateBelief {
        #[arg(long, value_name = "CSV")]
        queries: PathBuf,
    },
    /// Teaching policy from the belief-correction scenario.
    Teach {
        #[arg(value_enum)]
        teacher: TeacherKind,
    },
    /// Learner/teacher interaction loop.
    Loop {
        /// Learner level (2 or 4), overriding `loop.learner`.
        #[arg(long)]
        learner: Option<u8>,
        /// Teacher level (1 or 3), overriding `loop.teacher`.
        #[arg(long)]
        teacher: Option<u8>,
        /// Rounds, overriding `loop.rounds`.
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Literal-versus-pragmatic Bayes factor of one query. The observer's
    /// ensemble is the configured prior and its p_z-flipped twin, 0.5 each.
    IntentBf {
        #[arg(long, value_name = "X1,X2", allow_hyphen_values = true, value_parser = parse_query)]
        query: Query,
        /// Weight on conveying the belief, overriding `agent.lambda`.
        #[arg(long)]
        lambda: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TeacherKind {
    Uniform,
    Adaptive,
}

fn parse_query(s: &str) -> std::result::Result<Query, String> {
    let (a, b) = s.split_once(',').ok_or("expected X1,X2")?;
    let x1: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let x2: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Query::new(x1, x2).map_err(|e| e.to_string())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads.unwrap_or(0))
        .build();
    let result = match pool {
        Ok(pool) => pool.install(|| execute(&cli)),
        Err(e) => Err(HoalError::Setup(e.to_string())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn resolve(common: &Common, base: ScenarioConfig) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => parse_config_file(p, base)?,
        None => base,
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.exact_likelihood {
        cfg.exact_likelihood = true;
    }
    if common.sum_eig_likelihood {
        cfg.exact_likelihood = false;
    }
    Ok(cfg)
}

struct Outputs<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path, command: &str, cfg: &ScenarioConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| HoalError::io(dir, e))?;
        Ok(Self {
            dir,
            manifest: Manifest::new(command, cfg),
        })
    }

    fn emit(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<String>) -> Result<()> {
        let sum = f(&self.dir.join(name))?;
        self.manifest.outputs.insert(name.to_string(), sum);
        Ok(())
    }

    fn finish(mut self, timings: &[(String, f64)], started: Instant) -> Result<()> {
        for (k, v) in timings {
            self.manifest.timings.insert(k.clone(), *v);
        }
        self.manifest
            .timings
            .insert("total".into(), started.elapsed().as_secs_f64());
        write_manifest(&self.manifest, &self.dir.join("manifest.json"))
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    let started = Instant::now();
    match &cli.command {
        Command::Reproduce { figure } => {
            let (base, name) = match figure {
                Figure::Fig2 => (ScenarioConfig::fig2(), "reproduce fig2"),
                Figure::Fig3 => (ScenarioConfig::fig3(), "reproduce fig3"),
                Figure::Fig4 => (ScenarioConfig::fig4(), "reproduce fig4"),
            };
            let cfg = resolve(common, base)?;
            let report = match figure {
                Figure::Fig2 => run_unimodal_identifiability(&cfg)?,
                Figure::Fig3 => run_bimodal_identifiability(&cfg)?,
                Figure::Fig4 => run_belief_correction(&cfg)?,
            };
            let mut out = Outputs::new(&common.out, name, &cfg)?;
            write_report(&mut out, &cfg, &report)?;
            print_summary(&report);
            out.finish(&report.timings, started)
        }
        Command::EigMap => {
            let cfg = resolve(common, ScenarioConfig::default())?;
            cfg_ok(&cfg)?;
            let model = cfg.model();
            let map = model.eig_map(&model.discretize(&cfg.prior)?);
            let mut out = Outputs::new(&common.out, "eig-map", &cfg)?;
            out.emit("eig.csv", |p| write_eig_csv(&map, model.query_grid(), p))?;
            out.emit("eig.svg", |p| {
                render_heatmap_svg(&map, model.query_grid(), &[], p)
            })?;
            println!(
                "wrote {} candidates to {}",
                map.len(),
                common.out.join("eig.csv").display()
            );
            out.finish(&[], started)
        }
        Command::EstimateBelief { queries } => {
            let cfg = resolve(common, ScenarioConfig::default())?;
            let qs = read_queries_csv(queries)?;
            let est = estimate_belief(&cfg, &cfg.model(), &qs)?;
            println!("{}", params_line(&est.params));
            Ok(())
        }
        Command::Teach { teacher } => {
            let cfg = resolve(common, ScenarioConfig::fig4())?;
            let report = run_belief_correction(&cfg)?;
            let teaching = report.teaching.as_ref().expect("belief correction teaches");
            let (label, outcome) = match teacher {
                TeacherKind::Uniform => ("uniform", &teaching.uniform),
                TeacherKind::Adaptive => ("adaptive", &teaching.adaptive),
            };
            let model = cfg.model();
            let policy = teacher_policy(&cfg, &model, &report, *teacher)?;
            let mut out = Outputs::new(&common.out, &format!("teach {label}"), &cfg)?;
            out.emit(&format!("teaching_{label}.csv"), |p| {
                write_teaching_csv(&policy, model.query_grid(), p)
            })?;
            let ex = outcome.example;
            println!(
                "{},{},{},{}",
                format_real(ex.query.x1),
                format_real(ex.query.x2),
                ex.answer.bit(),
                format_real(outcome.utility)
            );
            out.finish(&report.timings, started)
        }
        Command::Loop {
            learner,
            teacher,
            rounds,
        } => {
            let mut cfg = resolve(common, ScenarioConfig::default())?;
            if let Some(l) = learner {
                cfg.learner_level = *l;
            }
            if let Some(t) = teacher {
                cfg.teacher_level = *t;
            }
            if let Some(r) = rounds {
                cfg.rounds = *r;
            }
            let trace = run_interaction_loop(&cfg)?;
            let mut out = Outputs::new(&common.out, "loop", &cfg)?;
            out.emit("trace.csv", |p| write_trace_csv(&trace, p))?;
            let last = trace.steps.last().expect("at least one round");
            println!(
                "entropy {} -> {}, mass at truth {} -> {}",
                format_real(trace.initial_entropy),
                format_real(last.entropy),
                format_real(trace.initial_mass_at_truth),
                format_real(last.mass_at_truth)
            );
            out.finish(&[], started)
        }
        Command::IntentBf { query, lambda } => {
            let mut cfg = resolve(common, ScenarioConfig::default())?;
            if let Some(l) = lambda {
                cfg.lambda = *l;
            }
            cfg_ok(&cfg)?;
            println!("{}", format_real(intent_bayes_factor(&cfg, *query)?));
            Ok(())
        }
    }
}

fn cfg_ok(cfg: &ScenarioConfig) -> Result<()> {
    cfg.validate().map_err(|(key, message)| {
        HoalError::Config(crate::config::ConfigError {
            line: None,
            key: Some(key.into()),
            message,
        })
    })
}

/// Bayes factor of `q` for an observer holding the configured prior and its
/// p_z-flipped twin with weight 0.5 each.
pub fn intent_bayes_factor(cfg: &ScenarioConfig, q: Query) -> Result<f64> {
    cfg_ok(cfg)?;
    let model = cfg.model();
    let twin = BeliefParams {
        p_z: 1.0 - cfg.prior.p_z,
        ..cfg.prior
    };
    let ens = GridEnsemble::new(
        vec![model.discretize(&cfg.prior)?, model.discretize(&twin)?],
        vec![0.5, 0.5],
    )?;
    Ok(Pragmatics::new(&model, &ens, cfg.rationality_a())?.bayes_factor(q, cfg.lambda)?)
}

fn params_line(p: &BeliefParams) -> String {
    [p.mu1, p.sigma1, p.mu2, p.sigma2, p.p_z]
        .iter()
        .map(|v| format_real(*v))
        .collect::<Vec<_>>()
        .join(",")
}

fn teacher_policy(
    cfg: &ScenarioConfig,
    model: &hoal_core::Model,
    report: &RunReport,
    kind: TeacherKind,
) -> Result<Vec<f64>> {
    let belief = match kind {
        TeacherKind::Uniform => hoal_core::GridBelief::uniform(*model.theta_grid()),
        TeacherKind::Adaptive => model.discretize(&report.estimate.params)?,
    };
    let policy = hoal_core::agents::l3_teaching_policy(
        model,
        cfg.theta_true,
        &GridEnsemble::single(belief),
        cfg.rationality_h(),
    )?;
    Ok(policy.utilities().to_vec())
}

fn write_report(out: &mut Outputs<'_>, cfg: &ScenarioConfig, report: &RunReport) -> Result<()> {
    let model = cfg.model();
    let qg = *model.query_grid();
    out.emit("queries.csv", |p| write_queries_csv(&report.queries, p))?;
    out.emit("eig_true.csv", |p| write_eig_csv(&report.true_eig, &qg, p))?;
    out.emit("eig_estimated.csv", |p| {
        write_eig_csv(&report.estimated_eig, &qg, p)
    })?;
    let est = model.discretize(&report.estimate.params)?;
    out.emit("belief_estimated.csv", |p| write_belief_csv(&est, p))?;
    let truth = model.discretize(&cfg.prior)?;
    out.emit("belief_true.csv", |p| write_belief_csv(&truth, p))?;
    out.emit("eig_true.svg", |p| {
        render_heatmap_svg(&report.true_eig, &qg, &report.queries, p)
    })?;
    out.emit("eig_estimated.svg", |p| {
        render_heatmap_svg(&report.estimated_eig, &qg, &report.queries, p)
    })?;
    if let Some(t) = &report.teaching {
        for (label, kind, outcome) in [
            ("uniform", TeacherKind::Uniform, &t.uniform),
            ("adaptive", TeacherKind::Adaptive, &t.adaptive),
        ] {
            let utilities = teacher_policy(cfg, &model, report, kind)?;
            out.emit(&format!("teaching_{label}.csv"), |p| {
                write_teaching_csv(&utilities, &qg, p)
            })?;
            out.emit(&format!("teaching_{label}.svg"), |p| {
                render_heatmap_svg(&outcome.utility_map, &qg, &[outcome.example.query], p)
            })?;
        }
    }
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    out.emit("report.json", |p| write_bytes(p, &json))?;
    Ok(())
}

fn print_summary(report: &RunReport) {
    println!("experiment {} seed {}", report.experiment, report.seed);
    println!(
        "estimated belief (mu1,sigma1,mu2,sigma2,p_z): {}",
        params_line(&report.estimate.params)
    );
    println!("eig correlation: {}", format_real(report.correlation));
    if let Some(t) = &report.teaching {
        for (label, o) in [("uniform", &t.uniform), ("adaptive", &t.adaptive)] {
            println!(
                "{label} teacher: x1={} x2={} y={} learner mass at truth {}",
                format_real(o.example.query.x1),
                format_real(o.example.query.x2),
                o.example.answer.bit(),
                format_real(o.learner_mass_at_truth)
            );
        }
    }
}
