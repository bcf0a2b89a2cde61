//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::LN_2;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hoal::{
    run_belief_correction, run_bimodal_identifiability, run_unimodal_identifiability,
    ScenarioConfig,
};
use hoal_core::agents::{l3_teaching_utility, tom_posterior, tom_posterior_grid, Pragmatics};
use hoal_core::{
    expected_info_gain, posterior_update, softmax_policy, Answer, BeliefEnsemble, BeliefParams,
    GridBelief, GridEnsemble, LabeledExample, Model, Query, QueryGrid, Rationality, RewardForm,
    SeededRng, ThetaGrid,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

mod oracle {
    //! Plain enumeration over θ, y and the query grid.

    pub fn reward(theta: f64, x: f64, squared: bool) -> f64 {
        if squared {
            -(x - theta) * (x - theta)
        } else {
            -(x - theta).abs()
        }
    }

    pub fn lik(theta: f64, x1: f64, x2: f64, y: u8, squared: bool) -> f64 {
        let p1 = 1.0 / (1.0 + (-(reward(theta, x2, squared) - reward(theta, x1, squared))).exp());
        if y == 1 {
            p1
        } else {
            1.0 - p1
        }
    }

    /// Mutual information `Σ_θ Σ_y p(θ) p(y|θ) ln(p(y|θ)/p(y))`.
    pub fn eig(thetas: &[f64], mass: &[f64], x1: f64, x2: f64, squared: bool) -> f64 {
        let mut total = 0.0;
        for y in 0..2u8 {
            let py: f64 = thetas
                .iter()
                .zip(mass)
                .map(|(t, m)| m * lik(*t, x1, x2, y, squared))
                .sum();
            for (t, m) in thetas.iter().zip(mass) {
                let l = lik(*t, x1, x2, y, squared);
                if m * l > 0.0 {
                    total += m * l * (l / py).ln();
                }
            }
        }
        total
    }

    pub fn posterior(
        thetas: &[f64],
        mass: &[f64],
        x1: f64,
        x2: f64,
        y: u8,
        squared: bool,
    ) -> Vec<f64> {
        let joint: Vec<f64> = thetas
            .iter()
            .zip(mass)
            .map(|(t, m)| m * lik(*t, x1, x2, y, squared))
            .collect();
        let z: f64 = joint.iter().sum();
        joint.iter().map(|j| j / z).collect()
    }

    pub fn softmax(u: &[f64], beta: f64) -> Vec<f64> {
        let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = u.iter().map(|v| (beta * (v - m)).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|v| v / z).collect()
    }

    /// Level-2 policy over `queries` for one belief.
    pub fn l2(
        thetas: &[f64],
        mass: &[f64],
        queries: &[(f64, f64)],
        beta: f64,
        squared: bool,
    ) -> (Vec<f64>, Vec<f64>) {
        let e: Vec<f64> = queries
            .iter()
            .map(|(a, b)| eig(thetas, mass, *a, *b, squared))
            .collect();
        let p = softmax(&e, beta);
        (e, p)
    }

    pub struct Observer<'a> {
        pub thetas: &'a [f64],
        pub masses: &'a [Vec<f64>],
        pub weights: &'a [f64],
        pub queries: &'a [(f64, f64)],
        pub squared: bool,
    }

    pub fn bayes_factor(o: &Observer<'_>, qi: usize, beta: f64, lambda: f64) -> f64 {
        let Observer {
            thetas,
            masses,
            weights,
            queries,
            squared,
        } = *o;
        let pols: Vec<(Vec<f64>, Vec<f64>)> = masses
            .iter()
            .map(|m| l2(thetas, m, queries, beta, squared))
            .collect();
        let ident = |t: usize, i: usize| {
            let z: f64 = (0..masses.len()).map(|j| weights[j] * pols[j].1[i]).sum();
            weights[t] * pols[t].1[i] / z
        };
        let mut lit = 0.0;
        let mut rhet = 0.0;
        for t in 0..masses.len() {
            lit += weights[t] * pols[t].1[qi];
            let u: Vec<f64> = (0..queries.len())
                .map(|i| (1.0 - lambda) * pols[t].0[i] + lambda * super::LN_2 * ident(t, i))
                .collect();
            rhet += weights[t] * softmax(&u, beta)[qi];
        }
        lit / rhet
    }
}

fn random_mass(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.next_f64() + 1e-3).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

fn random_params(rng: &mut SeededRng) -> BeliefParams {
    BeliefParams::new(
        -4.0 + 4.0 * rng.next_f64(),
        0.3 + 1.7 * rng.next_f64(),
        4.0 * rng.next_f64(),
        0.3 + 1.7 * rng.next_f64(),
        rng.next_f64(),
    )
    .unwrap()
}

fn mixture(bp: &BeliefParams, t: f64) -> f64 {
    let n = |mu: f64, s: f64| {
        (-(t - mu) * (t - mu) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    };
    bp.p_z * n(bp.mu1, bp.sigma1) + (1.0 - bp.p_z) * n(bp.mu2, bp.sigma2)
}

fn criterion_1() -> Outcome {
    let theta = ThetaGrid::new(-1.0, 1.0, 5).unwrap();
    let qg = QueryGrid::new(-1.5, 1.5, 3).unwrap();
    let thetas: Vec<f64> = theta.points().collect();
    let queries: Vec<(f64, f64)> = qg.candidates().map(|q| (q.x1, q.x2)).collect();
    let mut rng = SeededRng::new(1);
    let mut worst = [0.0f64; 5];
    for (form, squared) in [
        (RewardForm::AbsoluteDistance, false),
        (RewardForm::SquaredDistance, true),
    ] {
        let model = Model::new(theta, qg, form);
        for _ in 0..50 {
            let mass = random_mass(&mut rng, 5);
            let b = GridBelief::from_mass(theta, mass.clone()).unwrap();
            for (i, &(x1, x2)) in queries.iter().enumerate() {
                let q = qg.candidate(i);
                worst[0] = worst[0].max(
                    (expected_info_gain(&b, q, form)
                        - oracle::eig(&thetas, &mass, x1, x2, squared))
                    .abs(),
                );
                if x1 != x2 {
                    for a in Answer::ALL {
                        let got = posterior_update(&b, q, a, form).unwrap();
                        let want = oracle::posterior(&thetas, &mass, x1, x2, a.bit(), squared);
                        for (g, w) in got.mass().iter().zip(&want) {
                            worst[1] = worst[1].max((g - w).abs());
                        }
                        let theta_true = thetas[(rng.next_u64() % 5) as usize];
                        let u = l3_teaching_utility(
                            &LabeledExample {
                                query: q,
                                answer: a,
                            },
                            theta_true,
                            &b,
                            form,
                        )
                        .unwrap();
                        let k = thetas.iter().position(|t| *t == theta_true).unwrap();
                        worst[3] = worst[3].max((u - want[k]).abs());
                    }
                }
            }

            let beta = 0.5 + 10.0 * rng.next_f64();
            let masses: Vec<Vec<f64>> = (0..3).map(|_| random_mass(&mut rng, 5)).collect();
            let weights = random_mass(&mut rng, 3);
            let ens = GridEnsemble::new(
                masses
                    .iter()
                    .map(|m| GridBelief::from_mass(theta, m.clone()).unwrap())
                    .collect(),
                weights.clone(),
            )
            .unwrap();
            let qi = (rng.next_u64() % 9) as usize;
            let got = tom_posterior_grid(
                &model,
                &ens,
                &[qg.candidate(qi)],
                Rationality::new(beta).unwrap(),
            )
            .unwrap();
            let raw: Vec<f64> = masses
                .iter()
                .zip(&weights)
                .map(|(m, w)| w * oracle::l2(&thetas, m, &queries, beta, squared).1[qi])
                .collect();
            let z: f64 = raw.iter().sum();
            for (g, r) in got.weights().iter().zip(&raw) {
                worst[2] = worst[2].max((g - r / z).abs());
            }

            let params: Vec<BeliefParams> = (0..2).map(|_| random_params(&mut rng)).collect();
            let pw = random_mass(&mut rng, 2);
            let be = BeliefEnsemble::new(params.clone(), pw.clone()).unwrap();
            let got = tom_posterior(
                &model,
                &be,
                qg.candidate(qi),
                Rationality::new(beta).unwrap(),
            )
            .unwrap();
            let raw: Vec<f64> = params
                .iter()
                .zip(&pw)
                .map(|(p, w)| {
                    let d: Vec<f64> = thetas.iter().map(|t| mixture(p, *t)).collect();
                    let s: f64 = d.iter().sum();
                    let m: Vec<f64> = d.iter().map(|v| v / s).collect();
                    w * oracle::l2(&thetas, &m, &queries, beta, squared).1[qi]
                })
                .collect();
            let z: f64 = raw.iter().sum();
            for (g, r) in got.weights().iter().zip(&raw) {
                worst[2] = worst[2].max((g - r / z).abs());
            }

            let lambda = rng.next_f64();
            let pr = Pragmatics::new(&model, &ens, Rationality::new(beta).unwrap()).unwrap();
            let bf = pr.bayes_factor(qg.candidate(qi), lambda).unwrap();
            let observer = oracle::Observer {
                thetas: &thetas,
                masses: &masses,
                weights: &weights,
                queries: &queries,
                squared,
            };
            let want = oracle::bayes_factor(&observer, qi, beta, lambda);
            worst[4] = worst[4].max(((bf - want) / want).abs());
        }
    }
    let names = ["eig", "posterior", "tom", "teaching", "bayes_factor"];
    let pass = worst.iter().all(|w| *w <= 1e-9);
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("max deviation: {detail}"))
}

fn criterion_2() -> Outcome {
    let theta = ThetaGrid::new(-6.0, 6.0, 41).unwrap();
    let qg = QueryGrid::new(-6.0, 6.0, 9).unwrap();
    let mut rng = SeededRng::new(2);
    let mut failures: Vec<String> = Vec::new();
    let mut note = |ok: bool, what: &str| {
        if !ok && !failures.iter().any(|f| f == what) {
            failures.push(what.to_string());
        }
    };
    let n = 1000;
    for i in 0..n {
        let form = if i % 2 == 0 {
            RewardForm::AbsoluteDistance
        } else {
            RewardForm::SquaredDistance
        };
        let model = Model::new(theta, qg, form);
        let b = if i % 3 == 0 {
            GridBelief::from_mass(theta, random_mass(&mut rng, 41)).unwrap()
        } else {
            model.discretize(&random_params(&mut rng)).unwrap()
        };
        note(
            (b.mass().iter().sum::<f64>() - 1.0).abs() <= 1e-9,
            "normalization",
        );
        let map = model.eig_map(&b);
        let x1 = -6.0 + 12.0 * rng.next_f64();
        let x2 = -6.0 + 12.0 * rng.next_f64();
        let q = Query::new(x1, x2).unwrap();
        let e = expected_info_gain(&b, q, form);
        note(e >= -1e-12, "nonnegativity");
        note(
            (e - expected_info_gain(&b, q.swapped(), form)).abs() <= 1e-12,
            "swap symmetry",
        );
        note(
            expected_info_gain(&b, Query::new(x1, x1).unwrap(), form) == 0.0,
            "diagonal",
        );
        for k in 0..qg.len() {
            note(map[k] >= -1e-12, "nonnegativity");
            if qg.is_diagonal(k) {
                note(map[k] == 0.0, "diagonal");
            }
            note(
                (map[k] - map[qg.swapped_index(k)]).abs() <= 1e-12,
                "swap symmetry",
            );
        }
        let k = (rng.next_u64() % qg.len() as u64) as usize;
        note(
            (map[k] - expected_info_gain(&b, qg.candidate(k), form)).abs() <= 1e-9,
            "dual form",
        );
        if !q.is_diagonal() {
            let p1 = hoal_core::predictive_answer_prob(&b, q, form);
            let post1 = posterior_update(&b, q, Answer::PrefersSecond, form).unwrap();
            let post0 = posterior_update(&b, q, Answer::PrefersFirst, form).unwrap();
            for j in 0..41 {
                let avg = p1 * post1.mass()[j] + (1.0 - p1) * post0.mass()[j];
                note((avg - b.mass()[j]).abs() <= 1e-9, "martingale");
            }
        }
        let u: Vec<f64> = (0..20).map(|_| rng.next_f64()).collect();
        let c = 100.0 * (rng.next_f64() - 0.5);
        let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
        let beta = Rationality::new(50.0 * rng.next_f64()).unwrap();
        let p = softmax_policy(&u, beta).unwrap();
        let ps = softmax_policy(&shifted, beta).unwrap();
        note(
            p.iter().zip(&ps).all(|(a, b)| (a - b).abs() <= 1e-12),
            "softmax shift",
        );
        let ens = GridEnsemble::new(
            vec![
                b.clone(),
                GridBelief::from_mass(theta, random_mass(&mut rng, 41)).unwrap(),
            ],
            random_mass(&mut rng, 2),
        )
        .unwrap();
        let post = tom_posterior_grid(&model, &ens, &[qg.candidate(k)], beta).unwrap();
        note(
            (post.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-9
                && post.weights().iter().all(|w| *w >= 0.0),
            "normalization",
        );
    }
    if failures.is_empty() {
        outcome(
            true,
            format!("{n} randomized instances, all invariants hold"),
        )
    } else {
        outcome(false, format!("violated: {}", failures.join(", ")))
    }
}

const SEEDS: std::ops::Range<u64> = 0..10;

fn criterion_3() -> Outcome {
    let mut corrs = Vec::new();
    for seed in SEEDS {
        let cfg = ScenarioConfig {
            seed,
            ..ScenarioConfig::fig2()
        };
        corrs.push(run_unimodal_identifiability(&cfg).unwrap().correlation);
    }
    let hits = corrs.iter().filter(|c| **c >= 0.8).count();
    let list = corrs
        .iter()
        .map(|c| format!("{c:.3}"))
        .collect::<Vec<_>>()
        .join(" ");
    outcome(
        hits >= 8,
        format!("{hits}/10 seeds with correlation >= 0.8 [{list}]"),
    )
}

fn criterion_4() -> Outcome {
    let mut modes = 0;
    let mut groups = 0;
    let mut list = Vec::new();
    for seed in SEEDS {
        let cfg = ScenarioConfig {
            seed,
            ..ScenarioConfig::fig3()
        };
        let p = run_bimodal_identifiability(&cfg).unwrap().estimate.params;
        if (p.mu1 + 3.0).abs() <= 0.75 && (p.mu2 - 3.0).abs() <= 0.75 {
            modes += 1;
        }
        if p.p_z > 0.2 && p.p_z < 0.8 {
            groups += 1;
        }
        list.push(format!("({:.2},{:.2},{:.2})", p.mu1, p.mu2, p.p_z));
    }
    outcome(
        modes >= 7 && groups >= 6,
        format!(
            "modes within 0.75 in {modes}/10, p_z in (0.2, 0.8) in {groups}/10 [{}]",
            list.join(" ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = ScenarioConfig::fig4();
    let report = run_belief_correction(&cfg).unwrap();
    let t = report.teaching.unwrap();
    let near = |x: f64, c: f64, tol: f64| (x - c).abs() <= tol;
    let (u, a) = (t.uniform.example, t.adaptive.example);
    let uniform_ok = near(u.query.x1, 2.0, 1.0) && near(u.query.x2, 2.0, 1.0);
    let favored = |ex: LabeledExample, x: f64| match ex.answer {
        Answer::PrefersFirst => ex.query.x1 == x,
        Answer::PrefersSecond => ex.query.x2 == x,
    };
    let adaptive_ok = (near(a.query.x1, -3.0, 0.75)
        && near(a.query.x2, 2.0, 0.75)
        && favored(a, a.query.x2))
        || (near(a.query.x2, -3.0, 0.75) && near(a.query.x1, 2.0, 0.75) && favored(a, a.query.x1));
    let mass_ok = t.adaptive.learner_mass_at_truth >= t.uniform.learner_mass_at_truth;
    let show =
        |e: LabeledExample| format!("({}, {}, y={})", e.query.x1, e.query.x2, e.answer.bit());
    outcome(
        uniform_ok && adaptive_ok && mass_ok,
        format!(
            "uniform {} {}, adaptive {} {}, mass at truth {:.4} vs {:.4} {}",
            show(u),
            if uniform_ok { "ok" } else { "off target" },
            show(a),
            if adaptive_ok { "ok" } else { "off target" },
            t.adaptive.learner_mass_at_truth,
            t.uniform.learner_mass_at_truth,
            if mass_ok { "ok" } else { "lower" },
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = ScenarioConfig::fig2();
    let model = cfg.model();
    let truth = model.discretize(&cfg.prior).unwrap();
    let twin = model
        .discretize(&BeliefParams {
            p_z: 1.0 - cfg.prior.p_z,
            ..cfg.prior
        })
        .unwrap();
    let ens = GridEnsemble::new(vec![truth.clone(), twin], vec![0.5, 0.5]).unwrap();
    let pr = Pragmatics::new(&model, &ens, cfg.rationality_a()).unwrap();
    let diag = pr
        .bayes_factor(Query::new(0.0, 0.0).unwrap(), cfg.lambda)
        .unwrap();
    let map = model.eig_map(&truth);
    let best = (0..map.len()).fold(0, |b, i| if map[i] > map[b] { i } else { b });
    let q = model.query_grid().candidate(best);
    let at_best = pr.bayes_factor(q, cfg.lambda).unwrap();
    let same = pr.bayes_factor(q, 0.0).unwrap();
    let pass = diag < 1.0 && at_best > 1.0 && (same - 1.0).abs() <= 1e-9;
    outcome(
        pass,
        format!(
            "BF diagonal {diag:.4}, BF at ({}, {}) {at_best:.4}, identical families {:.1e} from 1",
            q.x1,
            q.x2,
            (same - 1.0).abs()
        ),
    )
}

fn run_fig2(dir: &Path, threads: usize) {
    let status = Command::new(env!("CARGO_BIN_EXE_hoal"))
        .args([
            "reproduce",
            "fig2",
            "--seed",
            "7",
            "--threads",
            &threads.to_string(),
            "--out",
        ])
        .arg(dir)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
}

fn strip_timings(manifest: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(manifest).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v
}

fn criterion_7() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_fig2(a.path(), 1);
    run_fig2(b.path(), 8);
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut differing = Vec::new();
    for n in &names {
        let x = std::fs::read(a.path().join(n)).unwrap();
        let y = std::fs::read(b.path().join(n)).unwrap_or_default();
        let same = if n == "manifest.json" {
            strip_timings(std::str::from_utf8(&x).unwrap())
                == strip_timings(std::str::from_utf8(&y).unwrap())
        } else {
            x == y
        };
        if !same {
            differing.push(n.clone());
        }
    }
    let expected = [
        "eig_true.csv",
        "eig_estimated.svg",
        "queries.csv",
        "manifest.json",
    ];
    let complete = expected.iter().all(|e| names.iter().any(|n| n == e));
    outcome(
        differing.is_empty() && complete,
        if differing.is_empty() {
            format!("{} files identical across 1 and 8 threads", names.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, f64); 7] = [
        ("oracle equivalence", criterion_1, 5.0),
        ("invariant suite", criterion_2, 30.0),
        ("unimodal identifiability", criterion_3, 120.0),
        ("bimodal identifiability", criterion_4, 300.0),
        ("false-belief correction", criterion_5, 60.0),
        ("intent Bayes factor", criterion_6, 10.0),
        (
            "determinism across thread counts",
            criterion_7,
            f64::INFINITY,
        ),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < *budget;
        if !pass {
            failed += 1;
        }
        let budget_note = if budget.is_finite() {
            format!(" of {budget:.0}s")
        } else {
            String::new()
        };
        println!(
            "criterion {} {name}: {} ({}; {secs:.1}s{budget_note})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
