//! Grid Bayes: predictive answer probabilities, posterior updates, entropy
//! and expected information gain (EIG).
//!
//! The free functions are the reference path and compute EIG literally as
//! the expected entropy drop of the posterior. [`AnswerTable`] caches the
//! per-(query, θ) likelihoods and computes the same quantity through the
//! mutual-information identity `H(y) - E_θ[H(y | θ)]`, which is what the
//! policy and search code uses.

use alloc::vec::Vec;

use crate::belief::GridBelief;
use crate::error::{Error, Result};
use crate::grid::{QueryGrid, ThetaGrid};
use crate::math::{binary_entropy, binary_entropy_logit, sigmoid, xlogx};
use crate::par::map_indexed;
use crate::preference::{answer_likelihood, reward_gap, Answer, Query, RewardForm};

/// `p(y = 1 | q) = Σ_k b_k p(y = 1 | θ_k, q)`.
pub fn predictive_answer_prob(b: &GridBelief, q: Query, form: RewardForm) -> f64 {
    if q.is_diagonal() {
        return 0.5;
    }
    predictive(b, q, Answer::PrefersSecond, form)
}

fn predictive(b: &GridBelief, q: Query, answer: Answer, form: RewardForm) -> f64 {
    b.grid()
        .points()
        .zip(b.mass())
        .map(|(t, m)| m * answer_likelihood(t, q, answer, form))
        .sum()
}

/// Bayes update of `b` after observing `answer` to `q` from a literal answerer.
pub fn posterior_update(
    b: &GridBelief,
    q: Query,
    answer: Answer,
    form: RewardForm,
) -> Result<GridBelief> {
    if q.is_diagonal() {
        return Ok(b.clone());
    }
    let weights: Vec<f64> = b
        .grid()
        .points()
        .zip(b.mass())
        .map(|(t, m)| m * answer_likelihood(t, q, answer, form))
        .collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    GridBelief::from_weights(*b.grid(), weights)
}

/// Shannon entropy in nats.
pub fn entropy(b: &GridBelief) -> f64 {
    -b.mass().iter().map(|&m| xlogx(m)).sum::<f64>()
}

/// Entropy reduction from one realized answer. Can be negative.
pub fn info_gain(b: &GridBelief, q: Query, answer: Answer, form: RewardForm) -> Result<f64> {
    if q.is_diagonal() {
        return Ok(0.0);
    }
    let post = posterior_update(b, q, answer, form)?;
    Ok(entropy(b) - entropy(&post))
}

/// `I(θ; y | q) = Σ_y p(y | q) [H(b) - H(b | q, y)]`.
pub fn expected_info_gain(b: &GridBelief, q: Query, form: RewardForm) -> f64 {
    if q.is_diagonal() {
        return 0.0;
    }
    let prior_h = entropy(b);
    Answer::ALL
        .iter()
        .map(|&a| {
            let p = predictive(b, q, a, form);
            if p <= 0.0 {
                return 0.0;
            }
            match posterior_update(b, q, a, form) {
                Ok(post) => p * (prior_h - entropy(&post)),
                Err(_) => 0.0,
            }
        })
        .sum()
}

/// EIG of every candidate in `qg`, in enumeration order.
pub fn eig_map(b: &GridBelief, qg: &QueryGrid, form: RewardForm) -> Vec<f64> {
    AnswerTable::from_grid(*b.grid(), qg, form).eig_map(b)
}

/// Literal-answer likelihoods for a fixed list of queries over a θ grid.
///
/// Row `i`, column `k` holds `p(y = 1 | θ_k, q_i)`, `p(y = 0 | θ_k, q_i)`
/// and the conditional answer entropy `H(y | θ_k, q_i)`.
#[derive(Clone, Debug)]
pub struct AnswerTable {
    theta: ThetaGrid,
    form: RewardForm,
    queries: Vec<Query>,
    // set when the queries are exactly a QueryGrid enumeration
    grid: Option<QueryGrid>,
    p_second: Vec<f64>,
    p_first: Vec<f64>,
    cond_entropy: Vec<f64>,
}

impl AnswerTable {
    pub fn from_queries(theta: ThetaGrid, queries: Vec<Query>, form: RewardForm) -> Self {
        let k = theta.len();
        let n = queries.len() * k;
        let mut p_second = Vec::with_capacity(n);
        let mut p_first = Vec::with_capacity(n);
        let mut cond_entropy = Vec::with_capacity(n);
        for q in &queries {
            for t in theta.points() {
                let gap = reward_gap(t, *q, form);
                p_second.push(sigmoid(gap));
                p_first.push(sigmoid(-gap));
                cond_entropy.push(binary_entropy_logit(gap));
            }
        }
        Self {
            theta,
            form,
            queries,
            grid: None,
            p_second,
            p_first,
            cond_entropy,
        }
    }

    pub fn from_grid(theta: ThetaGrid, qg: &QueryGrid, form: RewardForm) -> Self {
        let mut table = Self::from_queries(theta, qg.candidates().collect(), form);
        table.grid = Some(*qg);
        table
    }

    pub fn query_grid(&self) -> Option<&QueryGrid> {
        self.grid.as_ref()
    }

    pub fn theta_grid(&self) -> &ThetaGrid {
        &self.theta
    }

    pub fn form(&self) -> RewardForm {
        self.form
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn likelihood_row(&self, i: usize, answer: Answer) -> &[f64] {
        let k = self.theta.len();
        let rows = match answer {
            Answer::PrefersSecond => &self.p_second,
            Answer::PrefersFirst => &self.p_first,
        };
        &rows[i * k..(i + 1) * k]
    }

    /// EIG of query `i` under `mass` (aligned to this table's θ grid).
    pub fn eig(&self, i: usize, mass: &[f64]) -> f64 {
        if self.queries[i].is_diagonal() {
            return 0.0;
        }
        let k = self.theta.len();
        let range = i * k..(i + 1) * k;
        let (mut p1, mut p0, mut cond) = (0.0, 0.0, 0.0);
        for (((m, a), b), h) in mass
            .iter()
            .zip(&self.p_second[range.clone()])
            .zip(&self.p_first[range.clone()])
            .zip(&self.cond_entropy[range])
        {
            p1 += m * a;
            p0 += m * b;
            cond += m * h;
        }
        binary_entropy(p1, p0) - cond
    }

    /// EIG of every query, in table order. Fans out per query with the
    /// `parallel` feature.
    ///
    /// On a query grid only candidates with `x1 < x2` are evaluated; the
    /// swapped candidate gets the same value, which is exact since relabeling
    /// the answer maps one posterior set onto the other.
    pub fn eig_map(&self, b: &GridBelief) -> Vec<f64> {
        debug_assert_eq!(b.grid(), &self.theta);
        let mass = b.mass();
        match self.grid {
            Some(qg) => {
                let n = qg.n_per_axis();
                let upper = map_indexed(n, |row| self.upper_row(row, n, mass));
                Self::mirror(n, &upper)
            }
            None => map_indexed(self.len(), |i| self.eig(i, mass)),
        }
    }

    /// Sequential variant for callers that already parallelize an outer loop.
    pub fn eig_map_seq(&self, mass: &[f64]) -> Vec<f64> {
        match self.grid {
            Some(qg) => {
                let n = qg.n_per_axis();
                let upper: Vec<Vec<f64>> = (0..n).map(|row| self.upper_row(row, n, mass)).collect();
                Self::mirror(n, &upper)
            }
            None => (0..self.len()).map(|i| self.eig(i, mass)).collect(),
        }
    }

    fn upper_row(&self, row: usize, n: usize, mass: &[f64]) -> Vec<f64> {
        (row + 1..n)
            .map(|col| self.eig(row * n + col, mass))
            .collect()
    }

    fn mirror(n: usize, upper: &[Vec<f64>]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; n * n];
        for (row, vals) in upper.iter().enumerate() {
            for (off, &v) in vals.iter().enumerate() {
                let col = row + 1 + off;
                out[row * n + col] = v;
                out[col * n + row] = v;
            }
        }
        out
    }

    /// Posterior mass at cell `k` after observing `answer` to query `i`.
    pub fn posterior_mass_at(&self, i: usize, answer: Answer, mass: &[f64], k: usize) -> f64 {
        if self.queries[i].is_diagonal() {
            return mass[k];
        }
        let row = self.likelihood_row(i, answer);
        let z: f64 = mass.iter().zip(row).map(|(m, l)| m * l).sum();
        if z <= 0.0 {
            0.0
        } else {
            mass[k] * row[k] / z
        }
    }
}
