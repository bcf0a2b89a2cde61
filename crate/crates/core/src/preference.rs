//! The literal (level-1) human: a logistic choice between two items whose
//! rewards fall off with distance from the preferred item θ.

use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Error, Result};
use crate::math::sigmoid;
use crate::rng::SeededRng;

/// A pairwise preference query over two 1-d item features.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Query {
    pub x1: f64,
    pub x2: f64,
}

impl Query {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        finite("x1", x1)?;
        finite("x2", x2)?;
        Ok(Self { x1, x2 })
    }

    pub fn swapped(self) -> Self {
        Self {
            x1: self.x2,
            x2: self.x1,
        }
    }

    /// Both items identical; every answer model is indifferent.
    pub fn is_diagonal(&self) -> bool {
        self.x1 == self.x2
    }
}

/// Binary answer. `PrefersSecond` is `y = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Answer {
    PrefersFirst,
    PrefersSecond,
}

impl Answer {
    /// Enumeration order `y = 0, 1`.
    pub const ALL: [Answer; 2] = [Answer::PrefersFirst, Answer::PrefersSecond];

    pub fn from_bit(y: u8) -> Result<Self> {
        match y {
            0 => Ok(Answer::PrefersFirst),
            1 => Ok(Answer::PrefersSecond),
            _ => Err(invalid("y", "answer must be 0 or 1")),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Answer::PrefersFirst => 0,
            Answer::PrefersSecond => 1,
        }
    }

    /// The same preference expressed for the swapped query.
    pub fn flipped(self) -> Self {
        match self {
            Answer::PrefersFirst => Answer::PrefersSecond,
            Answer::PrefersSecond => Answer::PrefersFirst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LabeledExample {
    pub query: Query,
    pub answer: Answer,
}

/// How the reward of an item decays with its distance to θ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RewardForm {
    /// `-|x - θ|`
    #[default]
    AbsoluteDistance,
    /// `-(x - θ)²`
    SquaredDistance,
}

impl RewardForm {
    pub fn name(self) -> &'static str {
        match self {
            RewardForm::AbsoluteDistance => "absolute_distance",
            RewardForm::SquaredDistance => "squared_distance",
        }
    }

    #[inline]
    pub(crate) fn eval(self, theta: f64, x: f64) -> f64 {
        let d = x - theta;
        match self {
            RewardForm::AbsoluteDistance => -d.abs(),
            RewardForm::SquaredDistance => -(d * d),
        }
    }
}

impl fmt::Display for RewardForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute_distance" => Ok(RewardForm::AbsoluteDistance),
            "squared_distance" => Ok(RewardForm::SquaredDistance),
            _ => Err(invalid(
                "reward",
                "expected `absolute_distance` or `squared_distance`",
            )),
        }
    }
}

pub fn reward(theta: f64, x: f64, form: RewardForm) -> Result<f64> {
    finite("theta", theta)?;
    finite("x", x)?;
    Ok(form.eval(theta, x))
}

/// `r_θ(x2) - r_θ(x1)`, the logit of `y = 1`. Exactly zero on the diagonal.
#[inline]
pub(crate) fn reward_gap(theta: f64, q: Query, form: RewardForm) -> f64 {
    if q.is_diagonal() {
        0.0
    } else {
        form.eval(theta, q.x2) - form.eval(theta, q.x1)
    }
}

/// `p(y = 1 | θ, x1, x2) = σ(r_θ(x2) - r_θ(x1))`.
pub fn response_prob(theta: f64, q: Query, form: RewardForm) -> Result<f64> {
    finite("theta", theta)?;
    finite("x1", q.x1)?;
    finite("x2", q.x2)?;
    Ok(sigmoid(reward_gap(theta, q, form)))
}

/// Probability of a specific answer. Uses `σ(-gap)` for `y = 0` rather than
/// `1 - σ(gap)` so tiny probabilities keep their precision.
#[inline]
pub(crate) fn answer_likelihood(theta: f64, q: Query, answer: Answer, form: RewardForm) -> f64 {
    let gap = reward_gap(theta, q, form);
    match answer {
        Answer::PrefersSecond => sigmoid(gap),
        Answer::PrefersFirst => sigmoid(-gap),
    }
}

/// Draws a literal answer: `y = 1` iff a uniform draw falls below
/// `response_prob`.
pub fn sample_answer(
    theta: f64,
    q: Query,
    form: RewardForm,
    rng: &mut SeededRng,
) -> Result<Answer> {
    let p = response_prob(theta, q, form)?;
    Ok(if rng.next_f64() < p {
        Answer::PrefersSecond
    } else {
        Answer::PrefersFirst
    })
}
