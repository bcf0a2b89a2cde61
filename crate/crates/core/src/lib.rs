//! Core numerics for higher-order active learning with pairwise preference
//! queries.
//!
//! Everything here is a pure function of its inputs over discrete grids:
//!
//! - [`preference`]: the literal (level-1) choice model and query/answer types.
//! - [`belief`]: the bimodal preference prior and its grid discretization.
//! - [`bayes`]: posterior updates, entropies and expected information gain.
//! - [`policy`]: Boltzmann (softmax) policies and seeded index sampling.
//! - [`agents`]: the agency ladder, from the information-seeking level-2
//!   learner up to level-5 intention inference.
//!
//! The crate is `no_std` (with `alloc`). The `parallel` feature pulls in `std`
//! and fans out EIG maps and belief searches with rayon; every reduction is
//! still done per entry in a fixed order, so results are bit-identical for any
//! thread count.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agents;
pub mod bayes;
pub mod belief;
mod error;
pub mod grid;
pub mod math;
mod par;
pub mod policy;
pub mod preference;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

pub use agents::{BeliefEnsemble, GridEnsemble, Model};
pub use bayes::{
    entropy, expected_info_gain, info_gain, posterior_update, predictive_answer_prob, AnswerTable,
};
pub use belief::{canonicalize, discretize_belief, mixture_density, BeliefParams, GridBelief};
pub use grid::{QueryGrid, ThetaGrid};
pub use policy::{softmax_policy, QueryPolicy, Rationality, SelectionMode};
pub use preference::{
    response_prob, reward, sample_answer, Answer, LabeledExample, Query, RewardForm,
};
pub use rng::{derive_subseed, SeededRng};
