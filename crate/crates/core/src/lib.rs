//! Two-strategy Moran process with mutation.
//!
//! The crate is organised in layers that check each other:
//!
//! * [`game`]: payoff matrices, fitness, regime classification and the
//!   iterated Prisoner's Dilemma constructions.
//! * [`chain`]: the exact finite-N birth-death chain, its detailed-balance
//!   stationary law and first-passage times, plus Monte Carlo in [`sim`].
//! * [`deterministic`]: the infinite-population drift, its fixed points,
//!   closed-form Case 1 branches and numerical continuation.
//! * [`moments`]: linear-noise and higher-order moment expansions.
//! * [`escape`]: diffusion and WKB quasipotentials, switching times,
//!   boundary-layer profiles and SDE paths.
//!
//! Time is measured in rounds of the chain. One round is one birth-death
//! event, so a generation is `N` rounds. SDE paths are the one exception and
//! advance in generations.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod deterministic;
pub mod error;
pub mod escape;
pub mod game;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod quad;
pub mod rates;
pub mod sim;

pub use chain::{ChainParams, Distribution};
pub use error::{Error, Result};
pub use game::{PayoffMatrix, PdMatrix, RegimeCase};
