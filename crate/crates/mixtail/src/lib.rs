//! Tail-bound toolkit for V- and U-statistics of mixing time series.
//!
//! The crate is organized around a pipeline:
//! kernels ([`kernel`]) → finite bounded expansions ([`expansion`]) →
//! statistics on samples ([`vstat`]) → Bernstein-type tail bounds and
//! moderate-deviation diagnostics ([`bounds`]) → applications: massive
//! independence testing ([`mdp`]) and penalized partially linear
//! regression ([`plr`]), driven on simulated AR processes ([`processes`]).

pub mod bounds;
pub mod error;
pub mod expansion;
pub mod grid_sampler;
pub mod kernel;
pub mod mdp;
pub mod numeric;
pub mod plr;
pub mod processes;
pub mod seeding;
pub mod vstat;

pub use error::{Error, Result};
