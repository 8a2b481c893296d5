//! Feedback-SIRS model of idea-popularity cycles.
//!
//! The recovery rate of a standard SIRS model is promoted to a state
//! variable `Gamma` with `dGamma/dt = Gamma (alpha I - delta S)`. The crate
//! provides the model itself ([`model`]), Routh-Hurwitz and Hopf analysis of
//! its interior fixed point ([`stability`]), fixed-step integration with
//! limit-cycle detection ([`integrator`]), the time-series tooling used to
//! compare weekly search volumes with model trajectories ([`timeseries`],
//! [`pipeline`]) and a command-line front end ([`cli`]).
//!
//! Sweeps run on rayon when the default `parallel` feature is enabled; see
//! [`exec`].

pub mod cli;
pub mod error;
pub mod exec;
pub mod integrator;
pub mod model;
pub mod pipeline;
pub mod stability;
pub mod svg;
pub mod timeseries;

pub use error::{Error, Result};
pub use exec::Strategy;
pub use model::{CubicCoeffs, FixedPoint, Params, State};
