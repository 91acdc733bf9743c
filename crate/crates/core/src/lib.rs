//! Core library for simulating density-dependent mean-field SDEs with a
//! mollified interacting-particle scheme and verifying the resulting marginals
//! against deterministic Fokker-Planck and closed-form oracles.
//!
//! The main pieces:
//!
//! * [`transport`] — exact Wasserstein distances (quantile coupling in 1-D,
//!   a transportation-simplex LP in general), Kantorovich dual certificates,
//!   and weighted total-variation functionals.
//! * [`mollify`] — the compactly supported bump mollifier family and kernel
//!   density evaluation with sorted-window pruning.
//! * [`coefficients`] — drift/diffusion scenario library plus an empirical
//!   checker for the regularity conditions the scenarios declare.
//! * [`particle`] — Euler-Maruyama stepping of the interacting particle
//!   system with per-particle density feedback.
//! * [`fokker_planck`] — 1-D finite-volume solver for the nonlinear
//!   Fokker-Planck equation, heat-kernel utilities, and a Duhamel-form
//!   residual check.
//! * [`diagnostics`] — density snapshots, Hölder-in-time fits, tail/moment
//!   monitors, Krylov-type path functionals.
//! * [`stability`] — weighted-TV stability experiments and the
//!   mollifier-index convergence study.

pub mod coefficients;
pub mod csv_io;
pub mod diagnostics;
pub mod error;
pub mod fokker_planck;
pub mod grid;
pub mod hash;
pub mod measure;
pub mod mollify;
pub mod numerics;
pub mod particle;
pub mod rng;
pub mod stability;
pub mod transport;

pub use error::{Error, Result};
pub use grid::GridDensity;
pub use measure::DiscreteMeasure;
