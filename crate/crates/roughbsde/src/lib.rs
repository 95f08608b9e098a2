//! Numerical machinery for backward stochastic differential equations and
//! semilinear parabolic PDEs driven by rough signals.
//!
//! The crate is organized around the change of variables through the backward
//! flow of the driving vector fields (often called the Doss–Sussman
//! transformation). The flow removes the rough term from the equation and
//! leaves a driver with quadratic gradient growth, which is then solved on
//! short terminal windows where comparison holds, restarting the flow at each
//! window boundary.
//!
//! Module map:
//!
//! * [`rough_paths`] — piecewise-linear driving signals, their canonical
//!   level-2 lifts (increments plus Lévy areas), grid p-variation norms and
//!   the approximating sequences used in convergence experiments.
//! * [`flow`] — the backward flow of diffeomorphisms together with its full
//!   derivative ensemble, solved for smooth and for level-2 rough drivers.
//! * [`transform`] — the transformed quadratic driver, its growth constants
//!   and the analytic comparison constants that fix the window width.
//! * [`rpde`] — backward finite differences for the smooth PDE and the
//!   window-stitched solver for the rough PDE, plus convergence studies.
//! * [`bsde_mc`] — Euler–Maruyama forward simulation and regression-based
//!   backward solution of the transformed BSDE, with Feynman–Kac
//!   cross-validation against the PDE route.
//! * [`presets`] — the catalog of named model problems used by the CLI and
//!   the test suite.

pub mod bsde_mc;
pub mod flow;
pub mod presets;
pub mod rough_paths;
pub mod rpde;
pub mod transform;

mod interp;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid rough path: {0}")]
    InvalidRoughPath(String),

    #[error("regularity exponent p = {0} unsupported (need 1 <= p < 3)")]
    UnsupportedExponent(f64),

    #[error("requested resolution too fine: {0}")]
    Resolution(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("vector field derivative check failed: {0}")]
    DerivativeMismatch(String),

    #[error("flow accuracy check failed: {0}")]
    Accuracy(String),

    #[error("argument outside tabulated domain: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("model assumption violated: {0}")]
    Assumption(String),

    #[error("time step too coarse for explicit part: need dt <= {required_dt:.3e}, got {got_dt:.3e}")]
    Stability { required_dt: f64, got_dt: f64 },

    #[error("comparison window degenerate: {0}")]
    DegenerateWindow(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
