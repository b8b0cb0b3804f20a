//! Monte Carlo laboratory for martingale-transform representations of the
//! Riesz transform `∇(a − L)^{-1/2}` and the Beurling–Ahlfors transform
//! `(d*d − dd*)(a + □)^{-1}` on model spaces, together with the exact
//! spectral oracles the simulations are checked against.
//!
//! The crate is organised around the pipeline
//!
//! ```text
//! geometry  ──►  pathsim  ──►  representation  ──►  harness (CLI, reports)
//!     ▲              ▲               │
//!     └── spectral ──┴── forms ──────┘        norms (L^p machinery)
//! ```
//!
//! * [`geometry`] — model spaces (flat tori, Ornstein–Uhlenbeck Gaussian
//!   spaces, a quartic-potential line, the unit 2-sphere), their stationary
//!   measures, drifts, curvature operators and single-step kinematics.
//! * [`spectral`] — truncated eigen-expansions, Poisson and heat extensions,
//!   and the exact Riesz multiplier used as oracle.
//! * [`forms`] — exterior-algebra endomorphisms and Hodge projection oracles
//!   on the flat 2-torus.
//! * [`pathsim`] — the background radiation process `(X_t, B_t)` and
//!   heat-horizon trajectories, with frame transport and the multiplicative
//!   functional.
//! * [`representation`] — martingale-transform payoffs, binned conditional
//!   estimates and the identity checks.
//! * [`norms`] — `L^p` norms, the explicit bound formulas and the empirical
//!   operator-norm search.
//! * [`harness`] — experiment configs, the verification suites and report
//!   emission.
//!
//! All simulation entry points are deterministic functions of `(seed, config)`
//! regardless of the number of worker threads; see [`exec`].

pub mod exec;
pub mod forms;
pub mod geometry;
pub mod harness;
pub mod norms;
pub mod numerics;
pub mod output;
pub mod pathsim;
pub mod representation;
pub mod rng;
pub mod spectral;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad user input: unknown space key, invalid exponent, malformed config.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical invariant was violated at runtime (non-finite state,
    /// rejection-sampling cap, ...). Carries a description of the offender.
    #[error("numerical fault: {0}")]
    Fault(String),
    /// The grid eigensolver failed to converge.
    #[error("eigensolve failure: {0}")]
    Eigensolve(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
