//! Numerical laboratory for stochastic flows on embedded submanifolds.
//!
//! The library simulates gradient h-Brownian systems on manifolds embedded in
//! Euclidean space, integrates the derivative flow alongside the base path,
//! estimates p-th moment exponents by Monte Carlo, evaluates the curvature
//! functionals that bound those exponents from both sides, and runs the
//! loop-contraction experiment that ties moment stability to the triviality
//! of the fundamental group.
//!
//! Entry points, roughly bottom-up:
//!
//! * [`geometry`] — the manifold catalog (spheres, ellipsoid, cylinder,
//!   paraboloid, flat space, implicit surfaces) with tangent projectors,
//!   second fundamental forms and Ricci curvature.
//! * [`system`] — a manifold paired with a drift potential and diffusion
//!   fields: the SDE being simulated.
//! * [`flow`] — the Stratonovich predictor-corrector integrator for the
//!   position/derivative pair, with pathwise log-moment accumulators.
//! * [`functionals`] — the curvature form driving moment growth, its
//!   sup/inf over unit tangents, and sign-based stability criteria.
//! * [`ensemble`] — path ensembles: moment estimates, exponential
//!   functionals, two-sided sandwich checks, decay-rate fits.
//! * [`loops`] — closed polylines evolved under common noise and the
//!   contractibility test.
//! * [`volume`] — weighted volume quadrature over catalog charts.
//! * [`runner`] — configuration, orchestration and file output behind the
//!   command-line interface.
//!
//! Every random quantity derives from a counter-based generator keyed by
//! `(seed, stream, path, step, slot)`, so results are reproducible
//! bit-for-bit regardless of worker count or scheduling.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod linalg;
pub mod loops;
pub mod output;
pub mod rng;
pub mod runner;
pub mod system;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::EmbeddedManifold;
pub use system::SdeSystem;
