//! Gauss orthogonal collocation for unconstrained optimal control problems
//! in Mayer form.
//!
//! The state is approximated by a polynomial of degree `N` on `[-1, 1]`
//! that interpolates the initial point and the `N` Legendre-Gauss
//! abscissas. The collocated dynamics, the quadrature definition of the
//! terminal state, the discrete costate equations, the terminal costate
//! condition and control stationarity form a square nonlinear system that
//! is solved by damped Newton iteration.
//!
//! Module map:
//!
//! * [`quadrature`]: Legendre-Gauss nodes and weights.
//! * [`diffmat`]: differentiation matrices `D` and `D†` plus numerical
//!   certification of their norm properties.
//! * [`ocp`]: problem definitions, derivative evaluation and builtin problems.
//! * [`transcribe`]: the discrete optimality residual and its Jacobian.
//! * [`solver`]: Newton iteration, endpoint controls, interpolation.
//! * [`convergence`]: error sweeps against analytic solutions and rate fits.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod convergence;
pub mod diffmat;
mod error;
pub mod exec;
pub mod linalg;
pub mod ocp;
pub mod quadrature;
pub mod solver;
pub mod transcribe;

pub use convergence::{run_sweep, sup_error, ConvergenceReport, SweepRow};
pub use diffmat::{certify, check_p1, check_p2, CertificationReport, DiffMatrices};
pub use error::{Error, Result};
pub use exec::Execution;
pub use ocp::{AnalyticSolution, ControlModel, DerivativeMode, ProblemSpec};
pub use quadrature::GaussRule;
pub use solver::{newton_solve, SolverOptions};
pub use transcribe::DiscreteSolution;
