//! Damped Newton iteration on the discrete optimality system, plus endpoint
//! control recovery and warm starts between collocation orders.

use nalgebra::DVector;

use crate::diffmat::DiffMatrices;
use crate::exec::Execution;
use crate::linalg;
use crate::ocp::{AnalyticSolution, ProblemSpec};
use crate::quadrature::GaussRule;
use crate::transcribe::{self, interpolate, Basis, DiscreteSolution};
use crate::{Error, Result};

/// Where the Newton iteration starts.
#[derive(Debug, Clone, Default)]
pub enum InitialGuess {
    /// `X_i = x0`, `Λ_i = ∇C(x0)` and `U_i` the stationary control of the
    /// Hamiltonian at `(x0, ∇C(x0))`, or zero when that solve fails.
    #[default]
    Constant,
    /// The analytic solution sampled at the nodes.
    Oracle(AnalyticSolution),
    /// A converged solution of lower order, interpolated onto the new nodes.
    WarmStart(Box<DiscreteSolution>),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target for `‖T‖∞`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step reduction factor in the backtracking line search.
    pub backtrack: f64,
    /// Smallest step length tried before the line search gives up.
    pub min_step: f64,
    /// Sufficient decrease constant: accept when
    /// `‖T(θ + αd)‖∞ <= (1 − c α) ‖T(θ)‖∞`.
    pub armijo: f64,
    pub initial_guess: InitialGuess,
    /// How per-node derivative blocks are evaluated.
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iterations: 50,
            backtrack: 0.5,
            min_step: 2f64.powi(-20),
            armijo: 1e-4,
            initial_guess: InitialGuess::Constant,
            execution: Execution::Sequential,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.min_step > 0.0) {
            return Err(Error::InvalidArgument(
                "invalid line search parameters".into(),
            ));
        }
        Ok(())
    }
}

/// Starting iterate with `X_i = x0` and `Λ_i = ∇C(x0)` at every node.
///
/// Every `U_i` is set to the control that makes `∇ᵤH(x0, u, ∇C(x0))`
/// vanish, found by Newton from `u = 0`. If that solve fails the controls
/// stay at zero.
pub fn constant_guess(spec: &ProblemSpec, n_colloc: usize) -> DiscreteSolution {
    let mut sol = DiscreteSolution::zeros(spec, n_colloc);
    let x0 = spec.x0.transpose();
    let g = spec.grad_cost(spec.x0.as_slice());
    for i in 1..=n_colloc + 1 {
        sol.x.set_row(i, &x0);
        sol.lambda.set_row(i - 1, &g.transpose());
    }
    let zero = vec![0.0; spec.m()];
    if let Ok(u) = endpoint_control(spec, spec.x0.as_slice(), g.as_slice(), &zero) {
        for i in 0..n_colloc {
            sol.u.set_row(i, &u.transpose());
        }
    }
    sol
}

/// Moves a solution onto the nodes of `target` by evaluating its state,
/// control and costate polynomials there. Endpoint values are copied.
pub fn warm_start(
    prev: &DiscreteSolution,
    prev_rule: &GaussRule,
    target: &GaussRule,
) -> Result<DiscreteSolution> {
    let big_n = target.n();
    let (n, m) = (prev.state_dim(), prev.control_dim());
    let mut sol = DiscreteSolution {
        n_colloc: big_n,
        x: nalgebra::DMatrix::zeros(big_n + 2, n),
        u: nalgebra::DMatrix::zeros(big_n, m),
        lambda: nalgebra::DMatrix::zeros(big_n + 1, n),
        residual_norm: f64::NAN,
        iterations: 0,
        residual_history: Vec::new(),
        min_hessian_eigenvalue: None,
    };
    sol.x.set_row(0, &prev.x.row(0));
    sol.x.set_row(big_n + 1, &prev.x.row(prev.n_colloc + 1));
    sol.lambda.set_row(big_n, &prev.lambda.row(prev.n_colloc));
    let states = prev.x.rows(0, prev.n_colloc + 1).into_owned();
    for (k, &tau) in target.interior().iter().enumerate() {
        let x = interpolate(prev_rule, &states, Basis::State, tau)?;
        let u = interpolate(prev_rule, &prev.u, Basis::Collocation, tau)?;
        let l = interpolate(prev_rule, &prev.lambda, Basis::Costate, tau)?;
        sol.x.set_row(k + 1, &x.transpose());
        sol.u.set_row(k, &u.transpose());
        sol.lambda.set_row(k, &l.transpose());
    }
    Ok(sol)
}

fn initial_iterate(
    spec: &ProblemSpec,
    dm: &DiffMatrices,
    guess: &InitialGuess,
) -> Result<DiscreteSolution> {
    match guess {
        InitialGuess::Constant => Ok(constant_guess(spec, dm.n())),
        InitialGuess::Oracle(oracle) => DiscreteSolution::from_oracle(spec, dm.rule(), oracle),
        InitialGuess::WarmStart(prev) => {
            let prev_rule = GaussRule::new(prev.n_colloc)?;
            let mut sol = warm_start(prev, &prev_rule, dm.rule())?;
            sol.x.set_row(0, &spec.x0.transpose());
            Ok(sol)
        }
    }
}

/// Solves `T(X, U, Λ) = 0` with `n_colloc` Gauss points.
pub fn newton_solve(
    spec: &ProblemSpec,
    n_colloc: usize,
    opts: &SolverOptions,
) -> Result<DiscreteSolution> {
    let dm = DiffMatrices::with_n(n_colloc)?;
    newton_solve_with(spec, &dm, opts)
}

/// [`newton_solve`] reusing prebuilt differentiation matrices.
pub fn newton_solve_with(
    spec: &ProblemSpec,
    dm: &DiffMatrices,
    opts: &SolverOptions,
) -> Result<DiscreteSolution> {
    opts.validate()?;
    let exec = opts.execution;
    let mut sol = initial_iterate(spec, dm, &opts.initial_guess)?;
    let mut norm = transcribe::residual_with(spec, dm, &sol, exec)?.norm_inf();
    let mut history = vec![norm];
    let mut theta = sol.pack();

    let finish = |mut s: DiscreteSolution, norm: f64, it: usize, hist: &[f64]| {
        s.residual_norm = norm;
        s.iterations = it;
        s.residual_history = hist.to_vec();
        s
    };

    let mut iterations = 0;
    while norm > opts.tolerance {
        if iterations == opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
                best: Box::new(finish(sol, norm, iterations, &history)),
            });
        }
        let r = transcribe::residual_with(spec, dm, &sol, exec)?.pack();
        let jac = transcribe::jacobian_with(spec, dm, &sol, exec)?;
        let step = match linalg::solve(jac, &(-r), "Newton matrix") {
            Ok(step) => step,
            Err(Error::SingularMatrix { .. }) => {
                return Err(Error::SingularJacobian {
                    iterations,
                    residual: norm,
                    iterate: Box::new(finish(sol, norm, iterations, &history)),
                })
            }
            Err(e) => return Err(e),
        };

        let mut alpha = 1.0;
        let accepted = loop {
            let trial_theta = &theta + &step * alpha;
            let mut trial = sol.clone();
            trial.unpack(&trial_theta)?;
            // A step into a region where callbacks blow up counts as a failed trial.
            let trial_norm = match transcribe::residual_with(spec, dm, &trial, exec) {
                Ok(r) => r.norm_inf(),
                Err(Error::NonFinite { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if trial_norm <= (1.0 - opts.armijo * alpha) * norm {
                break Some((trial, trial_theta, trial_norm));
            }
            alpha *= opts.backtrack;
            if alpha < opts.min_step {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((trial, trial_theta, trial_norm)) => {
                sol = trial;
                theta = trial_theta;
                norm = trial_norm;
                history.push(norm);
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: norm,
                    best: Box::new(finish(sol, norm, iterations, &history)),
                })
            }
        }
    }
    let mut sol = finish(sol, norm, iterations, &history);
    sol.min_hessian_eigenvalue = Some(transcribe::min_hessian_eigenvalue(spec, &sol));
    Ok(sol)
}

const ENDPOINT_TOLERANCE: f64 = 1e-12;
const ENDPOINT_MAX_ITERATIONS: usize = 50;

/// Solves `∇ᵤH(x, u, λ) = 0` for `u` by Newton's method with Jacobian
/// `∇ᵤᵤH`, starting from `u_seed`.
pub fn endpoint_control(
    spec: &ProblemSpec,
    x: &[f64],
    lambda: &[f64],
    u_seed: &[f64],
) -> Result<DVector<f64>> {
    if u_seed.len() != spec.m() {
        return Err(Error::DimensionMismatch {
            what: "endpoint control seed",
            expected: spec.m(),
            got: u_seed.len(),
        });
    }
    let mut u = DVector::from_column_slice(u_seed);
    for _ in 0..ENDPOINT_MAX_ITERATIONS {
        let g = spec.grad_u_h(x, u.as_slice(), lambda);
        if g.amax() <= ENDPOINT_TOLERANCE {
            return Ok(u);
        }
        let r = spec.hessian_blocks(x, u.as_slice(), lambda).r;
        let du = linalg::solve(r, &(-g), "endpoint H_uu")?;
        u += du;
    }
    let g = spec.grad_u_h(x, u.as_slice(), lambda);
    if g.amax() <= ENDPOINT_TOLERANCE {
        Ok(u)
    } else {
        Err(Error::InvalidArgument(format!(
            "endpoint control did not converge (|∇ᵤH| = {:e})",
            g.amax()
        )))
    }
}

/// How controls at `τ = ±1` are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EndpointMode {
    /// Stationarity of the Hamiltonian at the endpoint state and costate.
    #[default]
    MinimumPrinciple,
    /// Extrapolation of the control polynomial through `U_1 .. U_N`.
    Interpolation,
}

/// Controls at `τ = -1` and `τ = +1`.
pub type EndpointControls = (Option<DVector<f64>>, Option<DVector<f64>>);

/// Controls at `τ = -1` and `τ = +1`. Each side is `None` when the
/// minimum-principle solve fails there.
pub fn endpoint_controls(
    spec: &ProblemSpec,
    rule: &GaussRule,
    sol: &DiscreteSolution,
    mode: EndpointMode,
) -> Result<EndpointControls> {
    let big_n = sol.n_colloc;
    match mode {
        EndpointMode::Interpolation => Ok((
            Some(interpolate(rule, &sol.u, Basis::Collocation, -1.0)?),
            Some(interpolate(rule, &sol.u, Basis::Collocation, 1.0)?),
        )),
        EndpointMode::MinimumPrinciple => {
            let lambda0 = sol.costate_at(rule, -1.0)?;
            let start =
                endpoint_control(spec, &sol.x_row(0), lambda0.as_slice(), &sol.u_row(1)).ok();
            let end = endpoint_control(
                spec,
                &sol.x_row(big_n + 1),
                &sol.lambda_row(big_n + 1),
                &sol.u_row(big_n),
            )
            .ok();
            Ok((start, end))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp;

    #[test]
    fn builtin_constant_start() {
        let (spec, _) = ocp::builtin_example();
        let sol = newton_solve(&spec, 10, &SolverOptions::default()).unwrap();
        assert!(sol.residual_norm <= 1e-10);
        assert!(sol.iterations <= 20, "iterations = {}", sol.iterations);
        assert_eq!(sol.x[(0, 0)], 1.0);
    }

    #[test]
    fn quadratic_drain_exact() {
        let (spec, _) = ocp::quadratic_drain();
        let sol = newton_solve(&spec, 5, &SolverOptions::default()).unwrap();
        assert!(sol.u.amax() <= 1e-10);
        assert!(sol.x.iter().all(|v| (v - 1.0).abs() <= 1e-10));
        assert!(sol.lambda.iter().all(|v| (v + 1.0).abs() <= 1e-10));
    }

    #[test]
    fn oracle_start_needs_at_most_one_step() {
        let (spec, oracle) = ocp::builtin_example();
        let opts = SolverOptions {
            tolerance: 1e-6,
            initial_guess: InitialGuess::Oracle(oracle),
            ..Default::default()
        };
        let sol = newton_solve(&spec, 25, &opts).unwrap();
        assert!(sol.iterations <= 1);
    }

    #[test]
    fn iteration_budget_exhaustion() {
        let (spec, _) = ocp::builtin_example();
        let opts = SolverOptions {
            max_iterations: 1,
            ..Default::default()
        };
        match newton_solve(&spec, 10, &opts) {
            Err(Error::NonConvergence {
                iterations, best, ..
            }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.n_colloc, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let (spec, _) = ocp::builtin_example();
        let opts = SolverOptions {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            newton_solve(&spec, 4, &opts),
            Err(Error::InvalidArgument(_))
        ));
        assert!(newton_solve(&spec, 0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn endpoint_controls_builtin() {
        let (spec, _) = ocp::builtin_example();
        let sol = newton_solve(&spec, 12, &SolverOptions::default()).unwrap();
        let rule = GaussRule::new(12).unwrap();
        let (u0, uf) =
            endpoint_controls(&spec, &rule, &sol, EndpointMode::MinimumPrinciple).unwrap();
        let u0 = u0.unwrap()[0];
        let uf = uf.unwrap()[0];
        assert!((u0 - sol.x[(0, 0)] / 2.0).abs() <= 1e-12);
        assert!((uf - sol.x[(13, 0)] / 2.0).abs() <= 1e-12);
    }

    #[test]
    fn endpoint_control_drain() {
        let (spec, _) = ocp::quadratic_drain();
        let u = endpoint_control(&spec, &[1.0], &[-1.0], &[0.3]).unwrap();
        assert!(u[0].abs() <= 1e-12);
    }

    #[test]
    fn warm_start_not_slower() {
        let (spec, _) = ocp::builtin_example();
        let base = newton_solve(&spec, 10, &SolverOptions::default()).unwrap();
        let cold = newton_solve(&spec, 15, &SolverOptions::default()).unwrap();
        let warm_opts = SolverOptions {
            initial_guess: InitialGuess::WarmStart(Box::new(base)),
            ..Default::default()
        };
        let warm = newton_solve(&spec, 15, &warm_opts).unwrap();
        assert!(warm.iterations <= cold.iterations);
        assert!((warm.x.clone() - cold.x).amax() <= 1e-9);
    }

    #[test]
    fn deterministic_iterates() {
        let (spec, _) = ocp::builtin_example();
        let a = newton_solve(&spec, 9, &SolverOptions::default()).unwrap();
        let b = newton_solve(&spec, 9, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
