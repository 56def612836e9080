//! Error sweeps over the number of collocation points against an analytic
//! solution, with log-linear decay-rate fits.

use serde::Serialize;

use crate::diffmat::DiffMatrices;
use crate::exec::Execution;
use crate::ocp::{AnalyticSolution, ProblemSpec};
use crate::quadrature::GaussRule;
use crate::solver::{newton_solve_with, InitialGuess, SolverOptions};
use crate::transcribe::DiscreteSolution;
use crate::{Error, Result};

/// Errors at or below this value are treated as roundoff and left out of
/// rate fits.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Fewest unfloored points a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 3;

/// Uniform samples on `[-1, 1]` for the dense-grid state error.
const DENSE_SAMPLES: usize = 201;

/// Discrete sup-norm errors: the largest per-node Euclidean error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupErrors {
    /// Over `X_0 .. X_{N+1}`.
    pub state: f64,
    /// Over `U_1 .. U_N`.
    pub control: f64,
    /// Over `Λ_1 .. Λ_{N+1}`; the discrete system has no `Λ_0`.
    pub costate: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn sup_error(
    sol: &DiscreteSolution,
    oracle: &AnalyticSolution,
    spec: &ProblemSpec,
    rule: &GaussRule,
) -> Result<SupErrors> {
    let big_n = rule.n();
    if sol.n_colloc != big_n {
        return Err(Error::DimensionMismatch {
            what: "solution order",
            expected: big_n,
            got: sol.n_colloc,
        });
    }
    let nodes = rule.nodes();
    let mut e = SupErrors {
        state: 0.0,
        control: 0.0,
        costate: 0.0,
    };
    for (i, &tau) in nodes.iter().enumerate() {
        let t = spec.map_time(tau)?;
        e.state = e
            .state
            .max(euclid(&sol.x_row(i), oracle.state_at(t).as_slice()));
        if (1..=big_n).contains(&i) {
            e.control = e
                .control
                .max(euclid(&sol.u_row(i), oracle.control_at(t).as_slice()));
        }
        if i >= 1 {
            e.costate = e
                .costate
                .max(euclid(&sol.lambda_row(i), oracle.costate_at(t).as_slice()));
        }
    }
    Ok(e)
}

/// Sup-norm state error of the interpolating polynomial on a uniform grid.
pub fn dense_state_error(
    sol: &DiscreteSolution,
    oracle: &AnalyticSolution,
    spec: &ProblemSpec,
    rule: &GaussRule,
    samples: usize,
) -> Result<f64> {
    let samples = samples.max(2);
    let mut err = 0.0f64;
    for k in 0..samples {
        let tau = (-1.0 + 2.0 * k as f64 / (samples - 1) as f64).clamp(-1.0, 1.0);
        let x = sol.state_at(rule, tau)?;
        let t = spec.map_time(tau)?;
        err = err.max(euclid(x.as_slice(), oracle.state_at(t).as_slice()));
    }
    Ok(err)
}

/// Which weighted norm [`omega_norm`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaKind {
    /// Rows `X_1 .. X_{N+1}`: `|X_{N+1}|² + Σ ω_i |X_i|²`.
    State,
    /// Rows `U_1 .. U_N`: `Σ ω_i |U_i|²`.
    Control,
}

/// Quadrature-weighted 2-norm of nodal values (one row per node).
pub fn omega_norm(rule: &GaussRule, rows: &nalgebra::DMatrix<f64>, kind: OmegaKind) -> Result<f64> {
    let big_n = rule.n();
    let expected = match kind {
        OmegaKind::State => big_n + 1,
        OmegaKind::Control => big_n,
    };
    if rows.nrows() != expected {
        return Err(Error::DimensionMismatch {
            what: "omega-norm rows",
            expected,
            got: rows.nrows(),
        });
    }
    let mut sum: f64 = rule
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * rows.row(i).norm_squared())
        .sum();
    if kind == OmegaKind::State {
        sum += rows.row(big_n).norm_squared();
    }
    Ok(sum.sqrt())
}

/// Least-squares slope of `log10(err)` against `N`, negated, over points
/// with `err > ERROR_FLOOR`. `None` with fewer than [`MIN_FIT_POINTS`].
pub fn fit_rate(points: &[(usize, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| e.is_finite() && *e > ERROR_FLOOR)
        .map(|&(n, e)| (n as f64, e.log10()))
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return None;
    }
    let k = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = usable.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub err_state: f64,
    pub err_control: f64,
    pub err_costate: f64,
    pub iterations: usize,
    pub residual: f64,
    /// State error of the interpolant on a uniform grid.
    pub dense_err_state: f64,
    pub converged: bool,
}

impl SweepRow {
    fn failed(n: usize, iterations: usize, residual: f64) -> Self {
        SweepRow {
            n,
            err_state: f64::NAN,
            err_control: f64::NAN,
            err_costate: f64::NAN,
            iterations,
            residual,
            dense_err_state: f64::NAN,
            converged: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedRates {
    pub state: Option<f64>,
    pub control: Option<f64>,
    pub costate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub problem_name: String,
    pub rows: Vec<SweepRow>,
    pub rates: FittedRates,
    /// First `N` at which any error reaches [`ERROR_FLOOR`].
    pub floor_n: Option<usize>,
}

impl ConvergenceReport {
    pub fn from_rows(problem_name: impl Into<String>, mut rows: Vec<SweepRow>) -> Self {
        rows.sort_by_key(|r| r.n);
        let series = |get: fn(&SweepRow) -> f64| -> Vec<(usize, f64)> {
            rows.iter()
                .filter(|r| r.converged)
                .map(|r| (r.n, get(r)))
                .collect()
        };
        let rates = FittedRates {
            state: fit_rate(&series(|r| r.err_state)),
            control: fit_rate(&series(|r| r.err_control)),
            costate: fit_rate(&series(|r| r.err_costate)),
        };
        let floor_n = rows
            .iter()
            .find(|r| {
                r.converged && r.err_state.min(r.err_control).min(r.err_costate) <= ERROR_FLOOR
            })
            .map(|r| r.n);
        ConvergenceReport {
            problem_name: problem_name.into(),
            rows,
            rates,
            floor_n,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// Whether every error series strictly decreases until it first reaches
    /// the floor. Rows past that point are not compared.
    pub fn strictly_decreasing_to_floor(&self) -> bool {
        let series: [fn(&SweepRow) -> f64; 3] =
            [|r| r.err_state, |r| r.err_control, |r| r.err_costate];
        series.iter().all(|get| {
            let mut prev = f64::INFINITY;
            for r in &self.rows {
                let e = get(r);
                if !e.is_finite() || e >= prev {
                    return false;
                }
                if e <= ERROR_FLOOR {
                    break;
                }
                prev = e;
            }
            true
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    /// Start each solve from the previous converged one. Forces sequential
    /// order; otherwise the entries run per `execution`.
    pub warm_start: bool,
    pub execution: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solver: SolverOptions::default(),
            warm_start: true,
            execution: Execution::Parallel,
        }
    }
}

fn sweep_entry(
    spec: &ProblemSpec,
    oracle: &AnalyticSolution,
    n: usize,
    opts: &SolverOptions,
) -> (SweepRow, Option<DiscreteSolution>) {
    let dm = match DiffMatrices::with_n(n) {
        Ok(dm) => dm,
        Err(_) => return (SweepRow::failed(n, 0, f64::NAN), None),
    };
    match newton_solve_with(spec, &dm, opts) {
        Ok(sol) => {
            let errors = sup_error(&sol, oracle, spec, dm.rule());
            let dense = dense_state_error(&sol, oracle, spec, dm.rule(), DENSE_SAMPLES);
            match (errors, dense) {
                (Ok(e), Ok(d)) => (
                    SweepRow {
                        n,
                        err_state: e.state,
                        err_control: e.control,
                        err_costate: e.costate,
                        iterations: sol.iterations,
                        residual: sol.residual_norm,
                        dense_err_state: d,
                        converged: true,
                    },
                    Some(sol),
                ),
                _ => (SweepRow::failed(n, sol.iterations, sol.residual_norm), None),
            }
        }
        Err(Error::NonConvergence {
            iterations,
            residual,
            ..
        })
        | Err(Error::SingularJacobian {
            iterations,
            residual,
            ..
        }) => (SweepRow::failed(n, iterations, residual), None),
        Err(_) => (SweepRow::failed(n, 0, f64::NAN), None),
    }
}

/// Solves at every `N` in `ns` and tabulates errors against `oracle`.
/// Failed solves become NaN rows and are excluded from the fits.
pub fn run_sweep(
    spec: &ProblemSpec,
    oracle: &AnalyticSolution,
    ns: &[usize],
    opts: &SweepOptions,
) -> Result<ConvergenceReport> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one N".into()));
    }
    opts.solver.validate()?;
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();

    let rows = if opts.warm_start {
        let mut rows = Vec::with_capacity(ns.len());
        let mut prev: Option<DiscreteSolution> = None;
        for &n in &ns {
            let mut solver = opts.solver.clone();
            let warm = prev.is_some();
            if let Some(p) = prev.take() {
                solver.initial_guess = InitialGuess::WarmStart(Box::new(p));
            }
            let (row, sol) = sweep_entry(spec, oracle, n, &solver);
            // A cold retry keeps one bad warm start from failing the row.
            let (row, sol) = if warm && !row.converged {
                sweep_entry(spec, oracle, n, &opts.solver)
            } else {
                (row, sol)
            };
            rows.push(row);
            prev = sol;
        }
        rows
    } else {
        opts.execution
            .map_slice(&ns, |&n| sweep_entry(spec, oracle, n, &opts.solver).0)
    };
    Ok(ConvergenceReport::from_rows(spec.name.clone(), rows))
}
