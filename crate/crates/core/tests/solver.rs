use std::sync::Arc;

use gauss_collocation::convergence::{dense_state_error, SweepOptions};
use gauss_collocation::ocp::{
    builtin, builtin_example, lq_regulator, quadratic_drain, BUILTIN_NAMES,
};
use gauss_collocation::solver::{endpoint_controls, newton_solve_with, EndpointMode, InitialGuess};
use gauss_collocation::transcribe::{jacobian, residual, system_order};
use gauss_collocation::{
    newton_solve, run_sweep, sup_error, ControlModel, DerivativeMode, DiffMatrices,
    DiscreteSolution, Error, ProblemSpec, SolverOptions,
};
use nalgebra::{DMatrix, DVector};

/// `x' = A x + B u + c` with `C = ½ xᵀ P x + qᵀ x`; every derivative is
/// constant, so the residual Jacobian is too.
struct Affine;

const A: [f64; 4] = [0.3, -1.0, 0.5, -0.2];
const B: [f64; 2] = [1.0, 0.4];
const C: [f64; 2] = [0.1, -0.3];
const P: [f64; 4] = [2.0, 0.5, 0.5, 1.0];
const Q: [f64; 2] = [-1.0, 0.25];

impl ControlModel for Affine {
    fn state_dim(&self) -> usize {
        2
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn dynamics(&self, x: &[f64], u: &[f64]) -> DVector<f64> {
        let a = DMatrix::from_row_slice(2, 2, &A);
        a * DVector::from_column_slice(x)
            + DVector::from_column_slice(&B) * u[0]
            + DVector::from_column_slice(&C)
    }
    fn cost(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let p = DMatrix::from_row_slice(2, 2, &P);
        0.5 * x.dot(&(p * &x)) + DVector::from_column_slice(&Q).dot(&x)
    }
    fn jac_x(&self, _x: &[f64], _u: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &A))
    }
    fn jac_u(&self, _x: &[f64], _u: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_column_slice(2, 1, &B))
    }
    fn hess_xx(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(2, 2))
    }
    fn hess_xu(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(2, 1))
    }
    fn hess_uu(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(1, 1))
    }
    fn grad_cost(&self, x: &[f64]) -> Option<DVector<f64>> {
        let p = DMatrix::from_row_slice(2, 2, &P);
        Some(p * DVector::from_column_slice(x) + DVector::from_column_slice(&Q))
    }
    fn hess_cost(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &P))
    }
}

fn affine_spec() -> ProblemSpec {
    ProblemSpec::new(
        "affine",
        0.0,
        3.0,
        DVector::from_vec(vec![1.0, -1.0]),
        Arc::new(Affine),
    )
    .unwrap()
}

fn filled(spec: &ProblemSpec, n: usize, offset: f64) -> DiscreteSolution {
    let mut sol = DiscreteSolution::zeros(spec, n);
    let theta = sol.pack();
    let values = DVector::from_iterator(
        theta.len(),
        (0..theta.len()).map(|k| (k as f64 * 0.37 + offset).sin()),
    );
    sol.unpack(&values).unwrap();
    sol
}

#[test]
fn affine_problem_has_constant_jacobian() {
    let spec = affine_spec();
    let dm = DiffMatrices::with_n(6).unwrap();
    let j1 = jacobian(&spec, &dm, &filled(&spec, 6, 0.0)).unwrap();
    let j2 = jacobian(&spec, &dm, &filled(&spec, 6, 1.3)).unwrap();
    assert!((&j1 - &j2).abs().max() <= 1e-13);
}

#[test]
fn terminal_costate_block_is_identity() {
    let spec = affine_spec();
    let (big_n, n, m) = (4, 2, 1);
    let dm = DiffMatrices::with_n(big_n).unwrap();
    let jac = jacobian(&spec, &dm, &filled(&spec, big_n, 0.5)).unwrap();
    assert_eq!(jac.nrows(), system_order(big_n, n, m));
    let t4_row = big_n * n + n + big_n * n;
    let last_lambda = (big_n + 1) * n + big_n * m + big_n * n;
    let block = jac.view((t4_row, last_lambda), (n, n));
    assert_eq!(block.into_owned(), DMatrix::identity(n, n));
}

#[test]
fn collocation_block_matches_hand_assembly() {
    let spec = affine_spec();
    let (big_n, n) = (3, 2);
    let dm = DiffMatrices::with_n(big_n).unwrap();
    let jac = jacobian(&spec, &dm, &filled(&spec, big_n, 0.2)).unwrap();
    let s = spec.time_scale();
    let a = DMatrix::from_row_slice(2, 2, &A);
    let d = dm.d_interior();
    let mut expected = DMatrix::zeros(big_n * n, big_n * n);
    for i in 0..big_n {
        for j in 0..big_n {
            let mut blk = DMatrix::identity(n, n) * d[(i, j)];
            if i == j {
                blk -= &a * s;
            }
            expected.view_mut((i * n, j * n), (n, n)).copy_from(&blk);
        }
    }
    let got = jac.view((0, 0), (big_n * n, big_n * n)).into_owned();
    assert!((&got - &expected).abs().max() <= 1e-14, "{got}\n{expected}");
}

#[test]
fn newton_tail_is_quadratic() {
    for (spec, _) in [builtin_example(), lq_regulator()] {
        for n in [5, 10, 20] {
            let sol = newton_solve(&spec, n, &SolverOptions::default()).unwrap();
            for w in sol.residual_history.windows(2) {
                if w[1] > 1e-12 && w[0] < 1e-2 {
                    assert!(
                        w[1] <= 1e5 * w[0] * w[0],
                        "{} n={n}: {} -> {}",
                        spec.name,
                        w[0],
                        w[1]
                    );
                }
            }
        }
    }
}

#[test]
fn converged_blocks_within_tolerance() {
    let opts = SolverOptions::default();
    for name in BUILTIN_NAMES {
        let (spec, _) = builtin(name).unwrap();
        for n in [1, 4, 9, 16] {
            let dm = DiffMatrices::with_n(n).unwrap();
            let sol = newton_solve_with(&spec, &dm, &opts).unwrap();
            let blocks = residual(&spec, &dm, &sol).unwrap().block_norms();
            assert!(
                blocks.iter().all(|&b| b <= opts.tolerance),
                "{name} n={n}: {blocks:?}"
            );
            assert_eq!(sol.residual_history.len(), sol.iterations + 1);
        }
    }
}

#[test]
fn solutions_match_oracles() {
    for (spec, oracle, n, tol) in [
        (builtin_example().0, builtin_example().1, 20, 1e-10),
        (lq_regulator().0, lq_regulator().1, 12, 1e-10),
        (quadratic_drain().0, quadratic_drain().1, 3, 1e-12),
    ] {
        let dm = DiffMatrices::with_n(n).unwrap();
        let sol = newton_solve_with(&spec, &dm, &SolverOptions::default()).unwrap();
        let e = sup_error(&sol, &oracle, &spec, dm.rule()).unwrap();
        assert!(
            e.state.max(e.control).max(e.costate) <= tol,
            "{}: {e:?}",
            spec.name
        );
    }
}

#[test]
fn interpolant_error_tracks_nodal_error() {
    let (spec, oracle) = builtin_example();
    let dm = DiffMatrices::with_n(15).unwrap();
    let sol = newton_solve_with(&spec, &dm, &SolverOptions::default()).unwrap();
    let nodal = sup_error(&sol, &oracle, &spec, dm.rule()).unwrap().state;
    let dense = dense_state_error(&sol, &oracle, &spec, dm.rule(), 501).unwrap();
    assert!(dense <= 10.0 * nodal, "dense {dense:e} nodal {nodal:e}");
}

#[test]
fn endpoint_controls_follow_minimum_principle() {
    let (spec, oracle) = builtin_example();
    let dm = DiffMatrices::with_n(18).unwrap();
    let sol = newton_solve_with(&spec, &dm, &SolverOptions::default()).unwrap();
    let (u0, uf) =
        endpoint_controls(&spec, dm.rule(), &sol, EndpointMode::MinimumPrinciple).unwrap();
    let (u0, uf) = (u0.unwrap(), uf.unwrap());
    assert!((u0[0] - oracle.control_at(0.0)[0]).abs() <= 1e-8);
    assert!((uf[0] - oracle.control_at(2.0)[0]).abs() <= 1e-8);
}

#[test]
fn finite_difference_mode_converges_to_same_solution() {
    let (spec, _) = builtin_example();
    let fd = spec.clone().with_mode(DerivativeMode::FiniteDifference);
    let opts = SolverOptions::default();
    let a = newton_solve(&spec, 8, &opts).unwrap();
    let b = newton_solve(&fd, 8, &opts).unwrap();
    assert!((&a.x - &b.x).abs().max() <= 1e-8);
    assert!((&a.lambda - &b.lambda).abs().max() <= 1e-8);
}

#[test]
fn nonconvergence_returns_best_iterate() {
    let (spec, _) = builtin_example();
    let opts = SolverOptions {
        max_iterations: 2,
        ..SolverOptions::default()
    };
    match newton_solve(&spec, 10, &opts) {
        Err(Error::NonConvergence {
            iterations,
            residual,
            best,
        }) => {
            assert_eq!(iterations, 2);
            assert_eq!(best.residual_norm, residual);
            assert!(residual < best.residual_history[0]);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn oracle_start_converges_immediately() {
    let (spec, oracle) = lq_regulator();
    let opts = SolverOptions {
        initial_guess: InitialGuess::Oracle(oracle),
        ..SolverOptions::default()
    };
    let sol = newton_solve(&spec, 10, &opts).unwrap();
    assert!(sol.iterations <= 1);
}

#[test]
fn cold_and_warm_sweeps_agree() {
    let (spec, oracle) = builtin_example();
    let ns = [4, 6, 8, 10];
    let warm = run_sweep(&spec, &oracle, &ns, &SweepOptions::default()).unwrap();
    let cold = run_sweep(
        &spec,
        &oracle,
        &ns,
        &SweepOptions {
            warm_start: false,
            ..SweepOptions::default()
        },
    )
    .unwrap();
    assert!(warm.all_converged() && cold.all_converged());
    for (w, c) in warm.rows.iter().zip(&cold.rows) {
        assert_eq!(w.n, c.n);
        assert!((w.err_state - c.err_state).abs() <= 1e-9);
        assert!(w.iterations <= c.iterations);
    }
}
