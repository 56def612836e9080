//! Continuous optimal control problems in Mayer form:
//!
//! ```text
//! minimize C(x(tf))  subject to  x' = f(x, u) on [t0, tf],  x(t0) = x0
//! ```
//!
//! A problem is a [`ControlModel`] (dynamics, terminal cost and whichever
//! derivatives the author can supply) wrapped in a [`ProblemSpec`] that adds
//! the horizon, the initial state and the derivative policy. Derivatives
//! that the model does not provide are approximated by central differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// User-side description of dynamics and terminal cost.
///
/// All derivative hooks are optional. The second-order hooks return blocks
/// of the Hessian of the Hamiltonian `H(x, u, λ) = λᵀ f(x, u)`:
/// `hess_xx` is `∇ₓₓH` (n×n), `hess_xu` is the mixed block with entries
/// `∂²H / ∂x_a ∂u_b` (n×m) and `hess_uu` is `∇ᵤᵤH` (m×m).
///
/// Implementations must be free of side effects; they are called
/// concurrently from several threads.
pub trait ControlModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;

    fn dynamics(&self, x: &[f64], u: &[f64]) -> DVector<f64>;
    fn cost(&self, x: &[f64]) -> f64;

    fn jac_x(&self, _x: &[f64], _u: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn jac_u(&self, _x: &[f64], _u: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn hess_xx(&self, _x: &[f64], _u: &[f64], _lambda: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn hess_xu(&self, _x: &[f64], _u: &[f64], _lambda: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn hess_uu(&self, _x: &[f64], _u: &[f64], _lambda: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn grad_cost(&self, _x: &[f64]) -> Option<DVector<f64>> {
        None
    }
    fn hess_cost(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// How derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Use the model's hooks; fall back to differences for missing ones.
    #[default]
    Analytic,
    /// Ignore all hooks and difference the dynamics and cost values.
    FiniteDifference,
}

/// Second-derivative blocks of the Hamiltonian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    /// `∇ₓₓH`, n×n.
    pub q: DMatrix<f64>,
    /// `∂²H / ∂x ∂u`, n×m. Its transpose appears in the control rows.
    pub s: DMatrix<f64>,
    /// `∇ᵤᵤH`, m×m.
    pub r: DMatrix<f64>,
}

const FIRST_ORDER_STEP: f64 = 1e-6;
const SECOND_ORDER_STEP: f64 = 1e-4;
const SYMMETRY_TOLERANCE: f64 = 1e-10;

fn step(scale: f64, z: f64) -> f64 {
    scale * (1.0 + z.abs())
}

/// Central-difference Jacobian of a vector function.
pub fn fd_jacobian(g: impl Fn(&[f64]) -> DVector<f64>, z: &[f64], rows: usize) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(rows, z.len());
    let mut zp = z.to_vec();
    for k in 0..z.len() {
        let h = step(FIRST_ORDER_STEP, z[k]);
        zp[k] = z[k] + h;
        let fp = g(&zp);
        zp[k] = z[k] - h;
        let fm = g(&zp);
        zp[k] = z[k];
        jac.set_column(k, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient(g: impl Fn(&[f64]) -> f64, z: &[f64]) -> DVector<f64> {
    let wrapped = |v: &[f64]| DVector::from_element(1, g(v));
    fd_jacobian(wrapped, z, 1)
        .transpose()
        .column(0)
        .into_owned()
}

/// Symmetric Hessian of a scalar function from function values only.
pub fn fd_hessian(g: impl Fn(&[f64]) -> f64, z: &[f64]) -> DMatrix<f64> {
    let d = z.len();
    let mut hess = DMatrix::zeros(d, d);
    let g0 = g(z);
    let mut zp = z.to_vec();
    let h: Vec<f64> = z.iter().map(|&v| step(SECOND_ORDER_STEP, v)).collect();
    for i in 0..d {
        zp[i] = z[i] + h[i];
        let fp = g(&zp);
        zp[i] = z[i] - h[i];
        let fm = g(&zp);
        zp[i] = z[i];
        hess[(i, i)] = (fp - 2.0 * g0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                zp[i] = z[i] + si * h[i];
                zp[j] = z[j] + sj * h[j];
                let v = g(&zp);
                zp[i] = z[i];
                zp[j] = z[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn assert_symmetric(m: &DMatrix<f64>, what: &str) {
    debug_assert!(
        (m - m.transpose()).abs().max() <= SYMMETRY_TOLERANCE * (1.0 + m.abs().max()),
        "{what} is not symmetric"
    );
}

/// A complete problem: model, horizon, initial state and derivative policy.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub t0: f64,
    pub tf: f64,
    pub x0: DVector<f64>,
    pub model: Arc<dyn ControlModel>,
    pub mode: DerivativeMode,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .field("x0", &self.x0.as_slice())
            .field("n", &self.n())
            .field("m", &self.m())
            .field("mode", &self.mode)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        t0: f64,
        tf: f64,
        x0: DVector<f64>,
        model: Arc<dyn ControlModel>,
    ) -> Result<Self> {
        if !(t0 < tf) || !t0.is_finite() || !tf.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "horizon must satisfy t0 < tf, got [{t0}, {tf}]"
            )));
        }
        if model.state_dim() == 0 || model.control_dim() == 0 {
            return Err(Error::InvalidArgument(
                "state and control dimensions must be positive".into(),
            ));
        }
        if x0.len() != model.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "initial state",
                expected: model.state_dim(),
                got: x0.len(),
            });
        }
        Ok(ProblemSpec {
            name: name.into(),
            t0,
            tf,
            x0,
            model,
            mode: DerivativeMode::Analytic,
        })
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn n(&self) -> usize {
        self.model.state_dim()
    }

    pub fn m(&self) -> usize {
        self.model.control_dim()
    }

    /// `(tf - t0) / 2`, the factor applied to the dynamics on `[-1, 1]`.
    pub fn time_scale(&self) -> f64 {
        0.5 * (self.tf - self.t0)
    }

    /// Affine map from `τ ∈ [-1, 1]` to physical time.
    pub fn map_time(&self, tau: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!("τ = {tau} outside [-1, 1]")));
        }
        Ok(self.t0 + (tau + 1.0) * self.time_scale())
    }

    fn analytic(&self) -> bool {
        self.mode == DerivativeMode::Analytic
    }

    pub fn f(&self, x: &[f64], u: &[f64]) -> DVector<f64> {
        self.model.dynamics(x, u)
    }

    pub fn cost(&self, x: &[f64]) -> f64 {
        self.model.cost(x)
    }

    /// `∇ₓf`, n×n.
    pub fn jac_x(&self, x: &[f64], u: &[f64]) -> DMatrix<f64> {
        if self.analytic() {
            if let Some(j) = self.model.jac_x(x, u) {
                return j;
            }
        }
        fd_jacobian(|xv| self.model.dynamics(xv, u), x, self.n())
    }

    /// `∇ᵤf`, n×m.
    pub fn jac_u(&self, x: &[f64], u: &[f64]) -> DMatrix<f64> {
        if self.analytic() {
            if let Some(j) = self.model.jac_u(x, u) {
                return j;
            }
        }
        fd_jacobian(|uv| self.model.dynamics(x, uv), u, self.n())
    }

    pub fn grad_cost(&self, x: &[f64]) -> DVector<f64> {
        if self.analytic() {
            if let Some(g) = self.model.grad_cost(x) {
                return g;
            }
        }
        fd_gradient(|xv| self.model.cost(xv), x)
    }

    pub fn hess_cost(&self, x: &[f64]) -> DMatrix<f64> {
        if self.analytic() {
            if let Some(h) = self.model.hess_cost(x) {
                assert_symmetric(&h, "cost Hessian");
                return h;
            }
            if self.model.grad_cost(x).is_some() {
                let h = fd_jacobian(|xv| self.grad_cost(xv), x, self.n());
                return symmetrize(h);
            }
        }
        fd_hessian(|xv| self.model.cost(xv), x)
    }

    /// Second-derivative blocks of `H = λᵀ f`.
    pub fn hessian_blocks(&self, x: &[f64], u: &[f64], lambda: &[f64]) -> HessianBlocks {
        let (n, m) = (self.n(), self.m());
        if self.analytic() {
            let q = self.model.hess_xx(x, u, lambda);
            let s = self.model.hess_xu(x, u, lambda);
            let r = self.model.hess_uu(x, u, lambda);
            if let (Some(q), Some(s), Some(r)) = (q, s, r) {
                assert_symmetric(&q, "H_xx");
                assert_symmetric(&r, "H_uu");
                return HessianBlocks { q, s, r };
            }
        }
        let z: Vec<f64> = x.iter().chain(u).copied().collect();
        let full = if self.analytic()
            && self.model.jac_x(x, u).is_some()
            && self.model.jac_u(x, u).is_some()
        {
            let lam = DVector::from_column_slice(lambda);
            let grad = |zv: &[f64]| {
                let (xv, uv) = zv.split_at(n);
                let gx = self.jac_x(xv, uv).transpose() * &lam;
                let gu = self.jac_u(xv, uv).transpose() * &lam;
                DVector::from_iterator(n + m, gx.iter().chain(gu.iter()).copied())
            };
            symmetrize(fd_jacobian(grad, &z, n + m))
        } else {
            fd_hessian(
                |zv| {
                    let (xv, uv) = zv.split_at(n);
                    self.model
                        .dynamics(xv, uv)
                        .dot(&DVector::from_column_slice(lambda))
                },
                &z,
            )
        };
        HessianBlocks {
            q: full.view((0, 0), (n, n)).into_owned(),
            s: full.view((0, n), (n, m)).into_owned(),
            r: full.view((n, n), (m, m)).into_owned(),
        }
    }

    /// `∇ₓH = (∇ₓf)ᵀ λ`.
    pub fn grad_x_h(&self, x: &[f64], u: &[f64], lambda: &[f64]) -> DVector<f64> {
        self.jac_x(x, u).transpose() * DVector::from_column_slice(lambda)
    }

    /// `∇ᵤH = (∇ᵤf)ᵀ λ`.
    pub fn grad_u_h(&self, x: &[f64], u: &[f64], lambda: &[f64]) -> DVector<f64> {
        self.jac_u(x, u).transpose() * DVector::from_column_slice(lambda)
    }
}

fn relative_deviation(analytic: &DMatrix<f64>, approx: &DMatrix<f64>) -> f64 {
    analytic
        .iter()
        .zip(approx.iter())
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Worst relative deviation between the model's analytic derivatives and
/// central differences at `(x, u, λ)`. Hooks the model does not implement
/// are skipped. Second derivatives are differenced from the analytic first
/// derivatives when those exist.
pub fn fd_derivative_check(spec: &ProblemSpec, x: &[f64], u: &[f64], lambda: &[f64]) -> f64 {
    let model = spec.model.as_ref();
    let (n, m) = (spec.n(), spec.m());
    let mut worst = 0.0f64;
    let fd_spec = spec.clone().with_mode(DerivativeMode::FiniteDifference);

    let jx = model.jac_x(x, u);
    let ju = model.jac_u(x, u);
    if let Some(a) = &jx {
        worst = worst.max(relative_deviation(a, &fd_spec.jac_x(x, u)));
    }
    if let Some(a) = &ju {
        worst = worst.max(relative_deviation(a, &fd_spec.jac_u(x, u)));
    }

    let approx_blocks = if jx.is_some() && ju.is_some() {
        let lam = DVector::from_column_slice(lambda);
        let z: Vec<f64> = x.iter().chain(u).copied().collect();
        let grad = |zv: &[f64]| {
            let (xv, uv) = zv.split_at(n);
            let gx = model.jac_x(xv, uv).unwrap().transpose() * &lam;
            let gu = model.jac_u(xv, uv).unwrap().transpose() * &lam;
            DVector::from_iterator(n + m, gx.iter().chain(gu.iter()).copied())
        };
        let full = symmetrize(fd_jacobian(grad, &z, n + m));
        HessianBlocks {
            q: full.view((0, 0), (n, n)).into_owned(),
            s: full.view((0, n), (n, m)).into_owned(),
            r: full.view((n, n), (m, m)).into_owned(),
        }
    } else {
        fd_spec.hessian_blocks(x, u, lambda)
    };
    if let Some(q) = model.hess_xx(x, u, lambda) {
        worst = worst.max(relative_deviation(&q, &approx_blocks.q));
    }
    if let Some(s) = model.hess_xu(x, u, lambda) {
        worst = worst.max(relative_deviation(&s, &approx_blocks.s));
    }
    if let Some(r) = model.hess_uu(x, u, lambda) {
        worst = worst.max(relative_deviation(&r, &approx_blocks.r));
    }

    let gc = model.grad_cost(x);
    if let Some(g) = &gc {
        let approx = fd_gradient(|xv| model.cost(xv), x);
        worst = worst.max(relative_deviation(
            &DMatrix::from_column_slice(n, 1, g.as_slice()),
            &DMatrix::from_column_slice(n, 1, approx.as_slice()),
        ));
    }
    if let Some(h) = model.hess_cost(x) {
        let approx = match &gc {
            Some(_) => symmetrize(fd_jacobian(|xv| model.grad_cost(xv).unwrap(), x, n)),
            None => fd_hessian(|xv| model.cost(xv), x),
        };
        worst = worst.max(relative_deviation(&h, &approx));
    }
    worst
}

type Trajectory = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Known optimal state, control and costate, as functions of physical time.
#[derive(Clone)]
pub struct AnalyticSolution {
    pub state: Trajectory,
    pub control: Trajectory,
    pub costate: Trajectory,
}

impl fmt::Debug for AnalyticSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnalyticSolution { .. }")
    }
}

impl AnalyticSolution {
    pub fn new(
        state: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        control: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        costate: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        AnalyticSolution {
            state: Arc::new(state),
            control: Arc::new(control),
            costate: Arc::new(costate),
        }
    }

    pub fn state_at(&self, t: f64) -> DVector<f64> {
        (self.state)(t)
    }

    pub fn control_at(&self, t: f64) -> DVector<f64> {
        (self.control)(t)
    }

    pub fn costate_at(&self, t: f64) -> DVector<f64> {
        (self.costate)(t)
    }
}

fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

fn mat1(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// `x' = 2.5 (-x + x u - u²)` with terminal cost `-x(tf)`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarExample;

impl ControlModel for ScalarExample {
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn dynamics(&self, x: &[f64], u: &[f64]) -> DVector<f64> {
        let (x, u) = (x[0], u[0]);
        scalar(2.5 * (-x + x * u - u * u))
    }
    fn cost(&self, x: &[f64]) -> f64 {
        -x[0]
    }
    fn jac_x(&self, _x: &[f64], u: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(2.5 * (u[0] - 1.0)))
    }
    fn jac_u(&self, x: &[f64], u: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(2.5 * (x[0] - 2.0 * u[0])))
    }
    fn hess_xx(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(0.0))
    }
    fn hess_xu(&self, _x: &[f64], _u: &[f64], l: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(2.5 * l[0]))
    }
    fn hess_uu(&self, _x: &[f64], _u: &[f64], l: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(-5.0 * l[0]))
    }
    fn grad_cost(&self, _x: &[f64]) -> Option<DVector<f64>> {
        Some(scalar(-1.0))
    }
    fn hess_cost(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(0.0))
    }
}

/// The exponential-convergence test problem on `[0, 2]` with `x(0) = 1`,
/// and its closed-form solution.
pub fn builtin_example() -> (ProblemSpec, AnalyticSolution) {
    let spec = ProblemSpec::new(
        "hager-example",
        0.0,
        2.0,
        DVector::from_element(1, 1.0),
        Arc::new(ScalarExample),
    )
    .expect("builtin problem is well formed");
    let a = |t: f64| 1.0 + 3.0 * (2.5 * t).exp();
    let denom = (-5.0f64).exp() + 9.0 * 5.0f64.exp() + 6.0;
    let oracle = AnalyticSolution::new(
        move |t| scalar(4.0 / a(t)),
        move |t| scalar(2.0 / a(t)),
        move |t| scalar(-a(t).powi(2) * (-2.5 * t).exp() / denom),
    );
    (spec, oracle)
}

/// `x' = -u²` with terminal cost `-x(1)` on `[-1, 1]`. The optimum is
/// `u ≡ 0`, `x ≡ 1`, `λ ≡ -1`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticDrain;

impl ControlModel for QuadraticDrain {
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn dynamics(&self, _x: &[f64], u: &[f64]) -> DVector<f64> {
        scalar(-u[0] * u[0])
    }
    fn cost(&self, x: &[f64]) -> f64 {
        -x[0]
    }
    fn jac_x(&self, _x: &[f64], _u: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(0.0))
    }
    fn jac_u(&self, _x: &[f64], u: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(-2.0 * u[0]))
    }
    fn hess_xx(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(0.0))
    }
    fn hess_xu(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(0.0))
    }
    fn hess_uu(&self, _x: &[f64], _u: &[f64], l: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(-2.0 * l[0]))
    }
    fn grad_cost(&self, _x: &[f64]) -> Option<DVector<f64>> {
        Some(scalar(-1.0))
    }
    fn hess_cost(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(0.0))
    }
}

pub fn quadratic_drain() -> (ProblemSpec, AnalyticSolution) {
    let spec = ProblemSpec::new(
        "quadratic-drain",
        -1.0,
        1.0,
        DVector::from_element(1, 1.0),
        Arc::new(QuadraticDrain),
    )
    .expect("builtin problem is well formed");
    let oracle = AnalyticSolution::new(|_| scalar(1.0), |_| scalar(0.0), |_| scalar(-1.0));
    (spec, oracle)
}

/// Scalar linear-quadratic regulator in Mayer form. The running cost
/// `u²/2` is carried by an auxiliary state `z`:
///
/// ```text
/// x' = a x + u,  z' = u² / 2,  C = z(1) + (p / 2) x(1)²
/// ```
#[derive(Debug, Clone, Copy)]
pub struct LqRegulator {
    pub a: f64,
    pub p: f64,
}

impl ControlModel for LqRegulator {
    fn state_dim(&self) -> usize {
        2
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn dynamics(&self, x: &[f64], u: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![self.a * x[0] + u[0], 0.5 * u[0] * u[0]])
    }
    fn cost(&self, x: &[f64]) -> f64 {
        x[1] + 0.5 * self.p * x[0] * x[0]
    }
    fn jac_x(&self, _x: &[f64], _u: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &[self.a, 0.0, 0.0, 0.0]))
    }
    fn jac_u(&self, _x: &[f64], u: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 1, &[1.0, u[0]]))
    }
    fn hess_xx(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(2, 2))
    }
    fn hess_xu(&self, _x: &[f64], _u: &[f64], _l: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(2, 1))
    }
    fn hess_uu(&self, _x: &[f64], _u: &[f64], l: &[f64]) -> Option<DMatrix<f64>> {
        Some(mat1(l[1]))
    }
    fn grad_cost(&self, x: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::from_vec(vec![self.p * x[0], 1.0]))
    }
    fn hess_cost(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &[self.p, 0.0, 0.0, 0.0]))
    }
}

/// [`LqRegulator`] with `a = -1`, `p = 2` on `[0, 1]`, `x(0) = (1, 0)`.
///
/// The costate is `λ₁(t) = c e^{a(1-t)}`, `λ₂ ≡ 1` with `c = p x(1)`, and
/// the optimal control is `u = -λ₁`.
pub fn lq_regulator() -> (ProblemSpec, AnalyticSolution) {
    let (a, p) = (-1.0f64, 2.0f64);
    let spec = ProblemSpec::new(
        "lq-regulator",
        0.0,
        1.0,
        DVector::from_vec(vec![1.0, 0.0]),
        Arc::new(LqRegulator { a, p }),
    )
    .expect("builtin problem is well formed");
    let g = ((2.0 * a).exp() - 1.0) / (2.0 * a);
    let x1 = a.exp() / (1.0 + p * g);
    let c = p * x1;
    let oracle = AnalyticSolution::new(
        move |t| {
            let x = (a * t).exp()
                - c * (a * (t + 1.0)).exp() * (1.0 - (-2.0 * a * t).exp()) / (2.0 * a);
            let z = 0.5 * c * c * ((2.0 * a).exp() - (2.0 * a * (1.0 - t)).exp()) / (2.0 * a);
            DVector::from_vec(vec![x, z])
        },
        move |t| scalar(-c * (a * (1.0 - t)).exp()),
        move |t| DVector::from_vec(vec![c * (a * (1.0 - t)).exp(), 1.0]),
    );
    (spec, oracle)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &["hager-example", "quadratic-drain", "lq-regulator"];

/// Looks up a builtin problem and its analytic solution by name.
pub fn builtin(name: &str) -> Option<(ProblemSpec, AnalyticSolution)> {
    match name {
        "hager-example" => Some(builtin_example()),
        "quadratic-drain" => Some(quadratic_drain()),
        "lq-regulator" => Some(lq_regulator()),
        _ => None,
    }
}
