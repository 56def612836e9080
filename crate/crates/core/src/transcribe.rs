//! Discrete first-order optimality system for Gauss collocation.
//!
//! With `f̃ = s f` (`s = (tf - t0)/2`) and `H̃ = λᵀ f̃`, the residual has five
//! blocks:
//!
//! ```text
//! T1_i = Σ_{j=0..N} D_ij X_j − f̃(X_i, U_i)                 1 <= i <= N
//! T2   = X_{N+1} − X_0 − Σ_j ω_j f̃(X_j, U_j)
//! T3_i = Σ_{j=1..N+1} D†_ij Λ_j + ∇ₓH̃(X_i, U_i, Λ_i)        1 <= i <= N
//! T4   = Λ_{N+1} − ∇C(X_{N+1})
//! T5_i = ∇ᵤH̃(X_i, U_i, Λ_i)                                1 <= i <= N
//! ```
//!
//! `X_0` is the fixed initial state. Unknowns are packed as
//! `(X_1 .. X_{N+1}, U_1 .. U_N, Λ_1 .. Λ_{N+1})` and residuals as
//! `(T1, T2, T3, T4, T5)`, each in increasing node order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::diffmat::{
    barycentric_eval, collocation_weights, costate_weights, state_weights, DiffMatrices,
};
use crate::exec::Execution;
use crate::ocp::{AnalyticSolution, ProblemSpec};
use crate::quadrature::GaussRule;
use crate::{Error, Result};

/// Discrete state, control and costate on the Gauss nodes.
///
/// `x` has `N + 2` rows (`X_0 .. X_{N+1}`), `u` has `N` rows
/// (`U_1 .. U_N`) and `lambda` has `N + 1` rows (`Λ_1 .. Λ_{N+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub n_colloc: usize,
    pub x: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    /// `‖T‖∞` at this iterate.
    pub residual_norm: f64,
    pub iterations: usize,
    /// `‖T‖∞` before the first step and after every accepted step.
    pub residual_history: Vec<f64>,
    /// Smallest eigenvalue over the per-node Hamiltonian Hessians
    /// `[[Q, S], [Sᵀ, R]]` and the cost Hessian. Diagnostic only.
    pub min_hessian_eigenvalue: Option<f64>,
}

impl DiscreteSolution {
    /// All-zero layout with `X_0 = x0`.
    pub fn zeros(spec: &ProblemSpec, n_colloc: usize) -> Self {
        let (n, m) = (spec.n(), spec.m());
        let mut x = DMatrix::zeros(n_colloc + 2, n);
        x.set_row(0, &spec.x0.transpose());
        DiscreteSolution {
            n_colloc,
            x,
            u: DMatrix::zeros(n_colloc, m),
            lambda: DMatrix::zeros(n_colloc + 1, n),
            residual_norm: f64::NAN,
            iterations: 0,
            residual_history: Vec::new(),
            min_hessian_eigenvalue: None,
        }
    }

    /// Samples an analytic solution at the nodes. `X_0` is taken from the
    /// problem, not from the oracle.
    pub fn from_oracle(
        spec: &ProblemSpec,
        rule: &GaussRule,
        oracle: &AnalyticSolution,
    ) -> Result<Self> {
        let big_n = rule.n();
        let mut sol = Self::zeros(spec, big_n);
        let nodes = rule.nodes();
        for i in 1..=big_n + 1 {
            let t = spec.map_time(nodes[i])?;
            sol.x.set_row(i, &oracle.state_at(t).transpose());
            sol.lambda.set_row(i - 1, &oracle.costate_at(t).transpose());
            if i <= big_n {
                sol.u.set_row(i - 1, &oracle.control_at(t).transpose());
            }
        }
        Ok(sol)
    }

    pub fn state_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn control_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn x_row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn u_row(&self, i: usize) -> Vec<f64> {
        self.u.row(i - 1).iter().copied().collect()
    }

    /// `Λ_i` for `1 <= i <= N + 1`.
    pub fn lambda_row(&self, i: usize) -> Vec<f64> {
        self.lambda.row(i - 1).iter().copied().collect()
    }

    /// Number of unknowns `n(2N + 2) + mN`.
    pub fn unknown_count(&self) -> usize {
        system_order(self.n_colloc, self.state_dim(), self.control_dim())
    }

    /// Packs `(X_1 .. X_{N+1}, U_1 .. U_N, Λ_1 .. Λ_{N+1})`.
    pub fn pack(&self) -> DVector<f64> {
        let big_n = self.n_colloc;
        let mut v = Vec::with_capacity(self.unknown_count());
        for i in 1..=big_n + 1 {
            v.extend(self.x.row(i).iter());
        }
        for i in 0..big_n {
            v.extend(self.u.row(i).iter());
        }
        for i in 0..=big_n {
            v.extend(self.lambda.row(i).iter());
        }
        DVector::from_vec(v)
    }

    /// Inverse of [`pack`](Self::pack); `X_0` and diagnostics are kept.
    pub fn unpack(&mut self, v: &DVector<f64>) -> Result<()> {
        let (n, m, big_n) = (self.state_dim(), self.control_dim(), self.n_colloc);
        if v.len() != self.unknown_count() {
            return Err(Error::DimensionMismatch {
                what: "packed unknowns",
                expected: self.unknown_count(),
                got: v.len(),
            });
        }
        let mut k = 0;
        for i in 1..=big_n + 1 {
            for c in 0..n {
                self.x[(i, c)] = v[k];
                k += 1;
            }
        }
        for i in 0..big_n {
            for c in 0..m {
                self.u[(i, c)] = v[k];
                k += 1;
            }
        }
        for i in 0..=big_n {
            for c in 0..n {
                self.lambda[(i, c)] = v[k];
                k += 1;
            }
        }
        Ok(())
    }

    /// Value of the state polynomial at `τ`, using `X_0 .. X_N`.
    pub fn state_at(&self, rule: &GaussRule, tau: f64) -> Result<DVector<f64>> {
        interpolate(
            rule,
            &self.x.rows(0, self.n_colloc + 1).into_owned(),
            Basis::State,
            tau,
        )
    }

    /// Value of the costate polynomial at `τ`, using `Λ_1 .. Λ_{N+1}`.
    pub fn costate_at(&self, rule: &GaussRule, tau: f64) -> Result<DVector<f64>> {
        interpolate(rule, &self.lambda, Basis::Costate, tau)
    }
}

/// Order of the square Newton system.
pub fn system_order(n_colloc: usize, n: usize, m: usize) -> usize {
    n * (2 * n_colloc + 2) + m * n_colloc
}

/// Node set of an interpolating polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `τ_0 .. τ_N`
    State,
    /// `τ_1 .. τ_{N+1}`
    Costate,
    /// `τ_1 .. τ_N`, degree `N - 1`; used to move controls between grids.
    Collocation,
}

/// Barycentric evaluation at `τ` of the polynomial through the rows of
/// `nodal_values` (one row per node of `basis`).
pub fn interpolate(
    rule: &GaussRule,
    nodal_values: &DMatrix<f64>,
    basis: Basis,
    tau: f64,
) -> Result<DVector<f64>> {
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("τ = {tau} outside [-1, 1]")));
    }
    let n = rule.n();
    let nodes = match basis {
        Basis::State => &rule.nodes()[..=n],
        Basis::Costate => &rule.nodes()[1..],
        Basis::Collocation => rule.interior(),
    };
    if nodal_values.nrows() != nodes.len() {
        return Err(Error::DimensionMismatch {
            what: "interpolation nodal values",
            expected: nodes.len(),
            got: nodal_values.nrows(),
        });
    }
    let w = match basis {
        Basis::State => state_weights(rule),
        Basis::Costate => costate_weights(rule),
        Basis::Collocation => collocation_weights(rule),
    };
    let out = nodal_values
        .column_iter()
        .map(|col| barycentric_eval(nodes, &w, col.as_slice(), tau));
    Ok(DVector::from_iterator(nodal_values.ncols(), out))
}

/// The five residual blocks, each stored with one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub t1: DMatrix<f64>,
    pub t2: DVector<f64>,
    pub t3: DMatrix<f64>,
    pub t4: DVector<f64>,
    pub t5: DMatrix<f64>,
}

impl ResidualVector {
    pub fn zeros(n_colloc: usize, n: usize, m: usize) -> Self {
        ResidualVector {
            t1: DMatrix::zeros(n_colloc, n),
            t2: DVector::zeros(n),
            t3: DMatrix::zeros(n_colloc, n),
            t4: DVector::zeros(n),
            t5: DMatrix::zeros(n_colloc, m),
        }
    }

    pub fn pack(&self) -> DVector<f64> {
        let mut v = Vec::new();
        for row in self.t1.row_iter() {
            v.extend(row.iter());
        }
        v.extend(self.t2.iter());
        for row in self.t3.row_iter() {
            v.extend(row.iter());
        }
        v.extend(self.t4.iter());
        for row in self.t5.row_iter() {
            v.extend(row.iter());
        }
        DVector::from_vec(v)
    }

    pub fn unpack(n_colloc: usize, n: usize, m: usize, v: &DVector<f64>) -> Result<Self> {
        let expected = system_order(n_colloc, n, m);
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "packed residual",
                expected,
                got: v.len(),
            });
        }
        let mut k = 0;
        let mut take = |len: usize| {
            let s = v.rows(k, len).into_owned();
            k += len;
            s
        };
        let t1 = DMatrix::from_row_slice(n_colloc, n, take(n_colloc * n).as_slice());
        let t2 = take(n);
        let t3 = DMatrix::from_row_slice(n_colloc, n, take(n_colloc * n).as_slice());
        let t4 = take(n);
        let t5 = DMatrix::from_row_slice(n_colloc, m, take(n_colloc * m).as_slice());
        Ok(ResidualVector { t1, t2, t3, t4, t5 })
    }

    /// Max norm over all components.
    pub fn norm_inf(&self) -> f64 {
        [
            self.t1.amax(),
            self.t2.amax(),
            self.t3.amax(),
            self.t4.amax(),
            self.t5.amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Max norm of each block, in order `T1 .. T5`.
    pub fn block_norms(&self) -> [f64; 5] {
        [
            self.t1.amax(),
            self.t2.amax(),
            self.t3.amax(),
            self.t4.amax(),
            self.t5.amax(),
        ]
    }
}

fn check_dims(spec: &ProblemSpec, dm: &DiffMatrices, sol: &DiscreteSolution) -> Result<()> {
    let big_n = dm.n();
    let checks = [
        ("collocation count", big_n, sol.n_colloc),
        ("state rows", big_n + 2, sol.x.nrows()),
        ("state columns", spec.n(), sol.x.ncols()),
        ("control rows", big_n, sol.u.nrows()),
        ("control columns", spec.m(), sol.u.ncols()),
        ("costate rows", big_n + 1, sol.lambda.nrows()),
        ("costate columns", spec.n(), sol.lambda.ncols()),
    ];
    for (what, expected, got) in checks {
        if expected != got {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                got,
            });
        }
    }
    Ok(())
}

fn finite_vec(v: DVector<f64>, callback: &'static str, index: usize) -> Result<DVector<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite { callback, index })
    }
}

fn finite_mat(m: DMatrix<f64>, callback: &'static str, index: usize) -> Result<DMatrix<f64>> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(m)
    } else {
        Err(Error::NonFinite { callback, index })
    }
}

/// Scaled point evaluations at one collocation node.
struct NodeTerms {
    f: DVector<f64>,
    gx: DVector<f64>,
    gu: DVector<f64>,
}

fn node_terms(spec: &ProblemSpec, sol: &DiscreteSolution, i: usize) -> Result<NodeTerms> {
    let s = spec.time_scale();
    let (x, u, l) = (sol.x_row(i), sol.u_row(i), sol.lambda_row(i));
    let f = finite_vec(spec.f(&x, &u) * s, "dynamics", i)?;
    let a = finite_mat(spec.jac_x(&x, &u), "jac_x", i)?;
    let b = finite_mat(spec.jac_u(&x, &u), "jac_u", i)?;
    let lam = DVector::from_vec(l);
    Ok(NodeTerms {
        f,
        gx: a.transpose() * &lam * s,
        gu: b.transpose() * &lam * s,
    })
}

/// `X_0 + Σ ω_j f̃(X_j, U_j)`: the quadrature propagation of the state.
pub fn terminal_state(
    rule: &GaussRule,
    spec: &ProblemSpec,
    sol: &DiscreteSolution,
) -> Result<DVector<f64>> {
    if sol.n_colloc != rule.n() || sol.x.ncols() != spec.n() {
        return Err(Error::DimensionMismatch {
            what: "terminal state inputs",
            expected: rule.n(),
            got: sol.n_colloc,
        });
    }
    let s = spec.time_scale();
    let mut acc = sol.x.row(0).transpose();
    for (j, w) in rule.weights().iter().enumerate() {
        let f = finite_vec(
            spec.f(&sol.x_row(j + 1), &sol.u_row(j + 1)),
            "dynamics",
            j + 1,
        )?;
        acc += f * (w * s);
    }
    Ok(acc)
}

/// Evaluates `T(X, U, Λ)`.
pub fn residual(
    spec: &ProblemSpec,
    dm: &DiffMatrices,
    sol: &DiscreteSolution,
) -> Result<ResidualVector> {
    residual_with(spec, dm, sol, Execution::Sequential)
}

/// [`residual`] with the per-node callback evaluations distributed per `exec`.
pub fn residual_with(
    spec: &ProblemSpec,
    dm: &DiffMatrices,
    sol: &DiscreteSolution,
    exec: Execution,
) -> Result<ResidualVector> {
    check_dims(spec, dm, sol)?;
    let (n, m, big_n) = (spec.n(), spec.m(), dm.n());
    let terms = exec
        .map_range(big_n, |k| node_terms(spec, sol, k + 1))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut r = ResidualVector::zeros(big_n, n, m);
    // Σ_j D_ij X_j over j = 0..N and Σ_j D†_ij Λ_j over j = 1..N+1.
    let dx = dm.d() * sol.x.rows(0, big_n + 1);
    let dl = dm.ddag() * &sol.lambda;
    let w = dm.rule().weights();
    let mut quad = DVector::zeros(n);
    for (k, t) in terms.iter().enumerate() {
        r.t1.set_row(k, &(dx.row(k) - t.f.transpose()));
        r.t3.set_row(k, &(dl.row(k) + t.gx.transpose()));
        r.t5.set_row(k, &t.gu.transpose());
        quad += &t.f * w[k];
    }
    let x0 = sol.x.row(0).transpose();
    let xf = sol.x.row(big_n + 1).transpose();
    r.t2 = &xf - x0 - quad;
    let grad_c = finite_vec(spec.grad_cost(xf.as_slice()), "grad_cost", big_n + 1)?;
    r.t4 = sol.lambda.row(big_n).transpose() - grad_c;
    Ok(r)
}

/// Scaled derivative blocks at one collocation node.
struct NodeBlocks {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    s: DMatrix<f64>,
    r: DMatrix<f64>,
}

fn node_blocks(spec: &ProblemSpec, sol: &DiscreteSolution, i: usize) -> Result<NodeBlocks> {
    let sc = spec.time_scale();
    let (x, u, l) = (sol.x_row(i), sol.u_row(i), sol.lambda_row(i));
    let a = finite_mat(spec.jac_x(&x, &u) * sc, "jac_x", i)?;
    let b = finite_mat(spec.jac_u(&x, &u) * sc, "jac_u", i)?;
    let h = spec.hessian_blocks(&x, &u, &l);
    Ok(NodeBlocks {
        a,
        b,
        q: finite_mat(h.q * sc, "hess_xx", i)?,
        s: finite_mat(h.s * sc, "hess_xu", i)?,
        r: finite_mat(h.r * sc, "hess_uu", i)?,
    })
}

/// Offsets of the unknown and residual blocks in packed vectors.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    m: usize,
    big_n: usize,
}

impl Layout {
    /// Column of `X_j`, `1 <= j <= N + 1`.
    fn x(&self, j: usize) -> usize {
        (j - 1) * self.n
    }
    /// Column of `U_i`, `1 <= i <= N`.
    fn u(&self, i: usize) -> usize {
        (self.big_n + 1) * self.n + (i - 1) * self.m
    }
    /// Column of `Λ_j`, `1 <= j <= N + 1`.
    fn lambda(&self, j: usize) -> usize {
        (self.big_n + 1) * self.n + self.big_n * self.m + (j - 1) * self.n
    }
    fn t1(&self, i: usize) -> usize {
        (i - 1) * self.n
    }
    fn t2(&self) -> usize {
        self.big_n * self.n
    }
    fn t3(&self, i: usize) -> usize {
        (self.big_n + 1) * self.n + (i - 1) * self.n
    }
    fn t4(&self) -> usize {
        (2 * self.big_n + 1) * self.n
    }
    fn t5(&self, i: usize) -> usize {
        (2 * self.big_n + 2) * self.n + (i - 1) * self.m
    }
}

/// Dense Jacobian of [`residual`] with respect to the packed unknowns.
pub fn jacobian(
    spec: &ProblemSpec,
    dm: &DiffMatrices,
    sol: &DiscreteSolution,
) -> Result<DMatrix<f64>> {
    jacobian_with(spec, dm, sol, Execution::Sequential)
}

/// [`jacobian`] with the per-node derivative blocks computed per `exec`.
/// The matrix itself is assembled by a single writer.
pub fn jacobian_with(
    spec: &ProblemSpec,
    dm: &DiffMatrices,
    sol: &DiscreteSolution,
    exec: Execution,
) -> Result<DMatrix<f64>> {
    check_dims(spec, dm, sol)?;
    let (n, m, big_n) = (spec.n(), spec.m(), dm.n());
    let lay = Layout { n, m, big_n };
    let blocks = exec
        .map_range(big_n, |k| node_blocks(spec, sol, k + 1))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let order = system_order(big_n, n, m);
    let mut jac = DMatrix::zeros(order, order);
    let eye = DMatrix::<f64>::identity(n, n);
    let w = dm.rule().weights();
    let d = dm.d();
    let ddag = dm.ddag();

    let mut put = |r: usize, c: usize, block: &DMatrix<f64>, scale: f64| {
        let mut view = jac.view_mut((r, c), (block.nrows(), block.ncols()));
        view += block * scale;
    };

    for i in 1..=big_n {
        let blk = &blocks[i - 1];
        // T1_i: Σ_{j=1..N} D_ij X_j − A_i X_i − B_i U_i
        for j in 1..=big_n {
            put(lay.t1(i), lay.x(j), &eye, d[(i - 1, j)]);
        }
        put(lay.t1(i), lay.x(i), &blk.a, -1.0);
        put(lay.t1(i), lay.u(i), &blk.b, -1.0);

        // T2: −ω_i (A_i X_i + B_i U_i)
        put(lay.t2(), lay.x(i), &blk.a, -w[i - 1]);
        put(lay.t2(), lay.u(i), &blk.b, -w[i - 1]);

        // T3_i: Σ_{j=1..N+1} D†_ij Λ_j + A_iᵀ Λ_i + Q_i X_i + S_i U_i
        for j in 1..=big_n + 1 {
            put(lay.t3(i), lay.lambda(j), &eye, ddag[(i - 1, j - 1)]);
        }
        put(lay.t3(i), lay.lambda(i), &blk.a.transpose(), 1.0);
        put(lay.t3(i), lay.x(i), &blk.q, 1.0);
        put(lay.t3(i), lay.u(i), &blk.s, 1.0);

        // T5_i: S_iᵀ X_i + R_i U_i + B_iᵀ Λ_i
        put(lay.t5(i), lay.x(i), &blk.s.transpose(), 1.0);
        put(lay.t5(i), lay.u(i), &blk.r, 1.0);
        put(lay.t5(i), lay.lambda(i), &blk.b.transpose(), 1.0);
    }
    put(lay.t2(), lay.x(big_n + 1), &eye, 1.0);

    // T4: Λ_{N+1} − ∇²C(X_{N+1}) X_{N+1}
    let xf = sol.x_row(big_n + 1);
    let hess_c = finite_mat(spec.hess_cost(&xf), "hess_cost", big_n + 1)?;
    put(lay.t4(), lay.lambda(big_n + 1), &eye, 1.0);
    put(lay.t4(), lay.x(big_n + 1), &hess_c, -1.0);
    Ok(jac)
}

/// Smallest eigenvalue over the per-node `[[Q, S], [Sᵀ, R]]` blocks and the
/// cost Hessian at `sol`.
pub fn min_hessian_eigenvalue(spec: &ProblemSpec, sol: &DiscreteSolution) -> f64 {
    let (n, m) = (spec.n(), spec.m());
    let mut lo = SymmetricEigen::new(spec.hess_cost(&sol.x_row(sol.n_colloc + 1)))
        .eigenvalues
        .min();
    for i in 1..=sol.n_colloc {
        let h = spec.hessian_blocks(&sol.x_row(i), &sol.u_row(i), &sol.lambda_row(i));
        let mut full = DMatrix::zeros(n + m, n + m);
        full.view_mut((0, 0), (n, n)).copy_from(&h.q);
        full.view_mut((0, n), (n, m)).copy_from(&h.s);
        full.view_mut((n, 0), (m, n)).copy_from(&h.s.transpose());
        full.view_mut((n, n), (m, m)).copy_from(&h.r);
        lo = lo.min(SymmetricEigen::new(full).eigenvalues.min());
    }
    lo
}

/// Discrete costate from raw KKT multipliers: `Λ_i = λ_i / ω_i + λ_{N+1}`
/// for `i <= N` and `Λ_{N+1} = λ_{N+1}`.
pub fn kkt_transform(weights: &[f64], multipliers: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_kkt_inputs(weights, multipliers)?;
    let big_n = weights.len();
    let last = multipliers.row(big_n).into_owned();
    let mut out = multipliers.clone();
    for i in 0..big_n {
        let row = multipliers.row(i) / weights[i] + &last;
        out.set_row(i, &row);
    }
    Ok(out)
}

/// Inverse of [`kkt_transform`]: `λ_i = ω_i (Λ_i − Λ_{N+1})`.
pub fn kkt_inverse(weights: &[f64], costate: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_kkt_inputs(weights, costate)?;
    let big_n = weights.len();
    let last = costate.row(big_n).into_owned();
    let mut out = costate.clone();
    for i in 0..big_n {
        let row = (costate.row(i) - &last) * weights[i];
        out.set_row(i, &row);
    }
    Ok(out)
}

fn check_kkt_inputs(weights: &[f64], rows: &DMatrix<f64>) -> Result<()> {
    if rows.nrows() != weights.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "multiplier rows",
            expected: weights.len() + 1,
            got: rows.nrows(),
        });
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidArgument(
            "quadrature weights must be positive".into(),
        ));
    }
    Ok(())
}
