//! Differentiation matrices for Gauss collocation and numerical
//! certification of their norm properties.
//!
//! `D` is `N x (N+1)`: row `i` belongs to the collocation point `τ_i`
//! (`1 <= i <= N`) and column `j` to the interpolation node `τ_j`
//! (`0 <= j <= N`). `D†` is `N x (N+1)` as well, but its columns run over
//! the nodes `τ_1 .. τ_{N+1}` used by the costate polynomial.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::exec::Execution;
use crate::linalg;
use crate::quadrature::{legendre_eval, GaussRule};
use crate::{Error, Result};

/// Slack allowed above the bounds 2 and √2 before a value is flagged.
pub const CERTIFY_SLACK: f64 = 1e-9;

/// Barycentric weights `w_j = 1 / Π_{k≠j} (τ_j - τ_k)` up to a common factor,
/// for an arbitrary node set.
///
/// Each difference is doubled to keep the products near unit magnitude on
/// `[-1, 1]`; a common scale cancels in every barycentric formula.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &tk)| 2.0 * (nodes[j] - tk))
                .product();
            1.0 / prod
        })
        .collect()
}

/// Closed-form barycentric weights for the Gauss abscissas `τ_1 .. τ_N`,
/// which are the roots of `P_N`: `w_j = 1 / P_N'(τ_j)`.
///
/// These avoid the `O(N)` rounding growth of the product formula.
pub fn collocation_weights(rule: &GaussRule) -> Vec<f64> {
    rule.interior()
        .iter()
        .map(|&t| 1.0 / legendre_eval(rule.n(), t).1)
        .collect()
}

/// Closed-form barycentric weights for `τ_0 .. τ_N`, the roots of
/// `(1 + τ) P_N(τ)`.
pub fn state_weights(rule: &GaussRule) -> Vec<f64> {
    let n = rule.n();
    let mut w = Vec::with_capacity(n + 1);
    w.push(if n.is_multiple_of(2) { 1.0 } else { -1.0 });
    w.extend(
        rule.interior()
            .iter()
            .map(|&t| 1.0 / ((1.0 + t) * legendre_eval(n, t).1)),
    );
    w
}

/// Closed-form barycentric weights for `τ_1 .. τ_{N+1}`, the roots of
/// `(1 - τ) P_N(τ)`.
pub fn costate_weights(rule: &GaussRule) -> Vec<f64> {
    let n = rule.n();
    let mut w: Vec<f64> = rule
        .interior()
        .iter()
        .map(|&t| 1.0 / ((1.0 - t) * legendre_eval(n, t).1))
        .collect();
    w.push(-1.0);
    w
}

/// Evaluates the interpolating polynomial through `(nodes[j], values[j])` at
/// `t` with the second barycentric formula. Returns the nodal value exactly
/// when `t` coincides with a node.
pub fn barycentric_eval(nodes: &[f64], weights: &[f64], values: &[f64], t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&tj, &wj), &vj) in nodes.iter().zip(weights).zip(values) {
        let diff = t - tj;
        if diff == 0.0 {
            return vj;
        }
        let c = wj / diff;
        num += c * vj;
        den += c;
    }
    num / den
}

/// `D_ij = L_j'(τ_i)` for the Lagrange basis on `τ_0 .. τ_N`.
///
/// Off-diagonal entries among the Gauss nodes come from the closed-form
/// barycentric weights and the diagonal from `L_i'(τ_i) = 1 / (1 - τ_i²)`,
/// which holds at the roots of `(1 + τ) P_N`. The column of the endpoint
/// `τ_0` is the negative sum of the rest of its row, so every row sum
/// vanishes up to the rounding of that one sum.
pub fn build_d(rule: &GaussRule) -> DMatrix<f64> {
    let n = rule.n();
    let nodes = rule.nodes();
    let w = state_weights(rule);
    let mut d = DMatrix::zeros(n, n + 1);
    for r in 0..n {
        let i = r + 1;
        let mut sum = 0.0;
        for j in 1..=n {
            let v = if j == i {
                1.0 / ((1.0 - nodes[i]) * (1.0 + nodes[i]))
            } else {
                (w[j] / w[i]) / (nodes[i] - nodes[j])
            };
            d[(r, j)] = v;
            sum += v;
        }
        d[(r, 0)] = -sum;
    }
    d
}

/// `D†_ij = -(ω_j / ω_i) D_ji` for `1 <= i, j <= N` and
/// `D†_{i,N+1} = -Σ_j D†_ij`.
///
/// Column `j - 1` of the result holds node `j`.
pub fn build_ddag(rule: &GaussRule, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rule.n();
    let w = rule.weights();
    let mut out = DMatrix::zeros(n, n + 1);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            // D's column for node j+1 is j+1.
            let v = -(w[j] / w[i]) * d[(j, i + 1)];
            out[(i, j)] = v;
            sum += v;
        }
        out[(i, n)] = -sum;
    }
    out
}

/// Differentiation operators for one Gauss rule.
#[derive(Debug, Clone)]
pub struct DiffMatrices {
    rule: GaussRule,
    d: DMatrix<f64>,
    ddag: DMatrix<f64>,
    bary_state: Vec<f64>,
    bary_costate: Vec<f64>,
}

impl DiffMatrices {
    pub fn new(rule: GaussRule) -> Self {
        let d = build_d(&rule);
        let ddag = build_ddag(&rule, &d);
        let bary_state = state_weights(&rule);
        let bary_costate = costate_weights(&rule);
        DiffMatrices {
            rule,
            d,
            ddag,
            bary_state,
            bary_costate,
        }
    }

    pub fn with_n(n: usize) -> Result<Self> {
        Ok(Self::new(GaussRule::new(n)?))
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    pub fn n(&self) -> usize {
        self.rule.n()
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn ddag(&self) -> &DMatrix<f64> {
        &self.ddag
    }

    /// Barycentric weights for the state nodes `τ_0 .. τ_N`.
    pub fn bary_state(&self) -> &[f64] {
        &self.bary_state
    }

    /// Barycentric weights for the costate nodes `τ_1 .. τ_{N+1}`.
    pub fn bary_costate(&self) -> &[f64] {
        &self.bary_costate
    }

    /// `D_{1:N}`: the trailing `N` columns of `D`.
    pub fn d_interior(&self) -> DMatrix<f64> {
        self.d.columns(1, self.n()).into_owned()
    }

    /// `D†_{1:N}`: the leading `N` columns of `D†`.
    pub fn ddag_interior(&self) -> DMatrix<f64> {
        self.ddag.columns(0, self.n()).into_owned()
    }

    /// Derivative at the collocation points of the polynomial through
    /// `nodal_values[j] = p(τ_j)`, `0 <= j <= N`.
    pub fn differentiate(&self, nodal_values: &[f64]) -> Result<Vec<f64>> {
        if nodal_values.len() != self.n() + 1 {
            return Err(Error::DimensionMismatch {
                what: "nodal values",
                expected: self.n() + 1,
                got: nodal_values.len(),
            });
        }
        let v = DVector::from_column_slice(nodal_values);
        Ok((&self.d * v).iter().copied().collect())
    }

    /// `max |D_{1:N} + J D†_{1:N} J|` where `J` is the exchange matrix.
    pub fn flip_deviation(&self) -> f64 {
        let n = self.n();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let flipped = self.ddag[(n - 1 - i, n - 1 - j)];
                dev = dev.max((self.d[(i, j + 1)] + flipped).abs());
            }
        }
        dev
    }
}

/// `‖D_{1:N}^{-1}‖_∞` from an explicit LU-based inverse.
pub fn p1_norm(dm: &DiffMatrices) -> Result<f64> {
    let inv = linalg::inverse(dm.d_interior(), "D_{1:N}")?;
    Ok(linalg::norm_inf(&inv))
}

/// Largest Euclidean row norm of `[W^{1/2} D_{1:N}]^{-1}` and the 1-based
/// index of the row attaining it.
pub fn p2_norm(dm: &DiffMatrices) -> Result<(f64, usize)> {
    let n = dm.n();
    let w = dm.rule().weights();
    let mut scaled = dm.d_interior();
    for i in 0..n {
        let s = w[i].sqrt();
        scaled.row_mut(i).scale_mut(s);
    }
    let inv = linalg::inverse(scaled, "W^{1/2} D_{1:N}")?;
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, row) in inv.row_iter().enumerate() {
        let norm = row.norm();
        if norm > best.0 {
            best = (norm, i + 1);
        }
    }
    Ok(best)
}

/// `‖D_{1:N}^{-1}‖_∞` for the rule with `n` collocation points.
pub fn check_p1(n: usize) -> Result<f64> {
    p1_norm(&DiffMatrices::with_n(n)?)
}

/// Maximum row norm of `[W^{1/2} D_{1:N}]^{-1}` and its 1-based row index.
pub fn check_p2(n: usize) -> Result<(f64, usize)> {
    p2_norm(&DiffMatrices::with_n(n)?)
}

/// One row of a certification run. Failed factorizations leave NaN in the
/// affected columns and are listed in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationEntry {
    pub n: usize,
    pub p1_norm: f64,
    /// `|‖D_{1:N}^{-1}‖_∞ - (1 + τ_N)|`
    pub p1_gap: f64,
    pub p2_norm: f64,
    pub p2_argmax_row: usize,
    pub flip_max_dev: f64,
    pub flags: Vec<String>,
}

impl CertificationEntry {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub entries: Vec<CertificationEntry>,
}

impl CertificationReport {
    pub fn any_flagged(&self) -> bool {
        self.entries.iter().any(CertificationEntry::flagged)
    }

    /// Whether `p1_norm` never decreases along the entries in the order given.
    /// Recorded only; nothing is asserted about values between samples.
    pub fn p1_nondecreasing(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].p1_norm <= w[1].p1_norm)
    }
}

fn certify_one(n: usize) -> CertificationEntry {
    let mut flags = Vec::new();
    let dm = match DiffMatrices::with_n(n) {
        Ok(dm) => dm,
        Err(e) => {
            return CertificationEntry {
                n,
                p1_norm: f64::NAN,
                p1_gap: f64::NAN,
                p2_norm: f64::NAN,
                p2_argmax_row: 0,
                flip_max_dev: f64::NAN,
                flags: vec![format!("rule: {e}")],
            }
        }
    };
    let tau_n = dm.rule().nodes()[n];
    let (p1, gap) = match p1_norm(&dm) {
        Ok(v) => {
            if v > 2.0 + CERTIFY_SLACK {
                flags.push(format!("P1 norm {v} exceeds 2"));
            }
            (v, (v - (1.0 + tau_n)).abs())
        }
        Err(e) => {
            flags.push(format!("P1: {e}"));
            (f64::NAN, f64::NAN)
        }
    };
    let (p2, row) = match p2_norm(&dm) {
        Ok((v, row)) => {
            if v > std::f64::consts::SQRT_2 + CERTIFY_SLACK {
                flags.push(format!("P2 norm {v} exceeds sqrt(2)"));
            }
            (v, row)
        }
        Err(e) => {
            flags.push(format!("P2: {e}"));
            (f64::NAN, 0)
        }
    };
    CertificationEntry {
        n,
        p1_norm: p1,
        p1_gap: gap,
        p2_norm: p2,
        p2_argmax_row: row,
        flip_max_dev: dm.flip_deviation(),
        flags,
    }
}

/// Evaluates both norm properties and the flip identity for every `N` in
/// `ns`. Entries are independent and run concurrently under
/// [`Execution::Parallel`].
pub fn certify(ns: &[usize], exec: Execution) -> Result<CertificationReport> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument(
            "certify needs at least one N".into(),
        ));
    }
    Ok(CertificationReport {
        entries: exec.map_slice(ns, |&n| certify_one(n)),
    })
}
