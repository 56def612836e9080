//! Legendre-Gauss quadrature.
//!
//! Nodes are the roots of the Legendre polynomial `P_N`, found by Newton
//! iteration from Chebyshev-angle seeds. Only the positive half is computed;
//! the negative half is its mirror image so that node and weight symmetry
//! hold exactly.

use serde::Serialize;

use crate::{Error, Result};

const MAX_NEWTON_ITERATIONS: usize = 100;

/// Value and first derivative of the Legendre polynomial of the given degree.
///
/// Uses the three-term recurrence
/// `(k+1) P_{k+1} = (2k+1) t P_k - k P_{k-1}` together with the matching
/// recurrence for the derivative, which stays finite at `t = ±1`.
pub fn legendre_eval(degree: usize, t: f64) -> (f64, f64) {
    match degree {
        0 => (1.0, 0.0),
        1 => (t, 1.0),
        _ => {
            let (mut p_prev, mut p) = (1.0, t);
            let (mut dp_prev, mut dp) = (0.0, 1.0);
            for k in 1..degree {
                let kf = k as f64;
                let p_next = ((2.0 * kf + 1.0) * t * p - kf * p_prev) / (kf + 1.0);
                // P'_{k+1} = P'_{k-1} + (2k+1) P_k
                let dp_next = dp_prev + (2.0 * kf + 1.0) * p;
                p_prev = p;
                p = p_next;
                dp_prev = dp;
                dp = dp_next;
            }
            (p, dp)
        }
    }
}

/// Legendre-Gauss collocation rule with the two noncollocated endpoints.
///
/// `nodes` has length `N + 2`: `nodes[0] = -1`, `nodes[1..=N]` are the Gauss
/// abscissas in increasing order and `nodes[N + 1] = 1`. `weights[i - 1]` is
/// the quadrature weight attached to `nodes[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussRule {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the rule with `n` collocation points.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "number of collocation points must be at least 1".into(),
            ));
        }

        let mut nodes = vec![0.0; n + 2];
        let mut weights = vec![0.0; n];
        nodes[0] = -1.0;
        nodes[n + 1] = 1.0;

        let half = n.div_ceil(2);
        for i in 1..=half {
            let (root, dp) = if n % 2 == 1 && i == half {
                (0.0, legendre_eval(n, 0.0).1)
            } else {
                newton_root(n, i)?
            };
            let w = 2.0 / ((1.0 - root) * (1.0 + root) * dp * dp);
            // Seed i converges to the i-th largest root.
            let hi = n + 1 - i;
            let lo = i;
            nodes[lo] = -root;
            nodes[hi] = root;
            weights[hi - 1] = w;
            weights[lo - 1] = w;
        }

        Ok(GaussRule { n, nodes, weights })
    }

    /// Number of collocation points `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// All `N + 2` nodes including the endpoints.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// The `N` Gauss abscissas.
    pub fn interior(&self) -> &[f64] {
        &self.nodes[1..=self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Gauss quadrature of samples taken at the interior nodes.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "quadrature samples",
                expected: self.n,
                got: samples.len(),
            });
        }
        Ok(self.weights.iter().zip(samples).map(|(w, s)| w * s).sum())
    }

    /// Quadrature of a function evaluated at the interior nodes.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.weights
            .iter()
            .zip(self.interior())
            .map(|(w, &t)| w * f(t))
            .sum()
    }
}

/// Newton iteration for the `i`-th largest root of `P_n`, returning the root
/// and `P_n'` evaluated there.
fn newton_root(n: usize, i: usize) -> Result<(f64, f64)> {
    let nf = n as f64;
    let mut x = (std::f64::consts::PI * (4.0 * i as f64 - 1.0) / (4.0 * nf + 2.0)).cos();
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (p, dp) = legendre_eval(n, x);
        let dx = p / dp;
        x -= dx;
        if dx.abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || p == 0.0 {
            let (_, dp) = legendre_eval(n, x);
            return Ok((x, dp));
        }
    }
    Err(Error::RootFinding {
        degree: n,
        index: i,
    })
}
