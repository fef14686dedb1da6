//! Legendre modal basis on the reference element `[-1, 1]`, Gauss-Legendre
//! quadrature and right-endpoint Gauss-Radau nodes.

use thiserror::Error;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITERS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum BasisError {
    #[error("quadrature needs at least one point")]
    EmptyRule,
    #[error("Newton iteration for node {index} of a {points}-point rule did not converge")]
    NoConvergence { points: usize, index: usize },
}

/// `P_k(x)` by the three-term recurrence.
pub fn legendre_eval(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return p0;
    }
    for n in 1..k {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * x * p1 - nf * p0) / (nf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `order`-th derivative of `P_k` at `x`; `order == 0` returns the value.
///
/// Uses `P^{(r)}_{k+1} = P^{(r)}_{k-1} + (2k+1) P^{(r-1)}_k`, which stays
/// well behaved at the endpoints where the usual closed forms divide by
/// `1 - x^2`.
pub fn legendre_deriv(k: usize, order: usize, x: f64) -> f64 {
    let mut table = vec![[0.0; 4]; k + 1];
    assert!(
        order <= 3,
        "derivatives above third order are not tabulated"
    );
    legendre_table(k, x, &mut table);
    table[k][order]
}

/// Fills `out[k][r]` with the `r`-th derivative of `P_k(x)` for `k <= degree`
/// and `r <= 3`.
pub fn legendre_table(degree: usize, x: f64, out: &mut [[f64; 4]]) {
    debug_assert!(out.len() > degree);
    out[0] = [1.0, 0.0, 0.0, 0.0];
    if degree == 0 {
        return;
    }
    out[1] = [x, 1.0, 0.0, 0.0];
    for n in 1..degree {
        let nf = n as f64;
        let mut next = [0.0; 4];
        next[0] = ((2.0 * nf + 1.0) * x * out[n][0] - nf * out[n - 1][0]) / (nf + 1.0);
        for r in 1..4 {
            next[r] = out[n - 1][r] + (2.0 * nf + 1.0) * out[n][r - 1];
        }
        out[n + 1] = next;
    }
}

/// Legendre polynomials `P_0 .. P_degree` on the reference element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceBasis {
    pub degree: usize,
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values and first three derivatives of every basis function at `xi`.
    pub fn tabulate(&self, xi: f64) -> Vec<[f64; 4]> {
        let mut out = vec![[0.0; 4]; self.len()];
        legendre_table(self.degree, xi, &mut out);
        out
    }

    /// `∫ P_k^2 dξ = 2 / (2k + 1)`.
    pub fn norm_sq(k: usize) -> f64 {
        2.0 / (2.0 * k as f64 + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral over the reference element.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integral over `[a, b]` via the affine map from `[-1, 1]`.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.integrate(|xi| f(mid + half * xi))
    }
}

/// Gauss-Legendre rule with `n` points.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule, BasisError> {
    if n == 0 {
        return Err(BasisError::EmptyRule);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots are symmetric; solve for the upper half and mirror.
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(BasisError::NoConvergence {
                points: n,
                index: i,
            });
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut table = vec![[0.0; 4]; n + 1];
    legendre_table(n, x, &mut table);
    (table[n][0], table[n][1])
}

/// Right-endpoint Gauss-Radau nodes scaled to `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadauNodes {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadauNodes {
    pub fn m(&self) -> usize {
        self.nodes.len()
    }
}

/// `m` right Radau nodes on `(0, 1]`, the last equal to 1.
///
/// Interior nodes are the roots of `P_m - P_{m-1}` other than `x = 1`, found
/// by Newton on the deflated polynomial starting from Chebyshev-Radau points
/// `cos(2πi / (2m - 1))`.
pub fn gauss_radau_right(m: usize) -> Result<RadauNodes, BasisError> {
    if m == 0 {
        return Err(BasisError::EmptyRule);
    }
    let mf = m as f64;
    let mut xs = Vec::with_capacity(m);
    for i in 1..m {
        let mut x = (2.0 * std::f64::consts::PI * i as f64 / (2.0 * mf - 1.0)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let (pm, dpm) = legendre_with_deriv(m, x);
            let (pm1, dpm1) = legendre_with_deriv(m - 1, x);
            let f = pm - pm1;
            let df = dpm - dpm1;
            // Newton on g = f / (x - 1).
            let dx = f * (x - 1.0) / (df * (x - 1.0) - f);
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(BasisError::NoConvergence {
                points: m,
                index: i,
            });
        }
        xs.push(x);
    }
    xs.sort_by(f64::total_cmp);
    let mut weights: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let p = legendre_eval(m - 1, x);
            (1.0 + x) / (mf * mf * p * p)
        })
        .collect();
    xs.push(1.0);
    weights.push(2.0 / (mf * mf));

    Ok(RadauNodes {
        nodes: xs.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
    })
}
