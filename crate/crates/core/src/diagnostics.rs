//! Error norms against exact solutions, initial projection, direct-quadrature
//! energies and convergence rates.

use serde::Serialize;
use thiserror::Error;

use crate::basis::{gauss_legendre, legendre_table, BasisError, ReferenceBasis};
use crate::mesh::Mesh1D;
use crate::operator::{DGState, StateLayout};
use crate::problem::{BeamProblem, ScalarFn};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("problem `{0}` has no exact solution")]
    NoExactSolution(String),
    #[error("state layout has {state} elements, mesh has {mesh}")]
    MeshMismatch { state: usize, mesh: usize },
    #[error("N must double between rows: {prev} then {next}")]
    NotDoubling { prev: usize, next: usize },
    #[error(transparent)]
    Basis(#[from] BasisError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub l2_u: f64,
    pub l2_v: f64,
    /// `‖u_xx - u^h_xx‖_{L²}`.
    pub h2_u: f64,
    /// `sqrt(l2_v² + h2_u²)`.
    pub energy: f64,
    pub element_l2_u: Vec<f64>,
    pub element_l2_v: Vec<f64>,
    pub element_h2_u: Vec<f64>,
}

/// Errors of `state` against the exact solution at time `t`, integrated
/// with `q + 6` Gauss points per element.
pub fn error_norms(
    state: &DGState,
    problem: &BeamProblem,
    mesh: &Mesh1D,
    t: f64,
) -> Result<ErrorReport, DiagnosticsError> {
    error_norms_with_points(state, problem, mesh, t, state.layout().q + 6)
}

pub fn error_norms_with_points(
    state: &DGState,
    problem: &BeamProblem,
    mesh: &Mesh1D,
    t: f64,
    points: usize,
) -> Result<ErrorReport, DiagnosticsError> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| DiagnosticsError::NoExactSolution(problem.name.clone()))?;
    let l = state.layout();
    if l.n != mesh.n_elements() {
        return Err(DiagnosticsError::MeshMismatch {
            state: l.n,
            mesh: mesh.n_elements(),
        });
    }
    let quad = gauss_legendre(points)?;
    let mut element_l2_u = Vec::with_capacity(l.n);
    let mut element_l2_v = Vec::with_capacity(l.n);
    let mut element_h2_u = Vec::with_capacity(l.n);
    for j in 0..l.n {
        let (xl, xr) = mesh.element(j);
        let half = 0.5 * (xr - xl);
        let (mut eu, mut ev, mut eh) = (0.0, 0.0, 0.0);
        for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
            let x = xl + (xi + 1.0) * half;
            let ex = exact.derivs(x, t);
            let u = state.eval_u(mesh, j, xi);
            let v = state.eval_v(mesh, j, xi);
            eu += w * half * (ex.u - u[0]).powi(2);
            ev += w * half * (ex.u_t - v[0]).powi(2);
            eh += w * half * (ex.u_xx - u[2]).powi(2);
        }
        element_l2_u.push(eu.sqrt());
        element_l2_v.push(ev.sqrt());
        element_h2_u.push(eh.sqrt());
    }
    let total = |e: &[f64]| e.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (l2_u, l2_v, h2_u) = (
        total(&element_l2_u),
        total(&element_l2_v),
        total(&element_h2_u),
    );
    Ok(ErrorReport {
        l2_u,
        l2_v,
        h2_u,
        energy: l2_v.hypot(h2_u),
        element_l2_u,
        element_l2_v,
        element_h2_u,
    })
}

/// Modal coefficients of the element-wise L² projection of `f` onto degree `p`.
fn project(
    f: &ScalarFn,
    mesh: &Mesh1D,
    j: usize,
    p: usize,
    points: usize,
) -> Result<Vec<f64>, BasisError> {
    let quad = gauss_legendre(points)?;
    let (xl, xr) = mesh.element(j);
    let mut table = vec![[0.0; 4]; p + 1];
    let mut c = vec![0.0; p + 1];
    for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
        let fx = f(xl + 0.5 * (xi + 1.0) * (xr - xl));
        legendre_table(p, xi, &mut table);
        for k in 0..=p {
            c[k] += w * fx * table[k][0];
        }
    }
    for (k, ck) in c.iter_mut().enumerate() {
        *ck /= ReferenceBasis::norm_sq(k);
    }
    Ok(c)
}

/// `g1` projected onto degree `q` and `g2` onto degree `s`, element by element.
pub fn project_initial_data(
    problem: &BeamProblem,
    mesh: &Mesh1D,
    q: usize,
    s: usize,
) -> Result<DGState, DiagnosticsError> {
    let mut state = DGState::zeros(StateLayout::new(mesh.n_elements(), q, s));
    let points = q.max(s) + 6;
    for j in 0..mesh.n_elements() {
        let u = project(&problem.g1, mesh, j, q, points)?;
        state.u_block_mut(j).copy_from_slice(&u);
        let v = project(&problem.g2, mesh, j, s, points)?;
        state.v_block_mut(j).copy_from_slice(&v);
    }
    Ok(state)
}

/// `½ ∫ (μ v² + D u_xx²)` by Gauss quadrature, independent of the assembled `H`.
pub fn quadrature_energy(
    state: &DGState,
    problem: &BeamProblem,
    mesh: &Mesh1D,
) -> Result<f64, DiagnosticsError> {
    let l = state.layout();
    let quad = gauss_legendre(l.q.max(l.s) + 6)?;
    let mut e = 0.0;
    for j in 0..l.n {
        let (xl, xr) = mesh.element(j);
        let half = 0.5 * (xr - xl);
        for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
            let x = xl + (xi + 1.0) * half;
            let u = state.eval_u(mesh, j, xi);
            let v = state.eval_v(mesh, j, xi);
            e += w * half * (problem.mu.value(x) * v[0] * v[0] + problem.d.value(x) * u[2] * u[2]);
        }
    }
    Ok(0.5 * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub error: f64,
    /// `log₂(e_prev / e)`; `None` on the first row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn last_rate(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate)
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }
}

pub fn convergence_rates(errors: &[(usize, f64)]) -> Result<RateTable, DiagnosticsError> {
    let mut rows = Vec::with_capacity(errors.len());
    for (i, &(n, error)) in errors.iter().enumerate() {
        let rate = if i == 0 {
            None
        } else {
            let (prev_n, prev_e) = errors[i - 1];
            if n != 2 * prev_n {
                return Err(DiagnosticsError::NotDoubling {
                    prev: prev_n,
                    next: n,
                });
            }
            Some((prev_e / error).log2())
        };
        rows.push(RateRow { n, error, rate });
    }
    Ok(RateTable { rows })
}
