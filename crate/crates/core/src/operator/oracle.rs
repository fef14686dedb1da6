//! Probing oracle: builds `A` column by column by applying the numeric
//! flux functions and the two local solves to unit coefficient vectors.
//! Intended for desk-scale problems in tests.

use crate::basis::legendre_deriv;
use crate::fluxes::{boundary_flux, interface_flux, BoundaryEnd, FluxSpec, Trace, TraceData};
use crate::linalg::DenseMatrix;
use crate::mesh::Mesh1D;
use crate::problem::BeamProblem;

use super::{Discretization, OperatorError};

/// Trace of the element-`j` polynomials at reference end `xi = ±1`,
/// evaluated straight from the Legendre derivatives and the coefficient `D`.
fn probe_trace(disc: &Discretization, y: &[f64], j: usize, xi: f64) -> Trace<f64> {
    let l = disc.layout();
    let (xl, xr) = disc.mesh.element(j);
    let x = if xi < 0.0 { xl } else { xr };
    let jac = 2.0 / (xr - xl);
    let d = disc.problem.d.value(x);
    let dx = disc.problem.d.dx(x);
    let mut tr = Trace::default();
    for k in 0..=l.s {
        let c = y[l.v_index(j, k)];
        tr.v += c * legendre_deriv(k, 0, xi);
        tr.v_x += c * jac * legendre_deriv(k, 1, xi);
    }
    let (mut uxx, mut uxxx) = (0.0, 0.0);
    for k in 0..=l.q {
        let c = y[l.u_index(j, k)];
        uxx += c * jac * jac * legendre_deriv(k, 2, xi);
        uxxx += c * jac * jac * jac * legendre_deriv(k, 3, xi);
    }
    tr.moment = d * uxx;
    tr.shear = dx * uxx + d * uxxx;
    tr
}

fn probe_apply(disc: &Discretization, y: &[f64]) -> Result<Vec<f64>, OperatorError> {
    let l = disc.layout();
    let spec = &disc.spec;
    let n = l.n;
    let mut fluxes = Vec::with_capacity(n + 1);
    fluxes.push(boundary_flux(
        BoundaryEnd::Left,
        disc.problem.bc_left,
        spec.eta1,
        spec.eta2,
        &probe_trace(disc, y, 0, -1.0),
    ));
    for i in 1..n {
        let tr = TraceData {
            minus: probe_trace(disc, y, i - 1, 1.0),
            plus: probe_trace(disc, y, i, -1.0),
        };
        fluxes.push(interface_flux(spec, &tr));
    }
    fluxes.push(boundary_flux(
        BoundaryEnd::Right,
        disc.problem.bc_right,
        spec.eta1,
        spec.eta2,
        &probe_trace(disc, y, n - 1, 1.0),
    ));

    let mut out = vec![0.0; l.len()];
    for j in 0..n {
        let ut = disc.local_displacement_solve(j, &y[l.v_range(j)], &fluxes[j], &fluxes[j + 1])?;
        out[l.u_range(j)].copy_from_slice(&ut);
        let el = &disc.elements[j];
        let rhs = el.velocity_rhs(&y[l.u_range(j)], &fluxes[j], &fluxes[j + 1]);
        let vt = el
            .mass_lu
            .solve(&rhs)
            .map_err(|source| OperatorError::SingularMass { element: j, source })?;
        out[l.v_range(j)].copy_from_slice(&vt);
    }
    Ok(out)
}

/// `A` assembled by probing: column `c` is the homogeneous operator applied
/// to the `c`-th unit vector.
pub fn probe_assembly_oracle(
    problem: BeamProblem,
    mesh: Mesh1D,
    q: usize,
    s: usize,
    spec: FluxSpec,
) -> Result<DenseMatrix, OperatorError> {
    let disc = Discretization::new(problem, mesh, q, s, spec)?;
    let dim = disc.layout().len();
    let mut a = DenseMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for c in 0..dim {
        e[c] = 1.0;
        let col = probe_apply(&disc, &e)?;
        e[c] = 0.0;
        for (r, v) in col.into_iter().enumerate() {
            a[(r, c)] = v;
        }
    }
    Ok(a)
}
