//! Semi-discrete energy-based DG operator: `y' = A y + F(t)` together with
//! the energy matrix `H` such that `E^h = ½ yᵀ H y`.
//!
//! On each element the displacement rate is determined by testing with
//! `D φ_xx (·)_xx` for `φ = P_2..P_q` plus two rows fixing the mean of
//! `u_t` and of `u_tx`; the velocity rate comes from the `μ`-weighted mass
//! matrix. Interface and boundary fluxes couple neighbouring elements.

mod element;
mod oracle;
mod state;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::basis::{gauss_legendre, BasisError, QuadratureRule};
use crate::fluxes::{
    boundary_energy_rate, boundary_flux, interface_energy_flux, interface_flux, BoundaryEnd,
    FluxError, FluxSpec, InterfaceFlux, LinearForm, Trace, TraceData,
};
use crate::linalg::{BandedMatrix, DenseMatrix, LinalgError};
use crate::mesh::Mesh1D;
use crate::problem::{BeamProblem, SpaceTimeFn};

use element::{ElementOperator, LocalSystem, LEFT, RIGHT};
pub use oracle::probe_assembly_oracle;
pub use state::{DGState, StateLayout};

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("need q >= 2 and 0 <= s <= q, got q = {q}, s = {s}")]
    InvalidDegrees { q: usize, s: usize },
    #[error("mesh does not match the problem interval")]
    MeshMismatch,
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("singular local displacement matrix on element {element}: {source}")]
    SingularDisplacement { element: usize, source: LinalgError },
    #[error("singular local mass matrix on element {element}: {source}")]
    SingularMass { element: usize, source: LinalgError },
    #[error("state has length {got}, layout expects {expected}")]
    StateLength { expected: usize, got: usize },
}

/// Problem, mesh, degrees and fluxes with all per-element matrices.
pub struct Discretization {
    pub problem: BeamProblem,
    pub mesh: Mesh1D,
    pub spec: FluxSpec,
    layout: StateLayout,
    quad: QuadratureRule,
    elements: Vec<ElementOperator>,
}

impl Discretization {
    pub fn new(
        problem: BeamProblem,
        mesh: Mesh1D,
        q: usize,
        s: usize,
        spec: FluxSpec,
    ) -> Result<Self, OperatorError> {
        if q < 2 || s > q {
            return Err(OperatorError::InvalidDegrees { q, s });
        }
        let tol = 1e-12 * (problem.b - problem.a).abs().max(1.0);
        if (mesh.left() - problem.a).abs() > tol || (mesh.right() - problem.b).abs() > tol {
            return Err(OperatorError::MeshMismatch);
        }
        spec.validate()?;
        spec.validate_boundaries(problem.bc_left, problem.bc_right)?;
        let quad = gauss_legendre(q.max(s) + 4)?;
        let elements = (0..mesh.n_elements())
            .into_par_iter()
            .map(|j| {
                let (xl, xr) = mesh.element(j);
                ElementOperator::build(&problem, xl, xr, q, s, &quad).map_err(|(kind, source)| {
                    match kind {
                        LocalSystem::Displacement => {
                            OperatorError::SingularDisplacement { element: j, source }
                        }
                        LocalSystem::Mass => OperatorError::SingularMass { element: j, source },
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let layout = StateLayout::new(mesh.n_elements(), q, s);
        Ok(Self {
            problem,
            mesh,
            spec,
            layout,
            quad,
            elements,
        })
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn n_elements(&self) -> usize {
        self.layout.n
    }

    /// `‖·‖₁` condition number of the local displacement matrix of element `j`.
    pub fn displacement_condition(&self, j: usize) -> f64 {
        self.elements[j].displacement_condition()
    }

    /// One-sided traces `[left end, right end]` of every element.
    pub fn traces(&self, y: &[f64]) -> Vec<[Trace<f64>; 2]> {
        let l = self.layout;
        self.elements
            .iter()
            .enumerate()
            .map(|(j, el)| {
                let u = &y[l.u_range(j)];
                let v = &y[l.v_range(j)];
                [el.ends[LEFT].trace(u, v), el.ends[RIGHT].trace(u, v)]
            })
            .collect()
    }

    /// Fluxes at the `n + 1` vertices, boundary ends included.
    pub fn fluxes(&self, y: &[f64]) -> Vec<InterfaceFlux<f64>> {
        let traces = self.traces(y);
        self.fluxes_from_traces(&traces)
    }

    pub(crate) fn fluxes_from_traces(&self, traces: &[[Trace<f64>; 2]]) -> Vec<InterfaceFlux<f64>> {
        let n = self.layout.n;
        let (eta1, eta2) = (self.spec.eta1, self.spec.eta2);
        let mut out = Vec::with_capacity(n + 1);
        out.push(boundary_flux(
            BoundaryEnd::Left,
            self.problem.bc_left,
            eta1,
            eta2,
            &traces[0][LEFT],
        ));
        for i in 1..n {
            let tr = TraceData {
                minus: traces[i - 1][RIGHT],
                plus: traces[i][LEFT],
            };
            out.push(interface_flux(&self.spec, &tr));
        }
        out.push(boundary_flux(
            BoundaryEnd::Right,
            self.problem.bc_right,
            eta1,
            eta2,
            &traces[n - 1][RIGHT],
        ));
        out
    }

    /// `u_t` coefficients on element `j` from its `v` coefficients and the
    /// velocity fluxes at its two ends.
    pub fn local_displacement_solve(
        &self,
        j: usize,
        v: &[f64],
        left: &InterfaceFlux<f64>,
        right: &InterfaceFlux<f64>,
    ) -> Result<Vec<f64>, OperatorError> {
        let el = &self.elements[j];
        let rhs = el.displacement_rhs(v, left, right);
        el.disp_lu
            .solve(&rhs)
            .map_err(|source| OperatorError::SingularDisplacement { element: j, source })
    }

    /// `v_t` coefficients on element `j` from its `u` coefficients, the
    /// moment/shear fluxes at its ends and the load at time `t`.
    pub fn local_velocity_solve(
        &self,
        j: usize,
        u: &[f64],
        left: &InterfaceFlux<f64>,
        right: &InterfaceFlux<f64>,
        t: f64,
    ) -> Result<Vec<f64>, OperatorError> {
        let el = &self.elements[j];
        let rhs = el.velocity_rhs(u, left, right);
        let mut vt = el
            .mass_lu
            .solve(&rhs)
            .map_err(|source| OperatorError::SingularMass { element: j, source })?;
        if let Some(f) = &self.problem.forcing {
            let samples: Vec<f64> = el.quad_points.iter().map(|&x| f(x, t)).collect();
            for (o, l) in vt.iter_mut().zip(el.load_map.matvec(&samples)) {
                *o += l;
            }
        }
        Ok(vt)
    }

    /// Matrix-free `A y + F(t)` through the local solves.
    pub fn rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let l = self.layout;
        if y.len() != l.len() {
            return Err(OperatorError::StateLength {
                expected: l.len(),
                got: y.len(),
            });
        }
        let fluxes = self.fluxes(y);
        let mut out = vec![0.0; l.len()];
        for j in 0..l.n {
            let ut =
                self.local_displacement_solve(j, &y[l.v_range(j)], &fluxes[j], &fluxes[j + 1])?;
            out[l.u_range(j)].copy_from_slice(&ut);
            let vt =
                self.local_velocity_solve(j, &y[l.u_range(j)], &fluxes[j], &fluxes[j + 1], t)?;
            out[l.v_range(j)].copy_from_slice(&vt);
        }
        Ok(out)
    }

    /// Energy rate predicted by the flux terms alone:
    /// `∫ v f - Σ interface penalties + boundary contributions`.
    pub fn flux_energy_rate(&self, y: &[f64], t: f64) -> f64 {
        let traces = self.traces(y);
        let n = self.layout.n;
        let mut rate = 0.0;
        for i in 1..n {
            let tr = TraceData {
                minus: traces[i - 1][RIGHT],
                plus: traces[i][LEFT],
            };
            rate += interface_energy_flux(&self.spec, &tr);
        }
        let (eta1, eta2) = (self.spec.eta1, self.spec.eta2);
        rate += boundary_energy_rate(self.problem.bc_left, eta1, eta2, &traces[0][LEFT]);
        rate += boundary_energy_rate(self.problem.bc_right, eta1, eta2, &traces[n - 1][RIGHT]);
        if let Some(f) = &self.problem.forcing {
            let l = self.layout;
            for j in 0..n {
                let v = &y[l.v_range(j)];
                let (xl, xr) = self.mesh.element(j);
                let h = xr - xl;
                rate += self.quad.integrate(|xi| {
                    let x = xl + 0.5 * (xi + 1.0) * h;
                    let vh = state::eval_modal(v, 2.0 / h, xi)[0];
                    0.5 * h * vh * f(x, t)
                });
            }
        }
        rate
    }

    fn trace_forms(&self, j: usize, end: usize) -> Trace<LinearForm> {
        let l = self.layout;
        let w = &self.elements[j].ends[end];
        let v_form = |weights: &[f64]| {
            LinearForm(
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| (l.v_index(j, k), c))
                    .collect(),
            )
        };
        let u_form = |weights: &[f64]| {
            LinearForm(
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| (l.u_index(j, k), c))
                    .collect(),
            )
        };
        Trace {
            v: v_form(&w.v),
            v_x: v_form(&w.v_x),
            moment: u_form(&w.moment),
            shear: u_form(&w.shear),
        }
    }

    fn flux_forms(&self) -> Vec<InterfaceFlux<LinearForm>> {
        let n = self.layout.n;
        let (eta1, eta2) = (self.spec.eta1, self.spec.eta2);
        let mut out = Vec::with_capacity(n + 1);
        out.push(boundary_flux(
            BoundaryEnd::Left,
            self.problem.bc_left,
            eta1,
            eta2,
            &self.trace_forms(0, LEFT),
        ));
        for i in 1..n {
            let tr = TraceData {
                minus: self.trace_forms(i - 1, RIGHT),
                plus: self.trace_forms(i, LEFT),
            };
            out.push(interface_flux(&self.spec, &tr));
        }
        out.push(boundary_flux(
            BoundaryEnd::Right,
            self.problem.bc_right,
            eta1,
            eta2,
            &self.trace_forms(n - 1, RIGHT),
        ));
        out
    }

    /// Assembles `A`, `H` and the load operator.
    pub fn assemble(&self) -> Result<SemiDiscreteSystem, OperatorError> {
        let l = self.layout;
        let dim = l.len();
        let fluxes = self.flux_forms();

        let blocks: Vec<(Vec<(usize, Vec<(usize, f64)>)>, usize)> = (0..l.n)
            .into_par_iter()
            .map(|j| {
                self.element_rows(j, &fluxes[j], &fluxes[j + 1])
                    .map(|rows| (rows, j))
            })
            .collect::<Result<_, _>>()?;

        let mut a = DenseMatrix::zeros(dim, dim);
        for (rows, _) in blocks {
            for (r, entries) in rows {
                let row = a.row_mut(r);
                for (c, v) in entries {
                    row[c] += v;
                }
            }
        }

        let energy = EnergyMatrix {
            layout: l,
            u_blocks: self.elements.iter().map(|e| e.energy_u.clone()).collect(),
            v_blocks: self.elements.iter().map(|e| e.mass.clone()).collect(),
        };
        let load = self.problem.forcing.as_ref().map(|f| LoadOperator {
            layout: l,
            forcing: f.clone(),
            points: self
                .elements
                .iter()
                .map(|e| e.quad_points.clone())
                .collect(),
            maps: self.elements.iter().map(|e| e.load_map.clone()).collect(),
        });
        Ok(SemiDiscreteSystem::new(l, a, energy, load))
    }

    /// Rows of `A` owned by element `j`, as `(global row, [(global col, value)])`.
    #[allow(clippy::type_complexity)]
    fn element_rows(
        &self,
        j: usize,
        left: &InterfaceFlux<LinearForm>,
        right: &InterfaceFlux<LinearForm>,
    ) -> Result<Vec<(usize, Vec<(usize, f64)>)>, OperatorError> {
        let l = self.layout;
        let el = &self.elements[j];
        let (q, s) = (l.q, l.s);
        let fl = [left, right];

        // Displacement rows as linear forms.
        let mut disp: Vec<LinearForm> = (0..=q)
            .map(|i| {
                LinearForm(
                    (0..=s)
                        .map(|k| (l.v_index(j, k), el.disp_volume[(i, k)]))
                        .collect(),
                )
            })
            .collect();
        for e in [LEFT, RIGHT] {
            let sign = if e == RIGHT { 1.0 } else { -1.0 };
            let own = self.trace_forms(j, e);
            for (i, row) in disp.iter_mut().enumerate().skip(2) {
                let term = (own.v.clone() - fl[e].v.clone()) * (sign * el.disp_shear_test[e][i])
                    + (fl[e].v_x.clone() - own.v_x.clone()) * (sign * el.disp_moment_test[e][i]);
                row.0.extend(term.0);
            }
        }

        // Velocity rows.
        let mut vel: Vec<LinearForm> = (0..=s)
            .map(|i| {
                LinearForm(
                    (0..=q)
                        .map(|k| (l.u_index(j, k), -el.stiffness_vu[(i, k)]))
                        .collect(),
                )
            })
            .collect();
        for e in [LEFT, RIGHT] {
            let sign = if e == RIGHT { 1.0 } else { -1.0 };
            for (i, row) in vel.iter_mut().enumerate() {
                let term = fl[e].shear.clone() * (-sign * el.psi[e][i])
                    + fl[e].moment.clone() * (sign * el.psi_x[e][i]);
                row.0.extend(term.0);
            }
        }

        let mut out = Vec::with_capacity(q + s + 2);
        let solved_u = solve_forms(&disp, |b| el.disp_lu.solve(b))
            .map_err(|source| OperatorError::SingularDisplacement { element: j, source })?;
        for (i, entries) in solved_u.into_iter().enumerate() {
            out.push((l.u_index(j, i), entries));
        }
        let solved_v = solve_forms(&vel, |b| el.mass_lu.solve(b))
            .map_err(|source| OperatorError::SingularMass { element: j, source })?;
        for (i, entries) in solved_v.into_iter().enumerate() {
            out.push((l.v_index(j, i), entries));
        }
        Ok(out)
    }
}

/// Applies a local inverse to a stack of linear forms: gathers the touched
/// global columns, solves once per column, and returns sparse rows.
fn solve_forms(
    rows: &[LinearForm],
    solve: impl Fn(&[f64]) -> Result<Vec<f64>, LinalgError>,
) -> Result<Vec<Vec<(usize, f64)>>, LinalgError> {
    let mut columns: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        for &(c, v) in &row.0 {
            columns.entry(c).or_insert_with(|| vec![0.0; rows.len()])[i] += v;
        }
    }
    let mut out = vec![Vec::with_capacity(columns.len()); rows.len()];
    for (c, col) in columns {
        let x = solve(&col)?;
        for (i, xi) in x.into_iter().enumerate() {
            if xi != 0.0 {
                out[i].push((c, xi));
            }
        }
    }
    Ok(out)
}

/// Block-diagonal energy matrix `H`.
#[derive(Debug, Clone)]
pub struct EnergyMatrix {
    layout: StateLayout,
    u_blocks: Vec<DenseMatrix>,
    v_blocks: Vec<DenseMatrix>,
}

impl EnergyMatrix {
    /// `yᵀ H x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        let l = self.layout;
        let mut acc = 0.0;
        for j in 0..l.n {
            let (ur, vr) = (l.u_range(j), l.v_range(j));
            acc += crate::linalg::dot(&y[ur.clone()], &self.u_blocks[j].matvec(&x[ur]));
            acc += crate::linalg::dot(&y[vr.clone()], &self.v_blocks[j].matvec(&x[vr]));
        }
        acc
    }

    pub fn quadratic(&self, y: &[f64]) -> f64 {
        self.bilinear(y, y)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let l = self.layout;
        let mut h = DenseMatrix::zeros(l.len(), l.len());
        for j in 0..l.n {
            for (range, block) in [
                (l.u_range(j), &self.u_blocks[j]),
                (l.v_range(j), &self.v_blocks[j]),
            ] {
                for (a, r) in range.clone().enumerate() {
                    for (b, c) in range.clone().enumerate() {
                        h[(r, c)] = block[(a, b)];
                    }
                }
            }
        }
        h
    }
}

/// `F(t)`: forcing projected onto the velocity space; zero in the displacement rows.
#[derive(Clone)]
pub struct LoadOperator {
    layout: StateLayout,
    forcing: SpaceTimeFn,
    points: Vec<Vec<f64>>,
    maps: Vec<DenseMatrix>,
}

impl LoadOperator {
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        out.fill(0.0);
        let l = self.layout;
        let mut samples = Vec::new();
        for j in 0..l.n {
            samples.clear();
            samples.extend(self.points[j].iter().map(|&x| (self.forcing)(x, t)));
            self.maps[j].matvec_into(&samples, &mut out[l.v_range(j)]);
        }
    }
}

/// `y' = A y + F(t)` with its energy matrix.
///
/// Besides the dense `A` in the global layout, keeps `A` reordered element by
/// element, where it is block tridiagonal, for banded products and solves.
#[derive(Clone)]
pub struct SemiDiscreteSystem {
    pub layout: StateLayout,
    pub a: DenseMatrix,
    pub energy: EnergyMatrix,
    pub load: Option<LoadOperator>,
    element_order: Vec<usize>,
    banded: BandedMatrix,
}

impl SemiDiscreteSystem {
    pub fn new(
        layout: StateLayout,
        a: DenseMatrix,
        energy: EnergyMatrix,
        load: Option<LoadOperator>,
    ) -> Self {
        let element_order: Vec<usize> = (0..layout.n)
            .flat_map(|j| layout.u_range(j).chain(layout.v_range(j)))
            .collect();
        let dim = layout.len();
        let reordered =
            DenseMatrix::from_fn(dim, dim, |r, c| a[(element_order[r], element_order[c])]);
        let banded = BandedMatrix::from_dense(&reordered);
        Self {
            layout,
            a,
            energy,
            load,
            element_order,
            banded,
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// `A` in element-major order: `u` then `v` coefficients of element 0, then element 1, ...
    pub fn banded(&self) -> &BandedMatrix {
        &self.banded
    }

    /// `element_order()[r]` is the global index of element-major position `r`.
    pub fn element_order(&self) -> &[usize] {
        &self.element_order
    }

    pub fn to_element_order(&self, y: &[f64]) -> Vec<f64> {
        self.element_order.iter().map(|&g| y[g]).collect()
    }

    pub fn from_element_order(&self, z: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; z.len()];
        for (&g, &v) in self.element_order.iter().zip(z) {
            y[g] = v;
        }
        y
    }

    pub fn load_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        if let Some(load) = &self.load {
            load.eval_into(t, &mut out);
        }
        out
    }

    /// `A y + F(t)`.
    pub fn apply(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let z = self.banded.matvec(&self.to_element_order(y));
        let mut out = self.from_element_order(&z);
        if let Some(load) = &self.load {
            let mut f = vec![0.0; self.dim()];
            load.eval_into(t, &mut f);
            for (o, fi) in out.iter_mut().zip(f) {
                *o += fi;
            }
        }
        out
    }
}

/// `½ yᵀ H y`.
pub fn discrete_energy(system: &SemiDiscreteSystem, y: &[f64]) -> f64 {
    0.5 * system.energy.quadratic(y)
}

/// Convenience wrapper around [`Discretization::assemble`].
pub fn assemble(
    problem: BeamProblem,
    mesh: Mesh1D,
    q: usize,
    s: usize,
    spec: FluxSpec,
) -> Result<(Discretization, SemiDiscreteSystem), OperatorError> {
    let disc = Discretization::new(problem, mesh, q, s, spec)?;
    let sys = disc.assemble()?;
    Ok((disc, sys))
}
