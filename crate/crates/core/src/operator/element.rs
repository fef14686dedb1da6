//! Per-element matrices for the two local solves.

use crate::basis::{legendre_table, QuadratureRule};
use crate::fluxes::{InterfaceFlux, Trace};
use crate::linalg::{dot, lu_factor, DenseMatrix, LinalgError, LuFactors};
use crate::problem::BeamProblem;

/// Basis weights producing one-sided traces at an element end:
/// `v = v·d`, `v_x = v_x·d`, `Du_xx = moment·c`, `(Du_xx)_x = shear·c`.
#[derive(Debug, Clone)]
pub(crate) struct EndWeights {
    pub v: Vec<f64>,
    pub v_x: Vec<f64>,
    pub moment: Vec<f64>,
    pub shear: Vec<f64>,
}

impl EndWeights {
    pub fn trace(&self, u: &[f64], v: &[f64]) -> Trace<f64> {
        Trace {
            v: dot(&self.v, v),
            v_x: dot(&self.v_x, v),
            moment: dot(&self.moment, u),
            shear: dot(&self.shear, u),
        }
    }
}

pub(crate) const LEFT: usize = 0;
pub(crate) const RIGHT: usize = 1;

#[derive(Debug, Clone)]
pub(crate) struct ElementOperator {
    pub q: usize,
    pub s: usize,
    pub ends: [EndWeights; 2],
    /// Displacement rows: mean, mean slope, then `∫ D φ_xx (·)_xx` for `φ = P_2..P_q`.
    pub disp_matrix: DenseMatrix,
    pub disp_lu: LuFactors,
    /// Volume part of the displacement right-hand side acting on `v` coefficients.
    pub disp_volume: DenseMatrix,
    /// `(D φ_i,xx)_x` and `D φ_i,xx` at each end; zero for rows 0 and 1.
    pub disp_shear_test: [Vec<f64>; 2],
    pub disp_moment_test: [Vec<f64>; 2],
    pub mass: DenseMatrix,
    pub mass_lu: LuFactors,
    /// `∫ D ψ_xx (·)_xx` acting on `u` coefficients.
    pub stiffness_vu: DenseMatrix,
    /// `ψ_i` and `ψ_i,x` at each end.
    pub psi: [Vec<f64>; 2],
    pub psi_x: [Vec<f64>; 2],
    /// `∫ D P_i,xx P_k,xx`, the displacement energy block.
    pub energy_u: DenseMatrix,
    pub quad_points: Vec<f64>,
    /// `M^{-1} [(h/2) w_p ψ_i(ξ_p)]`: maps forcing samples to `v_t` coefficients.
    pub load_map: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LocalSystem {
    Displacement,
    Mass,
}

impl ElementOperator {
    pub fn build(
        problem: &BeamProblem,
        xl: f64,
        xr: f64,
        q: usize,
        s: usize,
        quad: &QuadratureRule,
    ) -> Result<Self, (LocalSystem, LinalgError)> {
        let h = xr - xl;
        let jac = 2.0 / h;
        let half = 0.5 * h;
        let jac2 = jac * jac;
        let deg = q.max(s);

        let mut table = vec![[0.0; 4]; deg + 1];
        let mut disp_matrix = DenseMatrix::zeros(q + 1, q + 1);
        let mut disp_volume = DenseMatrix::zeros(q + 1, s + 1);
        let mut energy_u = DenseMatrix::zeros(q + 1, q + 1);
        let mut mass = DenseMatrix::zeros(s + 1, s + 1);
        let mut stiffness_vu = DenseMatrix::zeros(s + 1, q + 1);
        let mut weighted_psi = DenseMatrix::zeros(s + 1, quad.len());
        let mut quad_points = Vec::with_capacity(quad.len());

        for (p, (&xi, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
            let x = xl + 0.5 * (xi + 1.0) * h;
            quad_points.push(x);
            legendre_table(deg, xi, &mut table);
            let dw = problem.d.value(x) * half * w * jac2 * jac2;
            let mw = problem.mu.value(x) * half * w;
            for i in 0..=q {
                for k in 0..=q {
                    energy_u[(i, k)] += dw * table[i][2] * table[k][2];
                }
                for l in 0..=s {
                    if i >= 2 {
                        disp_volume[(i, l)] += dw * table[i][2] * table[l][2];
                    }
                }
                // ∫ P_k dx
                disp_matrix[(0, i)] += half * w * table[i][0];
            }
            for l in 0..=s {
                disp_volume[(0, l)] += half * w * table[l][0];
            }
            for i in 0..=s {
                for k in 0..=s {
                    mass[(i, k)] += mw * table[i][0] * table[k][0];
                }
                for k in 0..=q {
                    stiffness_vu[(i, k)] += dw * table[i][2] * table[k][2];
                }
                weighted_psi[(i, p)] = half * w * table[i][0];
            }
        }
        for i in 2..=q {
            for k in 0..=q {
                disp_matrix[(i, k)] = energy_u[(i, k)];
            }
        }

        let mut end_tables = [vec![[0.0; 4]; deg + 1], vec![[0.0; 4]; deg + 1]];
        legendre_table(deg, -1.0, &mut end_tables[LEFT]);
        legendre_table(deg, 1.0, &mut end_tables[RIGHT]);

        // Mean-slope row: ∫ (u_t)_x dx = u_t(x_r) - u_t(x_l).
        for k in 0..=q {
            disp_matrix[(1, k)] = end_tables[RIGHT][k][0] - end_tables[LEFT][k][0];
        }
        for l in 0..=s {
            disp_volume[(1, l)] = end_tables[RIGHT][l][0] - end_tables[LEFT][l][0];
        }

        let end_x = [xl, xr];
        let ends = [0, 1].map(|e| {
            let t = &end_tables[e];
            let (d, dx) = (problem.d.value(end_x[e]), problem.d.dx(end_x[e]));
            EndWeights {
                v: (0..=s).map(|l| t[l][0]).collect(),
                v_x: (0..=s).map(|l| jac * t[l][1]).collect(),
                moment: (0..=q).map(|k| d * jac2 * t[k][2]).collect(),
                shear: (0..=q)
                    .map(|k| dx * jac2 * t[k][2] + d * jac2 * jac * t[k][3])
                    .collect(),
            }
        });
        let mut disp_shear_test = [vec![0.0; q + 1], vec![0.0; q + 1]];
        let mut disp_moment_test = [vec![0.0; q + 1], vec![0.0; q + 1]];
        for e in [LEFT, RIGHT] {
            for i in 2..=q {
                disp_shear_test[e][i] = ends[e].shear[i];
                disp_moment_test[e][i] = ends[e].moment[i];
            }
        }
        let psi = [0, 1].map(|e| (0..=s).map(|i| end_tables[e][i][0]).collect::<Vec<_>>());
        let psi_x = [0, 1].map(|e| {
            (0..=s)
                .map(|i| jac * end_tables[e][i][1])
                .collect::<Vec<_>>()
        });

        let disp_lu = lu_factor(&disp_matrix).map_err(|e| (LocalSystem::Displacement, e))?;
        let mass_lu = lu_factor(&mass).map_err(|e| (LocalSystem::Mass, e))?;

        let mut load_map = DenseMatrix::zeros(s + 1, quad.len());
        for p in 0..quad.len() {
            let col = mass_lu
                .solve(&weighted_psi.column(p))
                .map_err(|e| (LocalSystem::Mass, e))?;
            for i in 0..=s {
                load_map[(i, p)] = col[i];
            }
        }

        Ok(Self {
            q,
            s,
            ends,
            disp_matrix,
            disp_lu,
            disp_volume,
            disp_shear_test,
            disp_moment_test,
            mass,
            mass_lu,
            stiffness_vu,
            psi,
            psi_x,
            energy_u,
            quad_points,
            load_map,
        })
    }

    /// Right-hand side of the displacement system from the element's `v`
    /// coefficients, its own `v` traces and the end fluxes.
    pub fn displacement_rhs(
        &self,
        v: &[f64],
        left: &InterfaceFlux<f64>,
        right: &InterfaceFlux<f64>,
    ) -> Vec<f64> {
        let mut rhs = self.disp_volume.matvec(v);
        let fluxes = [left, right];
        for e in [LEFT, RIGHT] {
            let sign = if e == RIGHT { 1.0 } else { -1.0 };
            let vt = dot(&self.ends[e].v, v);
            let vxt = dot(&self.ends[e].v_x, v);
            let f = fluxes[e];
            for i in 2..=self.q {
                rhs[i] += sign
                    * (self.disp_shear_test[e][i] * (vt - f.v)
                        + self.disp_moment_test[e][i] * (f.v_x - vxt));
            }
        }
        rhs
    }

    /// Right-hand side of the velocity system, excluding the load.
    pub fn velocity_rhs(
        &self,
        u: &[f64],
        left: &InterfaceFlux<f64>,
        right: &InterfaceFlux<f64>,
    ) -> Vec<f64> {
        let mut rhs: Vec<f64> = self
            .stiffness_vu
            .matvec(u)
            .into_iter()
            .map(|x| -x)
            .collect();
        let fluxes = [left, right];
        for e in [LEFT, RIGHT] {
            let sign = if e == RIGHT { 1.0 } else { -1.0 };
            let f = fluxes[e];
            for i in 0..=self.s {
                rhs[i] += sign * (-self.psi[e][i] * f.shear + self.psi_x[e][i] * f.moment);
            }
        }
        rhs
    }

    /// `‖M‖₁ ‖M⁻¹‖₁` of the displacement matrix.
    pub fn displacement_condition(&self) -> f64 {
        let n = self.q + 1;
        let norm1 = |m: &DenseMatrix| {
            (0..n)
                .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let mut inv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.disp_lu.solve(&e).expect("square by construction");
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        norm1(&self.disp_matrix) * norm1(&inv)
    }
}
