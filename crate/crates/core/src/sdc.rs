//! Spectral deferred correction for linear systems `y' = A y + F(t)`:
//! backward-Euler prediction over right Gauss-Radau substeps followed by
//! correction sweeps against the interpolatory integral of the residual.

use std::sync::Arc;

use thiserror::Error;

use crate::basis::{gauss_legendre, gauss_radau_right, BasisError};
use crate::linalg::{
    banded_lu_factor, lu_factor_owned, BandedLu, DenseMatrix, LinalgError, LuFactors,
};
use crate::operator::{discrete_energy, SemiDiscreteSystem};

#[derive(Debug, Error, PartialEq)]
pub enum SdcError {
    #[error("SDC needs at least one node")]
    NoNodes,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("final time {t_final} precedes start {t0}")]
    BadInterval { t0: f64, t_final: f64 },
    #[error("state has length {got}, system has dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("I - k A is singular at substep {substep}: {source}")]
    Singular { substep: usize, source: LinalgError },
}

/// Solves `(I - k A) x = b` in place for one fixed `k`.
pub trait ShiftedSolve: Send + Sync {
    fn solve_in_place(&self, x: &mut [f64]) -> Result<(), LinalgError>;
}

impl ShiftedSolve for LuFactors {
    fn solve_in_place(&self, x: &mut [f64]) -> Result<(), LinalgError> {
        LuFactors::solve_in_place(self, x)
    }
}

/// A linear ODE with constant matrix.
pub trait LinearOde: Sync {
    fn dim(&self) -> usize;
    /// `out = A y`.
    fn apply_matrix(&self, y: &[f64], out: &mut [f64]);
    /// Factorization of `I - k A`.
    fn factor_shifted(&self, k: f64) -> Result<Arc<dyn ShiftedSolve>, LinalgError>;
    /// Whether `F` can be nonzero; when false `add_forcing` is skipped.
    fn is_forced(&self) -> bool;
    /// `out += F(t)`.
    fn add_forcing(&self, t: f64, out: &mut [f64]);
}

struct ElementOrderSolver {
    lu: BandedLu,
    order: Vec<usize>,
}

impl ShiftedSolve for ElementOrderSolver {
    fn solve_in_place(&self, x: &mut [f64]) -> Result<(), LinalgError> {
        if x.len() != self.order.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.order.len(),
                got: x.len(),
            });
        }
        let mut z: Vec<f64> = self.order.iter().map(|&g| x[g]).collect();
        self.lu.solve_in_place(&mut z)?;
        for (&g, v) in self.order.iter().zip(z) {
            x[g] = v;
        }
        Ok(())
    }
}

impl LinearOde for SemiDiscreteSystem {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn apply_matrix(&self, y: &[f64], out: &mut [f64]) {
        let z = self.banded().matvec(&self.to_element_order(y));
        for (&g, v) in self.element_order().iter().zip(z) {
            out[g] = v;
        }
    }

    fn factor_shifted(&self, k: f64) -> Result<Arc<dyn ShiftedSolve>, LinalgError> {
        let lu = banded_lu_factor(self.banded().shifted_identity(k))?;
        Ok(Arc::new(ElementOrderSolver {
            lu,
            order: self.element_order().to_vec(),
        }))
    }

    fn is_forced(&self) -> bool {
        self.load.is_some()
    }

    fn add_forcing(&self, t: f64, out: &mut [f64]) {
        if let Some(load) = &self.load {
            let mut f = vec![0.0; out.len()];
            load.eval_into(t, &mut f);
            for (o, fi) in out.iter_mut().zip(f) {
                *o += fi;
            }
        }
    }
}

pub type VectorForcing = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// A plain `y' = A y + F(t)`, handy for scalar and small test problems.
#[derive(Clone)]
pub struct DenseOde {
    pub a: DenseMatrix,
    pub forcing: Option<VectorForcing>,
}

impl DenseOde {
    pub fn homogeneous(a: DenseMatrix) -> Self {
        Self { a, forcing: None }
    }

    pub fn scalar(lambda: f64) -> Self {
        Self::homogeneous(DenseMatrix::from_rows(&[vec![lambda]]))
    }
}

impl LinearOde for DenseOde {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply_matrix(&self, y: &[f64], out: &mut [f64]) {
        self.a.matvec_into(y, out);
    }

    fn factor_shifted(&self, k: f64) -> Result<Arc<dyn ShiftedSolve>, LinalgError> {
        Ok(Arc::new(lu_factor_owned(self.a.shifted_identity(k))?))
    }

    fn is_forced(&self) -> bool {
        self.forcing.is_some()
    }

    fn add_forcing(&self, t: f64, out: &mut [f64]) {
        if let Some(f) = &self.forcing {
            f(t, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdcConfig {
    pub m: usize,
    pub sweeps: usize,
    /// Radau nodes on `(0, 1]`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `q_matrix[i][k] = ∫_0^{nodes[i]} ℓ_k`, Lagrange basis on the nodes.
    pub q_matrix: DenseMatrix,
}

impl Default for SdcConfig {
    fn default() -> Self {
        Self::new(5, 15).expect("default SDC configuration is valid")
    }
}

impl SdcConfig {
    pub fn new(m: usize, sweeps: usize) -> Result<Self, SdcError> {
        if m == 0 {
            return Err(SdcError::NoNodes);
        }
        let radau = gauss_radau_right(m)?;
        let nodes = radau.nodes;
        // m-point Gauss rule integrates the degree m-1 Lagrange basis exactly.
        let gauss = gauss_legendre(m)?;
        let mut q_matrix = DenseMatrix::zeros(m, m);
        for i in 0..m {
            let upper = nodes[i];
            for k in 0..m {
                q_matrix[(i, k)] = gauss.integrate_on(0.0, upper, |t| lagrange(&nodes, k, t));
            }
        }
        Ok(Self {
            m,
            sweeps,
            nodes,
            weights: radau.weights,
            q_matrix,
        })
    }
}

fn lagrange(nodes: &[f64], k: usize, t: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, &ti)| (t - ti) / (nodes[k] - ti))
        .product()
}

/// Cached factorizations of `I - k A` and stage storage.
pub struct StepWorkspace {
    cache_enabled: bool,
    factors: Vec<(u64, Arc<dyn ShiftedSolve>)>,
    stages: Vec<Vec<f64>>,
    rates: Vec<Vec<f64>>,
}

impl Default for StepWorkspace {
    fn default() -> Self {
        Self::new()
    }
}

impl StepWorkspace {
    pub fn new() -> Self {
        Self {
            cache_enabled: true,
            factors: Vec::new(),
            stages: Vec::new(),
            rates: Vec::new(),
        }
    }

    /// Refactors `I - k A` on every use.
    pub fn without_cache() -> Self {
        Self {
            cache_enabled: false,
            ..Self::new()
        }
    }

    pub fn cached_factorizations(&self) -> usize {
        self.factors.len()
    }

    fn factor<S: LinearOde + ?Sized>(
        &mut self,
        system: &S,
        k: f64,
        substep: usize,
    ) -> Result<Arc<dyn ShiftedSolve>, SdcError> {
        let key = k.to_bits();
        if let Some((_, f)) = self.factors.iter().find(|(kk, _)| *kk == key) {
            return Ok(f.clone());
        }
        let f = system
            .factor_shifted(k)
            .map_err(|source| SdcError::Singular { substep, source })?;
        if self.cache_enabled {
            self.factors.push((key, f.clone()));
        }
        Ok(f)
    }
}

/// One SDC step from `t_n` to `t_n + dt`.
pub fn sdc_step<S: LinearOde + ?Sized>(
    system: &S,
    config: &SdcConfig,
    workspace: &mut StepWorkspace,
    y_n: &[f64],
    t_n: f64,
    dt: f64,
) -> Result<Vec<f64>, SdcError> {
    if !(dt > 0.0) {
        return Err(SdcError::BadStep(dt));
    }
    let dim = system.dim();
    if y_n.len() != dim {
        return Err(SdcError::Dimension {
            expected: dim,
            got: y_n.len(),
        });
    }
    let m = config.m;
    let taus: Vec<f64> = config.nodes.iter().map(|c| t_n + dt * c).collect();
    let steps: Vec<f64> = (0..m)
        .map(|i| dt * (config.nodes[i] - if i == 0 { 0.0 } else { config.nodes[i - 1] }))
        .collect();
    let factors = (0..m)
        .map(|i| workspace.factor(system, steps[i], i + 1))
        .collect::<Result<Vec<_>, _>>()?;

    workspace.stages.resize_with(m, Vec::new);
    workspace.rates.resize_with(m, Vec::new);
    let (stages, rates) = (&mut workspace.stages, &mut workspace.rates);

    // Backward-Euler prediction.
    let mut prev = y_n.to_vec();
    for i in 0..m {
        let mut rhs = prev;
        if system.is_forced() {
            let mut f = vec![0.0; dim];
            system.add_forcing(taus[i], &mut f);
            for (r, fi) in rhs.iter_mut().zip(&f) {
                *r += steps[i] * fi;
            }
        }
        factors[i]
            .solve_in_place(&mut rhs)
            .map_err(|source| SdcError::Singular {
                substep: i + 1,
                source,
            })?;
        stages[i].clear();
        stages[i].extend_from_slice(&rhs);
        prev = rhs;
    }

    let mut eps = vec![0.0; dim];
    let mut eps_prev = vec![0.0; dim];
    let mut delta = vec![0.0; dim];
    for _ in 0..config.sweeps {
        for k in 0..m {
            rates[k].resize(dim, 0.0);
            system.apply_matrix(&stages[k], &mut rates[k]);
            if system.is_forced() {
                system.add_forcing(taus[k], &mut rates[k]);
            }
        }
        eps_prev.fill(0.0);
        delta.fill(0.0);
        for i in 0..m {
            for r in 0..dim {
                let mut integral = 0.0;
                for k in 0..m {
                    integral += config.q_matrix[(i, k)] * rates[k][r];
                }
                eps[r] = y_n[r] - stages[i][r] + dt * integral;
            }
            // δ_i = (I - k_i A)^{-1} (δ_{i-1} + ε_i - ε_{i-1})
            for r in 0..dim {
                delta[r] += eps[r] - eps_prev[r];
            }
            factors[i]
                .solve_in_place(&mut delta)
                .map_err(|source| SdcError::Singular {
                    substep: i + 1,
                    source,
                })?;
            for (s, d) in stages[i].iter_mut().zip(&delta) {
                *s += d;
            }
            std::mem::swap(&mut eps, &mut eps_prev);
        }
    }
    Ok(stages[m - 1].clone())
}

/// Number of steps and the final (possibly shortened) step size.
pub fn step_schedule(t0: f64, t_final: f64, dt: f64) -> (usize, f64) {
    let span = t_final - t0;
    let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    let last = span - (n - 1) as f64 * dt;
    (n, last)
}

/// Repeated [`sdc_step`] from `t0` to `t_final`; `observer` sees the initial
/// state and every accepted step.
pub fn integrate<S: LinearOde + ?Sized>(
    system: &S,
    config: &SdcConfig,
    y0: &[f64],
    t0: f64,
    t_final: f64,
    dt: f64,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>, SdcError> {
    if !(dt > 0.0) {
        return Err(SdcError::BadStep(dt));
    }
    if t_final < t0 {
        return Err(SdcError::BadInterval { t0, t_final });
    }
    let mut ws = StepWorkspace::new();
    let mut y = y0.to_vec();
    observer(t0, &y);
    if t_final == t0 {
        return Ok(y);
    }
    let (n, last) = step_schedule(t0, t_final, dt);
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        let h = if k + 1 == n { last } else { dt };
        y = sdc_step(system, config, &mut ws, &y, t, h)?;
        let t_next = if k + 1 == n {
            t_final
        } else {
            t0 + (k + 1) as f64 * dt
        };
        observer(t_next, &y);
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub final_state: Vec<f64>,
}

/// [`integrate`] recording the discrete energy every `stride` steps (and at the end).
pub fn integrate_with_energy(
    system: &SemiDiscreteSystem,
    config: &SdcConfig,
    y0: &[f64],
    t0: f64,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory, SdcError> {
    let stride = stride.max(1);
    let (n, _) = step_schedule(t0, t_final, dt);
    let mut times = Vec::new();
    let mut energies = Vec::new();
    let mut count = 0usize;
    let final_state = integrate(system, config, y0, t0, t_final, dt, |t, y| {
        if count.is_multiple_of(stride) || count == n {
            times.push(t);
            energies.push(discrete_energy(system, y));
        }
        count += 1;
    })?;
    Ok(Trajectory {
        times,
        energies,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn q_matrix_last_row_is_weights_and_integrates_polynomials() {
        for m in 1..=7 {
            let c = SdcConfig::new(m, 0).unwrap();
            for k in 0..m {
                assert_abs_diff_eq!(c.q_matrix[(m - 1, k)], c.weights[k], epsilon = 1e-13);
            }
            for p in 0..m {
                for i in 0..m {
                    let got: f64 = (0..m)
                        .map(|k| c.q_matrix[(i, k)] * c.nodes[k].powi(p as i32))
                        .sum();
                    let exact = c.nodes[i].powi(p as i32 + 1) / (p as f64 + 1.0);
                    assert!((got - exact).abs() < 1e-12, "m={m} p={p} i={i}");
                }
            }
        }
        assert_eq!(SdcConfig::new(0, 3), Err(SdcError::NoNodes));
    }

    #[test]
    fn constant_forcing_is_exact() {
        let c = vec![1.5, -2.0];
        let cc = c.clone();
        let ode = DenseOde {
            a: DenseMatrix::zeros(2, 2),
            forcing: Some(Arc::new(move |_, out: &mut [f64]| {
                for (o, ci) in out.iter_mut().zip(&cc) {
                    *o += ci;
                }
            })),
        };
        let cfg = SdcConfig::default();
        let mut ws = StepWorkspace::new();
        let y = sdc_step(&ode, &cfg, &mut ws, &[1.0, 1.0], 0.0, 0.3).unwrap();
        assert_abs_diff_eq!(y[0], 1.0 + 0.3 * 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 1.0 - 0.3 * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn single_node_without_sweeps_is_backward_euler() {
        let ode = DenseOde::scalar(-3.0);
        let cfg = SdcConfig::new(1, 0).unwrap();
        let mut ws = StepWorkspace::new();
        let y = sdc_step(&ode, &cfg, &mut ws, &[2.0], 0.0, 0.1).unwrap();
        assert_abs_diff_eq!(y[0], 2.0 / (1.0 + 0.3), epsilon = 1e-15);
    }

    fn dahlquist_error(cfg: &SdcConfig, lambda: f64, t_final: f64, steps: usize) -> f64 {
        let ode = DenseOde::scalar(lambda);
        let y = integrate(
            &ode,
            cfg,
            &[1.0],
            0.0,
            t_final,
            t_final / steps as f64,
            |_, _| {},
        )
        .unwrap();
        (y[0] - (lambda * t_final).exp()).abs()
    }

    #[test]
    fn each_sweep_raises_the_order() {
        // m = 3 saturates at 2m - 1 = 5; J sweeps give order min(J + 1, 5).
        let m = 3;
        for sweeps in 0..=4 {
            let cfg = SdcConfig::new(m, sweeps).unwrap();
            let e1 = dahlquist_error(&cfg, -1.0, 1.0, 8);
            let e2 = dahlquist_error(&cfg, -1.0, 1.0, 16);
            let order = (e1 / e2).log2();
            let expected = ((sweeps + 1).min(2 * m - 1)) as f64;
            assert!(
                (order - expected).abs() < 0.35,
                "J={sweeps}: order {order}, expected {expected}"
            );
        }
    }

    #[test]
    fn cache_does_not_change_results() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-4.0, -0.1]]);
        let ode = DenseOde::homogeneous(a);
        let cfg = SdcConfig::default();
        let mut cached = StepWorkspace::new();
        let mut fresh = StepWorkspace::without_cache();
        let mut y1 = vec![1.0, 0.0];
        let mut y2 = y1.clone();
        for k in 0..5 {
            y1 = sdc_step(&ode, &cfg, &mut cached, &y1, k as f64 * 0.2, 0.2).unwrap();
            y2 = sdc_step(&ode, &cfg, &mut fresh, &y2, k as f64 * 0.2, 0.2).unwrap();
        }
        assert!(y1.iter().zip(&y2).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(cached.cached_factorizations(), 5);
        assert_eq!(fresh.cached_factorizations(), 0);
    }

    #[test]
    fn schedule_shortens_last_step() {
        assert_eq!(step_schedule(0.0, 1.0, 0.25), (4, 0.25));
        let (n, last) = step_schedule(0.0, 1.0, 0.3);
        assert_eq!(n, 4);
        assert_abs_diff_eq!(last, 0.1, epsilon = 1e-14);
        let ode = DenseOde::homogeneous(DenseMatrix::zeros(1, 1));
        let mut seen = Vec::new();
        let y = integrate(
            &ode,
            &SdcConfig::default(),
            &[3.0],
            0.0,
            1.0,
            0.3,
            |t, y| seen.push((t, y[0])),
        )
        .unwrap();
        assert_eq!(y, vec![3.0]);
        assert_eq!(seen.len(), 5);
        assert_eq!(seen.last().unwrap().0, 1.0);
        assert!(seen.iter().all(|&(_, v)| v == 3.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        let ode = DenseOde::scalar(-1.0);
        let cfg = SdcConfig::default();
        let mut ws = StepWorkspace::new();
        assert_eq!(
            sdc_step(&ode, &cfg, &mut ws, &[1.0], 0.0, 0.0),
            Err(SdcError::BadStep(0.0))
        );
        assert!(matches!(
            sdc_step(&ode, &cfg, &mut ws, &[1.0, 2.0], 0.0, 0.1),
            Err(SdcError::Dimension { .. })
        ));
        // k_1 λ = 1 makes I - k_1 A singular.
        let c1 = SdcConfig::new(1, 0).unwrap();
        let one = DenseOde::scalar(1.0);
        assert!(matches!(
            sdc_step(&one, &c1, &mut ws, &[1.0], 0.0, 1.0),
            Err(SdcError::Singular { substep: 1, .. })
        ));
    }
}
