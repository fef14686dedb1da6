//! Beam problem definitions: coefficients, forcing, initial data, boundary
//! conditions and closed-form solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem preset `{0}` (expected uniform-beam or nonuniform-beam)")]
    UnknownPreset(String),
    #[error("unknown boundary condition `{0}`")]
    UnknownBoundary(String),
}

/// A coefficient `c(x)` with its first two derivatives.
#[derive(Clone)]
pub struct Coefficient {
    value: ScalarFn,
    dx: ScalarFn,
    dxx: ScalarFn,
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Self {
            value: Arc::new(move |_| c),
            dx: Arc::new(|_| 0.0),
            dxx: Arc::new(|_| 0.0),
        }
    }

    pub fn new(value: ScalarFn, dx: ScalarFn, dxx: ScalarFn) -> Self {
        Self { value, dx, dxx }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn dx(&self, x: f64) -> f64 {
        (self.dx)(x)
    }

    pub fn dxx(&self, x: f64) -> f64 {
        (self.dxx)(x)
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Coefficient")
    }
}

/// Pointwise derivatives of a closed-form displacement field.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolutionDerivs {
    pub u: f64,
    pub u_x: f64,
    pub u_xx: f64,
    pub u_xxx: f64,
    pub u_xxxx: f64,
    pub u_t: f64,
    pub u_tx: f64,
    pub u_tt: f64,
}

pub trait ExactSolution: Send + Sync {
    fn derivs(&self, x: f64, t: f64) -> SolutionDerivs;
}

/// `u = amplitude · sin(ωx) sin(ω²t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandingWave {
    pub wavenumber: f64,
    pub amplitude: f64,
}

impl StandingWave {
    pub fn new(wavenumber: f64) -> Self {
        Self {
            wavenumber,
            amplitude: 1.0,
        }
    }
}

impl ExactSolution for StandingWave {
    fn derivs(&self, x: f64, t: f64) -> SolutionDerivs {
        let w = self.wavenumber;
        let a = self.amplitude;
        let (sx, cx) = (w * x).sin_cos();
        let (st, ct) = (w * w * t).sin_cos();
        let w2 = w * w;
        SolutionDerivs {
            u: a * sx * st,
            u_x: a * w * cx * st,
            u_xx: -a * w2 * sx * st,
            u_xxx: -a * w2 * w * cx * st,
            u_xxxx: a * w2 * w2 * sx * st,
            u_t: a * w2 * sx * ct,
            u_tx: a * w2 * w * cx * ct,
            u_tt: -a * w2 * w2 * sx * st,
        }
    }
}

/// Any closure-backed solution, mostly for tests.
pub struct FnSolution<F>(pub F);

impl<F> ExactSolution for FnSolution<F>
where
    F: Fn(f64, f64) -> SolutionDerivs + Send + Sync,
{
    fn derivs(&self, x: f64, t: f64) -> SolutionDerivs {
        (self.0)(x, t)
    }
}

/// End conditions, encoded as `(a1, b1, a2, b2)`:
/// `∓a1 v_x + b1 D u_xx = 0` and `a2 v ± b2 (D u_xx)_x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum BoundaryType {
    SimplySupported,
    Free,
    Clamped,
    Sliding,
}

impl BoundaryType {
    pub const ALL: [BoundaryType; 4] = [
        BoundaryType::SimplySupported,
        BoundaryType::Free,
        BoundaryType::Clamped,
        BoundaryType::Sliding,
    ];

    pub fn coefficients(self) -> (f64, f64, f64, f64) {
        match self {
            BoundaryType::SimplySupported => (0.0, 1.0, 1.0, 0.0),
            BoundaryType::Free => (0.0, 1.0, 0.0, 1.0),
            BoundaryType::Clamped => (1.0, 0.0, 1.0, 0.0),
            BoundaryType::Sliding => (1.0, 0.0, 0.0, 1.0),
        }
    }

    /// Whether `(η1, η2)` makes this end non-increasing in energy.
    pub fn admits_eta(self, eta1: f64, eta2: f64) -> bool {
        let (a1, b1, a2, b2) = self.coefficients();
        eta1 * (a1 * a1 - b1 * b1) >= 0.0 && eta2 * (a2 * a2 - b2 * b2) >= 0.0
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryType::SimplySupported => "simply-supported",
            BoundaryType::Free => "free",
            BoundaryType::Clamped => "clamped",
            BoundaryType::Sliding => "sliding",
        }
    }
}

impl fmt::Display for BoundaryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryType {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "simply-supported" | "simply" | "pinned" => Ok(BoundaryType::SimplySupported),
            "free" => Ok(BoundaryType::Free),
            "clamped" => Ok(BoundaryType::Clamped),
            "sliding" => Ok(BoundaryType::Sliding),
            other => Err(ProblemError::UnknownBoundary(other.to_string())),
        }
    }
}

/// `μ u_tt = -(D u_xx)_xx + f` on `(a, b)` with initial data and end conditions.
#[derive(Clone)]
pub struct BeamProblem {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub mu: Coefficient,
    pub d: Coefficient,
    /// `None` means `f ≡ 0`.
    pub forcing: Option<SpaceTimeFn>,
    pub g1: ScalarFn,
    pub g2: ScalarFn,
    pub bc_left: BoundaryType,
    pub bc_right: BoundaryType,
    pub exact: Option<Arc<dyn ExactSolution>>,
}

impl fmt::Debug for BeamProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BeamProblem")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("forced", &self.forcing.is_some())
            .field("bc_left", &self.bc_left)
            .field("bc_right", &self.bc_right)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl BeamProblem {
    pub fn forcing_at(&self, x: f64, t: f64) -> f64 {
        self.forcing.as_ref().map_or(0.0, |f| f(x, t))
    }

    pub fn with_boundaries(mut self, left: BoundaryType, right: BoundaryType) -> Self {
        self.bc_left = left;
        self.bc_right = right;
        self
    }

    /// Initial data taken from the exact solution at `t = 0`.
    fn with_exact(mut self, exact: Arc<dyn ExactSolution>) -> Self {
        let e1 = exact.clone();
        let e2 = exact.clone();
        self.g1 = Arc::new(move |x| e1.derivs(x, 0.0).u);
        self.g2 = Arc::new(move |x| e2.derivs(x, 0.0).u_t);
        self.exact = Some(exact);
        self
    }
}

/// Wavenumber of the preset standing wave, `0.6π`.
pub const PRESET_WAVENUMBER: f64 = 0.6 * PI;

/// `u_tt = -u_xxxx` on `(0, 10)`, simply supported, exact solution
/// `sin(0.6πx) sin((0.6π)² t)`.
pub fn preset_uniform_beam() -> BeamProblem {
    BeamProblem {
        name: "uniform-beam".into(),
        a: 0.0,
        b: 10.0,
        mu: Coefficient::constant(1.0),
        d: Coefficient::constant(1.0),
        forcing: None,
        g1: Arc::new(|_| 0.0),
        g2: Arc::new(|_| 0.0),
        bc_left: BoundaryType::SimplySupported,
        bc_right: BoundaryType::SimplySupported,
        exact: None,
    }
    .with_exact(Arc::new(StandingWave::new(PRESET_WAVENUMBER)))
}

/// Same solution as [`preset_uniform_beam`] with `D = 1 + 0.1 cos(πx)` and
/// the matching forcing.
pub fn preset_nonuniform_beam() -> BeamProblem {
    let d = Coefficient::new(
        Arc::new(|x: f64| 1.0 + 0.1 * (PI * x).cos()),
        Arc::new(|x: f64| -0.1 * PI * (PI * x).sin()),
        Arc::new(|x: f64| -0.1 * PI * PI * (PI * x).cos()),
    );
    let w = PRESET_WAVENUMBER;
    let forcing: SpaceTimeFn = Arc::new(move |x: f64, t: f64| {
        let st = (w * w * t).sin();
        let w2 = w * w;
        (0.1 * w2 * w2 * (PI * x).cos() + 0.1 * PI * PI * w2 * (PI * x).cos()) * (w * x).sin() * st
            + 0.2 * PI * w2 * w * (PI * x).sin() * (w * x).cos() * st
    });
    BeamProblem {
        name: "nonuniform-beam".into(),
        d,
        forcing: Some(forcing),
        ..preset_uniform_beam()
    }
}

pub fn preset(name: &str) -> Result<BeamProblem, ProblemError> {
    match name.trim() {
        "uniform-beam" => Ok(preset_uniform_beam()),
        "nonuniform-beam" => Ok(preset_nonuniform_beam()),
        other => Err(ProblemError::UnknownPreset(other.to_string())),
    }
}

/// `f = μ u_tt + (D u_xx)_xx`, expanding the bending term as
/// `D u_xxxx + 2 D_x u_xxx + D_xx u_xx`.
pub fn manufactured_forcing(
    exact: Arc<dyn ExactSolution>,
    mu: Coefficient,
    d: Coefficient,
) -> SpaceTimeFn {
    Arc::new(move |x, t| {
        let s = exact.derivs(x, t);
        mu.value(x) * s.u_tt + d.value(x) * s.u_xxxx + 2.0 * d.dx(x) * s.u_xxx + d.dxx(x) * s.u_xx
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_preset_values() {
        let p = preset_uniform_beam();
        let e = p.exact.clone().unwrap();
        assert_abs_diff_eq!(e.derivs(5.0 / 6.0, 0.0).u, 0.0);
        let w = PRESET_WAVENUMBER;
        let t = (PI / 2.0) / (w * w);
        let x = 5.0 / 1.2;
        assert_abs_diff_eq!(e.derivs(x, t).u, (w * x).sin(), epsilon = 1e-14);
        for &x in &[0.3, 2.0, 7.7] {
            assert_abs_diff_eq!((p.g2)(x), w * w * (w * x).sin(), epsilon = 1e-13);
            assert_abs_diff_eq!((p.g1)(x), 0.0);
        }
        assert!(p.forcing.is_none());
    }

    #[test]
    fn nonuniform_preset_values() {
        let p = preset_nonuniform_beam();
        assert_abs_diff_eq!(p.d.dx(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d.dx(10.0), 0.0, epsilon = 1e-14);
        for &x in &[0.0, 1.3, 4.4, 9.9] {
            assert_eq!(p.forcing_at(x, 0.0), 0.0);
        }
    }

    /// Strong-form residual of the exact solution via nested central
    /// differences of `D(x) u_xx(x)`.
    fn fd_forcing(p: &BeamProblem, x: f64, t: f64) -> f64 {
        let e = p.exact.clone().unwrap();
        let h = 1e-3;
        let m = |y: f64| p.d.value(y) * e.derivs(y, t).u_xx;
        let mxx = (m(x + h) - 2.0 * m(x) + m(x - h)) / (h * h);
        let ht = 1e-4;
        let u = |s: f64| e.derivs(x, s).u;
        let utt = (u(t + ht) - 2.0 * u(t) + u(t - ht)) / (ht * ht);
        p.mu.value(x) * utt + mxx
    }

    #[test]
    fn nonuniform_forcing_matches_finite_differences() {
        let p = preset_nonuniform_beam();
        let f = p.forcing_at(1.0, 1.0);
        let fd = fd_forcing(&p, 1.0, 1.0);
        assert!((f - fd).abs() < 1e-4 * (1.0 + f.abs()), "{f} vs {fd}");
        // Tighter check using the analytic strong form route on the same point.
        let mf = manufactured_forcing(p.exact.clone().unwrap(), p.mu.clone(), p.d.clone());
        assert_abs_diff_eq!(mf(1.0, 1.0), f, epsilon = 1e-8);
    }

    #[test]
    fn manufactured_forcing_trivial_cases() {
        let zero: Arc<dyn ExactSolution> = Arc::new(FnSolution(|_, _| SolutionDerivs::default()));
        let f = manufactured_forcing(zero, Coefficient::constant(1.0), Coefficient::constant(2.0));
        assert_eq!(f(0.3, 0.4), 0.0);
        let linear: Arc<dyn ExactSolution> = Arc::new(FnSolution(|x, _| SolutionDerivs {
            u: x,
            u_x: 1.0,
            ..Default::default()
        }));
        let f = manufactured_forcing(
            linear,
            Coefficient::constant(3.0),
            Coefficient::constant(2.0),
        );
        assert_eq!(f(1.7, 0.2), 0.0);
    }

    #[test]
    fn presets_cross_check_and_boundary_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = preset_nonuniform_beam();
        let mf = manufactured_forcing(p.exact.clone().unwrap(), p.mu.clone(), p.d.clone());
        let u = preset_uniform_beam();
        let mf0 = manufactured_forcing(u.exact.clone().unwrap(), u.mu.clone(), u.d.clone());
        for _ in 0..100 {
            let x = rng.gen_range(0.0..10.0);
            let t = rng.gen_range(0.0..5.0);
            let direct = p.forcing_at(x, t);
            assert!((mf(x, t) - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
            assert!(mf0(x, t).abs() <= 1e-10);
        }
        for p in [preset_uniform_beam(), preset_nonuniform_beam()] {
            let e = p.exact.clone().unwrap();
            for _ in 0..20 {
                let t = rng.gen_range(0.0..100.0);
                for x in [0.0, 10.0] {
                    let s = e.derivs(x, t);
                    assert!(s.u.abs() < 1e-12 && s.u_xx.abs() < 1e-11);
                }
            }
            for _ in 0..20 {
                let x = rng.gen_range(0.0..10.0);
                assert!(((p.g1)(x) - e.derivs(x, 0.0).u).abs() < 1e-12);
                assert!(((p.g2)(x) - e.derivs(x, 0.0).u_t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_coefficients_and_eta_table() {
        for bc in BoundaryType::ALL {
            let (a1, b1, a2, b2) = bc.coefficients();
            assert_eq!(a1 * b1, 0.0);
            assert_eq!(a2 * b2, 0.0);
            assert_eq!(a1 + b1, 1.0);
            assert_eq!(a2 + b2, 1.0);
            assert!(bc.admits_eta(0.0, 0.0));
            assert_eq!(bc.name().parse::<BoundaryType>().unwrap(), bc);
        }
        assert!(BoundaryType::SimplySupported.admits_eta(-1.0, 1.0));
        assert!(!BoundaryType::SimplySupported.admits_eta(1.0, 1.0));
        assert!(BoundaryType::Free.admits_eta(-1.0, -1.0));
        assert!(BoundaryType::Clamped.admits_eta(1.0, 1.0));
        assert!(BoundaryType::Sliding.admits_eta(1.0, -1.0));
        assert!(!BoundaryType::Sliding.admits_eta(1.0, 1.0));
        assert!(preset("nope").is_err());
    }
}
