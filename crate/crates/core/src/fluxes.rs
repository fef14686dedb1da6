//! Numerical fluxes at element interfaces and physical boundaries.
//!
//! Every flux is linear in the trace data, so the formulas are written once
//! over [`FluxAlgebra`] and evaluated both on plain numbers and on symbolic
//! [`LinearForm`]s (the latter is how the global operator is assembled).

use std::ops::{Add, Mul, Sub};

use thiserror::Error;

use crate::problem::BoundaryType;

#[derive(Debug, Error, PartialEq)]
pub enum FluxError {
    #[error("alpha{index} = {value} is outside [0, 1]")]
    AlphaRange { index: u8, value: f64 },
    #[error("penalty {name} = {value} must be nonnegative")]
    NegativePenalty { name: &'static str, value: f64 },
    #[error("eta = ({eta1}, {eta2}) violates the sign condition for a {bc} end")]
    EtaSign {
        bc: BoundaryType,
        eta1: f64,
        eta2: f64,
    },
    #[error("unknown flux preset `{0}`")]
    UnknownPreset(String),
}

/// Values the flux formulas can be evaluated on.
pub trait FluxAlgebra:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl<T> FluxAlgebra for T where T: Clone + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Sparse linear functional `y ↦ Σ c_i y_i` over the global state.
/// Entries may repeat; they are summed on use.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearForm(pub Vec<(usize, f64)>);

impl LinearForm {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.0.iter().map(|&(i, c)| c * y[i]).sum()
    }
}

impl Add for LinearForm {
    type Output = LinearForm;
    fn add(mut self, rhs: LinearForm) -> LinearForm {
        self.0.extend(rhs.0);
        self
    }
}

impl Sub for LinearForm {
    type Output = LinearForm;
    fn sub(mut self, rhs: LinearForm) -> LinearForm {
        self.0.extend(rhs.0.into_iter().map(|(i, c)| (i, -c)));
        self
    }
}

impl Mul<f64> for LinearForm {
    type Output = LinearForm;
    fn mul(mut self, rhs: f64) -> LinearForm {
        if rhs == 0.0 {
            return LinearForm::zero();
        }
        for e in &mut self.0 {
            e.1 *= rhs;
        }
        self
    }
}

/// Interface and boundary flux parameters, shared by every interface.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FluxSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl FluxSpec {
    pub fn central() -> Self {
        Self::custom(0.5, 0.5, 0.0, 0.0, 0.0, 0.0)
    }

    /// `α1 = α2 = 0`: `v* = v⁺`, `(Du_xx)* = (Du_xx)⁻`.
    pub fn alternating() -> Self {
        Self::custom(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    /// The four penalty-free alternating pairs: `a = (0, 0)`, `b = (0, 1)`,
    /// `c = (1, 0)`, `d = (1, 1)` for `(α1, α2)`.
    pub fn alternating_case(case: char) -> Option<Self> {
        let (a1, a2) = match case {
            'a' => (0.0, 0.0),
            'b' => (0.0, 1.0),
            'c' => (1.0, 0.0),
            'd' => (1.0, 1.0),
            _ => return None,
        };
        Some(Self::custom(a1, a2, 0.0, 0.0, 0.0, 0.0))
    }

    pub fn upwind() -> Self {
        Self::custom(0.5, 0.5, 0.5, 0.5, 0.5, 0.5)
    }

    pub fn custom(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, tau1: f64, tau2: f64) -> Self {
        Self {
            alpha1,
            alpha2,
            beta1,
            beta2,
            tau1,
            tau2,
            eta1: 0.0,
            eta2: 0.0,
        }
    }

    pub fn preset(name: &str) -> Result<Self, FluxError> {
        match name.trim() {
            "central" => Ok(Self::central()),
            "alternating" => Ok(Self::alternating()),
            "upwind" => Ok(Self::upwind()),
            other => other
                .strip_prefix("alternating-")
                .and_then(|c| if c.len() == 1 { c.chars().next() } else { None })
                .and_then(Self::alternating_case)
                .ok_or_else(|| FluxError::UnknownPreset(other.to_string())),
        }
    }

    pub fn with_eta(mut self, eta1: f64, eta2: f64) -> Self {
        self.eta1 = eta1;
        self.eta2 = eta2;
        self
    }

    /// Zero interface energy flux for every trace.
    pub fn is_conservative(&self) -> bool {
        self.beta1 == 0.0 && self.beta2 == 0.0 && self.tau1 == 0.0 && self.tau2 == 0.0
    }

    pub fn validate(&self) -> Result<(), FluxError> {
        for (index, value) in [(1, self.alpha1), (2, self.alpha2)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(FluxError::AlphaRange { index, value });
            }
        }
        for (name, value) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
        ] {
            if !(value >= 0.0) {
                return Err(FluxError::NegativePenalty { name, value });
            }
        }
        Ok(())
    }

    /// Checks the η sign table for the given end conditions.
    pub fn validate_boundaries(
        &self,
        left: BoundaryType,
        right: BoundaryType,
    ) -> Result<(), FluxError> {
        for bc in [left, right] {
            if !bc.admits_eta(self.eta1, self.eta2) {
                return Err(FluxError::EtaSign {
                    bc,
                    eta1: self.eta1,
                    eta2: self.eta2,
                });
            }
        }
        Ok(())
    }
}

/// One-sided trace: velocity, slope, bending moment `D u_xx`, shear `(D u_xx)_x`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Trace<T> {
    pub v: T,
    pub v_x: T,
    pub moment: T,
    pub shear: T,
}

/// Both sides of an interior interface; `minus` is the left element.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TraceData<T> {
    pub minus: Trace<T>,
    pub plus: Trace<T>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InterfaceFlux<T> {
    pub v: T,
    pub v_x: T,
    pub moment: T,
    pub shear: T,
}

pub fn interface_flux<T: FluxAlgebra>(spec: &FluxSpec, trace: &TraceData<T>) -> InterfaceFlux<T> {
    let (m, p) = (&trace.minus, &trace.plus);
    let (a1, a2) = (spec.alpha1, spec.alpha2);
    InterfaceFlux {
        v: m.v.clone() * a1
            + p.v.clone() * (1.0 - a1)
            + (m.shear.clone() - p.shear.clone()) * spec.beta1,
        shear: m.shear.clone() * (1.0 - a1)
            + p.shear.clone() * a1
            + (m.v.clone() - p.v.clone()) * spec.tau1,
        v_x: m.v_x.clone() * a2 + p.v_x.clone() * (1.0 - a2)
            - (m.moment.clone() - p.moment.clone()) * spec.beta2,
        moment: m.moment.clone() * (1.0 - a2) + p.moment.clone() * a2
            - (m.v_x.clone() - p.v_x.clone()) * spec.tau2,
    }
}

/// `J^h = -τ1[[v]]² - β1[[(Du_xx)_x]]² - β2[[Du_xx]]² - τ2[[v_x]]²`.
pub fn interface_energy_flux(spec: &FluxSpec, trace: &TraceData<f64>) -> f64 {
    let (m, p) = (&trace.minus, &trace.plus);
    let jv = m.v - p.v;
    let js = m.shear - p.shear;
    let jm = m.moment - p.moment;
    let jvx = m.v_x - p.v_x;
    -spec.tau1 * jv * jv - spec.beta1 * js * js - spec.beta2 * jm * jm - spec.tau2 * jvx * jvx
}

/// Interface energy rate evaluated directly from traces and fluxes, before
/// substituting the flux formulas.
pub fn interface_energy_bracket(trace: &TraceData<f64>, flux: &InterfaceFlux<f64>) -> f64 {
    one_sided_bracket(&trace.minus, flux) - one_sided_bracket(&trace.plus, flux)
}

/// `(Du_xx)_x (v - v*) - v ((Du_xx)_x)* + Du_xx ((v_x)* - v_x) + v_x (Du_xx)*`.
fn one_sided_bracket(t: &Trace<f64>, f: &InterfaceFlux<f64>) -> f64 {
    t.shear * (t.v - f.v) - t.v * f.shear + t.moment * (f.v_x - t.v_x) + t.v_x * f.moment
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryEnd {
    Left,
    Right,
}

/// Boundary fluxes from the interior trace, consistent with the end
/// condition for any `(η1, η2)`.
pub fn boundary_flux<T: FluxAlgebra>(
    end: BoundaryEnd,
    bc: BoundaryType,
    eta1: f64,
    eta2: f64,
    trace: &Trace<T>,
) -> InterfaceFlux<T> {
    let (a1, b1, a2, b2) = bc.coefficients();
    let t = trace;
    match end {
        BoundaryEnd::Left => {
            let zeta1 = t.v_x.clone() * -a1 + t.moment.clone() * b1;
            let zeta2 = t.v.clone() * a2 + t.shear.clone() * b2;
            InterfaceFlux {
                v_x: t.v_x.clone() + zeta1.clone() * (a1 - eta1 * b1),
                moment: t.moment.clone() - zeta1 * (b1 + eta1 * a1),
                v: t.v.clone() - zeta2.clone() * (a2 - eta2 * b2),
                shear: t.shear.clone() - zeta2 * (b2 + eta2 * a2),
            }
        }
        BoundaryEnd::Right => {
            let zeta1 = t.v_x.clone() * a1 + t.moment.clone() * b1;
            let zeta2 = t.v.clone() * a2 - t.shear.clone() * b2;
            InterfaceFlux {
                v_x: t.v_x.clone() - zeta1.clone() * (a1 - eta1 * b1),
                moment: t.moment.clone() - zeta1 * (b1 + eta1 * a1),
                v: t.v.clone() - zeta2.clone() * (a2 - eta2 * b2),
                shear: t.shear.clone() + zeta2 * (b2 + eta2 * a2),
            }
        }
    }
}

/// `-[ζ2² η2 (a2² - b2²) + ζ1² η1 (a1² - b1²)]` at one end. The squares make
/// this independent of which end the trace belongs to.
pub fn boundary_energy_rate(bc: BoundaryType, eta1: f64, eta2: f64, trace: &Trace<f64>) -> f64 {
    let (a1, b1, a2, b2) = bc.coefficients();
    let zeta1 = a1 * trace.v_x + b1 * trace.moment;
    let zeta2 = a2 * trace.v + b2 * trace.shear;
    -(zeta2 * zeta2 * eta2 * (a2 * a2 - b2 * b2) + zeta1 * zeta1 * eta1 * (a1 * a1 - b1 * b1))
}

/// Boundary energy rate from traces and fluxes directly: the element bracket
/// is added at the right end and subtracted at the left end.
pub fn boundary_energy_bracket(
    end: BoundaryEnd,
    trace: &Trace<f64>,
    flux: &InterfaceFlux<f64>,
) -> f64 {
    let g = one_sided_bracket(trace, flux);
    match end {
        BoundaryEnd::Right => g,
        BoundaryEnd::Left => -g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_trace(rng: &mut impl Rng) -> Trace<f64> {
        Trace {
            v: rng.gen_range(-3.0..3.0),
            v_x: rng.gen_range(-3.0..3.0),
            moment: rng.gen_range(-3.0..3.0),
            shear: rng.gen_range(-3.0..3.0),
        }
    }

    fn random_spec(rng: &mut impl Rng) -> FluxSpec {
        let mut pen = || {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..2.0)
            }
        };
        let (b1, b2, t1, t2) = (pen(), pen(), pen(), pen());
        FluxSpec::custom(
            rng.gen_range(0.0..=1.0),
            rng.gen_range(0.0..=1.0),
            b1,
            b2,
            t1,
            t2,
        )
    }

    #[test]
    fn central_is_the_average() {
        let tr = TraceData {
            minus: Trace {
                v: 1.0,
                v_x: 2.0,
                moment: -1.0,
                shear: 4.0,
            },
            plus: Trace {
                v: 3.0,
                v_x: 0.0,
                moment: 1.0,
                shear: 2.0,
            },
        };
        let f = interface_flux(&FluxSpec::central(), &tr);
        assert_eq!(
            f,
            InterfaceFlux {
                v: 2.0,
                v_x: 1.0,
                moment: 0.0,
                shear: 3.0
            }
        );
    }

    #[test]
    fn alternating_picks_sides() {
        let tr = TraceData {
            minus: Trace {
                v: 1.0,
                v_x: 2.0,
                moment: -1.0,
                shear: 4.0,
            },
            plus: Trace {
                v: 3.0,
                v_x: 0.0,
                moment: 1.0,
                shear: 2.0,
            },
        };
        let f = interface_flux(&FluxSpec::alternating(), &tr);
        assert_eq!(f.v, tr.plus.v);
        assert_eq!(f.v_x, tr.plus.v_x);
        assert_eq!(f.moment, tr.minus.moment);
        assert_eq!(f.shear, tr.minus.shear);
    }

    #[test]
    fn upwind_example() {
        let tr = TraceData {
            minus: Trace {
                v: 2.0,
                v_x: 0.0,
                moment: 0.0,
                shear: 1.0,
            },
            plus: Trace {
                v: 0.0,
                v_x: 0.0,
                moment: 0.0,
                shear: -1.0,
            },
        };
        let f = interface_flux(&FluxSpec::upwind(), &tr);
        assert_abs_diff_eq!(f.v, 2.0);

        let tr = TraceData {
            minus: Trace {
                v: 2.0,
                ..Default::default()
            },
            plus: Trace::default(),
        };
        assert_abs_diff_eq!(interface_energy_flux(&FluxSpec::upwind(), &tr), -2.0);
    }

    #[test]
    fn energy_flux_closed_form_matches_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let spec = random_spec(&mut rng);
            let tr = TraceData {
                minus: random_trace(&mut rng),
                plus: random_trace(&mut rng),
            };
            let j = interface_energy_flux(&spec, &tr);
            let direct = interface_energy_bracket(&tr, &interface_flux(&spec, &tr));
            assert!(
                (j - direct).abs() < 1e-11 * (1.0 + j.abs()),
                "{j} vs {direct}"
            );
        }
    }

    #[test]
    fn consistency_conservation_and_dissipation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let spec = random_spec(&mut rng);
            let t = random_trace(&mut rng);
            let same = TraceData { minus: t, plus: t };
            let f = interface_flux(&spec, &same);
            assert!((f.v - t.v).abs() < 1e-14 && (f.v_x - t.v_x).abs() < 1e-14);
            assert!((f.moment - t.moment).abs() < 1e-14 && (f.shear - t.shear).abs() < 1e-14);
            assert_eq!(interface_energy_flux(&spec, &same), 0.0);

            let tr = TraceData {
                minus: random_trace(&mut rng),
                plus: random_trace(&mut rng),
            };
            let j = interface_energy_flux(&spec, &tr);
            assert!(j <= 0.0);
            if spec.is_conservative() {
                assert_eq!(j, 0.0);
            } else {
                assert!(j < 0.0);
            }
        }
        for (a1, a2) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (0.5, 0.5)] {
            let spec = FluxSpec::custom(a1, a2, 0.0, 0.0, 0.0, 0.0);
            let tr = TraceData {
                minus: random_trace(&mut rng),
                plus: random_trace(&mut rng),
            };
            let direct = interface_energy_bracket(&tr, &interface_flux(&spec, &tr));
            assert!(direct.abs() < 1e-12);
        }
    }

    #[test]
    fn simply_supported_left_boundary() {
        let t = Trace {
            v: 2.0,
            v_x: 0.7,
            moment: 3.0,
            shear: -1.0,
        };
        let f = boundary_flux(
            BoundaryEnd::Left,
            BoundaryType::SimplySupported,
            0.0,
            0.0,
            &t,
        );
        assert_eq!(f.v, 0.0);
        assert_eq!(f.moment, 0.0);
        assert_eq!(f.v_x, 0.7);
        assert_eq!(f.shear, -1.0);
        let zero = boundary_flux(
            BoundaryEnd::Right,
            BoundaryType::Clamped,
            0.3,
            0.4,
            &Trace::<f64>::default(),
        );
        assert_eq!(zero, InterfaceFlux::default());
    }

    #[test]
    fn boundary_fluxes_satisfy_end_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let t = random_trace(&mut rng);
            let eta1 = rng.gen_range(-2.0..2.0);
            let eta2 = rng.gen_range(-2.0..2.0);
            for bc in BoundaryType::ALL {
                let (a1, b1, a2, b2) = bc.coefficients();
                let l = boundary_flux(BoundaryEnd::Left, bc, eta1, eta2, &t);
                assert!((-a1 * l.v_x + b1 * l.moment).abs() < 1e-12);
                assert!((a2 * l.v + b2 * l.shear).abs() < 1e-12);
                let r = boundary_flux(BoundaryEnd::Right, bc, eta1, eta2, &t);
                assert!((a1 * r.v_x + b1 * r.moment).abs() < 1e-12);
                assert!((a2 * r.v - b2 * r.shear).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_energy_rate_examples() {
        let t = Trace {
            v: 2.0,
            v_x: 1.0,
            moment: 0.5,
            shear: 0.3,
        };
        for bc in BoundaryType::ALL {
            assert_eq!(boundary_energy_rate(bc, 0.0, 0.0, &t), 0.0);
        }
        let t = Trace {
            v: 2.0,
            ..Default::default()
        };
        assert_abs_diff_eq!(
            boundary_energy_rate(BoundaryType::SimplySupported, 0.0, 1.0, &t),
            -4.0
        );
    }

    #[test]
    fn boundary_energy_rate_matches_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let t = random_trace(&mut rng);
            let eta1 = rng.gen_range(-2.0..2.0);
            let eta2 = rng.gen_range(-2.0..2.0);
            for bc in BoundaryType::ALL {
                let rate = boundary_energy_rate(bc, eta1, eta2, &t);
                for end in [BoundaryEnd::Left, BoundaryEnd::Right] {
                    let f = boundary_flux(end, bc, eta1, eta2, &t);
                    let direct = boundary_energy_bracket(end, &t, &f);
                    assert!(
                        (rate - direct).abs() < 1e-12 * (1.0 + rate.abs()),
                        "{bc} {end:?}"
                    );
                }
                if bc.admits_eta(eta1, eta2) {
                    assert!(rate <= 0.0);
                }
            }
        }
    }

    #[test]
    fn linear_forms_follow_numeric_fluxes() {
        // Each trace quantity is a coordinate functional of an 8-vector.
        let coord = |i| LinearForm(vec![(i, 1.0)]);
        let sym = TraceData {
            minus: Trace {
                v: coord(0),
                v_x: coord(1),
                moment: coord(2),
                shear: coord(3),
            },
            plus: Trace {
                v: coord(4),
                v_x: coord(5),
                moment: coord(6),
                shear: coord(7),
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let spec = random_spec(&mut rng);
            let y: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let num = TraceData {
                minus: Trace {
                    v: y[0],
                    v_x: y[1],
                    moment: y[2],
                    shear: y[3],
                },
                plus: Trace {
                    v: y[4],
                    v_x: y[5],
                    moment: y[6],
                    shear: y[7],
                },
            };
            let fs = interface_flux(&spec, &sym);
            let fn_ = interface_flux(&spec, &num);
            assert_abs_diff_eq!(fs.v.eval(&y), fn_.v, epsilon = 1e-14);
            assert_abs_diff_eq!(fs.shear.eval(&y), fn_.shear, epsilon = 1e-14);
            assert_abs_diff_eq!(fs.moment.eval(&y), fn_.moment, epsilon = 1e-14);
            assert_abs_diff_eq!(fs.v_x.eval(&y), fn_.v_x, epsilon = 1e-14);
        }
    }

    #[test]
    fn validation() {
        assert!(FluxSpec::upwind().validate().is_ok());
        assert!(matches!(
            FluxSpec::custom(1.5, 0.0, 0.0, 0.0, 0.0, 0.0).validate(),
            Err(FluxError::AlphaRange { index: 1, .. })
        ));
        assert!(matches!(
            FluxSpec::custom(0.5, 0.5, 0.0, -1.0, 0.0, 0.0).validate(),
            Err(FluxError::NegativePenalty { name: "beta2", .. })
        ));
        let s = FluxSpec::central().with_eta(1.0, 0.0);
        assert!(s
            .validate_boundaries(BoundaryType::SimplySupported, BoundaryType::SimplySupported)
            .is_err());
        assert!(s
            .validate_boundaries(BoundaryType::Clamped, BoundaryType::Sliding)
            .is_ok());
        assert!(FluxSpec::preset("upwind").unwrap() == FluxSpec::upwind());
    }

    #[test]
    fn alternating_cases_by_name() {
        assert_eq!(
            FluxSpec::preset("alternating-a").unwrap(),
            FluxSpec::alternating()
        );
        let b = FluxSpec::preset("alternating-b").unwrap();
        assert_eq!((b.alpha1, b.alpha2), (0.0, 1.0));
        let d = FluxSpec::preset(" alternating-d ").unwrap();
        assert_eq!((d.alpha1, d.alpha2), (1.0, 1.0));
        assert!(d.is_conservative());
        for bad in ["alternating-e", "alternating-", "alternating-ab", "upwinds"] {
            assert_eq!(
                FluxSpec::preset(bad),
                Err(FluxError::UnknownPreset(bad.to_string()))
            );
        }
    }
}
