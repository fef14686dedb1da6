//! Browser bindings for the beamdg solver: energy curves, solution profiles
//! and small convergence studies.

use beamdg::cli::{sample_solution, ExperimentConfig};
use beamdg::diagnostics::{convergence_rates, error_norms, project_initial_data};
use beamdg::mesh::Mesh1D;
use beamdg::operator::{assemble, discrete_energy, DGState, SemiDiscreteSystem};
use beamdg::problem::BeamProblem;
use beamdg::sdc::{integrate, SdcConfig};
use wasm_bindgen::prelude::*;

/// Largest element count accepted from the page.
pub const MAX_ELEMENTS: usize = 160;

/// Three parallel columns handed to JavaScript as `Float64Array`s.
#[wasm_bindgen]
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

#[wasm_bindgen]
impl Series {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn z(&self) -> Vec<f64> {
        self.z.clone()
    }
}

impl Series {
    pub fn columns(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.x, &self.y, &self.z)
    }
}

struct Setup {
    config: ExperimentConfig,
    problem: BeamProblem,
    sdc: SdcConfig,
}

fn setup(
    problem: &str,
    flux: &str,
    q: usize,
    s: usize,
    ns: &[usize],
    t_final: f64,
) -> Result<Setup, String> {
    if ns.iter().any(|&n| n > MAX_ELEMENTS) {
        return Err(format!("at most {MAX_ELEMENTS} elements"));
    }
    let n_list: Vec<String> = ns.iter().map(usize::to_string).collect();
    let text = format!(
        "problem = {problem}\nflux = {flux}\nq = {q}\ns = {s}\nn = {}\nt_final = {t_final}\n",
        n_list.join(", ")
    );
    let config: ExperimentConfig = text.parse().map_err(|e| format!("{e}"))?;
    let problem = config.problem().map_err(|e| e.to_string())?;
    let sdc = SdcConfig::new(config.sdc_m, config.sdc_sweeps).map_err(|e| e.to_string())?;
    Ok(Setup {
        config,
        problem,
        sdc,
    })
}

fn prepare(setup: &Setup, n: usize) -> Result<(Mesh1D, SemiDiscreteSystem, DGState, f64), String> {
    let c = &setup.config;
    let mesh = Mesh1D::uniform(setup.problem.a, setup.problem.b, n).map_err(|e| e.to_string())?;
    let (_, sys) = assemble(setup.problem.clone(), mesh.clone(), c.q, c.s, c.flux_spec)
        .map_err(|e| e.to_string())?;
    let y0 = project_initial_data(&setup.problem, &mesh, c.q, c.s).map_err(|e| e.to_string())?;
    let dt = c.time_step.for_mesh_width(mesh.h_min());
    Ok((mesh, sys, y0, dt))
}

/// `x` = time, `y` = discrete energy, `z` = relative change from `t = 0`,
/// sampled at most `max_points` times.
pub fn energy_curve(
    problem: &str,
    flux: &str,
    q: usize,
    s: usize,
    n: usize,
    t_final: f64,
    max_points: usize,
) -> Result<Series, String> {
    let setup = setup(problem, flux, q, s, &[n], t_final)?;
    let (_, sys, y0, dt) = prepare(&setup, n)?;
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let stride = steps.div_ceil(max_points.max(2) - 1).max(1);
    let mut out = Series::default();
    let mut count = 0usize;
    integrate(&sys, &setup.sdc, y0.as_slice(), 0.0, t_final, dt, |t, y| {
        if count.is_multiple_of(stride) || t == t_final {
            out.x.push(t);
            out.y.push(discrete_energy(&sys, y));
        }
        count += 1;
    })
    .map_err(|e| e.to_string())?;
    let e0 = out.y[0];
    out.z = out
        .y
        .iter()
        .map(|e| if e0 != 0.0 { (e - e0) / e0 } else { e - e0 })
        .collect();
    Ok(out)
}

/// `x` = sample points, `y` = `u^h(x, t)`, `z` = exact `u(x, t)`.
pub fn solution_profile(
    problem: &str,
    flux: &str,
    q: usize,
    s: usize,
    n: usize,
    t: f64,
    samples_per_element: usize,
) -> Result<Series, String> {
    let setup = setup(problem, flux, q, s, &[n], t)?;
    let (mesh, sys, y0, dt) = prepare(&setup, n)?;
    let y = integrate(&sys, &setup.sdc, y0.as_slice(), 0.0, t, dt, |_, _| {})
        .map_err(|e| e.to_string())?;
    let state = DGState::from_vec(y0.layout(), y);
    let samples = sample_solution(&state, &setup.problem, &mesh, t, samples_per_element.max(2));
    Ok(Series {
        x: samples.iter().map(|p| p.x).collect(),
        y: samples.iter().map(|p| p.u_h).collect(),
        z: samples.iter().map(|p| p.u_exact).collect(),
    })
}

/// `x` = `N`, `y` = energy-norm error at `t_final`, `z` = observed rate
/// (`NaN` on the first row). `N` starts at 10 and doubles `levels - 1` times.
pub fn convergence_study(
    problem: &str,
    flux: &str,
    q: usize,
    s: usize,
    levels: usize,
    t_final: f64,
) -> Result<Series, String> {
    let ns: Vec<usize> = (0..levels.max(2)).map(|i| 10 << i).collect();
    let setup = setup(problem, flux, q, s, &ns, t_final)?;
    let mut errors = Vec::with_capacity(ns.len());
    for &n in &ns {
        let (mesh, sys, y0, dt) = prepare(&setup, n)?;
        let y = integrate(&sys, &setup.sdc, y0.as_slice(), 0.0, t_final, dt, |_, _| {})
            .map_err(|e| e.to_string())?;
        let state = DGState::from_vec(y0.layout(), y);
        let report =
            error_norms(&state, &setup.problem, &mesh, t_final).map_err(|e| e.to_string())?;
        errors.push((n, report.energy));
    }
    let table = convergence_rates(&errors).map_err(|e| e.to_string())?;
    Ok(Series {
        x: table.rows.iter().map(|r| r.n as f64).collect(),
        y: table.rows.iter().map(|r| r.error).collect(),
        z: table
            .rows
            .iter()
            .map(|r| r.rate.unwrap_or(f64::NAN))
            .collect(),
    })
}

fn to_js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = energyCurve)]
pub fn energy_curve_js(
    problem: &str,
    flux: &str,
    q: usize,
    s: usize,
    n: usize,
    t_final: f64,
    max_points: usize,
) -> Result<Series, JsError> {
    to_js(energy_curve(problem, flux, q, s, n, t_final, max_points))
}

#[wasm_bindgen(js_name = solutionProfile)]
pub fn solution_profile_js(
    problem: &str,
    flux: &str,
    q: usize,
    s: usize,
    n: usize,
    t: f64,
    samples_per_element: usize,
) -> Result<Series, JsError> {
    to_js(solution_profile(
        problem,
        flux,
        q,
        s,
        n,
        t,
        samples_per_element,
    ))
}

#[wasm_bindgen(js_name = convergenceStudy)]
pub fn convergence_study_js(
    problem: &str,
    flux: &str,
    q: usize,
    s: usize,
    levels: usize,
    t_final: f64,
) -> Result<Series, JsError> {
    to_js(convergence_study(problem, flux, q, s, levels, t_final))
}
