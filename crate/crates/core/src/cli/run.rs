//! Convergence, energy-history and solution-profile experiments.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{
    convergence_rates, error_norms, project_initial_data, DiagnosticsError, ErrorReport,
};
use crate::mesh::{Mesh1D, MeshError};
use crate::operator::{assemble, discrete_energy, DGState, OperatorError, SemiDiscreteSystem};
use crate::problem::BeamProblem;
use crate::sdc::{integrate, SdcConfig, SdcError};

use super::config::{ConfigError, ExperimentConfig};
use super::output::{
    convergence_csv, energy_csv, line_plot_svg, solution_csv, ConvergenceRow, SolutionSample,
};

/// Failure of a single `N` case; other cases still run.
#[derive(Debug, Error)]
pub enum CaseError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Sdc(#[from] SdcError),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct TimedReport {
    pub t: f64,
    pub report: ErrorReport,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EnergyHistory {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// `max |E - E₀| / E₀`.
    pub max_relative_drift: f64,
    /// Largest step-to-step increase `max (E_{k+1} - E_k) / E₀`.
    pub max_relative_increase: f64,
}

impl EnergyHistory {
    fn new(times: Vec<f64>, energies: Vec<f64>) -> Self {
        let e0 = energies.first().copied().unwrap_or(0.0);
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        let max_relative_drift = energies
            .iter()
            .map(|e| (e - e0).abs() / scale)
            .fold(0.0, f64::max);
        let max_relative_increase = energies
            .windows(2)
            .map(|w| (w[1] - w[0]) / scale)
            .fold(0.0, f64::max);
        Self {
            times,
            energies,
            max_relative_drift,
            max_relative_increase,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub n: usize,
    pub h_min: f64,
    pub dt: f64,
    pub seconds: f64,
    /// `None` on success.
    pub failure: Option<String>,
    pub reports: Vec<TimedReport>,
    pub history: Option<EnergyHistory>,
    /// `max |u - u^h|` over the sample points of a solve run.
    pub max_abs_error: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RateColumns {
    pub energy: Vec<Option<f64>>,
    pub l2_u: Vec<Option<f64>>,
    pub l2_v: Vec<Option<f64>>,
    pub h2_u: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config: ExperimentConfig,
    pub cases: Vec<CaseRecord>,
    pub rates: Option<RateColumns>,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        self.cases.iter().any(|c| c.failure.is_some())
    }

    pub fn case(&self, n: usize) -> Option<&CaseRecord> {
        self.cases.iter().find(|c| c.n == n)
    }
}

/// A run's record plus the files it produces, keyed by file name.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    /// Writes every file and `<stem>.json` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        let json = serde_json::to_string_pretty(&self.record).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n")
    }
}

struct Case {
    problem: BeamProblem,
    mesh: Mesh1D,
    system: SemiDiscreteSystem,
    initial: DGState,
    dt: f64,
}

fn prepare(config: &ExperimentConfig, problem: &BeamProblem, n: usize) -> Result<Case, CaseError> {
    let mesh = Mesh1D::uniform(problem.a, problem.b, n)?;
    let (_, system) = assemble(
        problem.clone(),
        mesh.clone(),
        config.q,
        config.s,
        config.flux_spec,
    )?;
    let initial = project_initial_data(problem, &mesh, config.q, config.s)?;
    let dt = config.time_step.for_mesh_width(mesh.h_min());
    Ok(Case {
        problem: problem.clone(),
        mesh,
        system,
        initial,
        dt,
    })
}

fn check_finite(t: f64, y: &[f64]) -> Result<(), CaseError> {
    if y.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(CaseError::NonFinite(t))
    }
}

/// Integrates through each of `stops` in turn, calling `at_stop` at every one.
/// With `stride > 0` the energy is sampled every `stride` steps of each leg.
fn march(
    case: &Case,
    sdc: &SdcConfig,
    stops: &[f64],
    stride: usize,
    mut at_stop: impl FnMut(f64, &DGState) -> Result<(), CaseError>,
) -> Result<(DGState, EnergyHistory), CaseError> {
    let layout = case.initial.layout();
    let mut y = case.initial.as_slice().to_vec();
    let mut t = 0.0;
    let (mut times, mut energies) = (Vec::new(), Vec::new());
    if stride > 0 {
        times.push(0.0);
        energies.push(discrete_energy(&case.system, &y));
    }
    for &stop in stops {
        if stop > t {
            let mut count = 0usize;
            y = integrate(&case.system, sdc, &y, t, stop, case.dt, |ts, ys| {
                if stride > 0 && count > 0 && (count.is_multiple_of(stride) || ts == stop) {
                    times.push(ts);
                    energies.push(discrete_energy(&case.system, ys));
                }
                count += 1;
            })?;
            t = stop;
        }
        check_finite(t, &y)?;
        at_stop(t, &DGState::from_vec(layout, y.clone()))?;
    }
    Ok((
        DGState::from_vec(layout, y),
        EnergyHistory::new(times, energies),
    ))
}

struct CaseResult<T> {
    record: CaseRecord,
    result: Result<T, CaseError>,
}

impl<T> CaseResult<T> {
    /// The record, with the failure filled in, and the successful value if any.
    fn split(self) -> (CaseRecord, Option<T>) {
        let mut record = self.record;
        match self.result {
            Ok(v) => (record, Some(v)),
            Err(e) => {
                record.failure = Some(e.to_string());
                (record, None)
            }
        }
    }
}

fn run_cases<T: Send>(
    config: &ExperimentConfig,
    body: impl Fn(&Case, &SdcConfig) -> Result<T, CaseError> + Sync,
) -> Result<Vec<CaseResult<T>>, ConfigError> {
    let problem = config.problem()?;
    let sdc = SdcConfig::new(config.sdc_m, config.sdc_sweeps)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(config
        .n
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let mesh_h = (problem.b - problem.a) / n as f64;
            let prepared = prepare(config, &problem, n);
            let (h_min, dt) = match &prepared {
                Ok(c) => (c.mesh.h_min(), c.dt),
                Err(_) => (mesh_h, config.time_step.for_mesh_width(mesh_h)),
            };
            let result = prepared.and_then(|case| body(&case, &sdc));
            let record = CaseRecord {
                n,
                h_min,
                dt,
                seconds: start.elapsed().as_secs_f64(),
                failure: None,
                reports: Vec::new(),
                history: None,
                max_abs_error: None,
            };
            CaseResult { record, result }
        })
        .collect())
}

/// Rate between consecutive successful rows; `None` after a failed row.
fn rate_column(ns: &[usize], errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; ns.len()];
    for i in 1..ns.len() {
        let pair = [(ns[i - 1], errors[i - 1]), (ns[i], errors[i])];
        if pair.iter().all(|(_, e)| e.is_finite()) {
            if let Ok(t) = convergence_rates(&pair) {
                out[i] = t.last_rate();
            }
        }
    }
    out
}

/// For each `N`: mesh, assemble, project, integrate to `t_final`, measure
/// errors at every report time, then rates between successive levels.
pub fn run_convergence(config: &ExperimentConfig) -> Result<RunOutput, ConfigError> {
    if !config.n.windows(2).all(|w| w[1] == 2 * w[0]) {
        return Err(ConfigError::Invalid(
            "convergence runs need `n` to double from level to level".into(),
        ));
    }
    if config.initial != super::config::InitialData::Projected {
        return Err(ConfigError::Invalid(
            "convergence runs need `initial = projected`".into(),
        ));
    }
    let results = run_cases(config, |case, sdc| {
        let mut reports = Vec::new();
        march(case, sdc, &config.report_times, 0, |t, st| {
            reports.push(TimedReport {
                t,
                report: error_norms(st, &case.problem, &case.mesh, t)?,
            });
            Ok(())
        })?;
        Ok(reports)
    })?;

    let mut cases = Vec::with_capacity(results.len());
    for case in results {
        let (mut rec, reports) = case.split();
        rec.reports = reports.unwrap_or_default();
        cases.push(rec);
    }
    let metric = |f: fn(&ErrorReport) -> f64| -> Vec<f64> {
        cases
            .iter()
            .map(|c| c.reports.last().map_or(f64::NAN, |r| f(&r.report)))
            .collect()
    };
    let errors = [
        metric(|r| r.energy),
        metric(|r| r.l2_u),
        metric(|r| r.l2_v),
        metric(|r| r.h2_u),
    ];
    let rates: Vec<Vec<Option<f64>>> = errors.iter().map(|e| rate_column(&config.n, e)).collect();
    let rows: Vec<ConvergenceRow> = (0..cases.len())
        .map(|i| ConvergenceRow {
            n: cases[i].n,
            errors: [errors[0][i], errors[1][i], errors[2][i], errors[3][i]],
            rates: [rates[0][i], rates[1][i], rates[2][i], rates[3][i]],
        })
        .collect();
    let csv = convergence_csv(config.q, config.s, &config.flux, &rows);
    let mut rates = rates.into_iter();
    let columns = RateColumns {
        energy: rates.next().unwrap_or_default(),
        l2_u: rates.next().unwrap_or_default(),
        l2_v: rates.next().unwrap_or_default(),
        h2_u: rates.next().unwrap_or_default(),
    };
    Ok(RunOutput {
        record: RunRecord {
            command: "convergence".into(),
            config: config.clone(),
            cases,
            rates: Some(columns),
        },
        files: vec![(format!("{}.csv", config.stem("convergence")), csv)],
    })
}

/// Records `E^h(t)` to `t_final` for each `N`, with a CSV and an SVG plot per case.
pub fn run_energy_history(config: &ExperimentConfig) -> Result<RunOutput, ConfigError> {
    let results = run_cases(config, |case, sdc| {
        let (_, history) = march(
            case,
            sdc,
            &[config.t_final],
            config.energy_stride,
            |_, _| Ok(()),
        )?;
        Ok(history)
    })?;
    let stem = config.stem("energy_history");
    let mut cases = Vec::new();
    let mut files = Vec::new();
    for case in results {
        let (mut rec, history) = case.split();
        let n = rec.n;
        if let Some(history) = history {
            files.push((
                format!("{stem}_N{n}.csv"),
                energy_csv(&history.times, &history.energies),
            ));
            let title = format!(
                "Discrete energy, {} flux, N = {n}, q = {}, s = {}",
                config.flux, config.q, config.s
            );
            files.push((
                format!("{stem}_N{n}.svg"),
                line_plot_svg(&title, "t", "E", &history.times, &history.energies),
            ));
            rec.history = Some(history);
        }
        cases.push(rec);
    }
    Ok(RunOutput {
        record: RunRecord {
            command: "energy-history".into(),
            config: config.clone(),
            cases,
            rates: None,
        },
        files,
    })
}

/// Samples `u^h(t_final)` at `samples_per_element` equispaced points per element.
pub fn sample_solution(
    state: &DGState,
    problem: &BeamProblem,
    mesh: &Mesh1D,
    t: f64,
    per_element: usize,
) -> Vec<SolutionSample> {
    let mut out = Vec::with_capacity(mesh.n_elements() * per_element);
    for j in 0..mesh.n_elements() {
        for i in 0..per_element {
            let xi = if per_element == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (per_element - 1) as f64
            };
            let x = mesh.to_physical(j, xi);
            let u_exact = problem
                .exact
                .as_ref()
                .map_or(f64::NAN, |e| e.derivs(x, t).u);
            out.push(SolutionSample {
                x,
                u_h: state.eval_u(mesh, j, xi)[0],
                u_exact,
            });
        }
    }
    out
}

pub fn run_solve(config: &ExperimentConfig) -> Result<RunOutput, ConfigError> {
    let results = run_cases(config, |case, sdc| {
        let mut reports = Vec::new();
        let (state, _) = march(case, sdc, &config.report_times, 0, |t, st| {
            if case.problem.exact.is_some() {
                reports.push(TimedReport {
                    t,
                    report: error_norms(st, &case.problem, &case.mesh, t)?,
                });
            }
            Ok(())
        })?;
        let samples = sample_solution(
            &state,
            &case.problem,
            &case.mesh,
            config.t_final,
            config.samples_per_element,
        );
        Ok((reports, samples))
    })?;
    let stem = config.stem("solution");
    let mut cases = Vec::new();
    let mut files = Vec::new();
    for case in results {
        let (mut rec, value) = case.split();
        let n = rec.n;
        if let Some((reports, samples)) = value {
            rec.reports = reports;
            rec.max_abs_error = samples
                .iter()
                .map(|p| (p.u_exact - p.u_h).abs())
                .filter(|e| e.is_finite())
                .reduce(f64::max);
            files.push((format!("{stem}_N{n}.csv"), solution_csv(&samples)));
        }
        cases.push(rec);
    }
    Ok(RunOutput {
        record: RunRecord {
            command: "solve".into(),
            config: config.clone(),
            cases,
            rates: None,
        },
        files,
    })
}
