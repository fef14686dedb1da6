use std::process::Command;

use beamdg::cli::{
    run_convergence, run_energy_history, run_solve, sample_solution, ExperimentConfig,
    CONVERGENCE_HEADER, ENERGY_HEADER, SOLUTION_HEADER,
};
use beamdg::diagnostics::project_initial_data;
use beamdg::mesh::Mesh1D;

fn config(text: &str) -> ExperimentConfig {
    text.parse().unwrap()
}

#[test]
fn golden_headers() {
    assert_eq!(
        CONVERGENCE_HEADER,
        "N,q,s,flux,err_energy,err_L2_u,err_L2_v,err_H2_u,rate_energy,rate_L2_u,rate_L2_v,rate_H2_u"
    );
    assert_eq!(SOLUTION_HEADER, "x,u_h,u_exact,error");
    assert_eq!(ENERGY_HEADER, "t,energy,relative_change");

    let c = config("n = 4, 8\nq = 3\ns = 1\nt_final = 0.1\nflux = upwind");
    let out = run_convergence(&c).unwrap();
    let csv = out.file("convergence.csv").unwrap();
    assert_eq!(csv.lines().next(), Some(CONVERGENCE_HEADER));
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("8,3,1,upwind,"));

    let out = run_solve(&c).unwrap();
    assert_eq!(
        out.file("solution_N4.csv").unwrap().lines().next(),
        Some(SOLUTION_HEADER)
    );
    let out = run_energy_history(&c).unwrap();
    assert_eq!(
        out.file("energy_history_N8.csv").unwrap().lines().next(),
        Some(ENERGY_HEADER)
    );
    assert!(out
        .file("energy_history_N8.svg")
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let c = config("problem = nonuniform-beam\nn = 5, 10, 20\nq = 4\ns = 2\nt_final = 0.5\nreport_times = 0.25");
    let a = run_convergence(&c).unwrap();
    let b = run_convergence(&c).unwrap();
    assert_eq!(a.files, b.files);
    let a = run_solve(&c).unwrap();
    let b = run_solve(&c).unwrap();
    assert_eq!(a.files, b.files);
    assert_eq!(a.record.case(10).unwrap().reports.len(), 2);
}

#[test]
fn solve_at_time_zero_samples_the_projection() {
    let c = config("n = 6\nq = 5\ns = 3\nt_final = 0\nsamples_per_element = 7");
    let out = run_solve(&c).unwrap();
    let csv = out.file("solution_N6.csv").unwrap();
    assert_eq!(csv.lines().count(), 1 + 6 * 7);

    let p = c.problem().unwrap();
    let mesh = Mesh1D::uniform(0.0, 10.0, 6).unwrap();
    let st = project_initial_data(&p, &mesh, 5, 3).unwrap();
    let samples = sample_solution(&st, &p, &mesh, 0.0, 7);
    for (line, s) in csv.lines().skip(1).zip(&samples) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[0], s.x);
        assert_eq!(f[1], s.u_h);
        assert!((f[3] - (s.u_exact - s.u_h)).abs() == 0.0);
    }
    assert!(out.record.case(6).unwrap().max_abs_error.unwrap() < 1e-3);
}

#[test]
fn zero_data_gives_zero_energy_history() {
    let c = config("initial = zero\nn = 8\nt_final = 2");
    let out = run_energy_history(&c).unwrap();
    let h = out.record.case(8).unwrap().history.as_ref().unwrap();
    assert!(h.energies.iter().all(|&e| e == 0.0));
    assert_eq!(h.times.last(), Some(&2.0));
    assert!(run_convergence(&c).is_err());
}

#[test]
fn energy_stride_thins_the_history() {
    let c = config("n = 4\ndt = 0.1\nt_final = 1\nenergy_stride = 3\nflux = central");
    let h = run_energy_history(&c).unwrap().record.cases[0]
        .history
        .clone()
        .unwrap();
    assert_eq!(h.times.len(), 5);
    assert_eq!(h.times.last(), Some(&1.0));
    assert!(h.max_relative_drift < 1e-8);
}

#[test]
fn convergence_requires_doubling() {
    assert!(run_convergence(&config("n = 10, 30")).is_err());
}

#[test]
fn binary_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# quick run\nname = quick\nn = 4, 8\nq = 3\ns = 1\nt_final = 0.05\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_beamdg"))
        .args(["convergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(out.join("quick.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("quick.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["q"], 3);
    assert_eq!(json["cases"].as_array().unwrap().len(), 2);

    std::fs::write(&cfg, "q = 1\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_beamdg"))
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(env!("CARGO_BIN_EXE_beamdg"))
        .args(["energy-history", "--config", "/nonexistent/run.cfg"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
