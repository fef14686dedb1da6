use beamdg::diagnostics::{
    convergence_rates, error_norms, error_norms_with_points, project_initial_data,
    quadrature_energy,
};
use beamdg::fluxes::FluxSpec;
use beamdg::mesh::Mesh1D;
use beamdg::operator::{assemble, discrete_energy, DGState};
use beamdg::problem::{preset_nonuniform_beam, preset_uniform_beam};
use beamdg::sdc::{integrate, SdcConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matrix_and_quadrature_energies_agree_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (p, n) in [(preset_uniform_beam(), 5), (preset_nonuniform_beam(), 40)] {
        for (q, s) in [(2, 0), (4, 2), (5, 5), (6, 4)] {
            let mesh = Mesh1D::uniform(0.0, 10.0, n).unwrap();
            let (_, sys) = assemble(p.clone(), mesh.clone(), q, s, FluxSpec::central()).unwrap();
            for _ in 0..20 {
                let y: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let a = discrete_energy(&sys, &y);
                let b = quadrature_energy(&DGState::from_vec(sys.layout, y), &p, &mesh).unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * b,
                    "{} q={q} s={s}: {a} vs {b}",
                    p.name
                );
            }
        }
    }
}

#[test]
fn error_norms_are_stable_under_over_integration() {
    let p = preset_nonuniform_beam();
    for q in 4..=6 {
        for n in [10, 20, 40, 80, 160] {
            let mesh = Mesh1D::uniform(0.0, 10.0, n).unwrap();
            let st = project_initial_data(&p, &mesh, q, q - 2).unwrap();
            let base = error_norms(&st, &p, &mesh, 0.0).unwrap();
            let fine = error_norms_with_points(&st, &p, &mesh, 0.0, 2 * (q + 6)).unwrap();
            for (a, b) in [
                (base.energy, fine.energy),
                (base.l2_u, fine.l2_u),
                (base.h2_u, fine.h2_u),
            ] {
                assert!((a - b).abs() <= 1e-3 * b, "q={q} N={n}: {a} vs {b}");
            }
        }
    }

    let mesh = Mesh1D::uniform(0.0, 10.0, 20).unwrap();
    let (_, sys) = assemble(p.clone(), mesh.clone(), 5, 3, FluxSpec::upwind()).unwrap();
    let y0 = project_initial_data(&p, &mesh, 5, 3).unwrap();
    let y = integrate(
        &sys,
        &SdcConfig::default(),
        y0.as_slice(),
        0.0,
        0.5,
        0.25,
        |_, _| {},
    )
    .unwrap();
    let st = DGState::from_vec(y0.layout(), y);
    let a = error_norms(&st, &p, &mesh, 0.5).unwrap().energy;
    let b = error_norms_with_points(&st, &p, &mesh, 0.5, 22)
        .unwrap()
        .energy;
    assert!((a - b).abs() <= 1e-3 * b);
}

#[test]
fn velocity_projection_converges_at_order_s_plus_one() {
    let p = preset_uniform_beam();
    for (q, s) in [(4, 2), (5, 3), (3, 1)] {
        let errors: Vec<(usize, f64)> = [10, 20, 40]
            .iter()
            .map(|&n| {
                let mesh = Mesh1D::uniform(0.0, 10.0, n).unwrap();
                let st = project_initial_data(&p, &mesh, q, s).unwrap();
                (n, error_norms(&st, &p, &mesh, 0.0).unwrap().l2_v)
            })
            .collect();
        let rate = convergence_rates(&errors).unwrap().last_rate().unwrap();
        assert!((rate - (s + 1) as f64).abs() < 0.1, "q={q} s={s}: {rate}");
    }
}
