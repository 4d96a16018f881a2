//! Ensemble properties of the three backends.

use qubit_purification::analytic::DensityKind;
use qubit_purification::integrator::{run_ensemble, Backend, BoundaryPolicy, SimConfig};
use qubit_purification::stats::{compare_snapshot, ks_two_sample, mean_and_stderr};
use qubit_purification::Rate;

fn config(backend: Backend, n_traj: usize, dt: f64, times: &[f64], seed: u64) -> SimConfig {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    SimConfig {
        eta: Rate::new(1.0).unwrap(),
        dt,
        n_steps: (t_max / dt).round() as usize,
        n_traj,
        master_seed: seed,
        backend,
        snapshot_times: times.to_vec(),
        boundary_policy: BoundaryPolicy::RecordOnly,
        initial_q: None,
    }
}

#[test]
fn every_backend_is_a_martingale() {
    let times = [0.1, 0.5, 1.0, 1.5];
    for (backend, n) in [
        (Backend::LangevinState, 20_000),
        (Backend::LangevinTransformed, 20_000),
        (Backend::Collisional, 4_000),
    ] {
        for snap in run_ensemble(&config(backend, n, 1e-3, &times, 17)).unwrap() {
            let (mean, se) = mean_and_stderr(&snap.state_values());
            assert!(
                mean.abs() <= 3.0 * se,
                "{backend} t={}: {mean} ± {se}",
                snap.time
            );
        }
    }
}

#[test]
fn martingale_from_an_offset_start() {
    let mut c = config(Backend::LangevinState, 20_000, 1e-3, &[1.0], 3);
    c.initial_q = Some(0.4);
    let snap = &run_ensemble(&c).unwrap()[0];
    let (mean, se) = mean_and_stderr(&snap.values);
    assert!((mean - 0.4).abs() <= 3.0 * se, "{mean} ± {se}");
}

#[test]
fn state_backend_stays_in_the_envelope() {
    for &dt in &[1e-3, 5e-3, 1e-2, 0.02] {
        let times: Vec<f64> = (1..=20).map(|i| i as f64 * 20.0 * dt).collect();
        for snap in run_ensemble(&config(Backend::LangevinState, 2_000, dt, &times, 9)).unwrap() {
            assert!(
                snap.values.iter().all(|q| q.abs() <= 1.0 + 10.0 * dt),
                "dt={dt} t={}",
                snap.time
            );
        }
    }
}

#[test]
fn no_excursions_at_the_reference_step() {
    let snaps = run_ensemble(&config(
        Backend::LangevinState,
        20_000,
        1e-3,
        &[0.5, 2.0],
        1,
    ))
    .unwrap();
    assert!(snaps.iter().all(|s| s.excursion_count == 0));
}

#[test]
fn state_and_transformed_backends_agree() {
    let n = 20_000;
    let a = run_ensemble(&config(Backend::LangevinState, n, 1e-3, &[1.0], 21)).unwrap();
    let b = run_ensemble(&config(Backend::LangevinTransformed, n, 1e-3, &[1.0], 22)).unwrap();
    let d = ks_two_sample(&a[0].state_values(), &b[0].state_values()).unwrap();
    assert!(d < 1.63 * (2.0 / n as f64).sqrt(), "two-sample KS {d}");
}

#[test]
fn collisional_backend_matches_the_exact_density() {
    let snap = &run_ensemble(&config(Backend::Collisional, 5_000, 1e-3, &[2.0], 8)).unwrap()[0];
    let report = compare_snapshot(snap, Rate::new(1.0).unwrap(), DensityKind::State).unwrap();
    assert!(report.ks_statistic < 0.03, "KS {}", report.ks_statistic);
    assert!(report.moment("mean_tau").unwrap().within(3.0));
}

#[test]
fn transformed_backend_matches_every_density() {
    let eta = Rate::new(1.0).unwrap();
    let snap = &run_ensemble(&config(
        Backend::LangevinTransformed,
        20_000,
        1e-3,
        &[0.8],
        4,
    ))
    .unwrap()[0];
    for which in [
        DensityKind::Transformed,
        DensityKind::Rate,
        DensityKind::State,
        DensityKind::Purity,
    ] {
        let r = compare_snapshot(snap, eta, which).unwrap();
        assert!(r.ks_statistic < 0.015, "{which}: KS {}", r.ks_statistic);
        assert!(r.moment("var_q").unwrap().within(3.0), "{which}");
    }
}
