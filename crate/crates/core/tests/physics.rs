use approx::assert_relative_eq;
use proptest::prelude::*;
use vibronic_core::fock::{self, PureState};
use vibronic_core::liouville::{build_liouvillian, propagate, standard_channels, steady_state};
use vibronic_core::model::{build_hamiltonian, DriveSelection, ModelParams};
use vibronic_core::observables::{photon_number_operator, reduce_vibrational, wigner, Branch, GridSpec};
use vibronic_core::semiclassical::{meanfield_steady_state, resonant_saturation};
use vibronic_core::trajectory::{ensemble_average, run_trajectories, RecordedObservable, TrajectoryConfig};

fn solve(p: &ModelParams, d: DriveSelection) -> vibronic_core::fock::DensityMatrix {
    let h = build_hamiltonian(p, d).unwrap();
    let lv = build_liouvillian(&h, &standard_channels(p).unwrap()).unwrap();
    steady_state(&lv).unwrap().rho
}

#[test]
fn weak_thz_drive_matches_mean_field_amplitude() {
    let p = ModelParams { g_s: 0.4f64.sqrt(), omega_thz_rabi: 1e-3, n_cutoff: 5, ..ModelParams::default() };
    let rho = solve(&p, DriveSelection::transducer());
    let b = rho.expectation(&fock::annihilation(p.spec().unwrap()));
    let mf = meanfield_steady_state(&p).unwrap();
    assert_relative_eq!(b.re, mf.b.re, epsilon = 1e-6);
    assert_relative_eq!(b.im, mf.b.im, max_relative = 1e-3);
}

#[test]
fn zpl_drive_relaxes_to_the_closed_form_population() {
    let p = ModelParams { omega_zpl_rabi: 0.1, delta0: 0.02, n_cutoff: 2, ..ModelParams::default() };
    let spec = p.spec().unwrap();
    let h = build_hamiltonian(&p, DriveSelection::zpl_only()).unwrap();
    let lv = build_liouvillian(&h, &standard_channels(&p).unwrap()).unwrap();
    let rho0 = PureState::basis(spec.dim(), spec.index(0, 0)).to_density();
    let late = propagate(&lv, &rho0, &[300.0]).unwrap().pop().unwrap();
    let want = resonant_saturation(p.omega_zpl_rabi, p.delta0, p.gamma0).unwrap().population;
    assert_relative_eq!(late.expectation(&fock::excited_projector(spec)).re, want, epsilon = 1e-6);
}

#[test]
fn branch_numbers_sum_to_the_sideband_expansion() {
    let p = ModelParams { g_s: 10.0, g_as: 5.0, n_cutoff: 12, ..ModelParams::default() };
    let spec = p.spec().unwrap();
    let rho = solve(&p, DriveSelection::generalized_rabi());
    let n = |b| rho.expectation(&photon_number_operator(spec, p.eta, b)).re;
    let pe = rho.expectation(&fock::excited_projector(spec)).re;
    // Stokes minus anti-Stokes is η²⟨σ†σ⟩ by construction of the branches.
    assert_relative_eq!(n(Branch::Stokes) - n(Branch::AntiStokes), p.eta * p.eta * pe, epsilon = 1e-12);
    assert_relative_eq!(n(Branch::Zpl), pe, epsilon = 1e-12);
}

#[test]
fn trajectory_average_tracks_master_equation_for_jaynes_cummings() {
    let p = ModelParams { g_s: 8.0, omega_zpl_rabi: 2.0, n_cutoff: 6, ..ModelParams::default() };
    let spec = p.spec().unwrap();
    let h = build_hamiltonian(&p, DriveSelection::jc_with_zpl()).unwrap();
    let ch = standard_channels(&p).unwrap();
    let mut cfg = TrajectoryConfig::new(400, 0.4, 0.002, 3);
    cfg.record_stride = 50;
    cfg.observables = vec![RecordedObservable::new("excited", fock::excited_projector(spec))];
    let psi0 = PureState::basis(spec.dim(), spec.index(0, 0));
    let recs = run_trajectories(&h, &ch, &psi0, &cfg).unwrap();
    let avg = ensemble_average(&recs, 0).unwrap();
    let lv = build_liouvillian(&h, &ch).unwrap();
    let exact = propagate(&lv, &psi0.to_density(), &avg.times[1..]).unwrap();
    for (k, rho) in exact.iter().enumerate() {
        let want = rho.expectation(&fock::excited_projector(spec)).re;
        assert!((avg.mean[k + 1] - want).abs() <= 4.0 * avg.stderr[k + 1] + 1e-9, "t = {}", avg.times[k + 1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn steady_states_are_physical_and_wigner_normalized(
        g_s in 0.0f64..15.0,
        g_as in 0.0f64..15.0,
        om in 0.0f64..3.0,
        d in -5.0f64..5.0,
    ) {
        let p = ModelParams { g_s, g_as, omega_zpl_rabi: om, delta0: d, delta_v: d, n_cutoff: 8, ..ModelParams::default() };
        let drives = DriveSelection { zpl: true, stokes: true, anti_stokes: true, ..DriveSelection::none() };
        let rho = solve(&p, drives);
        let rep = rho.check();
        prop_assert!(rep.is_physical(), "{rep:?}");
        let rho_v = reduce_vibrational(&rho, p.spec().unwrap()).unwrap();
        let w = wigner(&rho_v, &GridSpec::symmetric(7.0, 71)).unwrap();
        prop_assert!((w.integral() - 1.0).abs() < 1e-3);
        prop_assert!(w.max_abs() <= 2.0 / std::f64::consts::PI + 1e-9);
    }
}
