use std::f64::consts::PI;

use gkp_sim::circuits::CircuitDescription;
use gkp_sim::circuits::ElementKind;
use gkp_sim::fock::{
    fock_apply_circuit, fock_breed, fock_displacement_ev, fock_homodyne_project, fock_loss, fock_squeezed_cat,
    fock_tensor, fock_wigner, mean_photon,
};
use gkp_sim::measurement::{stabilizer_ev, MeasurementPlan, StabilizerSpec};
use gkp_sim::phase_space::{apply_loss, displacement_ev, evaluate_wigner, LossSpec};
use gkp_sim::pipelines::bell_scenario;
use gkp_sim::states::{bred_gkp, squeezed_cat, BreedingParams};
use gkp_sim::EvalOptions;

const CUTOFF: usize = 80;

#[test]
fn breeding_matches_bred_state_displacement_values() {
    for m in 0..=2 {
        let p = BreedingParams::new(m, 4.0, 0.5);
        let fock = fock_breed(&p, CUTOFF).unwrap();
        assert!(fock.leakage() < 1e-6, "leakage {}", fock.leakage());
        let exact = bred_gkp(&p).unwrap();
        for rbar in [[2.0 * PI.sqrt(), 0.0], [0.0, 2.0 * PI.sqrt()], [0.7, -1.3], [2.5, 2.5]] {
            let a = fock_displacement_ev(&fock, &rbar).unwrap();
            let b = displacement_ev(&exact, &rbar).unwrap();
            assert!((a - b).norm() < 1e-9, "M={m} r={rbar:?}: fock {a} exact {b}");
        }
    }
}

#[test]
fn breeding_matches_bred_state_wigner() {
    let p = BreedingParams::new(1, 4.0, 0.5);
    let fock = fock_breed(&p, CUTOFF).unwrap();
    let exact = bred_gkp(&p).unwrap();
    for i in -6..=6 {
        for j in -4..=4 {
            let (x, q) = (0.45 * i as f64, 0.4 * j as f64);
            let a = fock_wigner(&fock, x, q).unwrap();
            let b = evaluate_wigner(&exact, &[x, q]).unwrap();
            assert!((a - b.re).abs() < 1e-6 && b.im.abs() < 1e-12, "({x}, {q}): {a} vs {b}");
        }
    }
}

#[test]
fn cat_photon_number_closed_form() {
    // (D(−a) + D(a))S(ξ)|0⟩ with a = α/2. Diagonal terms give sinh²ξ + a²; the cross terms
    // have overlap e^{−2a²e^{2ξ}} and ⟨n̂⟩-matrix element overlap·(sinh²ξ − a²e^{4ξ}).
    let (alpha, xi) = (4.0_f64, 0.5_f64);
    let a = alpha / 2.0;
    let s2 = xi.sinh().powi(2);
    let ov = (-2.0 * a * a * (2.0 * xi).exp()).exp();
    let expect = (s2 + a * a + ov * (s2 - a * a * (4.0 * xi).exp())) / (1.0 + ov);
    let cat = fock_squeezed_cat(alpha, xi, CUTOFF).unwrap();
    assert!((mean_photon(&cat) - expect).abs() < 1e-8, "{} vs {expect}", mean_photon(&cat));
}

#[test]
fn loss_matches_phase_space_channel() {
    let cat = squeezed_cat(3.0, 0.3).unwrap();
    let fock = fock_squeezed_cat(3.0, 0.3, 60).unwrap();
    for t in [0.95_f64, 0.8] {
        let rho = fock_loss(&fock, t).unwrap();
        let lossy = apply_loss(&cat, &LossSpec::from_amplitude(vec![t])).unwrap();
        for rbar in [[1.0, 0.0], [0.0, 2.0], [1.5, -0.5]] {
            let a = rho.displacement_ev(&rbar).unwrap();
            let b = displacement_ev(&lossy, &rbar).unwrap();
            assert!((a - b).norm() < 1e-9, "t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn bell_homodyne_matches_fock_pipeline() {
    let p = BreedingParams::new(1, 4.0, 0.5);
    let single = fock_breed(&p, 60).unwrap();
    let joint = fock_tensor(&single, &single).unwrap();
    let desc = CircuitDescription::new(2).push(ElementKind::Dumbbell, &[0, 1], 0.0);
    let out = fock_apply_circuit(&joint, &desc).unwrap();
    let sc = bell_scenario(&p, None, false).unwrap();
    let stabs = [StabilizerSpec::x2(), StabilizerSpec::z2()];
    for eta in [0.0, PI.sqrt() / 4.0, 0.9] {
        let (cond, dens) = fock_homodyne_project(&out, 1, 0.0, eta).unwrap();
        let exact = sc.evs(eta, &stabs, EvalOptions::default()).unwrap();
        assert!((dens - exact[0].outcome_density).abs() < 1e-9, "density {dens} vs {}", exact[0].outcome_density);
        for (s, e) in stabs.iter().zip(&exact) {
            let f = fock_displacement_ev(&cond, &s.displacement).unwrap();
            assert!((f - e.value).norm() < 1e-8, "{} at {eta}: fock {f} exact {}", s.label, e.value);
        }
    }
}

#[test]
fn rotated_homodyne_matches_engine() {
    let cat = squeezed_cat(2.0, 0.2).unwrap();
    let two = gkp_sim::phase_space::tensor(&cat, &cat);
    let fcat = fock_squeezed_cat(2.0, 0.2, 40).unwrap();
    let fjoint = fock_tensor(&fcat, &fcat).unwrap();
    let desc = CircuitDescription::new(2).push(ElementKind::Beamsplitter, &[0, 1], 0.4);
    let a = desc.build().unwrap();
    let fout = fock_apply_circuit(&fjoint, &desc).unwrap();
    for theta in [0.3, -std::f64::consts::FRAC_PI_2, 1.2] {
        let plan = MeasurementPlan::single(2, 1, theta, 0.4);
        let stab = StabilizerSpec::new(vec![0.8, -0.6], "D");
        let e = stabilizer_ev(&two, &a, None, &plan, &stab).unwrap();
        let (cond, dens) = fock_homodyne_project(&fout, 1, theta, 0.4).unwrap();
        let f = fock_displacement_ev(&cond, &stab.displacement).unwrap();
        assert!((dens - e.outcome_density).abs() < 1e-9, "θ={theta}: {dens} vs {}", e.outcome_density);
        assert!((f - e.value).norm() < 1e-9, "θ={theta}: {f} vs {}", e.value);
    }
}
