//! Acceptance criteria. Runs every criterion, prints one verdict line each, and exits
//! non-zero if any criterion fails. Inconclusive results (oracle leakage too high) do not
//! count as failures.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gkp_sim::circuits::{beamsplitter, compose, dumbbell_cz, rotation, squeezer, CircuitDescription, ElementKind, Linear3Angles};
use gkp_sim::fock::{fock_apply_circuit, fock_breed, fock_displacement_ev, fock_homodyne_project, fock_tensor};
use gkp_sim::grn::{grn_bell_p_ev, grn_bell_x_average, grn_bell_x_ev, sigma_from_ev, theta3};
use gkp_sim::measurement::{
    homodyne_density, simpson, stabilizer_evs, MeasurementPlan, OutcomeGrid, ProductState,
    StabilizerSpec,
};
use gkp_sim::phase_space::{apply_loss, apply_symplectic, displacement_ev, tensor, trace, LossSpec};
use gkp_sim::pipelines::{bell_scenario, linear3_scenario, linear3_witnesses, sensor_stabilizers};
use gkp_sim::states::{bred_gkp, grn_bell_input, BreedingParams, GrnParams};
use gkp_sim::{EvalOptions, SymplecticCircuit};

enum Verdict {
    Pass(String),
    Fail(String),
    Inconclusive(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

const ORACLE_LEAKAGE: f64 = 1e-6;
const ALPHA: f64 = 4.0;

fn x2() -> StabilizerSpec {
    StabilizerSpec::x2()
}

fn z2() -> StabilizerSpec {
    StabilizerSpec::z2()
}

fn sqrt_pi() -> f64 {
    PI.sqrt()
}

// 1. Single-mode bred states vs the Fock oracle.
fn criterion_1() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut leak: f64 = 0.0;
    for m in 0..=2 {
        for xi in [0.2, 0.5] {
            let p = BreedingParams::new(m, ALPHA, xi);
            let exact = bred_gkp(&p).unwrap();
            let fock = fock_breed(&p, 80).unwrap();
            leak = leak.max(fock.leakage());
            for s in [x2(), z2()] {
                let a = displacement_ev(&exact, &s.displacement).unwrap();
                let b = fock_displacement_ev(&fock, &s.displacement).unwrap();
                worst = worst.max((a - b).norm());
            }
        }
    }
    let detail = format!("max |exact − Fock| = {worst:.2e} (tol 1e-5), max leakage {leak:.1e}");
    if leak >= ORACLE_LEAKAGE {
        return Verdict::Inconclusive(detail);
    }
    verdict(worst <= 1e-5, detail)
}

// 2. Bell pair with p-homodyne vs the Fock oracle, plus the cutoff-20 deviation pattern.
fn criterion_2() -> Verdict {
    let etas = [0.0, sqrt_pi() / 4.0, sqrt_pi() / 2.0];
    let stabs = [x2(), z2()];
    let dumbbell = CircuitDescription::new(2).push(ElementKind::Dumbbell, &[0, 1], 0.0);
    let (mut err80, mut err20, mut leak80): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for m in 0..=2 {
        for xi in [0.2, 0.5] {
            let p = BreedingParams::new(m, ALPHA, xi);
            let sc = bell_scenario(&p, None, false).unwrap();
            for (cutoff, err) in [(80, &mut err80), (20, &mut err20)] {
                let single = fock_breed(&p, cutoff).unwrap();
                let out = fock_apply_circuit(&fock_tensor(&single, &single).unwrap(), &dumbbell).unwrap();
                if cutoff == 80 {
                    leak80 = leak80.max(out.leakage());
                }
                for &eta in &etas {
                    let exact = sc.evs(eta, &stabs, EvalOptions::default()).unwrap();
                    let (cond, _) = fock_homodyne_project(&out, 1, 0.0, eta).unwrap();
                    for (s, e) in stabs.iter().zip(&exact) {
                        let f = fock_displacement_ev(&cond, &s.displacement).unwrap();
                        *err = err.max((f - e.value).norm());
                    }
                }
            }
        }
    }
    let detail = format!(
        "cutoff 80: max dev {err80:.2e} (tol 1e-5, leakage {leak80:.1e}); cutoff 20: max dev {err20:.2e}"
    );
    if leak80 >= ORACLE_LEAKAGE {
        return Verdict::Inconclusive(detail);
    }
    verdict(err80 <= 1e-5 && err20 > err80, detail)
}

// 3. GRN closed forms vs the engine on GRN inputs.
fn criterion_3() -> Verdict {
    let g1 = GrnParams::new(0.12, 0.07);
    let g2 = GrnParams::new(0.09, 0.15);
    let a = dumbbell_cz();
    let (mut x_dev, mut p_lo, mut p_hi, mut p_ref_dev): (f64, f64, f64, f64) = (0.0, f64::MAX, f64::MIN, 0.0);
    let p_ref = grn_bell_p_ev(g1.sigma_p, g2.sigma_x);
    for i in 0..64 {
        let eta = i as f64 * sqrt_pi() / 64.0;
        let input = grn_bell_input(&g1, &g2, eta).unwrap();
        let plan = MeasurementPlan::p(2, 1, eta);
        let r = stabilizer_evs(&input, &a, None, &plan, &[z2(), x2()], EvalOptions::default()).unwrap();
        let closed = grn_bell_x_ev(g1.sigma_x, g2.sigma_p, eta).unwrap();
        x_dev = x_dev.max((r[0].value - closed).norm());
        p_lo = p_lo.min(r[1].value.re);
        p_hi = p_hi.max(r[1].value.re);
        p_ref_dev = p_ref_dev.max((r[1].value - p_ref).norm());
    }
    let spread = p_hi - p_lo;
    verdict(
        x_dev <= 1e-6 && spread <= 1e-8 && p_ref_dev <= 1e-8,
        format!("theta form max dev {x_dev:.2e} (tol 1e-6); p-value spread {spread:.2e} (tol 1e-8), vs product {p_ref_dev:.2e}"),
    )
}

// 4. Outcome-averaged |EV| of bred Bell pairs vs the fitted GRN model.
fn criterion_4() -> Verdict {
    let p = BreedingParams::new(3, BreedingParams::sensor_amplitude(3), 0.5);
    let (ex, ep) = sensor_stabilizers(&p).unwrap();
    let s0 = sigma_from_ev(ex.norm()).unwrap();
    let s1 = sigma_from_ev(ep.norm()).unwrap();
    let sc = bell_scenario(&p, None, false).unwrap();
    let grid = OutcomeGrid::new(-8.0 * sqrt_pi(), 8.0 * sqrt_pi(), 4001).unwrap();
    let ax = sc.average(&x2(), &grid, EvalOptions::default()).unwrap();
    let az = sc.average(&z2(), &grid, EvalOptions::default()).unwrap();
    let gx = grn_bell_p_ev(s1, s0);
    let gz = grn_bell_x_average(s0, s1, 2001).unwrap().mean_magnitude;
    let rx = (ax.mean_magnitude - gx).abs() / gx;
    let rz = (az.mean_magnitude - gz).abs() / gz;
    verdict(
        rx <= 1e-5 && rz <= 5e-3,
        format!(
            "Σ₀={s0:.5} Σ₁={s1:.5}; X²: exact {:.7} GRN {gx:.7} rel {rx:.1e} (tol 1e-5); Z²: exact {:.6} GRN {gz:.6} rel {rz:.2e} (tol 5e-3)",
            ax.mean_magnitude, az.mean_magnitude
        ),
    )
}

// 5. Dumbbell factorization without measurement.
fn criterion_5() -> Verdict {
    let a_state = bred_gkp(&BreedingParams::new(1, ALPHA, 0.4)).unwrap();
    let b_state = bred_gkp(&BreedingParams::new(2, ALPHA, 0.6)).unwrap();
    let input = ProductState::new(vec![a_state.clone(), b_state.clone()]).unwrap();
    let a = dumbbell_cz();
    let a_inv = a.inverse();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let r: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let two = stabilizer_evs(&input, &a, None, &MeasurementPlan::none(2), &[StabilizerSpec::new(r.clone(), "r")], EvalOptions::default())
            .unwrap()[0]
            .value;
        let rp = a_inv.apply(&r);
        let prod = displacement_ev(&a_state, &rp[..2]).unwrap() * displacement_ev(&b_state, &rp[2..]).unwrap();
        worst = worst.max((two - prod).norm());
    }
    verdict(worst <= 1e-10, format!("max |two-mode − product| = {worst:.2e} over 20 displacements (tol 1e-10)"))
}

// 6. Linear three-mode cluster witnesses over the breeding grid.
fn criterion_6() -> Verdict {
    let angles = Linear3Angles::default();
    let xis: Vec<f64> = (2..=10).map(|k| k as f64 / 10.0).collect();
    let (mut min_w, mut min_wbar) = (f64::MAX, f64::MAX);
    let mut at = (0, 0.0);
    let mut lines = Vec::new();
    for m in 1..=4 {
        for &xi in &xis {
            let p = BreedingParams::new(m, BreedingParams::sensor_amplitude(m), xi);
            let sc = linear3_scenario(&p, &angles, None).unwrap();
            let (w, wb) = linear3_witnesses(&sc, EvalOptions::default()).unwrap();
            if w.value < min_w {
                min_w = w.value;
                at = (m, xi);
            }
            min_wbar = min_wbar.min(wb.value);
            if xi == 0.2 || xi == 1.0 {
                lines.push(format!("M={m} ξ={xi}: W={:.3} W̄={:.3}", w.value, wb.value));
            }
        }
    }
    verdict(
        min_w < 0.0 && min_wbar > 0.0,
        format!(
            "min W = {min_w:.4} at M={} ξ={}; min W̄ = {min_wbar:.4} over 36 points [{}]",
            at.0,
            at.1,
            lines.join("; ")
        ),
    )
}

// 7. Property checks (a fixed sample; the randomized suite lives in tests/properties.rs).
fn criterion_7() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };
    let circuits: Vec<SymplecticCircuit> = vec![
        beamsplitter(2, 0, 1, 0.7).unwrap(),
        compose(&rotation(2, 1, 1.1).unwrap(), &squeezer(2, 0, 0.3).unwrap()).unwrap(),
        dumbbell_cz(),
    ];
    let lin3 = Linear3Angles::default().description().build().unwrap();
    check(SymplecticCircuit::new(lin3.matrix().clone()).is_ok(), "symplectic check");
    let bred = bred_gkp(&BreedingParams::new(2, ALPHA, 0.5)).unwrap();
    let cat = bred_gkp(&BreedingParams::new(0, 3.0, 0.3)).unwrap();
    let two = tensor(&bred, &cat);
    for c in &circuits {
        check(SymplecticCircuit::new(c.matrix().clone()).is_ok(), "symplectic check");
        let out = apply_symplectic(&two, c).unwrap();
        check((trace(&out) - 1.0).norm() < 1e-12, "trace under circuit");
    }
    let lossy = apply_loss(&two, &LossSpec::from_amplitude(vec![0.9, 0.8])).unwrap();
    check((trace(&lossy) - 1.0).norm() < 1e-12, "trace under loss");
    let a = dumbbell_cz();
    let plan = MeasurementPlan::p(2, 1, 0.3);
    let loss = LossSpec::from_amplitude(vec![0.95, 0.9]);
    let id = stabilizer_evs(&two, &a, Some(&loss), &plan, &[StabilizerSpec::identity(1)], EvalOptions::default()).unwrap();
    check(id[0].value == Complex64::new(1.0, 0.0), "J=0 gives exactly 1");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let r = vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let s = StabilizerSpec::new(r, "r");
        let v = stabilizer_evs(&two, &a, Some(&loss), &plan, &[s.clone(), s.negated()], EvalOptions::default()).unwrap();
        check(v[0].value.norm() <= 1.0 + 1e-9, "|EV| ≤ 1");
        check((v[0].value - v[1].value.conj()).norm() < 1e-12, "conjugation symmetry");
    }
    let unit = LossSpec::from_amplitude(vec![1.0, 1.0]);
    let s = StabilizerSpec::new(vec![0.7, -1.9], "r");
    let with = stabilizer_evs(&two, &a, Some(&unit), &plan, std::slice::from_ref(&s), EvalOptions::default()).unwrap();
    let without = stabilizer_evs(&two, &a, None, &plan, std::slice::from_ref(&s), EvalOptions::default()).unwrap();
    check((with[0].value - without[0].value).norm() <= 1e-14, "unit transmittance is a no-op");
    let n = 4001;
    let lim = 6.0 * sqrt_pi();
    let h = 2.0 * lim / (n - 1) as f64;
    let dens: Vec<f64> = (0..n)
        .map(|i| homodyne_density(&two, &a, Some(&loss), &MeasurementPlan::p(2, 1, -lim + h * i as f64)).unwrap_or(0.0))
        .collect();
    check((simpson(&dens, h) - 1.0).abs() < 1e-6, "homodyne density integrates to the trace");
    // θ₃ can cancel by many orders of magnitude for complex z, so deviations are measured
    // against the absolute series Σ|terms|, the scale of any double-precision evaluation.
    // Reference values: 40-digit mpmath.
    for &(zr, zi, q, re, im) in &[
        (0.3, 0.0, 0.5, 1.869_720_263_532_292_7, 0.0),
        (1.1, -0.4, 0.9, -0.000_122_606_431_388_546_8, 0.000_225_342_781_760_586_32),
        (0.7, -3.0, 0.6, -15_328_900.438_170_565, 39_754_928.826_311_514),
        (2.2, 1.0, 0.8, -3.446_103_606_011_169_6, 5.198_837_426_659_525),
    ] {
        let z = Complex64::new(zr, zi);
        let terms = |k: i64| (Complex64::new(0.0, 2.0 * k as f64) * z + (k * k) as f64 * f64::ln(q)).exp();
        let brute: Complex64 = (-4000i64..=4000).map(terms).sum();
        let scale: f64 = (-4000i64..=4000).map(|k| terms(k).norm()).sum();
        let ours = theta3(z, q).unwrap();
        check((ours - brute).norm() <= 1e-14 * scale, "theta3 vs brute force");
        check((ours - Complex64::new(re, im)).norm() <= 1e-14 * scale, "theta3 vs high-precision reference");
    }
    let p = BreedingParams::new(2, BreedingParams::sensor_amplitude(2), 0.5);
    let sc = linear3_scenario(&p, &Linear3Angles::default(), None).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let (w, wb) = linear3_witnesses(&sc, EvalOptions::deterministic()).unwrap();
            (w.value.to_bits(), wb.value.to_bits(), w.stabilizers.iter().map(|r| r.value.re.to_bits()).collect::<Vec<_>>())
        })
    };
    let base = run(1);
    check(run(4) == base && run(8) == base, "deterministic reduction across 1/4/8 threads");
    let detail = if failures.is_empty() { "all property checks hold".to_string() } else { failures.join(", ") };
    verdict(failures.is_empty(), detail)
}

// 8. Trends of single-mode stabilizers with breeding rounds and squeezing.
fn criterion_8() -> Verdict {
    let slack = 1e-9;
    let xs: Vec<f64> = (1..=4)
        .map(|m| displacement_ev(&bred_gkp(&BreedingParams::new(m, ALPHA, 0.5)).unwrap(), &x2().displacement).unwrap().norm())
        .collect();
    let zs: Vec<f64> = (2..=10)
        .map(|k| {
            let s = bred_gkp(&BreedingParams::new(3, ALPHA, k as f64 / 10.0)).unwrap();
            displacement_ev(&s, &z2().displacement).unwrap().norm()
        })
        .collect();
    let x_ok = xs.windows(2).all(|w| w[1] >= w[0] - slack);
    let z_ok = zs.windows(2).all(|w| w[1] >= w[0] - slack);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    verdict(
        x_ok && z_ok,
        format!(
            "|X²| vs M=1..4 at ξ=0.5: [{}] {}; |Z²| vs ξ=0.2..1.0 at M=3: [{}] {}",
            fmt(&xs),
            if x_ok { "non-decreasing" } else { "DECREASING" },
            fmt(&zs),
            if z_ok { "non-decreasing" } else { "DECREASING" }
        ),
    )
}

type Criterion = (u32, fn() -> Verdict, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, criterion_1, Duration::from_secs(120)),
        (2, criterion_2, Duration::from_secs(600)),
        (3, criterion_3, Duration::from_secs(60)),
        (4, criterion_4, Duration::from_secs(900)),
        (5, criterion_5, Duration::from_secs(60)),
        (6, criterion_6, Duration::from_secs(1800)),
        (7, criterion_7, Duration::from_secs(120)),
        (8, criterion_8, Duration::from_secs(60)),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, f, budget) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let t = start.elapsed();
        let over = t > budget;
        let (tag, detail) = match v {
            Verdict::Pass(d) if over => ("FAIL", format!("{d}; over time budget")),
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => ("FAIL", d),
            Verdict::Inconclusive(d) => ("INCONCLUSIVE", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {n}: {tag} — {detail} [{:.1}s / budget {}s]", t.as_secs_f64(), budget.as_secs());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
