use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{CircuitRef, ExperimentConfig, ExperimentKind};
use super::output::{complex_cells, complex_columns, nan_cells, num, Row, Table};
use crate::circuits::{CircuitDescription, ElementKind, Linear3Angles};
use crate::error::Result;
use crate::fock::{fock_apply_circuit, fock_breed, fock_displacement_ev, fock_homodyne_project, fock_tensor};
use crate::grn::{grn_bell_p_ev, grn_bell_x_average, grn_bell_x_ev, grn_outcome_density, sigma_from_ev};
use crate::measurement::{EvalOptions, MeasurementPlan, OutcomeGrid, StabilizerSpec};
use crate::phase_space::{apply_loss, displacement_ev};
use crate::pipelines::{
    bell_scenario, input_offset, linear3_scenario, linear3_witnesses, sensor_stabilizers, witness_w, witness_w_bar,
    Scenario,
};
use crate::states::{bred_gkp, BreedingParams};

/// Full-support grid used for outcome averages of the Bell pair.
const AVERAGE_HALFWIDTH_PERIODS: f64 = 8.0;
const AVERAGE_POINTS: usize = 4001;
const GRN_PERIOD_POINTS: usize = 2001;

fn sqrt_pi() -> f64 {
    PI.sqrt()
}

fn default_bell_outcomes() -> Vec<f64> {
    OutcomeGrid::new(0.0, sqrt_pi(), 33).expect("valid grid").values()
}

/// Maps `f` over `items`, parallel across items when there are at least as many items as
/// threads (each then sums its mixture serially), otherwise item by item with the
/// mixture sums parallel. Output order matches input order.
fn map_points<T: Sync, R: Send>(items: &[T], opts: EvalOptions, f: impl Fn(&T, EvalOptions) -> R + Sync) -> Vec<R> {
    if items.len() >= rayon::current_num_threads() {
        items.par_iter().map(|it| f(it, opts.serial())).collect()
    } else {
        items.iter().map(|it| f(it, opts)).collect()
    }
}

fn timed(f: impl FnOnce() -> Result<Vec<String>>, width: usize) -> Row {
    let t0 = Instant::now();
    let r = f();
    let seconds = t0.elapsed().as_secs_f64();
    match r {
        Ok(cells) => Row { cells, seconds, error: None },
        Err(e) => Row { cells: nan_cells(width), seconds, error: Some(e.to_string()) },
    }
}

fn breeding_cells(p: &BreedingParams) -> [String; 3] {
    [p.rounds.to_string(), num(p.cat_squeezing), num(p.cat_amplitude)]
}

fn breeding_header() -> Vec<String> {
    vec!["rounds".into(), "squeezing".into(), "amplitude".into()]
}

fn stabilizers_or(cfg: &ExperimentConfig, default: Vec<StabilizerSpec>) -> Result<Vec<StabilizerSpec>> {
    if cfg.stabilizers.is_empty() {
        Ok(default)
    } else {
        cfg.stabilizers.iter().map(|s| s.spec()).collect()
    }
}

fn labels(stabs: &[StabilizerSpec]) -> Vec<&str> {
    stabs.iter().map(|s| s.label.as_str()).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: EvalOptions, seed: u64) -> Result<Vec<Table>> {
    match cfg.experiment {
        ExperimentKind::SingleModeStabilizers => single_mode(cfg, opts),
        ExperimentKind::BellHomodyne => bell_homodyne(cfg, opts),
        ExperimentKind::GrnCompare => grn_compare(cfg, opts),
        ExperimentKind::Linear3Witness => linear3(cfg, opts),
        ExperimentKind::FockConvergence => fock_convergence(cfg, opts),
        ExperimentKind::Custom => custom(cfg, opts, seed),
    }
}

fn sensor_defaults() -> Vec<StabilizerSpec> {
    let l = (2.0 * PI).sqrt();
    vec![
        StabilizerSpec::x2(),
        StabilizerSpec::z2(),
        StabilizerSpec::new(vec![0.0, l], "Sx"),
        StabilizerSpec::new(vec![l, 0.0], "Sp"),
    ]
}

fn single_mode(cfg: &ExperimentConfig, opts: EvalOptions) -> Result<Vec<Table>> {
    let stabs = stabilizers_or(cfg, sensor_defaults())?;
    let mut header = breeding_header();
    header.push("n_terms".into());
    header.extend(complex_columns(labels(&stabs)));
    let width = header.len();
    let points = cfg.breeding.points();
    let rows = map_points(&points, opts, |p, _| {
        timed(
            || {
                let mut state = bred_gkp(p)?;
                let mut off = if cfg.compensate { input_offset(p) } else { [0.0, 0.0] };
                if let Some(l) = &cfg.loss {
                    state = apply_loss(&state, l)?;
                    off = off.map(|d| d * l.transmittance[0]);
                }
                let mut cells = breeding_cells(p).to_vec();
                cells.push(state.len().to_string());
                for s in &stabs {
                    let (x, q) = (s.displacement[0], s.displacement[1]);
                    // Remove the lattice offset d: the value picks up exp(i Jᵀd), J = Ω r̄.
                    let phase = Complex64::new(0.0, q * off[0] - x * off[1]).exp();
                    cells.extend(complex_cells(displacement_ev(&state, &s.displacement)? * phase));
                }
                Ok(cells)
            },
            width,
        )
    });
    Ok(vec![Table { name: "stabilizers".into(), header, rows }])
}

fn outcome_header(stabs: &[StabilizerSpec]) -> Vec<String> {
    let mut h = breeding_header();
    h.extend(["outcome".into(), "density".into(), "n_terms".into()]);
    h.extend(complex_columns(labels(stabs)));
    h
}

/// One row per (breeding point, outcome) for a scenario builder.
fn outcome_rows(
    cfg: &ExperimentConfig,
    outcomes: &[f64],
    stabs: &[StabilizerSpec],
    opts: EvalOptions,
    build: impl Fn(&BreedingParams) -> Result<Scenario> + Sync,
) -> Vec<Row> {
    let width = outcome_header(stabs).len();
    let points = cfg.breeding.points();
    let scenarios: Vec<(BreedingParams, Result<Scenario>)> = points.iter().map(|p| (*p, build(p))).collect();
    let jobs: Vec<(usize, f64)> =
        (0..scenarios.len()).flat_map(|i| outcomes.iter().map(move |&o| (i, o))).collect();
    map_points(&jobs, opts, |&(i, eta), opts| {
        let (p, sc) = &scenarios[i];
        timed(
            || {
                let sc = sc.as_ref().map_err(Clone::clone)?;
                let r = sc.evs(eta, stabs, opts)?;
                let mut cells = breeding_cells(p).to_vec();
                cells.extend([num(eta), num(r[0].outcome_density), r[0].n_terms.to_string()]);
                r.iter().for_each(|v| cells.extend(complex_cells(v.value)));
                Ok(cells)
            },
            width,
        )
    })
}

fn bell_homodyne(cfg: &ExperimentConfig, opts: EvalOptions) -> Result<Vec<Table>> {
    let stabs = stabilizers_or(cfg, vec![StabilizerSpec::x2(), StabilizerSpec::z2()])?;
    let outcomes = cfg.measurement.as_ref().map_or_else(default_bell_outcomes, |m| m.outcome_values());
    let rows = outcome_rows(cfg, &outcomes, &stabs, opts, |p| bell_scenario(p, cfg.loss.clone(), cfg.compensate));
    Ok(vec![Table { name: "bell_homodyne".into(), header: outcome_header(&stabs), rows }])
}

fn grn_compare(cfg: &ExperimentConfig, opts: EvalOptions) -> Result<Vec<Table>> {
    let outcomes = cfg.measurement.as_ref().map_or_else(default_bell_outcomes, |m| m.outcome_values());
    let points = cfg.breeding.points();
    let fits: Vec<Result<(f64, f64)>> = points
        .iter()
        .map(|p| {
            let (ex, ep) = sensor_stabilizers(p)?;
            Ok((sigma_from_ev(ex.norm())?, sigma_from_ev(ep.norm())?))
        })
        .collect();
    let scenarios: Vec<Result<Scenario>> =
        points.iter().map(|p| bell_scenario(p, cfg.loss.clone(), cfg.compensate)).collect();
    let stabs = [StabilizerSpec::x2(), StabilizerSpec::z2()];

    let mut header = breeding_header();
    header.extend(["sigma0".into(), "sigma1".into(), "outcome".into(), "density".into(), "grn_density_per_period".into()]);
    header.extend(complex_columns(["X2", "Z2", "grn_X2", "grn_Z2"]));
    let width = header.len();
    let jobs: Vec<(usize, f64)> = (0..points.len()).flat_map(|i| outcomes.iter().map(move |&o| (i, o))).collect();
    let rows = map_points(&jobs, opts, |&(i, eta), opts| {
        timed(
            || {
                let (s0, s1) = fits[i].clone()?;
                let sc = scenarios[i].as_ref().map_err(Clone::clone)?;
                let r = sc.evs(eta, &stabs, opts)?;
                let mut cells = breeding_cells(&points[i]).to_vec();
                cells.extend([num(s0), num(s1), num(eta), num(r[0].outcome_density)]);
                cells.push(num(grn_outcome_density(s0, s1, eta)?));
                cells.extend(complex_cells(r[0].value));
                cells.extend(complex_cells(r[1].value));
                cells.extend(complex_cells(Complex64::new(grn_bell_p_ev(s1, s0), 0.0)));
                cells.extend(complex_cells(grn_bell_x_ev(s0, s1, eta)?));
                Ok(cells)
            },
            width,
        )
    });
    let curves = Table { name: "grn_curves".into(), header, rows };

    let mut header = breeding_header();
    header.extend(["sigma0".into(), "sigma1".into()]);
    header.extend(
        ["X2_mean_abs", "grn_X2_mean_abs", "Z2_mean_abs", "grn_Z2_mean_abs"].map(String::from),
    );
    header.extend(["Z2_mean_re", "Z2_mean_im", "grn_Z2_mean_re", "grn_Z2_mean_im"].map(String::from));
    let width = header.len();
    let half = AVERAGE_HALFWIDTH_PERIODS * sqrt_pi();
    let grid = OutcomeGrid::new(-half, half, AVERAGE_POINTS)?;
    // The averages parallelize internally over outcomes, so points run one at a time.
    let rows = (0..points.len())
        .map(|i| {
            timed(
                || {
                    let (s0, s1) = fits[i].clone()?;
                    let sc = scenarios[i].as_ref().map_err(Clone::clone)?;
                    let ax = sc.average(&stabs[0], &grid, opts)?;
                    let az = sc.average(&stabs[1], &grid, opts)?;
                    let gz = grn_bell_x_average(s0, s1, GRN_PERIOD_POINTS)?;
                    let mut cells = breeding_cells(&points[i]).to_vec();
                    cells.extend([s0, s1, ax.mean_magnitude, grn_bell_p_ev(s1, s0), az.mean_magnitude].map(num));
                    cells.extend([gz.mean_magnitude, az.mean.re, az.mean.im, gz.mean.re, gz.mean.im].map(num));
                    Ok(cells)
                },
                width,
            )
        })
        .collect();
    Ok(vec![curves, Table { name: "grn_averages".into(), header, rows }])
}

fn linear3(cfg: &ExperimentConfig, opts: EvalOptions) -> Result<Vec<Table>> {
    let angles = match &cfg.circuit {
        Some(CircuitRef::Linear3(a)) => *a,
        _ => Linear3Angles::default(),
    };
    let w = witness_w();
    let wb = witness_w_bar();
    let mut header = breeding_header();
    header.extend(["W".into(), "W_bar".into(), "density".into(), "n_terms".into()]);
    let all: Vec<StabilizerSpec> = w.iter().chain(&wb).cloned().collect();
    header.extend(complex_columns(labels(&all)));
    header.push("warnings".into());
    let width = header.len();
    let points = cfg.breeding.points();
    let rows = map_points(&points, opts, |p, opts| {
        timed(
            || {
                let sc = linear3_scenario(p, &angles, cfg.loss.clone())?;
                let (a, b) = linear3_witnesses(&sc, opts)?;
                let mut cells = breeding_cells(p).to_vec();
                let first = &a.stabilizers[0];
                cells.extend([num(a.value), num(b.value), num(first.outcome_density), first.n_terms.to_string()]);
                a.stabilizers.iter().chain(&b.stabilizers).for_each(|s| cells.extend(complex_cells(s.value)));
                let warnings: Vec<String> = a.warnings.iter().chain(&b.warnings).cloned().collect();
                cells.push(warnings.join("; "));
                Ok(cells)
            },
            width,
        )
    });
    Ok(vec![Table { name: "linear3_witness".into(), header, rows }])
}

fn fock_convergence(cfg: &ExperimentConfig, opts: EvalOptions) -> Result<Vec<Table>> {
    let outcomes = cfg
        .measurement
        .as_ref()
        .map_or_else(|| vec![0.0, sqrt_pi() / 4.0, sqrt_pi() / 2.0], |m| m.outcome_values());
    let stabs = [StabilizerSpec::x2(), StabilizerSpec::z2()];
    let dumbbell = CircuitDescription::new(2).push(ElementKind::Dumbbell, &[0, 1], 0.0);
    let mut header = breeding_header();
    header.extend(["cutoff".into(), "outcome".into(), "leakage".into(), "max_deviation".into()]);
    header.extend(complex_columns(["X2", "Z2", "fock_X2", "fock_Z2"]));
    let width = header.len();
    let points = cfg.breeding.points();
    let jobs: Vec<(BreedingParams, usize)> =
        points.iter().flat_map(|p| cfg.fock_cutoffs.iter().map(move |&c| (*p, c))).collect();
    // Each job is a dense Fock computation; the exact side is cheap.
    let groups = map_points(&jobs, opts, |&(p, cutoff), opts| {
        let t0 = Instant::now();
        let prepared = (|| {
            let single = fock_breed(&p, cutoff)?;
            let out = fock_apply_circuit(&fock_tensor(&single, &single)?, &dumbbell)?;
            Ok::<_, crate::SimError>((out, bell_scenario(&p, None, false)?))
        })();
        let setup_time = t0.elapsed().as_secs_f64();
        outcomes
            .iter()
            .map(|&eta| {
                let mut row = timed(
                    || {
                        let (out, sc) = prepared.as_ref().map_err(Clone::clone)?;
                        let exact = sc.evs(eta, &stabs, opts)?;
                        let (cond, _) = fock_homodyne_project(out, 1, 0.0, eta)?;
                        let fock: Vec<Complex64> = stabs
                            .iter()
                            .map(|s| fock_displacement_ev(&cond, &s.displacement))
                            .collect::<Result<_>>()?;
                        let dev = exact.iter().zip(&fock).map(|(e, f)| (e.value - f).norm()).fold(0.0, f64::max);
                        let mut cells = breeding_cells(&p).to_vec();
                        cells.extend([cutoff.to_string(), num(eta), num(out.leakage()), num(dev)]);
                        exact.iter().for_each(|e| cells.extend(complex_cells(e.value)));
                        fock.iter().for_each(|f| cells.extend(complex_cells(*f)));
                        Ok(cells)
                    },
                    width,
                );
                row.seconds += setup_time / outcomes.len() as f64;
                row
            })
            .collect::<Vec<Row>>()
    });
    Ok(vec![Table { name: "fock_convergence".into(), header, rows: groups.into_iter().flatten().collect() }])
}

fn custom_scenario(cfg: &ExperimentConfig, p: &BreedingParams) -> Result<Scenario> {
    let circuit = cfg.circuit.as_ref().expect("validated").build()?;
    let n = circuit.n_modes();
    let plan = match &cfg.measurement {
        Some(m) => MeasurementPlan::single(n, m.mode, m.angle, 0.0),
        None => MeasurementPlan::none(n),
    };
    Scenario::new(p, n, circuit, cfg.loss.clone(), plan, cfg.compensate)
}

/// Inverse-CDF draws from the trapezoid interpolation of a sampled density.
fn sample_outcomes(xs: &[f64], density: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let mut cdf = vec![0.0];
    for i in 1..xs.len() {
        let area = 0.5 * (density[i] + density[i - 1]) * (xs[i] - xs[i - 1]);
        cdf.push(cdf[i - 1] + area.max(0.0));
    }
    let total = *cdf.last()?;
    if !(total > 0.0) {
        return None;
    }
    Some(
        (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let k = cdf.partition_point(|&c| c < u).clamp(1, xs.len() - 1);
                let span = cdf[k] - cdf[k - 1];
                let f = if span > 0.0 { (u - cdf[k - 1]) / span } else { 0.5 };
                xs[k - 1] + f * (xs[k] - xs[k - 1])
            })
            .collect(),
    )
}

fn custom(cfg: &ExperimentConfig, opts: EvalOptions, seed: u64) -> Result<Vec<Table>> {
    let stabs: Vec<StabilizerSpec> = cfg.stabilizers.iter().map(|s| s.spec()).collect::<Result<_>>()?;
    let outcomes = cfg.measurement.as_ref().map_or_else(|| vec![0.0], |m| m.outcome_values());
    let rows = outcome_rows(cfg, &outcomes, &stabs, opts, |p| custom_scenario(cfg, p));
    let mut tables = vec![Table { name: "custom".into(), header: outcome_header(&stabs), rows }];
    if cfg.sample_outcomes > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = cfg.breeding.points();
        let header = outcome_header(&stabs);
        let width = header.len();
        let mut sample_rows = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let block = &tables[0].rows[i * outcomes.len()..(i + 1) * outcomes.len()];
            let density: Vec<f64> = block.iter().map(|r| r.cells[4].parse().unwrap_or(f64::NAN)).collect();
            let draws = if density.iter().all(|d| d.is_finite()) {
                sample_outcomes(&outcomes, &density, cfg.sample_outcomes, &mut rng)
            } else {
                None
            };
            match draws {
                Some(draws) => {
                    let sc = custom_scenario(cfg, p);
                    sample_rows.extend(map_points(&draws, opts, |&eta, opts| {
                        timed(
                            || {
                                let r = sc.as_ref().map_err(Clone::clone)?.evs(eta, &stabs, opts)?;
                                let mut cells = breeding_cells(p).to_vec();
                                cells.extend([num(eta), num(r[0].outcome_density), r[0].n_terms.to_string()]);
                                r.iter().for_each(|v| cells.extend(complex_cells(v.value)));
                                Ok(cells)
                            },
                            width,
                        )
                    }));
                }
                None => sample_rows.push(Row {
                    cells: nan_cells(width),
                    seconds: 0.0,
                    error: Some(format!("no usable density on the grid for rounds={} squeezing={}", p.rounds, p.cat_squeezing)),
                }),
            }
        }
        tables.push(Table { name: "samples".into(), header, rows: sample_rows });
    }
    Ok(tables)
}
