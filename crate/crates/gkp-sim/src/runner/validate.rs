use std::f64::consts::PI;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use crate::circuits::{dumbbell_cz, Linear3Angles, SymplecticCircuit};
use crate::measurement::{homodyne_density, MeasurementPlan, ProductState, COVERAGE_TOL};
use crate::pipelines::term_count;
use crate::states::bred_gkp;

/// Rough per-term footprint of a stored single-mode term (mean, covariance, weight, bookkeeping).
const BYTES_PER_STORED_TERM: u64 = 160;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub experiment: ExperimentKind,
    pub breeding_points: usize,
    pub inputs: usize,
    pub outcomes_per_point: usize,
    /// Mixture terms enumerated per evaluation, `(M + 2)^(2·inputs)` for the largest M.
    pub max_terms: u128,
    /// Total term visits across the run.
    pub term_visits: u128,
    pub estimated_bytes: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

fn circuit_of(cfg: &ExperimentConfig) -> Option<SymplecticCircuit> {
    match (cfg.experiment, &cfg.circuit) {
        (ExperimentKind::BellHomodyne | ExperimentKind::GrnCompare | ExperimentKind::FockConvergence, _) => {
            Some(dumbbell_cz())
        }
        (ExperimentKind::Linear3Witness, None) => Linear3Angles::default().description().build().ok(),
        (_, Some(c)) => c.build().ok(),
        _ => None,
    }
}

/// Static cost estimates plus cheap numerical checks. Assumes `cfg.validate()` is clean.
pub fn inspect(cfg: &ExperimentConfig) -> ValidationReport {
    let inputs = cfg.n_inputs();
    let max_m = cfg.breeding.rounds.iter().copied().max().unwrap_or(0);
    let max_terms = term_count(max_m, inputs as u32);
    let outcomes = match (&cfg.measurement, cfg.experiment) {
        (Some(m), _) => m.outcome_values().len(),
        (None, ExperimentKind::BellHomodyne | ExperimentKind::GrnCompare) => 33,
        (None, ExperimentKind::FockConvergence) => 3,
        _ => 1,
    };
    let points = cfg.breeding.points();
    let term_visits: u128 =
        points.iter().map(|p| term_count(p.rounds, inputs as u32)).sum::<u128>() * outcomes as u128;
    let stored = inputs as u64 * (u64::from(max_m) + 2).pow(2);
    let estimated_bytes = stored * BYTES_PER_STORED_TERM + rayon::current_num_threads() as u64 * 64 * 1024;

    let mut checks = Vec::new();
    if let Some(c) = circuit_of(cfg) {
        let res = SymplecticCircuit::new(c.matrix().clone());
        checks.push(Check {
            name: "symplectic".into(),
            ok: res.is_ok(),
            detail: res.map_or_else(|e| e.to_string(), |_| format!("{}-mode circuit", c.n_modes())),
        });
    }
    if cfg.experiment == ExperimentKind::GrnCompare {
        checks.push(coverage_check(cfg));
    }
    ValidationReport {
        experiment: cfg.experiment,
        breeding_points: points.len(),
        inputs,
        outcomes_per_point: outcomes,
        max_terms,
        term_visits,
        estimated_bytes,
        checks,
    }
}

/// The outcome averages use ±8√π; the density at the edges must be negligible.
fn coverage_check(cfg: &ExperimentConfig) -> Check {
    let half = 8.0 * PI.sqrt();
    let a = dumbbell_cz();
    let mut worst: f64 = 0.0;
    for p in cfg.breeding.points() {
        let input = bred_gkp(&p).and_then(|s| ProductState::new(vec![s.clone(), s]));
        let density = |eta: f64| -> crate::Result<f64> {
            let input = input.as_ref().map_err(Clone::clone)?;
            match homodyne_density(input, &a, cfg.loss.as_ref(), &MeasurementPlan::p(2, 1, eta)) {
                Err(crate::SimError::ZeroProbability) => Ok(0.0),
                r => r,
            }
        };
        let ratio = match (density(0.0), density(half), density(-half)) {
            (Ok(c), Ok(hi), Ok(lo)) if c > 0.0 => hi.max(lo) / c,
            _ => f64::INFINITY,
        };
        worst = worst.max(ratio);
    }
    Check {
        name: "coverage".into(),
        ok: worst <= COVERAGE_TOL,
        detail: format!("edge/centre density ratio {worst:.2e} on ±8√π (limit {COVERAGE_TOL:.0e})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::config::CircuitRef;
    use crate::runner::presets::preset;

    #[test]
    fn linear3_preset_term_counts() {
        let cfg = preset("linear3_witness", "o".into()).unwrap();
        let r = inspect(&cfg);
        assert_eq!(r.inputs, 4);
        assert_eq!(r.max_terms, 1_679_616);
        assert!(r.ok(), "{:?}", r.checks);
    }

    #[test]
    fn grn_preset_covers_support() {
        let r = inspect(&preset("grn_compare", "o".into()).unwrap());
        assert!(r.checks.iter().any(|c| c.name == "coverage" && c.ok), "{:?}", r.checks);
    }

    #[test]
    fn custom_circuit_is_checked() {
        let mut cfg = preset("identity_check", "o".into()).unwrap();
        cfg.circuit = Some(CircuitRef::Identity(2));
        let r = inspect(&cfg);
        assert!(r.checks[0].ok);
    }
}
