use std::f64::consts::PI;
use std::path::PathBuf;

use super::config::{
    Amplitude, BreedingGrid, CircuitRef, ExperimentConfig, ExperimentKind, LatticeMatch, MeasurementConfig,
    StabilizerConfig,
};
use crate::circuits::Linear3Angles;
use crate::measurement::{OutcomeGrid, ReductionMode};

pub const PRESET_NAMES: [&str; 6] = [
    "single_mode_stabilizers",
    "bell_homodyne",
    "grn_compare",
    "linear3_witness",
    "fock_convergence",
    "identity_check",
];

fn xi_sweep() -> Vec<f64> {
    (2..=10).map(|k| k as f64 / 10.0).collect()
}

fn base(experiment: ExperimentKind, breeding: BreedingGrid, out: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        breeding,
        circuit: None,
        measurement: None,
        loss: None,
        stabilizers: Vec::new(),
        compensate: true,
        fock_cutoffs: Vec::new(),
        sample_outcomes: 0,
        output: out,
        reduction: ReductionMode::Fast,
        threads: None,
    }
}

fn p_grid(points: usize) -> MeasurementConfig {
    MeasurementConfig {
        mode: 1,
        angle: 0.0,
        outcomes: Vec::new(),
        grid: Some(OutcomeGrid { lo: 0.0, hi: PI.sqrt(), points }),
    }
}

/// Ready-made configurations for the standard studies, writing to `out`.
pub fn preset(name: &str, out: PathBuf) -> Option<ExperimentConfig> {
    let sensor = Amplitude::Matched(LatticeMatch::Sensor);
    let cfg = match name {
        "single_mode_stabilizers" => base(
            ExperimentKind::SingleModeStabilizers,
            BreedingGrid { rounds: vec![1, 2, 3, 4], squeezing: xi_sweep(), amplitude: Amplitude::Fixed(4.0) },
            out,
        ),
        "bell_homodyne" => ExperimentConfig {
            measurement: Some(p_grid(65)),
            ..base(
                ExperimentKind::BellHomodyne,
                BreedingGrid { rounds: vec![1, 2, 3], squeezing: vec![0.5], amplitude: sensor },
                out,
            )
        },
        "grn_compare" => ExperimentConfig {
            measurement: Some(p_grid(65)),
            ..base(
                ExperimentKind::GrnCompare,
                BreedingGrid { rounds: vec![3], squeezing: vec![0.5], amplitude: sensor },
                out,
            )
        },
        "linear3_witness" => ExperimentConfig {
            circuit: Some(CircuitRef::Linear3(Linear3Angles::default())),
            ..base(
                ExperimentKind::Linear3Witness,
                BreedingGrid { rounds: vec![1, 2, 3, 4], squeezing: xi_sweep(), amplitude: sensor },
                out,
            )
        },
        "fock_convergence" => ExperimentConfig {
            fock_cutoffs: vec![20, 40, 60, 80],
            ..base(
                ExperimentKind::FockConvergence,
                BreedingGrid { rounds: vec![0, 1, 2], squeezing: vec![0.2, 0.5], amplitude: Amplitude::Fixed(4.0) },
                out,
            )
        },
        "identity_check" => ExperimentConfig {
            circuit: Some(CircuitRef::Identity(2)),
            measurement: Some(p_grid(9)),
            stabilizers: vec![StabilizerConfig::Displacement { label: "I".into(), displacement: vec![0.0, 0.0] }],
            reduction: ReductionMode::Deterministic,
            ..base(
                ExperimentKind::Custom,
                BreedingGrid { rounds: vec![1, 2], squeezing: vec![0.5], amplitude: sensor },
                out,
            )
        },
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESET_NAMES {
            let cfg = preset(name, PathBuf::from("out")).unwrap();
            assert!(cfg.validate().is_empty(), "{name}: {:?}", cfg.validate());
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
        assert!(preset("nope", PathBuf::new()).is_none());
    }
}
