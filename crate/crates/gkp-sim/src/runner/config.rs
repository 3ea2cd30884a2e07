use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::circuits::{CircuitDescription, Linear3Angles, SymplecticCircuit};
use crate::measurement::{OutcomeGrid, ReductionMode, StabilizerSpec};
use crate::phase_space::LossSpec;
use crate::states::{BreedingParams, DEFAULT_MAX_ROUNDS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SingleModeStabilizers,
    BellHomodyne,
    GrnCompare,
    Linear3Witness,
    FockConvergence,
    Custom,
}

/// Cat amplitude: a number, or a lattice-matched choice that depends on the round count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Fixed(f64),
    Matched(LatticeMatch),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeMatch {
    Sensor,
    Qubit,
}

impl Amplitude {
    pub fn value(&self, rounds: u32) -> f64 {
        match self {
            Amplitude::Fixed(a) => *a,
            Amplitude::Matched(LatticeMatch::Sensor) => BreedingParams::sensor_amplitude(rounds),
            Amplitude::Matched(LatticeMatch::Qubit) => BreedingParams::qubit_amplitude(rounds),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreedingGrid {
    pub rounds: Vec<u32>,
    pub squeezing: Vec<f64>,
    pub amplitude: Amplitude,
}

impl BreedingGrid {
    pub fn points(&self) -> Vec<BreedingParams> {
        self.rounds
            .iter()
            .flat_map(|&m| self.squeezing.iter().map(move |&xi| BreedingParams::new(m, self.amplitude.value(m), xi)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitRef {
    Dumbbell,
    Linear3(Linear3Angles),
    Identity(usize),
    Elements(CircuitDescription),
}

impl CircuitRef {
    pub fn build(&self) -> crate::Result<SymplecticCircuit> {
        match self {
            CircuitRef::Dumbbell => Ok(crate::circuits::dumbbell_cz()),
            CircuitRef::Linear3(a) => a.description().build(),
            CircuitRef::Identity(n) => Ok(SymplecticCircuit::identity(*n)),
            CircuitRef::Elements(d) => d.build(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub mode: usize,
    /// Measures `p cos θ − x sin θ`.
    #[serde(default)]
    pub angle: f64,
    /// Explicit outcomes; used when no grid is given.
    #[serde(default)]
    pub outcomes: Vec<f64>,
    #[serde(default)]
    pub grid: Option<OutcomeGrid>,
}

impl MeasurementConfig {
    pub fn outcome_values(&self) -> Vec<f64> {
        match &self.grid {
            Some(g) => g.values(),
            None => self.outcomes.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StabilizerConfig {
    Pauli {
        pauli: String,
        /// Lattice unit; defaults to the qubit unit `√π`.
        #[serde(default)]
        unit: Option<f64>,
    },
    Displacement {
        label: String,
        displacement: Vec<f64>,
    },
}

impl StabilizerConfig {
    pub fn spec(&self) -> crate::Result<StabilizerSpec> {
        match self {
            StabilizerConfig::Pauli { pauli, unit } => StabilizerSpec::pauli(pauli, unit.unwrap_or(PI.sqrt())),
            StabilizerConfig::Displacement { label, displacement } => {
                Ok(StabilizerSpec::new(displacement.clone(), label.clone()))
            }
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub breeding: BreedingGrid,
    #[serde(default)]
    pub circuit: Option<CircuitRef>,
    #[serde(default)]
    pub measurement: Option<MeasurementConfig>,
    #[serde(default)]
    pub loss: Option<LossSpec>,
    #[serde(default)]
    pub stabilizers: Vec<StabilizerConfig>,
    /// Shift postselection targets for inputs whose lattice is off-centre.
    #[serde(default = "default_true")]
    pub compensate: bool,
    #[serde(default)]
    pub fock_cutoffs: Vec<usize>,
    /// Draw this many outcomes from the homodyne density (custom experiments only).
    #[serde(default)]
    pub sample_outcomes: usize,
    pub output: PathBuf,
    #[serde(default)]
    pub reduction: ReductionMode,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigIssue> {
        serde_json::from_str(s).map_err(|e| ConfigIssue {
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Number of circuit inputs implied by the experiment.
    pub fn n_inputs(&self) -> usize {
        match self.experiment {
            ExperimentKind::SingleModeStabilizers => 1,
            ExperimentKind::BellHomodyne | ExperimentKind::GrnCompare | ExperimentKind::FockConvergence => 2,
            ExperimentKind::Linear3Witness => 4,
            ExperimentKind::Custom => self.circuit.as_ref().and_then(|c| c.build().ok()).map_or(1, |c| c.n_modes()),
        }
    }

    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |path: &str, message: String| issues.push(ConfigIssue { path: path.into(), message });
        let b = &self.breeding;
        if b.rounds.is_empty() {
            bad("breeding.rounds", "must be non-empty".into());
        }
        if b.squeezing.is_empty() {
            bad("breeding.squeezing", "must be non-empty".into());
        }
        for (i, &m) in b.rounds.iter().enumerate() {
            if m > DEFAULT_MAX_ROUNDS {
                bad(&format!("breeding.rounds[{i}]"), format!("{m} exceeds the maximum of {DEFAULT_MAX_ROUNDS}"));
            }
        }
        for (i, xi) in b.squeezing.iter().enumerate() {
            if !xi.is_finite() {
                bad(&format!("breeding.squeezing[{i}]"), "must be finite".into());
            }
        }
        if let Amplitude::Fixed(a) = b.amplitude {
            if !a.is_finite() {
                bad("breeding.amplitude", "must be finite".into());
            }
        }
        if let Some(t) = self.threads {
            if t == 0 {
                bad("threads", "must be at least 1".into());
            }
        }
        let circuit = match &self.circuit {
            Some(c) => match c.build() {
                Ok(c) => Some(c),
                Err(e) => {
                    bad("circuit", e.to_string());
                    None
                }
            },
            None => None,
        };
        let n_modes = self.n_inputs();
        if let Some(m) = &self.measurement {
            if m.mode >= n_modes {
                bad("measurement.mode", format!("{} out of range for {n_modes} modes", m.mode));
            }
            if !m.angle.is_finite() {
                bad("measurement.angle", "must be finite".into());
            }
            if let Some(g) = &m.grid {
                if let Err(e) = OutcomeGrid::new(g.lo, g.hi, g.points) {
                    bad("measurement.grid", e.to_string());
                }
            } else if m.outcomes.is_empty() {
                bad("measurement", "needs `grid` or a non-empty `outcomes` list".into());
            }
            if n_modes < 2 {
                bad("measurement", "at least one mode must stay unmeasured".into());
            }
        }
        if let Some(l) = &self.loss {
            if let Err(e) = l.validate(n_modes) {
                bad("loss", e.to_string());
            }
        }
        let kept = n_modes - usize::from(self.measurement.is_some());
        for (i, s) in self.stabilizers.iter().enumerate() {
            match s.spec() {
                Ok(spec) if spec.displacement.len() != 2 * kept => bad(
                    &format!("stabilizers[{i}]"),
                    format!("acts on {} modes, expected {kept}", spec.displacement.len() / 2),
                ),
                Ok(spec) if spec.displacement.iter().any(|v| !v.is_finite()) => {
                    bad(&format!("stabilizers[{i}].displacement"), "must be finite".into())
                }
                Err(e) => bad(&format!("stabilizers[{i}]"), e.to_string()),
                _ => {}
            }
        }
        match self.experiment {
            ExperimentKind::Custom => {
                if circuit.is_none() && self.circuit.is_none() {
                    bad("circuit", "required for custom experiments".into());
                }
                if self.stabilizers.is_empty() {
                    bad("stabilizers", "required for custom experiments".into());
                }
                if self.sample_outcomes > 0 && self.measurement.as_ref().and_then(|m| m.grid).is_none() {
                    bad("sample_outcomes", "sampling needs measurement.grid".into());
                }
            }
            ExperimentKind::FockConvergence => {
                if self.fock_cutoffs.is_empty() {
                    bad("fock_cutoffs", "must be non-empty".into());
                }
                for (i, &c) in self.fock_cutoffs.iter().enumerate() {
                    if c == 0 || c > crate::fock::MAX_CUTOFF {
                        bad(&format!("fock_cutoffs[{i}]"), format!("must be in 1..={}", crate::fock::MAX_CUTOFF));
                    }
                }
                if self.loss.is_some() {
                    bad("loss", "the Fock comparison is lossless".into());
                }
            }
            _ => {
                if self.circuit.is_some() && !matches!(self.experiment, ExperimentKind::Linear3Witness) {
                    bad("circuit", "only custom and linear3_witness experiments take a circuit".into());
                }
                if let (ExperimentKind::Linear3Witness, Some(c)) = (self.experiment, &self.circuit) {
                    if !matches!(c, CircuitRef::Linear3(_)) {
                        bad("circuit", "linear3_witness takes a `linear3` circuit".into());
                    }
                }
            }
        }
        if self.sample_outcomes > 0 && self.experiment != ExperimentKind::Custom {
            bad("sample_outcomes", "only custom experiments sample outcomes".into());
        }
        issues
    }
}
