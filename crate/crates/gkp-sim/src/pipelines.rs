//! Named end-to-end scenarios: bred inputs, a circuit, a homodyne plan, stabilizers.
//!
//! Inputs with an even number of breeding rounds sit half a sensor period off the origin;
//! scenarios built with `compensate = true` shift the postselection targets and rephase the
//! expectation values so results refer to the centred lattice.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::circuits::{
    dumbbell_cz, Linear3Angles, SymplecticCircuit, LINEAR3_MEASURED_MODE, LINEAR3_MEASUREMENT_ANGLE,
};
use crate::error::{Result, SimError};
use crate::measurement::{
    average_stabilizer_ev, compensation, evaluate, witness_from, AverageResult, Compensation, EvalOptions,
    MeasurementPlan, OutcomeGrid, ProductState, Setup, StabilizerResult, StabilizerSpec, WitnessResult,
};
use crate::phase_space::{displacement_ev, LossSpec};
use crate::states::{bred_gkp, BreedingParams, SENSOR_HALF_SPACING};

/// Where a bred input's lattice sits relative to the origin.
pub fn input_offset(p: &BreedingParams) -> [f64; 2] {
    if p.rounds.is_multiple_of(2) {
        [SENSOR_HALF_SPACING * p.cat_amplitude / BreedingParams::sensor_amplitude(p.rounds), 0.0]
    } else {
        [0.0, 0.0]
    }
}

/// A circuit on identical bred inputs with one homodyne measurement.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub input: ProductState,
    pub circuit: SymplecticCircuit,
    pub loss: Option<LossSpec>,
    /// Postselection with outcomes expressed in the centred frame.
    pub plan: MeasurementPlan,
    pub compensation: Option<Compensation>,
}

impl Scenario {
    pub fn new(
        breeding: &BreedingParams,
        n_inputs: usize,
        circuit: SymplecticCircuit,
        loss: Option<LossSpec>,
        plan: MeasurementPlan,
        compensate: bool,
    ) -> Result<Self> {
        if circuit.n_modes() != n_inputs {
            return Err(SimError::Dimension("circuit size does not match the number of inputs".into()));
        }
        let single = bred_gkp(breeding)?;
        let input = ProductState::new(vec![single; n_inputs])?;
        let offset = input_offset(breeding);
        let comp = if compensate && offset != [0.0, 0.0] {
            let shift: Vec<f64> = (0..n_inputs).flat_map(|_| offset).collect();
            Some(compensation(&circuit, loss.as_ref(), &plan, &shift)?)
        } else {
            None
        };
        Ok(Self { input, circuit, loss, plan, compensation: comp })
    }

    fn raw_plan(&self, outcome: f64) -> MeasurementPlan {
        let p = self.plan.with_outcomes(&[outcome]);
        match &self.compensation {
            Some(c) => p.shifted(&c.outcome_shift),
            None => p,
        }
    }

    fn rephase(&self, r: &mut StabilizerResult, stab: &StabilizerSpec) {
        if let Some(c) = &self.compensation {
            r.value *= c.frame_phase(stab);
        }
    }

    pub fn evs(&self, outcome: f64, stabs: &[StabilizerSpec], opts: EvalOptions) -> Result<Vec<StabilizerResult>> {
        let setup = Setup::new(self.circuit.n_modes(), &self.circuit, self.loss.as_ref(), &self.raw_plan(outcome))?;
        let mut r = evaluate(&self.input, &setup, stabs, opts)?;
        r.iter_mut().zip(stabs).for_each(|(r, s)| self.rephase(r, s));
        Ok(r)
    }

    pub fn average(&self, stab: &StabilizerSpec, grid: &OutcomeGrid, opts: EvalOptions) -> Result<AverageResult> {
        let shift = self.compensation.as_ref().map_or(0.0, |c| c.outcome_shift[0]);
        let shifted = OutcomeGrid::new(grid.lo + shift, grid.hi + shift, grid.points)?;
        let mut r = average_stabilizer_ev(&self.input, &self.circuit, self.loss.as_ref(), &self.plan, stab, &shifted, opts)?;
        if let Some(c) = &self.compensation {
            r.mean *= c.frame_phase(stab);
        }
        Ok(r)
    }

    pub fn witness(&self, outcome: f64, stabs: &[StabilizerSpec], constant: f64, opts: EvalOptions) -> Result<WitnessResult> {
        let r = self.evs(outcome, stabs, opts)?;
        Ok(witness_from(&r, stabs, constant))
    }
}

/// Two bred inputs, the dumbbell CZ, and a `p` measurement of mode 2.
pub fn bell_scenario(breeding: &BreedingParams, loss: Option<LossSpec>, compensate: bool) -> Result<Scenario> {
    Scenario::new(breeding, 2, dumbbell_cz(), loss, MeasurementPlan::p(2, 1, 0.0), compensate)
}

/// Four bred inputs through the three-mode linear-cluster circuit, fusing measurement in `x`
/// on mode 1; the kept modes are (0, 2, 3).
pub fn linear3_scenario(breeding: &BreedingParams, angles: &Linear3Angles, loss: Option<LossSpec>) -> Result<Scenario> {
    let plan = MeasurementPlan::single(4, LINEAR3_MEASURED_MODE, LINEAR3_MEASUREMENT_ANGLE, 0.0);
    Scenario::new(breeding, 4, angles.description().build()?, loss, plan, true)
}

pub const WITNESS_CONSTANT: f64 = 2.0;

/// `W = 2 − I Z X − X Z I − Z X Z` on the kept modes.
pub fn witness_w() -> Vec<StabilizerSpec> {
    ["IZX", "XZI", "ZXZ"].iter().map(|s| StabilizerSpec::qubit(s).expect("valid Pauli string")).collect()
}

/// `W̄ = 2 − Z Z X − X Z Z − Z X Z`.
pub fn witness_w_bar() -> Vec<StabilizerSpec> {
    ["ZZX", "XZZ", "ZXZ"].iter().map(|s| StabilizerSpec::qubit(s).expect("valid Pauli string")).collect()
}

/// Both witnesses at the centred outcome `x = 0` in one pass over the mixture.
pub fn linear3_witnesses(scenario: &Scenario, opts: EvalOptions) -> Result<(WitnessResult, WitnessResult)> {
    let w = witness_w();
    let wb = witness_w_bar();
    let all: Vec<StabilizerSpec> = w.iter().chain(&wb).cloned().collect();
    let r = scenario.evs(0.0, &all, opts)?;
    Ok((witness_from(&r[..3], &w, WITNESS_CONSTANT), witness_from(&r[3..], &wb, WITNESS_CONSTANT)))
}

/// Sensor-lattice stabilizer values `⟨D(0, √(2π))⟩` and `⟨D(√(2π), 0)⟩`, centred.
pub fn sensor_stabilizers(breeding: &BreedingParams) -> Result<(Complex64, Complex64)> {
    let s = bred_gkp(breeding)?;
    let l = (2.0 * PI).sqrt();
    let off = input_offset(breeding);
    // Centre the lattice: a displacement d multiplies ⟨D(r̄)⟩ by exp(i Jᵀd), J = Ω r̄.
    let ex = displacement_ev(&s, &[0.0, l])? * Complex64::new(0.0, l * off[0]).exp();
    let ep = displacement_ev(&s, &[l, 0.0])? * Complex64::new(0.0, -l * off[1]).exp();
    Ok((ex, ep))
}

/// Number of mixture terms for `inputs` bred states.
pub fn term_count(rounds: u32, inputs: u32) -> u128 {
    ((rounds as u128) + 2).pow(2 * inputs)
}
