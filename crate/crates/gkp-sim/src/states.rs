//! Input-state builders.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::phase_space::{normalize, GaussianSumState, GaussianTerm};

pub const DEFAULT_MAX_ROUNDS: u32 = 8;

pub fn vacuum(n: usize) -> GaussianSumState {
    let n = n.max(1);
    let term = GaussianTerm::new(
        Complex64::new(1.0, 0.0),
        DVector::from_element(2 * n, Complex64::new(0.0, 0.0)),
        Arc::new(DMatrix::identity(2 * n, 2 * n) * 0.5),
    );
    GaussianSumState::new(n, vec![term]).expect("vacuum is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreedingParams {
    pub rounds: u32,
    pub cat_amplitude: f64,
    pub cat_squeezing: f64,
}

impl BreedingParams {
    pub fn new(rounds: u32, cat_amplitude: f64, cat_squeezing: f64) -> Self {
        Self { rounds, cat_amplitude, cat_squeezing }
    }

    /// Amplitude whose output peaks sit on the sensor lattice (spacing `√(2π)`).
    pub fn sensor_amplitude(rounds: u32) -> f64 {
        (PI * 2f64.powi(rounds as i32)).sqrt()
    }

    /// Amplitude whose output peaks sit on the qubit lattice (spacing `√π`).
    pub fn qubit_amplitude(rounds: u32) -> f64 {
        (PI * 2f64.powi(rounds as i32 - 1)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds > DEFAULT_MAX_ROUNDS {
            return Err(SimError::InvalidParameter(format!(
                "{} breeding rounds exceeds the maximum of {DEFAULT_MAX_ROUNDS}",
                self.rounds
            )));
        }
        if !self.cat_amplitude.is_finite() || !self.cat_squeezing.is_finite() {
            return Err(SimError::InvalidParameter("breeding parameters must be finite".into()));
        }
        Ok(())
    }

    /// `β_k` for `k = 0..=rounds+1`.
    pub fn betas(&self) -> Vec<f64> {
        let m = self.rounds as i32;
        let scale = self.cat_amplitude / (2.0 * 2f64.powi(m).sqrt());
        (0..=m + 1).map(|k| (2 * k - (m + 1)) as f64 * scale).collect()
    }

    /// Position of the outermost-displacement lattice: peak x-spacing `√2 α / √(2^𝓜)`.
    pub fn peak_spacing(&self) -> f64 {
        2f64.sqrt() * self.cat_amplitude / 2f64.powi(self.rounds as i32).sqrt()
    }
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `(D(−α/2) + D(α/2)) S(ξ)|0⟩`, normalized.
pub fn squeezed_cat(alpha: f64, xi: f64) -> Result<GaussianSumState> {
    bred_gkp(&BreedingParams::new(0, alpha, xi))
}

/// State after `𝓜` rounds of cat breeding: `(𝓜+2)²` terms indexed by `(k, k′)`.
pub fn bred_gkp(p: &BreedingParams) -> Result<GaussianSumState> {
    p.validate()?;
    let m = p.rounds;
    let beta = p.betas();
    let e2 = (2.0 * p.cat_squeezing).exp();
    let cov = Arc::new(DMatrix::from_diagonal(&DVector::from_vec(vec![0.5 / e2, 0.5 * e2])));
    let s = 0.5f64.sqrt();
    let mut terms = Vec::with_capacity(beta.len() * beta.len());
    for (k, &bk) in beta.iter().enumerate() {
        for (kp, &bkp) in beta.iter().enumerate() {
            let db = bk - bkp;
            let log_w = ln_binomial(m + 1, k as u32) + ln_binomial(m + 1, kp as u32) - 0.5 * e2 * db * db;
            let mean = DVector::from_vec(vec![
                Complex64::new(s * (bk + bkp), 0.0),
                Complex64::new(0.0, e2 * s * (bkp - bk)),
            ]);
            terms.push(GaussianTerm::from_log(Complex64::new(log_w, 0.0), mean, cov.clone()));
        }
    }
    normalize(&GaussianSumState::new(1, terms)?)
}

/// Gaussian-random-noise channel applied to an ideal sensor state, realised as a finite
/// lattice of Gaussian peaks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrnParams {
    /// Σ₀: variance of the x-displacement noise.
    pub sigma_x: f64,
    /// Σ₁: variance of the p-displacement noise.
    pub sigma_p: f64,
    pub lattice_halfwidth: u32,
    /// Extra peak variance, only needed to keep covariances invertible when Σ = 0.
    pub base_peak_variance: f64,
}

impl GrnParams {
    pub fn new(sigma_x: f64, sigma_p: f64) -> Self {
        Self { sigma_x, sigma_p, lattice_halfwidth: 12, base_peak_variance: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_x >= 0.0 && self.sigma_p >= 0.0) {
            return Err(SimError::InvalidParameter("GRN variances must be non-negative".into()));
        }
        if !(self.base_peak_variance >= 0.0) {
            return Err(SimError::InvalidParameter("base peak variance must be non-negative".into()));
        }
        if self.sigma_x + self.base_peak_variance <= 0.0 || self.sigma_p + self.base_peak_variance <= 0.0 {
            return Err(SimError::InvalidParameter(
                "zero peak width: set a positive base peak variance".into(),
            ));
        }
        if self.lattice_halfwidth == 0 {
            return Err(SimError::Truncation("lattice half-width must be at least one period".into()));
        }
        Ok(())
    }

    fn cov(&self) -> [f64; 2] {
        [self.sigma_x + self.base_peak_variance, self.sigma_p + self.base_peak_variance]
    }
}

/// Half the sensor-lattice period: peaks of the sensor Wigner function sit at `(s a, t a)`
/// with sign `(−1)^{st}`.
pub const SENSOR_HALF_SPACING: f64 = 1.253_314_137_315_500_3; // √(π/2)

fn sensor_sign(s: i64, t: i64) -> f64 {
    if (s * t).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Single-mode GRN sensor state on the half-open box `s, t ∈ [−n, n)`.
///
/// The box spans whole periods of the sign pattern, so expectation values of lattice
/// displacements are exact for any `n ≥ 1`; larger `n` only matters for Wigner plots.
pub fn grn_sensor(g: &GrnParams) -> Result<GaussianSumState> {
    g.validate()?;
    let n = g.lattice_halfwidth as i64;
    let a = SENSOR_HALF_SPACING;
    let cov = Arc::new(DMatrix::from_diagonal(&DVector::from_row_slice(&g.cov())));
    let mut terms = Vec::with_capacity((4 * n * n) as usize);
    for s in -n..n {
        for t in -n..n {
            let mean = DVector::from_vec(vec![Complex64::new(s as f64 * a, 0.0), Complex64::new(t as f64 * a, 0.0)]);
            terms.push(GaussianTerm::new(Complex64::new(sensor_sign(s, t), 0.0), mean, cov.clone()));
        }
    }
    normalize(&GaussianSumState::new(1, terms)?)
}

/// Relative window weight below which lattice sites are dropped.
pub const WINDOW_CUTOFF: f64 = 1e-14;

/// Two GRN sensor states, truncated jointly for the dumbbell circuit with the `p`
/// quadrature of output mode 2 postselected at `eta`.
///
/// The readout `(x₁ + p₂)/√2` only sees `k = s₁ + t₂`, so `k` is truncated by its window
/// weight, while `d = s₁ − t₂` and the free indices `t₁`, `s₂` run over complete
/// periods. Truncating each mode separately instead leaves an `O(1/n)` bias in the
/// postselected expectation values.
pub fn grn_bell_input(mode1: &GrnParams, mode2: &GrnParams, eta: f64) -> Result<GaussianSumState> {
    mode1.validate()?;
    mode2.validate()?;
    let a = SENSOR_HALF_SPACING;
    let n = mode1.lattice_halfwidth.min(mode2.lattice_halfwidth) as i64;
    let (c1, c2) = (mode1.cov(), mode2.cov());
    let width = c1[0] + c2[1];
    let centre = (eta * 2f64.sqrt() / a).round() as i64;
    let weight = |k: i64| -((a * k as f64 / 2f64.sqrt() - eta).powi(2)) / width;
    let log_cut = WINDOW_CUTOFF.ln();
    let mut k_lo = centre;
    while weight(k_lo - 1) > log_cut {
        k_lo -= 1;
    }
    let mut k_hi = centre;
    while weight(k_hi + 1) > log_cut {
        k_hi += 1;
    }
    let cov = Arc::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[c1[0], c1[1], c2[0], c2[1]])));
    let mut terms = Vec::new();
    for k in k_lo..=k_hi {
        let parity = k.rem_euclid(2);
        for d in (parity - 2 * n..parity + 2 * n).step_by(2) {
            let s1 = (k + d) / 2;
            let t2 = (k - d) / 2;
            for t1 in -n..n {
                for s2 in -n..n {
                    let sign = sensor_sign(s1, t1) * sensor_sign(s2, t2);
                    let mean = DVector::from_iterator(
                        4,
                        [s1, t1, s2, t2].iter().map(|&v| Complex64::new(v as f64 * a, 0.0)),
                    );
                    terms.push(GaussianTerm::new(Complex64::new(sign, 0.0), mean, cov.clone()));
                }
            }
        }
    }
    normalize(&GaussianSumState::new(2, terms)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{displacement_ev, purity, trace};

    #[test]
    fn bred_term_count_and_shared_covariance() {
        for m in 0..5 {
            let s = bred_gkp(&BreedingParams::new(m, 4.0, 0.5)).unwrap();
            assert_eq!(s.len(), ((m + 2) * (m + 2)) as usize);
            let c0 = s.terms()[0].cov.clone();
            assert!(s.terms().iter().all(|t| *t.cov == *c0));
            assert!((trace(&s) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn swapping_indices_conjugates_the_mean() {
        let p = BreedingParams::new(2, 4.0, 0.7);
        let s = bred_gkp(&p).unwrap();
        let k = (p.rounds + 2) as usize;
        for i in 0..k {
            for j in 0..k {
                let a = &s.terms()[i * k + j];
                let b = &s.terms()[j * k + i];
                assert_eq!(a.mean[1], b.mean[1].conj());
                assert_eq!(a.mean[0], b.mean[0]);
                assert!((a.weight() - b.weight()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_amplitude_cat_is_squeezed_vacuum() {
        let s = squeezed_cat(0.0, 0.4).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.terms().iter().all(|t| t.mean.iter().all(|m| m.norm() == 0.0)));
        assert!((trace(&s) - 1.0).norm() < 1e-12);
        assert!((purity(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_cat_matches_zero_round_breeding() {
        let a = squeezed_cat(4.0, 0.5).unwrap();
        let b = bred_gkp(&BreedingParams::new(0, 4.0, 0.5)).unwrap();
        for (x, y) in a.terms().iter().zip(b.terms()) {
            assert_eq!(x.mean, y.mean);
            assert!((x.weight() - y.weight()).norm() < 1e-15);
        }
    }

    #[test]
    fn cat_has_zero_mean_position() {
        // d/ds ⟨D(0, s)⟩ at s = 0 is i⟨x⟩.
        let s = squeezed_cat(4.0, 0.0).unwrap();
        let h = 1e-5;
        let d = displacement_ev(&s, &[0.0, h]).unwrap() - displacement_ev(&s, &[0.0, -h]).unwrap();
        assert!((d / (2.0 * h)).norm() < 1e-9);
    }

    #[test]
    fn odd_rounds_centre_and_even_rounds_displace() {
        // Peaks on √(2π)ℤ give ⟨e^{i√(2π)x}⟩ > 0; a half-period offset flips the sign.
        let l = (2.0 * PI).sqrt();
        for m in 1..=4u32 {
            let p = BreedingParams::new(m, BreedingParams::sensor_amplitude(m), 0.5);
            let s = bred_gkp(&p).unwrap();
            let ev = displacement_ev(&s, &[0.0, l]).unwrap();
            assert!(ev.im.abs() < 1e-12, "M={m}: {ev}");
            if m % 2 == 1 {
                assert!(ev.re > 0.3, "M={m}: {ev}");
            } else {
                assert!(ev.re < -0.3, "M={m}: {ev}");
            }
        }
    }

    #[test]
    fn grn_single_mode_evs_are_exact() {
        let g = GrnParams { lattice_halfwidth: 3, ..GrnParams::new(0.05, 0.08) };
        let s = grn_sensor(&g).unwrap();
        let l = (2.0 * PI).sqrt();
        let ex = displacement_ev(&s, &[0.0, l]).unwrap();
        let ep = displacement_ev(&s, &[l, 0.0]).unwrap();
        assert!((ex.re - (-PI * 0.05f64).exp()).abs() < 1e-12 && ex.im.abs() < 1e-12);
        assert!((ep.re - (-PI * 0.08f64).exp()).abs() < 1e-12 && ep.im.abs() < 1e-12);
    }

    #[test]
    fn noiseless_grn_limit() {
        let g = GrnParams { base_peak_variance: 1e-6, ..GrnParams::new(0.0, 0.0) };
        let s = grn_sensor(&g).unwrap();
        let l = (2.0 * PI).sqrt();
        for r in [[0.0, l], [l, 0.0]] {
            assert!((displacement_ev(&s, &r).unwrap() - 1.0).norm() < 1e-4);
        }
        assert!(grn_sensor(&GrnParams::new(0.0, 0.0)).is_err());
        assert!(grn_sensor(&GrnParams { lattice_halfwidth: 0, ..GrnParams::new(0.1, 0.1) }).is_err());
    }

    #[test]
    fn binomial_logs() {
        assert!((ln_binomial(5, 2) - 10f64.ln()).abs() < 1e-15);
        assert_eq!(ln_binomial(4, 0), 0.0);
    }
}
