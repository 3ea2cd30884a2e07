//! Closed forms for ideal sensor states under Gaussian random displacement noise.
//!
//! Σ₀ and Σ₁ are the variances of the x- and p-displacement noise in quadrature units.
//! The usual effective-squeezing widths satisfy `Σ = Δ²/2`, so that
//! `|⟨S_x(√(2π))⟩| = exp(−πΣ₀) = exp(−πΔ_x²/2)`.
//!
//! The two-mode results describe the dumbbell Bell pair with the `p` quadrature of mode 2
//! postselected on `p₂`: `Σ₀,₁` is the x-noise of mode 1 and `Σ₁,₂` the p-noise of mode 2.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::measurement::{simpson, AverageResult};

const SERIES_EPS: f64 = 1e-17;

/// Jacobi `θ₃(z, q) = Σ_n q^{n²} e^{2inz}`, summed symmetrically until the tail is negligible.
pub fn theta3(z: Complex64, q: f64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&q) {
        return Err(SimError::Domain(format!("theta nome {q} outside [0, 1)")));
    }
    if q == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let lq = q.ln();
    // log|term n| = n² ln q ∓ 2n Im z peaks near n* = |Im z| / (−ln q).
    let peak = (z.im.abs() / -lq).ceil() as i64;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut n: i64 = 1;
    loop {
        let nf = n as f64;
        let base = nf * nf * lq;
        let plus = (Complex64::new(0.0, 2.0 * nf) * z + base).exp();
        let minus = (Complex64::new(0.0, -2.0 * nf) * z + base).exp();
        sum += plus + minus;
        let bound = (base + 2.0 * nf * z.im.abs()).exp();
        if n > peak && bound <= SERIES_EPS * sum.norm().max(f64::MIN_POSITIVE) {
            break;
        }
        n += 1;
        if n > 1_000_000 {
            return Err(SimError::Domain("theta series failed to converge".into()));
        }
    }
    Ok(sum)
}

/// `Σ = (1/2π) log(1/|⟨S⟩|²)`.
pub fn sigma_from_ev(ev_magnitude: f64) -> Result<f64> {
    if !(ev_magnitude > 0.0 && ev_magnitude <= 1.0) {
        return Err(SimError::Domain(format!("stabilizer magnitude {ev_magnitude} outside (0, 1]")));
    }
    Ok(-ev_magnitude.ln() / PI)
}

pub fn grn_single_ev(sigma: f64) -> f64 {
    (-PI * sigma).exp()
}

pub fn sigma_from_delta(delta: f64) -> f64 {
    0.5 * delta * delta
}

pub fn delta_from_sigma(sigma: f64) -> f64 {
    (2.0 * sigma).sqrt()
}

fn check_sigmas(s01: f64, s12: f64) -> Result<f64> {
    if !(s01 >= 0.0 && s12 >= 0.0) {
        return Err(SimError::Domain("noise variances must be non-negative".into()));
    }
    let s = s01 + s12;
    if s <= 0.0 {
        return Err(SimError::Domain("degenerate nome: Σ₀,₁ + Σ₁,₂ = 0".into()));
    }
    Ok(s)
}

/// Postselected `⟨exp(i 2√π x̂₁)⟩` on the Bell pair:
/// `exp(−4πΣ₀,₁ − 2i√π p₂) θ₃(√π p₂ − 2iπΣ₀,₁, q) / θ₃(√π p₂, q)`, `q = exp(−π(Σ₀,₁ + Σ₁,₂))`.
pub fn grn_bell_x_ev(sigma01: f64, sigma12: f64, p2: f64) -> Result<Complex64> {
    let s = check_sigmas(sigma01, sigma12)?;
    let q = (-PI * s).exp();
    let sp = PI.sqrt();
    let num = theta3(Complex64::new(sp * p2, -2.0 * PI * sigma01), q)?;
    let den = theta3(Complex64::new(sp * p2, 0.0), q)?;
    Ok(Complex64::new(-4.0 * PI * sigma01, -2.0 * sp * p2).exp() * num / den)
}

/// Postselected `⟨exp(−i 2√π p̂₁)⟩`, which factorizes into single-mode values for any `p₂`.
pub fn grn_bell_p_ev(sigma11: f64, sigma02: f64) -> f64 {
    (-PI * sigma11).exp() * (-PI * sigma02).exp()
}

/// Density of the `p₂` outcome, normalized to one per period `√π`:
/// `Σ_k exp(−(√π k − p₂)²/s) / √(π s)` with `s = Σ₀,₁ + Σ₁,₂`.
pub fn grn_outcome_density(sigma01: f64, sigma12: f64, p2: f64) -> Result<f64> {
    let s = check_sigmas(sigma01, sigma12)?;
    let sp = PI.sqrt();
    let centre = (p2 / sp).round() as i64;
    let term = |k: i64| (-(sp * k as f64 - p2).powi(2) / s).exp();
    let mut sum = term(centre);
    let mut k = 1;
    loop {
        let t = term(centre + k) + term(centre - k);
        sum += t;
        if t <= SERIES_EPS * sum {
            break;
        }
        k += 1;
    }
    Ok(sum / (PI * s).sqrt())
}

/// One-period outcome average of the postselected `exp(i 2√π x̂₁)` value.
pub fn grn_bell_x_average(sigma01: f64, sigma12: f64, points: usize) -> Result<AverageResult> {
    if points < 3 || points.is_multiple_of(2) {
        return Err(SimError::InvalidParameter("average needs an odd number (≥3) of points".into()));
    }
    let h = PI.sqrt() / (points - 1) as f64;
    let mut p = Vec::with_capacity(points);
    let (mut re, mut im, mut mag) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..points {
        let x = h * i as f64;
        let d = grn_outcome_density(sigma01, sigma12, x)?;
        let v = grn_bell_x_ev(sigma01, sigma12, x)?;
        p.push(d);
        re.push(d * v.re);
        im.push(d * v.im);
        mag.push(d * v.norm());
    }
    let total = simpson(&p, h);
    Ok(AverageResult {
        mean: Complex64::new(simpson(&re, h), simpson(&im, h)) / total,
        mean_magnitude: simpson(&mag, h) / total,
        probability: total,
    })
}
