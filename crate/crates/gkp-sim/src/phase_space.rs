//! Multimode Wigner functions as finite sums of complex-weighted Gaussians.
//!
//! Conventions used throughout the crate:
//! * quadratures are ordered `r = (x₁, p₁, …, x_N, p_N)`;
//! * `Ω` is block diagonal with blocks `[[0, 1], [-1, 0]]`;
//! * the vacuum covariance is `½𝟙`, i.e. `x = (a + a†)/√2`, `[x, p] = i`;
//! * the displacement `D(r̄) = exp(-i r̄ᵀ Ω r̂)` shifts `x` by `r̄_x` and `p` by `r̄_p`,
//!   and its expectation value is `E_W[exp(i (Ω r̄)ᵀ r)]`.
//!
//! Covariances are real and shared between terms through `Arc`, because every
//! construction used here (breeding, tensoring, symplectic maps, loss) produces only a
//! handful of distinct covariance matrices.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::linalg::{max_abs, mat_cvec, CovFactor};
use crate::logsum::LogSum;

/// Symplectic form for `n` modes.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// `Ω v` for a displacement vector, i.e. the characteristic-function argument.
pub fn omega_apply(v: &[f64]) -> Vec<f64> {
    v.chunks(2).flat_map(|c| [c[1], -c[0]]).collect()
}

#[derive(Clone, Debug)]
pub struct GaussianTerm {
    /// Weight is `coeff · exp(log_scale)`.
    pub coeff: Complex64,
    pub log_scale: f64,
    pub mean: DVector<Complex64>,
    pub cov: Arc<DMatrix<f64>>,
}

impl GaussianTerm {
    pub fn new(coeff: Complex64, mean: DVector<Complex64>, cov: Arc<DMatrix<f64>>) -> Self {
        Self { coeff, log_scale: 0.0, mean, cov }
    }

    pub fn from_log(log_weight: Complex64, mean: DVector<Complex64>, cov: Arc<DMatrix<f64>>) -> Self {
        Self {
            coeff: Complex64::new(0.0, log_weight.im).exp(),
            log_scale: log_weight.re,
            mean,
            cov,
        }
    }

    /// Complex log of the weight; `-∞` real part for a zero coefficient.
    pub fn log_weight(&self) -> Complex64 {
        if self.coeff == Complex64::new(0.0, 0.0) {
            return Complex64::new(f64::NEG_INFINITY, 0.0);
        }
        self.coeff.ln() + self.log_scale
    }

    pub fn weight(&self) -> Complex64 {
        self.coeff * self.log_scale.exp()
    }
}

#[derive(Clone, Debug)]
pub struct GaussianSumState {
    n_modes: usize,
    terms: Vec<GaussianTerm>,
    normalized: bool,
}

fn check_cov(cov: &DMatrix<f64>, dim: usize) -> Result<()> {
    if cov.nrows() != dim || cov.ncols() != dim {
        return Err(SimError::Dimension(format!(
            "covariance is {}x{}, expected {dim}x{dim}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let asym = max_abs(&(cov - cov.transpose()));
    if asym > 1e-12 * max_abs(cov).max(f64::MIN_POSITIVE) {
        return Err(SimError::NotPositiveDefinite(format!("asymmetry {asym:.3e}")));
    }
    CovFactor::new(cov).map(|_| ())
}

impl GaussianSumState {
    /// Validates dimensions, symmetry and positive-definiteness (once per distinct covariance).
    pub fn new(n_modes: usize, terms: Vec<GaussianTerm>) -> Result<Self> {
        if n_modes == 0 {
            return Err(SimError::InvalidParameter("mode count must be positive".into()));
        }
        let dim = 2 * n_modes;
        let mut seen: Vec<*const DMatrix<f64>> = Vec::new();
        for t in &terms {
            if t.mean.len() != dim {
                return Err(SimError::Dimension(format!("mean has length {}, expected {dim}", t.mean.len())));
            }
            let p = Arc::as_ptr(&t.cov);
            if !seen.contains(&p) {
                check_cov(&t.cov, dim)?;
                seen.push(p);
            }
        }
        Ok(Self { n_modes, terms, normalized: false })
    }

    pub(crate) fn from_parts_unchecked(n_modes: usize, terms: Vec<GaussianTerm>, normalized: bool) -> Self {
        Self { n_modes, terms, normalized }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Distinct covariance matrices (by identity) and the class of each term.
    pub(crate) fn cov_classes(&self) -> (Vec<Arc<DMatrix<f64>>>, Vec<usize>) {
        let mut classes: Vec<Arc<DMatrix<f64>>> = Vec::new();
        let mut index: HashMap<*const DMatrix<f64>, usize> = HashMap::new();
        let ids = self
            .terms
            .iter()
            .map(|t| {
                *index.entry(Arc::as_ptr(&t.cov)).or_insert_with(|| {
                    classes.push(t.cov.clone());
                    classes.len() - 1
                })
            })
            .collect();
        (classes, ids)
    }

    fn map_covs(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> HashMap<*const DMatrix<f64>, Arc<DMatrix<f64>>> {
        let (classes, _) = self.cov_classes();
        classes.iter().map(|c| (Arc::as_ptr(c), Arc::new(f(c)))).collect()
    }
}

fn check_point(state: &GaussianSumState, len: usize, what: &str) -> Result<()> {
    if len != 2 * state.n_modes {
        return Err(SimError::Dimension(format!(
            "{what} has length {len}, expected {}",
            2 * state.n_modes
        )));
    }
    Ok(())
}

/// `Σ_m c_m G_m(r)`.
pub fn evaluate_wigner(state: &GaussianSumState, r: &[f64]) -> Result<Complex64> {
    check_point(state, r.len(), "phase-space point")?;
    let mut factors: HashMap<*const DMatrix<f64>, CovFactor> = HashMap::new();
    let mut sum = LogSum::ZERO;
    for t in &state.terms {
        let key = Arc::as_ptr(&t.cov);
        if let std::collections::hash_map::Entry::Vacant(e) = factors.entry(key) {
            e.insert(CovFactor::new(&t.cov)?);
        }
        let f = &factors[&key];
        let d: Vec<Complex64> = r.iter().zip(t.mean.iter()).map(|(&x, &m)| x - m).collect();
        sum.push(t.log_weight() - 0.5 * f.quad(&d) - 0.5 * f.logdet_2pi());
    }
    Ok(sum.value())
}

/// Each normalized Gaussian integrates to one (also for complex means), so the trace is `Σ c_m`.
pub fn trace(state: &GaussianSumState) -> Complex64 {
    log_trace(state).value()
}

pub(crate) fn log_trace(state: &GaussianSumState) -> LogSum {
    let mut s = LogSum::ZERO;
    state.terms.iter().for_each(|t| s.push(t.log_weight()));
    s
}

pub fn normalize(state: &GaussianSumState) -> Result<GaussianSumState> {
    let tr = log_trace(state);
    if tr.is_zero() {
        return Err(SimError::InvalidParameter("cannot normalize a state with zero trace".into()));
    }
    let l = tr.ln();
    let phase = Complex64::new(0.0, -l.im).exp();
    let terms = state
        .terms
        .iter()
        .map(|t| GaussianTerm {
            coeff: t.coeff * phase,
            log_scale: t.log_scale - l.re,
            mean: t.mean.clone(),
            cov: t.cov.clone(),
        })
        .collect();
    Ok(GaussianSumState::from_parts_unchecked(state.n_modes, terms, true))
}

/// Covariance blocks keyed by the identity of their two factors' shared matrices.
type BlockCache = HashMap<(*const DMatrix<f64>, *const DMatrix<f64>), Arc<DMatrix<f64>>>;

pub fn tensor(a: &GaussianSumState, b: &GaussianSumState) -> GaussianSumState {
    let (na, nb) = (2 * a.n_modes, 2 * b.n_modes);
    let mut blocks = BlockCache::new();
    let mut terms = Vec::with_capacity(a.len() * b.len());
    for ta in &a.terms {
        for tb in &b.terms {
            let cov = blocks
                .entry((Arc::as_ptr(&ta.cov), Arc::as_ptr(&tb.cov)))
                .or_insert_with(|| {
                    let mut m = DMatrix::zeros(na + nb, na + nb);
                    m.view_mut((0, 0), (na, na)).copy_from(&*ta.cov);
                    m.view_mut((na, na), (nb, nb)).copy_from(&*tb.cov);
                    Arc::new(m)
                })
                .clone();
            let mean = DVector::from_iterator(na + nb, ta.mean.iter().chain(tb.mean.iter()).copied());
            terms.push(GaussianTerm {
                coeff: ta.coeff * tb.coeff,
                log_scale: ta.log_scale + tb.log_scale,
                mean,
                cov,
            });
        }
    }
    GaussianSumState::from_parts_unchecked(a.n_modes + b.n_modes, terms, a.normalized && b.normalized)
}

/// `μ → Aμ`, `γ → AγAᵀ`.
pub fn apply_symplectic(state: &GaussianSumState, a: &crate::circuits::SymplecticCircuit) -> Result<GaussianSumState> {
    if a.n_modes() != state.n_modes {
        return Err(SimError::Dimension(format!(
            "circuit acts on {} modes, state has {}",
            a.n_modes(),
            state.n_modes
        )));
    }
    let m = a.matrix();
    let covs = state.map_covs(|c| m * c * m.transpose());
    Ok(map_terms(state, m, &covs))
}

fn map_terms(
    state: &GaussianSumState,
    m: &DMatrix<f64>,
    covs: &HashMap<*const DMatrix<f64>, Arc<DMatrix<f64>>>,
) -> GaussianSumState {
    let terms = state
        .terms
        .iter()
        .map(|t| GaussianTerm {
            coeff: t.coeff,
            log_scale: t.log_scale,
            mean: DVector::from_vec(mat_cvec(m, t.mean.as_slice())),
            cov: covs[&Arc::as_ptr(&t.cov)].clone(),
        })
        .collect();
    GaussianSumState::from_parts_unchecked(state.n_modes, terms, state.normalized)
}

/// Shift every term by a real displacement: the state `D(d) ρ D(d)†`.
pub fn displace(state: &GaussianSumState, d: &[f64]) -> Result<GaussianSumState> {
    check_point(state, d.len(), "displacement")?;
    let terms = state
        .terms
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.mean.iter_mut().zip(d).for_each(|(m, &s)| *m += s);
            t
        })
        .collect();
    Ok(GaussianSumState::from_parts_unchecked(state.n_modes, terms, state.normalized))
}

/// Pure loss (optionally thermal) on every mode.
///
/// `transmittance[i]` is the amplitude transmission `cos θ_i`: means scale by it and the
/// covariance becomes `TγT + R diag(½ + n̄) R` with `R = sin θ_i`. Use
/// [`LossSpec::from_intensity`] when the channel is specified by its power transmission.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossSpec {
    pub transmittance: Vec<f64>,
    pub thermal_occupancy: Vec<f64>,
}

impl LossSpec {
    pub fn from_amplitude(transmittance: Vec<f64>) -> Self {
        let n = transmittance.len();
        Self { transmittance, thermal_occupancy: vec![0.0; n] }
    }

    /// Power transmission `η_i`; the amplitude transmission is `√η_i`.
    pub fn from_intensity(eta: Vec<f64>) -> Self {
        Self::from_amplitude(eta.into_iter().map(|e| e.max(0.0).sqrt()).collect())
    }

    pub fn uniform_amplitude(n_modes: usize, t: f64) -> Self {
        Self::from_amplitude(vec![t; n_modes])
    }

    pub fn with_thermal(mut self, occupancy: Vec<f64>) -> Self {
        self.thermal_occupancy = occupancy;
        self
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if self.transmittance.len() != n_modes || self.thermal_occupancy.len() != n_modes {
            return Err(SimError::Dimension(format!(
                "loss spec covers {}/{} modes, expected {n_modes}",
                self.transmittance.len(),
                self.thermal_occupancy.len()
            )));
        }
        if let Some(t) = self.transmittance.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(SimError::InvalidParameter(format!("transmittance {t} outside [0, 1]")));
        }
        if let Some(n) = self.thermal_occupancy.iter().find(|n| !(**n >= 0.0)) {
            return Err(SimError::InvalidParameter(format!("thermal occupancy {n} is negative")));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.transmittance.iter().all(|&t| t == 1.0)
    }

    /// Diagonal `T` as a matrix on the full quadrature space.
    pub fn t_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            2 * self.transmittance.len(),
            self.transmittance.iter().flat_map(|&t| [t, t]),
        ))
    }

    /// Added noise `R diag(½ + n̄) Rᵀ`.
    pub fn noise_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            2 * self.transmittance.len(),
            self.transmittance
                .iter()
                .zip(&self.thermal_occupancy)
                .flat_map(|(&t, &n)| {
                    let v = (1.0 - t * t) * (0.5 + n);
                    [v, v]
                }),
        ))
    }
}

pub fn apply_loss(state: &GaussianSumState, loss: &LossSpec) -> Result<GaussianSumState> {
    loss.validate(state.n_modes)?;
    let t = loss.t_matrix();
    let noise = loss.noise_matrix();
    let covs = state.map_covs(|c| &t * c * &t + &noise);
    Ok(map_terms(state, &t, &covs))
}

/// `⟨D(r̄)⟩ = Σ c_m exp(iJᵀμ_m − ½Jᵀγ_mJ) / Σ c_m` with `J = Ω r̄`.
pub fn displacement_ev(state: &GaussianSumState, rbar: &[f64]) -> Result<Complex64> {
    check_point(state, rbar.len(), "displacement")?;
    let j = omega_apply(rbar);
    let jv = DVector::from_column_slice(&j);
    let mut quad: HashMap<*const DMatrix<f64>, f64> = HashMap::new();
    let (mut num, mut den) = (LogSum::ZERO, LogSum::ZERO);
    for t in &state.terms {
        let q = *quad
            .entry(Arc::as_ptr(&t.cov))
            .or_insert_with(|| (jv.transpose() * &*t.cov * &jv)[(0, 0)]);
        let lw = t.log_weight();
        let phase: Complex64 = j.iter().zip(t.mean.iter()).map(|(&a, &m)| m * a).sum();
        den.push(lw);
        num.push(lw + Complex64::i() * phase - 0.5 * q);
    }
    if den.is_zero() {
        return Err(SimError::InvalidParameter("state has zero trace".into()));
    }
    Ok(num.ratio(&den))
}

/// `(2π)^N ∫ W²`, via closed-form pairwise Gaussian overlaps.
pub fn purity(state: &GaussianSumState) -> Result<f64> {
    let mut factors: HashMap<(*const DMatrix<f64>, *const DMatrix<f64>), CovFactor> = HashMap::new();
    let mut sum = LogSum::ZERO;
    for a in &state.terms {
        for b in &state.terms {
            let key = (Arc::as_ptr(&a.cov), Arc::as_ptr(&b.cov));
            if let std::collections::hash_map::Entry::Vacant(e) = factors.entry(key) {
                e.insert(CovFactor::new(&(&*a.cov + &*b.cov))?);
            }
            let f = &factors[&key];
            let d: Vec<Complex64> = a.mean.iter().zip(b.mean.iter()).map(|(x, y)| x - y).collect();
            sum.push(a.log_weight() + b.log_weight() - 0.5 * f.quad(&d) - 0.5 * f.logdet_2pi());
        }
    }
    let tr = log_trace(state).value();
    let p = sum.value() * (2.0 * PI).powi(state.n_modes as i32) / (tr * tr);
    Ok(p.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::SymplecticCircuit;
    use crate::states::{bred_gkp, vacuum, BreedingParams};

    #[test]
    fn omega_squares_to_minus_identity() {
        let o = omega(3);
        assert_eq!(&o * &o, -DMatrix::<f64>::identity(6, 6));
        assert_eq!(o.transpose(), -o);
    }

    #[test]
    fn vacuum_peak_is_inverse_pi() {
        let v = vacuum(1);
        let w = evaluate_wigner(&v, &[0.0, 0.0]).unwrap();
        assert!((w.re - 1.0 / PI).abs() < 1e-15 && w.im == 0.0);
        assert!(evaluate_wigner(&v, &[40.0, 0.0]).unwrap().norm() < 1e-300);
        assert!(evaluate_wigner(&v, &[0.0]).is_err());
    }

    #[test]
    fn vacuum_displacement_characteristic_function() {
        let v = vacuum(1);
        for s in [0.3, 1.0, 2.5] {
            let ev = displacement_ev(&v, &[s, 0.0]).unwrap();
            assert!((ev.re - (-s * s / 4.0).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn coherent_state_phase_fixes_displacement_sign() {
        // |x0⟩-centred coherent state: ⟨D(0, p')⟩ = exp(i x0 p') exp(-p'²/4).
        let x0 = 0.7;
        let st = displace(&vacuum(1), &[x0, 0.0]).unwrap();
        let pp = 1.3;
        let ev = displacement_ev(&st, &[0.0, pp]).unwrap();
        let expect = Complex64::new(0.0, x0 * pp).exp() * (-pp * pp / 4.0).exp();
        assert!((ev - expect).norm() < 1e-15);
    }

    #[test]
    fn tensor_counts_and_trace() {
        let a = bred_gkp(&BreedingParams::new(0, 4.0, 0.5)).unwrap();
        let b = bred_gkp(&BreedingParams::new(1, 4.0, 0.5)).unwrap();
        let t = tensor(&a, &b);
        assert_eq!(t.len(), 4 * 9);
        assert_eq!(t.n_modes(), 2);
        assert!((trace(&t) - 1.0).norm() < 1e-12);
        let tv = tensor(&vacuum(1), &vacuum(1));
        assert_eq!(tv.len(), 1);
        assert_eq!(*tv.terms()[0].cov, DMatrix::identity(4, 4) * 0.5);
    }

    #[test]
    fn full_loss_gives_vacuum() {
        let s = bred_gkp(&BreedingParams::new(2, 4.0, 0.5)).unwrap();
        let l = apply_loss(&s, &LossSpec::uniform_amplitude(1, 0.0)).unwrap();
        for t in l.terms() {
            assert!(t.mean.iter().all(|m| m.norm() == 0.0));
            assert_eq!(*t.cov, DMatrix::identity(2, 2) * 0.5);
        }
        assert!(apply_loss(&s, &LossSpec::uniform_amplitude(1, 1.2)).is_err());
    }

    #[test]
    fn loss_reduces_purity() {
        let s = bred_gkp(&BreedingParams::new(1, 3.0, 0.3)).unwrap();
        let p0 = purity(&s).unwrap();
        assert!((p0 - 1.0).abs() < 1e-9);
        let l = apply_loss(&s, &LossSpec::from_intensity(vec![0.8])).unwrap();
        assert!(purity(&l).unwrap() < 1.0 - 1e-3);
    }

    #[test]
    fn identity_circuit_is_a_no_op() {
        let s = bred_gkp(&BreedingParams::new(1, 4.0, 0.5)).unwrap();
        let out = apply_symplectic(&s, &SymplecticCircuit::identity(1)).unwrap();
        for (a, b) in s.terms().iter().zip(out.terms()) {
            assert_eq!(a.mean, b.mean);
            assert_eq!(*a.cov, *b.cov);
        }
    }

    #[test]
    fn rejects_bad_covariance() {
        let mean = DVector::from_element(2, Complex64::new(0.0, 0.0));
        let bad = Arc::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(GaussianSumState::new(1, vec![GaussianTerm::new(Complex64::new(1.0, 0.0), mean.clone(), bad)]).is_err());
        let asym = Arc::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]));
        assert!(GaussianSumState::new(1, vec![GaussianTerm::new(Complex64::new(1.0, 0.0), mean, asym)]).is_err());
    }
}
