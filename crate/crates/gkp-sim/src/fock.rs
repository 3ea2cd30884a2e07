//! Truncated Fock-basis reference implementation for one and two modes.
//!
//! Deliberately brute force: it shares no formulas with the phase-space engine beyond the
//! quadrature conventions, which makes it a useful cross-check.
//!
//! Operator conventions mirror [`crate::circuits`]: a unitary `U` applied to the state has
//! Heisenberg matrix `A` (`U† r̂ U = A r̂`), so rotations are `e^{iθn̂}` and the
//! beamsplitter is `exp(θ(a₁a₂† − a₁†a₂))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::circuits::{CircuitDescription, ElementKind};
use crate::error::{Result, SimError};
use crate::states::BreedingParams;

pub const MAX_CUTOFF: usize = 100;
pub const MAX_MODES: usize = 2;
/// Operators are exponentiated in a space this many times larger than the cutoff.
const MARGIN: usize = 2;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    cutoff: usize,
    n_modes: usize,
    /// Row-major over `(n₁, n₂)` for two modes.
    amps: Vec<Complex64>,
    leakage: f64,
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff == 0 || cutoff > MAX_CUTOFF {
        return Err(SimError::InvalidParameter(format!("cutoff {cutoff} outside 1..={MAX_CUTOFF}")));
    }
    Ok(())
}

impl FockState {
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(SimError::InvalidParameter(format!("{n_modes} modes unsupported (max {MAX_MODES})")));
        }
        let mut amps = vec![C0; cutoff.pow(n_modes as u32)];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { cutoff, n_modes, amps, leakage: 0.0 })
    }

    pub fn from_amplitudes(n_modes: usize, cutoff: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_cutoff(cutoff)?;
        if n_modes == 0 || n_modes > MAX_MODES || amps.len() != cutoff.pow(n_modes as u32) {
            return Err(SimError::Dimension(format!(
                "{} amplitudes for {n_modes} modes at cutoff {cutoff}",
                amps.len()
            )));
        }
        Ok(Self { cutoff, n_modes, amps, leakage: 0.0 })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Probability lost to truncation so far (relative to a normalized state).
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self { amps: self.amps.iter().map(|a| a / n).collect(), ..self.clone() }
    }

    fn add_leakage(&mut self, lost_fraction: f64) {
        self.leakage = 1.0 - (1.0 - self.leakage) * (1.0 - lost_fraction.max(0.0));
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `S(ξ)|0⟩` with `S(ξ) = exp(½(ξa² − ξa†²))`, squeezing `x` for `ξ > 0`.
fn squeezed_vacuum(xi: f64, dim: usize) -> Vec<Complex64> {
    // ⟨2n|S(ξ)|0⟩ = (−tanh ξ)ⁿ √((2n)!) / (2ⁿ n! √cosh ξ)
    let mut v = vec![C0; dim];
    let t = -xi.tanh();
    let pre = -0.5 * xi.cosh().ln();
    for n in 0..dim.div_ceil(2) {
        let mag = (pre + 0.5 * ln_factorial(2 * n) - n as f64 * 2f64.ln() - ln_factorial(n)).exp();
        v[2 * n] = Complex64::new(mag * t.powi(n as i32), 0.0);
    }
    v
}

fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::from_element(dim, dim, C0);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `D(β) = exp(β a† − β* a)` at dimension `dim`; shifts `x` by `√2 Re β` and `p` by `√2 Im β`.
fn displacement_matrix(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    let a = annihilation(dim);
    let gen = a.adjoint() * beta - &a * beta.conj();
    gen.exp()
}

fn matvec(m: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

fn truncate(v: &[Complex64], cutoff: usize) -> (Vec<Complex64>, f64) {
    let total: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    let kept: Vec<Complex64> = v[..cutoff].to_vec();
    let k: f64 = kept.iter().map(|a| a.norm_sqr()).sum();
    (kept, if total > 0.0 { 1.0 - k / total } else { 0.0 })
}

/// `(D(−a) + D(a)) S(ξ)|0⟩`, normalized, with `D` in the `D̂(β)` convention above.
pub fn fock_cat(a: f64, xi: f64, cutoff: usize) -> Result<FockState> {
    check_cutoff(cutoff)?;
    let dim = MARGIN * cutoff;
    let sv = squeezed_vacuum(xi, dim);
    let plus = matvec(&displacement_matrix(Complex64::new(a, 0.0), dim), &sv);
    let minus = matvec(&displacement_matrix(Complex64::new(-a, 0.0), dim), &sv);
    let sum: Vec<Complex64> = plus.iter().zip(&minus).map(|(p, m)| p + m).collect();
    let (kept, lost) = truncate(&sum, cutoff);
    let mut s = FockState::from_amplitudes(1, cutoff, kept)?.normalized();
    s.add_leakage(lost);
    Ok(s)
}

/// `(D(−α/2) + D(α/2)) S(ξ)|0⟩`: the breeding seed.
pub fn fock_squeezed_cat(alpha: f64, xi: f64, cutoff: usize) -> Result<FockState> {
    fock_cat(alpha / 2.0, xi, cutoff)
}

pub fn fock_tensor(a: &FockState, b: &FockState) -> Result<FockState> {
    if a.n_modes != 1 || b.n_modes != 1 || a.cutoff != b.cutoff {
        return Err(SimError::InvalidParameter("tensor needs two single-mode states with equal cutoffs".into()));
    }
    let amps = a.amps.iter().flat_map(|x| b.amps.iter().map(move |y| x * y)).collect();
    let mut s = FockState::from_amplitudes(2, a.cutoff, amps)?;
    s.leakage = 1.0 - (1.0 - a.leakage) * (1.0 - b.leakage);
    Ok(s)
}

/// Beamsplitter blocks for each total photon number `N`, in the full `(N+1)`-dimensional
/// block, so the only approximation is dropping outputs with `n ≥ cutoff`.
pub struct FockBeamsplitter {
    cutoff: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl FockBeamsplitter {
    pub fn new(theta: f64, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let blocks = (0..=2 * (cutoff - 1))
            .map(|n_tot| {
                let d = n_tot + 1;
                // Basis |n₁, N − n₁⟩; generator θ(a₁a₂† − a₁†a₂).
                let mut g = DMatrix::zeros(d, d);
                for n1 in 0..d {
                    let n2 = n_tot - n1;
                    if n1 > 0 {
                        g[(n1 - 1, n1)] += theta * ((n1 * (n2 + 1)) as f64).sqrt();
                    }
                    if n2 > 0 {
                        g[(n1 + 1, n1)] -= theta * (((n1 + 1) * n2) as f64).sqrt();
                    }
                }
                g.exp()
            })
            .collect();
        Ok(Self { cutoff, blocks })
    }

    pub fn apply(&self, s: &FockState) -> Result<FockState> {
        if s.n_modes != 2 || s.cutoff != self.cutoff {
            return Err(SimError::InvalidParameter("beamsplitter needs a two-mode state at its cutoff".into()));
        }
        let c = self.cutoff;
        let mut out = vec![C0; c * c];
        let mut lost = 0.0;
        for (n_tot, u) in self.blocks.iter().enumerate() {
            let lo = n_tot.saturating_sub(c - 1);
            let hi = n_tot.min(c - 1);
            for row in 0..=n_tot {
                let mut acc = C0;
                for col in lo..=hi {
                    acc += s.amps[col * c + (n_tot - col)] * u[(row, col)];
                }
                let n2 = n_tot - row;
                if row < c && n2 < c {
                    out[row * c + n2] = acc;
                } else {
                    lost += acc.norm_sqr();
                }
            }
        }
        let norm_in = s.norm_sqr();
        let mut r = FockState { amps: out, ..s.clone() };
        r.add_leakage(if norm_in > 0.0 { lost / norm_in } else { 0.0 });
        Ok(r)
    }
}

/// `exp(θ(a_i a_j† − a_i† a_j))` on a two-mode state.
pub fn fock_beamsplitter(state: &FockState, i: usize, j: usize, theta: f64) -> Result<FockState> {
    match (i, j) {
        (0, 1) => FockBeamsplitter::new(theta, state.cutoff)?.apply(state),
        (1, 0) => FockBeamsplitter::new(-theta, state.cutoff)?.apply(state),
        _ => Err(SimError::InvalidParameter(format!("beamsplitter modes ({i}, {j}) invalid for two modes"))),
    }
}

fn index_of(s: &FockState, mode: usize, flat: usize) -> usize {
    if s.n_modes == 1 {
        flat
    } else if mode == 0 {
        flat / s.cutoff
    } else {
        flat % s.cutoff
    }
}

/// `e^{iθn̂}` on one mode (Heisenberg `a → e^{iθ} a`).
pub fn fock_rotation(state: &FockState, mode: usize, theta: f64) -> Result<FockState> {
    if mode >= state.n_modes {
        return Err(SimError::InvalidParameter(format!("mode {mode} out of range")));
    }
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(k, a)| a * Complex64::new(0.0, theta * index_of(state, mode, k) as f64).exp())
        .collect();
    Ok(FockState { amps, ..state.clone() })
}

fn apply_single_mode(state: &FockState, mode: usize, m: &DMatrix<Complex64>) -> Result<FockState> {
    let c = state.cutoff;
    if mode >= state.n_modes {
        return Err(SimError::InvalidParameter(format!("mode {mode} out of range")));
    }
    let mut out = vec![C0; state.amps.len()];
    let others = state.amps.len() / c;
    for o in 0..others {
        let idx = |n: usize| if state.n_modes == 1 { n } else if mode == 0 { n * c + o } else { o * c + n };
        let v: Vec<Complex64> = (0..c).map(|n| state.amps[idx(n)]).collect();
        for (i, val) in (0..c).map(|i| (i, (0..c).map(|j| m[(i, j)] * v[j]).sum::<Complex64>())) {
            out[idx(i)] = val;
        }
    }
    Ok(FockState { amps: out, ..state.clone() })
}

fn squeeze_matrix(xi: f64, dim: usize) -> DMatrix<Complex64> {
    let a = annihilation(dim);
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()) * Complex64::new(0.5 * xi, 0.0);
    gen.exp()
}

fn truncated(m: &DMatrix<Complex64>, cutoff: usize) -> DMatrix<Complex64> {
    m.view((0, 0), (cutoff, cutoff)).into_owned()
}

/// Applies a circuit description element by element (dumbbells via their
/// rotation–beamsplitter–rotation decomposition).
pub fn fock_apply_circuit(state: &FockState, desc: &CircuitDescription) -> Result<FockState> {
    if desc.n_modes != state.n_modes {
        return Err(SimError::Dimension("circuit and state mode counts differ".into()));
    }
    let mut s = state.clone();
    for e in &desc.elements {
        s = match e.element {
            ElementKind::Rotation => fock_rotation(&s, e.modes[0], e.parameter)?,
            ElementKind::Beamsplitter => fock_beamsplitter(&s, e.modes[0], e.modes[1], e.parameter)?,
            ElementKind::Squeezer => {
                let m = truncated(&squeeze_matrix(e.parameter, MARGIN * s.cutoff), s.cutoff);
                apply_single_mode(&s, e.modes[0], &m)?
            }
            ElementKind::Dumbbell => {
                let (i, j) = (e.modes[0], e.modes[1]);
                let r = fock_rotation(&s, j, -std::f64::consts::FRAC_PI_2)?;
                let b = fock_beamsplitter(&r, i, j, std::f64::consts::FRAC_PI_4)?;
                fock_rotation(&b, j, std::f64::consts::FRAC_PI_2)?
            }
        };
    }
    Ok(s)
}

/// Normalized Hermite functions `ψ_n(x)`, `n < count`.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(count);
    if count == 0 {
        return h;
    }
    h.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if count > 1 {
        h.push(2f64.sqrt() * x * h[0]);
    }
    for n in 1..count.saturating_sub(1) {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

/// `⟨η_θ|n⟩` for the quadrature `η_θ = p cos θ − x sin θ`: `e^{−iθn} (−i)^n ψ_n(η)`.
fn quadrature_bra(theta: f64, eta: f64, count: usize) -> Vec<Complex64> {
    hermite_functions(eta, count)
        .into_iter()
        .enumerate()
        .map(|(n, h)| {
            let phase = Complex64::new(0.0, -theta * n as f64 - 0.5 * PI * n as f64).exp();
            phase * h
        })
        .collect()
}

/// Projects `mode` of a two-mode state onto the quadrature eigenstate `⟨η_θ|`.
/// Returns the unnormalized single-mode remainder and its squared norm (the outcome
/// density when the input is normalized).
pub fn fock_homodyne_project(state: &FockState, mode: usize, theta: f64, eta: f64) -> Result<(FockState, f64)> {
    if state.n_modes != 2 || mode > 1 {
        return Err(SimError::InvalidParameter("homodyne projection needs a two-mode state".into()));
    }
    let c = state.cutoff;
    let bra = quadrature_bra(theta, eta, c);
    let amps: Vec<Complex64> = (0..c)
        .map(|keep| {
            (0..c)
                .map(|m| bra[m] * if mode == 1 { state.amps[keep * c + m] } else { state.amps[m * c + keep] })
                .sum()
        })
        .collect();
    let mut out = FockState::from_amplitudes(1, c, amps)?;
    out.leakage = state.leakage;
    let density = out.norm_sqr();
    Ok((out, density))
}

fn single_displacement(rbar_x: f64, rbar_p: f64, cutoff: usize) -> DMatrix<Complex64> {
    let beta = Complex64::new(rbar_x, rbar_p) / 2f64.sqrt();
    truncated(&displacement_matrix(beta, MARGIN * cutoff), cutoff)
}

/// `⟨ψ|D(r̄)|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn fock_displacement_ev(state: &FockState, rbar: &[f64]) -> Result<Complex64> {
    if rbar.len() != 2 * state.n_modes {
        return Err(SimError::Dimension(format!("displacement length {} for {} modes", rbar.len(), state.n_modes)));
    }
    let mut s = state.clone();
    for m in 0..state.n_modes {
        let d = single_displacement(rbar[2 * m], rbar[2 * m + 1], state.cutoff);
        s = apply_single_mode(&s, m, &d)?;
    }
    let overlap: Complex64 = state.amps.iter().zip(&s.amps).map(|(a, b)| a.conj() * b).sum();
    Ok(overlap / state.norm_sqr())
}

pub fn mean_photon(state: &FockState) -> f64 {
    let c = state.cutoff;
    let total: f64 = state
        .amps
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let n = if state.n_modes == 1 { k } else { k / c + k % c };
            n as f64 * a.norm_sqr()
        })
        .sum();
    total / state.norm_sqr()
}

/// The breeding protocol: each round interferes the current state with a fresh cat of the
/// same amplitude on a balanced beamsplitter and projects the second output onto `p = 0`.
pub fn fock_breed(p: &BreedingParams, cutoff: usize) -> Result<FockState> {
    p.validate()?;
    let mut amp = p.cat_amplitude / 2.0;
    let mut state = fock_cat(amp, p.cat_squeezing, cutoff)?;
    if p.rounds == 0 {
        return Ok(state);
    }
    let bs = FockBeamsplitter::new(std::f64::consts::FRAC_PI_4, cutoff)?;
    for _ in 0..p.rounds {
        let fresh = fock_cat(amp, p.cat_squeezing, cutoff)?;
        let joint = bs.apply(&fock_tensor(&state, &fresh)?)?;
        let (out, density) = fock_homodyne_project(&joint, 1, 0.0, 0.0)?;
        if !(density > 0.0) {
            return Err(SimError::ZeroProbability);
        }
        state = out.normalized();
        amp /= 2f64.sqrt();
    }
    Ok(state)
}

/// Wigner function of a single-mode pure state from the Laguerre double sum
/// `W = Σ_{m,n} ρ_mn W_{|m⟩⟨n|}`, using normalized associated-Laguerre recurrences.
pub fn fock_wigner(state: &FockState, x: f64, p: f64) -> Result<f64> {
    if state.n_modes != 1 {
        return Err(SimError::InvalidParameter("Wigner evaluation is single-mode only".into()));
    }
    let c = state.cutoff;
    let psi = &state.amps;
    let norm = state.norm_sqr();
    let r2 = 0.5 * (x * x + p * p); // |α|²
    let xl = 4.0 * r2;
    let phi = p.atan2(x);
    let mut w = 0.0;
    for k in 0..c {
        // ℓ_n^k(xl) = √(n!/(n+k)!) xl^{k/2} e^{−xl/2} L_n^k(xl)
        let mut prev = 0.0;
        let mut cur = if xl == 0.0 {
            if k == 0 { 1.0 } else { 0.0 }
        } else {
            (0.5 * k as f64 * xl.ln() - 0.5 * xl - 0.5 * ln_factorial(k)).exp()
        };
        let mut acc = C0;
        for n in 0..c - k {
            let m = n + k;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += psi[m] * psi[n].conj() * (sign * cur);
            let nf = n as f64;
            let kf = k as f64;
            let next = ((2.0 * nf + 1.0 + kf - xl) * cur - (nf * (nf + kf)).sqrt() * prev)
                / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
            prev = cur;
            cur = next;
        }
        let rot = Complex64::new(0.0, -(k as f64) * phi).exp();
        let v = (acc * rot).re;
        w += if k == 0 { v } else { 2.0 * v };
    }
    Ok(w / (PI * norm))
}

/// Single-mode density matrix, produced by the loss channel.
#[derive(Clone, Debug)]
pub struct FockDensity {
    cutoff: usize,
    rho: DMatrix<Complex64>,
    leakage: f64,
}

impl FockDensity {
    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn displacement_ev(&self, rbar: &[f64]) -> Result<Complex64> {
        if rbar.len() != 2 {
            return Err(SimError::Dimension("single-mode displacement expected".into()));
        }
        let d = single_displacement(rbar[0], rbar[1], self.cutoff);
        Ok((&self.rho * d).trace() / self.trace())
    }

    pub fn purity(&self) -> f64 {
        ((&self.rho * &self.rho).trace() / (self.trace() * self.trace())).re
    }
}

/// Loss with amplitude transmission `t`: beamsplitter to a vacuum ancilla, then trace it out.
pub fn fock_loss(state: &FockState, t: f64) -> Result<FockDensity> {
    if state.n_modes != 1 {
        return Err(SimError::InvalidParameter("loss oracle is single-mode".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(SimError::InvalidParameter(format!("transmittance {t} outside [0, 1]")));
    }
    let c = state.cutoff;
    let joint = fock_tensor(state, &FockState::vacuum(1, c)?)?;
    let out = fock_beamsplitter(&joint, 0, 1, t.acos())?;
    let psi = DMatrix::from_fn(c, c, |i, j| out.amps[i * c + j]);
    Ok(FockDensity { cutoff: c, rho: &psi * psi.adjoint(), leakage: out.leakage })
}

pub fn fock_state_vector(state: &FockState) -> DVector<Complex64> {
    DVector::from_column_slice(&state.amps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cat_is_vacuum() {
        let s = fock_cat(0.0, 0.0, 20).unwrap();
        assert!((s.amps[0] - 1.0).norm() < 1e-14);
        assert!(s.amps[1..].iter().all(|a| a.norm() < 1e-14));
        assert_eq!(mean_photon(&FockState::vacuum(1, 10).unwrap()), 0.0);
    }

    #[test]
    fn squeezed_vacuum_photon_number() {
        for xi in [0.2, 0.5, 0.8] {
            let s = fock_cat(0.0, xi, 100).unwrap();
            assert!((mean_photon(&s) - xi.sinh().powi(2)).abs() < 1e-10, "xi={xi}");
        }
    }

    #[test]
    fn squeezed_vacuum_matches_operator_exponential() {
        let xi = 0.4;
        let dim = 80;
        let mut vac = vec![C0; dim];
        vac[0] = Complex64::new(1.0, 0.0);
        let direct = matvec(&squeeze_matrix(xi, dim), &vac);
        let closed = squeezed_vacuum(xi, dim);
        for n in 0..20 {
            assert!((direct[n] - closed[n]).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn vacuum_displacement_and_position_density() {
        let v = FockState::vacuum(1, 30).unwrap();
        let ev = fock_displacement_ev(&v, &[1.5, 0.0]).unwrap();
        assert!((ev.re - (-1.5f64 * 1.5 / 4.0).exp()).abs() < 1e-13 && ev.im.abs() < 1e-13);
        let two = fock_tensor(&v, &v).unwrap();
        let (_, d) = fock_homodyne_project(&two, 1, -std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        assert!((d - PI.powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn beamsplitter_single_photon_and_photon_conservation() {
        let c = 6;
        let mut amps = vec![C0; c * c];
        amps[c] = Complex64::new(1.0, 0.0); // |1, 0⟩
        let s = FockState::from_amplitudes(2, c, amps).unwrap();
        let out = fock_beamsplitter(&s, 0, 1, std::f64::consts::FRAC_PI_4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amps[c].norm() - h).abs() < 1e-14);
        assert!((out.amps[1].norm() - h).abs() < 1e-14);
        let cat = fock_cat(0.8, 0.2, 30).unwrap();
        let joint = fock_tensor(&cat, &FockState::vacuum(1, 30).unwrap()).unwrap();
        let after = fock_beamsplitter(&joint, 0, 1, 0.37).unwrap();
        assert!((mean_photon(&joint) - mean_photon(&after)).abs() < 1e-10);
        let same = fock_beamsplitter(&joint, 0, 1, 0.0).unwrap();
        assert!(same.amps.iter().zip(&joint.amps).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn beamsplitter_heisenberg_action_matches_symplectic_convention() {
        // Coherent |β⟩ ⊗ |0⟩ → after B(θ): mode 2 amplitude sin θ β (x₂' = sin θ x₁ + cos θ x₂).
        let c = 40;
        let theta = 0.3;
        let vac = FockState::vacuum(1, c).unwrap();
        let d = single_displacement(1.0, 0.0, c);
        let coh = apply_single_mode(&vac, 0, &d).unwrap();
        let out = fock_beamsplitter(&fock_tensor(&coh, &vac).unwrap(), 0, 1, theta).unwrap();
        let h = 1e-4;
        let dx = fock_displacement_ev(&out, &[0.0, 0.0, 0.0, h]).unwrap();
        // ⟨D(0, h)⟩ on mode 2 ≈ 1 + i h ⟨x₂⟩.
        let x2 = dx.im / h;
        assert!((x2 - theta.sin()).abs() < 1e-6, "{x2}");
    }

    #[test]
    fn projection_is_linear_in_scale() {
        let cat = fock_cat(1.0, 0.3, 25).unwrap();
        let joint = fock_tensor(&cat, &cat).unwrap();
        let (a, da) = fock_homodyne_project(&joint, 1, 0.0, 0.4).unwrap();
        let doubled = FockState { amps: joint.amps.iter().map(|z| z * 2.0).collect(), ..joint.clone() };
        let (b, db) = fock_homodyne_project(&doubled, 1, 0.0, 0.4).unwrap();
        assert!((db - 4.0 * da).abs() < 1e-12);
        assert!(a.amps.iter().zip(&b.amps).all(|(x, y)| (x * 2.0 - y).norm() < 1e-14));
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let h = 0.01;
        let xs: Vec<f64> = (-1200..=1200).map(|i| i as f64 * h).collect();
        let fs: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_functions(x, 8)).collect();
        for a in 0..8 {
            for b in 0..8 {
                let s: f64 = fs.iter().map(|f| f[a] * f[b]).sum::<f64>() * h;
                assert!((s - if a == b { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fock_wigner_of_vacuum_and_single_photon() {
        let v = FockState::vacuum(1, 5).unwrap();
        assert!((fock_wigner(&v, 0.0, 0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        let mut amps = vec![C0; 5];
        amps[1] = Complex64::new(1.0, 0.0);
        let one = FockState::from_amplitudes(1, 5, amps).unwrap();
        assert!((fock_wigner(&one, 0.0, 0.0).unwrap() + 1.0 / PI).abs() < 1e-15);
        let (x, p): (f64, f64) = (0.3, -0.7);
        let r2 = x * x + p * p;
        let expect = (2.0 * r2 - 1.0) * (-r2).exp() / PI;
        assert!((fock_wigner(&one, x, p).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn loss_lowers_purity() {
        let cat = fock_cat(1.0, 0.2, 30).unwrap();
        let rho = fock_loss(&cat, 0.9).unwrap();
        assert!((rho.trace() - 1.0).norm() < 1e-10);
        assert!(rho.purity() < 0.99);
        assert!((fock_loss(&cat, 1.0).unwrap().purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_oversized_problems() {
        assert!(FockState::vacuum(3, 10).is_err());
        assert!(FockState::vacuum(1, MAX_CUTOFF + 1).is_err());
    }
}
