//! Homodyne postselection and closed-form stabilizer expectation values.
//!
//! For a mixture `Σ c_m G(μ_m, γ_m)` pushed through `r → L r` (circuit, loss, then a
//! rotation that turns every measured quadrature into a `p` row), postselecting the
//! measured rows `H` on `η` and evaluating `D(r̄)` on the remaining rows `C` gives
//!
//! ```text
//! ⟨D(r̄)⟩ = Σ c_m g_m(η; J) exp(i Jᵀμ_C − ½ Jᵀγ_CC J) / Σ c_m g_m(η; 0),    J = Ω r̄,
//! g_m(η; J) = det(2πγ_HH)^{-1/2} exp(−½ (η − μ_H − iγ_HC J)ᵀ γ_HH⁻¹ (η − μ_H − iγ_HC J)).
//! ```
//!
//! Expanding the quadratic form, the `J`-dependent part of each exponent is
//! `i wᵀd + ½ vᵀw + i Jᵀμ_C − ½ Jᵀγ_CC J` with `d = η − μ_H`, `v = γ_HC J`,
//! `w = γ_HH⁻¹ v`; `v`, `w` and the scalars depend only on the covariance class, so the
//! per-term cost is one solve for `d` and a few dot products per stabilizer.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{rotation, SymplecticCircuit};
use crate::error::{Result, SimError};
use crate::linalg::{submatrix, CovFactor};
use crate::logsum::LogSum;
use crate::phase_space::{omega_apply, GaussianSumState, GaussianTerm, LossSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredMode {
    pub mode: usize,
    /// Measures `p cos θ − x sin θ`; `0` is `p`, `−π/2` is `x`.
    pub angle: f64,
    pub outcome: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub n_total: usize,
    pub measured: Vec<MeasuredMode>,
}

impl MeasurementPlan {
    pub fn none(n_total: usize) -> Self {
        Self { n_total, measured: Vec::new() }
    }

    pub fn p(n_total: usize, mode: usize, outcome: f64) -> Self {
        Self { n_total, measured: vec![MeasuredMode { mode, angle: 0.0, outcome }] }
    }

    pub fn single(n_total: usize, mode: usize, angle: f64, outcome: f64) -> Self {
        Self { n_total, measured: vec![MeasuredMode { mode, angle, outcome }] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.measured.len() >= self.n_total {
            return Err(SimError::InvalidParameter("at least one mode must stay unmeasured".into()));
        }
        for (i, m) in self.measured.iter().enumerate() {
            if m.mode >= self.n_total {
                return Err(SimError::InvalidParameter(format!("measured[{i}].mode {} out of range", m.mode)));
            }
            if self.measured[..i].iter().any(|o| o.mode == m.mode) {
                return Err(SimError::InvalidParameter(format!("mode {} measured twice", m.mode)));
            }
            if !m.angle.is_finite() || !m.outcome.is_finite() {
                return Err(SimError::InvalidParameter(format!("measured[{i}] has non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn unmeasured(&self) -> Vec<usize> {
        (0..self.n_total).filter(|k| self.measured.iter().all(|m| m.mode != *k)).collect()
    }

    pub fn with_outcomes(&self, outcomes: &[f64]) -> Self {
        let mut p = self.clone();
        p.measured.iter_mut().zip(outcomes).for_each(|(m, &o)| m.outcome = o);
        p
    }

    pub fn shifted(&self, shifts: &[f64]) -> Self {
        let mut p = self.clone();
        p.measured.iter_mut().zip(shifts).for_each(|(m, &s)| m.outcome += s);
        p
    }

    /// Rotations that map each measured quadrature onto that mode's `p` row.
    fn frame(&self) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::identity(2 * self.n_total, 2 * self.n_total);
        for mm in &self.measured {
            m = rotation(self.n_total, mm.mode, -mm.angle)?.matrix() * m;
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerSpec {
    /// Displacement on the unmeasured modes, in their index order.
    pub displacement: Vec<f64>,
    pub label: String,
}

impl StabilizerSpec {
    pub fn new(displacement: Vec<f64>, label: impl Into<String>) -> Self {
        Self { displacement, label: label.into() }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self::new(vec![0.0; 2 * n_modes], "I")
    }

    /// Pauli string with `X = D(u, 0)`, `Z = D(0, u)`, `Y = D(u, u)`.
    pub fn pauli(s: &str, unit: f64) -> Result<Self> {
        let mut d = Vec::with_capacity(2 * s.len());
        for c in s.chars() {
            let (x, p) = match c {
                'I' => (0.0, 0.0),
                'X' => (unit, 0.0),
                'Z' => (0.0, unit),
                'Y' => (unit, unit),
                _ => return Err(SimError::InvalidParameter(format!("unknown Pauli letter {c:?}"))),
            };
            d.extend([x, p]);
        }
        Ok(Self::new(d, s))
    }

    /// Qubit-lattice Pauli string (`√π` shifts).
    pub fn qubit(s: &str) -> Result<Self> {
        Self::pauli(s, PI.sqrt())
    }

    /// Single-mode `X̂²` (a `2√π` position shift).
    pub fn x2() -> Self {
        Self::new(vec![2.0 * PI.sqrt(), 0.0], "X^2")
    }

    /// Single-mode `Ẑ²` (a `2√π` momentum shift).
    pub fn z2() -> Self {
        Self::new(vec![0.0, 2.0 * PI.sqrt()], "Z^2")
    }

    pub fn j(&self) -> Vec<f64> {
        omega_apply(&self.displacement)
    }

    pub fn negated(&self) -> Self {
        Self::new(self.displacement.iter().map(|v| -v).collect(), format!("-({})", self.label))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerResult {
    pub value: Complex64,
    /// Joint density of the measured outcomes; `1` when nothing is measured.
    pub outcome_density: f64,
    pub log_density: f64,
    pub n_terms: usize,
    /// Spread of term log-magnitudes in the denominator, a conditioning diagnostic.
    pub log_condition: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMode {
    /// Work-stealing reduction; results may differ in the last bits across thread counts.
    #[default]
    Fast,
    /// Fixed chunking and a pairwise tree: bit-identical for any thread count.
    Deterministic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub reduction: ReductionMode,
    /// Sum terms on the calling thread; used when an outer loop is already parallel.
    #[serde(default)]
    pub serial: bool,
}

impl EvalOptions {
    pub fn deterministic() -> Self {
        Self { reduction: ReductionMode::Deterministic, serial: false }
    }

    pub fn serial(self) -> Self {
        Self { serial: true, ..self }
    }
}

// ---------------------------------------------------------------------------
// Term sources

/// Anything that can enumerate mixture terms after a linear map of the quadratures.
pub trait MixtureSource: Sync {
    fn n_modes(&self) -> usize;
    fn n_terms(&self) -> usize;
    #[doc(hidden)]
    fn prepare(&self, map: &DMatrix<f64>) -> Prepared<'_>;
}

#[doc(hidden)]
pub struct Prepared<'a> {
    /// `L γ Lᵀ` per covariance class.
    classes: Vec<DMatrix<f64>>,
    kind: PreparedKind<'a>,
}

enum PreparedKind<'a> {
    Flat { terms: &'a [GaussianTerm], class_of: Vec<usize>, map: DMatrix<f64> },
    Product { factors: Vec<FactorPrep>, dim: usize },
}

struct FactorPrep {
    log_w: Vec<Complex64>,
    /// Term-major `L[:, block] μ_k`, each of length `dim`.
    contrib: Vec<Complex64>,
    class_of: Vec<usize>,
    n_classes: usize,
}

impl Prepared<'_> {
    fn len(&self) -> usize {
        match &self.kind {
            PreparedKind::Flat { terms, .. } => terms.len(),
            PreparedKind::Product { factors, .. } => factors.iter().map(|f| f.log_w.len()).product(),
        }
    }

    /// Writes the mapped mean into `out` and returns the log weight and covariance class.
    fn term(&self, idx: usize, out: &mut [Complex64]) -> (Complex64, usize) {
        match &self.kind {
            PreparedKind::Flat { terms, class_of, map } => {
                let t = &terms[idx];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, m) in t.mean.iter().enumerate() {
                        let a = map[(i, j)];
                        if a != 0.0 {
                            acc += m * a;
                        }
                    }
                    *o = acc;
                }
                (t.log_weight(), class_of[idx])
            }
            PreparedKind::Product { factors, dim } => {
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                let mut rest = idx;
                let mut log_w = Complex64::new(0.0, 0.0);
                let mut class = 0;
                let mut class_stride = 1;
                for f in factors.iter().rev() {
                    let n = f.log_w.len();
                    let k = rest % n;
                    rest /= n;
                    log_w += f.log_w[k];
                    let c = &f.contrib[k * dim..(k + 1) * dim];
                    out.iter_mut().zip(c).for_each(|(o, v)| *o += v);
                    class += f.class_of[k] * class_stride;
                    class_stride *= f.n_classes;
                }
                (log_w, class)
            }
        }
    }
}

impl MixtureSource for GaussianSumState {
    fn n_modes(&self) -> usize {
        GaussianSumState::n_modes(self)
    }

    fn n_terms(&self) -> usize {
        self.len()
    }

    fn prepare(&self, map: &DMatrix<f64>) -> Prepared<'_> {
        let (classes, class_of) = self.cov_classes();
        Prepared {
            classes: classes.iter().map(|c| map * &**c * map.transpose()).collect(),
            kind: PreparedKind::Flat { terms: self.terms(), class_of, map: map.clone() },
        }
    }
}

/// Lazy tensor product of independent inputs; terms are generated by index arithmetic
/// (last factor varies fastest, matching [`crate::phase_space::tensor`]).
#[derive(Clone, Debug)]
pub struct ProductState {
    factors: Vec<GaussianSumState>,
}

impl ProductState {
    pub fn new(factors: Vec<GaussianSumState>) -> Result<Self> {
        if factors.is_empty() {
            return Err(SimError::InvalidParameter("product of zero states".into()));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[GaussianSumState] {
        &self.factors
    }

    pub fn materialize(&self) -> GaussianSumState {
        let mut it = self.factors.iter();
        let first = it.next().expect("non-empty").clone();
        it.fold(first, |acc, f| crate::phase_space::tensor(&acc, f))
    }
}

impl MixtureSource for ProductState {
    fn n_modes(&self) -> usize {
        self.factors.iter().map(|f| f.n_modes()).sum()
    }

    fn n_terms(&self) -> usize {
        self.factors.iter().map(|f| f.len()).product()
    }

    fn prepare(&self, map: &DMatrix<f64>) -> Prepared<'_> {
        let dim = map.nrows();
        let mut offsets = Vec::new();
        let mut off = 0;
        for f in &self.factors {
            offsets.push(off);
            off += 2 * f.n_modes();
        }
        let mut factor_classes = Vec::new();
        let factors: Vec<FactorPrep> = self
            .factors
            .iter()
            .zip(&offsets)
            .map(|(f, &o)| {
                let w = 2 * f.n_modes();
                let block = map.columns(o, w);
                let (classes, class_of) = f.cov_classes();
                let mut contrib = Vec::with_capacity(f.len() * dim);
                for t in f.terms() {
                    for i in 0..dim {
                        contrib.push((0..w).map(|j| t.mean[j] * block[(i, j)]).sum());
                    }
                }
                factor_classes.push(classes.clone());
                FactorPrep {
                    log_w: f.terms().iter().map(|t| t.log_weight()).collect(),
                    contrib,
                    class_of,
                    n_classes: classes.len(),
                }
            })
            .collect();
        // Class id is mixed-radix with the last factor least significant.
        let total: usize = factors.iter().map(|f| f.n_classes).product();
        let mut classes = Vec::with_capacity(total);
        for id in 0..total {
            let mut full = DMatrix::zeros(dim, dim);
            let mut rest = id;
            for (fi, f) in factors.iter().enumerate().rev() {
                let c = rest % f.n_classes;
                rest /= f.n_classes;
                let w = 2 * self.factors[fi].n_modes();
                full.view_mut((offsets[fi], offsets[fi]), (w, w)).copy_from(&*factor_classes[fi][c]);
            }
            classes.push(map * full * map.transpose());
        }
        Prepared { classes, kind: PreparedKind::Product { factors, dim } }
    }
}

// ---------------------------------------------------------------------------
// Engine

struct ClassPrep {
    factor: CovFactor,
    half_logdet: f64,
    stabs: Vec<StabClassPrep>,
}

struct StabClassPrep {
    w: Vec<f64>,
    const_re: f64,
}

#[derive(Clone)]
struct Acc {
    den: LogSum,
    nums: Vec<LogSum>,
    lo: f64,
    hi: f64,
}

impl Acc {
    fn empty(k: usize) -> Self {
        Self { den: LogSum::ZERO, nums: vec![LogSum::ZERO; k], lo: f64::INFINITY, hi: f64::NEG_INFINITY }
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.den = self.den.merge(o.den);
        self.nums.iter_mut().zip(o.nums).for_each(|(a, b)| *a = a.merge(b));
        self.lo = self.lo.min(o.lo);
        self.hi = self.hi.max(o.hi);
        self
    }
}

fn tree(items: Vec<Acc>, k: usize) -> Acc {
    fn go(items: &[Acc], k: usize) -> Acc {
        match items.len() {
            0 => Acc::empty(k),
            1 => items[0].clone(),
            n => {
                let (l, r) = items.split_at(n / 2);
                go(l, k).merge(go(r, k))
            }
        }
    }
    go(&items, k)
}

const CHUNK: usize = 1024;

/// Everything needed to evaluate several stabilizers at one measurement setting.
pub struct Setup {
    map: DMatrix<f64>,
    noise: Option<DMatrix<f64>>,
    h_rows: Vec<usize>,
    c_rows: Vec<usize>,
    eta: Vec<f64>,
}

impl Setup {
    pub fn new(
        n_modes: usize,
        a: &SymplecticCircuit,
        loss: Option<&LossSpec>,
        plan: &MeasurementPlan,
    ) -> Result<Self> {
        if a.n_modes() != n_modes || plan.n_total != n_modes {
            return Err(SimError::Dimension(format!(
                "input has {n_modes} modes, circuit {}, plan {}",
                a.n_modes(),
                plan.n_total
            )));
        }
        plan.validate()?;
        let frame = plan.frame()?;
        let (map, noise) = match loss {
            Some(l) => {
                l.validate(n_modes)?;
                let nm = l.noise_matrix();
                (&frame * l.t_matrix() * a.matrix(), Some(&frame * nm * frame.transpose()))
            }
            None => (&frame * a.matrix(), None),
        };
        Ok(Self {
            map,
            noise,
            h_rows: plan.measured.iter().map(|m| 2 * m.mode + 1).collect(),
            c_rows: plan.unmeasured().iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect(),
            eta: plan.measured.iter().map(|m| m.outcome).collect(),
        })
    }
}

pub fn evaluate<S: MixtureSource + ?Sized>(
    input: &S,
    setup: &Setup,
    stabs: &[StabilizerSpec],
    opts: EvalOptions,
) -> Result<Vec<StabilizerResult>> {
    let nc = setup.c_rows.len();
    for s in stabs {
        if s.displacement.len() != nc {
            return Err(SimError::Dimension(format!(
                "stabilizer '{}' has length {}, expected {nc}",
                s.label,
                s.displacement.len()
            )));
        }
    }
    if input.n_modes() * 2 != setup.map.nrows() {
        return Err(SimError::Dimension("setup built for a different mode count".into()));
    }
    let prepared = input.prepare(&setup.map);
    let js: Vec<Vec<f64>> = stabs.iter().map(|s| s.j()).collect();
    let (h, c) = (&setup.h_rows, &setup.c_rows);

    let class_prep: Vec<ClassPrep> = prepared
        .classes
        .iter()
        .map(|g| {
            let g = match &setup.noise {
                Some(n) => g + n,
                None => g.clone(),
            };
            let ghh = submatrix(&g, h, h);
            let factor = CovFactor::new(&ghh).map_err(|_| {
                let pivot = ghh.clone().cholesky().map_or(0.0, |ch| {
                    let l = ch.l();
                    (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min)
                });
                SimError::SingularMeasurement(pivot)
            })?;
            let ghc = submatrix(&g, h, c);
            let gcc = submatrix(&g, c, c);
            let stabs = js
                .iter()
                .map(|j| {
                    let v: Vec<f64> = (0..h.len()).map(|r| (0..nc).map(|q| ghc[(r, q)] * j[q]).sum()).collect();
                    let vc: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                    let w: Vec<f64> = factor.solve(&vc).iter().map(|z| z.re).collect();
                    let vgv: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                    let jcj: f64 = (0..nc).map(|a| (0..nc).map(|b| j[a] * gcc[(a, b)] * j[b]).sum::<f64>()).sum();
                    StabClassPrep { w, const_re: 0.5 * vgv - 0.5 * jcj }
                })
                .collect();
            Ok(ClassPrep { half_logdet: 0.5 * factor.logdet_2pi(), factor, stabs })
        })
        .collect::<Result<_>>()?;

    let n = prepared.len();
    let dim = setup.map.nrows();
    let k = stabs.len();
    let chunk_acc = |ci: usize| -> Acc {
        let mut acc = Acc::empty(k);
        let mut mean = vec![Complex64::new(0.0, 0.0); dim];
        let mut d = vec![Complex64::new(0.0, 0.0); h.len()];
        for idx in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
            let (log_w, class) = prepared.term(idx, &mut mean);
            if log_w.re == f64::NEG_INFINITY {
                continue;
            }
            let cp = &class_prep[class];
            for (r, &row) in h.iter().enumerate() {
                d[r] = setup.eta[r] - mean[row];
            }
            let e0 = log_w - 0.5 * cp.factor.quad(&d) - cp.half_logdet;
            acc.den.push(e0);
            acc.lo = acc.lo.min(e0.re);
            acc.hi = acc.hi.max(e0.re);
            for (s, (sp, j)) in cp.stabs.iter().zip(&js).enumerate() {
                let wd: Complex64 = sp.w.iter().zip(&d).map(|(w, d)| d * *w).sum();
                let jm: Complex64 = c.iter().zip(j).map(|(&row, &jj)| mean[row] * jj).sum();
                let e = e0 + Complex64::i() * (wd + jm) + sp.const_re;
                acc.nums[s].push(e);
            }
        }
        acc
    };
    let n_chunks = n.div_ceil(CHUNK);
    // Both deterministic paths share the chunking and the tree, so they agree bit for bit.
    let acc = match (opts.reduction, opts.serial) {
        (ReductionMode::Deterministic, false) => tree((0..n_chunks).into_par_iter().map(chunk_acc).collect(), k),
        (ReductionMode::Deterministic, true) => tree((0..n_chunks).map(chunk_acc).collect(), k),
        (ReductionMode::Fast, false) => (0..n_chunks)
            .into_par_iter()
            .map(chunk_acc)
            .reduce(|| Acc::empty(k), Acc::merge),
        (ReductionMode::Fast, true) => (0..n_chunks).map(chunk_acc).fold(Acc::empty(k), Acc::merge),
    };

    let den = acc.den;
    if den.is_zero() || !(den.relative_magnitude() >= 1e-300) || !den.ln().re.is_finite() {
        return Err(SimError::ZeroProbability);
    }
    let log_density = den.ln().re;
    if log_density.exp() == 0.0 {
        return Err(SimError::ZeroProbability);
    }
    let log_condition = if acc.hi >= acc.lo { acc.hi - acc.lo } else { 0.0 };
    Ok(acc
        .nums
        .iter()
        .zip(stabs)
        .map(|(num, s)| {
            let value = num.ratio(&den);
            debug_assert!(s.displacement.iter().any(|&v| v != 0.0) || value == Complex64::new(1.0, 0.0));
            StabilizerResult { value, outcome_density: log_density.exp(), log_density, n_terms: n, log_condition }
        })
        .collect())
}

pub fn stabilizer_evs<S: MixtureSource + ?Sized>(
    input: &S,
    a: &SymplecticCircuit,
    loss: Option<&LossSpec>,
    plan: &MeasurementPlan,
    stabs: &[StabilizerSpec],
    opts: EvalOptions,
) -> Result<Vec<StabilizerResult>> {
    let setup = Setup::new(input.n_modes(), a, loss, plan)?;
    evaluate(input, &setup, stabs, opts)
}

pub fn stabilizer_ev<S: MixtureSource + ?Sized>(
    input: &S,
    a: &SymplecticCircuit,
    loss: Option<&LossSpec>,
    plan: &MeasurementPlan,
    stab: &StabilizerSpec,
) -> Result<StabilizerResult> {
    Ok(stabilizer_evs(input, a, loss, plan, std::slice::from_ref(stab), EvalOptions::default())?[0])
}

/// Joint density of the postselected outcomes (integrates to the input trace).
pub fn homodyne_density<S: MixtureSource + ?Sized>(
    input: &S,
    a: &SymplecticCircuit,
    loss: Option<&LossSpec>,
    plan: &MeasurementPlan,
) -> Result<f64> {
    let setup = Setup::new(input.n_modes(), a, loss, plan)?;
    let nc = 2 * plan.unmeasured().len();
    let r = evaluate(input, &setup, &[StabilizerSpec::new(vec![0.0; nc], "I")], EvalOptions::default())?;
    Ok(r[0].outcome_density)
}

// ---------------------------------------------------------------------------
// Outcome averages

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGrid {
    pub lo: f64,
    pub hi: f64,
    /// Odd, so composite Simpson applies.
    pub points: usize,
}

impl OutcomeGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points < 3 || points.is_multiple_of(2) || !(hi > lo) {
            return Err(SimError::InvalidParameter(format!(
                "outcome grid needs an odd number (≥3) of points over a non-empty range, got {points} on [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + h * i as f64).collect()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }
}

/// Composite Simpson rule on equally spaced samples (odd count).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    s * h / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageResult {
    /// `∫ P ⟨S⟩ / ∫ P`.
    pub mean: Complex64,
    /// `∫ P |⟨S⟩| / ∫ P`.
    pub mean_magnitude: f64,
    /// `∫ P`.
    pub probability: f64,
}

pub const COVERAGE_TOL: f64 = 1e-12;

/// Outcome-weighted average over a single measured quadrature.
pub fn average_stabilizer_ev<S: MixtureSource + ?Sized>(
    input: &S,
    a: &SymplecticCircuit,
    loss: Option<&LossSpec>,
    plan_template: &MeasurementPlan,
    stab: &StabilizerSpec,
    grid: &OutcomeGrid,
    opts: EvalOptions,
) -> Result<AverageResult> {
    if plan_template.measured.len() != 1 {
        return Err(SimError::InvalidParameter("outcome averages need exactly one measured mode".into()));
    }
    let xs = grid.values();
    let point = |x: f64, opts: EvalOptions| {
        let plan = plan_template.with_outcomes(&[x]);
        match stabilizer_evs(input, a, loss, &plan, std::slice::from_ref(stab), opts) {
            Ok(r) => Ok((r[0].outcome_density, r[0].value)),
            Err(SimError::ZeroProbability) => Ok((0.0, Complex64::new(0.0, 0.0))),
            Err(e) => Err(e),
        }
    };
    // One level of parallelism: across outcomes when there are enough of them.
    let rows: Vec<(f64, Complex64)> = if xs.len() >= rayon::current_num_threads() {
        xs.par_iter().map(|&x| point(x, opts.serial())).collect::<Result<_>>()?
    } else {
        xs.iter().map(|&x| point(x, opts)).collect::<Result<_>>()?
    };
    let pmax = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let edge = rows[0].0.max(rows[rows.len() - 1].0);
    if !(pmax > 0.0) || edge > COVERAGE_TOL * pmax {
        return Err(SimError::Coverage(format!(
            "boundary density {edge:.3e} vs peak {pmax:.3e} on [{}, {}]",
            grid.lo, grid.hi
        )));
    }
    let h = grid.step();
    let p: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let re: Vec<f64> = rows.iter().map(|r| r.0 * r.1.re).collect();
    let im: Vec<f64> = rows.iter().map(|r| r.0 * r.1.im).collect();
    let mag: Vec<f64> = rows.iter().map(|r| r.0 * r.1.norm()).collect();
    let total = simpson(&p, h);
    Ok(AverageResult {
        mean: Complex64::new(simpson(&re, h), simpson(&im, h)) / total,
        mean_magnitude: simpson(&mag, h) / total,
        probability: total,
    })
}

// ---------------------------------------------------------------------------
// Witnesses and displaced inputs

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub value: f64,
    pub stabilizers: Vec<StabilizerResult>,
    pub warnings: Vec<String>,
}

pub const WITNESS_IMAG_TOL: f64 = 1e-9;

/// `constant − Σ Re⟨S_i⟩`; imaginary parts above tolerance are reported, not dropped silently.
pub fn witness_from(results: &[StabilizerResult], stabs: &[StabilizerSpec], constant: f64) -> WitnessResult {
    let warnings = results
        .iter()
        .zip(stabs)
        .filter(|(r, _)| r.value.im.abs() > WITNESS_IMAG_TOL)
        .map(|(r, s)| format!("⟨{}⟩ has imaginary part {:.3e}", s.label, r.value.im))
        .collect();
    WitnessResult {
        value: constant - results.iter().map(|r| r.value.re).sum::<f64>(),
        stabilizers: results.to_vec(),
        warnings,
    }
}

pub fn witness_ev<S: MixtureSource + ?Sized>(
    input: &S,
    a: &SymplecticCircuit,
    loss: Option<&LossSpec>,
    plan: &MeasurementPlan,
    stabs: &[StabilizerSpec],
    constant: f64,
) -> Result<WitnessResult> {
    let r = stabilizer_evs(input, a, loss, plan, stabs, EvalOptions::default())?;
    Ok(witness_from(&r, stabs, constant))
}

/// Bookkeeping for inputs displaced by a known `r̄`: outcome targets move by the measured
/// part of `T A r̄` and the conditional state is displaced by its unmeasured part.
#[derive(Clone, Debug, PartialEq)]
pub struct Compensation {
    pub outcome_shift: Vec<f64>,
    pub output_shift: Vec<f64>,
}

pub fn compensation(
    a: &SymplecticCircuit,
    loss: Option<&LossSpec>,
    plan: &MeasurementPlan,
    input_shift: &[f64],
) -> Result<Compensation> {
    let mut d = crate::circuits::compensate_displacement(a, input_shift)?;
    if let Some(l) = loss {
        l.validate(a.n_modes())?;
        d.iter_mut().enumerate().for_each(|(i, v)| *v *= l.transmittance[i / 2]);
    }
    let framed = {
        let f = plan.frame()?;
        (0..d.len()).map(|i| (0..d.len()).map(|j| f[(i, j)] * d[j]).sum::<f64>()).collect::<Vec<_>>()
    };
    Ok(Compensation {
        outcome_shift: plan.measured.iter().map(|m| framed[2 * m.mode + 1]).collect(),
        output_shift: plan.unmeasured().iter().flat_map(|&k| [d[2 * k], d[2 * k + 1]]).collect(),
    })
}

impl Compensation {
    /// Factor that removes the output displacement from `⟨D(r̄)⟩`: `exp(−i Jᵀ d_C)`.
    pub fn frame_phase(&self, stab: &StabilizerSpec) -> Complex64 {
        let jd: f64 = stab.j().iter().zip(&self.output_shift).map(|(a, b)| a * b).sum();
        Complex64::new(0.0, -jd).exp()
    }
}
