//! Passive and squeezing linear optics as symplectic matrices acting on `r̂ → A r̂`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linalg::max_abs;
use crate::phase_space::omega;

pub const SYMPLECTIC_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticCircuit {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticCircuit {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_multiple_of(2) || matrix.nrows() == 0 {
            return Err(SimError::Dimension(format!(
                "symplectic matrix must be 2N x 2N, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n = matrix.nrows() / 2;
        let o = omega(n);
        let dev = max_abs(&(matrix.transpose() * &o * &matrix - &o));
        if !(dev <= SYMPLECTIC_TOL) {
            return Err(SimError::NotSymplectic(dev));
        }
        Ok(Self { n_modes: n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { n_modes: n, matrix: DMatrix::identity(2 * n, 2 * n) }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        (0..2 * self.n_modes)
            .map(|i| (0..2 * self.n_modes).map(|j| self.matrix[(i, j)] * r[j]).sum())
            .collect()
    }

    /// Inverse via `A⁻¹ = −Ω Aᵀ Ω`.
    pub fn inverse(&self) -> Self {
        let o = omega(self.n_modes);
        Self { n_modes: self.n_modes, matrix: -(&o * self.matrix.transpose() * &o) }
    }
}

fn check_mode(n: usize, i: usize) -> Result<()> {
    if i >= n {
        return Err(SimError::InvalidParameter(format!("mode {i} out of range for {n} modes")));
    }
    Ok(())
}

/// `x_i → cos θ x_i − sin θ x_j`, `x_j → sin θ x_i + cos θ x_j` (same for `p`).
pub fn beamsplitter(n: usize, i: usize, j: usize, theta: f64) -> Result<SymplecticCircuit> {
    check_mode(n, i)?;
    check_mode(n, j)?;
    if i == j {
        return Err(SimError::InvalidParameter("beamsplitter needs two distinct modes".into()));
    }
    let (s, c) = theta.sin_cos();
    let mut m = DMatrix::identity(2 * n, 2 * n);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        m[(a, a)] = c;
        m[(a, b)] = -s;
        m[(b, a)] = s;
        m[(b, b)] = c;
    }
    Ok(SymplecticCircuit { n_modes: n, matrix: m })
}

/// Phase-space rotation `(x, p) → (x cos θ − p sin θ, x sin θ + p cos θ)`, i.e. `a → e^{iθ} a`.
pub fn rotation(n: usize, i: usize, theta: f64) -> Result<SymplecticCircuit> {
    check_mode(n, i)?;
    let (s, c) = theta.sin_cos();
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(2 * i, 2 * i)] = c;
    m[(2 * i, 2 * i + 1)] = -s;
    m[(2 * i + 1, 2 * i)] = s;
    m[(2 * i + 1, 2 * i + 1)] = c;
    Ok(SymplecticCircuit { n_modes: n, matrix: m })
}

/// `diag(e^{−ξ}, e^{ξ})` on mode `i`: positive `ξ` squeezes `x`.
pub fn squeezer(n: usize, i: usize, xi: f64) -> Result<SymplecticCircuit> {
    check_mode(n, i)?;
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(2 * i, 2 * i)] = (-xi).exp();
    m[(2 * i + 1, 2 * i + 1)] = xi.exp();
    Ok(SymplecticCircuit { n_modes: n, matrix: m })
}

/// `a` first, then `b`.
pub fn compose(a: &SymplecticCircuit, b: &SymplecticCircuit) -> Result<SymplecticCircuit> {
    if a.n_modes != b.n_modes {
        return Err(SimError::Dimension(format!("cannot compose {} and {} modes", a.n_modes, b.n_modes)));
    }
    SymplecticCircuit::new(&b.matrix * &a.matrix)
}

/// The two-mode static linear-optics CZ ("dumbbell") circuit.
///
/// `x₁' = (x₁ − p₂)/√2`, `p₁' = (p₁ + x₂)/√2`, `x₂' = (x₂ − p₁)/√2`, `p₂' = (x₁ + p₂)/√2`;
/// equivalently `a₁' = (a₁ + i a₂)/√2`, `a₂' = (i a₁ + a₂)/√2`.
pub fn dumbbell_cz() -> SymplecticCircuit {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        s, 0.0, 0.0, -s,
        0.0, s, s, 0.0,
        0.0, -s, s, 0.0,
        s, 0.0, 0.0, s,
    ]);
    SymplecticCircuit { n_modes: 2, matrix: m }
}

/// Embeds a two-mode circuit on modes `(i, j)` of an `n`-mode system.
pub fn embed_two_mode(n: usize, i: usize, j: usize, c: &SymplecticCircuit) -> Result<SymplecticCircuit> {
    check_mode(n, i)?;
    check_mode(n, j)?;
    if c.n_modes != 2 || i == j {
        return Err(SimError::InvalidParameter("expected a two-mode circuit on distinct modes".into()));
    }
    let idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
    let mut m = DMatrix::identity(2 * n, 2 * n);
    for (a, &ra) in idx.iter().enumerate() {
        for (b, &rb) in idx.iter().enumerate() {
            m[(ra, rb)] = c.matrix[(a, b)];
        }
    }
    Ok(SymplecticCircuit { n_modes: n, matrix: m })
}

/// `A r̄`: where a displacement `r̄` of the inputs ends up after the circuit, used to shift
/// homodyne postselection targets for displaced inputs.
pub fn compensate_displacement(a: &SymplecticCircuit, rbar: &[f64]) -> Result<Vec<f64>> {
    if rbar.len() != 2 * a.n_modes {
        return Err(SimError::Dimension(format!(
            "displacement has length {}, expected {}",
            rbar.len(),
            2 * a.n_modes
        )));
    }
    Ok(a.apply(rbar))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Beamsplitter,
    Rotation,
    Squeezer,
    Dumbbell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub element: ElementKind,
    pub modes: Vec<usize>,
    #[serde(default)]
    pub parameter: f64,
}

/// Ordered element list; the first element acts first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDescription {
    pub n_modes: usize,
    pub elements: Vec<Element>,
}

impl CircuitDescription {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes, elements: Vec::new() }
    }

    pub fn push(mut self, element: ElementKind, modes: &[usize], parameter: f64) -> Self {
        self.elements.push(Element { element, modes: modes.to_vec(), parameter });
        self
    }

    pub fn build(&self) -> Result<SymplecticCircuit> {
        if self.n_modes == 0 {
            return Err(SimError::InvalidParameter("circuit needs at least one mode".into()));
        }
        let n = self.n_modes;
        let mut acc = SymplecticCircuit::identity(n);
        for (k, e) in self.elements.iter().enumerate() {
            let want = match e.element {
                ElementKind::Beamsplitter | ElementKind::Dumbbell => 2,
                ElementKind::Rotation | ElementKind::Squeezer => 1,
            };
            if e.modes.len() != want {
                return Err(SimError::InvalidParameter(format!(
                    "elements[{k}]: {:?} takes {want} mode(s), got {}",
                    e.element,
                    e.modes.len()
                )));
            }
            let step = match e.element {
                ElementKind::Beamsplitter => beamsplitter(n, e.modes[0], e.modes[1], e.parameter)?,
                ElementKind::Rotation => rotation(n, e.modes[0], e.parameter)?,
                ElementKind::Squeezer => squeezer(n, e.modes[0], e.parameter)?,
                ElementKind::Dumbbell => embed_two_mode(n, e.modes[0], e.modes[1], &dumbbell_cz())?,
            };
            acc = SymplecticCircuit { n_modes: n, matrix: step.matrix * acc.matrix };
        }
        SymplecticCircuit::new(acc.matrix)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit description serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SimError::InvalidParameter(format!("circuit description: {e}")))
    }
}

/// Angles of the three-mode linear-cluster circuit.
///
/// Two dumbbell pairs (each built from a `phase` rotation, a `pair_angle` beamsplitter
/// and the inverse rotation) on modes (0, 1) and (2, 3); the inner modes 1 and 2 are
/// then fused on a `fusion_angle` beamsplitter. Mode 1 is measured (in `x`, see
/// [`LINEAR3_MEASURED_MODE`]) and mode 2 is rescaled by the inline squeezer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear3Angles {
    pub phase: f64,
    pub pair_angle: f64,
    pub fusion_angle: f64,
    pub inline_squeeze: f64,
}

pub const LINEAR3_MEASURED_MODE: usize = 1;
/// Quadrature angle for the fusion measurement: `η = p cos θ − x sin θ = x`.
pub const LINEAR3_MEASUREMENT_ANGLE: f64 = -FRAC_PI_2;
/// The fused mode's lattice is stretched by `√2` in `x`; this undoes it.
pub const LINEAR3_INLINE_SQUEEZE: f64 = std::f64::consts::LN_2 / 2.0;

impl Default for Linear3Angles {
    fn default() -> Self {
        Self { phase: FRAC_PI_2, pair_angle: FRAC_PI_4, fusion_angle: FRAC_PI_4, inline_squeeze: LINEAR3_INLINE_SQUEEZE }
    }
}

impl Linear3Angles {
    pub fn zeroed() -> Self {
        Self { phase: 0.0, pair_angle: 0.0, fusion_angle: 0.0, inline_squeeze: 0.0 }
    }

    pub fn description(&self) -> CircuitDescription {
        let mut d = CircuitDescription::new(4);
        for (a, b) in [(0, 1), (2, 3)] {
            d = d
                .push(ElementKind::Rotation, &[b], -self.phase)
                .push(ElementKind::Beamsplitter, &[a, b], self.pair_angle)
                .push(ElementKind::Rotation, &[b], self.phase);
        }
        d.push(ElementKind::Beamsplitter, &[1, 2], self.fusion_angle)
            .push(ElementKind::Squeezer, &[2], self.inline_squeeze)
    }
}

pub fn linear3_circuit(inline_squeeze: f64) -> Result<SymplecticCircuit> {
    Linear3Angles { inline_squeeze, ..Linear3Angles::default() }.description().build()
}
