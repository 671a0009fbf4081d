//! Born-rule probabilities and sampling for single photons and qubit pairs.
//!
//! Two encodings are in use and are never mixed:
//!
//! * **Polarization** (BB84, SARG04). A photon polarized at angle `θ`
//!   passes an analyzer at angle `φ` with probability `cos²(θ − φ)`.
//!   Polarization angles live in `[0, π)`.
//! * **Spin** (E91, AGM06). A two-outcome measurement along direction `θ` in
//!   the x–z plane of the Bloch sphere, with eigenvectors
//!   `|+θ⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩` and `|−θ⟩ = −sin(θ/2)|0⟩ + cos(θ/2)|1⟩`.
//!   For the singlet this gives `E(a, b) = −cos(a − b)`, so the E91 angle
//!   sets reach `|S| = 2√2`.
//!
//! A polarization analyzer at `φ` corresponds to the spin direction `2φ`.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::QuantumError;

/// Tolerance for exact-arithmetic checks (normalization, probability sums).
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Linear polarization direction, normalized into `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polarization(f64);

impl Polarization {
    pub fn new(angle: f64) -> Self {
        Self(angle.rem_euclid(PI))
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    pub fn rotated(self, delta: f64) -> Self {
        Self::new(self.0 + delta)
    }

    /// Whether two polarizations are orthogonal (within [`EXACT_TOLERANCE`]).
    pub fn is_orthogonal_to(self, other: Polarization) -> bool {
        (self.0 - other.0).cos().abs() < EXACT_TOLERANCE.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisLabel {
    /// `+`: analyzer at 0, outcomes 0 ↔ 0 and 1 ↔ π/2.
    Rectilinear,
    /// `×`: analyzer at π/4, outcomes 0 ↔ π/4 and 1 ↔ 3π/4.
    Diagonal,
    Custom,
}

impl BasisLabel {
    pub fn basis(self) -> Option<Basis> {
        match self {
            BasisLabel::Rectilinear => Some(Basis::RECTILINEAR),
            BasisLabel::Diagonal => Some(Basis::DIAGONAL),
            BasisLabel::Custom => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BasisLabel::Rectilinear => '+',
            BasisLabel::Diagonal => 'x',
            BasisLabel::Custom => '?',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(BasisLabel::Rectilinear),
            'x' | 'X' | '×' => Some(BasisLabel::Diagonal),
            _ => None,
        }
    }
}

/// A polarization measurement basis.
///
/// Outcome 0 is the direction `analyzer_angle`, outcome 1 the direction
/// `analyzer_angle + π/2`. The analyzer angle is reduced into `[0, π/2)`
/// on construction; reducing swaps which physical direction is called 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    analyzer_angle: f64,
    label: BasisLabel,
}

impl Basis {
    pub const RECTILINEAR: Basis = Basis {
        analyzer_angle: 0.0,
        label: BasisLabel::Rectilinear,
    };
    pub const DIAGONAL: Basis = Basis {
        analyzer_angle: FRAC_PI_4,
        label: BasisLabel::Diagonal,
    };

    pub fn new(analyzer_angle: f64) -> Self {
        let angle = analyzer_angle.rem_euclid(FRAC_PI_2);
        let label = if angle == 0.0 {
            BasisLabel::Rectilinear
        } else if angle == FRAC_PI_4 {
            BasisLabel::Diagonal
        } else {
            BasisLabel::Custom
        };
        Self {
            analyzer_angle: angle,
            label,
        }
    }

    pub fn analyzer_angle(&self) -> f64 {
        self.analyzer_angle
    }

    pub fn label(&self) -> BasisLabel {
        self.label
    }

    /// Polarization that encodes `bit` in this basis (and that outcome `bit`
    /// of a measurement in this basis projects onto).
    pub fn encode(&self, bit: u8) -> Polarization {
        Polarization::new(self.analyzer_angle + f64::from(bit & 1) * FRAC_PI_2)
    }

    /// The basis that shares no eigenvector with this one and is rotated by π/4.
    pub fn conjugate(&self) -> Basis {
        Basis::new(self.analyzer_angle + FRAC_PI_4)
    }
}

/// A transmitted light pulse. All photons share one polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub photon_count: u32,
    pub polarization: Polarization,
    pub slot: usize,
}

impl Pulse {
    pub fn single(polarization: Polarization, slot: usize) -> Self {
        Self {
            photon_count: 1,
            polarization,
            slot,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.photon_count == 0
    }

    pub fn vacuum(self) -> Self {
        Self {
            photon_count: 0,
            ..self
        }
    }
}

/// Probability that a photon polarized at `pol` yields outcome 0 in `basis`.
pub fn born_probability_zero(pol: Polarization, basis: &Basis) -> f64 {
    (pol.angle() - basis.analyzer_angle).cos().powi(2)
}

/// Outcome of measuring `pol` in `basis` given one uniform draw `u ∈ [0, 1)`.
///
/// Outcome 1 is chosen when `u < sin²(Δ)`; aligned and orthogonal inputs are
/// therefore exactly deterministic.
pub fn measure_photon_with(pol: Polarization, basis: &Basis, u: f64) -> u8 {
    let p_one = (pol.angle() - basis.analyzer_angle).sin().powi(2);
    u8::from(u < p_one)
}

/// Measures a single photon. Consumes exactly one draw from `rng`.
pub fn measure_photon<R: Rng + ?Sized>(pol: Polarization, basis: &Basis, rng: &mut R) -> u8 {
    measure_photon_with(pol, basis, rng.random::<f64>())
}

/// Spin measurement direction in the x–z plane, in radians.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MeasurementSetting(f64);

impl MeasurementSetting {
    pub fn new(angle: f64) -> Result<Self, QuantumError> {
        if angle.is_finite() {
            Ok(Self(angle))
        } else {
            Err(QuantumError::NonFinite(angle))
        }
    }

    /// Const constructor for compile-time angle tables.
    pub const fn from_const(angle: f64) -> Self {
        Self(angle)
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    pub fn eigenvector(self, outcome: Spin) -> [Complex64; 2] {
        let (s, c) = (self.0 / 2.0).sin_cos();
        match outcome {
            Spin::Plus => [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
            Spin::Minus => [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
        }
    }
}

impl TryFrom<f64> for MeasurementSetting {
    type Error = QuantumError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<MeasurementSetting> for f64 {
    fn from(s: MeasurementSetting) -> f64 {
        s.0
    }
}

impl PartialEq for MeasurementSetting {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MeasurementSetting {}

impl PartialOrd for MeasurementSetting {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MeasurementSetting {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A ±1 measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub fn sign(self) -> i8 {
        match self {
            Spin::Plus => 1,
            Spin::Minus => -1,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    /// Key bit convention: `+1 → 0`, `−1 → 1`.
    pub fn bit(self) -> u8 {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }

    pub fn from_sign(sign: i8) -> Spin {
        if sign >= 0 {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }
}

impl From<Spin> for i8 {
    fn from(s: Spin) -> i8 {
        s.sign()
    }
}

impl TryFrom<i8> for Spin {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Spin::Plus),
            -1 => Ok(Spin::Minus),
            other => Err(format!("spin outcome must be ±1, got {other}")),
        }
    }
}

/// Normalized pure state of two qubits, amplitudes ordered `|00⟩, |01⟩, |10⟩, |11⟩`
/// (first index Alice, second Bob).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self, QuantumError> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > EXACT_TOLERANCE {
            return Err(QuantumError::Unnormalized { norm_sqr });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes `amplitudes` first. Fails only for a zero or non-finite vector.
    pub fn normalized(amplitudes: [Complex64; 4]) -> Result<Self, QuantumError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::Unnormalized { norm_sqr: norm * norm });
        }
        Self::new(amplitudes.map(|a| a / norm))
    }

    /// `(|01⟩ − |10⟩)/√2`, perfectly anticorrelated along every direction.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: [
                Complex64::new(0.0, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    /// `(|01⟩ + |10⟩)/√2`.
    pub fn psi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: [
                Complex64::new(0.0, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    /// Tensor product of two single-qubit states (each normalized here).
    pub fn product(alice: [Complex64; 2], bob: [Complex64; 2]) -> Result<Self, QuantumError> {
        Self::normalized([
            alice[0] * bob[0],
            alice[0] * bob[1],
            alice[1] * bob[0],
            alice[1] * bob[1],
        ])
    }

    /// Computational-basis product state `|alice⟩ ⊗ |bob⟩`.
    pub fn basis_product(alice: u8, bob: u8) -> Self {
        let mut amplitudes = [Complex64::new(0.0, 0.0); 4];
        amplitudes[usize::from(alice & 1) * 2 + usize::from(bob & 1)] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    fn amp(&self, alice: usize, bob: usize) -> Complex64 {
        self.amplitudes[alice * 2 + bob]
    }

    /// Applies the real rotation `|0⟩ → |1⟩, |1⟩ → −|0⟩` to Bob's qubit. This is
    /// a Bloch-sphere rotation by π about y and flips every x–z spin outcome,
    /// the pair analogue of a π/2 polarization flip.
    pub fn flip_second(&self) -> Self {
        let a = &self.amplitudes;
        Self {
            amplitudes: [-a[1], a[0], -a[3], a[2]],
        }
    }

    /// Measures Bob's qubit along `setting` with one uniform draw `u`,
    /// returning the outcome and Alice's (normalized) conditional state.
    pub fn measure_second_with(&self, setting: MeasurementSetting, u: f64) -> (Spin, [Complex64; 2]) {
        let conditional = |outcome: Spin| {
            let v = setting.eigenvector(outcome);
            let mut alice = [Complex64::new(0.0, 0.0); 2];
            for (i, slot) in alice.iter_mut().enumerate() {
                *slot = self.amp(i, 0) * v[0].conj() + self.amp(i, 1) * v[1].conj();
            }
            alice
        };
        let plus = conditional(Spin::Plus);
        let p_plus: f64 = plus.iter().map(|c| c.norm_sqr()).sum();
        let (outcome, vector, p) = if u < p_plus {
            (Spin::Plus, plus, p_plus)
        } else {
            let minus = conditional(Spin::Minus);
            let p_minus = minus.iter().map(|c| c.norm_sqr()).sum::<f64>();
            (Spin::Minus, minus, p_minus)
        };
        let norm = p.sqrt();
        (outcome, vector.map(|c| c / norm))
    }
}

/// Joint outcome probabilities for one pair of settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl JointDistribution {
    pub fn get(&self, alice: Spin, bob: Spin) -> f64 {
        match (alice, bob) {
            (Spin::Plus, Spin::Plus) => self.pp,
            (Spin::Plus, Spin::Minus) => self.pm,
            (Spin::Minus, Spin::Plus) => self.mp,
            (Spin::Minus, Spin::Minus) => self.mm,
        }
    }

    /// Cells in the order `(+,+), (+,−), (−,+), (−,−)`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn correlation(&self) -> f64 {
        self.pp + self.mm - self.pm - self.mp
    }

    pub fn alice_plus(&self) -> f64 {
        self.pp + self.pm
    }

    pub fn bob_plus(&self) -> f64 {
        self.pp + self.mp
    }
}

pub const OUTCOME_ORDER: [(Spin, Spin); 4] = [
    (Spin::Plus, Spin::Plus),
    (Spin::Plus, Spin::Minus),
    (Spin::Minus, Spin::Plus),
    (Spin::Minus, Spin::Minus),
];

/// Exact `P(±,±)` from projecting `state` onto the rotated product eigenbasis.
pub fn exact_joint_distribution(
    state: &TwoQubitState,
    a: MeasurementSetting,
    b: MeasurementSetting,
) -> JointDistribution {
    let project = |sa: Spin, sb: Spin| {
        let va = a.eigenvector(sa);
        let vb = b.eigenvector(sb);
        let mut amp = Complex64::new(0.0, 0.0);
        for (i, ea) in va.iter().enumerate() {
            for (j, eb) in vb.iter().enumerate() {
                amp += (ea * eb).conj() * state.amp(i, j);
            }
        }
        amp.norm_sqr()
    };
    JointDistribution {
        pp: project(Spin::Plus, Spin::Plus),
        pm: project(Spin::Plus, Spin::Minus),
        mp: project(Spin::Minus, Spin::Plus),
        mm: project(Spin::Minus, Spin::Minus),
    }
}

/// Draws one joint outcome with a single uniform draw `u`.
pub fn sample_pair_with(dist: &JointDistribution, u: f64) -> (Spin, Spin) {
    let mut acc = 0.0;
    for (cell, (sa, sb)) in dist.as_array().into_iter().zip(OUTCOME_ORDER) {
        acc += cell;
        if u < acc {
            return (sa, sb);
        }
    }
    // u landed in the rounding gap above the cumulative sum; take the last
    // cell with nonzero weight.
    OUTCOME_ORDER
        .into_iter()
        .zip(dist.as_array())
        .rev()
        .find(|(_, p)| *p > 0.0)
        .map(|(o, _)| o)
        .unwrap_or((Spin::Minus, Spin::Minus))
}

/// Samples one joint outcome of measuring `state` along `(a, b)`.
/// Consumes exactly one draw from `rng`.
pub fn sample_pair<R: Rng + ?Sized>(
    state: &TwoQubitState,
    a: MeasurementSetting,
    b: MeasurementSetting,
    rng: &mut R,
) -> (Spin, Spin) {
    let dist = exact_joint_distribution(state, a, b);
    sample_pair_with(&dist, rng.random::<f64>())
}
