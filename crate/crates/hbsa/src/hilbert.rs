//! Exact state vectors over labeled registers of photonic qubits.
//!
//! Every photon carries three binary degrees of freedom: polarization `P`
//! (`H`/`V`), a first longitudinal-momentum mode pair `F` (`E`/`I`), and a
//! second one `S` (`r`/`l`). A [`PureState`] is a dense complex amplitude
//! vector over a register of `(photon, dof)` qubits; basis index bit `k`
//! is the value of the qubit at register position `k`, with `{H, E, r} = 0`
//! and `{V, I, l} = 1`.
//!
//! Dimensions stay tiny (at most 512 for the three-photon teleportation
//! system), so everything is stored densely and checked exactly.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for exact-arithmetic checks (normalization, unitarity,
/// orthogonality). Double precision leaves ample headroom at dimension 512.
pub const NORM_TOL: f64 = 1e-12;

/// Probabilities below this are treated as an empty projection.
const PROB_FLOOR: f64 = 1e-15;

pub type Mat2 = [[C64; 2]; 2];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity_matrix() -> Mat2 {
    [[c(1.0), c(0.0)], [c(0.0), c(1.0)]]
}

pub fn pauli_x_matrix() -> Mat2 {
    [[c(0.0), c(1.0)], [c(1.0), c(0.0)]]
}

pub fn pauli_z_matrix() -> Mat2 {
    [[c(1.0), c(0.0)], [c(0.0), c(-1.0)]]
}

pub fn hadamard_matrix() -> Mat2 {
    let h = c(FRAC_1_SQRT_2);
    [[h, h], [h, -h]]
}

/// The photons of the protocol. `A` and `B` form the entangled pair; `X`
/// carries the unknown state in the teleportation application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhotonId {
    A,
    B,
    X,
}

impl PhotonId {
    /// The photon's three qubits in canonical `P, F, S` order.
    pub fn qubits(self) -> [QubitAddress; 3] {
        [
            QubitAddress::new(self, DofKind::P),
            QubitAddress::new(self, DofKind::F),
            QubitAddress::new(self, DofKind::S),
        ]
    }
}

impl fmt::Display for PhotonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhotonId::A => write!(f, "A"),
            PhotonId::B => write!(f, "B"),
            PhotonId::X => write!(f, "X"),
        }
    }
}

/// The three degrees of freedom of one photon.
///
/// `P` holds `{H = 0, V = 1}`, `F` holds `{E = 0, I = 1}` and `S` holds
/// `{r = 0, l = 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DofKind {
    P,
    F,
    S,
}

impl fmt::Display for DofKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DofKind::P => write!(f, "P"),
            DofKind::F => write!(f, "F"),
            DofKind::S => write!(f, "S"),
        }
    }
}

/// One qubit of one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitAddress {
    pub photon: PhotonId,
    pub dof: DofKind,
}

impl QubitAddress {
    pub fn new(photon: PhotonId, dof: DofKind) -> Self {
        Self { photon, dof }
    }
}

impl fmt::Display for QubitAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.photon, self.dof)
    }
}

/// Bell-state parity: `phi` pairs equal mode values, `psi` opposite ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Phi,
    Psi,
}

/// Bell-state phase: the sign on the second branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Plus,
    Minus,
}

/// One of the four Bell states of a single DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BellLabel {
    pub parity: Parity,
    pub phase: Phase,
}

impl BellLabel {
    pub const PHI_PLUS: Self = Self {
        parity: Parity::Phi,
        phase: Phase::Plus,
    };
    pub const PHI_MINUS: Self = Self {
        parity: Parity::Phi,
        phase: Phase::Minus,
    };
    pub const PSI_PLUS: Self = Self {
        parity: Parity::Psi,
        phase: Phase::Plus,
    };
    pub const PSI_MINUS: Self = Self {
        parity: Parity::Psi,
        phase: Phase::Minus,
    };

    pub const ALL: [Self; 4] = [
        Self::PHI_PLUS,
        Self::PHI_MINUS,
        Self::PSI_PLUS,
        Self::PSI_MINUS,
    ];

    pub fn index(self) -> usize {
        let p = match self.parity {
            Parity::Phi => 0,
            Parity::Psi => 1,
        };
        let s = match self.phase {
            Phase::Plus => 0,
            Phase::Minus => 1,
        };
        p * 2 + s
    }

    fn sign(self) -> f64 {
        match self.phase {
            Phase::Plus => 1.0,
            Phase::Minus => -1.0,
        }
    }

    /// Amplitude factor of the two-qubit branch `(x, y)`, with the sign
    /// attached to the branch whose first qubit holds the 1 value (`VV`,
    /// `II`, `ll`, or the `V/I/l`-first cross branch).
    fn branch_amplitude(self, x: u8, y: u8) -> f64 {
        let on_support = match self.parity {
            Parity::Phi => x == y,
            Parity::Psi => x != y,
        };
        if !on_support {
            0.0
        } else if x == 1 {
            self.sign() * FRAC_1_SQRT_2
        } else {
            FRAC_1_SQRT_2
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parity = match self.parity {
            Parity::Phi => "phi",
            Parity::Psi => "psi",
        };
        let phase = match self.phase {
            Phase::Plus => "+",
            Phase::Minus => "-",
        };
        write!(f, "{parity}{phase}")
    }
}

impl FromStr for BellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi+" => Ok(Self::PHI_PLUS),
            "phi-" => Ok(Self::PHI_MINUS),
            "psi+" => Ok(Self::PSI_PLUS),
            "psi-" => Ok(Self::PSI_MINUS),
            other => Err(Error::ParseLabel(other.to_string())),
        }
    }
}

/// One of the 64 hyperentangled Bell states, one Bell label per DOF in
/// `P, F, S` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HyperBellLabel {
    pub p: BellLabel,
    pub f: BellLabel,
    pub s: BellLabel,
}

impl HyperBellLabel {
    pub fn new(p: BellLabel, f: BellLabel, s: BellLabel) -> Self {
        Self { p, f, s }
    }

    pub const ALL_PLUS: Self = Self {
        p: BellLabel::PHI_PLUS,
        f: BellLabel::PHI_PLUS,
        s: BellLabel::PHI_PLUS,
    };

    /// All 64 labels in canonical order (P major, S minor).
    pub fn all() -> impl Iterator<Item = Self> {
        BellLabel::ALL.into_iter().flat_map(move |p| {
            BellLabel::ALL
                .into_iter()
                .flat_map(move |f| BellLabel::ALL.into_iter().map(move |s| Self::new(p, f, s)))
        })
    }

    pub fn index(self) -> usize {
        self.p.index() * 16 + self.f.index() * 4 + self.s.index()
    }

    pub fn bell_for(self, dof: DofKind) -> BellLabel {
        match dof {
            DofKind::P => self.p,
            DofKind::F => self.f,
            DofKind::S => self.s,
        }
    }
}

impl fmt::Display for HyperBellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.p, self.f, self.s)
    }
}

impl FromStr for HyperBellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::ParseLabel(s.to_string()));
        }
        Ok(Self::new(
            parts[0].parse()?,
            parts[1].parse()?,
            parts[2].parse()?,
        ))
    }
}

impl Serialize for HyperBellLabel {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Polarization detection outcome behind a PBS oriented at 45 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PolSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl fmt::Display for PolSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolSign::Plus => write!(f, "+"),
            PolSign::Minus => write!(f, "-"),
        }
    }
}

/// First-momentum detection outcome: external or internal mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FMode {
    E,
    I,
}

impl fmt::Display for FMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FMode::E => write!(f, "E"),
            FMode::I => write!(f, "I"),
        }
    }
}

/// Second-momentum detection outcome: right or left mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SMode {
    #[serde(rename = "r")]
    R,
    #[serde(rename = "l")]
    L,
}

impl fmt::Display for SMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SMode::R => write!(f, "r"),
            SMode::L => write!(f, "l"),
        }
    }
}

/// Joint single-photon detection outcome: polarization in the +/- basis,
/// both momentum DOFs in their mode bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PhotonOutcome {
    pub pol: PolSign,
    pub f: FMode,
    pub s: SMode,
}

impl PhotonOutcome {
    /// The eight outcomes in canonical order (pol, then F, then S).
    pub fn all() -> [Self; 8] {
        let mut out = [Self {
            pol: PolSign::Plus,
            f: FMode::E,
            s: SMode::R,
        }; 8];
        let mut k = 0;
        for pol in [PolSign::Plus, PolSign::Minus] {
            for f in [FMode::E, FMode::I] {
                for s in [SMode::R, SMode::L] {
                    out[k] = Self { pol, f, s };
                    k += 1;
                }
            }
        }
        out
    }

    /// The product ket this outcome projects onto, on the photon's three
    /// qubits: `(|H> ± |V>)/√2 ⊗ |f> ⊗ |s>`.
    pub fn ket(&self, photon: PhotonId) -> PureState {
        let register = photon.qubits().to_vec();
        let pol_sign = match self.pol {
            PolSign::Plus => 1.0,
            PolSign::Minus => -1.0,
        };
        let f_bit = match self.f {
            FMode::E => 0,
            FMode::I => 1,
        };
        let s_bit = match self.s {
            SMode::R => 0,
            SMode::L => 1,
        };
        let mut amps = vec![c(0.0); 8];
        let base = (f_bit << 1) | (s_bit << 2);
        amps[base] = c(FRAC_1_SQRT_2);
        amps[base | 1] = c(pol_sign * FRAC_1_SQRT_2);
        PureState::new_unchecked(register, amps)
    }
}

impl fmt::Display for PhotonOutcome {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fmt, "({},{},{})", self.pol, self.f, self.s)
    }
}

/// Result of projecting a state onto a ket on part of its register.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Squared norm of the projected component.
    pub probability: f64,
    /// Renormalized remainder on the untouched qubits; `None` when the
    /// probability is (numerically) zero.
    pub post: Option<PureState>,
}

/// A normalized pure state over a labeled qubit register.
///
/// Register position `k` owns basis-index bit `k` (least significant bit
/// first). States are immutable; every operation returns a new state.
#[derive(Debug, Clone)]
pub struct PureState {
    register: Vec<QubitAddress>,
    amps: Vec<C64>,
}

impl PureState {
    /// Build a state from explicit amplitudes, checking register
    /// uniqueness, dimension, and normalization.
    pub fn new(register: Vec<QubitAddress>, amps: Vec<C64>) -> Result<Self> {
        for (i, addr) in register.iter().enumerate() {
            if register[..i].contains(addr) {
                return Err(Error::OverlappingRegister(*addr));
            }
        }
        let expected = 1usize << register.len();
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                got: amps.len(),
                expected,
            });
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sq));
        }
        Ok(Self { register, amps })
    }

    pub(crate) fn new_unchecked(register: Vec<QubitAddress>, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << register.len());
        Self { register, amps }
    }

    /// The scalar state on an empty register (everything measured away).
    pub fn scalar() -> Self {
        Self {
            register: Vec::new(),
            amps: vec![c(1.0)],
        }
    }

    /// A computational-basis ket; bit `k` of `index` sets register
    /// position `k`.
    pub fn basis_ket(register: Vec<QubitAddress>, index: usize) -> Result<Self> {
        let dim = 1usize << register.len();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                got: index,
                expected: dim,
            });
        }
        let mut amps = vec![c(0.0); dim];
        amps[index] = c(1.0);
        Self::new(register, amps)
    }

    /// A Haar-like random state: i.i.d. complex Gaussian amplitudes,
    /// normalized.
    pub fn random(register: Vec<QubitAddress>, rng: &mut impl Rng) -> Result<Self> {
        let dim = 1usize << register.len();
        let mut amps: Vec<C64> = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im)
            })
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Self::new(register, amps)
    }

    /// The Bell state `label` of one DOF of a photon pair, on register
    /// `[(pair.0, dof), (pair.1, dof)]`.
    pub fn bell_state(label: BellLabel, dof: DofKind, pair: (PhotonId, PhotonId)) -> Result<Self> {
        if pair.0 == pair.1 {
            return Err(Error::DuplicatePhoton(pair.0));
        }
        let register = vec![
            QubitAddress::new(pair.0, dof),
            QubitAddress::new(pair.1, dof),
        ];
        let amps = (0..4)
            .map(|i| c(label.branch_amplitude(bit(i, 0), bit(i, 1))))
            .collect();
        Ok(Self::new_unchecked(register, amps))
    }

    /// The hyperentangled Bell state `label` of a photon pair: the tensor
    /// product of one Bell state per DOF, on the canonical register
    /// `[pair.0's P,F,S, pair.1's P,F,S]`.
    pub fn hyper_bell_state(label: HyperBellLabel, pair: (PhotonId, PhotonId)) -> Result<Self> {
        if pair.0 == pair.1 {
            return Err(Error::DuplicatePhoton(pair.0));
        }
        let mut register = Vec::with_capacity(6);
        register.extend(pair.0.qubits());
        register.extend(pair.1.qubits());
        let amps = (0..64)
            .map(|i| {
                let amp = label.p.branch_amplitude(bit(i, 0), bit(i, 3))
                    * label.f.branch_amplitude(bit(i, 1), bit(i, 4))
                    * label.s.branch_amplitude(bit(i, 2), bit(i, 5));
                c(amp)
            })
            .collect();
        Ok(Self::new_unchecked(register, amps))
    }

    pub fn register(&self) -> &[QubitAddress] {
        &self.register
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Register position of `addr`.
    pub fn position(&self, addr: QubitAddress) -> Result<usize> {
        self.register
            .iter()
            .position(|a| *a == addr)
            .ok_or(Error::MissingQubit(addr))
    }

    /// True when all three of the photon's qubits are present.
    pub fn contains_photon(&self, photon: PhotonId) -> bool {
        photon.qubits().iter().all(|q| self.register.contains(q))
    }

    /// Tensor product; registers must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for addr in &other.register {
            if self.register.contains(addr) {
                return Err(Error::OverlappingRegister(*addr));
            }
        }
        let mut register = self.register.clone();
        register.extend_from_slice(&other.register);
        let n = self.register.len();
        let mut amps = vec![c(0.0); 1 << register.len()];
        for (j, bj) in other.amps.iter().enumerate() {
            if bj.norm_sqr() == 0.0 {
                continue;
            }
            for (i, ai) in self.amps.iter().enumerate() {
                amps[(j << n) | i] = ai * bj;
            }
        }
        Ok(Self::new_unchecked(register, amps))
    }

    /// Apply a single-qubit unitary to the addressed qubit.
    pub fn apply_one_qubit(&self, addr: QubitAddress, u: &Mat2) -> Result<Self> {
        if !is_unitary(u) {
            return Err(Error::NonUnitary);
        }
        let pos = self.position(addr)?;
        Ok(self.apply_one_qubit_unchecked(pos, u))
    }

    fn apply_one_qubit_unchecked(&self, pos: usize, u: &Mat2) -> Self {
        let mask = 1usize << pos;
        let mut amps = self.amps.clone();
        for i in 0..self.dim() {
            if i & mask == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | mask];
                amps[i] = u[0][0] * a0 + u[0][1] * a1;
                amps[i | mask] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        Self::new_unchecked(self.register.clone(), amps)
    }

    /// Flip `target` on every branch where `control` is 1. Unitary and
    /// self-inverse; used for the polarization-controlled mode flip.
    pub(crate) fn apply_controlled_flip(
        &self,
        control: QubitAddress,
        target: QubitAddress,
    ) -> Result<Self> {
        let cmask = 1usize << self.position(control)?;
        let tmask = 1usize << self.position(target)?;
        let mut amps = self.amps.clone();
        for i in 0..self.dim() {
            if i & cmask != 0 && i & tmask == 0 {
                amps.swap(i, i | tmask);
            }
        }
        Ok(Self::new_unchecked(self.register.clone(), amps))
    }

    /// Map an index of `self` to the corresponding index of a state whose
    /// register holds the same addresses in a different order.
    fn alignment(&self, other: &Self) -> Result<Vec<usize>> {
        if self.register.len() != other.register.len() {
            return Err(Error::RegisterMismatch);
        }
        self.register
            .iter()
            .map(|addr| other.position(*addr))
            .collect()
    }

    /// `<self|other>`; the registers must hold the same qubit set.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        let map = self.alignment(other)?;
        let mut acc = C64::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            let j = permute_index(i, &map);
            acc += a.conj() * other.amps[j];
        }
        Ok(acc)
    }

    /// Global-phase-insensitive overlap `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Largest amplitude difference after aligning `other`'s register to
    /// `self`'s order.
    pub fn max_amp_distance(&self, other: &Self) -> Result<f64> {
        let map = self.alignment(other)?;
        let mut worst = 0.0f64;
        for (i, a) in self.amps.iter().enumerate() {
            let j = permute_index(i, &map);
            worst = worst.max((a - other.amps[j]).norm());
        }
        Ok(worst)
    }

    /// Rotate the global phase so the first nonzero amplitude is positive
    /// real; makes states comparable amplitude-by-amplitude.
    pub fn normalized_global_phase(&self) -> Self {
        let Some(first) = self.amps.iter().find(|a| a.norm() > 1e-9) else {
            return self.clone();
        };
        let rot = first.conj() / first.norm();
        let amps = self.amps.iter().map(|a| a * rot).collect();
        Self::new_unchecked(self.register.clone(), amps)
    }

    /// Project onto `ket` (whose register must be a subset of this one).
    /// The remainder keeps the untouched qubits in their original order.
    pub fn project_onto(&self, ket: &Self) -> Result<Projection> {
        let ket_pos: Vec<usize> = ket
            .register
            .iter()
            .map(|addr| self.position(*addr))
            .collect::<Result<_>>()?;
        let rest_pos: Vec<usize> = (0..self.register.len())
            .filter(|p| !ket_pos.contains(p))
            .collect();
        let rest_register: Vec<QubitAddress> = rest_pos.iter().map(|&p| self.register[p]).collect();

        let mut rest = vec![c(0.0); 1 << rest_pos.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut kidx = 0usize;
            for (k, &p) in ket_pos.iter().enumerate() {
                kidx |= ((i >> p) & 1) << k;
            }
            let k_amp = ket.amps[kidx];
            if k_amp.norm_sqr() == 0.0 {
                continue;
            }
            let mut ridx = 0usize;
            for (r, &p) in rest_pos.iter().enumerate() {
                ridx |= ((i >> p) & 1) << r;
            }
            rest[ridx] += k_amp.conj() * a;
        }

        let probability: f64 = rest.iter().map(|a| a.norm_sqr()).sum();
        let post = if probability > PROB_FLOOR {
            let scale = c(1.0 / probability.sqrt());
            let amps = rest.iter().map(|a| a * scale).collect();
            Some(Self::new_unchecked(rest_register, amps))
        } else {
            None
        };
        Ok(Projection { probability, post })
    }

    /// Detect one photon: polarization behind a PBS@45 (the +/- basis),
    /// both momentum DOFs in their mode bases. The outcome is sampled with
    /// Born probabilities; the photon is absorbed, so its qubits leave the
    /// register and the post-state is the renormalized remainder.
    pub fn measure_photon(
        &self,
        photon: PhotonId,
        rng: &mut impl Rng,
    ) -> Result<(PhotonOutcome, f64, PureState)> {
        if !self.contains_photon(photon) {
            return Err(Error::MissingPhoton(photon));
        }
        let outcomes = PhotonOutcome::all();
        let projections: Vec<Projection> = outcomes
            .iter()
            .map(|o| self.project_onto(&o.ket(photon)))
            .collect::<Result<_>>()?;
        let total: f64 = projections.iter().map(|p| p.probability).sum();

        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (outcome, proj) in outcomes.iter().zip(&projections) {
            if proj.probability <= PROB_FLOOR {
                continue;
            }
            acc += proj.probability;
            chosen = Some((outcome, proj));
            if u < acc {
                break;
            }
        }
        let (outcome, proj) = chosen.ok_or(Error::ZeroProbability)?;
        let post = proj.post.clone().ok_or(Error::ZeroProbability)?;
        Ok((*outcome, proj.probability / total, post))
    }

    /// Every joint detection outcome of the given photons with probability
    /// above 1e-12, in canonical order. No sampling involved.
    pub fn outcome_support(&self, photons: &[PhotonId]) -> Result<Vec<(Vec<PhotonOutcome>, f64)>> {
        for (i, ph) in photons.iter().enumerate() {
            if photons[..i].contains(ph) {
                return Err(Error::DuplicatePhoton(*ph));
            }
            if !self.contains_photon(*ph) {
                return Err(Error::MissingPhoton(*ph));
            }
        }
        let outcomes = PhotonOutcome::all();
        let mut support = Vec::new();
        let mut combo = vec![0usize; photons.len()];
        loop {
            let joint: Vec<PhotonOutcome> = combo.iter().map(|&k| outcomes[k]).collect();
            let mut ket = PureState::scalar();
            for (ph, o) in photons.iter().zip(&joint) {
                ket = ket.tensor(&o.ket(*ph))?;
            }
            let prob = self.project_onto(&ket)?.probability;
            if prob > 1e-12 {
                support.push((joint, prob));
            }
            // odometer over the 8^m joint outcomes
            let mut k = photons.len();
            loop {
                if k == 0 {
                    return Ok(support);
                }
                k -= 1;
                combo[k] += 1;
                if combo[k] < outcomes.len() {
                    break;
                }
                combo[k] = 0;
            }
        }
    }

    /// Amplitudes of the state in the 64-element hyper-Bell basis of the
    /// pair; entry `k` belongs to the label with `index() == k`. The
    /// register must hold exactly the pair's six qubits.
    pub fn decompose_hyper_bell(&self, pair: (PhotonId, PhotonId)) -> Result<Vec<C64>> {
        if pair.0 == pair.1 {
            return Err(Error::DuplicatePhoton(pair.0));
        }
        if self.register.len() != 6
            || !self.contains_photon(pair.0)
            || !self.contains_photon(pair.1)
        {
            return Err(Error::RegisterMismatch);
        }
        HyperBellLabel::all()
            .map(|label| {
                let basis = Self::hyper_bell_state(label, pair)?;
                basis.inner(self)
            })
            .collect()
    }
}

fn bit(i: usize, k: usize) -> u8 {
    ((i >> k) & 1) as u8
}

fn permute_index(i: usize, map: &[usize]) -> usize {
    let mut j = 0usize;
    for (k, &jpos) in map.iter().enumerate() {
        j |= ((i >> k) & 1) << jpos;
    }
    j
}

fn is_unitary(u: &Mat2) -> bool {
    let col0 = u[0][0].norm_sqr() + u[1][0].norm_sqr();
    let col1 = u[0][1].norm_sqr() + u[1][1].norm_sqr();
    let cross = u[0][0].conj() * u[0][1] + u[1][0].conj() * u[1][1];
    (col0 - 1.0).abs() <= NORM_TOL && (col1 - 1.0).abs() <= NORM_TOL && cross.norm() <= NORM_TOL
}
