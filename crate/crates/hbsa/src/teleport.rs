//! Teleportation of a single-photon state in all three DOFs at once,
//! using the hyperentangled channel and the analyzer.
//!
//! Alice holds photon X in an unknown product state over P, F and S and
//! shares the all-plus hyperentangled pair (A, B) with Bob. She runs the
//! analyzer on (X, A); the outcome label tells Bob which of four
//! single-qubit corrections to apply per DOF to recover the input on his
//! photon.

use rand::Rng;

use num_complex::Complex64 as C64;

use crate::analyzer::analyze_with_residual;
use crate::error::{Error, Result};
use crate::hilbert::{
    pauli_x_matrix, pauli_z_matrix, BellLabel, DofKind, HyperBellLabel, Mat2, Parity, Phase,
    PhotonId, PureState, QubitAddress, NORM_TOL,
};
use crate::kerr::HomodyneModel;

/// Amplitudes of one DOF of the input state: `a|0> + b|1>` with
/// `|a|^2 + |b|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofAmplitudes {
    a: C64,
    b: C64,
}

impl DofAmplitudes {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm_sq = a.norm_sqr() + b.norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::BadAmplitudes(norm_sq));
        }
        Ok(Self { a, b })
    }

    /// Normalize a raw amplitude pair.
    pub fn normalized(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm <= 0.0 {
            return Err(Error::BadAmplitudes(0.0));
        }
        Self::new(a / norm, b / norm)
    }

    /// A Haar-random qubit state.
    pub fn random(rng: &mut impl Rng) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        loop {
            let mut draws = [0.0f64; 4];
            for d in &mut draws {
                *d = StandardNormal.sample(rng);
            }
            let a = C64::new(draws[0], draws[1]);
            let b = C64::new(draws[2], draws[3]);
            if let Ok(amps) = Self::normalized(a, b) {
                return amps;
            }
        }
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn b(&self) -> C64 {
        self.b
    }
}

/// The single-qubit correction per DOF: identity, sign flip, bit flip, or
/// bit-then-sign flip. Each is unitary and an involution up to global
/// phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliOp {
    I,
    Z,
    X,
    ZX,
}

impl PauliOp {
    pub fn matrix(self) -> Mat2 {
        let x = pauli_x_matrix();
        let z = pauli_z_matrix();
        match self {
            PauliOp::I => crate::hilbert::identity_matrix(),
            PauliOp::Z => z,
            PauliOp::X => x,
            // X first, then Z
            PauliOp::ZX => mat_mul(&z, &x),
        }
    }
}

fn mat_mul(l: &Mat2, r: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = l[i][0] * r[0][j] + l[i][1] * r[1][j];
        }
    }
    out
}

/// Bob's correction for a given analyzer outcome, one Pauli per DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrectionOp {
    pub p: PauliOp,
    pub f: PauliOp,
    pub s: PauliOp,
}

impl CorrectionOp {
    pub fn for_dof(&self, dof: DofKind) -> PauliOp {
        match dof {
            DofKind::P => self.p,
            DofKind::F => self.f,
            DofKind::S => self.s,
        }
    }
}

fn pauli_for(label: BellLabel) -> PauliOp {
    match (label.parity, label.phase) {
        (Parity::Phi, Phase::Plus) => PauliOp::I,
        (Parity::Phi, Phase::Minus) => PauliOp::Z,
        (Parity::Psi, Phase::Plus) => PauliOp::X,
        (Parity::Psi, Phase::Minus) => PauliOp::ZX,
    }
}

/// The correction that maps Bob's residual for `label` back to the input:
/// per DOF, φ+ needs nothing, φ− a sign flip, ψ+ a bit flip, ψ− both.
pub fn correction_for(label: HyperBellLabel) -> CorrectionOp {
    CorrectionOp {
        p: pauli_for(label.p),
        f: pauli_for(label.f),
        s: pauli_for(label.s),
    }
}

/// Apply a correction to one photon's three qubits.
pub fn apply_correction(
    state: &PureState,
    photon: PhotonId,
    op: &CorrectionOp,
) -> Result<PureState> {
    let mut st = state.clone();
    for dof in [DofKind::P, DofKind::F, DofKind::S] {
        let pauli = op.for_dof(dof);
        if pauli == PauliOp::I {
            continue;
        }
        st = st.apply_one_qubit(QubitAddress::new(photon, dof), &pauli.matrix())?;
    }
    Ok(st)
}

/// The product state `(aP|H> + bP|V>)(aF|E> + bF|I>)(aS|r> + bS|l>)` on
/// one photon.
pub fn single_photon_state(
    photon: PhotonId,
    p: &DofAmplitudes,
    f: &DofAmplitudes,
    s: &DofAmplitudes,
) -> PureState {
    let register = photon.qubits().to_vec();
    let pick = |amps: &DofAmplitudes, b: u8| if b == 0 { amps.a } else { amps.b };
    let amps = (0..8)
        .map(|i| {
            pick(p, (i & 1) as u8) * pick(f, ((i >> 1) & 1) as u8) * pick(s, ((i >> 2) & 1) as u8)
        })
        .collect();
    PureState::new_unchecked(register, amps)
}

/// Alice's unknown input on photon X.
pub fn make_input(p: &DofAmplitudes, f: &DofAmplitudes, s: &DofAmplitudes) -> PureState {
    single_photon_state(PhotonId::X, p, f, s)
}

/// The shared quantum channel: the all-plus hyperentangled state of the
/// pair (A, B).
pub fn make_channel() -> PureState {
    PureState::hyper_bell_state(HyperBellLabel::ALL_PLUS, (PhotonId::A, PhotonId::B))
        .expect("distinct photons")
}

/// Result of one teleportation run.
#[derive(Debug, Clone)]
pub struct TeleportOutcome {
    /// The analyzer's decoded label for (X, A).
    pub label: HyperBellLabel,
    /// Bob's photon after the correction.
    pub bob_state: PureState,
    /// Overlap with the input, global-phase-insensitive.
    pub fidelity: f64,
}

/// Run the full protocol: build X ⊗ channel, analyze (X, A), correct B,
/// and score Bob's photon against the input. Ideal homodyne gives
/// fidelity 1 for every outcome; the gaussian model can misdecode and
/// degrade it.
pub fn teleport(
    p: &DofAmplitudes,
    f: &DofAmplitudes,
    s: &DofAmplitudes,
    model: &HomodyneModel,
    rng: &mut impl Rng,
) -> Result<TeleportOutcome> {
    let joint = make_input(p, f, s).tensor(&make_channel())?;
    let (record, residual) = analyze_with_residual(&joint, (PhotonId::X, PhotonId::A), model, rng)?;
    let corrected = apply_correction(&residual, PhotonId::B, &correction_for(record.decoded))?;
    let target = single_photon_state(PhotonId::B, p, f, s);
    let fidelity = corrected.fidelity(&target)?;
    Ok(TeleportOutcome {
        label: record.decoded,
        bob_state: corrected,
        fidelity,
    })
}

/// Sampling-free variant for exhaustive checks: project the joint state
/// onto one forced analyzer outcome on (X, A), correct Bob's photon, and
/// return the fidelity with the input. Every label occurs with weight
/// 1/64 regardless of the input amplitudes.
pub fn forced_outcome_fidelity(
    p: &DofAmplitudes,
    f: &DofAmplitudes,
    s: &DofAmplitudes,
    label: HyperBellLabel,
) -> Result<f64> {
    let joint = make_input(p, f, s).tensor(&make_channel())?;
    let ket = PureState::hyper_bell_state(label, (PhotonId::X, PhotonId::A))?;
    let projection = joint.project_onto(&ket)?;
    let residual = projection.post.ok_or(Error::ZeroProbability)?;
    let corrected = apply_correction(&residual, PhotonId::B, &correction_for(label))?;
    let target = single_photon_state(PhotonId::B, p, f, s);
    corrected.fidelity(&target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn basis_amps() -> DofAmplitudes {
        DofAmplitudes::new(c(1.0), c(0.0)).unwrap()
    }

    fn random_amps(rng: &mut impl Rng) -> (DofAmplitudes, DofAmplitudes, DofAmplitudes) {
        (
            DofAmplitudes::random(rng),
            DofAmplitudes::random(rng),
            DofAmplitudes::random(rng),
        )
    }

    #[test]
    fn make_input_basis_state() {
        let st = make_input(&basis_amps(), &basis_amps(), &basis_amps());
        assert!((st.amplitudes()[0].re - 1.0).abs() < NORM_TOL);
        assert!((st.norm_sq() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn make_input_uniform_superposition() {
        let u = DofAmplitudes::new(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)).unwrap();
        let st = make_input(&u, &u, &u);
        for a in st.amplitudes() {
            assert!((a.re - 0.5 * FRAC_1_SQRT_2).abs() < NORM_TOL);
        }
    }

    #[test]
    fn make_input_norm_is_one_for_random_amplitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let (p, f, s) = random_amps(&mut rng);
            let st = make_input(&p, &f, &s);
            assert!((st.norm_sq() - 1.0).abs() < NORM_TOL);
        }
    }

    #[test]
    fn rejects_unnormalized_amplitudes() {
        assert!(matches!(
            DofAmplitudes::new(c(1.0), c(1.0)),
            Err(Error::BadAmplitudes(_))
        ));
    }

    #[test]
    fn channel_is_the_all_plus_state() {
        let channel = make_channel();
        let coeffs = channel
            .decompose_hyper_bell((PhotonId::A, PhotonId::B))
            .unwrap();
        for (k, amp) in coeffs.iter().enumerate() {
            let expected = if k == HyperBellLabel::ALL_PLUS.index() {
                1.0
            } else {
                0.0
            };
            assert!((amp.norm() - expected).abs() < NORM_TOL);
        }
        assert!((channel.norm_sq() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn corrections_follow_the_residual_table() {
        let all_plus = correction_for(HyperBellLabel::ALL_PLUS);
        assert_eq!(
            (all_plus.p, all_plus.f, all_plus.s),
            (PauliOp::I, PauliOp::I, PauliOp::I)
        );

        // psi+ residual a|1> + b|0>: X restores it exactly
        let m = PauliOp::X.matrix();
        let (a, b) = (C64::new(0.3, 0.1), C64::new(0.2, -0.5));
        let restored = (m[0][0] * b + m[0][1] * a, m[1][0] * b + m[1][1] * a);
        assert!((restored.0 - a).norm() < NORM_TOL);
        assert!((restored.1 - b).norm() < NORM_TOL);

        // psi- residual a|1> - b|0>: ZX restores it up to global phase
        let m = PauliOp::ZX.matrix();
        let (r0, r1) = (-b, a);
        let restored = (m[0][0] * r0 + m[0][1] * r1, m[1][0] * r0 + m[1][1] * r1);
        assert!((restored.0 - a).norm() < NORM_TOL);
        assert!((restored.1 - b).norm() < NORM_TOL);
    }

    #[test]
    fn corrections_are_involutive_up_to_phase() {
        for op in [PauliOp::I, PauliOp::Z, PauliOp::X, PauliOp::ZX] {
            let m = op.matrix();
            let sq = super::mat_mul(&m, &m);
            // the square must be ±identity
            let sign = sq[0][0];
            assert!((sign.norm() - 1.0).abs() < NORM_TOL);
            assert!(sign.im.abs() < NORM_TOL);
            assert!(sq[0][1].norm() < NORM_TOL && sq[1][0].norm() < NORM_TOL);
            assert!((sq[1][1] - sign).norm() < NORM_TOL);
        }
    }

    #[test]
    fn teleport_basis_state_ideal() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let out = teleport(
            &basis_amps(),
            &basis_amps(),
            &basis_amps(),
            &HomodyneModel::Ideal,
            &mut rng,
        )
        .unwrap();
        assert!((out.fidelity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn teleport_random_states_ideal() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut min_fid = f64::INFINITY;
        for _ in 0..100 {
            let (p, f, s) = random_amps(&mut rng);
            let out = teleport(&p, &f, &s, &HomodyneModel::Ideal, &mut rng).unwrap();
            min_fid = min_fid.min(out.fidelity);
        }
        assert!(min_fid >= 1.0 - 1e-10, "min fidelity {min_fid}");
    }

    #[test]
    fn forced_outcomes_all_restore_the_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (p, f, s) = random_amps(&mut rng);
        for label in HyperBellLabel::all() {
            let fidelity = forced_outcome_fidelity(&p, &f, &s, label).unwrap();
            assert!(
                (fidelity - 1.0).abs() < 1e-12,
                "label {label}: fidelity {fidelity}"
            );
        }
    }

    #[test]
    fn forced_outcome_weights_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let (p, f, s) = random_amps(&mut rng);
        let joint = make_input(&p, &f, &s).tensor(&make_channel()).unwrap();
        for label in HyperBellLabel::all() {
            let ket = PureState::hyper_bell_state(label, (PhotonId::X, PhotonId::A)).unwrap();
            let projection = joint.project_onto(&ket).unwrap();
            assert!(
                (projection.probability - 1.0 / 64.0).abs() < NORM_TOL,
                "label {label}: weight {}",
                projection.probability
            );
        }
    }

    #[test]
    fn fidelity_ignores_global_phase_of_the_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (p, f, s) = random_amps(&mut rng);
        let rot = C64::from_polar(1.0, 1.234);
        let p2 = DofAmplitudes::new(p.a() * rot, p.b() * rot).unwrap();
        for label in [HyperBellLabel::ALL_PLUS, "psi-,phi-,psi+".parse().unwrap()] {
            let f1 = forced_outcome_fidelity(&p, &f, &s, label).unwrap();
            let f2 = forced_outcome_fidelity(&p2, &f, &s, label).unwrap();
            assert!((f1 - f2).abs() < NORM_TOL);
        }
    }

    #[test]
    fn sampled_labels_cover_the_outcome_space_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let n = 6400usize;
        let mut counts = [0usize; 64];
        for _ in 0..n {
            let (p, f, s) = random_amps(&mut rng);
            let out = teleport(&p, &f, &s, &HomodyneModel::Ideal, &mut rng).unwrap();
            counts[out.label.index()] += 1;
            assert!((out.fidelity - 1.0).abs() < 1e-10);
        }
        let expectation = n as f64 / 64.0;
        let sigma = (n as f64 * (1.0 / 64.0) * (63.0 / 64.0)).sqrt();
        for (k, &count) in counts.iter().enumerate() {
            assert!(
                (count as f64 - expectation).abs() <= 5.0 * sigma,
                "label index {k}: count {count}, expected {expectation}"
            );
        }
    }
}
