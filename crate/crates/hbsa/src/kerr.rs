//! Weak cross-Kerr probes: branch-wise phase accumulation on coherent
//! states and X-quadrature readout.
//!
//! A probe coherent state picks up a phase `N·θ` from the photon number
//! `N` of the signal mode it is coupled to. On a superposition, the phase
//! is branch-dependent, so the joint system is tracked as a [`TaggedState`]:
//! the signal amplitudes stay untouched while every basis branch carries
//! one integer phase counter (in units of θ) per probe.
//!
//! The X quadrature `x = a + a†` of a coherent state `|α e^{iφ}>` is
//! Gaussian with mean `2α·cos φ` and unit variance, so homodyne readout
//! distinguishes `|φ| = 0` from `|φ| = θ` but never the sign — which is
//! exactly why the signal branches stay coherent. The ideal model reads
//! the class out perfectly (the sign-dependent probe phase is assumed
//! corrected by feed-forward); the gaussian model samples a real quadrature
//! value and thresholds it at the midpoint, so it can misclassify.

use std::fmt;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::hilbert::{DofKind, PhotonId, PureState, QubitAddress};

/// Cross-Kerr interaction parameters: the per-photon phase `θ = χt` and
/// the probe amplitude `α`. Valid range: `0 ≤ θ ≤ π/2`, `α ≥ 0` (θ = 0 is
/// the degenerate no-information limit, kept for noise studies).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KerrParams {
    theta: f64,
    alpha: f64,
}

impl KerrParams {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta)
            || !alpha.is_finite()
            || alpha < 0.0
        {
            return Err(Error::BadKerrParams { theta, alpha });
        }
        Ok(Self { theta, alpha })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Separation `α(1 − cos θ)` between each Gaussian mean and the
    /// discrimination threshold.
    pub fn discrimination_distance(&self) -> f64 {
        self.alpha * (1.0 - self.theta.cos())
    }
}

/// The three probe coherent states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProbeId {
    P1,
    P2,
    P3,
}

impl ProbeId {
    pub const ALL: [Self; 3] = [Self::P1, Self::P2, Self::P3];

    pub fn index(self) -> usize {
        match self {
            ProbeId::P1 => 0,
            ProbeId::P2 => 1,
            ProbeId::P3 => 2,
        }
    }
}

impl fmt::Display for ProbeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeId::P1 => write!(f, "P1"),
            ProbeId::P2 => write!(f, "P2"),
            ProbeId::P3 => write!(f, "P3"),
        }
    }
}

/// One Kerr medium: a probe coupled to one mode of one photon's DOF.
/// Branches where the qubit holds `mode_value` shift the probe phase by
/// `sign` units of θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    pub probe: ProbeId,
    pub photon: PhotonId,
    pub dof: DofKind,
    pub mode_value: u8,
    pub sign: i8,
}

impl Coupling {
    pub fn new(probe: ProbeId, photon: PhotonId, dof: DofKind, mode_value: u8, sign: i8) -> Self {
        debug_assert!(mode_value <= 1 && (sign == 1 || sign == -1));
        Self {
            probe,
            photon,
            dof,
            mode_value,
            sign,
        }
    }
}

/// The probe layout of the analyzer, parameterized over the analyzed pair:
/// P1 couples to the `I` mode of the first-momentum DOF, P2 to the `l`
/// mode of the second, P3 again to the `I` mode (after the F beam
/// splitters). The first photon couples with +1, the second with -1, so φ
/// parity nets zero shift and ψ parity nets ±θ.
pub fn standard_couplings(pair: (PhotonId, PhotonId)) -> Vec<Coupling> {
    vec![
        Coupling::new(ProbeId::P1, pair.0, DofKind::F, 1, 1),
        Coupling::new(ProbeId::P1, pair.1, DofKind::F, 1, -1),
        Coupling::new(ProbeId::P2, pair.0, DofKind::S, 1, 1),
        Coupling::new(ProbeId::P2, pair.1, DofKind::S, 1, -1),
        Coupling::new(ProbeId::P3, pair.0, DofKind::F, 1, 1),
        Coupling::new(ProbeId::P3, pair.1, DofKind::F, 1, -1),
    ]
}

/// Magnitude of the phase shift read off a probe; the sign is not
/// observable in the X quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ProbeOutcome {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "theta")]
    ThetaMag,
}

impl fmt::Display for ProbeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeOutcome::Zero => write!(f, "0"),
            ProbeOutcome::ThetaMag => write!(f, "theta"),
        }
    }
}

/// Homodyne discrimination model: `Ideal` reads the shift class perfectly;
/// `Gaussian` samples `x ~ N(2α·cos(tag·θ), 1)` and thresholds at the
/// midpoint `α(1 + cos θ)`, so it misclassifies with the probability given
/// by [`error_probability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HomodyneModel {
    Ideal,
    Gaussian(KerrParams),
}

impl HomodyneModel {
    /// Gaussian model; requires `α > 0` (an empty probe carries no signal).
    pub fn gaussian(params: KerrParams) -> Result<Self> {
        if params.alpha <= 0.0 {
            return Err(Error::GaussianNeedsAlpha);
        }
        Ok(Self::Gaussian(params))
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, Self::Ideal)
    }
}

/// A signal state entangled with the probe phases: per basis branch, one
/// integer counter per probe in units of θ. Amplitudes are never touched
/// by the Kerr interaction itself.
#[derive(Debug, Clone)]
pub struct TaggedState {
    base: PureState,
    tags: Vec<[i8; 3]>,
}

/// Wrap a state with all probe counters at zero.
pub fn attach_probes(state: PureState) -> TaggedState {
    let tags = vec![[0i8; 3]; state.dim()];
    TaggedState { base: state, tags }
}

impl TaggedState {
    pub fn base(&self) -> &PureState {
        &self.base
    }

    /// The branch counters of one probe.
    pub fn tags_for(&self, probe: ProbeId) -> Vec<i8> {
        self.tags.iter().map(|t| t[probe.index()]).collect()
    }

    /// Drop the probe bookkeeping; every counter must have been cleared by
    /// a homodyne measurement (or never set).
    pub fn strip(self) -> Result<PureState> {
        for t in &self.tags {
            for probe in ProbeId::ALL {
                if t[probe.index()] != 0 {
                    return Err(Error::ResidualTags(probe));
                }
            }
        }
        Ok(self.base)
    }
}

/// Pass the addressed mode through one Kerr medium: every branch where the
/// qubit equals `c.mode_value` advances `c.probe`'s counter by `c.sign`.
pub fn cross_kerr(tagged: TaggedState, c: &Coupling) -> Result<TaggedState> {
    let pos = tagged.base.position(QubitAddress::new(c.photon, c.dof))?;
    let mask = 1usize << pos;
    let pi = c.probe.index();
    let mut tags = tagged.tags;
    for (i, t) in tags.iter_mut().enumerate() {
        let branch_value = ((i & mask) != 0) as u8;
        if branch_value == c.mode_value {
            let next = t[pi] as i32 + c.sign as i32;
            if next.abs() > 2 {
                return Err(Error::TagOverflow {
                    probe: c.probe,
                    tag: next,
                });
            }
            t[pi] = next as i8;
        }
    }
    Ok(TaggedState {
        base: tagged.base,
        tags,
    })
}

/// X-quadrature readout of one probe.
///
/// The true shift class (zero vs ±θ) is Born-sampled from the branch
/// weights. Under `Ideal` the class is reported faithfully, the state is
/// projected onto it, and the probe's counters are cleared; the ±θ
/// branches keep their coherence with no extra relative phase (the
/// feed-forward phase correction is assumed perfect). Under `Gaussian` a
/// quadrature value is sampled and thresholded, so the reported class can
/// be wrong; the projection follows the report when it has any support and
/// otherwise leaves the state untouched.
pub fn homodyne_x(
    tagged: TaggedState,
    probe: ProbeId,
    model: &HomodyneModel,
    rng: &mut impl Rng,
) -> Result<(ProbeOutcome, TaggedState)> {
    let pi = probe.index();
    for t in &tagged.tags {
        if t[pi].abs() > 1 {
            return Err(Error::TagOverflow {
                probe,
                tag: t[pi] as i32,
            });
        }
    }

    let amps = tagged.base.amplitudes();
    let mut w_zero = 0.0f64;
    let mut w_shift = 0.0f64;
    for (a, t) in amps.iter().zip(&tagged.tags) {
        if t[pi] == 0 {
            w_zero += a.norm_sqr();
        } else {
            w_shift += a.norm_sqr();
        }
    }
    let total = w_zero + w_shift;

    let u: f64 = rng.random();
    let true_shifted = u >= w_zero / total;

    let reported_shifted = match model {
        HomodyneModel::Ideal => true_shifted,
        HomodyneModel::Gaussian(params) => {
            if params.alpha <= 0.0 {
                return Err(Error::GaussianNeedsAlpha);
            }
            let mean = if true_shifted {
                2.0 * params.alpha * params.theta.cos()
            } else {
                2.0 * params.alpha
            };
            let x = Normal::new(mean, 1.0).expect("unit variance").sample(rng);
            let threshold = params.alpha * (1.0 + params.theta.cos());
            x < threshold
        }
    };

    let w_selected = if reported_shifted { w_shift } else { w_zero };
    let mut new_amps: Vec<C64>;
    if w_selected > 1e-12 {
        let scale = 1.0 / w_selected.sqrt();
        new_amps = amps.to_vec();
        for (a, t) in new_amps.iter_mut().zip(&tagged.tags) {
            if (t[pi] != 0) == reported_shifted {
                *a *= scale;
            } else {
                *a = C64::new(0.0, 0.0);
            }
        }
    } else {
        // the report disagrees with a state that has no support in that
        // class: only the classical record is wrong
        new_amps = amps.to_vec();
    }

    let mut tags = tagged.tags;
    for t in &mut tags {
        t[pi] = 0;
    }
    let base = PureState::new_unchecked(tagged.base.register().to_vec(), new_amps);
    let outcome = if reported_shifted {
        ProbeOutcome::ThetaMag
    } else {
        ProbeOutcome::Zero
    };
    Ok((outcome, TaggedState { base, tags }))
}

/// Probability that the gaussian homodyne misreports the shift class:
/// `(1/2)·erfc(α(1 − cos θ)/√2)`, the tail of a unit-variance Gaussian
/// beyond the midpoint between the two means `2α` and `2α·cos θ`.
pub fn error_probability(params: &KerrParams) -> f64 {
    0.5 * erfc(params.discrimination_distance() / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{BellLabel, Parity, Phase, NORM_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const AB: (PhotonId, PhotonId) = (PhotonId::A, PhotonId::B);

    fn p2_couplings() -> Vec<Coupling> {
        standard_couplings(AB)
            .into_iter()
            .filter(|c| c.probe == ProbeId::P2)
            .collect()
    }

    fn couple_all(mut tagged: TaggedState, couplings: &[Coupling]) -> TaggedState {
        for c in couplings {
            tagged = cross_kerr(tagged, c).unwrap();
        }
        tagged
    }

    #[test]
    fn attach_probes_starts_clean() {
        let st = PureState::bell_state(BellLabel::PHI_PLUS, DofKind::S, AB).unwrap();
        let tagged = attach_probes(st.clone());
        assert!(tagged.tags_for(ProbeId::P1).iter().all(|&t| t == 0));
        assert!((tagged.base().norm_sq() - 1.0).abs() < NORM_TOL);
        let back = tagged.strip().unwrap();
        assert!(st.max_amp_distance(&back).unwrap() < NORM_TOL);
    }

    #[test]
    fn cross_kerr_tags_psi_branches_with_opposite_signs() {
        let st = PureState::bell_state(BellLabel::PSI_PLUS, DofKind::S, AB).unwrap();
        let tagged = couple_all(attach_probes(st), &p2_couplings());
        // register [(A,S),(B,S)]: branch rl = index 2, branch lr = index 1
        let tags = tagged.tags_for(ProbeId::P2);
        assert_eq!(tags[0b10], -1);
        assert_eq!(tags[0b01], 1);
        assert_eq!(tags[0b00], 0);
        assert_eq!(tags[0b11], 0);
    }

    #[test]
    fn cross_kerr_cancels_on_phi_branches() {
        let st = PureState::bell_state(BellLabel::PHI_PLUS, DofKind::S, AB).unwrap();
        let tagged = couple_all(attach_probes(st), &p2_couplings());
        let tags = tagged.tags_for(ProbeId::P2);
        assert_eq!(tags[0b00], 0); // rr: no coupled mode occupied
        assert_eq!(tags[0b11], 0); // ll: +1 and -1 cancel
    }

    #[test]
    fn cross_kerr_leaves_amplitudes_alone() {
        let st = PureState::bell_state(BellLabel::PSI_MINUS, DofKind::S, AB).unwrap();
        let tagged = couple_all(attach_probes(st.clone()), &p2_couplings());
        assert!(st.max_amp_distance(tagged.base()).unwrap() < NORM_TOL);
    }

    #[test]
    fn homodyne_without_tags_reports_zero() {
        let st = PureState::bell_state(BellLabel::PHI_PLUS, DofKind::S, AB).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (outcome, after) = homodyne_x(
            attach_probes(st.clone()),
            ProbeId::P2,
            &HomodyneModel::Ideal,
            &mut rng,
        )
        .unwrap();
        assert_eq!(outcome, ProbeOutcome::Zero);
        assert!(st.max_amp_distance(after.base()).unwrap() < NORM_TOL);
    }

    #[test]
    fn homodyne_preserves_entanglement_of_shifted_class() {
        // psi+_F shifts P1 deterministically and survives the readout
        let st = PureState::bell_state(BellLabel::PSI_PLUS, DofKind::F, AB).unwrap();
        let couplings: Vec<Coupling> = standard_couplings(AB)
            .into_iter()
            .filter(|c| c.probe == ProbeId::P1)
            .collect();
        let tagged = couple_all(attach_probes(st.clone()), &couplings);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (outcome, after) =
            homodyne_x(tagged, ProbeId::P1, &HomodyneModel::Ideal, &mut rng).unwrap();
        assert_eq!(outcome, ProbeOutcome::ThetaMag);
        let post = after.strip().unwrap();
        assert!((post.fidelity(&st).unwrap() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn homodyne_projects_superpositions_by_class() {
        // (phi+ + psi+)/sqrt(2) on the F pair: each class holds weight 1/2
        let register = vec![
            QubitAddress::new(PhotonId::A, DofKind::F),
            QubitAddress::new(PhotonId::B, DofKind::F),
        ];
        let amps = vec![C64::new(0.5, 0.0); 4];
        let st = PureState::new(register, amps).unwrap();
        let couplings: Vec<Coupling> = standard_couplings(AB)
            .into_iter()
            .filter(|c| c.probe == ProbeId::P1)
            .collect();
        let phi = PureState::bell_state(BellLabel::PHI_PLUS, DofKind::F, AB).unwrap();
        let psi = PureState::bell_state(BellLabel::PSI_PLUS, DofKind::F, AB).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut shifted_seen = 0usize;
        let n = 2000;
        for _ in 0..n {
            let tagged = couple_all(attach_probes(st.clone()), &couplings);
            let (outcome, after) =
                homodyne_x(tagged, ProbeId::P1, &HomodyneModel::Ideal, &mut rng).unwrap();
            let post = after.strip().unwrap();
            match outcome {
                ProbeOutcome::Zero => {
                    assert!((post.fidelity(&phi).unwrap() - 1.0).abs() < NORM_TOL);
                }
                ProbeOutcome::ThetaMag => {
                    shifted_seen += 1;
                    assert!((post.fidelity(&psi).unwrap() - 1.0).abs() < NORM_TOL);
                }
            }
        }
        // Born rule: half the runs land in each class (5 sigma)
        let mean = n as f64 * 0.5;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((shifted_seen as f64 - mean).abs() <= 5.0 * sigma);
    }

    #[test]
    fn overflowing_tags_are_rejected() {
        let st = PureState::bell_state(BellLabel::PSI_PLUS, DofKind::S, AB).unwrap();
        let c = Coupling::new(ProbeId::P2, PhotonId::A, DofKind::S, 1, 1);
        let tagged = cross_kerr(attach_probes(st), &c).unwrap();
        let tagged = cross_kerr(tagged, &c).unwrap(); // tag 2: still storable
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = homodyne_x(tagged.clone(), ProbeId::P2, &HomodyneModel::Ideal, &mut rng);
        assert!(matches!(err, Err(Error::TagOverflow { .. })));
        let err = cross_kerr(tagged, &c); // tag 3: out of range
        assert!(matches!(err, Err(Error::TagOverflow { .. })));
    }

    #[test]
    fn strip_requires_cleared_tags() {
        let st = PureState::bell_state(BellLabel::PSI_PLUS, DofKind::S, AB).unwrap();
        let tagged = couple_all(attach_probes(st), &p2_couplings());
        assert!(matches!(
            tagged.strip(),
            Err(Error::ResidualTags(ProbeId::P2))
        ));
    }

    #[test]
    fn gaussian_with_vanishing_theta_is_a_coin_flip() {
        let params = KerrParams::new(0.0, 4.0).unwrap();
        let model = HomodyneModel::gaussian(params).unwrap();
        let st = PureState::bell_state(BellLabel::PSI_PLUS, DofKind::S, AB).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut wrong = 0usize;
        for _ in 0..n {
            let tagged = couple_all(attach_probes(st.clone()), &p2_couplings());
            let (outcome, _) = homodyne_x(tagged, ProbeId::P2, &model, &mut rng).unwrap();
            if outcome == ProbeOutcome::Zero {
                wrong += 1;
            }
        }
        let mean = n as f64 * 0.5;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!(
            (wrong as f64 - mean).abs() <= 5.0 * sigma,
            "wrong = {wrong}"
        );
    }

    #[test]
    fn error_probability_at_zero_theta_is_half() {
        let params = KerrParams::new(0.0, 2.5).unwrap();
        assert!((error_probability(&params) - 0.5).abs() < NORM_TOL);
    }

    // Simpson quadrature of the standard normal tail, as an oracle
    // independent of the erfc implementation.
    fn gaussian_tail(d: f64) -> f64 {
        let n = 40_000usize;
        let span = 12.0;
        let h = span / n as f64;
        let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let mut acc = density(d) + density(d + span);
        for k in 1..n {
            let x = d + k as f64 * h;
            acc += density(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn error_probability_matches_quadrature_oracle() {
        for (theta, alpha) in [(0.5, 1.0), (0.3, 4.0), (1.0, 2.0), (PI / 2.0, 6.0)] {
            let params = KerrParams::new(theta, alpha).unwrap();
            let oracle = gaussian_tail(params.discrimination_distance());
            let got = error_probability(&params);
            assert!(
                (got - oracle).abs() <= 1e-9 * oracle.max(1e-300),
                "theta={theta} alpha={alpha}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn error_probability_tail_is_tiny_at_distance_six() {
        // alpha(1 - cos theta) = 6
        let theta = 1.0f64;
        let alpha = 6.0 / (1.0 - theta.cos());
        let params = KerrParams::new(theta, alpha).unwrap();
        let p = error_probability(&params);
        assert!(p < 1e-9, "p = {p}");
        let oracle = gaussian_tail(6.0);
        assert!((p - oracle).abs() <= 1e-6 * oracle);
    }

    #[test]
    fn error_probability_monotone_in_alpha() {
        for theta in [0.2, 0.7, 1.4] {
            let mut last = f64::INFINITY;
            for k in 1..=200 {
                let alpha = 0.05 * k as f64;
                let p = error_probability(&KerrParams::new(theta, alpha).unwrap());
                assert!(p <= last + 1e-15, "p grew at alpha={alpha}, theta={theta}");
                last = p;
            }
        }
    }

    #[test]
    fn kerr_params_validation() {
        assert!(KerrParams::new(-0.1, 1.0).is_err());
        assert!(KerrParams::new(2.0, 1.0).is_err());
        assert!(KerrParams::new(0.3, -1.0).is_err());
        assert!(KerrParams::new(0.0, 0.0).is_ok());
        assert!(HomodyneModel::gaussian(KerrParams::new(0.3, 0.0).unwrap()).is_err());
    }

    #[test]
    fn standard_couplings_reproduce_the_probe_table() {
        // P1 nets zero on phi_F and ±1 on psi_F
        let p1: Vec<Coupling> = standard_couplings(AB)
            .into_iter()
            .filter(|c| c.probe == ProbeId::P1)
            .collect();
        for phase in [Phase::Plus, Phase::Minus] {
            let phi = PureState::bell_state(
                BellLabel {
                    parity: Parity::Phi,
                    phase,
                },
                DofKind::F,
                AB,
            )
            .unwrap();
            let tagged = couple_all(attach_probes(phi.clone()), &p1);
            for (a, t) in phi.amplitudes().iter().zip(tagged.tags_for(ProbeId::P1)) {
                if a.norm() > NORM_TOL {
                    assert_eq!(t, 0);
                }
            }
            let psi = PureState::bell_state(
                BellLabel {
                    parity: Parity::Psi,
                    phase,
                },
                DofKind::F,
                AB,
            )
            .unwrap();
            let tagged = couple_all(attach_probes(psi.clone()), &p1);
            for (a, t) in psi.amplitudes().iter().zip(tagged.tags_for(ProbeId::P1)) {
                if a.norm() > NORM_TOL {
                    assert_eq!(t.abs(), 1);
                }
            }
        }
    }

    #[test]
    fn p3_after_f_hadamards_flags_phi_minus() {
        use crate::elements::bs_hadamard;
        let st = PureState::bell_state(BellLabel::PHI_MINUS, DofKind::F, AB).unwrap();
        let st = bs_hadamard(&st, PhotonId::A, DofKind::F).unwrap();
        let st = bs_hadamard(&st, PhotonId::B, DofKind::F).unwrap();
        let p3: Vec<Coupling> = standard_couplings(AB)
            .into_iter()
            .filter(|c| c.probe == ProbeId::P3)
            .collect();
        let tagged = couple_all(attach_probes(st), &p3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (outcome, _) =
            homodyne_x(tagged, ProbeId::P3, &HomodyneModel::Ideal, &mut rng).unwrap();
        assert_eq!(outcome, ProbeOutcome::ThetaMag);
    }
}
