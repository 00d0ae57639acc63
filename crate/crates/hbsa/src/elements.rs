//! Logical actions of the linear-optical elements on [`PureState`]s.
//!
//! A 50:50 beam splitter performs a Hadamard on one photon's spatial-mode
//! qubit. A polarizing beam splitter at 0 degrees transmits `H` and
//! reflects `V`; with the first-momentum modes routed through it, its
//! logical action is a polarization-controlled `E <-> I` flip. The PBS at
//! 45 degrees only declares the +/- detection basis and is handled by
//! [`PureState::measure_photon`].

use crate::error::{Error, Result};
use crate::hilbert::{hadamard_matrix, DofKind, PhotonId, PureState, QubitAddress};

/// The element kinds of the analyzer, by logical action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    /// 50:50 BS: Hadamard on the given momentum DOF.
    BsHadamard(DofKind),
    /// PBS at 0 degrees: polarization-controlled first-momentum flip.
    Pbs0,
    /// PBS at 45 degrees: marks the +/- measurement basis, not a unitary.
    Pbs45,
}

impl ElementKind {
    /// Apply the element's unitary action to one photon's qubits.
    pub fn apply(&self, state: &PureState, photon: PhotonId) -> Result<PureState> {
        match self {
            ElementKind::BsHadamard(dof) => bs_hadamard(state, photon, *dof),
            ElementKind::Pbs0 => pbs0(state, photon),
            ElementKind::Pbs45 => Err(Error::NotAUnitary),
        }
    }
}

/// Hadamard on one photon's momentum qubit (`F` or `S`); self-inverse.
/// Polarization rotations are not beam splitters, so `dof = P` is refused.
pub fn bs_hadamard(state: &PureState, photon: PhotonId, dof: DofKind) -> Result<PureState> {
    if dof == DofKind::P {
        return Err(Error::PolarizationBeamSplit);
    }
    state.apply_one_qubit(QubitAddress::new(photon, dof), &hadamard_matrix())
}

/// PBS at 0 degrees on one photon: if the polarization is `V`, the
/// first-momentum mode toggles `E <-> I`; `H` passes untouched. Unitary
/// and self-inverse.
pub fn pbs0(state: &PureState, photon: PhotonId) -> Result<PureState> {
    state.apply_controlled_flip(
        QubitAddress::new(photon, DofKind::P),
        QubitAddress::new(photon, DofKind::F),
    )
}

/// The detection stage ahead of the single-photon detectors: a PBS0 on
/// each photon, then the final beam splitter on each photon's second
/// momentum qubit. Combined with the +/- polarization measurement this
/// turns parity and phase information into detector-coincidence patterns.
pub fn stage_c(state: &PureState, pair: (PhotonId, PhotonId)) -> Result<PureState> {
    if pair.0 == pair.1 {
        return Err(Error::DuplicatePhoton(pair.0));
    }
    for photon in [pair.0, pair.1] {
        if !state.contains_photon(photon) {
            return Err(Error::RegisterMismatch);
        }
    }
    let st = pbs0(state, pair.0)?;
    let st = pbs0(&st, pair.1)?;
    let st = bs_hadamard(&st, pair.0, DofKind::S)?;
    bs_hadamard(&st, pair.1, DofKind::S)
}
