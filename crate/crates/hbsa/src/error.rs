use thiserror::Error;

use crate::hilbert::{PhotonId, QubitAddress};
use crate::kerr::ProbeId;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by state construction, optical elements, and the probe model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("photon ids must be distinct, got {0} twice")]
    DuplicatePhoton(PhotonId),

    #[error("register already contains qubit {0}")]
    OverlappingRegister(QubitAddress),

    #[error("qubit {0} is not in the register")]
    MissingQubit(QubitAddress),

    #[error("photon {0} does not have all three qubits in the register")]
    MissingPhoton(PhotonId),

    #[error("amplitude vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },

    #[error("state is not normalized: |amplitudes|^2 sums to {0}")]
    NotNormalized(f64),

    #[error("matrix is not unitary within 1e-12")]
    NonUnitary,

    #[error("register does not match the expected qubits")]
    RegisterMismatch,

    #[error("beam splitters act on momentum DOFs; polarization is not a spatial mode")]
    PolarizationBeamSplit,

    #[error("PBS@45 declares the +/- detection basis; it has no unitary action")]
    NotAUnitary,

    #[error("probe {probe} carries tag {tag} on a branch; a well-formed pipeline stays within |1| at readout")]
    TagOverflow { probe: ProbeId, tag: i32 },

    #[error("probe {0} still carries nonzero tags; measure it before stripping")]
    ResidualTags(ProbeId),

    #[error("Kerr parameters out of range: theta = {theta}, alpha = {alpha}")]
    BadKerrParams { theta: f64, alpha: f64 },

    #[error("the gaussian homodyne model requires alpha > 0")]
    GaussianNeedsAlpha,

    #[error("cannot parse label {0:?} (expected e.g. \"phi+,psi-,phi+\")")]
    ParseLabel(String),

    #[error("projection has (near-)zero probability")]
    ZeroProbability,

    #[error("DOF amplitudes are not normalized: |a|^2 + |b|^2 = {0}")]
    BadAmplitudes(f64),
}
