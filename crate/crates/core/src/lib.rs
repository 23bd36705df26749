//! Average pair entanglement entropy E₂ of pure multi-qubit states.
//!
//! The library computes von Neumann entropies of two-qubit reductions, their
//! first and second variations on the unit sphere of states, stationarity and
//! local-maximality certificates, two-qubit mixed-state entanglement
//! diagnostics, and a seeded multi-start gradient-ascent search for states
//! with high average pair entropy.
//!
//! Qubit ordering convention: qubit `A` (index 0) is the most significant bit
//! of the computational-basis index, so `|0011⟩` on four qubits is amplitude
//! index 3.

pub mod certify;
pub mod mat;
pub mod mixedent;
pub mod qcore;
pub mod search;
pub mod spectra;
pub mod varcalc;

pub use mat::{CMat, DensityMatrix, HermitianMatrix, C64};
pub use qcore::{NamedState, PureState, QubitPair};
pub use spectra::Spectrum;

/// Errors surfaced by state construction, reductions and the variational
/// calculus.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("amplitude vector has length {got}, expected 2^{n_qubits} = {expected}")]
    LengthMismatch {
        n_qubits: usize,
        expected: usize,
        got: usize,
    },
    #[error("amplitude vector is zero (or numerically zero)")]
    ZeroVector,
    #[error("state norm {norm} differs from 1 beyond tolerance {tol}")]
    NormViolation { norm: f64, tol: f64 },
    #[error("unknown named state `{0}` (known: M4, PSI4, PHI1, PHI2)")]
    UnknownState(String),
    #[error("invalid qubit pair ({first}, {second}) for {n_qubits} qubits")]
    InvalidPair {
        first: usize,
        second: usize,
        n_qubits: usize,
    },
    #[error("permutation is not a bijection on 0..{0}")]
    NonBijectivePermutation(usize),
    #[error("matrix is not Hermitian within tolerance (residual {0:.3e})")]
    NonHermitian(f64),
    #[error("matrix is not a density matrix: {0}")]
    NotDensity(String),
    #[error("eigensolver failed to converge after {0} sweeps")]
    EighNoConvergence(usize),
    #[error("reduction is rank deficient (eigenvalue {0:.3e} below support threshold)")]
    RankDeficient(f64),
    #[error("eigenvalue {0} outside the admissible range ({1}, {2})")]
    SpectrumOutOfRange(f64, f64, f64),
    #[error("tangent/curve normalization condition violated (residual {0:.3e})")]
    NormalizationCondition(f64),
    #[error("operation requires the M4 base state")]
    NotM4Base,
    #[error("variation parameters are not gauge fixed: {0}")]
    NotGaugeFixed(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state file format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
