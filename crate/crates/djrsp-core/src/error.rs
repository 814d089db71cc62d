use thiserror::Error;

/// Errors surfaced by the engine. Numeric payloads are reported as `f64`
/// regardless of the scalar type in use.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown site `{0}`")]
    UnknownSite(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix `{name}` is not unitary (max |U\u{2020}U - I| = {max_dev:e})")]
    NonUnitary { name: String, max_dev: f64 },

    #[error("basis `{name}` is not orthonormal (max deviation {max_dev:e})")]
    NonOrthonormalBasis { name: String, max_dev: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("level pairing does not define a unitary: {0}")]
    UnpairablePairing(String),

    #[error("no amplitude basis construction for d={d} with non-equatorial magnitudes")]
    BasisNotRealizable { d: usize },

    #[error("site `{site}` is still entangled with the rest of the register (purity {purity})")]
    ResidualEntanglement { site: String, purity: f64 },

    #[error("no Weyl correction reaches the target (best fidelity {best_fidelity})")]
    NoCorrectionFound { best_fidelity: f64 },

    #[error("invalid target state: {0}")]
    InvalidTarget(String),

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),

    #[error("state norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
