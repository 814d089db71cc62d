//! Qudit state-vector engine and a deterministic joint remote state
//! preparation (DJRSP) protocol over non-maximally entangled channels.
//!
//! The crate is split along the protocol's natural seams:
//!
//! - [`qudit`] — heterogeneous-dimension register layouts, state vectors,
//!   unitary application on site subsets, exhaustive projective measurement,
//!   and fidelity against a single-site reference.
//! - [`gates`] — every unitary the protocol uses: generalized Hadamard,
//!   two-site phase gate, modular-sum C-NOTs, the coefficient-flattening
//!   Controlled-U, Charlie's phase-doubling gate, and the Weyl-Heisenberg
//!   correction family.
//! - [`bases`] — the target state, its magnitude/phase split between the two
//!   senders, and the measurement bases built from each share.
//! - [`protocol`] — the full orchestration: encoding circuit, measurement
//!   cascade over both branches of the auxiliary qubit, correction
//!   resolution, and transcript assembly.
//!
//! All numerics are generic over the scalar type via [`Real`]; the crate
//! root exports `f64` aliases for ordinary use.

pub mod bases;
pub mod error;
pub mod gates;
pub mod protocol;
pub mod qudit;

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

pub use error::{Error, Result};

/// Scalar constraint for all numerics in this crate.
///
/// Implemented by `f32` and `f64` through the blanket impl.
pub trait Real:
    Float + FloatConst + NumAssign + Sum<Self> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from(x).expect("f64 literal convertible to scalar")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + NumAssign + Sum<T> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

/// Complex amplitude over the crate's scalar type.
pub type C<T> = num_complex::Complex<T>;

/// Every tolerance used by the engine, in one knob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Max deviation of `U†U` from the identity accepted at gate construction.
    pub unitarity: T,
    /// Max pairwise deviation from `δ_ij` accepted for measurement bases.
    pub orthonormality: T,
    /// Max deviation of a state's Euclidean norm from 1.
    pub norm: T,
    /// Max deviation of sibling branch probabilities from summing to 1.
    pub probability_sum: T,
    /// Branches below this probability are pruned and flagged.
    pub probability_floor: T,
    /// Min reduced-state purity for a site to count as disentangled.
    pub purity: T,
    /// A leaf succeeds iff its post-correction fidelity is at least
    /// `1 - success_fidelity`.
    pub success_fidelity: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            unitarity: T::of(1e-12),
            orthonormality: T::of(1e-12),
            norm: T::of(1e-12),
            probability_sum: T::of(1e-12),
            probability_floor: T::of(1e-14),
            purity: T::of(1e-10),
            success_fidelity: T::of(1e-9),
        }
    }
}

/// `f64` aliases for the common case.
pub type Complex64 = C<f64>;
pub type StateVector64 = qudit::StateVector<f64>;
pub type UnitaryOp64 = qudit::UnitaryOp<f64>;
pub type MeasurementBasis64 = qudit::MeasurementBasis<f64>;
pub type BranchRecord64 = qudit::BranchRecord<f64>;
pub type ChannelSpec64 = gates::ChannelSpec<f64>;
pub type TargetState64 = bases::TargetState<f64>;
pub type ProtocolConfig64 = protocol::ProtocolConfig<f64>;
pub type ProtocolTranscript64 = protocol::ProtocolTranscript<f64>;
pub type Tolerances64 = Tolerances<f64>;
