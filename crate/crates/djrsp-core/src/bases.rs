//! The target state, its split between the two senders (magnitudes vs.
//! phases), and the measurement bases each sender builds from their share.
//!
//! Every emitted basis vector is phase-normalized so that its first nonzero
//! component is real and positive; measurement statistics are invariant
//! under this, but serialized reports are not.

use crate::error::{Error, Result};
use crate::qudit::MeasurementBasis;
use crate::{Real, Tolerances, C};

/// The state to prepare: |x_k| e^{iθ_k} per level, θ_0 = 0 by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState<T> {
    d: usize,
    magnitudes: Vec<T>,
    phases: Vec<T>,
}

impl<T: Real> TargetState<T> {
    pub fn new(magnitudes: Vec<T>, phases: Vec<T>, tol: &Tolerances<T>) -> Result<Self> {
        let d = magnitudes.len();
        if d < 2 {
            return Err(Error::InvalidTarget(format!(
                "need at least 2 levels, got {d}"
            )));
        }
        if phases.len() != d {
            return Err(Error::InvalidTarget(format!(
                "{} phases for {d} magnitudes",
                phases.len()
            )));
        }
        if magnitudes.iter().any(|&m| m < T::zero()) {
            return Err(Error::InvalidTarget("negative magnitude".into()));
        }
        let norm2: T = magnitudes.iter().map(|&m| m * m).sum();
        if (norm2 - T::one()).abs() > tol.norm {
            return Err(Error::InvalidTarget(format!(
                "magnitude squares sum to {norm2}, expected 1"
            )));
        }
        if phases[0] != T::zero() {
            return Err(Error::InvalidTarget(format!(
                "theta_0 = {} but the global phase convention requires 0",
                phases[0]
            )));
        }
        Ok(TargetState {
            d,
            magnitudes,
            phases,
        })
    }

    /// All magnitudes 1/√d, arbitrary phases.
    pub fn equatorial(phases: Vec<T>, tol: &Tolerances<T>) -> Result<Self> {
        let d = phases.len();
        let m = T::one() / T::of(d as f64).sqrt();
        TargetState::new(vec![m; d], phases, tol)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn magnitudes(&self) -> &[T] {
        &self.magnitudes
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    /// Alice's half of the description.
    pub fn amplitude_share(&self) -> AmplitudeShare<T> {
        AmplitudeShare {
            magnitudes: self.magnitudes.clone(),
        }
    }

    /// Charlie's half of the description.
    pub fn phase_share(&self) -> PhaseShare<T> {
        PhaseShare {
            phases: self.phases.clone(),
        }
    }
}

/// The magnitudes |x_0| … |x_{d−1}| — what Alice knows.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeShare<T> {
    magnitudes: Vec<T>,
}

impl<T: Real> AmplitudeShare<T> {
    pub fn d(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn magnitudes(&self) -> &[T] {
        &self.magnitudes
    }
}

/// The phases θ_0 … θ_{d−1} — what Charlie knows.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShare<T> {
    phases: Vec<T>,
}

impl<T: Real> PhaseShare<T> {
    pub fn d(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }
}

/// The complex vector |x_k| e^{iθ_k}.
pub fn target_vector<T: Real>(target: &TargetState<T>) -> Vec<C<T>> {
    target
        .magnitudes
        .iter()
        .zip(&target.phases)
        .map(|(&m, &th)| C::from_polar(m, th))
        .collect()
}

/// Which construction realizes the amplitude basis for a given share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuConstruction {
    /// d = 2 closed form: rows (x_0, |x_1|), (|x_1|, −x_0). Overlap index
    /// map (k + p) mod 2.
    ClosedFormD2,
    /// All magnitudes equal 1/√d: Fourier rows e^{−2πipk/d}/√d. Any d.
    EquatorialFourier,
    /// d = 4 real orthogonal design over the Klein group; overlap index map
    /// is bitwise XOR, |⟨μ_p|k⟩| = |x_{k ⊕ p}|.
    OrthogonalDesignD4,
}

impl MuConstruction {
    /// The magnitude that row p picks up at column k under this construction.
    pub fn overlap_index(&self, d: usize, p: usize, k: usize) -> usize {
        match self {
            MuConstruction::OrthogonalDesignD4 => k ^ p,
            _ => (k + p) % d,
        }
    }
}

/// Picks the amplitude-basis construction for a share, or reports the
/// orthogonal-design obstruction.
pub fn mu_construction<T: Real>(share: &AmplitudeShare<T>) -> Result<MuConstruction> {
    let d = share.d();
    if d == 2 {
        return Ok(MuConstruction::ClosedFormD2);
    }
    let uniform = T::one() / T::of(d as f64).sqrt();
    if share
        .magnitudes()
        .iter()
        .all(|&m| (m - uniform).abs() <= T::of(1e-12))
    {
        return Ok(MuConstruction::EquatorialFourier);
    }
    if d == 4 {
        return Ok(MuConstruction::OrthogonalDesignD4);
    }
    Err(Error::BasisNotRealizable { d })
}

/// Alice's amplitude measurement basis {|μ_p⟩} on `site`.
pub fn mu_basis<T: Real>(
    share: &AmplitudeShare<T>,
    site: &str,
    tol: &Tolerances<T>,
) -> Result<MeasurementBasis<T>> {
    let d = share.d();
    let x = share.magnitudes();
    let vectors: Vec<Vec<C<T>>> = match mu_construction(share)? {
        MuConstruction::ClosedFormD2 => vec![
            vec![C::new(x[0], T::zero()), C::new(x[1], T::zero())],
            vec![C::new(x[1], T::zero()), C::new(-x[0], T::zero())],
        ],
        MuConstruction::EquatorialFourier => {
            let root = T::of(d as f64).sqrt();
            (0..d)
                .map(|p| {
                    (0..d)
                        .map(|k| {
                            let phi =
                                -T::of(2.0) * T::PI() * T::of((p * k) as f64) / T::of(d as f64);
                            C::from_polar(T::one() / root, phi)
                        })
                        .collect()
                })
                .collect()
        }
        MuConstruction::OrthogonalDesignD4 => {
            let (a, b, c, e) = (x[0], x[1], x[2], x[3]);
            let rows = [[a, b, c, e], [-b, a, -e, c], [-c, e, a, -b], [-e, -c, b, a]];
            rows.iter()
                .map(|row| row.iter().map(|&v| C::new(v, T::zero())).collect())
                .collect()
        }
    };
    let vectors = vectors.into_iter().map(|v| phase_normalize(v)).collect();
    MeasurementBasis::new(site, "mu", vectors, tol)
}

/// Charlie's phase measurement basis on `site`:
/// |ν_q⟩ = (1/√d) Σ_r e^{−i(θ_r + 2πrq/d)} |r⟩.
///
/// This form already folds in the phase-doubling gate: measuring it directly
/// equals applying P(θ) and then measuring [`nu_basis_paper`].
pub fn nu_basis<T: Real>(
    share: &PhaseShare<T>,
    site: &str,
    tol: &Tolerances<T>,
) -> Result<MeasurementBasis<T>> {
    nu_from_phases(share.phases(), T::one(), site, tol)
}

/// The pre-gate form with the opposite phase sign:
/// |ν_q⟩ = (1/√d) Σ_r e^{+iθ_r − 2πirq/d} |r⟩.
pub fn nu_basis_paper<T: Real>(
    share: &PhaseShare<T>,
    site: &str,
    tol: &Tolerances<T>,
) -> Result<MeasurementBasis<T>> {
    nu_from_phases(share.phases(), -T::one(), site, tol)
}

fn nu_from_phases<T: Real>(
    phases: &[T],
    sign: T,
    site: &str,
    tol: &Tolerances<T>,
) -> Result<MeasurementBasis<T>> {
    let d = phases.len();
    if d < 2 {
        return Err(Error::InvalidTarget(format!(
            "need at least 2 phases, got {d}"
        )));
    }
    let root = T::of(d as f64).sqrt();
    let vectors: Vec<Vec<C<T>>> = (0..d)
        .map(|q| {
            let v = (0..d)
                .map(|r| {
                    let phi = -sign * phases[r]
                        - T::of(2.0) * T::PI() * T::of((r * q) as f64) / T::of(d as f64);
                    C::from_polar(T::one() / root, phi)
                })
                .collect();
            phase_normalize(v)
        })
        .collect();
    MeasurementBasis::new(site, "nu", vectors, tol)
}

/// Rotates a vector by a global phase so its first nonzero component is real
/// and positive.
fn phase_normalize<T: Real>(mut v: Vec<C<T>>) -> Vec<C<T>> {
    let floor = T::of(1e-14);
    if let Some(first) = v.iter().find(|c| c.norm() > floor) {
        let phase = first.unscale(first.norm()).conj();
        for c in &mut v {
            *c *= phase;
        }
        // kill the residual imaginary dust on the pivot component
        for c in &mut v {
            if c.im.abs() < T::of(1e-15) * c.re.abs() {
                c.im = T::zero();
            }
        }
    }
    v
}
