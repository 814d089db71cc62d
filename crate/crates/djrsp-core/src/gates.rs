//! Every unitary the protocol uses: generalized Hadamard, the two-site
//! phase gate, modular-sum C-NOTs (plain and zero-controlled), the
//! coefficient-flattening Controlled-U, Charlie's phase-doubling gate, Bob's
//! inverse Fourier, and the Weyl–Heisenberg correction family.
//!
//! Constructors return operators with empty target-site lists; callers bind
//! them to layout sites. Two-site matrices put the first bound site in the
//! most significant index position.

use std::fmt;

use crate::error::{Error, Result};
use crate::qudit::UnitaryOp;
use crate::{Real, Tolerances, C};

/// The shared entangled channel Σ a_k|kk⟩: real non-negative coefficients,
/// unit norm, with a_0 minimal so every √(a_k² − a_0²) is real.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec<T> {
    d: usize,
    coefficients: Vec<T>,
}

impl<T: Real> ChannelSpec<T> {
    pub fn new(coefficients: Vec<T>, tol: &Tolerances<T>) -> Result<Self> {
        let d = coefficients.len();
        if d < 2 {
            return Err(Error::InvalidChannel(format!(
                "need at least 2 coefficients, got {d}"
            )));
        }
        let norm2: T = coefficients.iter().map(|&a| a * a).sum();
        if (norm2 - T::one()).abs() > tol.norm {
            return Err(Error::InvalidChannel(format!(
                "coefficient squares sum to {norm2}, expected 1"
            )));
        }
        let a0 = coefficients[0];
        for (k, &a) in coefficients.iter().enumerate() {
            if a <= T::zero() {
                return Err(Error::InvalidChannel(format!(
                    "coefficient a_{k} = {a} is not positive"
                )));
            }
            if a < a0 {
                return Err(Error::InvalidChannel(format!(
                    "a_0 = {a0} exceeds a_{k} = {a}; a_0 must be minimal"
                )));
            }
        }
        Ok(ChannelSpec { d, coefficients })
    }

    /// Uniform coefficients 1/√d — the maximally entangled channel.
    pub fn maximal(d: usize, tol: &Tolerances<T>) -> Result<Self> {
        let a = T::one() / T::of(d as f64).sqrt();
        ChannelSpec::new(vec![a; d], tol)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }
}

fn zero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

fn one<T: Real>() -> C<T> {
    C::new(T::one(), T::zero())
}

/// e^{iφ} with exactly unit modulus.
fn cis<T: Real>(phi: T) -> C<T> {
    C::from_polar(T::one(), phi)
}

/// 2π·n/d as a scalar.
fn tau_frac<T: Real>(n: i64, d: usize) -> T {
    T::of(2.0) * T::PI() * T::of(n as f64) / T::of(d as f64)
}

/// Generalized Hadamard: entry (r,k) = e^{2πikr/d}/√d.
pub fn hadamard<T: Real>(d: usize, tol: &Tolerances<T>) -> Result<UnitaryOp<T>> {
    let root = T::of(d as f64).sqrt();
    let mut m = vec![zero(); d * d];
    for r in 0..d {
        for k in 0..d {
            m[r * d + k] = cis(tau_frac((k * r) as i64, d)).unscale(root);
        }
    }
    UnitaryOp::new(format!("H({d})"), vec![], m, tol)
}

/// Inverse generalized Hadamard: entry (r,k) = e^{−2πikr/d}/√d.
pub fn bob_phase<T: Real>(d: usize, tol: &Tolerances<T>) -> Result<UnitaryOp<T>> {
    let root = T::of(d as f64).sqrt();
    let mut m = vec![zero(); d * d];
    for r in 0..d {
        for k in 0..d {
            m[r * d + k] = cis(-tau_frac::<T>((k * r) as i64, d)).unscale(root);
        }
    }
    UnitaryOp::new(format!("P_B({d})"), vec![], m, tol)
}

/// Two-site diagonal phase gate: |r,k⟩ → e^{−2πikr/d}|r,k⟩.
pub fn phase_pair<T: Real>(d: usize, tol: &Tolerances<T>) -> Result<UnitaryOp<T>> {
    let n = d * d;
    let mut m = vec![zero(); n * n];
    for r in 0..d {
        for k in 0..d {
            let i = r * d + k;
            m[i * n + i] = cis(-tau_frac::<T>((k * r) as i64, d));
        }
    }
    UnitaryOp::new(format!("P({d})"), vec![], m, tol)
}

/// Modular-sum C-NOT with possibly different control and target dimensions:
/// |c⟩|t⟩ → |c⟩|(t + c) mod dt⟩.
pub fn cnot_rect<T: Real>(dc: usize, dt: usize, tol: &Tolerances<T>) -> Result<UnitaryOp<T>> {
    let n = dc * dt;
    let mut m = vec![zero(); n * n];
    for c in 0..dc {
        for t in 0..dt {
            m[(c * dt + (t + c) % dt) * n + (c * dt + t)] = one();
        }
    }
    UnitaryOp::new(format!("C({dc},{dt})"), vec![], m, tol)
}

/// Square modular-sum C-NOT: |c⟩|t⟩ → |c⟩|(t + c) mod d⟩.
pub fn cnot<T: Real>(d: usize, tol: &Tolerances<T>) -> Result<UnitaryOp<T>> {
    cnot_rect(d, d, tol)
}

/// Zero-controlled shift: |0⟩|t⟩ → |0⟩|(t + s) mod d⟩, identity for any
/// other control value.
pub fn cnot_primed<T: Real>(d: usize, s: usize, tol: &Tolerances<T>) -> Result<UnitaryOp<T>> {
    if s == 0 || s >= d {
        return Err(Error::InvalidConfig(format!(
            "shift s = {s} outside [1, {}]",
            d - 1
        )));
    }
    let n = d * d;
    let mut m = vec![zero(); n * n];
    for c in 0..d {
        for t in 0..d {
            let tt = if c == 0 { (t + s) % d } else { t };
            m[(c * d + tt) * n + (c * d + t)] = one();
        }
    }
    UnitaryOp::new(format!("C'({d},s={s})"), vec![], m, tol)
}

/// The disjoint level pairing implied by shift `s`: (r, r+s) for r < s.
/// Exists only when r ↦ r+s mod d is an involution, i.e. 2s ≡ 0 (mod d).
pub fn pairing_from_shift(d: usize, s: usize) -> Result<Vec<(usize, usize)>> {
    if s == 0 || s >= d {
        return Err(Error::InvalidConfig(format!(
            "shift s = {s} outside [1, {}]",
            d - 1
        )));
    }
    if !(2 * s).is_multiple_of(d) {
        return Err(Error::UnpairablePairing(format!(
            "shift {s} does not partition {d} levels into disjoint pairs (2s mod d = {})",
            (2 * s) % d
        )));
    }
    Ok((0..s).map(|r| (r, r + s)).collect())
}

/// Coefficient-flattening Controlled-U on (A, B), A most significant: for
/// each B-value k, rotates each paired A-level doublet (r, r′) by angle
/// arccos(a_0/a_k). Levels outside every pair are untouched.
pub fn controlled_u_with_pairing<T: Real>(
    channel: &ChannelSpec<T>,
    pairing: &[(usize, usize)],
    tol: &Tolerances<T>,
) -> Result<UnitaryOp<T>> {
    let d = channel.d();
    let mut seen = vec![false; d];
    for &(r, rp) in pairing {
        if r >= d || rp >= d {
            return Err(Error::UnpairablePairing(format!(
                "pair ({r},{rp}) out of range for d={d}"
            )));
        }
        if r == rp {
            return Err(Error::UnpairablePairing(format!(
                "degenerate pair ({r},{rp})"
            )));
        }
        for idx in [r, rp] {
            if seen[idx] {
                return Err(Error::UnpairablePairing(format!(
                    "level {idx} appears in two pairs"
                )));
            }
            seen[idx] = true;
        }
    }
    let n = d * d;
    let mut m = vec![zero(); n * n];
    for i in 0..n {
        m[i * n + i] = one();
    }
    let a = channel.coefficients();
    for k in 0..d {
        let c = a[0] / a[k];
        let s = (T::one() - c * c).max(T::zero()).sqrt();
        for &(r, rp) in pairing {
            let i = r * d + k;
            let j = rp * d + k;
            m[i * n + i] = C::new(c, T::zero());
            m[j * n + j] = C::new(c, T::zero());
            m[j * n + i] = C::new(s, T::zero());
            m[i * n + j] = C::new(-s, T::zero());
        }
    }
    UnitaryOp::new(format!("CU({d})"), vec![], m, tol)
}

/// Controlled-U with the pairing derived from shift `s`.
pub fn controlled_u<T: Real>(
    channel: &ChannelSpec<T>,
    s: usize,
    tol: &Tolerances<T>,
) -> Result<UnitaryOp<T>> {
    let pairing = pairing_from_shift(channel.d(), s)?;
    controlled_u_with_pairing(channel, &pairing, tol)
}

/// Charlie's phase-doubling gate: diag entries e^{2i(θ_r − θ_0)}. The
/// outcome index `q` is accepted for interface symmetry; it cancels in the
/// phase differences and does not affect the matrix.
pub fn charlie_phase<T: Real>(
    phases: &[T],
    _q: usize,
    tol: &Tolerances<T>,
) -> Result<UnitaryOp<T>> {
    let d = phases.len();
    if d < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 phases, got {d}"
        )));
    }
    let mut m = vec![zero(); d * d];
    for r in 0..d {
        m[r * d + r] = cis(T::of(2.0) * (phases[r] - phases[0]));
    }
    UnitaryOp::new(format!("P(theta,{d})"), vec![], m, tol)
}

/// Which Weyl–Heisenberg operator X^a Z^b a leaf's correction is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorrectionId {
    pub a: usize,
    pub b: usize,
}

impl CorrectionId {
    pub const IDENTITY: CorrectionId = CorrectionId { a: 0, b: 0 };

    pub fn new(a: usize, b: usize) -> Self {
        CorrectionId { a, b }
    }
}

impl fmt::Display for CorrectionId {
    /// `I`, `X`, `Z`, `XZ`, `X2Z`, … — exponents of 1 are left implicit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.a == 0 && self.b == 0 {
            return write!(f, "I");
        }
        if self.a > 0 {
            write!(f, "X")?;
            if self.a > 1 {
                write!(f, "{}", self.a)?;
            }
        }
        if self.b > 0 {
            write!(f, "Z")?;
            if self.b > 1 {
                write!(f, "{}", self.b)?;
            }
        }
        Ok(())
    }
}

/// Matrix of X^a Z^b with X|k⟩ = |k+1 mod d⟩ and Z|k⟩ = e^{2πik/d}|k⟩:
/// entry (r,k) = δ_{r,(k+a) mod d} · e^{2πikb/d}.
pub fn weyl_matrix<T: Real>(d: usize, id: CorrectionId) -> Vec<C<T>> {
    let mut m = vec![zero(); d * d];
    for k in 0..d {
        let r = (k + id.a) % d;
        m[r * d + k] = cis(tau_frac((k * id.b) as i64, d));
    }
    m
}

/// All d² correction operators X^a Z^b in (a,b) lexicographic order.
pub fn weyl_corrections<T: Real>(d: usize, tol: &Tolerances<T>) -> Result<Vec<UnitaryOp<T>>> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let id = CorrectionId::new(a, b);
            out.push(UnitaryOp::new(
                id.to_string(),
                vec![],
                weyl_matrix(d, id),
                tol,
            )?);
        }
    }
    Ok(out)
}

/// Parameterized gate description; `build` realizes the matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum GateSpec<T> {
    Hadamard {
        d: usize,
    },
    PhasePair {
        d: usize,
    },
    Cnot {
        dc: usize,
        dt: usize,
    },
    CnotPrimed {
        d: usize,
        s: usize,
    },
    ControlledU {
        channel: ChannelSpec<T>,
        pairing: Vec<(usize, usize)>,
    },
    CharliePhase {
        phases: Vec<T>,
        q: usize,
    },
    BobPhase {
        d: usize,
    },
    PauliX,
    PauliY,
    PauliZ,
    Weyl {
        d: usize,
        id: CorrectionId,
    },
}

impl<T: Real> GateSpec<T> {
    pub fn build(&self, tol: &Tolerances<T>) -> Result<UnitaryOp<T>> {
        match self {
            GateSpec::Hadamard { d } => hadamard(*d, tol),
            GateSpec::PhasePair { d } => phase_pair(*d, tol),
            GateSpec::Cnot { dc, dt } => cnot_rect(*dc, *dt, tol),
            GateSpec::CnotPrimed { d, s } => cnot_primed(*d, *s, tol),
            GateSpec::ControlledU { channel, pairing } => {
                controlled_u_with_pairing(channel, pairing, tol)
            }
            GateSpec::CharliePhase { phases, q } => charlie_phase(phases, *q, tol),
            GateSpec::BobPhase { d } => bob_phase(*d, tol),
            GateSpec::PauliX => {
                UnitaryOp::new("X", vec![], weyl_matrix(2, CorrectionId::new(1, 0)), tol)
            }
            GateSpec::PauliY => {
                let i = C::new(T::zero(), T::one());
                UnitaryOp::new("Y", vec![], vec![zero(), -i, i, zero()], tol)
            }
            GateSpec::PauliZ => {
                UnitaryOp::new("Z", vec![], weyl_matrix(2, CorrectionId::new(0, 1)), tol)
            }
            GateSpec::Weyl { d, id } => {
                UnitaryOp::new(id.to_string(), vec![], weyl_matrix(*d, *id), tol)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    type S = f64;
    fn tol() -> Tolerances<S> {
        Tolerances::default()
    }

    fn assert_entry(m: &UnitaryOp<S>, r: usize, c: usize, want: C<S>) {
        let got = m.entry(r, c);
        assert!(
            (got - want).norm() < 1e-12,
            "entry ({r},{c}) = {got}, want {want}"
        );
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelSpec::<S>::new(vec![0.6, 0.8], &tol()).is_ok());
        assert!(ChannelSpec::<S>::new(vec![0.8, 0.6], &tol()).is_err()); // a_0 not minimal
        assert!(ChannelSpec::<S>::new(vec![0.5, 0.5], &tol()).is_err()); // norm
        assert!(ChannelSpec::<S>::new(vec![1.0, 0.0], &tol()).is_err()); // zero coefficient
        let m = ChannelSpec::<S>::maximal(3, &tol()).unwrap();
        assert_abs_diff_eq!(m.coefficients()[2], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn hadamard_d2_is_the_real_fourier_matrix() {
        let h = hadamard::<S>(2, &tol()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_entry(&h, 0, 0, C::new(r, 0.0));
        assert_entry(&h, 0, 1, C::new(r, 0.0));
        assert_entry(&h, 1, 0, C::new(r, 0.0));
        assert_entry(&h, 1, 1, C::new(-r, 0.0));
    }

    #[test]
    fn hadamard_first_column_is_uniform() {
        for d in 2..=8 {
            let h = hadamard::<S>(d, &tol()).unwrap();
            for r in 0..d {
                assert_entry(&h, r, 0, C::new(1.0 / (d as f64).sqrt(), 0.0));
            }
        }
    }

    #[test]
    fn phase_pair_d2_and_d3_entries() {
        let p2 = phase_pair::<S>(2, &tol()).unwrap();
        for (i, want) in [1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
            assert_entry(&p2, i, i, C::new(want, 0.0));
        }
        let p3 = phase_pair::<S>(3, &tol()).unwrap();
        assert_entry(&p3, 8, 8, C::from_polar(1.0, -8.0 * PI / 3.0));
        for k in 0..3 {
            assert_entry(&p3, k, k, C::new(1.0, 0.0)); // r = 0 row of pairs
        }
    }

    #[test]
    fn cnot_shifts_target_by_control() {
        let c2 = cnot::<S>(2, &tol()).unwrap();
        assert_entry(&c2, 0b11, 0b10, C::new(1.0, 0.0)); // |10⟩→|11⟩
        assert_entry(&c2, 0b10, 0b11, C::new(1.0, 0.0)); // |11⟩→|10⟩
        assert_entry(&c2, 0b00, 0b00, C::new(1.0, 0.0));
        assert_entry(&c2, 0b01, 0b01, C::new(1.0, 0.0));
        let c3 = cnot::<S>(3, &tol()).unwrap();
        assert_entry(&c3, 2 * 3 + 1, 2 * 3 + 2, C::new(1.0, 0.0)); // |22⟩→|21⟩
    }

    #[test]
    fn double_cnot_shifts_by_twice_the_control() {
        for d in 2..=5 {
            let c = cnot::<S>(d, &tol()).unwrap();
            for r in 0..d {
                for t in 0..d {
                    let mut acc = C::new(0.0, 0.0);
                    for mid in 0..d {
                        acc += c.entry(r * d + (t + 2 * r) % d, r * d + mid)
                            * c.entry(r * d + mid, r * d + t);
                    }
                    assert!((acc - C::new(1.0, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cnot_primed_acts_only_on_zero_control() {
        let cp = cnot_primed::<S>(2, 1, &tol()).unwrap();
        assert_entry(&cp, 0b01, 0b00, C::new(1.0, 0.0));
        assert_entry(&cp, 0b00, 0b01, C::new(1.0, 0.0));
        assert_entry(&cp, 0b10, 0b10, C::new(1.0, 0.0));
        assert_entry(&cp, 0b11, 0b11, C::new(1.0, 0.0));
        let cp3 = cnot_primed::<S>(3, 2, &tol()).unwrap();
        assert_entry(&cp3, 0, 1, C::new(1.0, 0.0)); // |01⟩→|00⟩
        assert!(cnot_primed::<S>(3, 0, &tol()).is_err());
        assert!(cnot_primed::<S>(3, 3, &tol()).is_err());
    }

    #[test]
    fn pairing_from_shift_needs_an_involution() {
        assert_eq!(pairing_from_shift(2, 1).unwrap(), vec![(0, 1)]);
        assert_eq!(pairing_from_shift(4, 2).unwrap(), vec![(0, 2), (1, 3)]);
        assert!(matches!(
            pairing_from_shift(3, 1),
            Err(Error::UnpairablePairing(_))
        ));
        assert!(matches!(
            pairing_from_shift(4, 1),
            Err(Error::UnpairablePairing(_))
        ));
    }

    #[test]
    fn controlled_u_d2_matches_the_closed_form() {
        let ch = ChannelSpec::new(vec![0.6, 0.8], &tol()).unwrap();
        let cu = controlled_u(&ch, 1, &tol()).unwrap();
        let c = 0.75;
        let s = (1.0 - 0.5625f64).sqrt();
        assert_abs_diff_eq!(s, 0.661438, epsilon = 1e-6);
        // |00⟩, |10⟩ fixed
        assert_entry(&cu, 0b00, 0b00, C::new(1.0, 0.0));
        assert_entry(&cu, 0b10, 0b10, C::new(1.0, 0.0));
        // |01⟩ → c|01⟩ + s|11⟩; |11⟩ → c|11⟩ − s|01⟩
        assert_entry(&cu, 0b01, 0b01, C::new(c, 0.0));
        assert_entry(&cu, 0b11, 0b01, C::new(s, 0.0));
        assert_entry(&cu, 0b11, 0b11, C::new(c, 0.0));
        assert_entry(&cu, 0b01, 0b11, C::new(-s, 0.0));
    }

    #[test]
    fn controlled_u_on_maximal_channel_is_identity() {
        for d in [2usize, 4] {
            let ch = ChannelSpec::<S>::maximal(d, &tol()).unwrap();
            let cu = controlled_u(&ch, d / 2, &tol()).unwrap();
            for r in 0..d * d {
                for c in 0..d * d {
                    let want = if r == c {
                        C::new(1.0, 0.0)
                    } else {
                        C::new(0.0, 0.0)
                    };
                    assert_entry(&cu, r, c, want);
                }
            }
        }
    }

    #[test]
    fn controlled_u_rejects_overlapping_pairs() {
        let ch =
            ChannelSpec::<S>::new(vec![0.5, 0.6, (1.0f64 - 0.25 - 0.36).sqrt()], &tol()).unwrap();
        assert!(controlled_u_with_pairing(&ch, &[(0, 1)], &tol()).is_ok());
        assert!(matches!(
            controlled_u_with_pairing(&ch, &[(0, 1), (1, 2)], &tol()),
            Err(Error::UnpairablePairing(_))
        ));
        assert!(matches!(
            controlled_u(&ch, 1, &tol()),
            Err(Error::UnpairablePairing(_))
        ));
    }

    #[test]
    fn charlie_phase_doubles_the_phase_differences() {
        let p = charlie_phase::<S>(&[0.0, PI / 2.0], 0, &tol()).unwrap();
        assert_entry(&p, 0, 0, C::new(1.0, 0.0));
        assert_entry(&p, 1, 1, C::new(-1.0, 0.0));
        let p3 = charlie_phase::<S>(&[0.0, PI / 3.0, PI], 1, &tol()).unwrap();
        assert_entry(&p3, 1, 1, C::from_polar(1.0, 2.0 * PI / 3.0));
        assert_entry(&p3, 2, 2, C::new(1.0, 0.0));
        for r in 0..3 {
            assert!((p3.entry(r, r).norm() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn charlie_phase_is_identity_for_equal_phases() {
        let p = charlie_phase::<S>(&[0.7, 0.7, 0.7], 2, &tol()).unwrap();
        for r in 0..3 {
            assert_entry(&p, r, r, C::new(1.0, 0.0));
        }
    }

    #[test]
    fn weyl_family_covers_the_paulis_at_d2() {
        let ws = weyl_corrections::<S>(2, &tol()).unwrap();
        assert_eq!(ws.len(), 4);
        assert_eq!(ws[0].name, "I");
        assert_eq!(ws[1].name, "Z");
        assert_eq!(ws[2].name, "X");
        assert_eq!(ws[3].name, "XZ");
        // XZ = -iσ_y: [[0,-1],[1,0]]
        assert_entry(&ws[3], 0, 1, C::new(-1.0, 0.0));
        assert_entry(&ws[3], 1, 0, C::new(1.0, 0.0));
    }

    #[test]
    fn weyl_x2z_at_d3() {
        let m = weyl_matrix::<S>(3, CorrectionId::new(2, 1));
        // X²Z|1⟩ = e^{2πi/3}|0⟩
        assert!((m[1] - C::from_polar(1.0, 2.0 * PI / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn weyl_family_is_trace_orthogonal() {
        for d in 2..=5 {
            let ws = weyl_corrections::<S>(d, &tol()).unwrap();
            for (i, wi) in ws.iter().enumerate() {
                for (j, wj) in ws.iter().enumerate() {
                    let mut tr = C::new(0.0, 0.0);
                    for r in 0..d {
                        for k in 0..d {
                            tr += wi.entry(k, r).conj() * wj.entry(k, r);
                        }
                    }
                    let want = if i == j { d as f64 } else { 0.0 };
                    assert!(
                        (tr.norm() - want).abs() < 1e-9,
                        "d={d} tr(W{i}†W{j}) = {tr}"
                    );
                }
            }
        }
    }

    #[test]
    fn bob_phase_inverts_hadamard() {
        for d in 2..=8 {
            let h = hadamard::<S>(d, &tol()).unwrap();
            let p = bob_phase::<S>(d, &tol()).unwrap();
            for r in 0..d {
                for c in 0..d {
                    let mut acc = C::new(0.0, 0.0);
                    for k in 0..d {
                        acc += p.entry(r, k) * h.entry(k, c);
                    }
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!((acc - C::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
        let p3 = bob_phase::<S>(3, &tol()).unwrap();
        assert_entry(&p3, 1, 2, C::from_polar(1.0 / 3f64.sqrt(), -4.0 * PI / 3.0));
    }

    #[test]
    fn correction_id_renders_compactly() {
        assert_eq!(CorrectionId::new(0, 0).to_string(), "I");
        assert_eq!(CorrectionId::new(1, 0).to_string(), "X");
        assert_eq!(CorrectionId::new(0, 1).to_string(), "Z");
        assert_eq!(CorrectionId::new(1, 1).to_string(), "XZ");
        assert_eq!(CorrectionId::new(2, 1).to_string(), "X2Z");
        assert_eq!(CorrectionId::new(0, 3).to_string(), "Z3");
    }

    #[test]
    fn gate_spec_builds_every_kind() {
        let ch = ChannelSpec::new(vec![0.6, 0.8], &tol()).unwrap();
        let specs: Vec<GateSpec<S>> = vec![
            GateSpec::Hadamard { d: 3 },
            GateSpec::PhasePair { d: 2 },
            GateSpec::Cnot { dc: 3, dt: 2 },
            GateSpec::CnotPrimed { d: 4, s: 2 },
            GateSpec::ControlledU {
                channel: ch,
                pairing: vec![(0, 1)],
            },
            GateSpec::CharliePhase {
                phases: vec![0.0, 1.0],
                q: 0,
            },
            GateSpec::BobPhase { d: 5 },
            GateSpec::PauliX,
            GateSpec::PauliY,
            GateSpec::PauliZ,
            GateSpec::Weyl {
                d: 3,
                id: CorrectionId::new(2, 2),
            },
        ];
        for spec in specs {
            spec.build(&tol()).unwrap();
        }
    }
}
