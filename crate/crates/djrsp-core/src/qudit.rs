//! Heterogeneous-dimension qudit registers: layouts, state vectors, unitary
//! application on site subsets, exhaustive projective measurement, and
//! single-site fidelity.
//!
//! Amplitude ordering is row-major over the site list as declared in the
//! layout: the first-listed site is most significant.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::{Real, Tolerances, C};

/// Who holds a register after distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Alice,
    Charlie,
    Bob,
}

/// One register site: a label, its dimension, and its owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub label: String,
    pub dim: usize,
    pub owner: Owner,
}

impl Site {
    pub fn new(label: impl Into<String>, dim: usize, owner: Owner) -> Self {
        Site {
            label: label.into(),
            dim,
            owner,
        }
    }
}

/// Ordered list of sites with per-site dimension and ownership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuditRegisterLayout {
    sites: Vec<Site>,
    strides: Vec<usize>,
    total: usize,
}

impl QuditRegisterLayout {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidLayout("layout has no sites".into()));
        }
        for s in &sites {
            if s.dim < 2 {
                return Err(Error::InvalidLayout(format!(
                    "site `{}` has dimension {}, need at least 2",
                    s.label, s.dim
                )));
            }
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate site label `{}`",
                    s.label
                )));
            }
        }
        let mut strides = vec![1usize; sites.len()];
        for i in (0..sites.len() - 1).rev() {
            strides[i] = strides[i + 1] * sites[i + 1].dim;
        }
        let total = strides[0] * sites[0].dim;
        Ok(QuditRegisterLayout {
            sites,
            strides,
            total,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Product of all site dimensions.
    pub fn total_dimension(&self) -> usize {
        self.total
    }

    pub fn site_index(&self, label: &str) -> Result<usize> {
        self.sites
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownSite(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.sites[self.site_index(label)?].dim)
    }

    pub fn stride_of(&self, idx: usize) -> usize {
        self.strides[idx]
    }

    /// Flat amplitude index of a computational basis state given one digit
    /// per site, in layout order.
    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.sites.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sites.len(),
                actual: digits.len(),
            });
        }
        let mut n = 0;
        for (i, (&d, s)) in digits.iter().zip(&self.sites).enumerate() {
            if d >= s.dim {
                return Err(Error::InvalidLayout(format!(
                    "digit {d} out of range for site `{}`",
                    s.label
                )));
            }
            n += d * self.strides[i];
        }
        Ok(n)
    }

    /// All flat offsets obtained by running the sites in `fixed_zero` through
    /// zero while every other site runs through its full range.
    fn rest_offsets(&self, fixed_zero: &[usize]) -> Vec<usize> {
        let free: Vec<usize> = (0..self.sites.len())
            .filter(|i| !fixed_zero.contains(i))
            .collect();
        let count: usize = free.iter().map(|&i| self.sites[i].dim).product();
        let mut out = Vec::with_capacity(count);
        let mut digits = vec![0usize; free.len()];
        loop {
            let off: usize = free
                .iter()
                .zip(&digits)
                .map(|(&i, &d)| d * self.strides[i])
                .sum();
            out.push(off);
            // mixed-radix increment
            let mut k = free.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < self.sites[free[k]].dim {
                    break;
                }
                digits[k] = 0;
            }
        }
    }
}

/// A pure state over a layout's product space, norm 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    layout: Arc<QuditRegisterLayout>,
    amps: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    /// Wraps amplitudes that are already normalized (within `tol.norm`).
    pub fn new(
        layout: Arc<QuditRegisterLayout>,
        amps: Vec<C<T>>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        if amps.len() != layout.total_dimension() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dimension(),
                actual: amps.len(),
            });
        }
        let n = norm(&amps);
        if (n - T::one()).abs() > tol.norm {
            return Err(Error::NotNormalized {
                norm: n.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(StateVector { layout, amps })
    }

    /// Renormalizes on construction and returns the normalization constant
    /// that was divided out.
    pub fn normalized(layout: Arc<QuditRegisterLayout>, mut amps: Vec<C<T>>) -> Result<(Self, T)> {
        if amps.len() != layout.total_dimension() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dimension(),
                actual: amps.len(),
            });
        }
        let n = norm(&amps);
        if n <= T::zero() {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        for a in &mut amps {
            *a = a.unscale(n);
        }
        Ok((StateVector { layout, amps }, n))
    }

    /// The computational basis state with the given digit per site.
    pub fn basis_state(layout: Arc<QuditRegisterLayout>, digits: &[usize]) -> Result<Self> {
        let idx = layout.flat_index(digits)?;
        let mut amps = vec![C::new(T::zero(), T::zero()); layout.total_dimension()];
        amps[idx] = C::new(T::one(), T::zero());
        Ok(StateVector { layout, amps })
    }

    pub fn layout(&self) -> &Arc<QuditRegisterLayout> {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn norm(&self) -> T {
        norm(&self.amps)
    }

    /// Applies `op` on its target sites, identity elsewhere, returning the
    /// new state. Norm is preserved by unitarity.
    pub fn apply(&self, op: &UnitaryOp<T>) -> Result<Self> {
        let ts: Vec<usize> = op
            .target_sites
            .iter()
            .map(|l| self.layout.site_index(l))
            .collect::<Result<_>>()?;
        let m: usize = ts.iter().map(|&i| self.layout.sites[i].dim).product();
        if m != op.dim {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: op.dim,
            });
        }
        // offsets of the target-subspace basis states, first target site
        // most significant (matching the matrix layout)
        let mut sub_offsets = Vec::with_capacity(m);
        let mut digits = vec![0usize; ts.len()];
        for _ in 0..m {
            sub_offsets.push(
                ts.iter()
                    .zip(&digits)
                    .map(|(&i, &d)| d * self.layout.strides[i])
                    .sum::<usize>(),
            );
            let mut k = ts.len();
            while k > 0 {
                k -= 1;
                digits[k] += 1;
                if digits[k] < self.layout.sites[ts[k]].dim {
                    break;
                }
                digits[k] = 0;
            }
        }
        let mut out = self.amps.clone();
        let mut x = vec![C::new(T::zero(), T::zero()); m];
        for roff in self.layout.rest_offsets(&ts) {
            for (t, &so) in sub_offsets.iter().enumerate() {
                x[t] = self.amps[roff + so];
            }
            for (tp, &so) in sub_offsets.iter().enumerate() {
                let mut acc = C::new(T::zero(), T::zero());
                for (t, &xv) in x.iter().enumerate() {
                    acc += op.matrix[tp * m + t] * xv;
                }
                out[roff + so] = acc;
            }
        }
        Ok(StateVector {
            layout: self.layout.clone(),
            amps: out,
        })
    }

    /// Reduced density matrix of one site, row-major `dim × dim`.
    pub fn reduced_density(&self, site: &str) -> Result<Vec<C<T>>> {
        let si = self.layout.site_index(site)?;
        let d = self.layout.sites[si].dim;
        let stride = self.layout.strides[si];
        let mut rho = vec![C::new(T::zero(), T::zero()); d * d];
        for roff in self.layout.rest_offsets(&[si]) {
            for i in 0..d {
                let ai = self.amps[roff + i * stride];
                for j in 0..d {
                    rho[i * d + j] += ai * self.amps[roff + j * stride].conj();
                }
            }
        }
        Ok(rho)
    }
}

fn norm<T: Real>(amps: &[C<T>]) -> T {
    amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
}

/// A unitary acting on an ordered subset of layout sites.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp<T> {
    pub name: String,
    pub target_sites: Vec<String>,
    dim: usize,
    matrix: Vec<C<T>>,
}

impl<T: Real> UnitaryOp<T> {
    /// Validates `‖U†U − I‖_max ≤ tol.unitarity` at construction.
    pub fn new(
        name: impl Into<String>,
        target_sites: Vec<String>,
        matrix: Vec<C<T>>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let name = name.into();
        let dim = (matrix.len() as f64).sqrt().round() as usize;
        if dim * dim != matrix.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: matrix.len(),
            });
        }
        let dev = unitarity_deviation(&matrix, dim);
        if dev > tol.unitarity {
            return Err(Error::NonUnitary {
                name,
                max_dev: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(UnitaryOp {
            name,
            target_sites,
            dim,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[C<T>] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C<T> {
        self.matrix[row * self.dim + col]
    }

    /// The same operator with its target-site order permuted, matrix rows and
    /// columns reindexed to match.
    pub fn permuted(
        &self,
        new_order: &[usize],
        dims: &[usize],
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        if new_order.len() != self.target_sites.len() || dims.len() != new_order.len() {
            return Err(Error::DimensionMismatch {
                expected: self.target_sites.len(),
                actual: new_order.len(),
            });
        }
        let n = dims.len();
        let old_dims = dims.to_vec();
        let new_dims: Vec<usize> = new_order.iter().map(|&i| old_dims[i]).collect();
        let m = self.dim;
        let decode = |mut idx: usize| -> Vec<usize> {
            let mut dg = vec![0usize; n];
            for k in (0..n).rev() {
                dg[k] = idx % old_dims[k];
                idx /= old_dims[k];
            }
            dg
        };
        let encode_new = |dg: &[usize]| -> usize {
            let mut idx = 0;
            for k in 0..n {
                idx = idx * new_dims[k] + dg[new_order[k]];
            }
            idx
        };
        let mut out = vec![C::new(T::zero(), T::zero()); m * m];
        for r in 0..m {
            let rn = encode_new(&decode(r));
            for c in 0..m {
                let cn = encode_new(&decode(c));
                out[rn * m + cn] = self.matrix[r * m + c];
            }
        }
        let sites = new_order
            .iter()
            .map(|&i| self.target_sites[i].clone())
            .collect();
        UnitaryOp::new(self.name.clone(), sites, out, tol)
    }
}

fn unitarity_deviation<T: Real>(m: &[C<T>], dim: usize) -> T {
    let mut dev = T::zero();
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C::new(T::zero(), T::zero());
            for k in 0..dim {
                acc += m[k * dim + i].conj() * m[k * dim + j];
            }
            if i == j {
                acc -= C::new(T::one(), T::zero());
            }
            dev = dev.max(acc.norm());
        }
    }
    dev
}

/// An orthonormal measurement basis for one site.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis<T> {
    pub site: String,
    pub name: String,
    vectors: Vec<Vec<C<T>>>,
}

impl<T: Real> MeasurementBasis<T> {
    /// Validates pairwise `|⟨v_i|v_j⟩ − δ_ij| ≤ tol.orthonormality` and that
    /// the vector count matches the site dimension (= vector length).
    pub fn new(
        site: impl Into<String>,
        name: impl Into<String>,
        vectors: Vec<Vec<C<T>>>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let name = name.into();
        let d = vectors.len();
        if d == 0 || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::NonOrthonormalBasis {
                name,
                max_dev: f64::INFINITY,
            });
        }
        let mut dev = T::zero();
        for i in 0..d {
            for j in 0..d {
                let mut acc = C::new(T::zero(), T::zero());
                for (a, b) in vectors[i].iter().zip(&vectors[j]) {
                    acc += a.conj() * b;
                }
                if i == j {
                    acc -= C::new(T::one(), T::zero());
                }
                dev = dev.max(acc.norm());
            }
        }
        if dev > tol.orthonormality {
            return Err(Error::NonOrthonormalBasis {
                name,
                max_dev: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(MeasurementBasis {
            site: site.into(),
            name,
            vectors,
        })
    }

    /// Computational basis `{|0⟩, …, |d−1⟩}` for a site.
    pub fn computational(site: impl Into<String>, d: usize, tol: &Tolerances<T>) -> Result<Self> {
        let mut vectors = vec![vec![C::new(T::zero(), T::zero()); d]; d];
        for (i, v) in vectors.iter_mut().enumerate() {
            v[i] = C::new(T::one(), T::zero());
        }
        MeasurementBasis::new(site, "computational", vectors, tol)
    }

    pub fn vectors(&self) -> &[Vec<C<T>>] {
        &self.vectors
    }
}

/// Why a branch carries no fidelity, or why it was cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafFlag {
    /// Probability below the pruning floor; post-state omitted.
    Pruned,
    /// The receiver's register is still entangled with an ancilla.
    ResidualEntanglement,
    /// No Weyl correction reaches the target within tolerance.
    NoCorrectionFound,
    /// The amplitude basis construction does not exist for this target.
    BasisNotRealizable,
}

/// One measurement outcome path: probability, collapsed state, and (for
/// protocol leaves) the applied correction and resulting fidelity.
#[derive(Debug, Clone)]
pub struct BranchRecord<T> {
    /// Ordered (basis name, outcome index) pairs from root to this node.
    pub outcome_path: Vec<(String, usize)>,
    /// Absolute probability of reaching this node.
    pub probability: T,
    /// Collapsed, renormalized state; `None` iff pruned.
    pub post_state: Option<StateVector<T>>,
    pub applied_correction: Option<crate::gates::CorrectionId>,
    pub fidelity: Option<T>,
    pub flag: Option<LeafFlag>,
}

impl<T: Real> BranchRecord<T> {
    /// Canonical `f:0/mu:1/nu:0` rendering of the outcome path.
    pub fn path_string(&self) -> String {
        self.outcome_path
            .iter()
            .map(|(b, i)| format!("{b}:{i}"))
            .collect::<Vec<_>>()
            .join("/")
    }
}

/// Projectively measures one site in `basis`, returning one record per basis
/// vector. Probabilities are squared projection norms; post-states are the
/// renormalized projections with the measured site collapsed onto the basis
/// vector. Branches below `tol.probability_floor` are flagged `Pruned` and
/// carry no post-state.
pub fn measure_exhaustive<T: Real>(
    state: &StateVector<T>,
    basis: &MeasurementBasis<T>,
    tol: &Tolerances<T>,
) -> Result<Vec<BranchRecord<T>>> {
    let layout = state.layout().clone();
    let si = layout.site_index(&basis.site)?;
    let d = layout.sites[si].dim;
    if basis.vectors.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: basis.vectors.len(),
        });
    }
    let stride = layout.strides[si];
    let rest = layout.rest_offsets(&[si]);
    let mut out = Vec::with_capacity(d);
    for (outcome, v) in basis.vectors.iter().enumerate() {
        let mut amps = vec![C::new(T::zero(), T::zero()); layout.total_dimension()];
        let mut prob = T::zero();
        for &roff in &rest {
            let mut c = C::new(T::zero(), T::zero());
            for (j, &vj) in v.iter().enumerate() {
                c += vj.conj() * state.amps[roff + j * stride];
            }
            prob += c.norm_sqr();
            for (j, &vj) in v.iter().enumerate() {
                amps[roff + j * stride] = c * vj;
            }
        }
        let (post_state, flag) = if prob < tol.probability_floor {
            (None, Some(LeafFlag::Pruned))
        } else {
            let s = prob.sqrt();
            for a in &mut amps {
                *a = a.unscale(s);
            }
            (
                Some(StateVector {
                    layout: layout.clone(),
                    amps,
                }),
                None,
            )
        };
        out.push(BranchRecord {
            outcome_path: vec![(basis.name.clone(), outcome)],
            probability: prob,
            post_state,
            applied_correction: None,
            fidelity: None,
            flag,
        });
    }
    Ok(out)
}

/// Purity `tr(ρ²)` of one site's reduced state.
pub fn site_purity<T: Real>(state: &StateVector<T>, site: &str) -> Result<T> {
    let rho = state.reduced_density(site)?;
    Ok(rho.iter().map(|e| e.norm_sqr()).sum())
}

/// `|⟨reference|state of site⟩|²`, invariant under global phase of either
/// argument. Errors with `ResidualEntanglement` when the site's reduced state
/// is not pure (purity below `1 − tol.purity`).
pub fn fidelity<T: Real>(
    state: &StateVector<T>,
    reference: &[C<T>],
    site: &str,
    tol: &Tolerances<T>,
) -> Result<T> {
    let rho = state.reduced_density(site)?;
    let d = reference.len();
    if rho.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: rho.len(),
            actual: d * d,
        });
    }
    let purity: T = rho.iter().map(|e| e.norm_sqr()).sum();
    if purity < T::one() - tol.purity {
        return Err(Error::ResidualEntanglement {
            site: site.to_string(),
            purity: purity.to_f64().unwrap_or(f64::NAN),
        });
    }
    let rnorm = norm(reference);
    let mut acc = C::new(T::zero(), T::zero());
    for i in 0..d {
        for j in 0..d {
            acc += reference[i].conj() * rho[i * d + j] * reference[j];
        }
    }
    Ok(acc.re / (rnorm * rnorm))
}

/// Extracts the site's pure-state vector from a product-state register.
/// The global phase is fixed arbitrarily; callers must not rely on it.
pub fn extract_site_state<T: Real>(
    state: &StateVector<T>,
    site: &str,
    tol: &Tolerances<T>,
) -> Result<Vec<C<T>>> {
    let rho = state.reduced_density(site)?;
    let d = (rho.len() as f64).sqrt().round() as usize;
    let purity: T = rho.iter().map(|e| e.norm_sqr()).sum();
    if purity < T::one() - tol.purity {
        return Err(Error::ResidualEntanglement {
            site: site.to_string(),
            purity: purity.to_f64().unwrap_or(f64::NAN),
        });
    }
    // for pure ρ = |b⟩⟨b|, any column with nonzero diagonal is ∝ |b⟩
    let mut kmax = 0;
    let mut pmax = T::zero();
    for k in 0..d {
        let p = rho[k * d + k].re;
        if p > pmax {
            pmax = p;
            kmax = k;
        }
    }
    let scale = pmax.sqrt();
    Ok((0..d).map(|j| rho[j * d + kmax].unscale(scale)).collect())
}
