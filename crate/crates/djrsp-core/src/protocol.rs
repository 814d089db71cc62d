//! Full protocol orchestration: initial-state preparation, the encoding
//! circuit, the measurement cascade over both branches of the auxiliary
//! qubit, correction resolution, and transcript assembly.
//!
//! Register layout is (A, B, e, f, g) with dimensions (d, d, d, 2, d); A and
//! f belong to Alice, e to Charlie, B and g to Bob. Two engines are
//! provided: `ExactD2` resolves corrections from a fixed rule table (d = 2
//! only), `GeneralD` searches the Weyl family per leaf.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bases::{self, TargetState};
use crate::error::{Error, Result};
use crate::gates::{self, ChannelSpec, CorrectionId};
use crate::qudit::{
    extract_site_state, fidelity, measure_exhaustive, site_purity, BranchRecord, LeafFlag,
    MeasurementBasis, Owner, QuditRegisterLayout, Site, StateVector, UnitaryOp,
};
use crate::{Real, Tolerances, C};

/// Which correction-resolution strategy drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// d = 2 only: corrections come from the fixed rule table.
    ExactD2,
    /// Any d: corrections found by searching the Weyl family per leaf.
    GeneralD,
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig<T> {
    pub d: usize,
    pub channel: ChannelSpec<T>,
    pub target: TargetState<T>,
    pub shift: usize,
    pub engine: Engine,
    /// Explicit Controlled-U level pairing; defaults to the pairing derived
    /// from `shift`.
    pub cu_pairing: Option<Vec<(usize, usize)>>,
    pub tol: Tolerances<T>,
}

impl<T: Real> ProtocolConfig<T> {
    pub fn new(
        channel: ChannelSpec<T>,
        target: TargetState<T>,
        shift: usize,
        engine: Engine,
        cu_pairing: Option<Vec<(usize, usize)>>,
        tol: Tolerances<T>,
    ) -> Result<Self> {
        let d = channel.d();
        if target.d() != d {
            return Err(Error::InvalidConfig(format!(
                "channel dimension {d} but target dimension {}",
                target.d()
            )));
        }
        if engine == Engine::ExactD2 && d != 2 {
            return Err(Error::InvalidConfig(format!(
                "ExactD2 engine requires d=2, got d={d}"
            )));
        }
        if shift == 0 || shift >= d {
            return Err(Error::InvalidConfig(format!(
                "shift {shift} outside [1, {}]",
                d - 1
            )));
        }
        Ok(ProtocolConfig {
            d,
            channel,
            target,
            shift,
            engine,
            cu_pairing,
            tol,
        })
    }

    /// The Controlled-U pairing in effect: explicit if given, else derived
    /// from the shift.
    pub fn pairing(&self) -> Result<Vec<(usize, usize)>> {
        match &self.cu_pairing {
            Some(p) => Ok(p.clone()),
            None => gates::pairing_from_shift(self.d, self.shift),
        }
    }
}

/// One applied gate: which operator, on which sites, in which branch of the
/// cascade (empty = the shared encoding prefix), and the normalization
/// constant divided out afterwards (1 for unitaries).
#[derive(Debug, Clone, PartialEq)]
pub struct GateLogEntry<T> {
    pub name: String,
    pub sites: Vec<String>,
    pub branch: String,
    pub norm_constant: T,
}

/// A per-leaf anomaly surfaced by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    ResidualEntanglement,
    NoCorrectionFound,
    Pruned,
}

impl FindingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FindingKind::ResidualEntanglement => "residual-entanglement",
            FindingKind::NoCorrectionFound => "no-correction-found",
            FindingKind::Pruned => "pruned",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub path: String,
    pub kind: FindingKind,
    /// Purity, best achievable fidelity, or pruned probability, by kind.
    pub value: f64,
}

/// Run-level aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary<T> {
    /// Σ probability over leaves whose post-correction fidelity reaches
    /// 1 − tol.success_fidelity.
    pub total_success_probability: T,
    pub p_f0: T,
    pub p_f1: T,
    /// Minimum over leaves that carry a fidelity.
    pub min_fidelity: Option<T>,
    /// Unweighted mean over leaves that carry a fidelity.
    pub mean_fidelity: Option<T>,
    /// Measured p_f1 − 2a_0²; zero when the flattening identity holds.
    pub identity_residual: T,
    /// (outcome path, correction) for every corrected leaf.
    pub correction_table: Vec<(String, String)>,
    pub findings: Vec<Finding>,
}

/// The complete machine-readable record of one exhaustive run.
#[derive(Debug, Clone)]
pub struct ProtocolTranscript<T> {
    pub config: ProtocolConfig<T>,
    pub gate_log: Vec<GateLogEntry<T>>,
    pub branches: Vec<BranchRecord<T>>,
    pub summary: Summary<T>,
}

/// The fixed outcome → correction map used by the `ExactD2` engine.
///
/// Keys are (f, μ, ν, g) with g present only in the f = 1 branch. The table
/// is total over the 12 reachable d = 2 outcome classes and every entry is
/// the unique Weyl operator reaching fidelity 1 under this crate's gate
/// conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionRule {
    map: BTreeMap<(usize, usize, usize, Option<usize>), CorrectionId>,
}

impl CorrectionRule {
    pub fn d2() -> Self {
        let mut map = BTreeMap::new();
        // f = 0: keyed by (μ, ν)
        map.insert((0, 0, 0, None), CorrectionId::new(1, 1));
        map.insert((0, 0, 1, None), CorrectionId::new(1, 0));
        map.insert((0, 1, 0, None), CorrectionId::new(0, 0));
        map.insert((0, 1, 1, None), CorrectionId::new(0, 1));
        // f = 1: keyed by (μ, ν, g)
        map.insert((1, 0, 0, Some(0)), CorrectionId::new(1, 0));
        map.insert((1, 0, 0, Some(1)), CorrectionId::new(0, 0));
        map.insert((1, 0, 1, Some(0)), CorrectionId::new(1, 1));
        map.insert((1, 0, 1, Some(1)), CorrectionId::new(0, 1));
        map.insert((1, 1, 0, Some(0)), CorrectionId::new(0, 1));
        map.insert((1, 1, 0, Some(1)), CorrectionId::new(1, 1));
        map.insert((1, 1, 1, Some(0)), CorrectionId::new(0, 0));
        map.insert((1, 1, 1, Some(1)), CorrectionId::new(1, 0));
        CorrectionRule { map }
    }

    pub fn lookup(&self, f: usize, mu: usize, nu: usize, g: Option<usize>) -> Option<CorrectionId> {
        self.map.get(&(f, mu, nu, g)).copied()
    }

    pub fn entries(
        &self,
    ) -> impl Iterator<Item = (&(usize, usize, usize, Option<usize>), &CorrectionId)> {
        self.map.iter()
    }
}

/// Whether Charlie applies the phase-doubling gate before his ν measurement,
/// given the f outcome and Alice's μ outcome.
pub fn charlie_phase_applied(f_outcome: usize, mu_outcome: usize) -> bool {
    (f_outcome == 0 && mu_outcome == 0) || (f_outcome == 1 && mu_outcome != 0)
}

/// The (A, B, e, f, g) register layout for dimension d.
pub fn register_layout(d: usize) -> Result<Arc<QuditRegisterLayout>> {
    Ok(Arc::new(QuditRegisterLayout::new(vec![
        Site::new("A", d, Owner::Alice),
        Site::new("B", d, Owner::Bob),
        Site::new("e", d, Owner::Charlie),
        Site::new("f", 2, Owner::Alice),
        Site::new("g", d, Owner::Bob),
    ])?))
}

/// Σ_k a_k |kk⟩_AB ⊗ |000⟩_efg.
pub fn prepare_initial<T: Real>(config: &ProtocolConfig<T>) -> Result<StateVector<T>> {
    let d = config.d;
    let layout = register_layout(d)?;
    let mut amps = vec![C::new(T::zero(), T::zero()); layout.total_dimension()];
    for (k, &a) in config.channel.coefficients().iter().enumerate() {
        amps[layout.flat_index(&[k, k, 0, 0, 0])?] = C::new(a, T::zero());
    }
    StateVector::new(layout, amps, &config.tol)
}

fn bound<T: Real>(mut op: UnitaryOp<T>, name: &str, sites: &[&str]) -> UnitaryOp<T> {
    op.name = name.to_string();
    op.target_sites = sites.iter().map(|s| s.to_string()).collect();
    op
}

/// The encoding circuit's gates, bound to layout sites, in application order.
fn encoding_gates<T: Real>(config: &ProtocolConfig<T>) -> Result<Vec<UnitaryOp<T>>> {
    let d = config.d;
    let tol = &config.tol;
    let pairing = config.pairing()?;
    Ok(vec![
        bound(gates::hadamard(d, tol)?, "H_A", &["A"]),
        bound(gates::phase_pair(d, tol)?, "P_AB", &["A", "B"]),
        bound(gates::cnot(d, tol)?, "C_Ae", &["A", "e"]),
        bound(
            gates::controlled_u_with_pairing(&config.channel, &pairing, tol)?,
            "CU_AB",
            &["A", "B"],
        ),
        bound(
            gates::cnot_primed(d, config.shift, tol)?,
            "C'_eA",
            &["e", "A"],
        ),
        bound(gates::cnot_rect(d, 2, tol)?, "C_Af", &["A", "f"]),
        bound(gates::cnot(d, tol)?, "C_eg", &["e", "g"]),
        bound(gates::cnot(d, tol)?, "C_eA", &["e", "A"]),
    ])
}

/// Applies the full encoding circuit (Steps I–III) to the prepared state.
pub fn alice_encoding<T: Real>(
    state: &StateVector<T>,
    config: &ProtocolConfig<T>,
) -> Result<StateVector<T>> {
    let mut st = state.clone();
    for g in encoding_gates(config)? {
        st = st.apply(&g)?;
    }
    Ok(st)
}

fn computational_named<T: Real>(
    site: &str,
    d: usize,
    tol: &Tolerances<T>,
) -> Result<MeasurementBasis<T>> {
    let mut b = MeasurementBasis::computational(site, d, tol)?;
    b.name = site.to_string();
    Ok(b)
}

/// The best Weyl operator for mapping `bob_state` onto `target`, with the
/// fidelity it achieves. Ties resolve to the lexicographically first (a, b).
pub fn best_weyl<T: Real>(bob_state: &[C<T>], target: &[C<T>], d: usize) -> (CorrectionId, T) {
    let mut best = (CorrectionId::IDENTITY, T::zero());
    for a in 0..d {
        for b in 0..d {
            let id = CorrectionId::new(a, b);
            let m = gates::weyl_matrix::<T>(d, id);
            let mut ov = C::new(T::zero(), T::zero());
            for r in 0..d {
                for k in 0..d {
                    ov += target[r].conj() * m[r * d + k] * bob_state[k];
                }
            }
            let fid = ov.norm_sqr();
            if fid > best.1 {
                best = (id, fid);
            }
        }
    }
    best
}

/// The first Weyl operator (lexicographic (a, b)) reaching fidelity
/// 1 − tol.success_fidelity, or `NoCorrectionFound` with the best achieved.
pub fn resolve_correction<T: Real>(
    bob_state: &[C<T>],
    target: &[C<T>],
    d: usize,
    tol: &Tolerances<T>,
) -> Result<CorrectionId> {
    let threshold = T::one() - tol.success_fidelity;
    let mut best = T::zero();
    for a in 0..d {
        for b in 0..d {
            let id = CorrectionId::new(a, b);
            let m = gates::weyl_matrix::<T>(d, id);
            let mut ov = C::new(T::zero(), T::zero());
            for r in 0..d {
                for k in 0..d {
                    ov += target[r].conj() * m[r * d + k] * bob_state[k];
                }
            }
            let fid = ov.norm_sqr();
            if fid >= threshold {
                return Ok(id);
            }
            best = best.max(fid);
        }
    }
    Err(Error::NoCorrectionFound {
        best_fidelity: best.to_f64().unwrap_or(f64::NAN),
    })
}

struct BranchRun<T> {
    records: Vec<BranchRecord<T>>,
    log: Vec<GateLogEntry<T>>,
}

fn log_gate<T: Real>(log: &mut Vec<GateLogEntry<T>>, op: &UnitaryOp<T>, branch: &str) {
    log.push(GateLogEntry {
        name: op.name.clone(),
        sites: op.target_sites.clone(),
        branch: branch.to_string(),
        norm_constant: T::one(),
    });
}

fn path_str(path: &[(String, usize)]) -> String {
    path.iter()
        .map(|(b, i)| format!("{b}:{i}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn pruned_leaf<T: Real>(path: Vec<(String, usize)>, prob: T) -> BranchRecord<T> {
    BranchRecord {
        outcome_path: path,
        probability: prob,
        post_state: None,
        applied_correction: None,
        fidelity: None,
        flag: Some(LeafFlag::Pruned),
    }
}

/// Finishes a fully-collapsed leaf: purity check on B, correction selection
/// (rule table or Weyl search by engine), correction application, fidelity.
#[allow(clippy::too_many_arguments)]
fn finish_leaf<T: Real>(
    state: StateVector<T>,
    path: Vec<(String, usize)>,
    prob: T,
    f_outcome: usize,
    mu_outcome: usize,
    nu_outcome: usize,
    g_outcome: Option<usize>,
    config: &ProtocolConfig<T>,
    rule: &CorrectionRule,
    target_ref: &[C<T>],
) -> Result<BranchRecord<T>> {
    let tol = &config.tol;
    let purity = site_purity(&state, "B")?;
    if purity < T::one() - tol.purity {
        return Ok(BranchRecord {
            outcome_path: path,
            probability: prob,
            post_state: Some(state),
            applied_correction: None,
            fidelity: None,
            flag: Some(LeafFlag::ResidualEntanglement),
        });
    }
    let bob = extract_site_state(&state, "B", tol)?;
    let correction = match config.engine {
        Engine::ExactD2 => rule
            .lookup(f_outcome, mu_outcome, nu_outcome, g_outcome)
            .ok_or_else(|| {
                Error::InvalidConfig(format!("rule table misses {}", path_str(&path)))
            })?,
        Engine::GeneralD => {
            let (id, fid) = best_weyl(&bob, target_ref, config.d);
            if fid < T::one() - tol.success_fidelity {
                return Ok(BranchRecord {
                    outcome_path: path,
                    probability: prob,
                    post_state: Some(state),
                    applied_correction: None,
                    fidelity: Some(fid),
                    flag: Some(LeafFlag::NoCorrectionFound),
                });
            }
            id
        }
    };
    let w = UnitaryOp::new(
        correction.to_string(),
        vec!["B".to_string()],
        gates::weyl_matrix(config.d, correction),
        tol,
    )?;
    let corrected = state.apply(&w)?;
    let fid = fidelity(&corrected, target_ref, "B", tol)?;
    Ok(BranchRecord {
        outcome_path: path,
        probability: prob,
        post_state: Some(corrected),
        applied_correction: Some(correction),
        fidelity: Some(fid),
        flag: None,
    })
}

/// Runs the cascade below a collapsed f outcome. Probabilities in the
/// returned records are conditional on that outcome; paths do not include
/// the f step.
fn run_branch<T: Real>(
    state: &StateVector<T>,
    f_outcome: usize,
    config: &ProtocolConfig<T>,
    rule: &CorrectionRule,
) -> Result<BranchRun<T>> {
    let d = config.d;
    let tol = &config.tol;
    let target_ref = bases::target_vector(&config.target);
    let mu = bases::mu_basis(&config.target.amplitude_share(), "A", tol)?;
    let nu_paper = bases::nu_basis_paper(&config.target.phase_share(), "e", tol)?;
    let g_basis = computational_named("g", d, tol)?;
    let branch_tag = format!("f:{f_outcome}");

    let mut log = Vec::new();
    let mut records = Vec::new();

    // Bob's pre-measurement gates
    let mut st = state.clone();
    if f_outcome == 0 {
        let c_gb = bound(gates::cnot(d, tol)?, "C_gB", &["g", "B"]);
        let c_bg = bound(gates::cnot(d, tol)?, "C_Bg", &["B", "g"]);
        st = st.apply(&c_gb)?;
        log_gate(&mut log, &c_gb, &branch_tag);
        st = st.apply(&c_bg)?;
        log_gate(&mut log, &c_bg, &branch_tag);
    } else {
        let c_bg = bound(gates::cnot(d, tol)?, "C_Bg", &["B", "g"]);
        st = st.apply(&c_bg)?;
        log_gate(&mut log, &c_bg, &branch_tag);
    }

    for mu_rec in measure_exhaustive(&st, &mu, tol)? {
        let (mu_name, p) = (mu_rec.outcome_path[0].0.clone(), mu_rec.outcome_path[0].1);
        let path_mu = vec![(mu_name, p)];
        let Some(st_mu) = mu_rec.post_state else {
            records.push(pruned_leaf(path_mu, mu_rec.probability));
            continue;
        };
        let st_mu = if charlie_phase_applied(f_outcome, p) {
            let gate = bound(
                gates::charlie_phase(config.target.phases(), 0, tol)?,
                "P_theta_e",
                &["e"],
            );
            let out = st_mu.apply(&gate)?;
            log_gate(&mut log, &gate, &format!("{branch_tag}/mu:{p}"));
            out
        } else {
            st_mu
        };
        for nu_rec in measure_exhaustive(&st_mu, &nu_paper, tol)? {
            let q = nu_rec.outcome_path[0].1;
            let mut path_nu = path_mu.clone();
            path_nu.push((nu_rec.outcome_path[0].0.clone(), q));
            let p_nu = mu_rec.probability * nu_rec.probability;
            let Some(st_nu) = nu_rec.post_state else {
                records.push(pruned_leaf(path_nu, p_nu));
                continue;
            };
            if f_outcome == 0 {
                // Bob's reconstruction pair H_B then P_B multiplies to the
                // identity; applied anyway so the log matches the narrative.
                let h_b = bound(gates::hadamard(d, tol)?, "H_B", &["B"]);
                let p_b = bound(gates::bob_phase(d, tol)?, "P_B", &["B"]);
                let st_leaf = st_nu.apply(&h_b)?.apply(&p_b)?;
                let tag = format!("{branch_tag}/{}", path_str(&path_nu));
                log_gate(&mut log, &h_b, &tag);
                log_gate(&mut log, &p_b, &tag);
                records.push(finish_leaf(
                    st_leaf,
                    path_nu,
                    p_nu,
                    f_outcome,
                    p,
                    q,
                    None,
                    config,
                    rule,
                    &target_ref,
                )?);
            } else {
                for g_rec in measure_exhaustive(&st_nu, &g_basis, tol)? {
                    let go = g_rec.outcome_path[0].1;
                    let mut path_g = path_nu.clone();
                    path_g.push((g_rec.outcome_path[0].0.clone(), go));
                    let p_g = p_nu * g_rec.probability;
                    let Some(st_g) = g_rec.post_state else {
                        records.push(pruned_leaf(path_g, p_g));
                        continue;
                    };
                    records.push(finish_leaf(
                        st_g,
                        path_g,
                        p_g,
                        f_outcome,
                        p,
                        q,
                        Some(go),
                        config,
                        rule,
                        &target_ref,
                    )?);
                }
            }
        }
    }
    Ok(BranchRun { records, log })
}

/// Cascade below the f = 0 collapse: Bob's C_gB/C_Bg, Alice's μ measurement,
/// Charlie's (conditionally phase-gated) ν measurement, reconstruction and
/// correction. Probabilities are conditional on f = 0.
pub fn run_branch_zero_f<T: Real>(
    state: &StateVector<T>,
    config: &ProtocolConfig<T>,
) -> Result<Vec<BranchRecord<T>>> {
    Ok(run_branch(state, 0, config, &CorrectionRule::d2())?.records)
}

/// Cascade below the f = 1 collapse: Bob's C_Bg, the μ/ν measurements, Bob's
/// g measurement, and correction. Probabilities are conditional on f = 1.
pub fn run_branch_one_f<T: Real>(
    state: &StateVector<T>,
    config: &ProtocolConfig<T>,
) -> Result<Vec<BranchRecord<T>>> {
    Ok(run_branch(state, 1, config, &CorrectionRule::d2())?.records)
}

fn summarize<T: Real>(
    branches: &[BranchRecord<T>],
    p_f: [T; 2],
    config: &ProtocolConfig<T>,
) -> Summary<T> {
    let tol = &config.tol;
    let mut success = T::zero();
    let mut min_fid: Option<T> = None;
    let mut fid_sum = T::zero();
    let mut fid_count = 0usize;
    let mut correction_table = Vec::new();
    let mut findings = Vec::new();
    for b in branches {
        let path = b.path_string();
        if let Some(f) = b.fidelity {
            if b.flag.is_none() && f >= T::one() - tol.success_fidelity {
                success += b.probability;
            }
            min_fid = Some(min_fid.map_or(f, |m| m.min(f)));
            fid_sum += f;
            fid_count += 1;
        }
        if let Some(c) = b.applied_correction {
            correction_table.push((path.clone(), c.to_string()));
        }
        match b.flag {
            Some(LeafFlag::Pruned) => findings.push(Finding {
                path,
                kind: FindingKind::Pruned,
                value: b.probability.to_f64().unwrap_or(f64::NAN),
            }),
            Some(LeafFlag::ResidualEntanglement) => {
                let purity = b
                    .post_state
                    .as_ref()
                    .and_then(|s| site_purity(s, "B").ok())
                    .and_then(|p| p.to_f64())
                    .unwrap_or(f64::NAN);
                findings.push(Finding {
                    path,
                    kind: FindingKind::ResidualEntanglement,
                    value: purity,
                });
            }
            Some(LeafFlag::NoCorrectionFound) => findings.push(Finding {
                path,
                kind: FindingKind::NoCorrectionFound,
                value: b.fidelity.and_then(|f| f.to_f64()).unwrap_or(f64::NAN),
            }),
            _ => {}
        }
    }
    let a0 = config.channel.coefficients()[0];
    Summary {
        total_success_probability: success,
        p_f0: p_f[0],
        p_f1: p_f[1],
        min_fidelity: min_fid,
        mean_fidelity: if fid_count > 0 {
            Some(fid_sum / T::of(fid_count as f64))
        } else {
            None
        },
        identity_residual: p_f[1] - T::of(2.0) * a0 * a0,
        correction_table,
        findings,
    }
}

/// Exhaustively enumerates every measurement branch and assembles the
/// transcript. Leaf probabilities are absolute and sum to 1.
pub fn enumerate<T: Real>(config: &ProtocolConfig<T>) -> Result<ProtocolTranscript<T>> {
    let tol = &config.tol;
    let rule = CorrectionRule::d2();
    let initial = prepare_initial(config)?;
    let mut gate_log = Vec::new();
    let mut st = initial;
    for g in encoding_gates(config)? {
        st = st.apply(&g)?;
        log_gate(&mut gate_log, &g, "");
    }
    let f_basis = computational_named("f", 2, tol)?;
    let mut branches: Vec<BranchRecord<T>> = Vec::new();
    let mut p_f = [T::zero(); 2];
    for f_rec in measure_exhaustive(&st, &f_basis, tol)? {
        let fo = f_rec.outcome_path[0].1;
        p_f[fo] = f_rec.probability;
        let f_step = (f_rec.outcome_path[0].0.clone(), fo);
        let Some(st_f) = f_rec.post_state else {
            branches.push(pruned_leaf(vec![f_step], f_rec.probability));
            continue;
        };
        let sub = run_branch(&st_f, fo, config, &rule)?;
        gate_log.extend(sub.log);
        for mut rec in sub.records {
            rec.outcome_path.insert(0, f_step.clone());
            rec.probability *= f_rec.probability;
            branches.push(rec);
        }
    }
    branches.sort_by(|a, b| a.outcome_path.cmp(&b.outcome_path));
    let summary = summarize(&branches, p_f, config);
    Ok(ProtocolTranscript {
        config: config.clone(),
        gate_log,
        branches,
        summary,
    })
}

fn pick_outcome<T: Real>(probs: &[T], rng: &mut ChaCha8Rng) -> usize {
    let total: T = probs.iter().copied().sum();
    let mut r = T::of(rng.gen::<f64>()) * total;
    for (i, &p) in probs.iter().enumerate() {
        if r < p {
            return i;
        }
        r -= p;
    }
    probs.len() - 1
}

fn sample_one<T: Real>(
    encoded: &StateVector<T>,
    config: &ProtocolConfig<T>,
    rule: &CorrectionRule,
    target_ref: &[C<T>],
    rng: &mut ChaCha8Rng,
) -> Result<BranchRecord<T>> {
    let d = config.d;
    let tol = &config.tol;
    let f_basis = computational_named("f", 2, tol)?;
    let f_recs = measure_exhaustive(encoded, &f_basis, tol)?;
    let f_probs: Vec<T> = f_recs.iter().map(|r| r.probability).collect();
    let fo = pick_outcome(&f_probs, rng);
    let f_rec = &f_recs[fo];
    let mut prob = f_rec.probability;
    let mut path = vec![(f_rec.outcome_path[0].0.clone(), fo)];
    let Some(mut st) = f_rec.post_state.clone() else {
        return Ok(pruned_leaf(path, prob));
    };

    if fo == 0 {
        st = st.apply(&bound(gates::cnot(d, tol)?, "C_gB", &["g", "B"]))?;
        st = st.apply(&bound(gates::cnot(d, tol)?, "C_Bg", &["B", "g"]))?;
    } else {
        st = st.apply(&bound(gates::cnot(d, tol)?, "C_Bg", &["B", "g"]))?;
    }

    let mu = bases::mu_basis(&config.target.amplitude_share(), "A", tol)?;
    let mu_recs = measure_exhaustive(&st, &mu, tol)?;
    let mu_probs: Vec<T> = mu_recs.iter().map(|r| r.probability).collect();
    let p = pick_outcome(&mu_probs, rng);
    prob *= mu_recs[p].probability;
    path.push((mu_recs[p].outcome_path[0].0.clone(), p));
    let Some(mut st) = mu_recs[p].post_state.clone() else {
        return Ok(pruned_leaf(path, prob));
    };

    if charlie_phase_applied(fo, p) {
        st = st.apply(&bound(
            gates::charlie_phase(config.target.phases(), 0, tol)?,
            "P_theta_e",
            &["e"],
        ))?;
    }
    let nu_paper = bases::nu_basis_paper(&config.target.phase_share(), "e", tol)?;
    let nu_recs = measure_exhaustive(&st, &nu_paper, tol)?;
    let nu_probs: Vec<T> = nu_recs.iter().map(|r| r.probability).collect();
    let q = pick_outcome(&nu_probs, rng);
    prob *= nu_recs[q].probability;
    path.push((nu_recs[q].outcome_path[0].0.clone(), q));
    let Some(mut st) = nu_recs[q].post_state.clone() else {
        return Ok(pruned_leaf(path, prob));
    };

    let g_outcome = if fo == 0 {
        st = st.apply(&bound(gates::hadamard(d, tol)?, "H_B", &["B"]))?;
        st = st.apply(&bound(gates::bob_phase(d, tol)?, "P_B", &["B"]))?;
        None
    } else {
        let g_basis = computational_named("g", d, tol)?;
        let g_recs = measure_exhaustive(&st, &g_basis, tol)?;
        let g_probs: Vec<T> = g_recs.iter().map(|r| r.probability).collect();
        let go = pick_outcome(&g_probs, rng);
        prob *= g_recs[go].probability;
        path.push((g_recs[go].outcome_path[0].0.clone(), go));
        match g_recs[go].post_state.clone() {
            Some(s) => st = s,
            None => return Ok(pruned_leaf(path, prob)),
        }
        Some(go)
    };

    finish_leaf(
        st, path, prob, fo, p, q, g_outcome, config, rule, target_ref,
    )
}

/// One seeded protocol run: samples each measurement outcome by its
/// probability. Identical seed ⇒ identical trajectory.
pub fn sample_trajectory<T: Real>(
    config: &ProtocolConfig<T>,
    seed: u64,
) -> Result<BranchRecord<T>> {
    Ok(sample_many(config, seed, 1)?.pop().expect("one sample"))
}

/// `shots` seeded runs sharing one encoding pass and one generator stream.
pub fn sample_many<T: Real>(
    config: &ProtocolConfig<T>,
    seed: u64,
    shots: usize,
) -> Result<Vec<BranchRecord<T>>> {
    let rule = CorrectionRule::d2();
    let target_ref = bases::target_vector(&config.target);
    let initial = prepare_initial(config)?;
    let encoded = alice_encoding(&initial, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(shots);
    for _ in 0..shots {
        out.push(sample_one(&encoded, config, &rule, &target_ref, &mut rng)?);
    }
    Ok(out)
}
