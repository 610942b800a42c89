//! Majorization and explicit unitaries for single-shot state transitions with
//! maximally mixed ancillas: exact noisy-operation transitions, catalytic
//! composition, truncated infinite-dimensional transitions and probabilistic
//! conversion.

use rand::Rng;
use serde::Serialize;

use crate::channels::{self, dephase, rng_from_seed};
use crate::entropy::{quantum_entropy, EntropyMeasure};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::qcore::{self, Basis, DensityMatrix, Distribution, Subsystem};

pub const MAJORIZATION_TOL: f64 = 1e-12;
/// Residual tolerance for constructed plans.
pub const PLAN_TOL: f64 = 1e-8;
/// Largest total dimension for which a global unitary is materialized.
pub const MAX_UNITARY_DIM: usize = 4096;
/// Cap on the number of levels scanned when truncating spectrum streams.
pub const TRUNCATION_CAP: usize = 4096;
/// Largest block dimension `d + k` tried when the padding is chosen automatically.
pub const AUTO_BLOCK_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorizationCert {
    /// Both vectors sorted descending and padded to equal length.
    pub p: Distribution,
    pub q: Distribution,
    pub holds: bool,
    /// `Σ_{i≤k} p_i − Σ_{i≤k} q_i` for `k = 1..n`.
    pub partial_sum_gaps: Vec<f64>,
}

impl MajorizationCert {
    /// First (1-based) index with a negative gap, if any.
    pub fn first_failure(&self) -> Option<(usize, f64)> {
        self.partial_sum_gaps
            .iter()
            .enumerate()
            .find(|(_, &g)| g < -MAJORIZATION_TOL)
            .map(|(i, &g)| (i + 1, g))
    }

    fn to_error(&self) -> Error {
        let (index, gap) = self.first_failure().unwrap_or((0, 0.0));
        Error::NotMajorized { index, gap }
    }
}

/// Does `p` majorize `q`?
pub fn majorizes(p: &Distribution, q: &Distribution) -> MajorizationCert {
    let n = p.len().max(q.len());
    let ps = p.padded(n).sorted_desc();
    let qs = q.padded(n).sorted_desc();
    let mut gaps = Vec::with_capacity(n);
    let (mut sp, mut sq) = (0.0, 0.0);
    for k in 0..n {
        sp += ps[k];
        sq += qs[k];
        gaps.push(sp - sq);
    }
    let holds = gaps.iter().all(|&g| g >= -MAJORIZATION_TOL);
    MajorizationCert {
        p: Distribution::from_vec_unchecked(ps),
        q: Distribution::from_vec_unchecked(qs),
        holds,
        partial_sum_gaps: gaps,
    }
}

fn sort_order_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

/// Real orthogonal `W` with `diag(W diag(p) Wᵀ) = q`, built from at most `n − 1`
/// Givens rotations (a chain of T-transforms).
///
/// Entries keep their given order; the shorter vector is zero-padded.
pub fn schur_horn_rotation(p: &Distribution, q: &Distribution) -> Result<Basis> {
    let cert = majorizes(p, q);
    if !cert.holds {
        return Err(cert.to_error());
    }
    let n = p.len().max(q.len());
    let pv = p.padded(n).into_vec();
    let qv = q.padded(n).into_vec();
    let sigma = sort_order_desc(&pv);
    let tau = sort_order_desc(&qv);
    let y: Vec<f64> = tau.iter().map(|&i| qv[i]).collect();

    // Active sorted positions and their current diagonal values.
    let mut active: Vec<(usize, f64)> = sigma.iter().enumerate().map(|(pos, &i)| (pos, pv[i])).collect();
    let mut assign = vec![0usize; n];
    let mut g = linalg::identity(n);
    for (t, &target) in y.iter().enumerate() {
        let k = active
            .iter()
            .rposition(|&(_, v)| v >= target - 1e-15)
            .unwrap_or(0);
        let (pos_k, a) = active[k];
        if (a - target).abs() <= 1e-15 || k + 1 >= active.len() {
            assign[pos_k] = t;
            active.remove(k);
            continue;
        }
        let (pos_l, b) = active[k + 1];
        let c2 = ((target - b) / (a - b)).clamp(0.0, 1.0);
        let (cs, sn) = (c2.sqrt(), (1.0 - c2).sqrt());
        let mut rot = linalg::identity(n);
        rot[(pos_k, pos_k)] = c(cs);
        rot[(pos_k, pos_l)] = c(-sn);
        rot[(pos_l, pos_k)] = c(sn);
        rot[(pos_l, pos_l)] = c(cs);
        g = rot * g;
        assign[pos_k] = t;
        active[k + 1].1 = a + b - target;
        active.remove(k);
    }

    let mut perm_s = vec![0usize; n];
    for (pos, &i) in sigma.iter().enumerate() {
        perm_s[i] = pos;
    }
    let perm_pi: Vec<usize> = (0..n).map(|pos| tau[assign[pos]]).collect();
    let w = linalg::permutation_matrix(&perm_pi) * g * linalg::permutation_matrix(&perm_s);

    let rotated = linalg::conjugate(&w, &linalg::from_real_diagonal(&pv));
    let residual = (0..n).map(|i| (rotated[(i, i)].re - qv[i]).abs()).fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::VerificationFailed {
            what: "Schur-Horn diagonal".into(),
            residual,
            tolerance: 1e-10,
        });
    }
    Ok(Basis::from_matrix_unchecked(w))
}

/// A verified transition: `tr_anc[U(ρ ⊗ σ)U†] ≈ ρ′` with ancilla/catalyst marginal restored.
#[derive(Debug, Clone)]
pub struct TransitionPlan {
    pub source_spectrum: Distribution,
    pub target_spectrum: Distribution,
    /// Ancilla/catalyst state `σ` when it is not maximally mixed.
    pub catalyst: Option<DensityMatrix>,
    pub ancilla_dims: Vec<usize>,
    pub global_unitary: CMatrix,
    pub residual_target: f64,
    pub residual_marginal: f64,
    pub success_probability: Option<f64>,
    /// Number of kept levels (truncated transitions) or padding levels (probabilistic).
    pub levels: Option<usize>,
    pub warnings: Vec<String>,
}

impl TransitionPlan {
    pub fn total_dim(&self) -> usize {
        self.global_unitary.nrows()
    }
}

fn check_square_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let d = a.dim();
    if d * d > MAX_UNITARY_DIM {
        return Err(Error::TooLarge(format!(
            "global unitary of dimension {} exceeds {MAX_UNITARY_DIM}",
            d * d
        )));
    }
    Ok(d)
}

/// Marginals of `U (ρ ⊗ 𝟙/d) U†` on the system and on the ancilla.
fn lifted_marginals(u: &CMatrix, rho: &DensityMatrix, d_anc: usize) -> Result<(DensityMatrix, DensityMatrix)> {
    let d = rho.dim();
    let joint = qcore::tensor(rho, &DensityMatrix::maximally_mixed(d_anc)).conjugated(u)?;
    Ok((
        qcore::partial_trace(&joint, (d, d_anc), Subsystem::A)?,
        qcore::partial_trace(&joint, (d, d_anc), Subsystem::B)?,
    ))
}

/// Exact transition `ρ → ρ′` for `spectrum(ρ) ⪰ spectrum(ρ′)` using a maximally
/// mixed ancilla of the same dimension.
///
/// `U = (G ⊗ 𝟙)·U₁·((W F†) ⊗ 𝟙)` where `F` and `G` are the eigenframes of `ρ` and
/// `ρ′`, `W` is the Schur–Horn rotation and `U₁` the computational-basis dephasing lift.
pub fn construct_noisy_transition(rho: &DensityMatrix, rho_target: &DensityMatrix) -> Result<TransitionPlan> {
    let d = check_square_dims(rho, rho_target)?;
    let (lam, f) = rho.eigen()?;
    let (mu, g) = rho_target.eigen()?;
    let cert = majorizes(&lam, &mu);
    if !cert.holds {
        return Err(cert.to_error());
    }
    let w = schur_horn_rotation(&lam, &mu)?;
    let lift = channels::build_lift(&Basis::computational(d));
    let id = linalg::identity(d);
    let pre = w.matrix() * f.matrix().adjoint();
    let u = linalg::kron(g.matrix(), &id) * &lift.global_unitary * linalg::kron(&pre, &id);

    let (out_a, out_b) = lifted_marginals(&u, rho, d)?;
    let residual_target = qcore::trace_distance(&out_a, rho_target)?;
    let residual_marginal = qcore::trace_distance(&out_b, &DensityMatrix::maximally_mixed(d))?;
    let worst = residual_target.max(residual_marginal);
    if worst > PLAN_TOL {
        return Err(Error::VerificationFailed {
            what: "noisy transition marginals".into(),
            residual: worst,
            tolerance: PLAN_TOL,
        });
    }
    Ok(TransitionPlan {
        source_spectrum: lam,
        target_spectrum: mu,
        catalyst: None,
        ancilla_dims: vec![d],
        global_unitary: u,
        residual_target,
        residual_marginal,
        success_probability: None,
        levels: None,
        warnings: Vec::new(),
    })
}

/// The same transition with a `d²`-dimensional maximally mixed ancilla: `U ⊗ 𝟙_d`
/// acting on `a ⊗ b ⊗ spectator`.
pub fn spectator_form(plan: &TransitionPlan) -> CMatrix {
    let d = plan.ancilla_dims[0];
    linalg::kron(&plan.global_unitary, &linalg::identity(d))
}

/// Permutation of tensor factors: output factor `t` is input factor `order[t]`.
pub fn factor_permutation(dims: &[usize], order: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let out_dims: Vec<usize> = order.iter().map(|&f| dims[f]).collect();
    let mut perm = vec![0usize; total];
    let mut digits = vec![0usize; dims.len()];
    for (idx, slot) in perm.iter_mut().enumerate() {
        let mut rem = idx;
        for f in (0..dims.len()).rev() {
            digits[f] = rem % dims[f];
            rem /= dims[f];
        }
        let mut out = 0;
        for (t, &f) in order.iter().enumerate() {
            out = out * out_dims[t] + digits[f];
        }
        *slot = out;
    }
    linalg::permutation_matrix(&perm)
}

/// Catalyst `τ` on `b′` and unitary `U₂` on `a ⊗ b′` with
/// `tr_b′[U₂(ρ^c ⊗ τ)U₂†] = ρ′` and `D_K(tr_a[U₂(ρ^c ⊗ τ)U₂†]) = τ`.
#[derive(Debug, Clone)]
pub struct CatalystPair {
    pub tau: DensityMatrix,
    pub u2: CMatrix,
    /// Basis `K` in which the catalyst marginal is dephased.
    pub tau_basis: Basis,
}

impl CatalystPair {
    /// Residuals of the two defining identities as trace distances.
    pub fn residuals(&self, rho_c: &DensityMatrix, target: &DensityMatrix) -> Result<(f64, f64)> {
        let (d, k) = (rho_c.dim(), self.tau.dim());
        if self.u2.nrows() != d * k || self.u2.ncols() != d * k {
            return Err(Error::DimensionMismatch {
                expected: d * k,
                found: self.u2.nrows(),
            });
        }
        let joint = qcore::tensor(rho_c, &self.tau).conjugated(&self.u2)?;
        let a = qcore::partial_trace(&joint, (d, k), Subsystem::A)?;
        let b = qcore::partial_trace(&joint, (d, k), Subsystem::B)?;
        let r3 = qcore::trace_distance(&a, target)?;
        let r4 = qcore::trace_distance(&dephase(&b, &self.tau_basis)?, &self.tau)?;
        Ok((r3, r4))
    }
}

/// Supplies a catalyst pair for `(ρ^c, ρ′)`.
pub trait CatalystOracle {
    fn provide(&self, rho_c: &DensityMatrix, rho_target: &DensityMatrix) -> Result<CatalystPair>;
}

/// Uses the majorization construction with `τ = 𝟙/d`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoisyTransitionOracle;

impl CatalystOracle for NoisyTransitionOracle {
    fn provide(&self, rho_c: &DensityMatrix, rho_target: &DensityMatrix) -> Result<CatalystPair> {
        let plan = construct_noisy_transition(rho_c, rho_target)?;
        let d = rho_c.dim();
        Ok(CatalystPair {
            tau: DensityMatrix::maximally_mixed(d),
            u2: plan.global_unitary,
            tau_basis: Basis::computational(d),
        })
    }
}

/// One-dimensional catalyst and identity unitary, valid when `ρ′ = ρ^c`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrivialOracle;

impl CatalystOracle for TrivialOracle {
    fn provide(&self, rho_c: &DensityMatrix, _rho_target: &DensityMatrix) -> Result<CatalystPair> {
        Ok(CatalystPair {
            tau: DensityMatrix::maximally_mixed(1),
            u2: linalg::identity(rho_c.dim()),
            tau_basis: Basis::computational(1),
        })
    }
}

/// Runs [`search_catalyst`].
#[derive(Debug, Clone, Copy)]
pub struct SearchOracle {
    pub dim_catalyst: usize,
    pub iteration_budget: usize,
    pub rng_seed: u64,
}

impl CatalystOracle for SearchOracle {
    fn provide(&self, rho_c: &DensityMatrix, rho_target: &DensityMatrix) -> Result<CatalystPair> {
        search_catalyst(rho_c, rho_target, self.dim_catalyst, self.iteration_budget, self.rng_seed).ok_or_else(|| {
            Error::OracleInvalid(format!(
                "catalyst search found no pair within {} iterations",
                self.iteration_budget
            ))
        })
    }
}

/// Catalytic composition `U = (U₂ ⊗ 𝟙_b)(U₁ ⊗ 𝟙_b′)` with `σ = 𝟙_b/d ⊗ τ`.
///
/// `residual_target` is the distance of `tr_bb′[U(ρ⊗σ)U†]` to `ρ′`;
/// `residual_marginal` the distance of the `J ⊗ K`-dephased `bb′` marginal to `σ`.
pub fn compose_catalytic(
    rho: &DensityMatrix,
    j: &Basis,
    rho_target: &DensityMatrix,
    oracle: &dyn CatalystOracle,
) -> Result<TransitionPlan> {
    let d = check_square_dims(rho, rho_target)?;
    if j.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: j.dim(),
        });
    }
    let rho_c = dephase(rho, j)?;
    let vn = EntropyMeasure::VonNeumann;
    let mut warnings = Vec::new();
    let (s_target, s_c) = (quantum_entropy(rho_target, &vn)?, quantum_entropy(&rho_c, &vn)?);
    if s_target <= s_c {
        warnings.push(format!(
            "entropy condition S(target) > S(dephased source) not met ({s_target:.6} <= {s_c:.6})"
        ));
    }
    let (rank_t, rank_c) = (rho_target.spectrum()?.rank(), rho_c.spectrum()?.rank());
    if rank_t < rank_c {
        warnings.push(format!("rank condition not met ({rank_t} < {rank_c})"));
    }

    let pair = oracle.provide(&rho_c, rho_target)?;
    let (r3, r4) = pair.residuals(&rho_c, rho_target).map_err(|e| Error::OracleInvalid(e.to_string()))?;
    if r3 > PLAN_TOL || r4 > PLAN_TOL {
        return Err(Error::OracleInvalid(format!(
            "marginal residuals {r3:.3e} and {r4:.3e} exceed {PLAN_TOL:.0e}"
        )));
    }
    let k = pair.tau.dim();
    let total = d * d * k;
    if total > MAX_UNITARY_DIM {
        return Err(Error::TooLarge(format!("composed unitary of dimension {total}")));
    }

    let lift = channels::build_lift(j);
    let u1 = linalg::kron(&lift.global_unitary, &linalg::identity(k));
    // U₂ acts on factors (a, b′) of (a, b, b′).
    let swap = factor_permutation(&[d, d, k], &[0, 2, 1]);
    let u2 = swap.transpose() * linalg::kron(&pair.u2, &linalg::identity(d)) * &swap;
    let u = u2 * u1;

    let sigma = qcore::tensor(&DensityMatrix::maximally_mixed(d), &pair.tau);
    let joint = qcore::tensor(rho, &sigma).conjugated(&u)?;
    let dims = [d, d, k];
    let out_a = DensityMatrix::from_matrix_unchecked(linalg::reduce(joint.matrix(), &dims, &[0])?);
    let out_bb = DensityMatrix::from_matrix_unchecked(linalg::reduce(joint.matrix(), &dims, &[1, 2])?);
    let residual_target = qcore::trace_distance(&out_a, rho_target)?;
    let restored = dephase(&out_bb, &j.tensor(&pair.tau_basis))?;
    let residual_marginal = qcore::trace_distance(&restored, &sigma)?;
    let worst = residual_target.max(residual_marginal);
    if worst > PLAN_TOL {
        return Err(Error::VerificationFailed {
            what: "catalytic composition".into(),
            residual: worst,
            tolerance: PLAN_TOL,
        });
    }
    Ok(TransitionPlan {
        source_spectrum: rho.spectrum()?,
        target_spectrum: rho_target.spectrum()?,
        catalyst: Some(sigma),
        ancilla_dims: vec![d, k],
        global_unitary: u,
        residual_target,
        residual_marginal,
        success_probability: None,
        levels: None,
        warnings,
    })
}

/// Polar factor `X Y†` of `m = X Σ Y†`.
fn polar(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

/// Numerical search for a catalyst pair.
///
/// Trivial and majorization cases are answered directly. Otherwise alternate
/// between Riemannian descent on `U₂` (polar retraction, backtracking step) for the
/// squared Hilbert–Schmidt error of both identities, and the fixed-point update
/// `τ ← D_K(tr_a[U₂(ρ^c ⊗ τ)U₂†])`. Returns a pair only if both trace-distance
/// residuals drop below `1e-6`.
pub fn search_catalyst(
    rho_c: &DensityMatrix,
    rho_target: &DensityMatrix,
    dim_catalyst: usize,
    iteration_budget: usize,
    rng_seed: u64,
) -> Option<CatalystPair> {
    const GOAL: f64 = 1e-6;
    let d = rho_c.dim();
    if rho_target.dim() != d || dim_catalyst == 0 {
        return None;
    }
    if qcore::trace_distance(rho_c, rho_target).ok()? < 1e-12 {
        return TrivialOracle.provide(rho_c, rho_target).ok();
    }
    let accept = |pair: CatalystPair| -> Option<CatalystPair> {
        let (r3, r4) = pair.residuals(rho_c, rho_target).ok()?;
        (r3 < GOAL && r4 < GOAL).then_some(pair)
    };
    if dim_catalyst == d {
        if let Ok(pair) = NoisyTransitionOracle.provide(rho_c, rho_target) {
            if let Some(p) = accept(pair) {
                return Some(p);
            }
        }
    }

    let k = dim_catalyst;
    if d * k > 256 {
        return None;
    }
    let kb = Basis::computational(k);
    let mut rng = rng_from_seed(rng_seed);
    let mut u = channels::haar_unitary(d * k, &mut rng);
    let mut tau = DensityMatrix::maximally_mixed(k);

    let objective = |u: &CMatrix, tau: &DensityMatrix| -> Option<(f64, CMatrix)> {
        let m = qcore::tensor(rho_c, tau);
        let x = linalg::conjugate(u, m.matrix());
        let a = linalg::partial_trace_raw(&x, d, k, true).ok()?;
        let b = linalg::partial_trace_raw(&x, d, k, false).ok()?;
        let e1 = a - rho_target.matrix();
        let b_deph = CMatrix::from_diagonal(&b.diagonal());
        let e2 = CMatrix::from_diagonal(&(b_deph - tau.matrix()).diagonal());
        let f = e1.norm_squared() + e2.norm_squared();
        let gamma = linalg::kron(&e1, &linalg::identity(k)) + linalg::kron(&linalg::identity(d), &e2);
        let grad = (gamma * u * m.matrix()) * c(2.0);
        Some((f, grad))
    };

    let mut step = 0.5;
    for it in 0..iteration_budget {
        let (f, grad) = objective(&u, &tau)?;
        if f < 1e-26 {
            break;
        }
        // Riemannian gradient on the unitary group.
        let skew = &grad * u.adjoint() - &u * grad.adjoint();
        let dir = &skew * &u * c(0.5);
        let gnorm = dir.norm_squared();
        let mut moved = false;
        while step > 1e-14 {
            let cand = polar(&(&u - &dir * c(step)));
            if let Some((fc, _)) = objective(&cand, &tau) {
                if fc <= f - 1e-4 * step * gnorm {
                    u = cand;
                    moved = true;
                    step = (step * 2.0).min(4.0);
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            step = 0.5;
            u = polar(&(&u + channels::haar_unitary(d * k, &mut rng) * c(0.05 * rng.random::<f64>())));
        }
        if it % 20 == 19 {
            let joint = qcore::tensor(rho_c, &tau).conjugated(&u).ok()?;
            let b = qcore::partial_trace(&joint, (d, k), Subsystem::B).ok()?;
            tau = dephase(&b, &kb).ok()?;
            let pair = CatalystPair {
                tau: tau.clone(),
                u2: u.clone(),
                tau_basis: kb.clone(),
            };
            if let Some(p) = accept(pair) {
                return Some(p);
            }
        }
    }
    accept(CatalystPair {
        tau,
        u2: u,
        tau_basis: kb,
    })
}

/// Source of a (possibly infinite) nonincreasing spectrum `k ↦ p_k`.
pub trait SpectrumStream {
    fn prob(&self, k: usize) -> f64;
}

impl<F: Fn(usize) -> f64> SpectrumStream for F {
    fn prob(&self, k: usize) -> f64 {
        self(k)
    }
}

impl SpectrumStream for Distribution {
    fn prob(&self, k: usize) -> f64 {
        self.probs().get(k).copied().unwrap_or(0.0)
    }
}

/// Geometric stream `p_k = (1 − r) r^k`.
pub fn geometric_stream(r: f64) -> impl Fn(usize) -> f64 + Copy {
    move |k| (1.0 - r) * r.powi(k as i32)
}

fn kept_levels(s: &dyn SpectrumStream, bound: f64) -> Option<(usize, f64)> {
    let mut acc = 0.0;
    for n in 1..=TRUNCATION_CAP {
        acc += s.prob(n - 1);
        if 1.0 - acc < bound {
            return Some((n, acc));
        }
    }
    None
}

/// Approximate transition between infinite spectra by truncation.
///
/// Keeps the first `n` levels, where `n` is the smallest count with both tails below
/// `ε/4`, renormalizes, and runs the exact constructor (or, if majorization fails and
/// an oracle is given, the catalytic composition). Residuals refer to the untruncated
/// states with the unitary acting as the identity on the discarded levels.
pub fn approx_transition_truncated(
    p_stream: &dyn SpectrumStream,
    q_stream: &dyn SpectrumStream,
    epsilon: f64,
    oracle: Option<&dyn CatalystOracle>,
) -> Result<TransitionPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::BadParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let bound = epsilon / 4.0;
    let tail_err = || Error::TailNotSummable {
        target: bound,
        cap: TRUNCATION_CAP,
    };
    let (np, _) = kept_levels(p_stream, bound).ok_or_else(tail_err)?;
    let (nq, _) = kept_levels(q_stream, bound).ok_or_else(tail_err)?;
    let n = np.max(nq);
    if n * n > MAX_UNITARY_DIM {
        return Err(Error::TooLarge(format!("{n} kept levels need a unitary of dimension {}", n * n)));
    }
    let p: Vec<f64> = (0..n).map(|k| p_stream.prob(k)).collect();
    let q: Vec<f64> = (0..n).map(|k| q_stream.prob(k)).collect();
    let mass_p: f64 = p.iter().sum();
    let pt = Distribution::normalized(p.clone())?;
    let qt = Distribution::normalized(q.clone())?;
    let rho = DensityMatrix::from_diagonal(pt.probs())?;
    let target = DensityMatrix::from_diagonal(qt.probs())?;

    let cert = majorizes(&pt, &qt);
    let mut plan = if cert.holds {
        construct_noisy_transition(&rho, &target)?
    } else if let Some(o) = oracle {
        compose_catalytic(&rho, &Basis::computational(n), &target, o)?
    } else {
        return Err(cert.to_error());
    };

    // Kept-block output weighted by its mass.
    let anc: usize = plan.ancilla_dims.iter().product();
    let sigma = plan
        .catalyst
        .clone()
        .unwrap_or_else(|| DensityMatrix::maximally_mixed(anc));
    let joint = qcore::tensor(&rho, &sigma).conjugated(&plan.global_unitary)?;
    let out_a = qcore::partial_trace(&joint, (n, anc), Subsystem::A)?;
    let out_b = qcore::partial_trace(&joint, (n, anc), Subsystem::B)?;
    let block = out_a.matrix() * c(mass_p) - linalg::from_real_diagonal(&q);
    let mut residual_target = 2.0 * linalg::half_trace_norm(&block)?;
    let mut k = n;
    let (mut tail_p, mut tail_q) = (1.0 - mass_p, 1.0 - q.iter().sum::<f64>());
    while k < TRUNCATION_CAP && (tail_p > 1e-17 || tail_q > 1e-17) {
        let (a, b) = (p_stream.prob(k), q_stream.prob(k));
        residual_target += (a - b).abs();
        tail_p -= a;
        tail_q -= b;
        k += 1;
    }
    residual_target = 0.5 * (residual_target + tail_p.max(0.0) + tail_q.max(0.0));

    let marg = out_b.matrix() * c(mass_p) + sigma.matrix() * c(1.0 - mass_p);
    let marg = DensityMatrix::from_matrix_unchecked(marg);
    let residual_marginal = match &plan.catalyst {
        None => qcore::trace_distance(&marg, &sigma)?,
        Some(_) => mass_p * plan.residual_marginal,
    };
    plan.residual_target = residual_target;
    plan.residual_marginal = residual_marginal;
    plan.levels = Some(n);
    if residual_target >= epsilon || residual_marginal >= epsilon {
        return Err(Error::VerificationFailed {
            what: "truncated transition".into(),
            residual: residual_target.max(residual_marginal),
            tolerance: epsilon,
        });
    }
    Ok(plan)
}

fn partial_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Spectrum of the block target `p·μ ⊕ ((1−p)/k)·𝟙_k`.
fn block_spectrum(mu: &[f64], p: f64, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = mu.iter().map(|x| p * x).collect();
    v.extend(std::iter::repeat_n((1.0 - p) / k as f64, k));
    v
}

/// `min_r (Λ_r − M̂_r(p))` for the padded source against the block target.
fn block_gap(lam: &[f64], mu: &[f64], p: f64, k: usize) -> f64 {
    let mut src = lam.to_vec();
    src.resize(lam.len() + k, 0.0);
    let mut tgt = block_spectrum(mu, p, k);
    tgt.sort_by(|a, b| b.total_cmp(a));
    partial_sums(&src)
        .iter()
        .zip(partial_sums(&tgt))
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form largest `p` such that the source majorizes the block target with `k`
/// padding levels: the top-`r` sum of the block is `max_s p·M_{r−s} + s(1−p)/k`, so
/// each `(r, s)` gives one linear bound on `p`. Returns `None` if no `p ∈ [0,1]` works.
pub fn probabilistic_bound(lam: &Distribution, mu: &Distribution, k: usize) -> Option<f64> {
    let ls = lam.sorted_desc();
    let ms = mu.padded(ls.len()).sorted_desc();
    let d = ls.len().max(ms.len());
    let big_l = partial_sums(&lam.padded(d + k).sorted_desc());
    let big_m = {
        let mut v = vec![0.0];
        v.extend(partial_sums(&ms));
        v
    };
    let kf = k as f64;
    let (mut lo, mut best): (f64, f64) = (0.0, 1.0);
    for r in 1..=(d + k) {
        for s in 0..=r.min(k) {
            let t = r - s;
            if t > d {
                continue;
            }
            let coef = big_m[t] - s as f64 / kf;
            let rhs = big_l[r - 1] - s as f64 / kf;
            if coef > MAJORIZATION_TOL {
                best = best.min(rhs / coef);
            } else if coef < -MAJORIZATION_TOL {
                lo = lo.max(rhs / coef);
            } else if rhs < -MAJORIZATION_TOL {
                return None;
            }
        }
    }
    (best >= lo - MAJORIZATION_TOL).then_some(best.clamp(0.0, 1.0))
}

/// `min_r Λ_r / M_r`, the bound approached as the padding grows.
pub fn probabilistic_bound_limit(lam: &Distribution, mu: &Distribution) -> f64 {
    let n = lam.len().max(mu.len());
    let big_l = partial_sums(&lam.padded(n).sorted_desc());
    let big_m = partial_sums(&mu.padded(n).sorted_desc());
    big_l
        .iter()
        .zip(&big_m)
        .filter(|(_, &m)| m > 0.0)
        .map(|(l, m)| l / m)
        .fold(1.0, f64::min)
}

/// Largest feasible `p` for padding `k`, by maximizing the concave gap and bisecting
/// toward `p = 1`.
fn max_feasible_p(lam: &[f64], mu: &[f64], k: usize) -> Option<f64> {
    let tol = -1e-14;
    if block_gap(lam, mu, 1.0, k) >= tol {
        return Some(1.0);
    }
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if block_gap(lam, mu, m1, k) < block_gap(lam, mu, m2, k) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let peak = 0.5 * (a + b);
    if block_gap(lam, mu, peak, k) < tol {
        return None;
    }
    let (mut lo, mut hi) = (peak, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if block_gap(lam, mu, mid, k) >= tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Probabilistic conversion `ρ → ρ′` through the block target
/// `ρ̂ = p ρ′ ⊕ ((1−p)/k) 𝟙_k` on `d + k` levels.
///
/// The exact constructor maps the padded source to `ρ̂`; projecting onto the first
/// `d` levels succeeds with probability `p` and leaves `ρ′`, which a dephasing lift
/// in `ρ′`'s eigenbasis with a fresh `d`-level ancilla then certifies. With
/// `k = None` the smallest padding with `d + k ≤ 16` attaining the largest `p` is used.
pub fn probabilistic_conversion(
    rho: &DensityMatrix,
    rho_target: &DensityMatrix,
    k: Option<usize>,
) -> Result<TransitionPlan> {
    let d = rho.dim();
    if rho_target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho_target.dim(),
        });
    }
    let lam = rho.spectrum()?;
    let (mu, g) = rho_target.eigen()?;
    let k = match k {
        Some(0) => return Err(Error::BadParameter("padding size k must be positive".into())),
        Some(k) => k,
        None => {
            let mut best: Option<(usize, f64)> = None;
            for k in 1..=AUTO_BLOCK_CAP.saturating_sub(d).max(1) {
                if let Some(p) = max_feasible_p(lam.probs(), mu.probs(), k) {
                    if best.is_none_or(|(_, bp)| p > bp + 1e-12) {
                        best = Some((k, p));
                    }
                }
            }
            best.map_or(d, |(k, _)| k)
        }
    };
    let big = d + k;
    if big * big > MAX_UNITARY_DIM {
        return Err(Error::TooLarge(format!("block dimension {big} is too large")));
    }
    let p = max_feasible_p(lam.probs(), mu.probs(), k).unwrap_or(0.0);
    if p <= 0.0 {
        return Err(Error::NotMajorized { index: 1, gap: block_gap(lam.probs(), mu.probs(), 0.0, k) });
    }

    let pad = |m: &CMatrix| linalg::direct_sum(m, &CMatrix::zeros(k, k));
    let rho_pad = DensityMatrix::from_matrix_unchecked(pad(rho.matrix()));
    let g_pad = linalg::direct_sum(g.matrix(), &linalg::identity(k));
    let block = linalg::from_real_diagonal(&block_spectrum(mu.probs(), p, k));
    let rho_hat = DensityMatrix::from_matrix_unchecked(linalg::conjugate(&g_pad, &block));
    let plan = construct_noisy_transition(&rho_pad, &rho_hat)?;

    let (out_a, _) = lifted_marginals(&plan.global_unitary, &rho_pad, big)?;
    let proj = out_a.matrix().view((0, 0), (d, d)).into_owned();
    let success = linalg::trace(&proj).re;
    let post = DensityMatrix::from_matrix_unchecked(proj * c(1.0 / success));
    let lift = channels::build_lift(&g);
    let final_joint = qcore::tensor(&post, &DensityMatrix::maximally_mixed(d)).conjugated(&lift.global_unitary)?;
    let final_a = qcore::partial_trace(&final_joint, (d, d), Subsystem::A)?;
    let final_b = qcore::partial_trace(&final_joint, (d, d), Subsystem::B)?;
    let residual_target = qcore::trace_distance(&final_a, rho_target)?;
    let residual_marginal = plan
        .residual_marginal
        .max(qcore::trace_distance(&final_b, &DensityMatrix::maximally_mixed(d))?);
    let worst = residual_target.max(residual_marginal);
    if worst > PLAN_TOL {
        return Err(Error::VerificationFailed {
            what: "probabilistic conversion".into(),
            residual: worst,
            tolerance: PLAN_TOL,
        });
    }
    Ok(TransitionPlan {
        source_spectrum: lam,
        target_spectrum: mu,
        catalyst: None,
        ancilla_dims: vec![big, d],
        global_unitary: plan.global_unitary,
        residual_target,
        residual_marginal,
        success_probability: Some(success),
        levels: Some(k),
        warnings: plan.warnings,
    })
}
