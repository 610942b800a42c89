//! Maximum-entropy estimation of a spectrum `p` from dephased observations
//! `q_j = Σ_i p_i α_ij`.
//!
//! Three solvers are provided:
//! * [`solve_maxent_relaxed`] collapses the observations into the single
//!   constraint `Σ_i p_i α'_i = m'` with `α'_i = Σ_j α_ij / q_j` and solves it with the
//!   closed-form Gibbs (von Neumann) or generalized-Pareto (Renyi/Tsallis) family.
//! * [`solve_maxent_full`] maximizes the entropy subject to every constraint.
//! * [`brute_force_maxent`] is a grid-plus-zoom oracle for small problems.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::entropy::{entropy_of, EntropyMeasure, LogBase};
use crate::error::{Error, Result};
use crate::qcore::{Basis, Distribution};

/// Observed probabilities at or below this are treated as zero.
pub const ZERO_Q: f64 = 1e-15;
/// Variables whose largest feasible value is below this are fixed at zero.
const FACE_EPS: f64 = 1e-10;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_RESOLUTION: usize = 400;

#[derive(Debug, Clone)]
pub struct MaxEntProblem {
    q: Distribution,
    alpha: DMatrix<f64>,
    measure: EntropyMeasure,
}

impl MaxEntProblem {
    /// `alpha[i][j]`: row `i` is the latent (eigen) index, column `j` the observed outcome.
    pub fn new(q: Distribution, alpha: Vec<Vec<f64>>, measure: EntropyMeasure) -> Result<Self> {
        let n = alpha.len();
        let m = alpha.first().map_or(0, Vec::len);
        if n == 0 || alpha.iter().any(|r| r.len() != m) {
            return Err(Error::BadInput("alpha must be a non-empty rectangle".into()));
        }
        let flat: Vec<f64> = alpha.into_iter().flatten().collect();
        Self::from_matrix(q, DMatrix::from_row_slice(n, m, &flat), measure)
    }

    pub fn from_matrix(q: Distribution, alpha: DMatrix<f64>, measure: EntropyMeasure) -> Result<Self> {
        measure.validate()?;
        if matches!(measure, EntropyMeasure::Generalized(_)) {
            return Err(Error::BadParameter(
                "max-entropy solvers support von Neumann, Renyi and Tsallis measures".into(),
            ));
        }
        if alpha.ncols() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                found: alpha.ncols(),
            });
        }
        if alpha.iter().any(|&a| !a.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&a)) {
            return Err(Error::BadInput("alpha entries must lie in [0, 1]".into()));
        }
        for (i, row) in alpha.row_iter().enumerate() {
            if row.sum() > 1.0 + 1e-9 {
                return Err(Error::BadInput(format!("alpha row {i} sums to more than 1")));
            }
        }
        let alpha = alpha.map(|a| a.clamp(0.0, 1.0));
        Ok(Self { q, alpha, measure })
    }

    /// Overlaps `α_ij = |⟨φ_i|ψ_j⟩|²` between a latent frame and the first `m` observed vectors.
    pub fn from_overlaps(latent: &Basis, observed: &Basis, m: usize, q: Distribution, measure: EntropyMeasure) -> Result<Self> {
        let n = latent.dim();
        if observed.dim() != n || m > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: observed.dim(),
            });
        }
        let ov = latent.matrix().adjoint() * observed.matrix();
        let alpha = DMatrix::from_fn(n, m, |i, j| ov[(i, j)].norm_sqr());
        Self::from_matrix(q, alpha, measure)
    }

    pub fn n(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn m(&self) -> usize {
        self.alpha.ncols()
    }

    pub fn q(&self) -> &Distribution {
        &self.q
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn measure(&self) -> &EntropyMeasure {
        &self.measure
    }

    /// `Σ_i p_i α_ij − q_j` for every observed outcome.
    pub fn constraint_residuals(&self, p: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|j| (0..self.n()).map(|i| p[i] * self.alpha[(i, j)]).sum::<f64>() - self.q.probs()[j])
            .collect()
    }

    fn retained_columns(&self) -> Vec<usize> {
        (0..self.m()).filter(|&j| self.q.probs()[j] > ZERO_Q).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxEntSolution {
    pub p: Distribution,
    /// Relaxed solver: `(γ₁, γ₂)`. Full solver: `(γ₀, γ_1, …, γ_m)` with
    /// `γ₀` the normalization multiplier; dropped outcomes get 0.
    pub multipliers: Vec<f64>,
    /// Entropy of `p` (bits, except Tsallis which is unitless).
    pub objective: f64,
    pub converged: bool,
    /// `Σ_i p_i α_ij − q_j` for every observed outcome.
    pub residuals: Vec<f64>,
    /// Residual of the single collapsed constraint (relaxed solver only).
    pub relaxed_residual: Option<f64>,
    /// Largest deviation of `ln p_i` from the fitted Gibbs exponent (von Neumann, full solver).
    pub gibbs_residual: Option<f64>,
}

impl MaxEntSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

/// Concave objective used internally, in natural units.
#[derive(Debug, Clone, Copy)]
enum Family {
    Shannon,
    /// Tsallis `(Σ p^a − 1)/(1 − a)`; shares maximizers with Renyi.
    Power(f64),
}

impl Family {
    fn of(m: &EntropyMeasure) -> Family {
        match m {
            EntropyMeasure::Renyi { alpha } => Family::Power(*alpha),
            EntropyMeasure::Tsallis { q } => Family::Power(*q),
            _ => Family::Shannon,
        }
    }

    fn value(self, p: &[f64]) -> f64 {
        match self {
            Family::Shannon => -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>(),
            Family::Power(a) => (p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(a)).sum::<f64>() - 1.0) / (1.0 - a),
        }
    }

    fn grad(self, x: f64) -> f64 {
        match self {
            Family::Shannon => -x.ln() - 1.0,
            Family::Power(a) => a * x.powf(a - 1.0) / (1.0 - a),
        }
    }

    fn hess(self, x: f64) -> f64 {
        match self {
            Family::Shannon => -1.0 / x,
            Family::Power(a) => -a * x.powf(a - 2.0),
        }
    }
}

fn report_objective(p: &[f64], m: &EntropyMeasure) -> Result<f64> {
    entropy_of(p, m, LogBase::Two)
}

// ---------------------------------------------------------------------------
// Relaxed closed-form solver

/// Closed-form solver of the collapsed single-constraint problem.
///
/// von Neumann: `p_i ∝ exp(−γ α'_i)`. Renyi/Tsallis with parameter `a`:
/// `p_i ∝ [1 + γ(1−a) α'_i]_+^{1/(a−1)}`, which tends to the Gibbs form as `a → 1`.
/// `γ` is found by bracketing and bisection of the constraint
/// `Σ p_i α'_i = m'`, where `m'` is the number of outcomes with `q_j > 0`.
pub fn solve_maxent_relaxed(prob: &MaxEntProblem) -> Result<MaxEntSolution> {
    let cols = prob.retained_columns();
    if cols.is_empty() {
        return Err(Error::DegenerateQ);
    }
    let n = prob.n();
    let target = cols.len() as f64;
    let a_prime: Vec<f64> = (0..n)
        .map(|i| cols.iter().map(|&j| prob.alpha[(i, j)] / prob.q.probs()[j]).sum())
        .collect();
    let family = Family::of(&prob.measure);

    let max_a = a_prime.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_a = a_prime.iter().cloned().fold(f64::INFINITY, f64::min);

    // log-weights for a given γ; None outside the family's domain
    let log_weights = |gamma: f64| -> Option<Vec<f64>> {
        match family {
            Family::Shannon => Some(a_prime.iter().map(|&a| -gamma * a).collect()),
            Family::Power(s) => {
                let mut out = Vec::with_capacity(n);
                for &a in &a_prime {
                    let b = 1.0 + gamma * (1.0 - s) * a;
                    if b <= 0.0 {
                        if s < 1.0 {
                            return None;
                        }
                        out.push(f64::NEG_INFINITY);
                    } else {
                        out.push(b.ln() / (s - 1.0));
                    }
                }
                if out.iter().all(|x| *x == f64::NEG_INFINITY) {
                    return None;
                }
                Some(out)
            }
        }
    };
    let softmax = |lw: &[f64]| -> (Vec<f64>, f64) {
        let mx = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|&x| (x - mx).exp()).collect();
        let z: f64 = w.iter().sum();
        (w.iter().map(|x| x / z).collect(), mx + z.ln())
    };
    let eval = |gamma: f64| -> Option<(f64, Vec<f64>, f64)> {
        let lw = log_weights(gamma)?;
        let (p, log_z) = softmax(&lw);
        let f = p.iter().zip(&a_prime).map(|(p, a)| p * a).sum::<f64>() - target;
        f.is_finite().then_some((f, p, log_z))
    };

    let finish = |gamma: f64, p: Vec<f64>, log_z: f64, relaxed: f64, converged: bool| -> Result<MaxEntSolution> {
        let residuals = prob.constraint_residuals(&p);
        let objective = report_objective(&p, &prob.measure)?;
        Ok(MaxEntSolution {
            p: Distribution::normalized(p)?,
            multipliers: vec![log_z, gamma],
            objective,
            converged,
            residuals,
            relaxed_residual: Some(relaxed),
            gibbs_residual: None,
        })
    };

    let scale = target.max(1.0);
    if max_a - min_a <= 1e-12 * max_a.max(1.0) {
        let f = a_prime[0] - target;
        if f.abs() <= 1e-9 * scale {
            return finish(0.0, vec![1.0 / n as f64; n], (n as f64).ln(), f, true);
        }
        return Err(Error::NoBracket(format!(
            "all collapsed coefficients equal {:.6} but the constraint needs {target}",
            a_prime[0]
        )));
    }

    let (lo_edge, hi_edge) = match family {
        Family::Shannon => (f64::NEG_INFINITY, f64::INFINITY),
        Family::Power(s) if s < 1.0 => (-1.0 / ((1.0 - s) * max_a), f64::INFINITY),
        Family::Power(s) => (
            f64::NEG_INFINITY,
            if min_a > 0.0 { 1.0 / ((s - 1.0) * min_a) } else { f64::INFINITY },
        ),
    };
    let probes = |edge: f64, toward_negative: bool| -> Vec<f64> {
        let mut v = vec![0.0];
        for k in 0..64 {
            let g = if edge.is_finite() {
                let off = edge.abs().max(1e-300) * 2f64.powi(-(k + 1));
                if toward_negative {
                    edge + off
                } else {
                    edge - off
                }
            } else {
                let mag = 2f64.powi(k - 4);
                if toward_negative {
                    -mag
                } else {
                    mag
                }
            };
            v.push(g);
        }
        v
    };
    // f is decreasing in γ: look for f > 0 toward the lower edge, f < 0 toward the upper edge.
    let mut lo = None;
    for g in probes(lo_edge, true) {
        if let Some((f, ..)) = eval(g) {
            if f > 0.0 {
                lo = Some(g);
                break;
            }
            if f == 0.0 {
                let (_, p, lz) = eval(g).expect("evaluated above");
                return finish(g, p, lz, 0.0, true);
            }
        }
    }
    let mut hi = None;
    for g in probes(hi_edge, false) {
        if let Some((f, ..)) = eval(g) {
            if f < 0.0 {
                hi = Some(g);
                break;
            }
        }
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (Some(l), Some(h)) if l < h => (l, h),
        _ => {
            return Err(Error::NoBracket(format!(
                "constraint value {target} lies outside the range reachable by the {} family",
                prob.measure.label()
            )))
        }
    };
    let mut best = eval(lo).expect("bracket end is valid");
    let mut gamma = lo;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let Some(val) = eval(mid) else { break };
        gamma = mid;
        let f = val.0;
        best = val;
        if f.abs() <= 1e-13 * scale {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f, p, log_z) = best;
    finish(gamma, p, log_z, f, f.abs() <= 1e-10 * scale)
}

// ---------------------------------------------------------------------------
// Linear-algebra helpers

/// The affine set `{x : A x = b}` in particular-plus-null-space form.
struct Affine {
    particular: DVector<f64>,
    null: DMatrix<f64>,
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
    inconsistency: f64,
}

fn affine(a: &DMatrix<f64>, b: &DVector<f64>) -> Affine {
    let (r, n) = a.shape();
    let big = r.max(n);
    let mut padded = DMatrix::zeros(big, n);
    padded.view_mut((0, 0), (r, n)).copy_from(a);
    let mut bp = DVector::zeros(big);
    bp.rows_mut(0, r).copy_from(b);
    let svd = padded.svd(true, true);
    let u = svd.u.as_ref().expect("requested");
    let v_t = svd.v_t.as_ref().expect("requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thresh = 1e-10 * smax.max(1.0);
    let mut particular = DVector::zeros(n);
    let mut null_cols = Vec::new();
    let mut row_list = Vec::new();
    let mut rhs_list = Vec::new();
    for k in 0..n {
        let s = svd.singular_values[k];
        let v = v_t.row(k).transpose();
        if s > thresh {
            let coef = u.column(k).dot(&bp);
            particular += &v * (coef / s);
            row_list.push(v.transpose() * s);
            rhs_list.push(coef);
        } else {
            null_cols.push(v);
        }
    }
    let null = if null_cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&null_cols)
    };
    let rows = if row_list.is_empty() {
        DMatrix::zeros(0, n)
    } else {
        DMatrix::from_rows(&row_list)
    };
    let inconsistency = (a * &particular - b).amax();
    Affine {
        particular,
        null,
        rows,
        rhs: DVector::from_vec(rhs_list),
        inconsistency,
    }
}

impl Affine {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.particular;
        &self.particular + &self.null * (self.null.transpose() * d)
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().cloned().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Accelerated projected gradient for `min ½‖αᵀp − q‖²` over the simplex; returns the
/// minimizer and its largest constraint violation.
fn min_violation(alpha: &DMatrix<f64>, q: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = alpha.nrows();
    let at = alpha.transpose();
    let lip = {
        let s = alpha.singular_values();
        let m = s.iter().cloned().fold(0.0, f64::max);
        (m * m).max(1e-12)
    };
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let g = alpha * (&at * &y - q);
        let x_next = project_simplex(&(&y - g / lip));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
    }
    let v = (&at * &x - q).amax();
    (x, v)
}

fn lp_base(rows: &DMatrix<f64>, rhs: &DVector<f64>, objective: &[f64], extra_t: bool) -> Option<(Vec<f64>, f64)> {
    let n = rows.ncols();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..n).map(|i| lp.add_var(objective[i], (0.0, 1.0))).collect();
    let t = extra_t.then(|| lp.add_var(1.0, (0.0, 1.0)));
    for r in 0..rows.nrows() {
        let expr: Vec<_> = (0..n).map(|i| (vars[i], rows[(r, i)])).collect();
        lp.add_constraint(expr, ComparisonOp::Eq, rhs[r]);
    }
    if let Some(t) = t {
        for &v in &vars {
            lp.add_constraint([(v, 1.0), (t, -1.0)], ComparisonOp::Ge, 0.0);
        }
    }
    let sol = lp.solve().ok()?;
    let x: Vec<f64> = vars.iter().map(|&v| *sol.var_value(v)).collect();
    let tv = t.map_or(0.0, |t| *sol.var_value(t));
    Some((x, tv))
}

/// Maximize `family + μ Σ ln p` over `x0 + N z`, keeping `p > 0`.
fn newton_on_affine(family: Family, x0: &DVector<f64>, null: &DMatrix<f64>, mu: f64) -> (DVector<f64>, bool) {
    let k = null.ncols();
    let value = |p: &DVector<f64>| -> f64 {
        let s = p.as_slice();
        family.value(s) + if mu > 0.0 { mu * s.iter().map(|x| x.ln()).sum::<f64>() } else { 0.0 }
    };
    let mut p = x0.clone();
    if k == 0 {
        return (p, true);
    }
    let mut converged = false;
    for _ in 0..500 {
        let g_full = p.map(|x| family.grad(x) + if mu > 0.0 { mu / x } else { 0.0 });
        let h_full = p.map(|x| family.hess(x) - if mu > 0.0 { mu / (x * x) } else { 0.0 });
        let g = null.transpose() * &g_full;
        let mut neg_h = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v: f64 = (0..p.len()).map(|i| -h_full[i] * null[(i, a)] * null[(i, b)]).sum();
                neg_h[(a, b)] = v;
                neg_h[(b, a)] = v;
            }
        }
        let d = match neg_h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => match neg_h.svd(true, true).solve(&g, 1e-300) {
                Ok(d) => d,
                Err(_) => break,
            },
        };
        let decrement = g.dot(&d);
        if !decrement.is_finite() {
            break;
        }
        if decrement < 1e-24 {
            converged = true;
            break;
        }
        let dir = null * &d;
        let f0 = value(&p);
        let mut t = 1.0;
        // stay strictly inside the positive orthant
        for i in 0..p.len() {
            if dir[i] < 0.0 {
                t = f64::min(t, 0.99 * p[i] / -dir[i]);
            }
        }
        let mut moved = false;
        while t > 1e-18 {
            let cand = &p + &dir * t;
            if cand.iter().all(|&x| x > 0.0) && value(&cand) >= f0 + 0.25 * t * decrement {
                p = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            converged = decrement < 1e-16;
            break;
        }
    }
    (p, converged)
}

// ---------------------------------------------------------------------------
// Full solver

fn least_squares_multipliers(
    prob: &MaxEntProblem,
    support: &[usize],
    cols: &[usize],
    target: &[f64],
) -> (Vec<f64>, f64) {
    let rows = support.len();
    let x = DMatrix::from_fn(rows, cols.len() + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            prob.alpha[(support[r], cols[c - 1])]
        }
    });
    let y = DVector::from_iterator(rows, target.iter().cloned());
    let sol = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(cols.len() + 1));
    let resid = (&x * &sol - &y).amax();
    let mut out = vec![0.0; prob.m() + 1];
    out[0] = sol[0];
    for (c, &j) in cols.iter().enumerate() {
        out[j + 1] = sol[c + 1];
    }
    (out, resid)
}

fn infeasible(prob: &MaxEntProblem) -> Error {
    let q = DVector::from_column_slice(prob.q.probs());
    let (_, violation) = min_violation(&prob.alpha, &q);
    Error::Infeasible { violation }
}

/// Maximize the entropy over the simplex subject to every observation constraint.
///
/// Outcomes with `q_j = 0` force `p_i = 0` wherever `α_ij > 0`. A linear program
/// then finds a relative-interior point (fixing any further variables that must
/// vanish), and Newton's method runs in null-space coordinates of the equality
/// system. For von Neumann the optimum has the Gibbs form
/// `p_i ∝ exp(−Σ_j γ_j α_ij)`; Renyi and Tsallis share a maximizer and are
/// solved through the Tsallis objective with a vanishing log barrier.
pub fn solve_maxent_full(prob: &MaxEntProblem, tol: f64) -> Result<MaxEntSolution> {
    let n = prob.n();
    let q = prob.q.probs();
    let cols = prob.retained_columns();
    let mut forced = vec![false; n];
    for j in 0..prob.m() {
        if q[j] <= ZERO_Q {
            for (i, f) in forced.iter_mut().enumerate() {
                if prob.alpha[(i, j)] > 0.0 {
                    *f = true;
                }
            }
        }
    }

    let system = |support: &[usize]| -> Affine {
        let r = cols.len() + 1;
        let a = DMatrix::from_fn(r, support.len(), |row, c| {
            if row == cols.len() {
                1.0
            } else {
                prob.alpha[(support[c], cols[row])]
            }
        });
        let b = DVector::from_fn(r, |row, _| if row == cols.len() { 1.0 } else { q[cols[row]] });
        affine(&a, &b)
    };

    let mut support: Vec<usize> = (0..n).filter(|&i| !forced[i]).collect();
    if support.is_empty() {
        return Err(infeasible(prob));
    }
    let mut aff = system(&support);
    if aff.inconsistency > tol {
        return Err(infeasible(prob));
    }

    // Relative-interior point via LP, with facial reduction.
    let x0: DVector<f64> = if aff.null.ncols() == 0 {
        aff.particular.clone()
    } else {
        let zeros = vec![0.0; support.len()];
        let (x, t) = lp_base(&aff.rows, &aff.rhs, &zeros, true).ok_or_else(|| infeasible(prob))?;
        if t > FACE_EPS {
            DVector::from_vec(x)
        } else {
            let mut keep = Vec::new();
            let mut acc = vec![0.0; support.len()];
            for idx in 0..support.len() {
                let mut obj = vec![0.0; support.len()];
                obj[idx] = 1.0;
                let (xi, _) = lp_base(&aff.rows, &aff.rhs, &obj, false).ok_or_else(|| infeasible(prob))?;
                if xi[idx] > FACE_EPS {
                    keep.push(idx);
                    for (a, v) in acc.iter_mut().zip(&xi) {
                        *a += v;
                    }
                }
            }
            if keep.is_empty() {
                return Err(infeasible(prob));
            }
            let count = keep.len() as f64;
            let x_kept: Vec<f64> = keep.iter().map(|&i| acc[i] / count).collect();
            support = keep.iter().map(|&i| support[i]).collect();
            aff = system(&support);
            if aff.inconsistency > tol {
                return Err(infeasible(prob));
            }
            DVector::from_vec(x_kept)
        }
    };
    let x0 = if aff.null.ncols() == 0 {
        aff.particular.clone()
    } else {
        aff.project(&x0)
    };
    if x0.iter().any(|&x| x < -tol) {
        return Err(infeasible(prob));
    }

    let family = Family::of(&prob.measure);
    let (p_s, converged) = if aff.null.ncols() == 0 || x0.iter().any(|&x| x <= 0.0) {
        (x0.map(|x| x.max(0.0)), true)
    } else {
        match family {
            Family::Power(a) if a > 1.0 => {
                let mut x = x0;
                let mut ok = true;
                let mut mu = 1e-3;
                while mu >= 1e-16 {
                    let (next, c) = newton_on_affine(family, &x, &aff.null, mu);
                    x = next;
                    ok = c;
                    mu *= 0.1;
                }
                (x, ok)
            }
            _ => newton_on_affine(family, &x0, &aff.null, 0.0),
        }
    };

    let mut p = vec![0.0; n];
    for (k, &i) in support.iter().enumerate() {
        p[i] = p_s[k].max(0.0);
    }
    let residuals = prob.constraint_residuals(&p);
    let worst = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if worst > tol.max(1e-8) {
        return Err(infeasible(prob));
    }

    let (multipliers, gibbs_residual) = match family {
        Family::Shannon => {
            let target: Vec<f64> = support.iter().map(|&i| -p[i].ln()).collect();
            let (m, r) = least_squares_multipliers(prob, &support, &cols, &target);
            (m, Some(r))
        }
        Family::Power(_) => {
            let target: Vec<f64> = support.iter().map(|&i| family.grad(p[i])).collect();
            (least_squares_multipliers(prob, &support, &cols, &target).0, None)
        }
    };
    let objective = report_objective(&p, &prob.measure)?;
    Ok(MaxEntSolution {
        p: Distribution::normalized(p)?,
        multipliers,
        objective,
        converged,
        residuals,
        relaxed_residual: None,
        gibbs_residual,
    })
}

// ---------------------------------------------------------------------------
// Brute-force oracle

/// `Σ_i coeffs_i p_i = rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

const ORACLE_MAX_N: usize = 4;

fn for_each_composition(total: usize, parts: usize, buf: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        buf.push(total);
        visit(buf);
        buf.pop();
        return;
    }
    for k in 0..=total {
        buf.push(k);
        for_each_composition(total - k, parts - 1, buf, visit);
        buf.pop();
    }
}

/// Exhaustive simplex grid restricted to the constraint slab (width = grid step),
/// followed by projection onto the constraint set and a zooming grid search in
/// null-space coordinates.
pub fn brute_force_constrained(
    n: usize,
    constraints: &[LinearConstraint],
    measure: &EntropyMeasure,
    resolution: usize,
) -> Result<MaxEntSolution> {
    if n > ORACLE_MAX_N {
        return Err(Error::TooLarge(format!("oracle supports n <= {ORACLE_MAX_N}, got {n}")));
    }
    if n == 0 || resolution == 0 {
        return Err(Error::BadParameter("need n >= 1 and a positive resolution".into()));
    }
    if constraints.iter().any(|c| c.coeffs.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: constraints.iter().map(|c| c.coeffs.len()).find(|&l| l != n).unwrap_or(0),
        });
    }
    measure.validate()?;
    let family = Family::of(measure);
    let step = 1.0 / resolution as f64;

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut p = vec![0.0; n];
    for_each_composition(resolution, n, &mut Vec::with_capacity(n), &mut |counts| {
        for (x, &c) in p.iter_mut().zip(counts) {
            *x = c as f64 * step;
        }
        let in_slab = constraints
            .iter()
            .all(|c| (c.coeffs.iter().zip(&p).map(|(a, x)| a * x).sum::<f64>() - c.rhs).abs() <= step);
        if in_slab {
            let v = family.value(&p);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, p.clone()));
            }
        }
    });

    let r = constraints.len() + 1;
    let a = DMatrix::from_fn(r, n, |row, i| if row == constraints.len() { 1.0 } else { constraints[row].coeffs[i] });
    let b = DVector::from_fn(r, |row, _| if row == constraints.len() { 1.0 } else { constraints[row].rhs });
    let aff = affine(&a, &b);

    let violation_of = |x: &DVector<f64>| (&a * x - &b).amax();
    let start = best.map_or_else(|| DVector::from_element(n, 1.0 / n as f64), |(_, v)| DVector::from_vec(v));
    // Alternating projections onto the affine set and the nonnegative orthant.
    let mut x = aff.project(&start);
    for _ in 0..100_000 {
        if x.iter().all(|&v| v >= -1e-15) {
            break;
        }
        x = aff.project(&x.map(|v| v.max(0.0)));
    }
    if x.iter().any(|&v| v < -1e-12) || aff.inconsistency > 1e-9 {
        let v = violation_of(&project_simplex(&x));
        return Err(Error::Infeasible {
            violation: v.max(aff.inconsistency),
        });
    }
    let x = x.map(|v| v.max(0.0));

    let k = aff.null.ncols();
    let eval = |z: &DVector<f64>| -> Option<(f64, DVector<f64>)> {
        let cand = &x + &aff.null * z;
        if cand.iter().any(|&v| v < -1e-15) {
            return None;
        }
        let cand = cand.map(|v| v.max(0.0));
        Some((family.value(cand.as_slice()), cand))
    };
    let mut center = DVector::zeros(k);
    let (mut best_v, mut best_p) = eval(&center).expect("start is feasible");
    if k > 0 {
        const K: usize = 11;
        let mut radius = 2f64.sqrt();
        let total = K.pow(k as u32);
        for _ in 0..90 {
            let mut round_best = center.clone();
            for idx in 0..total {
                let mut rem = idx;
                let z = DVector::from_fn(k, |_, _| {
                    let t = rem % K;
                    rem /= K;
                    -1.0 + 2.0 * t as f64 / (K - 1) as f64
                });
                let z = &center + z * radius;
                if let Some((v, cand)) = eval(&z) {
                    if v > best_v {
                        best_v = v;
                        best_p = cand;
                        round_best = z;
                    }
                }
            }
            center = round_best;
            radius *= 0.5;
        }
    }

    let p_final: Vec<f64> = best_p.iter().cloned().collect();
    let objective = report_objective(&p_final, measure)?;
    let residuals: Vec<f64> = constraints
        .iter()
        .map(|c| c.coeffs.iter().zip(&p_final).map(|(a, x)| a * x).sum::<f64>() - c.rhs)
        .collect();
    Ok(MaxEntSolution {
        p: Distribution::normalized(p_final)?,
        multipliers: Vec::new(),
        objective,
        converged: true,
        residuals,
        relaxed_residual: None,
        gibbs_residual: None,
    })
}

/// Oracle for the full problem (every observation constraint).
pub fn brute_force_maxent(prob: &MaxEntProblem, resolution: usize) -> Result<MaxEntSolution> {
    let constraints: Vec<LinearConstraint> = (0..prob.m())
        .map(|j| LinearConstraint {
            coeffs: prob.alpha.column(j).iter().cloned().collect(),
            rhs: prob.q.probs()[j],
        })
        .collect();
    let mut sol = brute_force_constrained(prob.n(), &constraints, &prob.measure, resolution)?;
    sol.residuals = prob.constraint_residuals(sol.p.probs());
    Ok(sol)
}

/// Oracle for the collapsed single-constraint problem solved by [`solve_maxent_relaxed`].
pub fn brute_force_relaxed(prob: &MaxEntProblem, resolution: usize) -> Result<MaxEntSolution> {
    let cols = prob.retained_columns();
    if cols.is_empty() {
        return Err(Error::DegenerateQ);
    }
    let coeffs: Vec<f64> = (0..prob.n())
        .map(|i| cols.iter().map(|&j| prob.alpha[(i, j)] / prob.q.probs()[j]).sum())
        .collect();
    let c = LinearConstraint {
        coeffs,
        rhs: cols.len() as f64,
    };
    let mut sol = brute_force_constrained(prob.n(), &[c], &prob.measure, resolution)?;
    sol.relaxed_residual = sol.residuals.first().copied();
    sol.residuals = prob.constraint_residuals(sol.p.probs());
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn example_alpha() -> Vec<Vec<f64>> {
        vec![vec![0.5, 0.5, 0.0], vec![0.25, 0.25, 0.5], vec![0.25, 0.25, 0.5]]
    }

    #[test]
    fn trivial_constraint_gives_uniform() {
        let prob = MaxEntProblem::new(dist(&[1.0]), vec![vec![1.0]; 3], EntropyMeasure::VonNeumann).unwrap();
        let s = solve_maxent_relaxed(&prob).unwrap();
        assert!(s.multipliers[1].abs() < 1e-15);
        for x in s.p.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let f = solve_maxent_full(&prob, DEFAULT_TOL).unwrap();
        assert!((f.objective - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_pair() {
        let prob = MaxEntProblem::new(dist(&[1.0]), vec![vec![1.0], vec![1.0]], EntropyMeasure::VonNeumann).unwrap();
        let f = solve_maxent_full(&prob, DEFAULT_TOL).unwrap();
        assert!((f.p.probs()[0] - 0.5).abs() < 1e-12);
        assert!((f.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_overlap_returns_q() {
        let q = dist(&[0.5, 0.3, 0.2]);
        let eye = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        for m in [
            EntropyMeasure::VonNeumann,
            EntropyMeasure::renyi(2.0).unwrap(),
            EntropyMeasure::tsallis(0.5).unwrap(),
        ] {
            let prob = MaxEntProblem::new(q.clone(), eye.clone(), m).unwrap();
            let f = solve_maxent_full(&prob, DEFAULT_TOL).unwrap();
            for (a, b) in f.p.probs().iter().zip(q.probs()) {
                assert!((a - b).abs() < 1e-10);
            }
            let o = brute_force_maxent(&prob, 200).unwrap();
            for (a, b) in o.p.probs().iter().zip(q.probs()) {
                assert!((a - b).abs() < 1.0 / 200.0);
            }
            // the collapsed constraint admits q, so its maximum is at least H(q)
            let r = solve_maxent_relaxed(&prob).unwrap();
            assert!(r.objective >= f.objective - 1e-9);
        }
    }

    #[test]
    fn example_problem_relaxed_matches_oracle() {
        let prob = MaxEntProblem::new(dist(&[0.4, 0.35, 0.25]), example_alpha(), EntropyMeasure::VonNeumann).unwrap();
        let r = solve_maxent_relaxed(&prob).unwrap();
        assert!(r.converged);
        let o = brute_force_relaxed(&prob, 400).unwrap();
        assert!((r.objective - o.objective).abs() < 1e-6, "{} vs {}", r.objective, o.objective);
    }

    #[test]
    fn example_problem_is_infeasible_in_full() {
        // columns 0 and 1 coincide while q_0 != q_1
        let prob =
            MaxEntProblem::new(dist(&[0.4, 0.35, 0.25]), example_alpha(), EntropyMeasure::renyi(2.0).unwrap()).unwrap();
        match solve_maxent_full(&prob, DEFAULT_TOL) {
            Err(Error::Infeasible { violation }) => assert!(violation > 0.01),
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(matches!(brute_force_maxent(&prob, 100), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn zero_observation_forces_zeros() {
        let prob = MaxEntProblem::new(
            dist(&[0.0, 1.0]),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]],
            EntropyMeasure::VonNeumann,
        )
        .unwrap();
        let f = solve_maxent_full(&prob, DEFAULT_TOL).unwrap();
        assert_eq!(f.p.probs()[0], 0.0);
        assert!((f.p.probs()[1] - 0.5).abs() < 1e-12);
        assert!(f.max_residual() < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_problems() {
        let prob = MaxEntProblem::new(dist(&[1.0]), vec![vec![1.0]; 5], EntropyMeasure::VonNeumann).unwrap();
        assert!(matches!(brute_force_maxent(&prob, 10), Err(Error::TooLarge(_))));
    }

    #[test]
    fn renyi_relaxed_limit_is_gibbs() {
        let prob = MaxEntProblem::new(
            dist(&[0.5, 0.3, 0.2]),
            vec![vec![0.6, 0.3, 0.1], vec![0.3, 0.4, 0.3], vec![0.1, 0.3, 0.6]],
            EntropyMeasure::VonNeumann,
        )
        .unwrap();
        let vn = solve_maxent_relaxed(&prob).unwrap();
        for a in [1.0 - 1e-4, 1.0 + 1e-4] {
            let mut p2 = prob.clone();
            p2.measure = EntropyMeasure::renyi(a).unwrap();
            let r = solve_maxent_relaxed(&p2).unwrap();
            let tv: f64 = r.p.probs().iter().zip(vn.p.probs()).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-3, "tv {tv}");
        }
    }
}
