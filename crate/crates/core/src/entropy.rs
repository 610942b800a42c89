//! Entropy families (von Neumann/Shannon, Renyi, Tsallis, generalized `F(Σ G(p))`),
//! conditional entropies and mutual information.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use bitflags::bitflags;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{self, DensityMatrix, Distribution, Subsystem};

const PARAM_EPS: f64 = 1e-12;

/// Logarithm base used for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    Two,
    E,
}

impl LogBase {
    /// `ln(base)`
    pub fn ln(self) -> f64 {
        match self {
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::E => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::E => "e",
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" | "E" => Ok(LogBase::E),
            other => Err(Error::BadParameter(format!("unknown log base {other:?}"))),
        }
    }
}

bitflags! {
    /// Axioms a generalized entropy declares it satisfies.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct Axioms: u8 {
        const CONTINUITY = 1 << 0;
        const CONCAVITY = 1 << 1;
        const SYMMETRY = 1 << 2;
        const NONNEGATIVE = 1 << 3;
        const INCREASING = 1 << 4;
        const ADDITIVITY = 1 << 5;
        const EXPANDABILITY = 1 << 6;
    }
}

impl Axioms {
    pub fn name(self) -> &'static str {
        match self {
            Axioms::CONTINUITY => "continuity",
            Axioms::CONCAVITY => "concavity",
            Axioms::SYMMETRY => "symmetry",
            Axioms::NONNEGATIVE => "nonnegative",
            Axioms::INCREASING => "increasing",
            Axioms::ADDITIVITY => "additivity",
            Axioms::EXPANDABILITY => "expandability",
            _ => "mixed",
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `H(p) = F(Σ_i G(p_i)) − F(G(1))`, so that point masses score zero.
#[derive(Clone)]
pub struct GeneralizedEntropy {
    f: ScalarFn,
    g: ScalarFn,
    declared: Axioms,
    offset: f64,
}

impl GeneralizedEntropy {
    pub fn new<F, G>(f: F, g: G, declared: Axioms) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let offset = f(g(1.0));
        if !offset.is_finite() {
            return Err(Error::BadParameter("F(G(1)) is not finite".into()));
        }
        Ok(Self {
            f: Arc::new(f),
            g: Arc::new(g),
            declared,
            offset,
        })
    }

    /// Shannon entropy in bits written as `F = id`, `G(x) = −x log2 x`.
    pub fn shannon() -> Self {
        Self::new(|s| s, |x| if x > 0.0 { -x * x.log2() } else { 0.0 }, Axioms::all())
            .expect("finite at 1")
    }

    pub fn declared_axioms(&self) -> Axioms {
        self.declared
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Raw `F(s)`, without the offset.
    pub fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    /// `Σ G(p_i)` over the nonzero entries.
    pub fn g_sum(&self, probs: &[f64]) -> f64 {
        probs.iter().filter(|&&p| p > 0.0).map(|&p| self.g(p)).sum()
    }

    pub fn value(&self, probs: &[f64]) -> f64 {
        self.f(self.g_sum(probs)) - self.offset
    }
}

impl fmt::Debug for GeneralizedEntropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedEntropy")
            .field("declared", &self.declared)
            .field("offset", &self.offset)
            .finish_non_exhaustive()
    }
}

/// The single dispatch point for all entropy formulas.
#[derive(Debug, Clone)]
pub enum EntropyMeasure {
    VonNeumann,
    Renyi { alpha: f64 },
    Tsallis { q: f64 },
    Generalized(GeneralizedEntropy),
}

impl EntropyMeasure {
    pub fn renyi(alpha: f64) -> Result<Self> {
        let m = EntropyMeasure::Renyi { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn tsallis(q: f64) -> Result<Self> {
        let m = EntropyMeasure::Tsallis { q };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if !v.is_finite() || v <= 0.0 {
                Err(Error::BadParameter(format!("{name} must be positive, got {v}")))
            } else if (v - 1.0).abs() < PARAM_EPS {
                Err(Error::BadParameter(format!(
                    "{name} = 1 is the von Neumann limit; use that variant"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            EntropyMeasure::Renyi { alpha } => check("alpha", *alpha),
            EntropyMeasure::Tsallis { q } => check("q", *q),
            _ => Ok(()),
        }
    }

    /// Short textual tag, parseable back by [`FromStr`] except for `generalized`.
    pub fn label(&self) -> String {
        match self {
            EntropyMeasure::VonNeumann => "vn".into(),
            EntropyMeasure::Renyi { alpha } => format!("renyi:{alpha}"),
            EntropyMeasure::Tsallis { q } => format!("tsallis:{q}"),
            EntropyMeasure::Generalized(_) => "generalized".into(),
        }
    }

    pub fn is_tsallis(&self) -> bool {
        matches!(self, EntropyMeasure::Tsallis { .. })
    }
}

impl fmt::Display for EntropyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for EntropyMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        if matches!(lower.as_str(), "vn" | "von-neumann" | "shannon") {
            return Ok(EntropyMeasure::VonNeumann);
        }
        let (kind, param) = lower
            .split_once(':')
            .ok_or_else(|| Error::BadParameter(format!("unknown measure {s:?}")))?;
        let value: f64 = param
            .parse()
            .map_err(|_| Error::BadParameter(format!("bad measure parameter {param:?}")))?;
        match kind {
            "renyi" => EntropyMeasure::renyi(value),
            "tsallis" => EntropyMeasure::tsallis(value),
            _ => Err(Error::BadParameter(format!("unknown measure {s:?}"))),
        }
    }
}

/// `Σ_{p_i > 0} p_i^a`
pub fn power_sum(probs: &[f64], a: f64) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| p.powf(a)).sum()
}

/// Entropy of a nonnegative weight vector assumed to sum to 1; no validation.
pub fn entropy_of(probs: &[f64], m: &EntropyMeasure, base: LogBase) -> Result<f64> {
    m.validate()?;
    let v = match m {
        EntropyMeasure::VonNeumann => {
            -probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * p.ln())
                .sum::<f64>()
                / base.ln()
        }
        EntropyMeasure::Renyi { alpha } => power_sum(probs, *alpha).ln() / (1.0 - alpha) / base.ln(),
        EntropyMeasure::Tsallis { q } => (1.0 - power_sum(probs, *q)) / (q - 1.0),
        EntropyMeasure::Generalized(g) => g.value(probs),
    };
    if v.is_nan() {
        return Err(Error::Undefined(format!("{} entropy evaluated to NaN", m.label())));
    }
    Ok(if v <= 0.0 && v > -1e-13 { 0.0 } else { v })
}

/// Classical entropy in bits (Tsallis and generalized measures are base-free).
pub fn classical_entropy(p: &Distribution, m: &EntropyMeasure) -> Result<f64> {
    entropy_of(p.probs(), m, LogBase::Two)
}

pub fn classical_entropy_in(p: &Distribution, m: &EntropyMeasure, base: LogBase) -> Result<f64> {
    entropy_of(p.probs(), m, base)
}

/// Entropy of the spectrum of `rho`, in bits.
pub fn quantum_entropy(rho: &DensityMatrix, m: &EntropyMeasure) -> Result<f64> {
    quantum_entropy_in(rho, m, LogBase::Two)
}

pub fn quantum_entropy_in(rho: &DensityMatrix, m: &EntropyMeasure, base: LogBase) -> Result<f64> {
    entropy_of(qcore::spectrum(rho)?.probs(), m, base)
}

/// Axis of a [`JointDistribution`]: rows are the first variable `X`, columns `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Rows,
    Cols,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Rows => Axis::Cols,
            Axis::Cols => Axis::Rows,
        }
    }
}

/// Joint probability table `P(i, j)` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl JointDistribution {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(Error::BadInput("joint table must be a non-empty rectangle".into()));
        }
        Self::from_flat(rows, cols, table.into_iter().flatten().collect())
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        let table = Distribution::new(data)?.into_vec();
        Ok(Self { rows, cols, table })
    }

    /// `p ⊗ q` as a table.
    pub fn product(p: &Distribution, q: &Distribution) -> Self {
        let table = p
            .probs()
            .iter()
            .flat_map(|&a| q.probs().iter().map(move |&b| a * b))
            .collect();
        Self {
            rows: p.len(),
            cols: q.len(),
            table,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.cols + j]
    }

    pub fn flat(&self) -> &[f64] {
        &self.table
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn marginal(&self, axis: Axis) -> Distribution {
        let v = match axis {
            Axis::Rows => self.table.chunks(self.cols).map(|r| r.iter().sum()).collect(),
            Axis::Cols => (0..self.cols)
                .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
                .collect(),
        };
        Distribution::from_vec_unchecked(v)
    }

    pub fn as_distribution(&self) -> Distribution {
        Distribution::from_vec_unchecked(self.table.clone())
    }
}

/// Entropy of the unconditioned axis given `condition_on`.
///
/// Subtraction for von Neumann and generalized measures; for Renyi
/// `1/(1−α)·log(Σ P^α / Σ p^α)`; for Tsallis `(Σ P^q / Σ p^q − 1)/(1−q)`,
/// with `p` the marginal of the conditioning variable.
pub fn conditional_entropy(j: &JointDistribution, condition_on: Axis, m: &EntropyMeasure) -> Result<f64> {
    conditional_entropy_in(j, condition_on, m, LogBase::Two)
}

pub fn conditional_entropy_in(
    j: &JointDistribution,
    condition_on: Axis,
    m: &EntropyMeasure,
    base: LogBase,
) -> Result<f64> {
    m.validate()?;
    let marginal = j.marginal(condition_on);
    let v = match m {
        EntropyMeasure::Renyi { alpha } => {
            let ratio = power_sum(j.flat(), *alpha) / power_sum(marginal.probs(), *alpha);
            ratio.ln() / (1.0 - alpha) / base.ln()
        }
        EntropyMeasure::Tsallis { q } => {
            let ratio = power_sum(j.flat(), *q) / power_sum(marginal.probs(), *q);
            (ratio - 1.0) / (1.0 - q)
        }
        _ => entropy_of(j.flat(), m, base)? - entropy_of(marginal.probs(), m, base)?,
    };
    if !v.is_finite() {
        return Err(Error::Undefined("conditional entropy is not finite".into()));
    }
    Ok(v)
}

/// Which mutual-information expression to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MutualInfoForm {
    /// `H(X) + H(Y) − H(X,Y)`
    Subtraction,
    /// Tsallis pseudo-additive form normalized by `1 + (1−q)·max{T(X), T(Y)}`.
    /// Falls back to subtraction for other measures.
    Normalized,
}

/// Mutual information of a joint table: subtraction for every family except
/// Tsallis, which uses the normalized pseudo-additive form.
pub fn mutual_information(j: &JointDistribution, m: &EntropyMeasure) -> Result<f64> {
    let form = if m.is_tsallis() {
        MutualInfoForm::Normalized
    } else {
        MutualInfoForm::Subtraction
    };
    mutual_information_with(j, m, form, LogBase::Two)
}

pub fn mutual_information_with(
    j: &JointDistribution,
    m: &EntropyMeasure,
    form: MutualInfoForm,
    base: LogBase,
) -> Result<f64> {
    let hx = entropy_of(j.marginal(Axis::Rows).probs(), m, base)?;
    let hy = entropy_of(j.marginal(Axis::Cols).probs(), m, base)?;
    let hxy = entropy_of(j.flat(), m, base)?;
    Ok(match (form, m) {
        (MutualInfoForm::Normalized, EntropyMeasure::Tsallis { q }) => {
            let k = 1.0 - q;
            (hx + hy + k * hx * hy - hxy) / (1.0 + k * hx.max(hy))
        }
        _ => hx + hy - hxy,
    })
}

/// `S(ρ_a) + S(ρ_b) − S(ρ_ab)` for a bipartite state.
pub fn quantum_mutual_information(
    rho_ab: &DensityMatrix,
    dims: (usize, usize),
    m: &EntropyMeasure,
) -> Result<f64> {
    let a = qcore::partial_trace(rho_ab, dims, Subsystem::A)?;
    let b = qcore::partial_trace(rho_ab, dims, Subsystem::B)?;
    Ok(quantum_entropy(&a, m)? + quantum_entropy(&b, m)? - quantum_entropy(rho_ab, m)?)
}

/// Outcome of one axiom check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxiomStatus {
    Passed,
    Failed,
    Assumed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub status: AxiomStatus,
    pub declared: bool,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn status(&self, axiom: Axioms) -> Option<AxiomStatus> {
        self.checks
            .iter()
            .find(|c| c.axiom == axiom.name())
            .map(|c| c.status)
    }

    pub fn failed(&self) -> Vec<&AxiomCheck> {
        self.checks
            .iter()
            .filter(|c| c.status == AxiomStatus::Failed)
            .collect()
    }

    pub fn all_passed(&self) -> bool {
        self.failed().is_empty()
    }
}

const AXIOM_TOL: f64 = 1e-9;

fn random_probs(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Sample-based check of the generalized-entropy axioms.
///
/// Concavity of `G`, nonnegativity and monotonicity of `F` on the sampled range of
/// `Σ G`, the refinement inequality and expandability are tested; continuity and
/// symmetry are structural and reported as assumed.
pub fn check_generalized_axioms(m: &GeneralizedEntropy, sample_budget: usize, rng_seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = sample_budget.max(1);
    let declared = m.declared_axioms();
    let mut checks = Vec::new();
    let mut push = |axiom: Axioms, counterexample: Option<String>, assumed: bool| {
        let status = if assumed {
            AxiomStatus::Assumed
        } else if counterexample.is_some() {
            AxiomStatus::Failed
        } else {
            AxiomStatus::Passed
        };
        checks.push(AxiomCheck {
            axiom: axiom.name().into(),
            status,
            declared: declared.contains(axiom),
            counterexample,
        });
    };

    push(Axioms::CONTINUITY, None, true);

    let mut concavity = None;
    for _ in 0..n {
        let (x, y, t): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let lhs = m.g(t * x + (1.0 - t) * y);
        let rhs = t * m.g(x) + (1.0 - t) * m.g(y);
        if lhs < rhs - AXIOM_TOL {
            concavity = Some(format!(
                "G({t:.6}*{x:.6} + {:.6}*{y:.6}) = {lhs:.9} < {rhs:.9}",
                1.0 - t
            ));
            break;
        }
    }
    push(Axioms::CONCAVITY, concavity, false);

    push(Axioms::SYMMETRY, None, true);

    // Range of Σ G over sampled distributions, including point masses.
    let mut sums: Vec<f64> = vec![m.g_sum(&[1.0])];
    for _ in 0..n {
        let len = rng.random_range(1..=6);
        sums.push(m.g_sum(&random_probs(&mut rng, len)));
    }
    sums.retain(|s| s.is_finite());
    sums.sort_by(f64::total_cmp);

    let nonneg = sums.iter().find_map(|&s| {
        let v = m.f(s) - m.offset();
        (v < -AXIOM_TOL).then(|| format!("F({s:.9}) - F(G(1)) = {v:.9} < 0"))
    });
    push(Axioms::NONNEGATIVE, nonneg, false);

    let increasing = sums.windows(2).find_map(|w| {
        let (a, b) = (m.f(w[0]), m.f(w[1]));
        (w[0] < w[1] && a > b + AXIOM_TOL).then(|| format!("F({:.9}) = {a:.9} > F({:.9}) = {b:.9}", w[0], w[1]))
    });
    push(Axioms::INCREASING, increasing, false);

    let mut additivity = None;
    for _ in 0..n {
        let len = rng.random_range(1..=5);
        let p = random_probs(&mut rng, len);
        let mut refined = Vec::new();
        for &pi in &p {
            let parts = rng.random_range(1..=3);
            refined.extend(random_probs(&mut rng, parts).into_iter().map(|w| w * pi));
        }
        let (coarse, fine) = (m.value(&p), m.value(&refined));
        if fine < coarse - AXIOM_TOL {
            additivity = Some(format!("refinement of {p:?} lowers entropy: {fine:.9} < {coarse:.9}"));
            break;
        }
    }
    push(Axioms::ADDITIVITY, additivity, false);

    let g0 = {
        let z = m.g(0.0);
        if z.is_finite() {
            z
        } else {
            m.g(f64::MIN_POSITIVE)
        }
    };
    let mut expand = None;
    for _ in 0..n {
        let len = rng.random_range(1..=6);
        let s = m.g_sum(&random_probs(&mut rng, len));
        let (with_zero, without) = (m.f(s + g0), m.f(s));
        if (with_zero - without).abs() > AXIOM_TOL || !g0.is_finite() {
            expand = Some(format!("appending a zero outcome changes F from {without:.9} to {with_zero:.9}"));
            break;
        }
    }
    push(Axioms::EXPANDABILITY, expand, false);

    AxiomReport { samples: n, checks }
}
