//! Empirical checks of the dephasing entropy principles: the local minimum over
//! dephasing bases, the joint/cross extremum over product bases on a
//! purification, the uncertainty relation, Araki–Lieb, and chain networks whose
//! joint entropies drop below single-node entropies.

use serde::Serialize;

use crate::channels::{self, dephase, haar_basis_from, rng_from_seed};
use crate::entropy::{self, entropy_of, quantum_entropy, EntropyMeasure, JointDistribution, LogBase, MutualInfoForm};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::qcore::{self, Basis, DensityMatrix, Distribution, Purification, Subsystem};

/// Slack used for every inequality in this module.
pub const PRINCIPLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub seed: u64,
    pub kind: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipleReport {
    pub measure: String,
    pub s_rho: f64,
    /// Entropy at the eigen/Schmidt basis (should equal `s_rho`).
    pub eigenbasis_value: f64,
    pub sampled_min: f64,
    /// Largest sampled cross entropy (subtraction form); absent for local checks.
    pub sampled_max_cross: Option<f64>,
    /// Largest sampled cross entropy in the normalized Tsallis form, when applicable.
    pub sampled_max_cross_normalized: Option<f64>,
    pub achieved_at_eigenbasis: bool,
    pub n_samples: usize,
    pub violations: Vec<Violation>,
}

impl PrincipleReport {
    pub fn passed(&self) -> bool {
        self.achieved_at_eigenbasis && self.violations.is_empty()
    }
}

fn sample_seed(rng_seed: u64, i: usize) -> u64 {
    rng_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// `S(ρ) = min_J S(D_J(ρ))`: the eigenbasis attains `S(ρ)` and no sampled basis goes below it.
pub fn verify_local_minimum(
    rho: &DensityMatrix,
    m: &EntropyMeasure,
    n_samples: usize,
    rng_seed: u64,
) -> Result<PrincipleReport> {
    let s_rho = quantum_entropy(rho, m)?;
    let (_, eig) = rho.eigen()?;
    let eigenbasis_value = quantum_entropy(&dephase(rho, &eig)?, m)?;
    let mut sampled_min = f64::INFINITY;
    let mut violations = Vec::new();
    for i in 0..n_samples {
        let seed = sample_seed(rng_seed, i);
        let j = haar_basis_from(rho.dim(), &mut rng_from_seed(seed));
        let v = quantum_entropy(&dephase(rho, &j)?, m)?;
        sampled_min = sampled_min.min(v);
        if v < s_rho - PRINCIPLE_TOL {
            violations.push(Violation {
                seed,
                kind: "dephased entropy below S(rho)".into(),
                value: v,
            });
        }
    }
    if n_samples == 0 {
        sampled_min = eigenbasis_value;
    }
    Ok(PrincipleReport {
        measure: m.label(),
        s_rho,
        eigenbasis_value,
        sampled_min,
        sampled_max_cross: None,
        sampled_max_cross_normalized: None,
        achieved_at_eigenbasis: (eigenbasis_value - s_rho).abs() <= PRINCIPLE_TOL,
        n_samples,
        violations,
    })
}

/// Joint outcome distribution of measuring `|F⟩` in `J_a ⊗ J_b`:
/// `P(i, j) = |(J_a† M conj(J_b))_ij|²` with `M` the coefficient matrix.
pub fn observed_joint_distribution(pur: &Purification, ja: &Basis, jb: &Basis) -> Result<JointDistribution> {
    let m = pur.coefficient_matrix();
    if ja.dim() != m.nrows() || jb.dim() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows() * m.ncols(),
            found: ja.dim() * jb.dim(),
        });
    }
    let amp = ja.matrix().adjoint() * m * jb.matrix().conjugate();
    let flat: Vec<f64> = (0..amp.nrows())
        .flat_map(|i| (0..amp.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| amp[(i, j)].norm_sqr())
        .collect();
    let total: f64 = flat.iter().sum();
    JointDistribution::from_flat(amp.nrows(), amp.ncols(), flat.into_iter().map(|x| x / total).collect())
}

struct CrossValues {
    joint: f64,
    cross: f64,
    cross_normalized: f64,
}

fn cross_values(j: &JointDistribution, m: &EntropyMeasure) -> Result<CrossValues> {
    Ok(CrossValues {
        joint: entropy_of(j.flat(), m, LogBase::Two)?,
        cross: entropy::mutual_information_with(j, m, MutualInfoForm::Subtraction, LogBase::Two)?,
        cross_normalized: entropy::mutual_information_with(j, m, MutualInfoForm::Normalized, LogBase::Two)?,
    })
}

/// Joint entropy of product-basis observations of a purification is at least
/// `S(ρ)` and the cross entropy (mutual information) at most `S(ρ)`; both are
/// attained at the Schmidt bases.
pub fn verify_joint_principles(
    rho: &DensityMatrix,
    m: &EntropyMeasure,
    n_samples: usize,
    rng_seed: u64,
) -> Result<PrincipleReport> {
    let s_rho = quantum_entropy(rho, m)?;
    let pur = qcore::purify(rho)?;
    let (d_a, d_b) = (pur.dim_a(), pur.dim_b);

    let at_schmidt = cross_values(
        &observed_joint_distribution(&pur, &pur.basis_a, &Basis::computational(d_b))?,
        m,
    )?;
    let achieved = (at_schmidt.joint - s_rho).abs() <= PRINCIPLE_TOL
        && (at_schmidt.cross - s_rho).abs() <= PRINCIPLE_TOL;

    let mut sampled_min = f64::INFINITY;
    let mut max_cross = f64::NEG_INFINITY;
    let mut max_cross_norm = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for i in 0..n_samples {
        let seed = sample_seed(rng_seed, i);
        let mut rng = rng_from_seed(seed);
        let ja = haar_basis_from(d_a, &mut rng);
        let jb = haar_basis_from(d_b, &mut rng);
        let v = cross_values(&observed_joint_distribution(&pur, &ja, &jb)?, m)?;
        sampled_min = sampled_min.min(v.joint);
        max_cross = max_cross.max(v.cross);
        max_cross_norm = max_cross_norm.max(v.cross_normalized);
        if v.joint < s_rho - PRINCIPLE_TOL {
            violations.push(Violation {
                seed,
                kind: "joint entropy below S(rho)".into(),
                value: v.joint,
            });
        }
        if v.cross > s_rho + PRINCIPLE_TOL {
            violations.push(Violation {
                seed,
                kind: "cross entropy above S(rho)".into(),
                value: v.cross,
            });
        }
    }
    if n_samples == 0 {
        sampled_min = at_schmidt.joint;
        max_cross = at_schmidt.cross;
        max_cross_norm = at_schmidt.cross_normalized;
    }
    Ok(PrincipleReport {
        measure: m.label(),
        s_rho,
        eigenbasis_value: at_schmidt.joint,
        sampled_min,
        sampled_max_cross: Some(max_cross),
        sampled_max_cross_normalized: m.is_tsallis().then_some(max_cross_norm),
        achieved_at_eigenbasis: achieved,
        n_samples,
        violations,
    })
}

/// Result of a scalar inequality `lhs ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            pass: lhs >= rhs - PRINCIPLE_TOL,
        }
    }
}

/// `S(D_{J1}(ρ)) + S(D_{J2}(ρ)) ≥ 2 S(ρ)`
pub fn uncertainty_check(rho: &DensityMatrix, j1: &Basis, j2: &Basis, m: &EntropyMeasure) -> Result<InequalityCheck> {
    let lhs = quantum_entropy(&dephase(rho, j1)?, m)? + quantum_entropy(&dephase(rho, j2)?, m)?;
    Ok(InequalityCheck::new(lhs, 2.0 * quantum_entropy(rho, m)?))
}

/// `S(ρ_ab) ≥ |S(ρ_a) − S(ρ_b)|` in the von Neumann measure.
pub fn araki_lieb_check(rho_ab: &DensityMatrix, dims: (usize, usize)) -> Result<InequalityCheck> {
    let vn = EntropyMeasure::VonNeumann;
    let a = qcore::partial_trace(rho_ab, dims, Subsystem::A)?;
    let b = qcore::partial_trace(rho_ab, dims, Subsystem::B)?;
    let rhs = (quantum_entropy(&a, &vn)? - quantum_entropy(&b, &vn)?).abs();
    Ok(InequalityCheck::new(quantum_entropy(rho_ab, &vn)?, rhs))
}

/// Entropy of the marginal on all nodes except `omitted`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainMarginal {
    pub omitted: usize,
    pub nodes: Vec<usize>,
    pub entropy: f64,
}

/// A joint marginal whose entropy is strictly below that of one of its nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainViolation {
    pub marginal_nodes: Vec<usize>,
    pub marginal_entropy: f64,
    pub node: usize,
    pub node_entropy: f64,
}

/// Linear network of `n = links + 1` nodes; link `k` is a bipartite pure state with
/// Schmidt probabilities `links[k]` shared by nodes `k` and `k+1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainNetwork {
    pub measure: String,
    pub links: Vec<Distribution>,
    pub node_dims: Vec<usize>,
    pub node_entropies: Vec<f64>,
    pub marginals: Vec<ChainMarginal>,
    pub violations: Vec<ChainViolation>,
}

impl ChainNetwork {
    pub fn node_count(&self) -> usize {
        self.links.len() + 1
    }

    /// Full pure-state vector (factor order follows the nodes).
    pub fn state_vector(&self) -> Result<CVector> {
        let total: usize = self.node_dims.iter().product();
        if total > 4096 {
            return Err(Error::TooLarge(format!("chain state dimension {total}")));
        }
        let mut v = CVector::from_element(1, linalg::ONE);
        for link in &self.links {
            let r = link.len();
            let mut lv = CVector::zeros(r * r);
            for (i, p) in link.probs().iter().enumerate() {
                lv[i * r + i] = linalg::c(p.sqrt());
            }
            v = v.kronecker(&lv);
        }
        Ok(v)
    }

    /// Node and omitted-node marginal entropies computed from the dense state.
    pub fn dense_entropies(&self, m: &EntropyMeasure) -> Result<(Vec<f64>, Vec<f64>)> {
        let v = self.state_vector()?;
        let rho: CMatrix = linalg::outer(&v);
        let n = self.node_count();
        let mut nodes = Vec::with_capacity(n);
        let mut omitted = Vec::with_capacity(n);
        for k in 0..n {
            let single = linalg::reduce(&rho, &self.node_dims, &[k])?;
            nodes.push(quantum_entropy(&DensityMatrix::from_matrix_unchecked(single), m)?);
            let rest: Vec<usize> = (0..n).filter(|&i| i != k).collect();
            let marg = linalg::reduce(&rho, &self.node_dims, &rest)?;
            omitted.push(quantum_entropy(&DensityMatrix::from_matrix_unchecked(marg), m)?);
        }
        Ok((nodes, omitted))
    }
}

fn product_spectrum(a: Option<&Distribution>, b: Option<&Distribution>) -> Vec<f64> {
    let one = [1.0];
    let pa = a.map_or(&one[..], Distribution::probs);
    let pb = b.map_or(&one[..], Distribution::probs);
    pa.iter().flat_map(|&x| pb.iter().map(move |&y| x * y)).collect()
}

/// Build a chain network from Schmidt data and tabulate its entropies.
///
/// Node `k` holds one half of links `k−1` and `k`, so its spectrum is the product
/// of those Schmidt spectra; by global purity the marginal on all other nodes has
/// the same spectrum.
pub fn build_chain_network(links: &[Vec<f64>], m: &EntropyMeasure) -> Result<ChainNetwork> {
    if links.len() < 2 {
        return Err(Error::BadInput("a chain needs at least two links".into()));
    }
    let links: Vec<Distribution> = links
        .iter()
        .enumerate()
        .map(|(k, l)| {
            Distribution::new(l.clone()).map_err(|e| Error::BadInput(format!("link {k}: {e}")))
        })
        .collect::<Result<_>>()?;
    let n = links.len() + 1;
    let node_dims: Vec<usize> = (0..n)
        .map(|k| {
            let left = if k > 0 { links[k - 1].len() } else { 1 };
            let right = links.get(k).map_or(1, Distribution::len);
            left * right
        })
        .collect();
    let node_entropies: Vec<f64> = (0..n)
        .map(|k| {
            let left = if k > 0 { links.get(k - 1) } else { None };
            entropy_of(&product_spectrum(left, links.get(k)), m, LogBase::Two)
        })
        .collect::<Result<_>>()?;

    let mut marginals = Vec::with_capacity(n);
    let mut violations = Vec::new();
    for k in 0..n {
        let nodes: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        let entropy = node_entropies[k];
        for &i in &nodes {
            if entropy < node_entropies[i] - 1e-12 {
                violations.push(ChainViolation {
                    marginal_nodes: nodes.clone(),
                    marginal_entropy: entropy,
                    node: i,
                    node_entropy: node_entropies[i],
                });
            }
        }
        marginals.push(ChainMarginal {
            omitted: k,
            nodes,
            entropy,
        });
    }
    Ok(ChainNetwork {
        measure: m.label(),
        links,
        node_dims,
        node_entropies,
        marginals,
        violations,
    })
}

/// Haar-sampled uncertainty checks on random states; returns the number of failures.
pub fn uncertainty_batch(dim: usize, trials: usize, m: &EntropyMeasure, rng_seed: u64) -> Result<usize> {
    let mut rng = rng_from_seed(rng_seed);
    let mut failures = 0;
    for _ in 0..trials {
        let rho = channels::random_density(dim, &mut rng);
        let j1 = haar_basis_from(dim, &mut rng);
        let j2 = haar_basis_from(dim, &mut rng);
        if !uncertainty_check(&rho, &j1, &j2, m)?.pass {
            failures += 1;
        }
    }
    Ok(failures)
}
