//! Typical sets, universal typical sets and typical-subspace compression fidelity,
//! computed exactly by enumerating type classes.

use serde::Serialize;

use crate::channels::dephase;
use crate::entropy::{classical_entropy, EntropyMeasure};
use crate::error::{Error, Result};
use crate::qcore::{Basis, DensityMatrix, Distribution};

pub const MAX_ALPHABET: usize = 4;
pub const MAX_BLOCK_LENGTH: usize = 64;
const BAND_SLACK: f64 = 1e-12;

/// Occupation vector of a type class with its exact statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeClass {
    pub counts: Vec<usize>,
    /// `log2` of the number of sequences in the class.
    pub log2_size: f64,
    /// `log2` of the probability of each member sequence (`-inf` if impossible).
    pub log2_seq_prob: f64,
}

impl TypeClass {
    pub fn size(&self) -> f64 {
        self.log2_size.exp2()
    }

    /// Total probability of the class.
    pub fn probability(&self) -> f64 {
        (self.log2_size + self.log2_seq_prob).exp2()
    }

    /// Empirical entropy of the occupation vector in bits.
    pub fn empirical_entropy(&self) -> f64 {
        let n: usize = self.counts.iter().sum();
        self.counts
            .iter()
            .filter(|&&k| k > 0)
            .map(|&k| {
                let f = k as f64 / n as f64;
                -f * f.log2()
            })
            .sum()
    }
}

fn check_size(alphabet: usize, n: usize) -> Result<()> {
    if alphabet == 0 || n == 0 {
        return Err(Error::BadParameter("alphabet and block length must be positive".into()));
    }
    if alphabet > MAX_ALPHABET || n > MAX_BLOCK_LENGTH {
        return Err(Error::TooLarge(format!(
            "type-class enumeration supports alphabet <= {MAX_ALPHABET} and n <= {MAX_BLOCK_LENGTH}, got {alphabet} and {n}"
        )));
    }
    Ok(())
}

fn log2_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).log2();
    }
    out
}

/// All occupation vectors of length `alphabet` summing to `n`, in lexicographic order.
pub fn compositions(alphabet: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: usize, slots: usize, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, left - k, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if alphabet > 0 {
        rec(&mut Vec::with_capacity(alphabet), n, alphabet, &mut out);
    }
    out
}

/// Type classes of length-`n` sequences over `p`'s alphabet.
pub fn type_classes(p: &Distribution, n: usize) -> Result<Vec<TypeClass>> {
    check_size(p.len(), n)?;
    let lf = log2_factorials(n);
    let logp: Vec<f64> = p.probs().iter().map(|&x| x.log2()).collect();
    Ok(compositions(p.len(), n)
        .into_iter()
        .map(|counts| {
            let log2_size = lf[n] - counts.iter().map(|&k| lf[k]).sum::<f64>();
            let log2_seq_prob = counts
                .iter()
                .zip(&logp)
                .map(|(&k, &l)| if k == 0 { 0.0 } else { k as f64 * l })
                .sum();
            TypeClass {
                counts,
                log2_size,
                log2_seq_prob,
            }
        })
        .collect())
}

fn log2_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.filter(|x| x.is_finite()).collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp2()).sum::<f64>().log2()
}

#[derive(Debug, Clone, Serialize)]
pub struct TypicalSet {
    pub n: usize,
    pub epsilon: f64,
    pub base_dist: Distribution,
    /// Shannon entropy of `base_dist` in bits.
    pub entropy: f64,
    /// Member type classes.
    pub members: Vec<TypeClass>,
    pub total_probability: f64,
    pub log2_size: f64,
}

impl TypicalSet {
    /// Is a sequence with these occupation counts typical?
    pub fn contains(&self, counts: &[usize]) -> bool {
        self.members.iter().any(|c| c.counts == counts)
    }

    /// Type-counting upper bound `n(H+ε) + (|X|−1) log2(n+1)` on `log2_size`.
    pub fn size_bound(&self) -> f64 {
        let n = self.n as f64;
        n * (self.entropy + self.epsilon) + (self.base_dist.len() as f64 - 1.0) * (n + 1.0).log2()
    }
}

fn in_band(class: &TypeClass, n: usize, h: f64, eps: f64) -> bool {
    if !class.log2_seq_prob.is_finite() {
        return false;
    }
    let rate = -class.log2_seq_prob / n as f64;
    rate >= h - eps - BAND_SLACK && rate <= h + eps + BAND_SLACK
}

/// Weakly typical set: sequences with `2^{−n(H+ε)} ≤ p(x) ≤ 2^{−n(H−ε)}`.
pub fn typical_set(p: &Distribution, n: usize, epsilon: f64) -> Result<TypicalSet> {
    if !(epsilon >= 0.0) {
        return Err(Error::BadParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let h = classical_entropy(p, &EntropyMeasure::VonNeumann)?;
    let members: Vec<TypeClass> = type_classes(p, n)?
        .into_iter()
        .filter(|c| in_band(c, n, h, epsilon))
        .collect();
    let total_probability = members.iter().map(TypeClass::probability).sum::<f64>().min(1.0);
    let log2_size = log2_sum(members.iter().map(|c| c.log2_size));
    Ok(TypicalSet {
        n,
        epsilon,
        base_dist: p.clone(),
        entropy: h,
        members,
        total_probability,
        log2_size,
    })
}

/// Universal set: all type classes with empirical entropy at most `entropy_bound + delta`.
#[derive(Debug, Clone, Serialize)]
pub struct UniversalSet {
    pub n: usize,
    pub alphabet: usize,
    pub threshold: f64,
    pub members: Vec<Vec<usize>>,
    pub log2_size: f64,
}

impl UniversalSet {
    /// `n·threshold + (|X|−1) log2(n+1)`.
    pub fn size_bound(&self) -> f64 {
        self.n as f64 * self.threshold + (self.alphabet as f64 - 1.0) * (self.n as f64 + 1.0).log2()
    }

    /// Probability of the set under the i.i.d. source `p`.
    pub fn probability_under(&self, p: &Distribution) -> Result<f64> {
        if p.len() != self.alphabet {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet,
                found: p.len(),
            });
        }
        let classes = type_classes(p, self.n)?;
        Ok(classes
            .iter()
            .filter(|c| self.members.contains(&c.counts))
            .map(TypeClass::probability)
            .sum::<f64>()
            .min(1.0))
    }
}

pub fn universal_typical_set(alphabet: usize, n: usize, entropy_bound: f64, delta: f64) -> Result<UniversalSet> {
    check_size(alphabet, n)?;
    let threshold = entropy_bound + delta;
    let classes = type_classes(&Distribution::uniform(alphabet), n)?;
    let kept: Vec<&TypeClass> = classes
        .iter()
        .filter(|c| c.empirical_entropy() <= threshold + BAND_SLACK)
        .collect();
    Ok(UniversalSet {
        n,
        alphabet,
        threshold,
        members: kept.iter().map(|c| c.counts.clone()).collect(),
        log2_size: log2_sum(kept.iter().map(|c| c.log2_size)),
    })
}

/// Projector onto `2^{⌊nR⌋}` most probable eigenvectors of `ρ^{⊗n}`, stored as the
/// number of kept sequences per type class (eigen-order of the source spectrum).
#[derive(Debug, Clone, Serialize)]
pub struct TypicalProjector {
    pub n: usize,
    pub rate: f64,
    pub alphabet: usize,
    /// `(occupation vector, kept sequence count)`.
    pub kept: Vec<(Vec<usize>, f64)>,
    pub kept_dimension_log2: f64,
}

impl TypicalProjector {
    /// `tr[Π σ^{⊗n}]` for `σ` diagonal in the same eigenbasis with the given spectrum.
    pub fn fidelity(&self, spectrum: &Distribution) -> Result<f64> {
        if spectrum.len() > self.alphabet {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet,
                found: spectrum.len(),
            });
        }
        let s = spectrum.padded(self.alphabet);
        let logp: Vec<f64> = s.probs().iter().map(|&x| x.log2()).collect();
        let f: f64 = self
            .kept
            .iter()
            .map(|(counts, k)| {
                let lp: f64 = counts
                    .iter()
                    .zip(&logp)
                    .map(|(&c, &l)| if c == 0 { 0.0 } else { c as f64 * l })
                    .sum();
                k * lp.exp2()
            })
            .sum();
        Ok(f.min(1.0))
    }
}

/// Greedy projector for the spectrum `p` (in the given order) at rate `rate`.
///
/// Classes are taken by decreasing per-sequence probability, ties broken
/// lexicographically on occupation vectors; the last class may be taken partially.
pub fn typical_projector(p: &Distribution, n: usize, rate: f64) -> Result<TypicalProjector> {
    if !(rate >= 0.0) {
        return Err(Error::BadParameter(format!("rate must be nonnegative, got {rate}")));
    }
    let mut classes = type_classes(p, n)?;
    classes.sort_by(|a, b| b.log2_seq_prob.total_cmp(&a.log2_seq_prob).then_with(|| a.counts.cmp(&b.counts)));
    let budget_log2 = (n as f64 * rate + 1e-12).floor();
    let mut remaining = budget_log2.exp2();
    let mut kept = Vec::new();
    let mut total = 0.0;
    for class in classes {
        if remaining <= 0.0 {
            break;
        }
        let take = class.size().round().min(remaining);
        remaining -= take;
        total += take;
        kept.push((class.counts, take));
    }
    Ok(TypicalProjector {
        n,
        rate,
        alphabet: p.len(),
        kept,
        kept_dimension_log2: total.log2(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceReport {
    pub n: usize,
    pub rate: f64,
    pub fidelity: f64,
    pub kept_dimension_log2: f64,
}

/// Fidelity `tr[Π (ρ^c)^{⊗n}]` of the rate-`R` typical subspace of `ρ^c`.
pub fn typical_subspace_fidelity(rho_c: &DensityMatrix, n: usize, rate: f64) -> Result<SubspaceReport> {
    let spectrum = rho_c.spectrum()?;
    let proj = typical_projector(&spectrum, n, rate)?;
    Ok(SubspaceReport {
        n,
        rate,
        fidelity: proj.fidelity(&spectrum)?,
        kept_dimension_log2: proj.kept_dimension_log2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFidelityTable {
    pub rows: Vec<SubspaceReport>,
    /// `(n, rate)` pairs where fidelity decreased relative to the next smaller rate.
    pub monotonicity_violations: Vec<(usize, f64)>,
}

impl RateFidelityTable {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations.is_empty()
    }
}

/// Dephases `ρ` in `j` and tabulates subspace fidelity over the `(n, R)` grid.
pub fn rate_fidelity_curve(rho: &DensityMatrix, j: &Basis, n_list: &[usize], r_list: &[f64]) -> Result<RateFidelityTable> {
    let rho_c = dephase(rho, j)?;
    let mut rates = r_list.to_vec();
    rates.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(n_list.len() * rates.len());
    let mut monotonicity_violations = Vec::new();
    for &n in n_list {
        let mut prev: Option<f64> = None;
        for &r in &rates {
            let row = typical_subspace_fidelity(&rho_c, n, r)?;
            if prev.is_some_and(|f| row.fidelity < f - 1e-12) {
                monotonicity_violations.push((n, r));
            }
            prev = Some(row.fidelity);
            rows.push(row);
        }
    }
    Ok(RateFidelityTable {
        rows,
        monotonicity_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn uniform_source_all_typical() {
        let t = typical_set(&Distribution::uniform(2), 12, 0.05).unwrap();
        assert!((t.total_probability - 1.0).abs() < 1e-12);
        assert!((t.log2_size - 12.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_source() {
        let t = typical_set(&dist(&[1.0, 0.0]), 10, 0.1).unwrap();
        assert_eq!(t.members.len(), 1);
        assert_eq!(t.members[0].counts, vec![10, 0]);
        assert!((t.total_probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn typical_probabilities_match_enumeration() {
        let p = dist(&[0.9, 0.1]);
        let expected = [
            (8, 0.38263752, 3.0),
            (16, 0.6039473208109709, 7.087462841250339),
            (32, 0.7491779516523678, 17.88936135999057),
            (64, 0.9095246290781683, 37.42204701305417),
        ];
        for (n, prob, size) in expected {
            let t = typical_set(&p, n, 0.2).unwrap();
            assert!((t.total_probability - prob).abs() < 1e-12, "n={n}: {}", t.total_probability);
            assert!((t.log2_size - size).abs() < 1e-10, "n={n}: {}", t.log2_size);
            assert!(t.log2_size <= t.size_bound());
        }
    }

    #[test]
    fn subspace_fidelity_values() {
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let hi = typical_subspace_fidelity(&rho, 16, 0.7).unwrap();
        assert!((hi.fidelity - 0.9697500564611616).abs() < 1e-12, "{}", hi.fidelity);
        assert!((hi.kept_dimension_log2 - 11.0).abs() < 1e-12);
        let lo = typical_subspace_fidelity(&rho, 16, 0.3).unwrap();
        assert!((lo.fidelity - 0.4941387170271577).abs() < 1e-12);
        let mid = typical_subspace_fidelity(&rho, 16, 0.369).unwrap();
        assert!((mid.fidelity - 0.5490430189190642).abs() < 1e-12);
        let all = typical_subspace_fidelity(&rho, 16, 1.0).unwrap();
        assert!((all.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_universality() {
        let proj = typical_projector(&dist(&[0.9, 0.1]), 16, 0.7).unwrap();
        let own = proj.fidelity(&dist(&[0.9, 0.1])).unwrap();
        let other = proj.fidelity(&dist(&[0.95, 0.05])).unwrap();
        assert!((other - 0.9975587578339942).abs() < 1e-12);
        assert!(other >= own);
    }

    #[test]
    fn curve_examples() {
        let mm = DensityMatrix::maximally_mixed(2);
        let comp = Basis::computational(2);
        let t = rate_fidelity_curve(&mm, &comp, &[4, 8, 16], &[1.0]).unwrap();
        assert!(t.rows.iter().all(|r| (r.fidelity - 1.0).abs() < 1e-12));
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let t = rate_fidelity_curve(&pure, &comp, &[4, 8], &[0.1, 0.5]).unwrap();
        assert!(t.rows.iter().all(|r| (r.fidelity - 1.0).abs() < 1e-12));
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let t = rate_fidelity_curve(&rho, &comp, &[8, 16], &[0.7, 0.1, 0.3, 0.5]).unwrap();
        assert!(t.is_monotone());
    }

    #[test]
    fn universal_set_contains_typical_mass() {
        let u = universal_typical_set(2, 32, 0.469, 0.2).unwrap();
        assert!(u.log2_size <= u.size_bound());
        let p = u.probability_under(&dist(&[0.9, 0.1])).unwrap();
        let q = u.probability_under(&dist(&[0.95, 0.05])).unwrap();
        assert!(p > 0.9 && q > p);
    }

    #[test]
    fn too_large() {
        assert!(matches!(typical_set(&Distribution::uniform(5), 4, 0.1), Err(Error::TooLarge(_))));
        assert!(matches!(typical_set(&Distribution::uniform(2), 65, 0.1), Err(Error::TooLarge(_))));
    }
}
