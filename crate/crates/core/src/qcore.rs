//! Finite-dimensional quantum states: validation, spectra, partial traces,
//! purification and trace distance.
//!
//! Every constructor validates its input against a [`Tolerances`] record, so a
//! [`DensityMatrix`] or [`Basis`] in hand is always Hermitian/PSD/unit-trace or
//! unitary up to those tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Eigenvalues at or below this are treated as zero when counting rank.
pub const RANK_EPS: f64 = 1e-13;

/// Numerical tolerances used by every validation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub psd: f64,
    pub unitary: f64,
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-9,
            psd: 1e-9,
            unitary: 1e-9,
            norm: 1e-10,
        }
    }
}

impl Tolerances {
    /// Use one value for every check.
    pub fn uniform(tol: f64) -> Self {
        Self {
            herm: tol,
            psd: tol,
            unitary: tol,
            norm: tol,
        }
    }
}

/// A finite probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerances(probs, &Tolerances::default())
    }

    /// Validate entries (≥ −tol.psd, clamped to 0) and the sum (within tol.norm of 1).
    pub fn with_tolerances(mut probs: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite entry {p}")));
            }
            if *p < -tol.psd {
                return Err(Error::InvalidDistribution(format!("negative entry {p}")));
            }
            *p = p.max(0.0);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol.norm {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Rescale nonnegative weights to sum 1.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries sorted in nonincreasing order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Zero-pad to `len` entries.
    pub fn padded(&self, len: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(len.max(v.len()), 0.0);
        Self(v)
    }

    pub fn rank(&self) -> usize {
        self.0.iter().filter(|&&p| p > RANK_EPS).count()
    }
}

/// A validated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

/// Ordered orthonormal frame; column `i` is the `i`-th basis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    mat: CMatrix,
}

/// Which factor of a bipartite space to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// `|F⟩ = Σ_i √λ_i |f_i⟩|g_i⟩` with `g_i` the standard basis of dimension rank(ρ).
#[derive(Debug, Clone)]
pub struct Purification {
    pub schmidt_coeffs: Distribution,
    pub basis_a: Basis,
    pub basis_b: Basis,
    pub dim_b: usize,
}

/// Validate a raw matrix as a density operator.
///
/// The Hermitian part is taken before the trace and eigenvalue checks.
pub fn validate_density(raw: &CMatrix, tol: &Tolerances) -> Result<DensityMatrix> {
    let (rows, cols) = raw.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(Error::BadInput("zero-dimensional matrix".into()));
    }
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::BadInput("non-finite matrix entry".into()));
    }
    let deviation = linalg::max_abs_diff(raw, &raw.adjoint());
    if deviation > tol.herm {
        return Err(Error::NotHermitian { deviation });
    }
    let h = linalg::hermitian_part(raw);
    let tr = linalg::trace(&h).re;
    if (tr - 1.0).abs() > tol.norm {
        return Err(Error::TraceNotOne { trace: tr });
    }
    let min_eigenvalue = linalg::hermitian_eigenvalues(&h)?
        .last()
        .copied()
        .unwrap_or(0.0);
    if min_eigenvalue < -tol.psd {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix { mat: h })
}

impl DensityMatrix {
    pub fn new(raw: CMatrix) -> Result<Self> {
        validate_density(&raw, &Tolerances::default())
    }

    pub fn with_tolerances(raw: CMatrix, tol: &Tolerances) -> Result<Self> {
        validate_density(&raw, tol)
    }

    /// Wrap a matrix already known to be a state (e.g. a unitary image of one).
    /// Only the Hermitian part is kept.
    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        Self {
            mat: linalg::hermitian_part(&mat),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(linalg::from_real_diagonal(diag))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: linalg::identity(dim) * c(1.0 / dim as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a (renormalized) nonzero vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::BadInput("zero state vector".into()));
        }
        let v = psi / c(norm);
        Ok(Self {
            mat: linalg::outer(&v),
        })
    }

    /// `Σ_i p_i |b_i⟩⟨b_i|`
    pub fn from_spectrum(spectrum: &Distribution, basis: &Basis) -> Result<Self> {
        if spectrum.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: spectrum.len(),
            });
        }
        let d = linalg::from_real_diagonal(spectrum.probs());
        Ok(Self::from_matrix_unchecked(linalg::conjugate(basis.matrix(), &d)))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// `u ρ u†`; `u` is assumed unitary.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        Ok(Self::from_matrix_unchecked(linalg::conjugate(u, &self.mat)))
    }

    pub fn spectrum(&self) -> Result<Distribution> {
        spectrum(self)
    }

    pub fn eigen(&self) -> Result<(Distribution, Basis)> {
        eigen(self)
    }

    /// Diagonal entries (real parts).
    pub fn diagonal(&self) -> Vec<f64> {
        self.mat.diagonal().iter().map(|z| z.re).collect()
    }
}

fn clamp_and_renormalize(values: Vec<f64>) -> Result<Distribution> {
    let clamped: Vec<f64> = values.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
    Distribution::normalized(clamped)
}

/// Eigenvalues sorted descending, clamped to [0, 1] and renormalized.
pub fn spectrum(rho: &DensityMatrix) -> Result<Distribution> {
    clamp_and_renormalize(linalg::hermitian_eigenvalues(&rho.mat)?)
}

/// Spectrum together with the matching eigenvector frame.
pub fn eigen(rho: &DensityMatrix) -> Result<(Distribution, Basis)> {
    let (vals, vecs) = linalg::hermitian_eigen(&rho.mat)?;
    Ok((clamp_and_renormalize(vals)?, Basis { mat: vecs }))
}

pub fn partial_trace(rho_ab: &DensityMatrix, dims: (usize, usize), keep: Subsystem) -> Result<DensityMatrix> {
    let (d_a, d_b) = dims;
    if d_a * d_b != rho_ab.dim() {
        return Err(Error::DimensionMismatch {
            expected: d_a * d_b,
            found: rho_ab.dim(),
        });
    }
    let reduced = linalg::partial_trace_raw(&rho_ab.mat, d_a, d_b, keep == Subsystem::A)?;
    Ok(DensityMatrix::from_matrix_unchecked(reduced))
}

pub fn purify(rho: &DensityMatrix) -> Result<Purification> {
    let (vals, vecs) = linalg::hermitian_eigen(&rho.mat)?;
    let rank = vals.iter().filter(|&&x| x > RANK_EPS).count().max(1);
    let kept: Vec<f64> = vals.iter().take(rank).map(|x| x.max(0.0)).collect();
    Ok(Purification {
        schmidt_coeffs: Distribution::normalized(kept)?,
        basis_a: Basis { mat: vecs },
        basis_b: Basis::computational(rank),
        dim_b: rank,
    })
}

impl Purification {
    pub fn dim_a(&self) -> usize {
        self.basis_a.dim()
    }

    /// Schmidt amplitudes `√λ_i`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.schmidt_coeffs.probs().iter().map(|x| x.sqrt()).collect()
    }

    /// Coefficient matrix `M` with `|F⟩ = Σ_kl M_kl |k⟩|l⟩` (d_a × d_b).
    pub fn coefficient_matrix(&self) -> CMatrix {
        let d_a = self.dim_a();
        let mut m = CMatrix::zeros(d_a, self.dim_b);
        for (i, amp) in self.amplitudes().into_iter().enumerate() {
            let col = self.basis_a.mat.column(i) * c(amp);
            // basis_b is a general frame; |g_i⟩ = Σ_l B_li |l⟩
            for l in 0..self.dim_b {
                let g = self.basis_b.mat[(l, i)];
                for k in 0..d_a {
                    m[(k, l)] += col[k] * g;
                }
            }
        }
        m
    }

    /// Pure state vector on `d_a · d_b` (a most significant).
    pub fn vector(&self) -> CVector {
        let m = self.coefficient_matrix();
        let d_b = self.dim_b;
        CVector::from_fn(self.dim_a() * d_b, |idx, _| m[(idx / d_b, idx % d_b)])
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_matrix_unchecked(linalg::outer(&self.vector()))
    }
}

/// `½ ‖ρ − σ‖₁`, in [0, 1].
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(linalg::half_trace_norm(&(&rho.mat - &sigma.mat))?.clamp(0.0, 1.0))
}

pub fn tensor(rho: &DensityMatrix, sigma: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        mat: linalg::kron(&rho.mat, &sigma.mat),
    }
}

impl Basis {
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: CMatrix, tol: &Tolerances) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let deviation = linalg::unitarity_residual(&mat);
        if deviation > tol.unitary {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn computational(dim: usize) -> Self {
        Self {
            mat: linalg::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.mat.column(i).into_owned()
    }

    /// Product frame `self ⊗ other`.
    pub fn tensor(&self, other: &Basis) -> Basis {
        Basis {
            mat: linalg::kron(&self.mat, &other.mat),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&CVector::from_vec(vec![c(s), c(s)])).unwrap()
    }

    #[test]
    fn validates_maximally_mixed() {
        let rho = DensityMatrix::new(linalg::identity(2) * c(0.5)).unwrap();
        assert_eq!(rho.spectrum().unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn validates_diagonal_stochastic() {
        assert!(DensityMatrix::from_diagonal(&[0.75, 0.25]).is_ok());
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        match DensityMatrix::from_diagonal(&[1.2, -0.2]) {
            Err(Error::NotPsd { min_eigenvalue }) => assert!((min_eigenvalue + 0.2).abs() < 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_hermitian_and_bad_trace() {
        let mut m = linalg::identity(2) * c(0.5);
        m[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            DensityMatrix::from_diagonal(&[0.5, 0.4]),
            Err(Error::TraceNotOne { .. })
        ));
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(DensityMatrix::new(rect), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn spectrum_examples() {
        let p = plus().spectrum().unwrap();
        assert!((p.probs()[0] - 1.0).abs() < 1e-14 && p.probs()[1].abs() < 1e-14);

        let third = DensityMatrix::maximally_mixed(3).spectrum().unwrap();
        for x in third.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }

        // 0.5|+⟩⟨+| + 0.5|0⟩⟨0| = [[0.75, 0.25], [0.25, 0.25]]
        let mix = DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.75), c(0.25), c(0.25), c(0.25)],
        ))
        .unwrap();
        let s = mix.spectrum().unwrap();
        let r2 = 2f64.sqrt();
        assert!((s.probs()[0] - (2.0 + r2) / 4.0).abs() < 1e-14);
        assert!((s.probs()[1] - (2.0 - r2) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_examples() {
        let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        let sigma = plus();
        let prod = tensor(&rho, &sigma);
        let back = partial_trace(&prod, (2, 2), Subsystem::A).unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), rho.matrix()) < 1e-15);
        let other = partial_trace(&prod, (2, 2), Subsystem::B).unwrap();
        assert!(linalg::max_abs_diff(other.matrix(), sigma.matrix()) < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&CVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)])).unwrap();
        let marg = partial_trace(&bell, (2, 2), Subsystem::A).unwrap();
        assert!(linalg::max_abs_diff(marg.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        assert!(matches!(
            partial_trace(&bell, (3, 2), Subsystem::A),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn purification_examples() {
        let zero = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let p = purify(&zero).unwrap();
        assert_eq!(p.dim_b, 1);
        let v = p.vector();
        assert_eq!(v.len(), 2);
        assert!((v[0].norm() - 1.0).abs() < 1e-15 && v[1].norm() < 1e-15);

        let mixed = purify(&DensityMatrix::maximally_mixed(2)).unwrap();
        for a in mixed.amplitudes() {
            assert!((a - 0.5f64.sqrt()).abs() < 1e-14);
        }

        let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        let pf = purify(&rho).unwrap();
        let amps = pf.amplitudes();
        assert!((amps[0] - 0.75f64.sqrt()).abs() < 1e-14);
        assert!((amps[1] - 0.25f64.sqrt()).abs() < 1e-14);
        let back = partial_trace(&pf.density(), (2, pf.dim_b), Subsystem::A).unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn trace_distance_examples() {
        let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        assert!(trace_distance(&rho, &rho).unwrap().abs() < 1e-15);
        let z0 = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let z1 = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!((trace_distance(&z0, &z1).unwrap() - 1.0).abs() < 1e-15);
        let mm = DensityMatrix::maximally_mixed(2);
        assert!((trace_distance(&rho, &mm).unwrap() - 0.25).abs() < 1e-15);
        assert!(trace_distance(&rho, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn tensor_examples() {
        let mm = DensityMatrix::maximally_mixed(2);
        let t = tensor(&mm, &mm);
        assert!(linalg::max_abs_diff(t.matrix(), DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
        let z0 = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let z1 = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        let t01 = tensor(&z0, &z1);
        assert_eq!(t01.diagonal(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.6, 0.5]).is_err());
        assert!(Distribution::new(vec![1.0 + 1e-12, -1e-12]).is_ok());
        assert!(Distribution::new(vec![1.1, -0.1]).is_err());
        let d = Distribution::new(vec![1.0, -1e-12]).unwrap();
        assert_eq!(d.probs()[1], 0.0);
    }

    #[test]
    fn basis_rejects_non_unitary() {
        let m = linalg::identity(2) * c(2.0);
        assert!(matches!(Basis::new(m), Err(Error::NotUnitary { .. })));
    }
}
