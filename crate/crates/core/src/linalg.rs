//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_real_diagonal(diag: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x))))
}

/// Kronecker product `a ⊗ b`, first factor most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(*f))
}

/// `u · m · u†`
pub fn conjugate(u: &CMatrix, m: &CMatrix) -> CMatrix {
    u * m * u.adjoint()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entry of `|u† u − 1|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &identity(n))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending with
/// eigenvectors as the matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 2000 * n.max(4)).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|(v, _)| v)
}

/// `½ Σ |eigenvalues|` of a Hermitian difference.
pub fn half_trace_norm(delta: &CMatrix) -> Result<f64> {
    Ok(0.5 * hermitian_eigenvalues(delta)?.iter().map(|x| x.abs()).sum::<f64>())
}

/// Partial trace over an arbitrary set of tensor factors.
///
/// `dims` lists the factor dimensions (first most significant); `keep` lists the
/// factors that survive, in increasing order.
pub fn reduce(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: m.nrows(),
        });
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::BadInput(format!("invalid subsystem list {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // Strides of each factor in the full index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |subsystems: &[usize], sub_dims: &[usize], flat: usize| -> usize {
        let mut rem = flat;
        let mut off = 0;
        for (pos, &s) in subsystems.iter().enumerate().rev() {
            let d = sub_dims[pos];
            off += (rem % d) * strides[s];
            rem /= d;
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offsets(keep, &kept_dims, i)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offsets(&traced, &traced_dims, i)).collect();

    let mut out = CMatrix::zeros(dk, dk);
    for r in 0..dk {
        for s in 0..dk {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(kept_off[r] + t, kept_off[s] + t)];
            }
            out[(r, s)] = acc;
        }
    }
    Ok(out)
}

/// Partial trace of a bipartite operator on `d_a ⊗ d_b`.
pub fn partial_trace_raw(m: &CMatrix, d_a: usize, d_b: usize, keep_a: bool) -> Result<CMatrix> {
    reduce(m, &[d_a, d_b], if keep_a { &[0] } else { &[1] })
}

/// `a ⊕ b`
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    out
}

/// Permutation matrix sending basis vector `j` to `perm[j]`.
pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let n = perm.len();
    let mut p = CMatrix::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        p[(i, j)] = ONE;
    }
    p
}

/// Cyclic shift `|k⟩ ↦ |k+1 mod d⟩`.
pub fn cyclic_shift(dim: usize) -> CMatrix {
    let perm: Vec<usize> = (0..dim).map(|k| (k + 1) % dim).collect();
    permutation_matrix(&perm)
}

pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_like(n: usize, seed: u64) -> CMatrix {
        // small deterministic LCG
        let mut s = seed;
        CMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            Complex64::new(a, b)
        })
    }

    #[test]
    fn reduce_of_product_returns_factor() {
        let a = rand_like(2, 1);
        let b = rand_like(3, 2);
        let cmat = rand_like(2, 3);
        let full = kron_all(&[&a, &b, &cmat]);
        let tb = trace(&b);
        let tc = trace(&cmat);
        let ta = trace(&a);
        let keep_a = reduce(&full, &[2, 3, 2], &[0]).unwrap();
        assert!(max_abs_diff(&keep_a, &(a.clone() * (tb * tc))) < 1e-12);
        let keep_ac = reduce(&full, &[2, 3, 2], &[0, 2]).unwrap();
        assert!(max_abs_diff(&keep_ac, &(kron(&a, &cmat) * tb)) < 1e-12);
        let keep_b = reduce(&full, &[2, 3, 2], &[1]).unwrap();
        assert!(max_abs_diff(&keep_b, &(b * (ta * tc))) < 1e-12);
    }

    #[test]
    fn eigen_sorted_descending_and_reconstructs() {
        let x = rand_like(5, 9);
        let h = hermitian_part(&x);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = &vecs * from_real_diagonal(&vals) * vecs.adjoint();
        assert!(max_abs_diff(&rebuilt, &h) < 1e-12);
        assert!(unitarity_residual(&vecs) < 1e-12);
    }

    #[test]
    fn shift_powers_are_trace_orthogonal() {
        let x = cyclic_shift(4);
        let mut p = identity(4);
        for k in 0..4 {
            let t = trace(&p);
            let expect = if k == 0 { 4.0 } else { 0.0 };
            assert!((t.re - expect).abs() < 1e-15 && t.im.abs() < 1e-15);
            p = &p * &x;
        }
    }
}
