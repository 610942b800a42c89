//! Worked physical models: truncated thermal states of a bosonic mode, Gaussian
//! covariance matrices with symplectic-eigenvalue entropies and the beamsplitter
//! map, and the center-cluster spin model with Ising couplings.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channels::dephase;
use crate::entropy::{classical_entropy, quantum_entropy, EntropyMeasure};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::qcore::{Basis, DensityMatrix, Distribution};

pub const MAX_FOCK_LEVEL: usize = 4096;
/// Largest level count for which a dense thermal density matrix is built.
pub const MAX_DENSE_FOCK: usize = 512;
pub const SYMPLECTIC_TOL: f64 = 1e-9;
pub const MAX_SPINS: usize = 12;
/// Largest total spin count for the dense cross-check.
pub const MAX_DENSE_SPINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalSpec {
    /// Mean photon number.
    pub nbar: f64,
    /// Highest kept Fock level; `levels + 1` states are kept.
    pub levels: usize,
}

impl ThermalSpec {
    pub fn new(nbar: f64, levels: usize) -> Result<Self> {
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::BadParameter(format!("mean photon number must be >= 0, got {nbar}")));
        }
        if levels > MAX_FOCK_LEVEL {
            return Err(Error::TooLarge(format!("truncation level {levels} exceeds {MAX_FOCK_LEVEL}")));
        }
        Ok(Self { nbar, levels })
    }

    /// Untruncated weight `n̄^k / (n̄+1)^{k+1}`.
    pub fn weight(&self, k: usize) -> f64 {
        if self.nbar == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let r = self.nbar / (self.nbar + 1.0);
        r.powi(k as i32) / (self.nbar + 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalTruncation {
    pub spec: ThermalSpec,
    /// Weights on levels `0..=N`; sum to one when renormalized.
    pub weights: Vec<f64>,
    /// Untruncated mass beyond level `N`.
    pub deficit: f64,
    pub renormalized: bool,
}

impl ThermalTruncation {
    /// Renormalized spectrum.
    pub fn distribution(&self) -> Result<Distribution> {
        Distribution::normalized(self.weights.clone())
    }

    /// Diagonal density matrix of the renormalized truncation.
    pub fn density(&self) -> Result<DensityMatrix> {
        if self.weights.len() > MAX_DENSE_FOCK {
            return Err(Error::TooLarge(format!(
                "dense thermal state with {} levels exceeds {MAX_DENSE_FOCK}",
                self.weights.len()
            )));
        }
        DensityMatrix::from_diagonal(self.distribution()?.probs())
    }

    /// `−Σ w log2 w` over the stored (possibly unnormalized) weights.
    pub fn raw_entropy(&self) -> f64 {
        self.weights.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.log2()).sum()
    }
}

/// Thermal state truncated to the first `N + 1` Fock levels.
pub fn thermal_truncated(spec: ThermalSpec, renormalize: bool) -> ThermalTruncation {
    let mut weights: Vec<f64> = (0..=spec.levels).map(|k| spec.weight(k)).collect();
    let deficit = if spec.nbar == 0.0 {
        0.0
    } else {
        (spec.nbar / (spec.nbar + 1.0)).powi(spec.levels as i32 + 1)
    };
    if renormalize {
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
    }
    ThermalTruncation {
        spec,
        weights,
        deficit,
        renormalized: renormalize,
    }
}

/// Closed-form entropy of the untruncated thermal spectrum, in bits, where available.
pub fn thermal_entropy_limit(nbar: f64, m: &EntropyMeasure) -> Option<f64> {
    if nbar == 0.0 {
        return Some(0.0);
    }
    let r = nbar / (nbar + 1.0);
    let power_sum = |a: f64| (1.0 - r).powf(a) / (1.0 - r.powf(a));
    match m {
        EntropyMeasure::VonNeumann => Some(g_bits(nbar)),
        EntropyMeasure::Renyi { alpha } if (alpha - 1.0).abs() < 1e-12 => Some(g_bits(nbar)),
        EntropyMeasure::Renyi { alpha } => Some(power_sum(*alpha).log2() / (1.0 - alpha)),
        EntropyMeasure::Tsallis { q } if (q - 1.0).abs() < 1e-12 => Some(g_bits(nbar) * std::f64::consts::LN_2),
        EntropyMeasure::Tsallis { q } => Some((power_sum(*q) - 1.0) / (1.0 - q)),
        EntropyMeasure::Generalized(_) => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalConvergenceRow {
    pub levels: usize,
    pub entropy: f64,
    pub deficit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalConvergence {
    pub nbar: f64,
    pub measure: String,
    pub rows: Vec<ThermalConvergenceRow>,
    pub limit: Option<f64>,
    /// Truncation levels at which the entropy decreased relative to the previous one.
    pub monotonicity_flags: Vec<usize>,
    /// `|S(N_max) − limit|`.
    pub limit_gap: Option<f64>,
}

/// Entropies of renormalized truncations over `n_list`, with the analytic limit.
pub fn thermal_entropy_convergence(nbar: f64, n_list: &[usize], m: &EntropyMeasure) -> Result<ThermalConvergence> {
    let mut levels = n_list.to_vec();
    levels.sort_unstable();
    let mut rows = Vec::with_capacity(levels.len());
    for &n in &levels {
        let t = thermal_truncated(ThermalSpec::new(nbar, n)?, true);
        rows.push(ThermalConvergenceRow {
            levels: n,
            entropy: classical_entropy(&t.distribution()?, m)?,
            deficit: t.deficit,
        });
    }
    let monotonicity_flags = rows
        .windows(2)
        .filter(|w| w[1].entropy < w[0].entropy - 1e-12)
        .map(|w| w[1].levels)
        .collect();
    let limit = thermal_entropy_limit(nbar, m);
    let limit_gap = limit.zip(rows.last()).map(|(l, r)| (r.entropy - l).abs());
    Ok(ThermalConvergence {
        nbar,
        measure: m.label(),
        rows,
        limit,
        monotonicity_flags,
        limit_gap,
    })
}

/// `g(x) = (x+1) log2(x+1) − x log2 x`, the entropy of a thermal mode with mean `x`.
pub fn g_bits(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).log2() - x * x.log2()
}

/// Symplectic form `⊕ [[0, 1], [−1, 0]]` for `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Real symmetric `2n × 2n` quadrature covariance matrix (ordering `x₁, p₁, …`), vacuum = identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    mat: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape, symmetry and physicality.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 || mat.nrows() % 2 != 0 {
            return Err(Error::BadInput(format!(
                "covariance matrix must have positive even dimension, got {}",
                mat.nrows()
            )));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadInput("covariance matrix has non-finite entries".into()));
        }
        let deviation = (&mat - mat.transpose()).amax();
        if deviation > 1e-9 {
            return Err(Error::NotHermitian { deviation });
        }
        let cov = Self {
            mat: (&mat + mat.transpose()) * 0.5,
        };
        cov.symplectic_eigenvalues()?;
        Ok(cov)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            mat: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    /// `(2n̄ + 1)·𝟙` for a single mode.
    pub fn thermal(nbar: f64) -> Result<Self> {
        Self::new(DMatrix::identity(2, 2) * (2.0 * nbar + 1.0))
    }

    pub fn modes(&self) -> usize {
        self.mat.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// `2 × 2` block of mode `k`.
    pub fn mode_block(&self, k: usize) -> DMatrix<f64> {
        self.mat.view((2 * k, 2 * k), (2, 2)).into_owned()
    }

    /// Symplectic eigenvalues, ascending: moduli of the eigenvalues of `iΩσ`.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.modes();
        let eig = self.mat.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(Error::Unphysical { min_nu: min_eig.min(0.0) });
        }
        let sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let k = &sqrt * symplectic_form(n) * &sqrt;
        let ik = CMatrix::from_fn(2 * n, 2 * n, |i, j| num_complex::Complex64::new(0.0, k[(i, j)]));
        let vals = linalg::hermitian_eigenvalues(&ik)?;
        let mut nu: Vec<f64> = vals[..n].to_vec();
        nu.sort_by(f64::total_cmp);
        if nu[0] < 1.0 - SYMPLECTIC_TOL {
            return Err(Error::Unphysical { min_nu: nu[0] });
        }
        Ok(nu)
    }

    /// Von Neumann entropy in bits, `Σ g((ν − 1)/2)`.
    pub fn entropy(&self) -> Result<f64> {
        Ok(self.symplectic_eigenvalues()?.iter().map(|&nu| g_bits((nu - 1.0) / 2.0)).sum())
    }
}

/// Free-function form of [`CovarianceMatrix::symplectic_eigenvalues`].
pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<Vec<f64>> {
    cov.symplectic_eigenvalues()
}

/// Mixes a one-mode state with vacuum on a beamsplitter of transmissivity `λ`.
pub fn beamsplitter_covariance(cov_a: &CovarianceMatrix, lambda: f64) -> Result<CovarianceMatrix> {
    if cov_a.modes() != 1 {
        return Err(Error::BadParameter(format!(
            "beamsplitter input must be a single mode, got {}",
            cov_a.modes()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadParameter(format!("transmissivity must lie in [0, 1], got {lambda}")));
    }
    let s = cov_a.matrix();
    let id = DMatrix::<f64>::identity(2, 2);
    let cross = (s - &id) * (lambda * (1.0 - lambda)).sqrt();
    let mut out = DMatrix::zeros(4, 4);
    out.view_mut((0, 0), (2, 2)).copy_from(&(s * lambda + &id * (1.0 - lambda)));
    out.view_mut((2, 2), (2, 2)).copy_from(&(s * (1.0 - lambda) + &id * lambda));
    out.view_mut((0, 2), (2, 2)).copy_from(&cross);
    out.view_mut((2, 0), (2, 2)).copy_from(&cross);
    CovarianceMatrix::new(out)
}

/// Center cluster of `m` spins coupled to `n` outer spins by `H = Σ ω_{sj} Z_s Z_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinClusterConfig {
    pub m: usize,
    pub n: usize,
    /// `m × n` couplings `ω_{sj}`.
    pub omega: Vec<Vec<f64>>,
    pub t: f64,
}

impl SpinClusterConfig {
    pub fn new(omega: Vec<Vec<f64>>, t: f64) -> Result<Self> {
        let m = omega.len();
        let n = omega.first().map_or(0, Vec::len);
        if m == 0 {
            return Err(Error::BadParameter("at least one center spin is required".into()));
        }
        if omega.iter().any(|row| row.len() != n) {
            return Err(Error::BadInput("coupling rows must have equal length".into()));
        }
        if m + n > MAX_SPINS {
            return Err(Error::TooLarge(format!("{} spins exceed {MAX_SPINS}", m + n)));
        }
        if !t.is_finite() || omega.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::BadParameter("couplings and time must be finite".into()));
        }
        Ok(Self { m, n, omega, t })
    }

    pub fn with_time(&self, t: f64) -> Self {
        Self { t, ..self.clone() }
    }

    /// `Σ_s Σ_j ω_{sj} z_s z_j` with `z = +1` for bit 0.
    fn energy(&self, center: usize, outer: usize) -> f64 {
        let z = |bits: usize, k: usize, len: usize| if (bits >> (len - 1 - k)) & 1 == 0 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for s in 0..self.m {
            let zs = z(center, s, self.m);
            for j in 0..self.n {
                e += self.omega[s][j] * zs * z(outer, j, self.n);
            }
        }
        e
    }
}

/// `(𝟙 + X^{⊗m}) / 2^m`.
pub fn polarized_state(m: usize) -> DensityMatrix {
    let d = 1usize << m;
    let mut mat = CMatrix::identity(d, d);
    for i in 0..d {
        mat[(i, (d - 1) ^ i)] += linalg::ONE;
    }
    DensityMatrix::from_matrix_unchecked(mat / linalg::c(d as f64))
}

/// Reduced center state at time `T`, evolving in the `Z` product basis by phases.
pub fn spin_center_state(cfg: &SpinClusterConfig) -> DensityMatrix {
    let dc = 1usize << cfg.m;
    let dout = 1usize << cfg.n;
    let rho0 = polarized_state(cfg.m);
    let energies: Vec<Vec<f64>> = (0..dc).map(|c| (0..dout).map(|o| cfg.energy(c, o)).collect()).collect();
    let mut mat = CMatrix::from_element(dc, dc, ZERO);
    for a in 0..dc {
        for b in 0..dc {
            let r = rho0.matrix()[(a, b)];
            if r == ZERO {
                continue;
            }
            let avg: num_complex::Complex64 = (0..dout)
                .map(|o| num_complex::Complex64::from_polar(1.0, -(energies[a][o] - energies[b][o]) * cfg.t))
                .sum::<num_complex::Complex64>()
                / dout as f64;
            mat[(a, b)] = r * avg;
        }
    }
    DensityMatrix::from_matrix_unchecked(mat)
}

/// Same state by dense exponentiation of the full Hamiltonian.
pub fn spin_center_state_dense(cfg: &SpinClusterConfig) -> Result<DensityMatrix> {
    if cfg.m + cfg.n > MAX_DENSE_SPINS {
        return Err(Error::TooLarge(format!(
            "dense spin simulation supports at most {MAX_DENSE_SPINS} spins"
        )));
    }
    let (dc, dout) = (1usize << cfg.m, 1usize << cfg.n);
    let dim = dc * dout;
    let h = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            linalg::c(cfg.energy(i / dout, i % dout))
        } else {
            ZERO
        }
    });
    let u = (h * num_complex::Complex64::new(0.0, -cfg.t)).exp();
    let rho0 = linalg::kron(polarized_state(cfg.m).matrix(), &(CMatrix::identity(dout, dout) / linalg::c(dout as f64)));
    let evolved = linalg::conjugate(&u, &rho0);
    Ok(DensityMatrix::from_matrix_unchecked(linalg::reduce(&evolved, &[dc, dout], &[0])?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinClusterResult {
    pub t: f64,
    pub s_exact: f64,
    pub s_dephased: f64,
    pub x_decay: f64,
}

/// Von Neumann entropies (bits) of the center state and of its dephasing in `j`, and `tr(X^{⊗m} ρ_c(T))`.
pub fn spin_cluster_entropy(cfg: &SpinClusterConfig, j: &Basis) -> Result<SpinClusterResult> {
    let rho_c = spin_center_state(cfg);
    if j.dim() != rho_c.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho_c.dim(),
            found: j.dim(),
        });
    }
    let vn = EntropyMeasure::VonNeumann;
    let d = rho_c.dim();
    let x_decay = (0..d).map(|i| rho_c.matrix()[(i, (d - 1) ^ i)].re).sum();
    Ok(SpinClusterResult {
        t: cfg.t,
        s_exact: quantum_entropy(&rho_c, &vn)?,
        s_dephased: quantum_entropy(&dephase(&rho_c, j)?, &vn)?,
        x_decay,
    })
}

/// Closed form `Π_j cos(2 ω_j T)` for a single center spin.
pub fn single_spin_decay(omega: &[f64], t: f64) -> f64 {
    omega.iter().map(|w| (2.0 * w * t).cos()).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_examples() {
        let vac = thermal_truncated(ThermalSpec::new(0.0, 5).unwrap(), true);
        assert_eq!(vac.weights[0], 1.0);
        assert!(vac.weights[1..].iter().all(|&w| w == 0.0));

        let raw = thermal_truncated(ThermalSpec::new(1.0, 3).unwrap(), false);
        assert_eq!(raw.weights, vec![0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(raw.deficit, 0.0625);

        let t = thermal_truncated(ThermalSpec::new(1.0, 64).unwrap(), true);
        let s = classical_entropy(&t.distribution().unwrap(), &EntropyMeasure::VonNeumann).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(matches!(ThermalSpec::new(1.0, 5000), Err(Error::TooLarge(_))));
    }

    #[test]
    fn thermal_convergence_limits() {
        let c = thermal_entropy_convergence(1.0, &[4, 8, 16, 32, 64], &EntropyMeasure::VonNeumann).unwrap();
        assert!(c.limit_gap.unwrap() < 1e-12);
        assert!(c.monotonicity_flags.is_empty());
        let r = thermal_entropy_convergence(1.0, &[64], &EntropyMeasure::renyi(2.0).unwrap()).unwrap();
        assert!((r.limit.unwrap() - 3f64.log2()).abs() < 1e-15);
        assert!(r.limit_gap.unwrap() < 1e-12);
        let z = thermal_entropy_convergence(0.0, &[1, 4], &EntropyMeasure::tsallis(2.0).unwrap()).unwrap();
        assert!(z.rows.iter().all(|row| row.entropy.abs() < 1e-15));
    }

    #[test]
    fn symplectic_examples() {
        let vac = CovarianceMatrix::vacuum(1);
        assert!((vac.symplectic_eigenvalues().unwrap()[0] - 1.0).abs() < 1e-12);
        assert!(vac.entropy().unwrap().abs() < 1e-12);
        let th = CovarianceMatrix::thermal(1.0).unwrap();
        assert!((th.symplectic_eigenvalues().unwrap()[0] - 3.0).abs() < 1e-12);
        assert!((th.entropy().unwrap() - 2.0).abs() < 1e-12);
        let two = CovarianceMatrix::vacuum(2).symplectic_eigenvalues().unwrap();
        assert!(two.iter().all(|nu| (nu - 1.0).abs() < 1e-12));
        let squeezed = CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 0.25]))).unwrap();
        assert!((squeezed.symplectic_eigenvalues().unwrap()[0] - 1.0).abs() < 1e-12);
        assert!(matches!(
            CovarianceMatrix::new(DMatrix::identity(2, 2) * 0.5),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn beamsplitter_examples() {
        let th = CovarianceMatrix::thermal(1.0).unwrap();
        let out = beamsplitter_covariance(&th, 1.0).unwrap();
        assert_eq!(out.mode_block(0), *th.matrix());
        let out = beamsplitter_covariance(&th, 0.0).unwrap();
        assert_eq!(out.mode_block(0), DMatrix::identity(2, 2));
        let out = beamsplitter_covariance(&th, 0.5).unwrap();
        let a = CovarianceMatrix::new(out.mode_block(0)).unwrap();
        assert!((a.symplectic_eigenvalues().unwrap()[0] - 2.0).abs() < 1e-12);
        assert!((a.entropy().unwrap() - g_bits(0.5)).abs() < 1e-12);
        assert!((g_bits(0.5) - 1.3774437510817343).abs() < 1e-15);
        let nu = out.symplectic_eigenvalues().unwrap();
        assert!(nu.iter().all(|&v| (v - 1.0).abs() < 1e-9 || (v - 3.0).abs() < 1e-9));
        assert!(beamsplitter_covariance(&th, 1.5).is_err());
    }

    #[test]
    fn spin_examples() {
        let comp = Basis::computational(2);
        let cfg = SpinClusterConfig::new(vec![vec![1.0, 1.0]], 0.0).unwrap();
        let r = spin_cluster_entropy(&cfg, &comp).unwrap();
        assert!(r.s_exact.abs() < 1e-12 && (r.x_decay - 1.0).abs() < 1e-12);
        for t in [0.1, 0.37, 1.2] {
            let r = spin_cluster_entropy(&cfg.with_time(t), &comp).unwrap();
            assert!((r.x_decay - (2.0 * t).cos().powi(2)).abs() < 1e-9);
            let p = (1.0 + r.x_decay) / 2.0;
            let h2 = classical_entropy(&Distribution::new(vec![p, 1.0 - p]).unwrap(), &EntropyMeasure::VonNeumann).unwrap();
            assert!((r.s_exact - h2).abs() < 1e-9);
            assert!(r.s_dephased >= r.s_exact - 1e-9);
        }
    }

    #[test]
    fn spin_phase_evolution_matches_dense() {
        let cfg = SpinClusterConfig::new(vec![vec![0.3, -0.7], vec![1.1, 0.4]], 0.83).unwrap();
        let fast = spin_center_state(&cfg);
        let dense = spin_center_state_dense(&cfg).unwrap();
        assert!(linalg::max_abs_diff(fast.matrix(), dense.matrix()) < 1e-12);
    }
}
