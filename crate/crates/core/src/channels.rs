//! Dephasing channels, Born-rule observations, Haar sampling and the dephasing lift.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::qcore::{self, Basis, DensityMatrix, Distribution, Subsystem};

/// Residual tolerance for the lift identities.
pub const LIFT_TOL: f64 = 1e-10;

/// The crate-wide seeded generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_dims(rho: &DensityMatrix, j: &Basis) -> Result<()> {
    if rho.dim() != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Born-rule probabilities `q_i = ⟨g_i|ρ|g_i⟩`.
pub fn measurement_distribution(rho: &DensityMatrix, j: &Basis) -> Result<Distribution> {
    check_dims(rho, j)?;
    let b = j.matrix();
    let rotated = b.adjoint() * rho.matrix() * b;
    let q: Vec<f64> = rotated.diagonal().iter().map(|z| z.re.max(0.0)).collect();
    Distribution::normalized(q)
}

/// `D_J(ρ) = Σ_i q_i |g_i⟩⟨g_i|`
pub fn dephase(rho: &DensityMatrix, j: &Basis) -> Result<DensityMatrix> {
    let q = measurement_distribution(rho, j)?;
    DensityMatrix::from_spectrum(&q, j)
}

/// Haar-distributed unitary from the QR factorization of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        num_complex::Complex64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Deterministic Haar-random basis.
pub fn haar_basis(dim: usize, rng_seed: u64) -> Basis {
    let mut rng = rng_from_seed(rng_seed);
    Basis::from_matrix_unchecked(haar_unitary(dim, &mut rng))
}

pub fn haar_basis_from<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Basis {
    Basis::from_matrix_unchecked(haar_unitary(dim, rng))
}

/// Uniform (flat Dirichlet) random probability vector.
pub fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    Distribution::normalized(w).expect("exponential weights are positive")
}

/// Hilbert–Schmidt random density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        num_complex::Complex64::new(re, im)
    });
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::from_matrix_unchecked(m * c(1.0 / tr))
}

/// Random density matrix with a flat-Dirichlet spectrum in a Haar-random basis.
pub fn random_density_with_spectrum<R: Rng + ?Sized>(spectrum: &Distribution, rng: &mut R) -> DensityMatrix {
    let basis = haar_basis_from(spectrum.len(), rng);
    DensityMatrix::from_spectrum(spectrum, &basis).expect("dimensions agree")
}

pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let v = CVector::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        num_complex::Complex64::new(re, im)
    });
    DensityMatrix::pure(&v).expect("Gaussian vector is nonzero")
}

/// Controlled-shift unitary `U₁ = Σ_j |g_j⟩⟨g_j| ⊗ V_j` with `V_j = B X^j B†`.
///
/// Acting on `ρ ⊗ 𝟙/d`, it dephases the first factor in `J` and leaves the second
/// maximally mixed.
#[derive(Debug, Clone)]
pub struct DephasingLift {
    pub basis: Basis,
    pub shift_unitaries: Vec<CMatrix>,
    pub global_unitary: CMatrix,
}

/// Lift residuals on one probe state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftResiduals {
    /// `D(tr_b[U(ρ⊗𝟙/d)U†], D_J(ρ))`
    pub dephased: f64,
    /// `D(tr_a[U(ρ⊗𝟙/d)U†], 𝟙/d)`
    pub ancilla: f64,
}

impl DephasingLift {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `U₁ (ρ ⊗ 𝟙/d) U₁†`
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dims(rho, &self.basis)?;
        let joint = qcore::tensor(rho, &DensityMatrix::maximally_mixed(self.dim()));
        joint.conjugated(&self.global_unitary)
    }

    pub fn residuals(&self, rho: &DensityMatrix) -> Result<LiftResiduals> {
        let d = self.dim();
        let out = self.apply(rho)?;
        let a = qcore::partial_trace(&out, (d, d), Subsystem::A)?;
        let b = qcore::partial_trace(&out, (d, d), Subsystem::B)?;
        Ok(LiftResiduals {
            dephased: qcore::trace_distance(&a, &dephase(rho, &self.basis)?)?,
            ancilla: qcore::trace_distance(&b, &DensityMatrix::maximally_mixed(d))?,
        })
    }

    /// `tr[V_i V_j†]` table.
    pub fn orthogonality_table(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| {
            linalg::trace(&(&self.shift_unitaries[i] * self.shift_unitaries[j].adjoint()))
        })
    }
}

/// Build and verify the dephasing lift for `J`.
pub fn dephasing_lift(j: &Basis) -> Result<DephasingLift> {
    let lift = build_lift(j);
    let d = j.dim();

    let table = lift.orthogonality_table();
    let ortho = linalg::max_abs_diff(&table, &(linalg::identity(d) * c(d as f64)));
    if ortho > 1e-9 * d as f64 {
        return Err(Error::VerificationFailed {
            what: "shift orthogonality".into(),
            residual: ortho,
            tolerance: 1e-9 * d as f64,
        });
    }
    let mut rng = rng_from_seed(0x11f7 ^ d as u64);
    for _ in 0..3 {
        let probe = random_density(d, &mut rng);
        let r = lift.residuals(&probe)?;
        let worst = r.dephased.max(r.ancilla);
        if worst > LIFT_TOL {
            return Err(Error::VerificationFailed {
                what: "dephasing lift marginals".into(),
                residual: worst,
                tolerance: LIFT_TOL,
            });
        }
    }
    Ok(lift)
}

pub(crate) fn build_lift(j: &Basis) -> DephasingLift {
    let d = j.dim();
    let b = j.matrix();
    let x = linalg::cyclic_shift(d);
    let mut shift_unitaries = Vec::with_capacity(d);
    let mut power = linalg::identity(d);
    for _ in 0..d {
        shift_unitaries.push(b * &power * b.adjoint());
        power = &x * power;
    }
    let mut global_unitary = CMatrix::zeros(d * d, d * d);
    for (k, v) in shift_unitaries.iter().enumerate() {
        let g = j.vector(k);
        global_unitary += linalg::kron(&linalg::outer(&g), v);
    }
    DephasingLift {
        basis: j.clone(),
        shift_unitaries,
        global_unitary,
    }
}
