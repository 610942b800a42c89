//! Quantum and classical entropy toolkit: entropy families on density operators,
//! dephasing minimax principles, maximum-entropy spectrum estimation,
//! typical-subspace compression and explicit unitaries for single-shot state
//! transitions.

pub mod channels;
pub mod compression;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod maxent;
pub mod models;
pub mod principles;
pub mod qcore;
pub mod transitions;

pub use channels::{dephase, dephasing_lift, haar_basis, measurement_distribution, DephasingLift};
pub use entropy::{
    check_generalized_axioms, classical_entropy, conditional_entropy, mutual_information, quantum_entropy,
    AxiomReport, Axioms, Axis, EntropyMeasure, GeneralizedEntropy, JointDistribution, LogBase,
};
pub use compression::{rate_fidelity_curve, typical_set, typical_subspace_fidelity, SubspaceReport, TypicalSet};
pub use error::{Error, Result};
pub use maxent::{solve_maxent_full, solve_maxent_relaxed, MaxEntProblem, MaxEntSolution};
pub use models::{
    beamsplitter_covariance, spin_cluster_entropy, symplectic_eigenvalues, thermal_entropy_convergence,
    thermal_truncated, CovarianceMatrix, SpinClusterConfig, ThermalSpec,
};
pub use principles::{verify_joint_principles, verify_local_minimum, PrincipleReport};
pub use qcore::{
    partial_trace, purify, spectrum, tensor, trace_distance, validate_density, Basis, DensityMatrix,
    Distribution, Purification, Subsystem, Tolerances,
};
pub use transitions::{
    approx_transition_truncated, compose_catalytic, construct_noisy_transition, majorizes, probabilistic_conversion,
    schur_horn_rotation, search_catalyst, CatalystOracle, MajorizationCert, TransitionPlan,
};
