use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use catent::compression::rate_fidelity_curve;
use catent::entropy::{quantum_entropy_in, EntropyMeasure, LogBase};
use catent::maxent::{self, MaxEntProblem};
use catent::models::{self, CovarianceMatrix, SpinClusterConfig};
use catent::principles::{self, PrincipleReport};
use catent::transitions::{self, CatalystOracle, NoisyTransitionOracle, SearchOracle, TransitionPlan};
use catent::{Basis, DensityMatrix, Distribution, Tolerances};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{self, MatrixJson, Table};

/// Settings shared by every subcommand.
pub struct Globals {
    pub measure: EntropyMeasure,
    pub samples: usize,
    pub seed: u64,
    pub tol: Tolerances,
    pub solver_tol: f64,
    pub base: LogBase,
}

/// A command's report and whether all of its checks passed.
pub struct Outcome {
    pub json: Value,
    pub table: Option<Table>,
    pub passed: bool,
}

impl Outcome {
    fn ok(json: Value) -> Self {
        Self {
            json,
            table: None,
            passed: true,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

pub fn entropy(g: &Globals, matrix: &Path) -> Result<Outcome> {
    let rho = io::read_density(matrix, &g.tol)?;
    let value = quantum_entropy_in(&rho, &g.measure, g.base)?;
    let base = match g.base {
        LogBase::Two => json!(2),
        LogBase::E => json!("e"),
    };
    Ok(Outcome::ok(json!({
        "value": value,
        "measure": g.measure.label(),
        "base": base,
    })))
}

pub fn dephase(g: &Globals, matrix: &Path, basis: &Path) -> Result<Outcome> {
    let rho = io::read_density(matrix, &g.tol)?;
    let j = io::read_basis(basis, &g.tol)?;
    let out = catent::dephase(&rho, &j)?;
    Ok(Outcome::ok(to_value(&MatrixJson::from_matrix(out.matrix()))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PrincipleCheck {
    Local,
    Joint,
}

pub fn verify_principles(g: &Globals, matrix: &Path, check: PrincipleCheck) -> Result<Outcome> {
    let rho = io::read_density(matrix, &g.tol)?;
    let report: PrincipleReport = match check {
        PrincipleCheck::Local => principles::verify_local_minimum(&rho, &g.measure, g.samples, g.seed)?,
        PrincipleCheck::Joint => principles::verify_joint_principles(&rho, &g.measure, g.samples, g.seed)?,
    };
    Ok(Outcome {
        passed: report.passed(),
        json: to_value(&report)?,
        table: None,
    })
}

#[derive(Debug, Deserialize)]
struct MaxEntInput {
    q: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    #[serde(default)]
    measure: Option<String>,
}

pub fn maxent(g: &Globals, problem: &Path, oracle: bool, relaxed: bool, resolution: usize) -> Result<Outcome> {
    let input: MaxEntInput = io::read_json(problem)?;
    let measure = match &input.measure {
        Some(s) => s.parse::<EntropyMeasure>()?,
        None => g.measure.clone(),
    };
    let q = Distribution::with_tolerances(input.q, &g.tol).context("q is not a probability vector")?;
    let prob = MaxEntProblem::new(q, input.alpha, measure)?;
    let sol = if relaxed {
        maxent::solve_maxent_relaxed(&prob)?
    } else {
        maxent::solve_maxent_full(&prob, g.solver_tol)?
    };
    let mut passed = sol.converged;
    if !oracle {
        return Ok(Outcome {
            json: to_value(&sol)?,
            table: None,
            passed,
        });
    }
    let brute = if relaxed {
        maxent::brute_force_relaxed(&prob, resolution)?
    } else {
        maxent::brute_force_maxent(&prob, resolution)?
    };
    let gap = brute.objective - sol.objective;
    passed &= gap <= 1e-4;
    Ok(Outcome {
        json: json!({
            "solution": to_value(&sol)?,
            "oracle": to_value(&brute)?,
            "objective_gap": gap,
        }),
        table: None,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TransitionMode {
    Noisy,
    Catalytic,
    Approx,
    Probabilistic,
}

pub struct TransitionArgs {
    pub source: PathBuf,
    pub target: PathBuf,
    pub mode: TransitionMode,
    pub basis: Option<PathBuf>,
    pub epsilon: f64,
    pub catalyst_dim: Option<usize>,
    pub budget: usize,
    pub padding: Option<usize>,
    pub emit_unitary: bool,
}

/// Spectrum input for truncated transitions.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StreamInput {
    Geometric { geometric: f64 },
    Thermal { thermal: f64 },
    Probs(Vec<f64>),
    Matrix(MatrixJson),
}

enum Stream {
    Geometric(f64),
    Finite(Distribution),
}

impl transitions::SpectrumStream for Stream {
    fn prob(&self, k: usize) -> f64 {
        match self {
            Stream::Geometric(r) => (1.0 - r) * r.powi(k as i32),
            Stream::Finite(d) => d.probs().get(k).copied().unwrap_or(0.0),
        }
    }
}

fn read_stream(path: &Path, tol: &Tolerances) -> Result<Stream> {
    let input: StreamInput = io::read_json(path).with_context(|| {
        format!(
            "expected {{\"geometric\": r}}, {{\"thermal\": nbar}}, a probability array or matrix JSON {}",
            io::MATRIX_SCHEMA
        )
    })?;
    Ok(match input {
        StreamInput::Geometric { geometric } if (0.0..1.0).contains(&geometric) => Stream::Geometric(geometric),
        StreamInput::Geometric { geometric } => bail!("geometric ratio must lie in [0, 1), got {geometric}"),
        StreamInput::Thermal { thermal } if thermal >= 0.0 => Stream::Geometric(thermal / (thermal + 1.0)),
        StreamInput::Thermal { thermal } => bail!("mean photon number must be >= 0, got {thermal}"),
        StreamInput::Probs(p) => {
            let d = Distribution::with_tolerances(p, tol)?;
            Stream::Finite(Distribution::new(d.sorted_desc())?)
        }
        StreamInput::Matrix(m) => {
            let rho = DensityMatrix::with_tolerances(m.to_matrix()?, tol)?;
            Stream::Finite(rho.spectrum()?)
        }
    })
}

fn plan_json(mode: &str, plan: &TransitionPlan, emit_unitary: bool) -> Result<Value> {
    let mut v = json!({
        "mode": mode,
        "source_spectrum": plan.source_spectrum.probs(),
        "target_spectrum": plan.target_spectrum.probs(),
        "ancilla_dims": plan.ancilla_dims,
        "total_dim": plan.total_dim(),
        "residual_target": plan.residual_target,
        "residual_marginal": plan.residual_marginal,
        "success_probability": plan.success_probability,
        "levels": plan.levels,
        "catalyst": plan.catalyst.as_ref().map(|c| MatrixJson::from_matrix(c.matrix())),
        "warnings": plan.warnings,
    });
    if emit_unitary {
        v["unitary"] = to_value(&MatrixJson::from_matrix(&plan.global_unitary))?;
    }
    Ok(v)
}

pub fn transition(g: &Globals, a: &TransitionArgs) -> Result<Outcome> {
    let (label, plan) = match a.mode {
        TransitionMode::Approx => {
            let p = read_stream(&a.source, &g.tol)?;
            let q = read_stream(&a.target, &g.tol)?;
            let search;
            let oracle: Option<&dyn CatalystOracle> = match a.catalyst_dim {
                Some(k) => {
                    search = SearchOracle {
                        dim_catalyst: k,
                        iteration_budget: a.budget,
                        rng_seed: g.seed,
                    };
                    Some(&search)
                }
                None => None,
            };
            ("approx", transitions::approx_transition_truncated(&p, &q, a.epsilon, oracle)?)
        }
        mode => {
            let rho = io::read_density(&a.source, &g.tol)?;
            let target = io::read_density(&a.target, &g.tol)?;
            match mode {
                TransitionMode::Noisy => ("noisy", transitions::construct_noisy_transition(&rho, &target)?),
                TransitionMode::Probabilistic => (
                    "probabilistic",
                    transitions::probabilistic_conversion(&rho, &target, a.padding)?,
                ),
                _ => {
                    let j = match &a.basis {
                        Some(p) => io::read_basis(p, &g.tol)?,
                        None => Basis::computational(rho.dim()),
                    };
                    let plan = match a.catalyst_dim {
                        Some(k) => {
                            let oracle = SearchOracle {
                                dim_catalyst: k,
                                iteration_budget: a.budget,
                                rng_seed: g.seed,
                            };
                            transitions::compose_catalytic(&rho, &j, &target, &oracle)?
                        }
                        None => transitions::compose_catalytic(&rho, &j, &target, &NoisyTransitionOracle)?,
                    };
                    ("catalytic", plan)
                }
            }
        }
    };
    Ok(Outcome::ok(plan_json(label, &plan, a.emit_unitary)?))
}

pub fn compress(g: &Globals, matrix: &Path, basis: Option<&Path>, n_list: &[usize], rates: &[f64]) -> Result<Outcome> {
    let rho = io::read_density(matrix, &g.tol)?;
    let j = match basis {
        Some(p) => io::read_basis(p, &g.tol)?,
        None => Basis::computational(rho.dim()),
    };
    let curve = rate_fidelity_curve(&rho, &j, n_list, rates)?;
    let mut table = Table::new(&["n", "rate", "fidelity", "log2dim"]);
    let mut rows = Vec::new();
    for r in &curve.rows {
        table.push(vec![json!(r.n), json!(r.rate), json!(r.fidelity), json!(r.kept_dimension_log2)]);
        rows.push(json!({"n": r.n, "rate": r.rate, "fidelity": r.fidelity, "log2dim": r.kept_dimension_log2}));
    }
    Ok(Outcome {
        passed: curve.is_monotone(),
        json: json!({
            "rows": rows,
            "monotone": curve.is_monotone(),
            "monotonicity_violations": curve.monotonicity_violations,
        }),
        table: Some(table),
    })
}

pub fn network_chain(g: &Globals, links: &Path) -> Result<Outcome> {
    let links: Vec<Vec<f64>> = io::read_json(links).context("expected a JSON list of Schmidt probability arrays")?;
    let net = principles::build_chain_network(&links, &g.measure)?;
    let mut table = Table::new(&["omitted", "marginal_entropy", "max_node_entropy", "violated"]);
    for m in &net.marginals {
        let max_node = m.nodes.iter().map(|&i| net.node_entropies[i]).fold(f64::NEG_INFINITY, f64::max);
        let violated = net.violations.iter().any(|v| v.marginal_nodes == m.nodes);
        table.push(vec![json!(m.omitted), json!(m.entropy), json!(max_node), json!(violated)]);
    }
    let mut json = to_value(&net)?;
    json["classical_bound_violated"] = json!(!net.violations.is_empty());
    Ok(Outcome {
        json,
        table: Some(table),
        passed: true,
    })
}

pub fn models_thermal(g: &Globals, nbar: f64, n_list: &[usize]) -> Result<Outcome> {
    let conv = models::thermal_entropy_convergence(nbar, n_list, &g.measure)?;
    let mut table = Table::new(&["N", "entropy", "deficit"]);
    for r in &conv.rows {
        table.push(vec![json!(r.levels), json!(r.entropy), json!(r.deficit)]);
    }
    Ok(Outcome {
        passed: conv.monotonicity_flags.is_empty(),
        json: to_value(&conv)?,
        table: Some(table),
    })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CovInput {
    Rows(Vec<Vec<f64>>),
    Wrapped { cov: Vec<Vec<f64>> },
}

pub fn models_gaussian(cov: &Path, lambdas: &[f64]) -> Result<Outcome> {
    let rows = match io::read_json::<CovInput>(cov).context("expected a 2x2 covariance matrix as nested arrays")? {
        CovInput::Rows(r) | CovInput::Wrapped { cov: r } => r,
    };
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        bail!("covariance matrix must be square");
    }
    let cov_a = CovarianceMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))?;
    let mut table = Table::new(&["lambda", "nu_a", "entropy_a", "nu_b", "entropy_b", "entropy_total"]);
    let mut out = Vec::new();
    for &lambda in lambdas {
        let cov = models::beamsplitter_covariance(&cov_a, lambda)?;
        let a = CovarianceMatrix::new(cov.mode_block(0))?;
        let b = CovarianceMatrix::new(cov.mode_block(1))?;
        let (nu_a, nu_b) = (a.symplectic_eigenvalues()?[0], b.symplectic_eigenvalues()?[0]);
        let (sa, sb, st) = (a.entropy()?, b.entropy()?, cov.entropy()?);
        table.push(vec![json!(lambda), json!(nu_a), json!(sa), json!(nu_b), json!(sb), json!(st)]);
        let m = cov.matrix();
        let out_rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect();
        out.push(json!({
            "lambda": lambda,
            "output_cov": out_rows,
            "symplectic_eigenvalues": cov.symplectic_eigenvalues()?,
            "nu_a": nu_a,
            "entropy_a": sa,
            "nu_b": nu_b,
            "entropy_b": sb,
            "entropy_total": st,
        }));
    }
    Ok(Outcome {
        json: json!({
            "input_symplectic_eigenvalues": cov_a.symplectic_eigenvalues()?,
            "input_entropy": cov_a.entropy()?,
            "outputs": out,
        }),
        table: Some(table),
        passed: true,
    })
}

pub fn models_spin(
    g: &Globals,
    omega: &Path,
    m: Option<usize>,
    n: Option<usize>,
    t_list: &[f64],
    basis: Option<&Path>,
) -> Result<Outcome> {
    let omega: Vec<Vec<f64>> = io::read_json(omega).context("expected couplings as an m x n nested array")?;
    let cfg = SpinClusterConfig::new(omega, 0.0)?;
    if m.is_some_and(|m| m != cfg.m) || n.is_some_and(|n| n != cfg.n) {
        bail!("--m/--n disagree with the coupling array shape {}x{}", cfg.m, cfg.n);
    }
    let j = match basis {
        Some(p) => io::read_basis(p, &g.tol)?,
        None => Basis::computational(1 << cfg.m),
    };
    let mut table = Table::new(&["T", "s_exact", "s_dephased", "x_decay"]);
    let mut rows = Vec::new();
    let mut passed = true;
    for &t in t_list {
        let r = models::spin_cluster_entropy(&cfg.with_time(t), &j)?;
        passed &= r.s_dephased >= r.s_exact - 1e-9;
        table.push(vec![json!(r.t), json!(r.s_exact), json!(r.s_dephased), json!(r.x_decay)]);
        rows.push(to_value(&r)?);
    }
    Ok(Outcome {
        json: json!({"m": cfg.m, "n": cfg.n, "rows": rows}),
        table: Some(table),
        passed,
    })
}
