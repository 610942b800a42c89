use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use catent::channels::{self, haar_basis_from, random_density, random_distribution, rng_from_seed};
use catent::compression::{typical_set, typical_subspace_fidelity};
use catent::entropy::{classical_entropy, EntropyMeasure};
use catent::maxent::{brute_force_maxent, solve_maxent_full, MaxEntProblem, DEFAULT_RESOLUTION};
use catent::models::{self, CovarianceMatrix, SpinClusterConfig, ThermalSpec};
use catent::principles::{build_chain_network, uncertainty_check, verify_joint_principles, verify_local_minimum};
use catent::transitions::{
    approx_transition_truncated, compose_catalytic, construct_noisy_transition, geometric_stream,
    probabilistic_bound, probabilistic_conversion, NoisyTransitionOracle,
};
use catent::{dephase, Basis, DensityMatrix, Distribution};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn measures() -> Vec<EntropyMeasure> {
    vec![
        EntropyMeasure::VonNeumann,
        EntropyMeasure::renyi(0.5).unwrap(),
        EntropyMeasure::renyi(2.0).unwrap(),
        EntropyMeasure::tsallis(0.5).unwrap(),
        EntropyMeasure::tsallis(2.0).unwrap(),
    ]
}

/// A spectrum majorized by `lam`: a random convex combination of permutations of it.
fn majorized_by(lam: &Distribution, rng: &mut ChaCha8Rng) -> Distribution {
    let n = lam.len();
    let weights = random_distribution(3, rng);
    let mut out = vec![0.0; n];
    for &w in weights.probs() {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for i in 0..n {
            out[i] += w * lam.probs()[perm[i]];
        }
    }
    Distribution::normalized(out).unwrap()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = rng_from_seed(101);
    let ms = measures();
    let mut fails_a = vec![0usize; ms.len()];
    let mut fails_b = vec![0usize; ms.len()];
    let mut fails_joint = vec![0usize; ms.len()];
    let mut fails_mi = vec![0usize; ms.len()];
    let mut fails_eq = vec![0usize; ms.len()];
    for i in 0..200 {
        let rho = random_density(2 + i % 4, &mut rng);
        for (k, m) in ms.iter().enumerate() {
            let seed = 1000 * i as u64 + k as u64;
            let local = verify_local_minimum(&rho, m, 500, seed).unwrap();
            fails_a[k] += usize::from((local.eigenbasis_value - local.s_rho).abs() > 1e-9);
            fails_b[k] += usize::from(!local.violations.is_empty());
            let joint = verify_joint_principles(&rho, m, 500, seed).unwrap();
            fails_joint[k] += usize::from(joint.violations.iter().any(|v| v.kind.starts_with("joint")));
            fails_mi[k] += usize::from(joint.violations.iter().any(|v| v.kind.starts_with("cross")));
            fails_eq[k] += usize::from(!joint.achieved_at_eigenbasis);
        }
    }
    let elapsed = start.elapsed();
    let mut parts = Vec::new();
    let mut pass = elapsed < Duration::from_secs(300);
    for (k, m) in ms.iter().enumerate() {
        let bad = fails_a[k] + fails_b[k] + fails_joint[k] + fails_mi[k] + fails_eq[k];
        pass &= bad == 0;
        parts.push(format!(
            "{}: a={} b={} c-joint={} c-mi={} c-eq={}",
            m.label(),
            fails_a[k],
            fails_b[k],
            fails_joint[k],
            fails_mi[k],
            fails_eq[k]
        ));
    }
    verdict(
        pass,
        format!("failing states per check [{}], {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = rng_from_seed(202);
    let ms = measures();
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for i in 0..1000 {
        let d = 2 + i % 4;
        let rho = random_density(d, &mut rng);
        let j1 = haar_basis_from(d, &mut rng);
        let j2 = haar_basis_from(d, &mut rng);
        for m in &ms {
            let c = uncertainty_check(&rho, &j1, &j2, m).unwrap();
            worst = worst.min(c.lhs - c.rhs);
            violations += usize::from(!c.pass);
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations over 1000 triples x 5 measures, min slack {worst:.3e}"),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = rng_from_seed(303);
    let mut worst: f64 = 0.0;
    for d in 2..=6 {
        let j = haar_basis_from(d, &mut rng);
        let lift = channels::dephasing_lift(&j).unwrap();
        for probe in 0..100 {
            let rho = if probe % 5 == 0 {
                channels::random_pure(d, &mut rng)
            } else {
                random_density(d, &mut rng)
            };
            let r = lift.residuals(&rho).unwrap();
            worst = worst.max(r.dephased).max(r.ancilla);
        }
    }
    verdict(worst < 1e-10, format!("max residual {worst:.3e} over dims 2-6 x 100 probes"))
}

fn criterion_4() -> Verdict {
    let mut rng = rng_from_seed(404);
    let (mut worst_t, mut worst_m): (f64, f64) = (0.0, 0.0);
    let mut errors = 0;
    for i in 0..200 {
        let d = 2 + i % 4;
        let lam = random_distribution(d, &mut rng);
        let mu = majorized_by(&lam, &mut rng);
        let rho = DensityMatrix::from_spectrum(&lam, &haar_basis_from(d, &mut rng)).unwrap();
        let target = DensityMatrix::from_spectrum(&mu, &haar_basis_from(d, &mut rng)).unwrap();
        match construct_noisy_transition(&rho, &target) {
            Ok(plan) => {
                worst_t = worst_t.max(plan.residual_target);
                worst_m = worst_m.max(plan.residual_marginal);
            }
            Err(_) => errors += 1,
        }
    }
    verdict(
        errors == 0 && worst_t < 1e-8 && worst_m < 1e-8,
        format!("200 pairs: max target residual {worst_t:.3e}, max ancilla residual {worst_m:.3e}, {errors} errors"),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = rng_from_seed(505);
    let (mut worst_t, mut worst_m): (f64, f64) = (0.0, 0.0);
    let mut errors = 0;
    for i in 0..50 {
        let d = 2 + i % 3;
        let rho = random_density(d, &mut rng);
        let j = haar_basis_from(d, &mut rng);
        let lam_c = dephase(&rho, &j).unwrap().spectrum().unwrap();
        let mu = majorized_by(&lam_c, &mut rng);
        let target = DensityMatrix::from_spectrum(&mu, &haar_basis_from(d, &mut rng)).unwrap();
        match compose_catalytic(&rho, &j, &target, &NoisyTransitionOracle) {
            Ok(plan) => {
                worst_t = worst_t.max(plan.residual_target);
                worst_m = worst_m.max(plan.residual_marginal);
            }
            Err(_) => errors += 1,
        }
    }
    verdict(
        errors == 0 && worst_t < 1e-8 && worst_m < 1e-8,
        format!("50 cases: max target residual {worst_t:.3e}, max catalyst residual {worst_m:.3e}, {errors} errors"),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = rng_from_seed(606);
    let (mut worst_gap, mut worst_res): (f64, f64) = (0.0, 0.0);
    let mut errors = 0;
    let mut below_one = 0;
    for i in 0..50 {
        let d = 2 + i % 3;
        let lam = random_distribution(d, &mut rng);
        let raw = random_distribution(d, &mut rng);
        let power = 1.0 + 3.0 * rng.random::<f64>();
        let mu = Distribution::normalized(raw.probs().iter().map(|x| x.powf(power)).collect()).unwrap();
        let rho = DensityMatrix::from_diagonal(lam.probs()).unwrap();
        let target = DensityMatrix::from_diagonal(mu.probs()).unwrap();
        match probabilistic_conversion(&rho, &target, None) {
            Ok(plan) => {
                let k = plan.levels.unwrap();
                let p = plan.success_probability.unwrap();
                let bound = probabilistic_bound(&plan.source_spectrum, &plan.target_spectrum, k).unwrap_or(f64::NAN);
                worst_gap = worst_gap.max((p - bound).abs());
                worst_res = worst_res.max(plan.residual_target).max(plan.residual_marginal);
                below_one += usize::from(p < 1.0 - 1e-9);
            }
            Err(_) => errors += 1,
        }
    }
    verdict(
        errors == 0 && worst_gap <= 1e-9 && worst_res < 1e-8,
        format!(
            "50 cases ({below_one} with p < 1): max |p - bound| {worst_gap:.3e}, max residual {worst_res:.3e}, {errors} errors"
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [0.5, 0.7] {
        let geo = geometric_stream(r);
        for eps in [0.1, 0.01] {
            match approx_transition_truncated(&geo, &geo, eps, None) {
                Ok(plan) => {
                    pass &= plan.residual_target < eps && plan.residual_marginal < eps;
                    parts.push(format!(
                        "r={r} eps={eps}: {} levels, residuals {:.2e}/{:.2e}",
                        plan.levels.unwrap(),
                        plan.residual_target,
                        plan.residual_marginal
                    ));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("r={r} eps={eps}: {e}"));
                }
            }
        }
    }
    verdict(pass, parts.join("; "))
}

fn random_stochastic(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| random_distribution(m, rng).into_vec()).collect()
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let mut rng = rng_from_seed(808);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_gibbs: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut errors = 0;
    for i in 0..50 {
        let n = 2 + i % 3;
        let m = 1 + (i / 3) % 3;
        let measure = match i % 5 {
            0 => EntropyMeasure::tsallis(2.0).unwrap(),
            1 => EntropyMeasure::renyi(0.5).unwrap(),
            _ => EntropyMeasure::VonNeumann,
        };
        let alpha = random_stochastic(n, m, &mut rng);
        let p_true = random_distribution(n, &mut rng);
        let q: Vec<f64> = (0..m).map(|j| (0..n).map(|k| p_true.probs()[k] * alpha[k][j]).sum()).collect();
        let prob = MaxEntProblem::new(Distribution::normalized(q).unwrap(), alpha, measure.clone()).unwrap();
        let (sol, brute) = match (solve_maxent_full(&prob, 1e-9), brute_force_maxent(&prob, DEFAULT_RESOLUTION)) {
            (Ok(s), Ok(b)) => (s, b),
            _ => {
                errors += 1;
                continue;
            }
        };
        worst_gap = worst_gap.max(brute.objective - sol.objective);
        worst_res = worst_res.max(sol.max_residual());
        if matches!(measure, EntropyMeasure::VonNeumann) {
            worst_gibbs = worst_gibbs.max(sol.gibbs_residual.unwrap_or(f64::INFINITY));
        }
    }
    let mut worst_identity: f64 = 0.0;
    for n in 2..=5 {
        let b = haar_basis_from(n, &mut rng);
        let q = random_distribution(n, &mut rng);
        let prob = MaxEntProblem::from_overlaps(&b, &b, n, q.clone(), EntropyMeasure::VonNeumann).unwrap();
        match solve_maxent_full(&prob, 1e-9) {
            Ok(sol) => {
                for (a, b) in sol.p.probs().iter().zip(q.probs()) {
                    worst_identity = worst_identity.max((a - b).abs());
                }
            }
            Err(_) => errors += 1,
        }
    }
    let elapsed = start.elapsed();
    verdict(
        errors == 0
            && worst_gap <= 1e-4
            && worst_gibbs <= 1e-8
            && worst_res <= 1e-8
            && worst_identity <= 1e-10
            && elapsed < Duration::from_secs(600),
        format!(
            "max oracle gap {worst_gap:.3e}, max Gibbs residual {worst_gibbs:.3e}, max constraint residual {worst_res:.3e}, identity |p-q| {worst_identity:.3e}, {errors} errors, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Verdict {
    let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
    let hi = typical_subspace_fidelity(&rho, 16, 0.7).unwrap().fidelity;
    let lo = typical_subspace_fidelity(&rho, 16, 0.3).unwrap().fidelity;
    let p = Distribution::new(vec![0.9, 0.1]).unwrap();
    let probs: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| typical_set(&p, n, 0.2).unwrap().total_probability)
        .collect();
    let monotone = probs.windows(2).all(|w| w[1] >= w[0]);
    let pinned = (hi - 0.9697500564611616).abs() < 1e-12 && (lo - 0.4941387170271577).abs() < 1e-12;
    verdict(
        hi >= 0.9 && hi > lo && monotone && probs[3] > 0.9 && pinned,
        format!("fidelity R=0.7 {hi:.12}, R=0.3 {lo:.12}; typical mass over n=8,16,32,64 {probs:.6?}"),
    )
}

fn criterion_10() -> Verdict {
    let vn = EntropyMeasure::VonNeumann;
    let bell = build_chain_network(&[vec![0.5, 0.5], vec![0.5, 0.5]], &vn).unwrap();
    let bell_ok = (bell.node_entropies[1] - 2.0).abs() < 1e-15 && (bell.marginals[2].entropy - 1.0).abs() < 1e-15;
    let mut rng = rng_from_seed(1010);
    let mut non_strict = 0;
    let mut worst_purity: f64 = 0.0;
    for i in 0..100 {
        let l1 = random_distribution(2 + i % 2, &mut rng).into_vec();
        let l2 = random_distribution(2 + (i / 2) % 2, &mut rng).into_vec();
        let net = build_chain_network(&[l1, l2], &vn).unwrap();
        let s_a2 = net.node_entropies[1];
        // omitting node 2 leaves a1a2; omitting node 0 leaves a2a3
        non_strict += usize::from(net.marginals[2].entropy >= s_a2 - 1e-12);
        non_strict += usize::from(net.marginals[0].entropy >= s_a2 - 1e-12);
        let (nodes, omitted) = net.dense_entropies(&vn).unwrap();
        for k in 0..3 {
            worst_purity = worst_purity
                .max((omitted[k] - nodes[k]).abs())
                .max((nodes[k] - net.node_entropies[k]).abs());
        }
    }
    verdict(
        bell_ok && non_strict == 0 && worst_purity <= 1e-10,
        format!(
            "Bell chain S(a2)={} S(a1a2)={}; {non_strict} non-strict instances over 100 pairs; purity identity max error {worst_purity:.3e}",
            bell.node_entropies[1], bell.marginals[2].entropy
        ),
    )
}

fn criterion_11() -> Verdict {
    let vn = EntropyMeasure::VonNeumann;
    let conv = models::thermal_entropy_convergence(1.0, &[4, 8, 16, 32, 64], &vn).unwrap();
    let conv_gap = conv.limit_gap.unwrap();
    let mut fock_gap: f64 = 0.0;
    for nbar in [0.25, 0.5, 1.0, 2.0] {
        let t = models::thermal_truncated(ThermalSpec::new(nbar, 64).unwrap(), true);
        let fock = classical_entropy(&t.distribution().unwrap(), &vn).unwrap();
        let gauss = CovarianceMatrix::thermal(nbar).unwrap().entropy().unwrap();
        fock_gap = fock_gap.max((fock - gauss).abs());
    }
    let mut rng = rng_from_seed(1111);
    let mut decay_gap: f64 = 0.0;
    let mut dephase_fail = 0;
    for n in 1..=6 {
        let omega: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let cfg = SpinClusterConfig::new(vec![omega.clone()], 0.0).unwrap();
        let haar = haar_basis_from(2, &mut rng);
        for step in 0..10 {
            let t = 0.17 * step as f64;
            let c = cfg.with_time(t);
            let dense = models::spin_center_state_dense(&c).unwrap();
            let x_dense = 2.0 * dense.matrix()[(0, 1)].re;
            decay_gap = decay_gap.max((x_dense - models::single_spin_decay(&omega, t)).abs());
            for j in [&Basis::computational(2), &haar] {
                let r = models::spin_cluster_entropy(&c, j).unwrap();
                dephase_fail += usize::from(r.s_dephased < r.s_exact - 1e-9);
            }
        }
    }
    let two = SpinClusterConfig::new(vec![vec![0.4, -0.9, 1.3], vec![0.7, 0.2, -0.5]], 0.0).unwrap();
    for step in 0..10 {
        let r = models::spin_cluster_entropy(&two.with_time(0.21 * step as f64), &Basis::computational(4)).unwrap();
        dephase_fail += usize::from(r.s_dephased < r.s_exact - 1e-9);
    }
    verdict(
        conv_gap < 1e-12 && fock_gap < 1e-9 && decay_gap < 1e-9 && dephase_fail == 0,
        format!(
            "|S(N=64)-2| {conv_gap:.3e}; Fock vs symplectic {fock_gap:.3e}; decay closed form vs dense {decay_gap:.3e}; {dephase_fail} dephasing-order failures"
        ),
    )
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn criterion_12() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let rho = write(d, "rho.json", r#"{"dim":2,"re":[[0.7,0.2],[0.2,0.3]],"im":[[0,0.1],[-0.1,0]]}"#);
    let mm = write(d, "mm.json", r#"{"dim":2,"re":[[0.5,0],[0,0.5]]}"#);
    let diag = write(d, "diag.json", r#"{"dim":2,"re":[[0.9,0],[0,0.1]]}"#);
    let pure = write(d, "pure.json", r#"{"dim":2,"re":[[1,0],[0,0]]}"#);
    let me = write(d, "me.json", r#"{"q":[0.6,0.4],"alpha":[[0.8,0.2],[0.3,0.7],[0.5,0.5]]}"#);
    let links = write(d, "links.json", "[[0.7,0.3],[0.6,0.4]]");
    let omega = write(d, "omega.json", "[[1.0,0.5,0.25]]");
    let cov = write(d, "cov.json", "[[3,0],[0,3]]");
    let geo = write(d, "geo.json", r#"{"geometric":0.5}"#);
    let runs: Vec<Vec<&str>> = vec![
        vec!["entropy", &rho, "--measure", "renyi:2"],
        vec!["verify-principles", &rho, "--samples", "200", "--seed", "7"],
        vec!["verify-principles", &rho, "--check", "joint", "--samples", "200", "--seed", "7", "--measure", "tsallis:0.5"],
        vec!["maxent", &me, "--oracle", "--resolution", "100"],
        vec!["transition", &rho, &mm, "--emit-unitary"],
        vec!["transition", &rho, &mm, "--mode", "catalytic", "--catalyst-dim", "2", "--budget", "200", "--seed", "3"],
        vec!["transition", &diag, &pure, "--mode", "probabilistic"],
        vec!["transition", &geo, &geo, "--mode", "approx", "--epsilon", "0.1"],
        vec!["compress", &diag, "--n", "8,16", "--rate", "0.3,0.7", "--format", "csv"],
        vec!["network-chain", &links],
        vec!["models", "thermal", "--nbar", "1", "--N-list", "4,16,64"],
        vec!["models", "gaussian", "--cov", &cov, "--lambda", "0.25,0.5"],
        vec!["models", "spin", "--omega", &omega, "--T-list", "0,0.5,1.0", "--format", "csv"],
    ];
    let exe = env!("CARGO_BIN_EXE_catent");
    let mut mismatched = Vec::new();
    for args in &runs {
        let a = Command::new(exe).args(args).output().unwrap();
        let b = Command::new(exe).args(args).output().unwrap();
        if a.stdout != b.stdout || a.status != b.status || a.stdout.is_empty() {
            mismatched.push(args[0..2].join(" "));
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{} invocations repeated, mismatches: {mismatched:?}", runs.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("entropy principle suite", criterion_1),
        ("uncertainty relation", criterion_2),
        ("dephasing lift identities", criterion_3),
        ("noisy transition constructor", criterion_4),
        ("catalytic composition", criterion_5),
        ("probabilistic conversion", criterion_6),
        ("truncated transition", criterion_7),
        ("max-entropy solver vs oracle", criterion_8),
        ("typical-subspace compression", criterion_9),
        ("chain networks", criterion_10),
        ("physical models", criterion_11),
        ("CLI determinism", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        failed += usize::from(!v.pass);
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
