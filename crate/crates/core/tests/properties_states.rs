use catent::channels::{dephase, dephasing_lift, haar_basis, random_density, random_distribution, rng_from_seed};
use catent::entropy::{
    classical_entropy, conditional_entropy, mutual_information, quantum_entropy, Axis, EntropyMeasure,
    JointDistribution,
};
use catent::principles::{araki_lieb_check, uncertainty_check, verify_local_minimum};
use catent::{partial_trace, purify, tensor, trace_distance, validate_density, Subsystem, Tolerances};
use proptest::prelude::*;

fn measure_strategy() -> impl Strategy<Value = EntropyMeasure> {
    prop_oneof![
        Just(EntropyMeasure::VonNeumann),
        (0.2f64..0.95).prop_map(|a| EntropyMeasure::renyi(a).unwrap()),
        (1.05f64..4.0).prop_map(|a| EntropyMeasure::renyi(a).unwrap()),
        (0.2f64..0.95).prop_map(|q| EntropyMeasure::tsallis(q).unwrap()),
        (1.05f64..4.0).prop_map(|q| EntropyMeasure::tsallis(q).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validated_states_round_trip(seed in any::<u64>(), d in 1usize..6) {
        let rho = random_density(d, &mut rng_from_seed(seed));
        let again = validate_density(rho.matrix(), &Tolerances::default()).unwrap();
        prop_assert_eq!(again.matrix(), rho.matrix());
        let spec = rho.spectrum().unwrap();
        prop_assert!((spec.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(spec.probs().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = rng_from_seed(seed);
        let a = random_density(da, &mut rng);
        let b = random_density(db, &mut rng);
        let ab = tensor(&a, &b);
        prop_assert!(trace_distance(&partial_trace(&ab, (da, db), Subsystem::A).unwrap(), &a).unwrap() < 1e-12);
        prop_assert!(trace_distance(&partial_trace(&ab, (da, db), Subsystem::B).unwrap(), &b).unwrap() < 1e-12);
    }

    #[test]
    fn purification_reproduces_state(seed in any::<u64>(), d in 1usize..6) {
        let rho = random_density(d, &mut rng_from_seed(seed));
        let pur = purify(&rho).unwrap();
        let joint = pur.density();
        let back = partial_trace(&joint, (pur.dim_a(), pur.dim_b), Subsystem::A).unwrap();
        prop_assert!(trace_distance(&back, &rho).unwrap() < 1e-10);
    }

    #[test]
    fn trace_distance_is_a_bounded_symmetric(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let a = random_density(d, &mut rng);
        let b = random_density(d, &mut rng);
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn entropy_bounds(seed in any::<u64>(), d in 1usize..6, m in measure_strategy()) {
        let rho = random_density(d, &mut rng_from_seed(seed));
        let s = quantum_entropy(&rho, &m).unwrap();
        let max = quantum_entropy(&catent::DensityMatrix::maximally_mixed(d), &m).unwrap();
        prop_assert!(s >= -1e-12 && s <= max + 1e-12);
    }

    #[test]
    fn dephasing_is_idempotent_and_raises_entropy(seed in any::<u64>(), d in 2usize..6, m in measure_strategy()) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density(d, &mut rng);
        let j = haar_basis(d, seed ^ 0x5555);
        let once = dephase(&rho, &j).unwrap();
        let twice = dephase(&once, &j).unwrap();
        prop_assert!(trace_distance(&once, &twice).unwrap() < 1e-12);
        prop_assert!(quantum_entropy(&once, &m).unwrap() >= quantum_entropy(&rho, &m).unwrap() - 1e-9);
    }

    #[test]
    fn local_minimum_holds(seed in any::<u64>(), d in 2usize..5, m in measure_strategy()) {
        let rho = random_density(d, &mut rng_from_seed(seed));
        let report = verify_local_minimum(&rho, &m, 40, seed).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn uncertainty_and_araki_lieb(seed in any::<u64>(), d in 2usize..5, m in measure_strategy()) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density(d, &mut rng);
        let j1 = haar_basis(d, seed.wrapping_add(1));
        let j2 = haar_basis(d, seed.wrapping_add(2));
        prop_assert!(uncertainty_check(&rho, &j1, &j2, &m).unwrap().pass);
        let ab = random_density(d * 2, &mut rng);
        prop_assert!(araki_lieb_check(&ab, (d, 2)).unwrap().pass);
    }

    #[test]
    fn classical_chain_rule_and_mutual_information(seed in any::<u64>(), r in 1usize..5, c in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let flat = random_distribution(r * c, &mut rng).into_vec();
        let j = JointDistribution::from_flat(r, c, flat).unwrap();
        let vn = EntropyMeasure::VonNeumann;
        let h_xy = classical_entropy(&j.as_distribution(), &vn).unwrap();
        let h_x = classical_entropy(&j.marginal(Axis::Rows), &vn).unwrap();
        let h_y_given_x = conditional_entropy(&j, Axis::Rows, &vn).unwrap();
        prop_assert!((h_xy - h_x - h_y_given_x).abs() < 1e-10);
        let i = mutual_information(&j, &vn).unwrap();
        let h_y = classical_entropy(&j.marginal(Axis::Cols), &vn).unwrap();
        prop_assert!(i >= -1e-12 && i <= h_x.min(h_y) + 1e-12);
    }

    #[test]
    fn lift_restores_ancilla(seed in any::<u64>(), d in 2usize..5) {
        let j = haar_basis(d, seed);
        let lift = dephasing_lift(&j).unwrap();
        let rho = random_density(d, &mut rng_from_seed(seed.rotate_left(7)));
        let r = lift.residuals(&rho).unwrap();
        prop_assert!(r.dephased < 1e-10 && r.ancilla < 1e-10);
    }
}
