mod common;

use common::density::{accepted_instance, check_against_oracle, random_instance};
use mushroom_core::density::*;
use mushroom_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn counting_density_examples() {
    let evens: Vec<usize> = (1..=20).filter(|k| k % 2 == 0).collect();
    assert_eq!(d_n(&evens, 10).unwrap().value(), 0.5);
    assert_eq!(d_n(&[], 7).unwrap(), Density { count: 0, n: 7 });
    assert!(d_n(&evens, 0).is_err());
}

proptest! {
    #[test]
    fn counting_density_is_additive_and_monotone(bits in prop::collection::vec(0u8..4, 1..200), n in 1usize..250) {
        let a: Vec<usize> = (1..=bits.len()).filter(|&k| bits[k - 1] == 1).collect();
        let b: Vec<usize> = (1..=bits.len()).filter(|&k| bits[k - 1] == 2).collect();
        let ab: Vec<usize> = (1..=bits.len()).filter(|&k| bits[k - 1] == 1 || bits[k - 1] == 2).collect();
        let sup: Vec<usize> = (1..=bits.len()).filter(|&k| bits[k - 1] != 0).collect();
        let (da, db, dab, dsup) = (d_n(&a, n).unwrap(), d_n(&b, n).unwrap(), d_n(&ab, n).unwrap(), d_n(&sup, n).unwrap());
        prop_assert_eq!(da.count + db.count, dab.count);
        prop_assert!(dab.count <= dsup.count && dsup.value() <= 1.0);
    }
}

fn geometric(j: i32) -> f64 {
    0.5f64.powi(j)
}

#[test]
fn single_full_set_with_zero_function() {
    let n = 100;
    let inst = DensityInstance {
        g: vec![0.0; n],
        sets: vec![(1..=n).collect()],
        eps: vec![0.1],
        eps_prime: vec![0.1],
        d: 1.0,
        check_from: None,
    };
    let a = assemble(&inst).unwrap();
    assert_eq!(a.set, (1..=n).collect::<Vec<_>>());
    assert_eq!(a.runs(), vec![(1, n)]);
    assert_eq!(a.thresholds[0].n_j, 1);
}

#[test]
fn harmonic_function_along_tails() {
    let n_max = 10_000;
    let jn = 9;
    let inst = DensityInstance {
        g: (1..=n_max).map(|k| 1.0 / k as f64).collect(),
        sets: (1..=jn).map(|j| (j + 1..=n_max).collect()).collect(),
        eps: (1..=jn as i32).map(geometric).collect(),
        eps_prime: (1..=jn as i32).map(geometric).collect(),
        d: 1.0,
        check_from: None,
    };
    let a = assemble(&inst).unwrap();
    // B_j = [1, 2^{j−1}] and d_n(B_j) < 2^{1−j} from n = 4^{j−1} + 1 on (N_1 = 2 since d_1(B_1) = 1)
    let n_j: Vec<usize> = a.thresholds.iter().map(|t| t.n_j).collect();
    assert_eq!(n_j, vec![2, 5, 17, 65, 257, 1025, 4097]);
    assert_eq!(a.beyond_horizon, vec![8, 9]);
    assert_eq!(a.set.len(), n_max);
    check_against_oracle(&inst, &a).unwrap();
    let mut longer = inst.clone();
    longer.sets.push((11..=n_max).collect());
    longer.eps.push(geometric(10));
    longer.eps_prime.push(geometric(10));
    match assemble(&longer) {
        Err(Error::Refused { detail, .. }) => assert!(detail.contains("j = 10"), "{detail}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn constant_function_is_refused() {
    let n = 200;
    let inst = DensityInstance {
        g: vec![1.0; n],
        sets: vec![(1..=n).collect(); 3],
        eps: vec![0.3, 0.2, 0.1],
        eps_prime: vec![2.0, 1.0, 0.5],
        d: 0.9,
        check_from: None,
    };
    let v = hypothesis_violations(&inst).unwrap();
    assert!(v.iter().all(|v| v.hypothesis == Hypothesis::Decay && v.j >= 2));
    assert_eq!((v[0].j, v[0].n), (2, 100));
    match assemble(&inst) {
        Err(Error::Refused { detail, .. }) => assert!(detail.contains("j = 2 at n = 100"), "{detail}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_instances_are_rejected() {
    let base = DensityInstance {
        g: vec![0.0; 10],
        sets: vec![vec![1, 2, 3]],
        eps: vec![0.1],
        eps_prime: vec![0.1],
        d: 0.5,
        check_from: Some(1),
    };
    let mut bad = base.clone();
    bad.sets[0] = vec![3, 2];
    assert!(assemble(&bad).unwrap_err().is_validation());
    let mut bad = base.clone();
    bad.sets[0] = vec![11];
    assert!(assemble(&bad).unwrap_err().is_validation());
    let mut bad = base.clone();
    bad.eps = vec![0.1, 0.2];
    assert!(assemble(&bad).is_err());
    let mut bad = base.clone();
    bad.d = 0.0;
    assert!(assemble(&bad).is_err());
    let mut bad = base;
    bad.check_from = Some(11);
    assert!(assemble(&bad).is_err());
}

#[test]
fn random_suite_matches_direct_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut refused = 0;
    for _ in 0..150 {
        let inst = random_instance(&mut rng, 1000);
        match assemble(&inst) {
            Ok(a) => check_against_oracle(&inst, &a).unwrap(),
            Err(Error::Refused { .. }) => {
                refused += 1;
                assert!(!hypothesis_violations(&inst).unwrap().is_empty());
            }
            Err(e) => panic!("{e}"),
        }
    }
    assert!(refused < 120, "{refused}");
    let (mut removed, mut late) = (0, 0);
    for _ in 0..50 {
        let (inst, a) = accepted_instance(&mut rng, 1000);
        assert!(hypothesis_violations(&inst).unwrap().is_empty());
        check_against_oracle(&inst, &a).unwrap();
        removed += (a.set.len() < 1000) as usize;
        late += a.thresholds.iter().any(|t| t.n_j > 10) as usize;
    }
    assert!(removed > 25 && late > 10, "{removed} {late}");
}

#[test]
fn instance_json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = random_instance(&mut rng, 50);
    let text = serde_json::to_string(&inst).unwrap();
    let back: DensityInstance = serde_json::from_str(&text).unwrap();
    assert_eq!(back, inst);
}
