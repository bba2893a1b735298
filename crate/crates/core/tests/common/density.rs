//! Random density-lemma instances and a direct set-construction oracle.

use std::collections::BTreeSet;

use mushroom_core::density::{assemble, Assembly, DensityInstance};
use mushroom_core::Error;
use rand::Rng;

/// Good indices carry a decaying `g`, bad ones a large value; `S_j` are the
/// good indices below `ε′_j` plus arbitrary early indices.
pub fn random_instance(rng: &mut impl Rng, n_max: usize) -> DensityInstance {
    let d: f64 = rng.gen_range(0.3..0.95);
    let p = (d + rng.gen_range(0.0..0.08)).min(1.0);
    let jn = rng.gen_range(2..=6usize);
    let (e0, r): (f64, f64) = (rng.gen_range(0.05..0.3), rng.gen_range(0.4..0.8));
    let (f0, rf): (f64, f64) = (rng.gen_range(0.05..0.5), rng.gen_range(0.3..0.8));
    let eps: Vec<f64> = (0..jn).map(|i| e0 * r.powi(i as i32)).collect();
    let eps_prime: Vec<f64> = (0..jn).map(|i| f0 * rf.powi(i as i32)).collect();
    let a = rng.gen_range(0.5..2.0);
    let good: Vec<bool> = (0..n_max).map(|_| rng.gen_bool(p)).collect();
    let g: Vec<f64> = (1..=n_max)
        .map(|k| {
            if good[k - 1] {
                rng.gen_range(0.0..2.0) * (k as f64).powf(-a) * 10.0
            } else {
                rng.gen_range(0.5..2.0)
            }
        })
        .collect();
    let early = rng.gen_range(0..n_max / 4);
    let sets = eps_prime
        .iter()
        .map(|&ep| (1..=n_max).filter(|&k| (good[k - 1] && g[k - 1] < ep) || (k <= early && rng.gen_bool(0.5))).collect())
        .collect();
    DensityInstance { g, sets, eps, eps_prime, d, check_from: None }
}

/// Loops until an instance is accepted.
pub fn accepted_instance(rng: &mut impl Rng, n_max: usize) -> (DensityInstance, Assembly) {
    loop {
        let inst = random_instance(rng, n_max);
        match assemble(&inst) {
            Ok(a) => return (inst, a),
            Err(Error::Refused { .. }) => continue,
            Err(e) => panic!("{e}"),
        }
    }
}

fn prefix(set: &BTreeSet<usize>, n_max: usize) -> Vec<usize> {
    let mut c = vec![0; n_max + 1];
    for m in 1..=n_max {
        c[m] = c[m - 1] + set.contains(&m) as usize;
    }
    c
}

/// Rebuilds thresholds and `S` by direct enumeration and checks the
/// assembly against them and against the lemma's conclusions. Returns a
/// description of the first disagreement.
pub fn check_against_oracle(inst: &DensityInstance, asm: &Assembly) -> Result<(), String> {
    let n_max = inst.g.len();
    let b: Vec<BTreeSet<usize>> = inst
        .eps_prime
        .iter()
        .map(|&ep| (1..=n_max).filter(|&k| inst.g[k - 1] >= 2.0 * ep).collect())
        .collect();
    let counts: Vec<Vec<usize>> = b.iter().map(|bj| prefix(bj, n_max)).collect();
    let holds = |j: usize, m: usize| (counts[j][m] as f64) < (1.0 - inst.d + 2.0 * inst.eps[j]) * m as f64;
    let mut prev = 0;
    let mut thresholds = Vec::new();
    for j in 0..b.len() {
        let last_fail = (1..=n_max).rev().find(|&m| !holds(j, m)).unwrap_or(0);
        let n = (last_fail + 1).max(prev + 1);
        if n > n_max {
            break;
        }
        if n > 1 && n - 1 > prev && holds(j, n - 1) {
            return Err(format!("threshold for j = {} is not minimal", j + 1));
        }
        thresholds.push((j + 1, n));
        prev = n;
    }
    let got: Vec<(usize, usize)> = asm.thresholds.iter().map(|t| (t.j, t.n_j)).collect();
    if got != thresholds {
        return Err(format!("thresholds {got:?} vs oracle {thresholds:?}"));
    }
    let mut bad = BTreeSet::new();
    for &(j, n_j) in &thresholds {
        bad.extend(b[j - 1].range(n_j..).copied());
    }
    let s: BTreeSet<usize> = (1..=n_max).filter(|k| !bad.contains(k)).collect();
    let s_count = prefix(&s, n_max);
    if asm.set.iter().copied().collect::<BTreeSet<_>>() != s {
        return Err("S differs from the direct construction".into());
    }
    for (idx, &(j, n_j)) in thresholds.iter().enumerate() {
        let end = thresholds.get(idx + 1).map_or(n_max, |t| t.1 - 1);
        for n in n_j..=end {
            if (s_count[n] as f64) < (inst.d - 2.0 * inst.eps[j - 1]) * n as f64 {
                return Err(format!("density of S below d − 2ε_{j} at n = {n}"));
            }
        }
        if let Some(&n) = s.range(n_j..).find(|&&n| inst.g[n - 1] >= 2.0 * inst.eps_prime[j - 1]) {
            return Err(format!("g({n}) ≥ 2ε′_{j} inside S"));
        }
    }
    Ok(())
}
