//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs all eleven; numeric arguments
//! (`cargo test --test acceptance -- 3 7`) select a subset.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::approx::{accepted_instance, projection_distance};
use mushroom_core::density::{assemble, hypothesis_violations, Hypothesis};
use mushroom_core::dynamics::{
    classify, evolve, integrable_fraction, integrable_fraction_mc, reflect, sample_phase_point, stream_rng,
    TrajectoryClass,
};
use mushroom_core::eigenflow::{self, hadamard_report, weyl_decrease_check, FlowSettings, HadamardReport};
use mushroom_core::eigensolver::{solve, DiscretizationSpec, Domain, Target, DEFAULT_H};
use mushroom_core::geometry::{MushroomGeometry, Vec2};
use mushroom_core::quadrature::Composite;
use mushroom_core::quasimodes::{count_report, counting_bound_constant, QuasiIndex, Quasimode};
use mushroom_core::specfun::{bessel_zero, zero_uniform_asymptotic, ZeroCache};
use mushroom_core::spectral_approx::approx_eigenvectors;
use mushroom_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn unit() -> MushroomGeometry {
    MushroomGeometry::new(1.0, 2.0, 1.0).unwrap()
}

fn liouville_fraction() -> Verdict {
    let g = unit();
    let closed = (4.0 * PI / 3.0 - 3f64.sqrt()) / (2.0 * PI + 2.0);
    let d = integrable_fraction(&g);
    let mc = integrable_fraction_mc(&g, 100_000, 1).unwrap();
    let z = (mc.estimate - d) / mc.std_error;
    verdict(
        (d - closed).abs() < 1e-12 && z.abs() <= 3.0,
        format!("d(1) = {d:.10} (closed form {closed:.10}), MC {:.5} ± {:.5}, z = {z:.2}", mc.estimate, mc.std_error),
    )
}

fn counting_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let r2 = rng.gen_range(0.5..5.0);
        let r1 = rng.gen_range(0.05..0.95) * r2;
        let t = rng.gen_range(0.1..2.0);
        let g = MushroomGeometry::new(r1, r2, t).unwrap();
        let rhs = integrable_fraction(&g) * g.area() / (4.0 * PI);
        worst = worst.max((counting_bound_constant(&g) - rhs).abs());
    }
    verdict(worst <= 1e-10, format!("max |constant − dA/4π| = {worst:.2e} over 20 geometries"))
}

fn quasimode_counting() -> Verdict {
    let g = unit();
    let mut cache = ZeroCache::in_memory();
    let r = count_report(&g, 0.05, &[75.0, 150.0, 300.0], &mut cache).unwrap();
    let floor = 0.8 * 0.195501;
    let increasing = r.ratios.windows(2).all(|w| w[1] > w[0]);
    verdict(
        r.ratios[2] >= floor && increasing && (r.constant - 0.195501).abs() < 1e-6,
        format!(
            "N/λ² = {:.5}, {:.5}, {:.5} at λ = 75, 150, 300 (floor {floor:.5}, constant {:.6})",
            r.ratios[0], r.ratios[1], r.ratios[2], r.constant
        ),
    )
}

fn uniform_asymptotics() -> Verdict {
    let mut worst: (f64, u32, u32) = (0.0, 0, 0);
    for n in [50u32, 100, 200] {
        for k in 1..=n / 3 {
            let a = bessel_zero(n, k).unwrap().alpha;
            let rel = ((zero_uniform_asymptotic(n, k).unwrap() - a) / a).abs();
            if rel > worst.0 {
                worst = (rel, n, k);
            }
        }
    }
    verdict(worst.0 <= 0.02, format!("max relative error {:.3e} at (n, k) = ({}, {})", worst.0, worst.1, worst.2))
}

fn residual_decay() -> Verdict {
    let g = unit();
    let ns = [10u32, 15, 20, 25, 30, 40];
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let alpha = bessel_zero(n, 1).unwrap().alpha;
            let q = Quasimode::new(&g, 0.1, QuasiIndex { n, k: 1, alpha }).unwrap();
            ((n as f64).ln(), q.residual_norm(Composite::default()).unwrap().ln())
        })
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    verdict(slope <= -6.0, format!("log-log slope {slope:.3} over n = 10..40, k = 1, ε = 0.1"))
}

fn certification() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut vectors, mut bad_distance, mut bad_count) = (0, 0, 0);
    for _ in 0..1000 {
        let (inst, rep) = accepted_instance(&mut rng);
        let n = inst.input.quasi_values.len() as f64;
        if (rep.certified.len() as f64) < n * (1.0 - inst.eps.sqrt()) {
            bad_count += 1;
        }
        for c in &rep.certified {
            vectors += 1;
            let u = inst.input.eigenvectors.column(c.index).into();
            if !(projection_distance(&inst.input.quasimodes, &u) < rep.bound) {
                bad_distance += 1;
            }
        }
    }
    verdict(
        bad_distance == 0 && bad_count == 0,
        format!("1000 instances, {vectors} certified vectors: {bad_distance} over the bound, {bad_count} short counts"),
    )
}

fn weyl_law() -> Verdict {
    let b = solve(Domain::Mushroom(unit()), &DiscretizationSpec::new(DEFAULT_H), Target::Count(300)).unwrap();
    let top = b.pairs[299].e;
    let ratio = b.weyl_ratio(top).unwrap();
    let exact = (bessel_zero(1, 1).unwrap().alpha / 2.0).powi(2);
    let e1 = |h: f64| {
        let d = Domain::Semidisk { radius: 2.0 };
        solve(d, &DiscretizationSpec::new(h), Target::Count(1)).unwrap().pairs[0].e
    };
    let (coarse, fine) = (e1(2.0 * DEFAULT_H), e1(DEFAULT_H));
    let extrapolated = fine + (fine - coarse) / 3.0;
    let rel = ((extrapolated - exact) / exact).abs();
    verdict(
        (0.9..=1.1).contains(&ratio) && rel <= 0.01,
        format!("4πN(Λ)/(ΛA) = {ratio:.4} at Λ = E_300 = {top:.2}; semidisk E_1 {extrapolated:.6} vs {exact:.6} ({rel:.1e})"),
    )
}

fn hadamard_consistency() -> Verdict {
    let settings = FlowSettings::new(DiscretizationSpec::new(DEFAULT_H));
    let r = hadamard_report(&unit(), &settings, 5, 4.0 * DEFAULT_H).unwrap();
    let worst = r.records.iter().map(HadamardReport::max_disagreement).fold(0.0, f64::max);
    let nonpositive = r.records.iter().all(|x| x.de_numeric <= 0.0 && x.de_boundary <= 0.0 && x.de_interior <= 0.0);
    verdict(
        worst <= 0.05 && nonpositive,
        format!("max pairwise disagreement {:.2}% for j ≤ 5, all ≤ 0: {nonpositive}", 100.0 * worst),
    )
}

fn weyl_decrease() -> Verdict {
    let g = unit();
    let ts = [0.9, 1.1];
    let spectra: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| {
            let d = Domain::Mushroom(g.with_t(t).unwrap());
            solve(d, &DiscretizationSpec::new(DEFAULT_H), Target::Count(200)).unwrap().eigenvalues()
        })
        .collect();
    let r = weyl_decrease_check(&g, 100..=200, &ts, &spectra).unwrap();
    let mean = r.mean_ratio.unwrap();
    verdict(
        (0.85..=1.15).contains(&mean),
        format!("mean ratio {mean:.4} (pooled {:.4}) over j = 100..200", r.pooled_ratio.unwrap()),
    )
}

fn density_lemma() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut accepted, mut refused, mut failures) = (0, 0, Vec::new());
    for i in 0..500 {
        let (inst, result) = if i % 2 == 0 {
            let inst = common::density::random_instance(&mut rng, 1000);
            let r = assemble(&inst);
            (inst, r)
        } else {
            let (inst, a) = common::density::accepted_instance(&mut rng, 1000);
            (inst, Ok(a))
        };
        match result {
            Ok(a) => {
                accepted += 1;
                if let Err(e) = common::density::check_against_oracle(&inst, &a) {
                    failures.push(format!("instance {i}: {e}"));
                }
            }
            Err(Error::Refused { .. }) => {
                refused += 1;
                // the reported violation must be real
                let v = hypothesis_violations(&inst).unwrap()[0].clone();
                let s = &inst.sets[v.j - 1];
                let real = match v.hypothesis {
                    Hypothesis::Density => {
                        (s.iter().filter(|&&k| k <= v.n).count() as f64) <= (inst.d - inst.eps[v.j - 1]) * v.n as f64
                    }
                    Hypothesis::Decay => s.contains(&v.n) && inst.g[v.n - 1] >= inst.eps_prime[v.j - 1],
                };
                if !real {
                    failures.push(format!("instance {i}: spurious refusal {v:?}"));
                }
            }
            Err(e) => failures.push(format!("instance {i}: {e}")),
        }
    }
    verdict(
        failures.is_empty() && accepted >= 250,
        format!(
            "500 instances ({accepted} assembled, {refused} refused), {} oracle mismatches{}",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!("; first: {f}"))
        ),
    )
}

fn property_suites() -> Verdict {
    let mut issues = Vec::new();
    let g = unit();

    // specular reflection and conserved impact parameter
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    for _ in 0..10_000 {
        let a: f64 = rng.gen_range(0.0..2.0 * PI);
        let b: f64 = rng.gen_range(-1.5..1.5);
        let n = Vec2::new(a.cos(), a.sin());
        let xi = Vec2::new((a + b).cos(), (a + b).sin());
        if let Ok(out) = reflect(xi, n) {
            let tang = Vec2::new(-n.y, n.x);
            if (out.norm() - 1.0).abs() > 1e-12 || (out.dot(tang) - xi.dot(tang)).abs() > 1e-12 {
                issues.push("reflection");
                break;
            }
        }
    }
    let mut rng = stream_rng(12, 0);
    let mut orbits = 0;
    while orbits < 200 {
        let z = sample_phase_point(&g, &mut rng);
        if classify(&g, z) != TrajectoryClass::Integrable {
            continue;
        }
        orbits += 1;
        let p0 = z.impact_parameter();
        let tr = evolve(&g, z, 200, f64::INFINITY).unwrap();
        if tr.bounces.iter().any(|b| (b.position.cross(b.outgoing).abs() - p0).abs() > 1e-9) {
            issues.push("impact parameter");
            break;
        }
    }

    // α_{n,k} < α_{n+1,k} < α_{n,k+1}
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    for _ in 0..300 {
        let (n, k) = (rng.gen_range(0..300u32), rng.gen_range(1..60u32));
        let a = bessel_zero(n, k).unwrap().alpha;
        let b = bessel_zero(n + 1, k).unwrap().alpha;
        let c = bessel_zero(n, k + 1).unwrap().alpha;
        if !(a < b && b < c) {
            issues.push("zero interlacing");
            break;
        }
    }

    // ‖M − I‖ < 1/2 ⇒ m ≥ n; oracle ≤ reported distance ≤ construction bound
    let mut rng = ChaCha8Rng::seed_from_u64(114);
    for _ in 0..300 {
        let (inst, rep) = accepted_instance(&mut rng);
        let chain = rep.gram_deviation < 0.5
            && rep.m >= rep.n
            && rep.w_gram_defect < 1e-10
            && rep.certified.iter().all(|c| {
                let u = inst.input.eigenvectors.column(c.index).into();
                projection_distance(&inst.input.quasimodes, &u) <= c.distance + 1e-12
                    && c.distance <= rep.construction_bound + 1e-12
            });
        if !chain {
            issues.push("Gram-bound chain");
            break;
        }
    }

    // identical inputs give identical bits
    let mc = |s| serde_json::to_string(&integrable_fraction_mc(&g, 20_000, s).unwrap()).unwrap();
    let spec = DiscretizationSpec::new(0.05);
    let eig = || {
        let b = solve(Domain::Mushroom(g), &spec, Target::Count(20)).unwrap();
        b.pairs.iter().flat_map(|p| p.u.iter().chain([&p.e]).map(|x| x.to_bits())).collect::<Vec<u64>>()
    };
    let quasi = || serde_json::to_string(&count_report(&g, 0.05, &[20.0, 40.0], &mut ZeroCache::in_memory()).unwrap()).unwrap();
    let (rng_rep, _) = accepted_instance(&mut ChaCha8Rng::seed_from_u64(115));
    let approx = || serde_json::to_string(&approx_eigenvectors(&rng_rep.input, rng_rep.c, rng_rep.eps, rng_rep.delta).unwrap()).unwrap();
    if mc(3) != mc(3) || eig() != eig() || quasi() != quasi() || approx() != approx() {
        issues.push("determinism");
    }
    let t = eigenflow::t_grid(0.9, 1.1, 5).unwrap();
    if t != eigenflow::t_grid(0.9, 1.1, 5).unwrap() {
        issues.push("determinism");
    }

    verdict(
        issues.is_empty(),
        if issues.is_empty() {
            "reflection, impact parameter, zero interlacing, Gram-bound chain, determinism: no violations".into()
        } else {
            format!("violations in: {}", issues.join(", "))
        },
    )
}

type Criterion = (usize, &'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "Liouville fraction", Duration::from_secs(60), liouville_fraction),
        (2, "counting identity", Duration::from_secs(1), counting_identity),
        (3, "quasimode counting", Duration::from_secs(300), quasimode_counting),
        (4, "uniform zero asymptotics", Duration::from_secs(120), uniform_asymptotics),
        (5, "quasimode residual decay", Duration::from_secs(120), residual_decay),
        (6, "approximation certification", Duration::from_secs(60), certification),
        (7, "Weyl law", Duration::from_secs(900), weyl_law),
        (8, "Hadamard consistency", Duration::from_secs(1200), hadamard_consistency),
        (9, "Weyl decrease", Duration::from_secs(1800), weyl_decrease),
        (10, "density lemma", Duration::from_secs(60), density_lemma),
        (11, "property suites", Duration::from_secs(600), property_suites),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, cap, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= cap;
        let pass = v.pass && in_time;
        failed += !pass as usize;
        println!(
            "{} {id:>2} {name}: {} [{:.1} s{}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            if in_time { String::new() } else { format!(", over the {} s budget", cap.as_secs()) }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
