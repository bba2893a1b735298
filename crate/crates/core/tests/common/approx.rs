//! Random instances for the quasimode approximation and a brute-force
//! projection oracle.

use mushroom_core::spectral_approx::{approx_eigenvectors, ApproxInput, ApproxReport};
use mushroom_core::Error;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub input: ApproxInput,
    pub c: f64,
    pub eps: f64,
    pub delta: f64,
}

fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// A random symmetric operator with `n` quasimodes built around eigenvectors
/// in their windows; the hypotheses may or may not hold.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(1..=8usize);
    let d = rng.gen_range(n + 2..=40usize);
    let eps = log_uniform(rng, 1e-6, 0.45);
    let delta = rng.gen_range(0.02..0.45);
    let c = rng.gen_range(0.1..1.0);
    let mut quasi = Vec::with_capacity(n);
    let mut q = rng.gen_range(1.0..3.0);
    for _ in 0..n {
        quasi.push(q);
        q += rng.gen_range(0.5 * c..5.0 * c);
    }
    let in_window = |e: f64| quasi.iter().any(|&q| (e - q).abs() <= c);
    // partners, then a few extra eigenvalues inside windows
    let max_extra = ((n as f64 * eps).ceil() as usize).saturating_sub(1);
    let extra = rng.gen_range(0..=max_extra).min(d - n - 1);
    let mut eig: Vec<f64> = quasi.iter().map(|&q| q + rng.gen_range(-0.5 * c..0.5 * c)).collect();
    for _ in 0..extra {
        let q = quasi[rng.gen_range(0..n)];
        eig.push(q + rng.gen_range(-c..c));
    }
    let top = q + 3.0;
    while eig.len() < d {
        let e = rng.gen_range(0.0..top);
        if !in_window(e) {
            eig.push(e);
        }
    }
    let u = random_orthogonal(d, rng);
    let window: Vec<usize> = (0..d).filter(|&j| in_window(eig[j])).collect();
    let outside: Vec<usize> = (0..d).filter(|&j| !in_window(eig[j])).collect();
    let eta = log_uniform(rng, 1e-4, 0.7);
    let mu = log_uniform(rng, 1e-4, 0.3);
    let mut v = DMatrix::zeros(d, n);
    for i in 0..n {
        let mut inner: DVector<f64> = u.column(i).into();
        for &j in &window {
            inner += u.column(j) * (mu * rng.sample::<f64, _>(StandardNormal));
        }
        inner /= inner.norm();
        let mut outer = DVector::zeros(d);
        for &j in &outside {
            outer += u.column(j) * rng.sample::<f64, _>(StandardNormal);
        }
        outer /= outer.norm();
        let s = eta * rng.gen_range(0.0..1.0);
        let vi = inner * (1.0 - s * s).sqrt() + outer * s;
        v.set_column(i, &(&vi / vi.norm()));
    }
    Instance { input: ApproxInput { eigenvalues: eig, eigenvectors: u, quasi_values: quasi, quasimodes: v }, c, eps, delta }
}

/// Draws instances until one satisfies the hypotheses.
pub fn accepted_instance(rng: &mut impl Rng) -> (Instance, ApproxReport) {
    loop {
        let inst = random_instance(rng);
        match approx_eigenvectors(&inst.input, inst.c, inst.eps, inst.delta) {
            Ok(rep) => return (inst, rep),
            Err(Error::Refused { .. }) => continue,
            Err(e) => panic!("unexpected failure: {e}"),
        }
    }
}

/// `‖u − π_V u‖` by modified Gram–Schmidt on the quasimodes.
pub fn projection_distance(v: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..v.ncols() {
        let mut x: DVector<f64> = v.column(j).into();
        for _ in 0..2 {
            for b in &basis {
                x -= b * b.dot(&x);
            }
        }
        let nx = x.norm();
        if nx > 1e-12 {
            basis.push(x / nx);
        }
    }
    let mut r = u.clone();
    for _ in 0..2 {
        for b in &basis {
            r -= b * b.dot(&r);
        }
    }
    r.norm()
}
