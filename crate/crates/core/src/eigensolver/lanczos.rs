//! Shift-invert Lanczos on one spectral slice, with deflated restarts and
//! Rayleigh–Ritz polishing.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::Ldl;
use super::sector::Sector;
use crate::error::{Error, Result};

const MAX_RESTARTS: usize = 8;
const MIN_GUARDS: usize = 8;
const MAX_GUARDED_POLISH: usize = 30;
/// Relative residual the polished pairs must reach.
pub(crate) const POLISH_TOL: f64 = 1e-9;

pub(crate) struct SlicePairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            axpy(w, -c, q);
        }
    }
}

/// Orthonormalises the columns in place, dropping nearly dependent ones.
fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        let before = dot(&v, &v).sqrt();
        orthogonalize(&mut v, &out);
        let nv = dot(&v, &v).sqrt();
        if nv > 1e-6 * before && nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    *vs = out;
}

struct Tridiagonal {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Tridiagonal {
    fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let m = self.alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        t.symmetric_eigen()
    }
}

/// Eigenpairs of the sector operator with eigenvalues in `[lo, hi)`, where
/// `want` is the inertia count of the slice and `ldl` factorises `A − σI`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_slice(
    a: &Sector,
    ldl: &Ldl,
    sigma: f64,
    lo: f64,
    hi: f64,
    want: usize,
    seed: u64,
    stream: u64,
) -> Result<SlicePairs> {
    let n = a.len();
    let op = |x: &[f64]| {
        let mut y = x.to_vec();
        ldl.solve_in_place(&mut y);
        y
    };
    let in_window = |e: f64| e >= lo && e < hi;
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut restarts = 0;
    let mut last_best = f64::NAN;
    while found.len() < want && restarts < MAX_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream * 64 + restarts as u64);
        restarts += 1;
        let need = want - found.len();
        let mmax = (2 * need + 60).min(n - found.len());
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        q = op(&q);
        orthogonalize(&mut q, &found);
        let nq = dot(&q, &q).sqrt();
        q.iter_mut().for_each(|x| *x /= nq);
        let mut basis = vec![q];
        let mut tri = Tridiagonal { alpha: Vec::new(), beta: Vec::new() };
        let mut ritz: Vec<(f64, f64, usize)> = Vec::new();
        let e = loop {
            let k = basis.len() - 1;
            let mut w = op(&basis[k]);
            let alpha = dot(&w, &basis[k]);
            axpy(&mut w, -alpha, &basis[k]);
            if k > 0 {
                axpy(&mut w, -tri.beta[k - 1], &basis[k - 1]);
            }
            orthogonalize(&mut w, &found);
            orthogonalize(&mut w, &basis);
            let beta = dot(&w, &w).sqrt();
            tri.alpha.push(alpha);
            let m = k + 1;
            let breakdown = beta <= 1e-13 * alpha.abs().max(f64::MIN_POSITIVE);
            if m % 10 == 0 || m == mmax || breakdown {
                let e = tri.eigen();
                ritz.clear();
                for i in 0..m {
                    let theta = e.eigenvalues[i];
                    let err = (beta * e.eigenvectors[(m - 1, i)]).abs() / theta.abs();
                    let ev = sigma + 1.0 / theta;
                    if in_window(ev) {
                        ritz.push((err, ev, i));
                    }
                }
                let conv = ritz.iter().filter(|r| r.0 <= 1e-9).count();
                if conv >= need || m == mmax || breakdown {
                    break e;
                }
            }
            tri.beta.push(beta);
            basis.push(w.into_iter().map(|x| x / beta).collect());
        };
        ritz.sort_by(|x, y| x.0.total_cmp(&y.0));
        last_best = ritz.first().map_or(f64::NAN, |r| r.0);
        let mut added = 0;
        for &(err, _, i) in &ritz {
            if added == need || err > 1e-5 {
                break;
            }
            let mut x = vec![0.0; n];
            for (j, b) in basis.iter().enumerate() {
                axpy(&mut x, e.eigenvectors[(j, i)], b);
            }
            orthogonalize(&mut x, &found);
            let nx = dot(&x, &x).sqrt();
            if nx > 0.5 {
                x.iter_mut().for_each(|v| *v /= nx);
                found.push(x);
                added += 1;
            }
        }
    }
    if found.len() < want {
        return Err(Error::numerical(
            "eigensolver",
            format!(
                "slice [{lo}, {hi}) at shift {sigma}: {} of {want} eigenpairs after {restarts} \
                 restarts (best Ritz error {last_best:e})",
                found.len()
            ),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream * 64 + 63);
    polish(a, &op, sigma, found, lo, hi, &mut rng)
}

fn rayleigh_ritz(a: &Sector, xs: &mut Vec<Vec<f64>>) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    orthonormalize(xs);
    let c = xs.len();
    let mut ax: Vec<Vec<f64>> = Vec::with_capacity(c);
    for x in xs.iter() {
        let mut y = vec![0.0; n];
        a.matvec(x, &mut y);
        ax.push(y);
    }
    let g = DMatrix::from_fn(c, c, |i, j| 0.5 * (dot(&xs[i], &ax[j]) + dot(&xs[j], &ax[i])));
    let e = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let mut new_x = Vec::with_capacity(c);
    let mut values = Vec::with_capacity(c);
    let mut res = Vec::with_capacity(c);
    for &i in &order {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..c {
            let v = e.eigenvectors[(j, i)];
            axpy(&mut x, v, &xs[j]);
            axpy(&mut y, v, &ax[j]);
        }
        let ev = e.eigenvalues[i];
        axpy(&mut y, -ev, &x);
        res.push(dot(&y, &y).sqrt() / ev.abs());
        values.push(ev);
        new_x.push(x);
    }
    *xs = new_x;
    (values, res)
}

/// `(A − σ)⁻¹x` with one step of iterative refinement; the unpivoted
/// factorisation can lose digits at shifts inside the spectrum.
fn refined_solve(a: &Sector, op: &dyn Fn(&[f64]) -> Vec<f64>, sigma: f64, x: &[f64]) -> Vec<f64> {
    let mut y = op(x);
    let mut r = vec![0.0; x.len()];
    a.matvec(&y, &mut r);
    for ((ri, xi), yi) in r.iter_mut().zip(x).zip(&y) {
        *ri = xi - (*ri - sigma * yi);
    }
    axpy(&mut y, 1.0, &op(&r));
    y
}

fn polish(
    a: &Sector,
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    sigma: f64,
    mut xs: Vec<Vec<f64>>,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SlicePairs> {
    let want = xs.len();
    let n = a.len();
    let (mut values, mut res) = rayleigh_ritz(a, &mut xs);
    let done = |xs: &Vec<Vec<f64>>, res: &Vec<f64>| xs.len() == want && res.iter().all(|&r| r <= POLISH_TOL);
    if !done(&xs, &res) {
        // guard vectors absorb the eigenvalues just outside the slice, which
        // otherwise slow the subspace iteration down
        let mut work = xs.clone();
        for _ in 0..MIN_GUARDS.max(want / 2).min(n.saturating_sub(want)) {
            work.push(op(&(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>()));
        }
        for _ in 0..MAX_GUARDED_POLISH {
            work = work.iter().map(|x| refined_solve(a, op, sigma, x)).collect();
            let (v, r) = rayleigh_ritz(a, &mut work);
            let mut keep: Vec<usize> =
                (0..v.len()).filter(|&i| v[i] >= lo - 1e-9 * hi && v[i] < hi + 1e-9 * hi).collect();
            keep.sort_by(|&i, &j| r[i].total_cmp(&r[j]));
            keep.truncate(want);
            keep.sort_unstable();
            xs = keep.iter().map(|&i| work[i].clone()).collect();
            values = keep.iter().map(|&i| v[i]).collect();
            res = keep.iter().map(|&i| r[i]).collect();
            if done(&xs, &res) {
                break;
            }
        }
    }
    let worst = res.iter().cloned().fold(0.0, f64::max);
    if xs.len() != want || worst > POLISH_TOL {
        return Err(Error::numerical(
            "eigensolver",
            format!(
                "slice [{lo}, {hi}): polishing stalled with {} of {want} vectors, worst residual {worst:e}",
                xs.len()
            ),
        ));
    }
    if let Some(&v) = values.iter().find(|&&v| v < lo - 1e-9 * hi || v >= hi + 1e-9 * hi) {
        return Err(Error::numerical(
            "eigensolver",
            format!("slice [{lo}, {hi}): polished eigenvalue {v} left the slice"),
        ));
    }
    Ok(SlicePairs { values, vectors: xs, residuals: res })
}
