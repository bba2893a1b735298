//! Cutoff semidisk modes: Dirichlet eigenfunctions of the cap, cut off
//! smoothly just outside `r = r1` so that they vanish on the stalk and the
//! inner semidisk.
//!
//! For `u = sin(nθ) J_n(αr/r2)` and a radial cutoff `χ`, the residual
//! `(Δ + α²/r2²)(χu) = 2χ′ ∂_r u + (χ″ + χ′/r) u` lives on the collar where
//! `χ` varies. When `α < n r2/(r1+ε)` the collar lies in the evanescent
//! zone of `J_n`, which makes the residual tiny.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MushroomGeometry, Point};
use crate::quadrature::Composite;
use crate::specfun::{bessel_j_and_derivative, ZeroCache};

/// Largest `ε` accepted for the cutoff family.
pub const MAX_EPS: f64 = 0.3;

/// `χ(r) = s((r − r_low)/(r_high − r_low))` with the smooth step
/// `s(u) = σ(u)/(σ(u) + σ(1−u))`, `σ(u) = e^{−1/u}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub r_low: f64,
    pub r_high: f64,
}

/// `(s, s′, s″)` on `u ∈ ℝ`. Written as `s = 1/(1+e^g)`,
/// `g = 1/u − 1/(1−u)`.
pub(crate) fn smooth_step(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let v = 1.0 - u;
    let g = 1.0 / u - 1.0 / v;
    if g > 700.0 {
        return (0.0, 0.0, 0.0);
    }
    if g < -700.0 {
        return (1.0, 0.0, 0.0);
    }
    let s = 1.0 / (1.0 + g.exp());
    let ss = s * (1.0 - s);
    let g1 = -1.0 / (u * u) - 1.0 / (v * v);
    let g2 = 2.0 / (u * u * u) - 2.0 / (v * v * v);
    let d1 = -g1 * ss;
    let d2 = -g2 * ss - g1 * d1 * (1.0 - 2.0 * s);
    (s, d1, d2)
}

impl CutoffProfile {
    pub fn new(r1: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < MAX_EPS) {
            return Err(Error::invalid(
                "quasimodes",
                format!("eps must lie in (0, {MAX_EPS}), got {eps}"),
            ));
        }
        let r_high = (r1 + eps) * (1.0 - eps * eps).sqrt();
        if r_high <= r1 {
            return Err(Error::invalid(
                "quasimodes",
                format!("eps = {eps} gives an empty collar for r1 = {r1}"),
            ));
        }
        Ok(Self { r_low: r1, r_high })
    }

    pub fn width(&self) -> f64 {
        self.r_high - self.r_low
    }

    /// `(χ, χ′, χ″)` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let l = self.width();
        let (s, d1, d2) = smooth_step((r - self.r_low) / l);
        (s, d1 / l, d2 / (l * l))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }
}

/// Index of a family member.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiIndex {
    pub n: u32,
    pub k: u32,
    pub alpha: f64,
}

impl QuasiIndex {
    pub fn quasi_eigenvalue(&self, r2: f64) -> f64 {
        (self.alpha / r2).powi(2)
    }
}

/// Membership test `α < n r2/(r1 + ε)`.
pub fn in_family(g: &MushroomGeometry, eps: f64, n: u32, alpha: f64) -> bool {
    alpha < n as f64 * g.r2() / (g.r1() + eps)
}

/// All members with `α/r2 ≤ lambda_max`, sorted by quasi-eigenvalue with
/// ties broken by `(n, k)`.
pub fn family(
    g: &MushroomGeometry,
    eps: f64,
    lambda_max: f64,
    cache: &mut ZeroCache,
) -> Result<Vec<QuasiIndex>> {
    CutoffProfile::new(g.r1(), eps)?;
    if !(lambda_max >= 0.0 && lambda_max <= 1e3) {
        return Err(Error::invalid("quasimodes", format!("lambda_max {lambda_max} outside [0, 1000]")));
    }
    let xmax = lambda_max * g.r2();
    // zeros of J_n exceed n
    let orders: Vec<u32> = (1..).take_while(|&n| (n as f64) < xmax).collect();
    let zeros = cache.zeros_below_many(&orders, xmax)?;
    let mut out = Vec::new();
    for (&n, zs) in orders.iter().zip(zeros) {
        for (i, a) in zs.into_iter().enumerate() {
            if !in_family(g, eps, n, a) {
                break;
            }
            out.push(QuasiIndex { n, k: i as u32 + 1, alpha: a });
        }
    }
    out.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.n.cmp(&b.n)).then(a.k.cmp(&b.k)));
    Ok(out)
}

/// `(r2²/8)(1 − (2/(πC²))√(C²−1) − (2/π) asin(1/C))`, the asymptotic lower
/// bound for `N_quasi(λ)/λ²`.
pub fn counting_bound_constant(g: &MushroomGeometry) -> f64 {
    let c = g.aspect();
    let r2 = g.r2();
    r2 * r2 / 8.0 * (1.0 - 2.0 / (PI * c * c) * (c * c - 1.0).sqrt() - 2.0 / PI * (1.0 / c).asin())
}

/// Number of family members with `α/r2 ≤ lambda`.
pub fn counting(g: &MushroomGeometry, eps: f64, lambda: f64, cache: &mut ZeroCache) -> Result<usize> {
    Ok(family(g, eps, lambda, cache)?.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiCountReport {
    pub eps: f64,
    pub lambdas: Vec<f64>,
    pub counts: Vec<usize>,
    pub ratios: Vec<f64>,
    pub constant: f64,
}

/// Counts on a grid of `λ`, sharing one enumeration at the largest value.
pub fn count_report(
    g: &MushroomGeometry,
    eps: f64,
    lambdas: &[f64],
    cache: &mut ZeroCache,
) -> Result<QuasiCountReport> {
    let top = lambdas.iter().copied().fold(0.0, f64::max);
    let fam = family(g, eps, top, cache)?;
    let counts: Vec<usize> = lambdas
        .iter()
        .map(|&l| fam.partition_point(|q| q.alpha / g.r2() <= l))
        .collect();
    let ratios = counts.iter().zip(lambdas).map(|(&c, &l)| c as f64 / (l * l)).collect();
    Ok(QuasiCountReport {
        eps,
        lambdas: lambdas.to_vec(),
        counts,
        ratios,
        constant: counting_bound_constant(g),
    })
}

/// `∫₀^R J_n(cr)² r dr = (R²/2)[J_n′(cR)² + (1 − n²/(cR)²) J_n(cR)²]`.
fn bessel_square_integral(n: u32, c: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let z = c * r;
    let (j, d) = bessel_j_and_derivative(n, z)?;
    let nf = n as f64;
    Ok(0.5 * r * r * (d * d + (1.0 - nf * nf / (z * z)) * j * j))
}

/// A normalised cutoff mode `v = χ u / ‖χ u‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quasimode {
    pub n: u32,
    pub k: u32,
    pub alpha: f64,
    pub eps: f64,
    pub r1: f64,
    pub r2: f64,
    pub profile: CutoffProfile,
    /// `‖χ u‖_{L²}` over the cap.
    pub norm: f64,
}

impl Quasimode {
    pub fn new(g: &MushroomGeometry, eps: f64, idx: QuasiIndex) -> Result<Self> {
        let profile = CutoffProfile::new(g.r1(), eps)?;
        if profile.r_high >= g.r2() {
            return Err(Error::invalid("quasimodes", "cutoff collar reaches the arc"));
        }
        if idx.n == 0 {
            return Err(Error::invalid("quasimodes", "angular index must be >= 1"));
        }
        let c = idx.alpha / g.r2();
        // radial ∫χ²J²r: closed form outside the collar, quadrature across it
        let outer = bessel_square_integral(idx.n, c, g.r2())?
            - bessel_square_integral(idx.n, c, profile.r_high)?;
        let collar = radial_integral(profile.r_low, profile.r_high, Composite::default(), |r| {
            let chi = profile.value(r);
            let j = bessel_j_and_derivative(idx.n, c * r)?.0;
            Ok(chi * chi * j * j * r)
        })?;
        let norm = (0.5 * PI * (outer + collar)).sqrt();
        if !(norm > 0.0) {
            return Err(Error::numerical("quasimodes", format!("zero norm for ({}, {})", idx.n, idx.k)));
        }
        Ok(Self { n: idx.n, k: idx.k, alpha: idx.alpha, eps, r1: g.r1(), r2: g.r2(), profile, norm })
    }

    pub fn quasi_eigenvalue(&self) -> f64 {
        (self.alpha / self.r2).powi(2)
    }

    fn wavenumber(&self) -> f64 {
        self.alpha / self.r2
    }

    /// Value at polar coordinates `(r, θ)` about the cap centre.
    pub fn evaluate(&self, r: f64, theta: f64) -> Result<f64> {
        if r <= self.r1 {
            return Ok(0.0);
        }
        let chi = self.profile.value(r);
        let j = bessel_j_and_derivative(self.n, self.wavenumber() * r)?.0;
        Ok(chi * (self.n as f64 * theta).sin() * j / self.norm)
    }

    /// Value at a Cartesian point; zero below the diameter.
    pub fn evaluate_at(&self, p: Point) -> Result<f64> {
        if p.y <= 0.0 {
            return Ok(0.0);
        }
        self.evaluate(p.norm(), p.y.atan2(p.x))
    }

    /// Radial profile of `(Δ + α²/r2²) v` divided by `sin(nθ)`.
    fn residual_profile(&self, r: f64) -> Result<f64> {
        let (_, d1, d2) = self.profile.eval(r);
        let c = self.wavenumber();
        let (j, dj) = bessel_j_and_derivative(self.n, c * r)?;
        Ok((2.0 * d1 * c * dj + (d2 + d1 / r) * j) / self.norm)
    }

    /// `‖(Δ + α²/r2²) v‖_{L²}` by quadrature over the collar, checked against
    /// a refined rule.
    pub fn residual_norm(&self, quad: Composite) -> Result<f64> {
        let f = |r: f64| -> Result<f64> {
            let v = self.residual_profile(r)?;
            Ok(v * v * r)
        };
        let (a, b) = (self.profile.r_low, self.profile.r_high);
        let coarse = radial_integral(a, b, quad, f)?;
        let fine = radial_integral(a, b, quad.refined(), f)?;
        check_refinement(coarse, fine)?;
        Ok((0.5 * PI * fine).sqrt())
    }
}

fn radial_integral(
    a: f64,
    b: f64,
    quad: Composite,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let mut s = 0.0;
    for (x, w) in quad.rule(a, b) {
        s += w * f(x)?;
    }
    Ok(s)
}

fn check_refinement(coarse: f64, fine: f64) -> Result<()> {
    let scale = fine.abs().max(coarse.abs());
    if scale > 0.0 && (coarse - fine).abs() > 1e-3 * scale && (coarse - fine).abs() > 1e-300 {
        return Err(Error::numerical(
            "quasimodes",
            format!("quadrature not converged: {coarse:e} vs {fine:e}"),
        ));
    }
    Ok(())
}

/// `⟨v₁, v₂⟩_{L²}`. Different angular indices are orthogonal exactly; for
/// equal ones the cap orthogonality of `J_n(α r/r2)` reduces the integral to
/// `−∫₀^{r_high} (1 − χ²) J J r dr`.
pub fn overlap(q1: &Quasimode, q2: &Quasimode, quad: Composite) -> Result<f64> {
    if q1.n != q2.n {
        return Ok(0.0);
    }
    if q1.k == q2.k && q1.alpha == q2.alpha && q1.eps == q2.eps {
        return Ok(1.0);
    }
    if q1.eps != q2.eps || q1.r1 != q2.r1 || q1.r2 != q2.r2 {
        return Err(Error::invalid("quasimodes", "overlap needs modes from one family"));
    }
    let (c1, c2) = (q1.wavenumber(), q2.wavenumber());
    let n = q1.n;
    let prof = q1.profile;
    let f = |r: f64| -> Result<f64> {
        let chi = prof.value(r);
        let a = bessel_j_and_derivative(n, c1 * r)?.0;
        let b = bessel_j_and_derivative(n, c2 * r)?.0;
        Ok((1.0 - chi * chi) * a * b * r)
    };
    let mut total = 0.0;
    for (a, b) in [(0.0, prof.r_low), (prof.r_low, prof.r_high)] {
        let coarse = radial_integral(a, b, quad, f)?;
        let fine = radial_integral(a, b, quad.refined(), f)?;
        check_refinement(coarse, fine)?;
        total += fine;
    }
    Ok(-0.5 * PI * total / (q1.norm * q2.norm))
}
