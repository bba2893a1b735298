//! Eigenvalue variation under stalk elongation: the metric family `g_t`,
//! the operator `Q`, Hadamard formulas and flow diagnostics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::integrable_fraction;
use crate::eigensolver::{self, track_branches, DiscretizationSpec, Domain, EigenBasis, SuspectedCrossing, Target};
use crate::error::{Error, Result};
use crate::geometry::{MushroomGeometry, SegmentKind};
use crate::quadrature::Composite;
use crate::quasimodes::smooth_step;

/// Normalised bump `φ` on the reference stalk `y ∈ [−1, 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiProfile {
    pub center: f64,
    pub half_width: f64,
    norm: f64,
}

impl Default for PhiProfile {
    fn default() -> Self {
        Self::new(Self::DEFAULT_HALF_WIDTH).expect("default half-width is valid")
    }
}

impl PhiProfile {
    pub const DEFAULT_HALF_WIDTH: f64 = 0.25;

    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width < 0.5) {
            return Err(Error::invalid("eigenflow", format!("bump half-width {half_width} must lie in (0, 1/2)")));
        }
        let mass = Composite { panels: 16, order: 32 }.integrate(-1.0, 1.0, |z| bump(z).0);
        Ok(Self { center: -0.5, half_width, norm: 1.0 / (half_width * mass) })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// `(φ, φ′, φ″)` at `y`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        let w = self.half_width;
        let (b, b1, b2) = bump((y - self.center) / w);
        (self.norm * b, self.norm * b1 / w, self.norm * b2 / (w * w))
    }

    pub fn value(&self, y: f64) -> f64 {
        self.eval(y).0
    }

    pub fn max_value(&self) -> f64 {
        self.norm * (-1.0f64).exp()
    }

    /// `∫_a^b φ`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return 0.0;
        }
        Composite { panels: 4, order: 32 }.integrate(a, b, |y| self.value(y))
    }
}

/// `exp(−1/(1−z²))` and its first two derivatives.
fn bump(z: f64) -> (f64, f64, f64) {
    let v = 1.0 - z * z;
    if v <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let b = (-1.0 / v).exp();
    let g1 = -2.0 * z / (v * v);
    let g2 = -(2.0 + 6.0 * z * z) / (v * v * v);
    (b, g1 * b, (g2 + g1 * g1) * b)
}

/// Sign of the `φ_t″` term in `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QVariant {
    /// `Q = −φ_t″ − 4(φ_t′∂_y + φ_t∂_y²)`, the form for which
    /// `Ė = −(1/2)⟨Qu, u⟩` holds.
    Corrected,
    /// `Q = φ_t″ − 4(φ_t′∂_y + φ_t∂_y²)` as printed.
    Printed,
}

/// The operator `Q` on `M_t` together with its cutoff `Q_δ = χ_δ Q`.
#[derive(Clone, Copy, Debug)]
pub struct QOperator {
    pub t: f64,
    pub delta: f64,
    pub r1: f64,
    pub phi: PhiProfile,
}

impl QOperator {
    pub fn new(g: &MushroomGeometry, phi: PhiProfile, delta: f64) -> Result<Self> {
        let t = g.t();
        if 1.0 + (t - 1.0) * phi.max_value() <= 0.0 {
            return Err(Error::range(
                "eigenflow",
                format!(
                    "metric 1 + (t−1)φ degenerates at t = {t}; the family needs t > {}",
                    1.0 - 1.0 / phi.max_value()
                ),
            ));
        }
        if !(delta > 0.0 && 2.0 * delta < g.r1()) {
            return Err(Error::invalid("eigenflow", format!("cutoff scale {delta} must lie in (0, r1/2)")));
        }
        Ok(Self { t, delta, r1: g.r1(), phi })
    }

    fn stretch(&self, s: f64) -> f64 {
        1.0 + (self.t - 1.0) * self.phi.value(s)
    }

    /// `I_t` on the stalk: reference coordinate `s ∈ [−1, 0]` to `y ∈ [−t, 0]`.
    pub fn forward(&self, s: f64) -> f64 {
        s - (self.t - 1.0) * self.phi.mass_between(s, 0.0)
    }

    /// `I_t⁻¹` on the stalk.
    pub fn inverse(&self, y: f64) -> f64 {
        let (lo, hi) = self.phi.support();
        if y >= hi {
            return y;
        }
        if y <= self.forward(lo) {
            return y + self.t - 1.0;
        }
        let (mut a, mut b) = (lo, hi);
        let mut s = 0.5 * (a + b);
        for _ in 0..100 {
            let f = self.forward(s) - y;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                b = s;
            } else {
                a = s;
            }
            let next = s - f / self.stretch(s);
            s = if next > a && next < b { next } else { 0.5 * (a + b) };
            if b - a < 1e-15 {
                break;
            }
        }
        s
    }

    /// `(φ_t, φ_t′, φ_t″)` at height `y` of `M_t`, where
    /// `φ_t = (φR_t²)∘I_t⁻¹`.
    pub fn phi_t(&self, y: f64) -> (f64, f64, f64) {
        if y >= 0.0 || y <= -self.t {
            return (0.0, 0.0, 0.0);
        }
        let s = self.inverse(y);
        let (f, f1, f2) = self.phi.eval(s);
        if f == 0.0 && f1 == 0.0 && f2 == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let a = self.stretch(s);
        let k = self.t - 1.0;
        (f / a, f1 / a.powi(3), f2 / a.powi(4) - 3.0 * k * f1 * f1 / a.powi(5))
    }

    /// Horizontal cutoff `χ_δ(x)`.
    pub fn chi(&self, x: f64) -> f64 {
        smooth_step((self.r1 - x.abs() - self.delta) / self.delta).0
    }

    /// `∫∫_stalk φ_t dx dy`, which equals `Ȧ = 2r1`.
    pub fn stalk_integral(&self) -> f64 {
        let (lo, hi) = self.phi.support();
        let (a, b) = (self.forward(lo), self.forward(hi));
        2.0 * self.r1 * Composite { panels: 16, order: 32 }.integrate(a, b, |y| self.phi_t(y).0)
    }

    /// Discrete `⟨Qu_j, u_j⟩` (with `χ_δ` when `cutoff`), using centred
    /// differences in `y` on the eigensolver lattice.
    pub fn form(&self, basis: &EigenBasis, j: usize, variant: QVariant, cutoff: bool) -> Result<f64> {
        let pair = pair(basis, j)?;
        let grid = &basis.grid;
        let h = grid.h;
        match grid.domain {
            Domain::Mushroom(g) if (g.t() - self.t).abs() <= 1e-12 && (g.r1() - self.r1).abs() <= 1e-12 => {}
            _ => return Err(Error::invalid("eigenflow", "Q was built for a different domain")),
        }
        let (lo, hi) = self.phi.support();
        if self.forward(hi) - self.forward(lo) < 8.0 * h {
            return Err(Error::invalid(
                "eigenflow",
                format!("grid step {h} is too coarse for the bump of half-width {}", self.phi.half_width),
            ));
        }
        let c2 = match variant {
            QVariant::Corrected => -1.0,
            QVariant::Printed => 1.0,
        };
        // Row sums over x of u², u·∂_y u and u·∂_y²u, interpolated in y and
        // integrated against φ_t with Gauss points so the bump is resolved
        // independently of h.
        let u = &pair.u;
        let mut rows: BTreeMap<i32, [f64; 3]> = BTreeMap::new();
        for (k, &(i, jj)) in grid.nodes.iter().enumerate() {
            if jj >= 0 {
                continue;
            }
            let chi = if cutoff { self.chi(i as f64 * h) } else { 1.0 };
            let (up, u0, dn) = (grid.value_at(u, i, jj + 1), u[k], grid.value_at(u, i, jj - 1));
            let uy = (up - dn) / (2.0 * h);
            let uyy = (up - 2.0 * u0 + dn) / (h * h);
            let r = rows.entry(jj).or_insert([0.0; 3]);
            r[0] += chi * h * u0 * u0;
            r[1] += chi * h * u0 * uy;
            r[2] += chi * h * u0 * uyy;
        }
        let row = |j: i32| rows.get(&j).copied().unwrap_or([0.0; 3]);
        let (ya, yb) = (self.forward(lo), self.forward(hi));
        let rule = Composite { panels: 1, order: 8 };
        let mut s = 0.0;
        for j in (ya / h).floor() as i32..=(yb / h).floor() as i32 {
            let (a, b) = ((j as f64 * h).max(ya), ((j + 1) as f64 * h).min(yb));
            if b <= a {
                continue;
            }
            let vals = [row(j - 1), row(j), row(j + 1), row(j + 2)];
            for (y, w) in rule.rule(a, b) {
                let (f, f1, f2) = self.phi_t(y);
                let x = y / h - j as f64;
                let l = [
                    -x * (x - 1.0) * (x - 2.0) / 6.0,
                    (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
                    -(x + 1.0) * x * (x - 2.0) / 2.0,
                    (x + 1.0) * x * (x - 1.0) / 6.0,
                ];
                let mut r = [0.0; 3];
                for (lk, v) in l.iter().zip(&vals) {
                    for c in 0..3 {
                        r[c] += lk * v[c];
                    }
                }
                s += w * (c2 * f2 * r[0] - 4.0 * f1 * r[1] - 4.0 * f * r[2]);
            }
        }
        Ok(s)
    }
}

fn pair(basis: &EigenBasis, j: usize) -> Result<&eigensolver::EigenPair> {
    basis.pairs.get(j.wrapping_sub(1)).ok_or_else(|| {
        Error::invalid("eigenflow", format!("eigenpair {j} not computed ({} available)", basis.pairs.len()))
    })
}

/// Boundary velocity of pure stalk elongation.
pub const ELONGATION: [(SegmentKind, f64); 1] = [(SegmentKind::StalkBottom, 1.0)];

/// `Ė = −∮ρ(∂_n u)² ds` for a normal velocity `ρ` that is constant on each
/// listed segment and zero on the others.
pub fn hadamard_boundary(basis: &EigenBasis, j: usize, rho: &[(SegmentKind, f64)]) -> Result<f64> {
    pair(basis, j)?;
    let mut s = 0.0;
    for &(kind, r) in rho {
        if r == 0.0 {
            continue;
        }
        let nd = basis.normal_derivative(j, kind)?;
        if nd.values.len() < 8 {
            return Err(Error::invalid(
                "eigenflow",
                format!("{kind} segment has only {} samples at h = {}", nd.values.len(), basis.grid.h),
            ));
        }
        s += r * nd.squared_integral();
    }
    Ok(-s)
}

/// `Ė = −(1/2)⟨Qu, u⟩`.
pub fn hadamard_interior(basis: &EigenBasis, j: usize, q: &QOperator, variant: QVariant) -> Result<f64> {
    Ok(-0.5 * q.form(basis, j, variant, false)?)
}

/// Mean of `|⟨(Q_δ − Q)u_j, u_j⟩| / E_j` over `j ≤ jmax`.
pub fn cutoff_defect(basis: &EigenBasis, q: &QOperator, jmax: usize) -> Result<f64> {
    let jmax = jmax.min(basis.pairs.len());
    if jmax == 0 {
        return Err(Error::invalid("eigenflow", "no eigenpairs to average over"));
    }
    let mut s = 0.0;
    for j in 1..=jmax {
        let full = q.form(basis, j, QVariant::Corrected, false)?;
        let cut = q.form(basis, j, QVariant::Corrected, true)?;
        s += (cut - full).abs() / basis.pairs[j - 1].e;
    }
    Ok(s / jmax as f64)
}

/// `−Ȧ/(A(1−d))`.
pub fn flow_speed_bound(g: &MushroomGeometry) -> f64 {
    -g.area_rate() / (g.area() * (1.0 - integrable_fraction(g)))
}

/// Discretisation and cutoff choices shared by the flow computations.
#[derive(Clone, Copy, Debug)]
pub struct FlowSettings {
    pub spec: DiscretizationSpec,
    pub phi: PhiProfile,
    /// Cutoff scale; `None` means four grid steps.
    pub delta: Option<f64>,
}

impl FlowSettings {
    pub fn new(spec: DiscretizationSpec) -> Self {
        Self { spec, phi: PhiProfile::default(), delta: None }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(4.0 * self.spec.h)
    }

    fn check_aligned(&self, t: f64) -> Result<()> {
        let r = t / self.spec.h;
        if (r - r.round()).abs() > 1e-9 {
            return Err(Error::invalid(
                "eigenflow",
                format!("t = {t} is not a multiple of h = {}; the stalk bottom must lie on a grid line", self.spec.h),
            ));
        }
        Ok(())
    }

    fn solve(&self, g: &MushroomGeometry, t: f64, jmax: usize) -> Result<EigenBasis> {
        self.check_aligned(t)?;
        eigensolver::solve(Domain::Mushroom(g.with_t(t)?), &self.spec, Target::Count(jmax))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardRecord {
    pub j: usize,
    pub e: f64,
    /// `(E(t+Δt) − E(t−Δt)) / (2Δt)` along the branch through `u_j`.
    pub de_numeric: f64,
    /// Smaller of the overlaps with the matched pairs at `t ± Δt`.
    pub branch_overlap: f64,
    pub de_boundary: f64,
    pub de_interior: f64,
    /// Interior formula with `Q` exactly as printed.
    pub de_interior_printed: f64,
    /// `⟨Qu, u⟩` with the corrected `Q`.
    pub q_form: f64,
}

/// Relative errors of the two normalisations `Ė = −(1/2)⟨Qu,u⟩` and
/// `E⁻¹Ė = ⟨Qu,u⟩` against the numeric derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalisationCheck {
    pub half_form_error: f64,
    pub scaled_form_error: f64,
}

impl NormalisationCheck {
    pub fn favoured(&self) -> &'static str {
        if self.half_form_error <= self.scaled_form_error {
            "dE/dt = -(1/2)<Qu,u>"
        } else {
            "dE/dt / E = <Qu,u>"
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardReport {
    pub t: f64,
    pub h: f64,
    pub dt: f64,
    pub bound: f64,
    pub records: Vec<HadamardRecord>,
    pub normalisation: NormalisationCheck,
}

impl HadamardReport {
    /// Largest pairwise relative disagreement among the numeric, boundary
    /// and interior values of one record.
    pub fn max_disagreement(r: &HadamardRecord) -> f64 {
        let v = [r.de_numeric, r.de_boundary, r.de_interior];
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in a + 1..3 {
                let scale = v[a].abs().max(v[b].abs());
                worst = worst.max((v[a] - v[b]).abs() / scale);
            }
        }
        worst
    }
}

/// All three derivative estimates for `j ≤ jmax` at the geometry's `t`,
/// with the numeric one taken over `t ± dt`.
pub fn hadamard_report(g: &MushroomGeometry, settings: &FlowSettings, jmax: usize, dt: f64) -> Result<HadamardReport> {
    if jmax == 0 {
        return Err(Error::invalid("eigenflow", "jmax must be >= 1"));
    }
    if !(dt > 0.0 && dt < g.t()) {
        return Err(Error::invalid("eigenflow", format!("step {dt} must lie in (0, t)")));
    }
    let t = g.t();
    let q = QOperator::new(g, settings.phi, settings.delta())?;
    let bases: Vec<EigenBasis> = [(t - dt, jmax + 4), (t, jmax), (t + dt, jmax + 4)]
        .into_par_iter()
        .map(|(s, n)| settings.solve(g, s, n))
        .collect::<Result<_>>()?;
    let (lo, mid, hi) = (&bases[0], &bases[1], &bases[2]);
    let mut records = Vec::with_capacity(jmax);
    for j in 1..=jmax {
        let q_form = q.form(mid, j, QVariant::Corrected, false)?;
        let (el, ol) = matched_branch(mid, j, lo);
        let (eh, oh) = matched_branch(mid, j, hi);
        records.push(HadamardRecord {
            j,
            e: mid.pairs[j - 1].e,
            de_numeric: (eh - el) / (2.0 * dt),
            branch_overlap: ol.min(oh),
            de_boundary: hadamard_boundary(mid, j, &ELONGATION)?,
            de_interior: -0.5 * q_form,
            de_interior_printed: hadamard_interior(mid, j, &q, QVariant::Printed)?,
            q_form,
        });
    }
    let mean_err = |f: &dyn Fn(&HadamardRecord) -> f64| {
        records.iter().map(|r| ((f(r) - r.de_numeric) / r.de_numeric).abs()).sum::<f64>() / records.len() as f64
    };
    let normalisation = NormalisationCheck {
        half_form_error: mean_err(&|r| -0.5 * r.q_form),
        scaled_form_error: mean_err(&|r| r.e * r.q_form),
    };
    Ok(HadamardReport { t, h: settings.spec.h, dt, bound: flow_speed_bound(g), records, normalisation })
}

/// Eigenvalue of the pair in `other` with the largest overlap with `u_j` of
/// `basis`, both read on their common lattice nodes, and that overlap.
fn matched_branch(basis: &EigenBasis, j: usize, other: &EigenBasis) -> (f64, f64) {
    let u = &basis.pairs[j - 1].u;
    let h2 = basis.grid.h * basis.grid.h;
    other
        .pairs
        .iter()
        .map(|p| {
            let o: f64 = basis
                .grid
                .nodes
                .iter()
                .zip(u)
                .map(|(&(i, jj), &v)| v * other.grid.value_at(&p.u, i, jj))
                .sum();
            (p.e, (o * h2).abs())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("basis has pairs")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub t: f64,
    pub j: usize,
    pub e: f64,
    pub de_numeric: Option<f64>,
    pub de_boundary: f64,
    /// `None` where the metric family degenerates.
    pub de_interior: Option<f64>,
    pub speed: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub h: f64,
    pub ts: Vec<f64>,
    /// `spectra[k]` holds `E_1(t_k) ≤ … ≤ E_jmax(t_k)`.
    pub spectra: Vec<Vec<f64>>,
    pub records: Vec<FlowRecord>,
    pub crossings: Vec<SuspectedCrossing>,
    pub warnings: Vec<String>,
}

impl FlowReport {
    /// `(j, t_k, t_{k+1})` where `E_j` increases by more than `rel_tol·E_j`.
    pub fn monotonicity_violations(&self, rel_tol: f64) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for (k, w) in self.spectra.windows(2).enumerate() {
            for (j, (a, b)) in w[0].iter().zip(&w[1]).enumerate() {
                if b - a > rel_tol * a.abs() {
                    out.push((j + 1, self.ts[k], self.ts[k + 1]));
                }
            }
        }
        out
    }
}

/// `count` evenly spaced samples on `[t0, t1]`.
pub fn t_grid(t0: f64, t1: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(t1 > t0) {
        return Err(Error::invalid("eigenflow", format!("need t0 < t1 and >= 2 samples, got [{t0}, {t1}] x {count}")));
    }
    Ok((0..count).map(|k| t0 + (t1 - t0) * k as f64 / (count - 1) as f64).collect())
}

/// Default sample count: 21 per unit of `t`.
pub fn default_samples(t0: f64, t1: f64) -> usize {
    ((20.0 * (t1 - t0)).round() as usize + 1).max(2)
}

/// Spectra, Hadamard values and numeric derivatives along a `t` grid.
pub fn flow_sweep(g: &MushroomGeometry, settings: &FlowSettings, ts: &[f64], jmax: usize) -> Result<FlowReport> {
    if ts.is_empty() || jmax == 0 {
        return Err(Error::invalid("eigenflow", "sweep needs at least one t and jmax >= 1"));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("eigenflow", "t samples must be strictly increasing"));
    }
    let bases: Vec<EigenBasis> = ts.par_iter().map(|&t| settings.solve(g, t, jmax)).collect::<Result<_>>()?;
    let spectra: Vec<Vec<f64>> = bases.iter().map(|b| b.eigenvalues()).collect();
    let mut warnings = Vec::new();
    let mut records = Vec::with_capacity(ts.len() * jmax);
    for (k, (&t, basis)) in ts.iter().zip(&bases).enumerate() {
        let gt = g.with_t(t)?;
        let q = match QOperator::new(&gt, settings.phi, settings.delta()) {
            Ok(q) => Some(q),
            Err(e) => {
                warnings.push(format!("t = {t}: interior formula skipped: {e}"));
                None
            }
        };
        let bound = flow_speed_bound(&gt);
        for j in 1..=jmax {
            let e = spectra[k][j - 1];
            let de_boundary = hadamard_boundary(basis, j, &ELONGATION)?;
            let de_interior = match q.map(|q| hadamard_interior(basis, j, &q, QVariant::Corrected)) {
                Some(Ok(v)) => Some(v),
                Some(Err(e)) => {
                    if j == 1 {
                        warnings.push(format!("t = {t}: interior formula skipped: {e}"));
                    }
                    None
                }
                None => None,
            };
            records.push(FlowRecord {
                t,
                j,
                e,
                de_numeric: numeric_derivative(ts, &spectra, k, j - 1),
                de_boundary,
                de_interior,
                speed: de_boundary / e,
                bound,
            });
        }
    }
    let crossings = track_branches(&spectra);
    for c in &crossings {
        warnings.push(format!(
            "suspected crossing of branch {} between t = {} and t = {}",
            c.j,
            ts[c.step],
            ts[c.step + 1]
        ));
    }
    Ok(FlowReport { h: settings.spec.h, ts: ts.to_vec(), spectra, records, crossings, warnings })
}

/// Second-order differences, one-sided at the ends of the grid.
fn numeric_derivative(ts: &[f64], spectra: &[Vec<f64>], k: usize, j: usize) -> Option<f64> {
    let n = ts.len();
    let e = |i: usize| spectra[i][j];
    match n {
        0 | 1 => None,
        2 => Some((e(1) - e(0)) / (ts[1] - ts[0])),
        _ if k == 0 => {
            let d = ts[1] - ts[0];
            Some((-3.0 * e(0) + 4.0 * e(1) - e(2)) / (2.0 * d))
        }
        _ if k == n - 1 => {
            let d = ts[n - 1] - ts[n - 2];
            Some((3.0 * e(n - 1) - 4.0 * e(n - 2) + e(n - 3)) / (2.0 * d))
        }
        _ => Some((e(k + 1) - e(k - 1)) / (ts[k + 1] - ts[k - 1])),
    }
}

/// `max −Ė_j/E_j` over the numeric derivatives of a sweep.
pub fn crude_speed_constant(report: &FlowReport) -> f64 {
    report
        .records
        .iter()
        .filter_map(|r| r.de_numeric.map(|d| -d / r.e))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylDecrease {
    pub j: usize,
    pub measured: f64,
    pub predicted: f64,
    /// `None` when the predicted decrease is zero.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylDecreaseReport {
    pub t1: f64,
    pub t2: f64,
    pub per_j: Vec<WeylDecrease>,
    pub mean_ratio: Option<f64>,
    /// Summed measured over summed predicted decrease.
    pub pooled_ratio: Option<f64>,
    pub warnings: Vec<SuspectedCrossing>,
}

/// Measured `E_j(t1) − E_j(t2)` against `4πj(1/A(t1) − 1/A(t2))`, with
/// `t1, t2` the first and last samples. Intermediate samples only feed the
/// crossing heuristic.
pub fn weyl_decrease_check(
    g: &MushroomGeometry,
    js: std::ops::RangeInclusive<usize>,
    ts: &[f64],
    spectra: &[Vec<f64>],
) -> Result<WeylDecreaseReport> {
    if ts.len() < 2 || ts.len() != spectra.len() {
        return Err(Error::invalid("eigenflow", "need matching t samples and spectra, at least two"));
    }
    if ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("eigenflow", "t samples must be non-decreasing"));
    }
    let depth = spectra.iter().map(Vec::len).min().unwrap_or(0);
    if *js.start() == 0 || *js.end() > depth || js.is_empty() {
        return Err(Error::invalid("eigenflow", format!("branches {js:?} not available (depth {depth})")));
    }
    let (t1, t2) = (ts[0], ts[ts.len() - 1]);
    let inv_area = |t: f64| -> Result<f64> { Ok(1.0 / g.with_t(t)?.area()) };
    let da = inv_area(t1)? - inv_area(t2)?;
    let (first, last) = (&spectra[0], &spectra[spectra.len() - 1]);
    let per_j: Vec<WeylDecrease> = js
        .clone()
        .map(|j| {
            let measured = first[j - 1] - last[j - 1];
            let predicted = 4.0 * std::f64::consts::PI * j as f64 * da;
            let ratio = (predicted != 0.0).then(|| measured / predicted);
            WeylDecrease { j, measured, predicted, ratio }
        })
        .collect();
    let ratios: Vec<f64> = per_j.iter().filter_map(|w| w.ratio).collect();
    let mean_ratio = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    let predicted: f64 = per_j.iter().map(|w| w.predicted).sum();
    let pooled_ratio = (predicted != 0.0).then(|| per_j.iter().map(|w| w.measured).sum::<f64>() / predicted);
    let warnings = track_branches(spectra).into_iter().filter(|c| js.contains(&c.j)).collect();
    Ok(WeylDecreaseReport { t1, t2, per_j, mean_ratio, pooled_ratio, warnings })
}

/// Trapezoidal fraction of `[t_0, t_last]` during which `E_j(t)` lies in
/// `∪[q_i − c, q_i + c]`.
pub fn occupancy(j: usize, ts: &[f64], spectra: &[Vec<f64>], quasi: &[f64], c: f64) -> Result<f64> {
    if ts.len() < 20 {
        return Err(Error::invalid("eigenflow", format!("occupancy needs at least 20 t samples, got {}", ts.len())));
    }
    if ts.len() != spectra.len() || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("eigenflow", "t samples must increase and match the spectra"));
    }
    if !(c >= 0.0) {
        return Err(Error::invalid("eigenflow", format!("window half-width {c} must be >= 0")));
    }
    let inside = |k: usize| -> Result<f64> {
        let e = *spectra[k]
            .get(j.wrapping_sub(1))
            .ok_or_else(|| Error::invalid("eigenflow", format!("branch {j} missing at t = {}", ts[k])))?;
        Ok(if quasi.iter().any(|&q| (e - q).abs() <= c) { 1.0 } else { 0.0 })
    };
    let mut num = 0.0;
    for k in 0..ts.len() {
        let w = 0.5 * (ts[(k + 1).min(ts.len() - 1)] - ts[k.saturating_sub(1)]);
        num += w * inside(k)?;
    }
    Ok(num / (ts[ts.len() - 1] - ts[0]))
}
