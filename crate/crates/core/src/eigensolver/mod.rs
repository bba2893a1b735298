//! Dirichlet eigenpairs of the five-point Laplacian on mushrooms and their
//! sanity domains.
//!
//! Boundary nodes are eliminated. A node whose lattice neighbour lies outside
//! the domain sees the boundary at distance `θh` along that lattice line and
//! gets `1/(θh²)` on the diagonal, so the operator stays symmetric.
//! Eigenpairs are found sector by sector (x-parity), slice by slice, with
//! shift-invert Lanczos; each slice is certified by Sylvester inertia.

mod banded;
pub mod grid;
mod lanczos;
mod sector;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SegmentKind, SegmentShape, Vec2};
use banded::{BandedSym, Ldl};
pub use grid::{Domain, Grid};
pub use sector::Parity;
use sector::Sector;

/// Default grid spacing for the unit mushroom.
pub const DEFAULT_H: f64 = 0.0125;
/// Target number of eigenvalues per spectral slice.
const SLICE_TARGET: usize = 32;
const SLICE_MAX: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    FivePointGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    pub method: Method,
    pub h: f64,
    /// Solve the even and odd sectors separately.
    pub symmetry: bool,
    /// Seed of the Lanczos start vectors.
    pub seed: u64,
}

impl DiscretizationSpec {
    pub fn new(h: f64) -> Self {
        Self { method: Method::FivePointGrid, h, symmetry: true, seed: 0 }
    }

    pub fn without_symmetry(self) -> Self {
        Self { symmetry: false, ..self }
    }
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        Self::new(DEFAULT_H)
    }
}

/// How much of the spectrum to compute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    /// The lowest `n` eigenpairs.
    Count(usize),
    /// Every eigenvalue below the bound.
    Below(f64),
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    /// 1-based position in the ascending spectrum.
    pub j: usize,
    pub e: f64,
    /// Values on the interior nodes of the grid, unit norm with weight `h²`.
    pub u: Vec<f64>,
    pub h: f64,
    /// Sector the pair was computed in; `None` for full-grid solves.
    pub parity: Option<Parity>,
    /// `‖Au − Eu‖ / E`.
    pub residual: f64,
}

/// Lowest part of a discrete spectrum, complete below `complete_below`.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub spec: DiscretizationSpec,
    pub grid: Grid,
    pub pairs: Vec<EigenPair>,
    /// Every discrete eigenvalue below this bound is in `pairs`.
    pub complete_below: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub lambdas: Vec<f64>,
    pub counts: Vec<usize>,
    pub ratios: Vec<f64>,
}

fn sector_id(p: Option<Parity>) -> u64 {
    match p {
        None => 0,
        Some(Parity::Even) => 1,
        Some(Parity::Odd) => 2,
    }
}

/// Factorises `A − xI`, nudging `x` upward if a pivot is tiny.
fn factor_near(a: &BandedSym, x: f64) -> Result<(Ldl, f64)> {
    let mut s = x;
    for k in 0..20 {
        if let Some(f) = Ldl::factor(a, s) {
            return Ok((f, s));
        }
        s = x + (k + 1) as f64 * 1e-7 * x.abs().max(1.0);
    }
    Err(Error::numerical("eigensolver", format!("no stable factorisation near shift {x}")))
}

/// All eigenpairs of one sector below `lam`, as `(E, z, residual)`.
fn sector_spectrum(
    sec: &Sector,
    band: &BandedSym,
    lam: f64,
    seed: u64,
) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    let (f, lam) = factor_near(band, lam)?;
    let total = f.negative_count();
    if total == 0 {
        return Ok(Vec::new());
    }
    // breakpoints with their inertia, refined until slices are small
    let s = total.div_ceil(SLICE_TARGET);
    let mut cuts: Vec<(f64, usize)> = vec![(0.0, 0)];
    for k in 1..s {
        let (f, x) = factor_near(band, lam * k as f64 / s as f64)?;
        cuts.push((x, f.negative_count()));
    }
    cuts.push((lam, total));
    let mut k = 1;
    while k < cuts.len() {
        let (a, ca) = cuts[k - 1];
        let (b, cb) = cuts[k];
        if cb - ca > SLICE_MAX && b - a > 1e-9 * lam {
            let (f, x) = factor_near(band, 0.5 * (a + b))?;
            cuts.insert(k, (x, f.negative_count()));
        } else {
            k += 1;
        }
    }
    let mut out = Vec::with_capacity(total);
    for (idx, w) in cuts.windows(2).enumerate() {
        let ((lo, ca), (hi, cb)) = (w[0], w[1]);
        if cb == ca {
            continue;
        }
        let (f, sigma) = factor_near(band, 0.5 * (lo + hi))?;
        let stream = sector_id(sec.parity) * (1 << 20) + idx as u64;
        let pairs = lanczos::solve_slice(sec, &f, sigma, lo, hi, cb - ca, seed, stream)?;
        for ((e, z), r) in pairs.values.into_iter().zip(pairs.vectors).zip(pairs.residuals) {
            out.push((e, z, r));
        }
    }
    Ok(out)
}

/// Weyl estimate with boundary correction, inverted for the cutoff that
/// should hold `n` Dirichlet eigenvalues.
fn weyl_cutoff(domain: &Domain, n: usize) -> f64 {
    let (a, l) = (domain.area(), domain.perimeter());
    let nn = 1.05 * n as f64 + 3.0;
    let k = (l + (l * l + 16.0 * PI * a * nn).sqrt()) / (2.0 * a);
    k * k
}

fn fix_sign(grid: &Grid, u: &mut [f64], ground: bool) {
    let pivot = if ground {
        grid.nearest_node(grid.domain.centroid()).unwrap_or(0)
    } else {
        let mut best = 0;
        for (k, v) in u.iter().enumerate() {
            if v.abs() > u[best].abs() * (1.0 + 1e-9) {
                best = k;
            }
        }
        best
    };
    if u[pivot] < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lowest Dirichlet eigenpairs of the five-point Laplacian on `domain`.
pub fn solve(domain: Domain, spec: &DiscretizationSpec, target: Target) -> Result<EigenBasis> {
    let grid = Grid::new(domain, spec.h)?;
    let sectors: Vec<Sector> = if spec.symmetry {
        vec![Sector::build(&grid, Some(Parity::Even)), Sector::build(&grid, Some(Parity::Odd))]
    } else {
        vec![Sector::build(&grid, None)]
    };
    let bands: Vec<BandedSym> = sectors.iter().map(Sector::banded).collect();
    let lam = match target {
        Target::Below(l) => {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid("eigensolver", format!("cutoff must be positive, got {l}")));
            }
            l
        }
        Target::Count(0) => {
            return Err(Error::invalid("eigensolver", "eigenpair count must be positive"));
        }
        Target::Count(n) => {
            if n > grid.len() {
                return Err(Error::invalid(
                    "eigensolver",
                    format!("{n} eigenpairs requested from a grid with {} nodes", grid.len()),
                ));
            }
            let mut lam = weyl_cutoff(&domain, n);
            loop {
                let mut total = 0;
                for b in &bands {
                    total += factor_near(b, lam)?.0.negative_count();
                }
                if total >= n {
                    break lam;
                }
                lam *= 1.1;
            }
        }
    };
    let mut raw = Vec::new();
    for (sec, band) in sectors.iter().zip(&bands) {
        for (e, z, r) in sector_spectrum(sec, band, lam, spec.seed)? {
            raw.push((e, sec.parity, sec.expand(&grid, &z), r));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(sector_id(a.1).cmp(&sector_id(b.1))));
    let mut complete_below = lam;
    if let Target::Count(n) = target {
        if raw.len() > n {
            complete_below = raw[n].0;
            raw.truncate(n);
        }
    }
    let pairs = raw
        .into_iter()
        .enumerate()
        .map(|(i, (e, parity, mut u, residual))| {
            fix_sign(&grid, &mut u, i == 0);
            EigenPair { j: i + 1, e, u, h: spec.h, parity, residual }
        })
        .collect();
    Ok(EigenBasis { spec: *spec, grid, pairs, complete_below })
}

impl EigenBasis {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.e).collect()
    }

    /// `N(Λ) = #{j : E_j ≤ Λ}`.
    pub fn counting(&self, lambda: f64) -> Result<usize> {
        if lambda >= self.complete_below {
            return Err(Error::range(
                "eigensolver",
                format!("Λ = {lambda} is beyond the computed range (< {})", self.complete_below),
            ));
        }
        Ok(self.pairs.partition_point(|p| p.e <= lambda))
    }

    /// `4πN(Λ)/(Λ·|M|)`.
    pub fn weyl_ratio(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::invalid("eigensolver", format!("Λ must be positive, got {lambda}")));
        }
        let n = self.counting(lambda)?;
        Ok(4.0 * PI * n as f64 / (lambda * self.grid.domain.area()))
    }

    pub fn weyl_report(&self, lambdas: &[f64]) -> Result<WeylReport> {
        let mut counts = Vec::with_capacity(lambdas.len());
        let mut ratios = Vec::with_capacity(lambdas.len());
        for &l in lambdas {
            counts.push(self.counting(l)?);
            ratios.push(self.weyl_ratio(l)?);
        }
        Ok(WeylReport { lambdas: lambdas.to_vec(), counts, ratios })
    }

    /// Discrete inner product with weight `h²`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * h2
    }

    /// Largest entry of `|G − I|` for the Gram matrix of the eigenvectors.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.pairs.iter().enumerate() {
            for b in &self.pairs[i..] {
                let g = self.inner(&a.u, &b.u);
                let target = if a.j == b.j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Sup-norm distance of `u` from its even and odd parts, relative to `‖u‖_∞`.
    pub fn mirror_defects(&self, u: &[f64]) -> (f64, f64) {
        let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let (mut even, mut odd) = (0.0f64, 0.0f64);
        for (k, &(i, j)) in self.grid.nodes.iter().enumerate() {
            let m = self.grid.value_at(u, -i, j);
            even = even.max((u[k] - m).abs());
            odd = odd.max((u[k] + m).abs());
        }
        (even / scale, odd / scale)
    }

    /// Outward normal derivative of eigenfunction `j` (1-based) along a
    /// boundary segment.
    pub fn normal_derivative(&self, j: usize, kind: SegmentKind) -> Result<NormalDerivative> {
        let pair = self.pairs.get(j.wrapping_sub(1)).ok_or_else(|| {
            Error::invalid("eigensolver", format!("eigenpair {j} not computed ({} available)", self.pairs.len()))
        })?;
        let seg = self
            .grid
            .domain
            .boundary_segments()
            .into_iter()
            .find(|s| s.kind == kind)
            .ok_or_else(|| Error::invalid("eigensolver", format!("domain has no {kind} segment")))?;
        let grid = &self.grid;
        let h = grid.h;
        let u = &pair.u;
        let mut nd = NormalDerivative { kind, points: vec![], normals: vec![], values: vec![], weights: vec![] };
        match seg.shape {
            SegmentShape::Line { start, end } => {
                let n = seg.normal_at(0.5 * (seg.s_start + seg.s_end));
                let (ni, nj) = (n.x.round() as i32, n.y.round() as i32);
                let off_lattice = |v: f64| (v / h - (v / h).round()).abs() > 1e-9;
                let (fixed, a, b) = if nj != 0 { (start.y, start.x, end.x) } else { (start.x, start.y, end.y) };
                if (n.x.abs() - ni.abs() as f64).abs() > 1e-12 || off_lattice(fixed) {
                    return Err(Error::invalid(
                        "eigensolver",
                        format!("{kind} segment is not on a grid line at h = {h}"),
                    ));
                }
                let (a, b) = (a.min(b), a.max(b));
                let first = (a / h).floor() as i32 + 1;
                let last = (b / h).ceil() as i32 - 1;
                let fixed_idx = (fixed / h).round() as i32;
                let coords: Vec<f64> = (first..=last).map(|c| c as f64 * h).collect();
                for (idx, &c) in coords.iter().enumerate() {
                    let ci = (c / h).round() as i32;
                    let (i, jj) = if nj != 0 { (ci, fixed_idx) } else { (fixed_idx, ci) };
                    let u1 = grid.value_at(u, i - ni, jj - nj);
                    let u2 = grid.value_at(u, i - 2 * ni, jj - 2 * nj);
                    let prev = if idx == 0 { a } else { coords[idx - 1] };
                    let next = if idx + 1 == coords.len() { b } else { coords[idx + 1] };
                    nd.points.push(if nj != 0 { Vec2::new(c, fixed) } else { Vec2::new(fixed, c) });
                    nd.normals.push(n);
                    nd.values.push(-(4.0 * u1 - u2) / (2.0 * h));
                    nd.weights.push(0.5 * (next - prev));
                }
            }
            SegmentShape::Arc { radius, theta_start, theta_end } => {
                let m = ((theta_end - theta_start) * radius / h).ceil() as usize;
                let dt = (theta_end - theta_start) / m as f64;
                for k in 0..m {
                    let th = theta_start + (k as f64 + 0.5) * dt;
                    let n = Vec2::new(th.cos(), th.sin());
                    let p = radius * n;
                    let u2 = grid.interpolate(u, p - (2.0 * h) * n);
                    let u3 = grid.interpolate(u, p - (3.0 * h) * n);
                    nd.points.push(p);
                    nd.normals.push(n);
                    nd.values.push(-(9.0 * u2 - 4.0 * u3) / (6.0 * h));
                    nd.weights.push(radius * dt);
                }
            }
        }
        Ok(nd)
    }

    /// `∮(∂_n u)²(x·n) ds / (2E)`, which is 1 for an exact eigenfunction.
    pub fn rellich_ratio(&self, j: usize) -> Result<f64> {
        let e = self.pairs[j - 1].e;
        let mut s = 0.0;
        for seg in self.grid.domain.boundary_segments() {
            let nd = self.normal_derivative(j, seg.kind)?;
            s += nd.integrate(|p, n, v| v * v * p.dot(n));
        }
        Ok(s / (2.0 * e))
    }
}

/// Samples of `∂_n u` with quadrature weights along one boundary segment.
#[derive(Clone, Debug)]
pub struct NormalDerivative {
    pub kind: SegmentKind,
    pub points: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalDerivative {
    /// `∫ f(x, n, ∂_n u) ds` over the segment.
    pub fn integrate(&self, f: impl Fn(Vec2, Vec2, f64) -> f64) -> f64 {
        (0..self.values.len())
            .map(|k| self.weights[k] * f(self.points[k], self.normals[k], self.values[k]))
            .sum()
    }

    pub fn squared_integral(&self) -> f64 {
        self.integrate(|_, _, v| v * v)
    }
}

/// A step in `t` where an eigenvalue branch moves by more than three times
/// its median step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspectedCrossing {
    pub j: usize,
    /// Index of the step from `spectra[step]` to `spectra[step + 1]`.
    pub step: usize,
    pub jump: f64,
    pub median: f64,
}

/// Matches branches by sorted index across consecutive spectra.
pub fn track_branches(spectra: &[Vec<f64>]) -> Vec<SuspectedCrossing> {
    let depth = spectra.iter().map(Vec::len).min().unwrap_or(0);
    let mut out = Vec::new();
    if spectra.len() < 3 {
        return out;
    }
    for j in 0..depth {
        let steps: Vec<f64> = spectra.windows(2).map(|w| (w[1][j] - w[0][j]).abs()).collect();
        let mut sorted = steps.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        for (step, &d) in steps.iter().enumerate() {
            if d > 3.0 * median {
                out.push(SuspectedCrossing { j: j + 1, step, jump: d, median });
            }
        }
    }
    out
}

/// Key of a cached spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenCacheKey {
    pub r1: f64,
    pub r2: f64,
    pub t: f64,
    pub h: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedEigenvalue {
    pub j: usize,
    pub e: f64,
    pub residual: f64,
    pub parity: Option<Parity>,
}

/// Directory of CSV spectra, one file per key.
#[derive(Clone, Debug)]
pub struct EigenCache {
    dir: PathBuf,
}

fn parity_name(p: Option<Parity>) -> &'static str {
    match p {
        None => "none",
        Some(Parity::Even) => "even",
        Some(Parity::Odd) => "odd",
    }
}

impl EigenCache {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        Self { dir: dir.as_ref().to_path_buf() }
    }

    pub fn path(&self, k: &EigenCacheKey) -> PathBuf {
        self.dir.join(format!("eig_r1={}_r2={}_t={}_h={}_n={}.csv", k.r1, k.r2, k.t, k.h, k.count))
    }

    pub fn load(&self, k: &EigenCacheKey) -> Result<Option<Vec<CachedEigenvalue>>> {
        let path = self.path(k);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let bad = |line: &str| Error::Parse(format!("{}: bad eigenvalue record {line:?}", path.display()));
        let mut out = Vec::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(line));
            }
            let parity = match f[3] {
                "none" => None,
                "even" => Some(Parity::Even),
                "odd" => Some(Parity::Odd),
                _ => return Err(bad(line)),
            };
            out.push(CachedEigenvalue {
                j: f[0].parse().map_err(|_| bad(line))?,
                e: f[1].parse().map_err(|_| bad(line))?,
                residual: f[2].parse().map_err(|_| bad(line))?,
                parity,
            });
        }
        if out.len() != k.count {
            return Err(Error::Parse(format!(
                "{}: {} records for a key of {}",
                path.display(),
                out.len(),
                k.count
            )));
        }
        Ok(Some(out))
    }

    pub fn store(&self, k: &EigenCacheKey, values: &[CachedEigenvalue]) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut text = String::from("j,E,residual,parity\n");
        for v in values {
            let _ = writeln!(text, "{},{:e},{:e},{}", v.j, v.e, v.residual, parity_name(v.parity));
        }
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.persist(self.path(k)).map_err(|e| e.error)?;
        Ok(())
    }
}

impl EigenBasis {
    pub fn cache_records(&self) -> Vec<CachedEigenvalue> {
        self.pairs
            .iter()
            .map(|p| CachedEigenvalue { j: p.j, e: p.e, residual: p.residual, parity: p.parity })
            .collect()
    }
}
