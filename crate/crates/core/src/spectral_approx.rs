//! Eigenvectors near a family of quasimodes, and cluster bookkeeping for
//! eigenvalues against quasi-eigenvalues.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "spectral_approx";

/// A connected component of `⋃ [E′_i − c, E′_i + c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub lo: f64,
    pub hi: f64,
    /// Indices into the quasi-eigenvalue list.
    pub quasi: Vec<usize>,
    /// Indices into the eigenvalue list, filled by [`fill_clusters`].
    pub eigen: Vec<usize>,
    pub n_semidisk: usize,
    pub n_mushroom: usize,
}

fn check_window(quasi: &[f64], c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(MODULE, format!("window half-width must be positive, got {c}")));
    }
    if quasi.iter().any(|x| !x.is_finite()) || quasi.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid(MODULE, "quasi-eigenvalues must be finite and ascending"));
    }
    Ok(())
}

/// Closed windows of half-width `c` merged into components; touching
/// windows merge.
pub fn build_clusters(quasi: &[f64], c: f64) -> Result<Vec<Cluster>> {
    check_window(quasi, c)?;
    let mut out: Vec<Cluster> = Vec::new();
    for (i, &q) in quasi.iter().enumerate() {
        match out.last_mut() {
            Some(cl) if q - c <= cl.hi => {
                cl.hi = q + c;
                cl.quasi.push(i);
                cl.n_semidisk += 1;
            }
            _ => out.push(Cluster {
                lo: q - c,
                hi: q + c,
                quasi: vec![i],
                eigen: vec![],
                n_semidisk: 1,
                n_mushroom: 0,
            }),
        }
    }
    Ok(out)
}

/// Records which eigenvalues fall in each cluster. `eigenvalues` must be ascending.
pub fn fill_clusters(clusters: &mut [Cluster], eigenvalues: &[f64]) {
    for cl in clusters {
        let a = eigenvalues.partition_point(|&e| e < cl.lo);
        let b = eigenvalues.partition_point(|&e| e <= cl.hi);
        cl.eigen = (a..b).collect();
        cl.n_mushroom = b - a;
    }
}

/// `#{j : E_j ∈ ⋃_{i≤n} [E′_i − c, E′_i + c]} / n`.
pub fn good_time_ratio(eigenvalues: &[f64], quasi: &[f64], c: f64, n: usize) -> Result<f64> {
    check_window(quasi, c)?;
    if n == 0 || n > quasi.len() {
        return Err(Error::invalid(MODULE, format!("n = {n} outside 1..={}", quasi.len())));
    }
    let top = quasi[..n].iter().fold(f64::MIN, |m, &q| m.max(q + c));
    match eigenvalues.last() {
        Some(&e) if e > top => {}
        _ => {
            return Err(Error::range(
                MODULE,
                format!("spectrum must extend past the last window edge {top}"),
            ))
        }
    }
    let clusters = build_clusters(&quasi[..n], c)?;
    let mut count = 0;
    for cl in &clusters {
        count += eigenvalues.partition_point(|&e| e <= cl.hi) - eigenvalues.partition_point(|&e| e < cl.lo);
    }
    Ok(count as f64 / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterTag {
    /// `N_semidisk ≤ N_mushroom ≤ (1+ε)N_semidisk`.
    S,
    /// `N_mushroom < N_semidisk`.
    F,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAccounting {
    pub eps: f64,
    pub tags: Vec<ClusterTag>,
    /// Fraction of quasi-eigenvalues in the first `k+1` clusters that sit in
    /// S-, F- and other clusters.
    pub running_s: Vec<f64>,
    pub running_f: Vec<f64>,
    pub running_other: Vec<f64>,
}

pub fn tag_cluster(cl: &Cluster, eps: f64) -> ClusterTag {
    let (s, m) = (cl.n_semidisk as f64, cl.n_mushroom as f64);
    if cl.n_mushroom < cl.n_semidisk {
        ClusterTag::F
    } else if m <= (1.0 + eps) * s {
        ClusterTag::S
    } else {
        ClusterTag::Other
    }
}

pub fn cluster_accounting(clusters: &[Cluster], eps: f64) -> ClusterAccounting {
    let mut acc = ClusterAccounting {
        eps,
        tags: Vec::with_capacity(clusters.len()),
        running_s: vec![],
        running_f: vec![],
        running_other: vec![],
    };
    let (mut tot, mut s, mut f) = (0usize, 0usize, 0usize);
    for cl in clusters {
        let tag = tag_cluster(cl, eps);
        tot += cl.n_semidisk;
        match tag {
            ClusterTag::S => s += cl.n_semidisk,
            ClusterTag::F => f += cl.n_semidisk,
            ClusterTag::Other => {}
        }
        acc.tags.push(tag);
        let t = tot as f64;
        acc.running_s.push(s as f64 / t);
        acc.running_f.push(f as f64 / t);
        acc.running_other.push((tot - s - f) as f64 / t);
    }
    acc
}

/// A complete orthonormal eigendecomposition of a symmetric operator on `ℝ^D`
/// together with a family of quasimodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxInput {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors.
    pub eigenvectors: DMatrix<f64>,
    pub quasi_values: Vec<f64>,
    /// Columns are quasimodes.
    pub quasimodes: DMatrix<f64>,
}

impl ApproxInput {
    pub fn dimension(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Parses the line format written by [`ApproxInput::to_text`]:
    ///
    /// ```text
    /// dimension D
    /// eigenpair E u_1 … u_D     (D lines)
    /// quasimode E′ v_1 … v_D    (any number)
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut eig: Vec<(f64, Vec<f64>)> = vec![];
        let mut quasi: Vec<(f64, Vec<f64>)> = vec![];
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}: {raw:?}", ln + 1));
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or("");
            let nums: Vec<f64> = it
                .map(|s| s.parse::<f64>().map_err(|_| bad("not a number")))
                .collect::<Result<_>>()?;
            match key {
                "dimension" => {
                    if nums.len() != 1 || nums[0] < 1.0 || nums[0].fract() != 0.0 {
                        return Err(bad("expected one positive integer"));
                    }
                    dim = Some(nums[0] as usize);
                }
                "eigenpair" | "quasimode" => {
                    let d = dim.ok_or_else(|| bad("dimension must come first"))?;
                    if nums.len() != d + 1 {
                        return Err(bad("expected a value and D components"));
                    }
                    let entry = (nums[0], nums[1..].to_vec());
                    if key == "eigenpair" { eig.push(entry) } else { quasi.push(entry) }
                }
                _ => return Err(bad("unknown record")),
            }
        }
        let d = dim.ok_or_else(|| Error::Parse("missing dimension record".into()))?;
        let cols = |v: &[(f64, Vec<f64>)]| {
            DMatrix::from_fn(d, v.len(), |i, j| v[j].1[i])
        };
        Ok(Self {
            eigenvalues: eig.iter().map(|e| e.0).collect(),
            eigenvectors: cols(&eig),
            quasi_values: quasi.iter().map(|e| e.0).collect(),
            quasimodes: cols(&quasi),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("dimension {}\n", self.dimension());
        for (key, vals, m) in [
            ("eigenpair", &self.eigenvalues, &self.eigenvectors),
            ("quasimode", &self.quasi_values, &self.quasimodes),
        ] {
            for (j, v) in vals.iter().enumerate() {
                let _ = write!(s, "{key} {v:e}");
                for x in m.column(j).iter() {
                    let _ = write!(s, " {x:e}");
                }
                s.push('\n');
            }
        }
        s
    }
}

/// One eigenvector that passed the `‖π_W u‖² > 1 − √ε` selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedVector {
    /// Index into the input eigenpairs.
    pub index: usize,
    /// `‖π_W u‖²`.
    pub w_weight: f64,
    /// `‖u − (BAv)‖`, an upper bound for `‖u − π_V u‖`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub m: usize,
    pub n: usize,
    pub c: f64,
    pub eps: f64,
    pub delta: f64,
    /// Measured `max ‖(T − E′_i)v_i‖`.
    pub eps1: f64,
    /// Measured `max_{i≠j} |⟨v_i, v_j⟩|`.
    pub eps2: f64,
    /// Eigen indices spanning `U`.
    pub window_indices: Vec<usize>,
    pub min_pu_norm_sq: f64,
    pub max_pu_overlap: f64,
    /// `‖M − I‖_HS`.
    pub gram_deviation: f64,
    /// `‖A − I‖_HS`.
    pub a_deviation: f64,
    /// `‖A_series − A‖_HS` when the binomial series was run.
    pub series_agreement: Option<f64>,
    /// Largest entry of `|⟨w_i, w_j⟩ − δ_ij|`.
    pub w_gram_defect: f64,
    /// `B`, one row per certified vector.
    pub b: Vec<Vec<f64>>,
    pub certified: Vec<CertifiedVector>,
    /// `ε^{1/4} + 2δ^{3/2}`.
    pub bound: f64,
    /// `ε^{1/4} + (1+2δ)√δ`, which the construction guarantees.
    pub construction_bound: f64,
    pub min_certified: f64,
}

fn refuse(detail: String) -> Error {
    Error::refused(MODULE, detail)
}

fn hs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(I + E)^{−1/2}` by the binomial series, for `‖E‖ < 1`.
pub fn inverse_sqrt_series(e: &DMatrix<f64>) -> DMatrix<f64> {
    let n = e.nrows();
    let mut a = DMatrix::identity(n, n);
    let mut pow = DMatrix::identity(n, n);
    let mut coef = 1.0;
    for k in 1..5000 {
        coef *= -(2 * k - 1) as f64 / (2 * k) as f64;
        pow = &pow * e;
        let term = &pow * coef;
        a += &term;
        if hs(&term) < 1e-17 {
            break;
        }
    }
    a
}

/// `M^{−1/2}` for symmetric positive definite `M`.
pub fn inverse_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Builds orthonormal combinations of projected quasimodes and certifies
/// which eigenvectors lie close to the span of the quasimodes.
pub fn approx_eigenvectors(input: &ApproxInput, c: f64, eps: f64, delta: f64) -> Result<ApproxReport> {
    let dim = input.dimension();
    let (uu, vv) = (&input.eigenvectors, &input.quasimodes);
    let n = vv.ncols();
    if uu.ncols() != dim || input.eigenvalues.len() != dim {
        return Err(Error::invalid(MODULE, format!("need {dim} eigenpairs for a complete basis, got {}", uu.ncols())));
    }
    if n == 0 || vv.nrows() != dim || input.quasi_values.len() != n {
        return Err(Error::invalid(MODULE, "quasimodes must be nonempty and live in the ambient space"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(MODULE, format!("c must be positive, got {c}")));
    }
    let gram_u = uu.transpose() * uu;
    if (gram_u - DMatrix::identity(dim, dim)).amax() > 1e-8 {
        return Err(Error::invalid(MODULE, "eigenvectors are not orthonormal"));
    }
    for j in 0..n {
        if (vv.column(j).norm() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(MODULE, format!("quasimode {j} is not normalised")));
        }
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(refuse(format!("ε = {eps} is not in (0, 1/2)")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(refuse(format!("δ = {delta} is not in (0, 1/2)")));
    }
    // coefficients of the quasimodes in the eigenbasis
    let coef = uu.transpose() * vv;
    let mut eps1: f64 = 0.0;
    for i in 0..n {
        let r: f64 = (0..dim)
            .map(|j| ((input.eigenvalues[j] - input.quasi_values[i]) * coef[(j, i)]).powi(2))
            .sum();
        eps1 = eps1.max(r.sqrt());
    }
    let vg = vv.transpose() * vv;
    let mut eps2: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                eps2 = eps2.max(vg[(i, j)].abs());
            }
        }
    }
    let window: Vec<usize> = (0..dim)
        .filter(|&j| {
            let e = input.eigenvalues[j];
            input.quasi_values.iter().any(|&q| e >= q - c && e <= q + c)
        })
        .collect();
    let m = window.len();
    if !((m as f64) < n as f64 * (1.0 + eps)) {
        return Err(refuse(format!("m = {m} is not < n(1+ε) = {}", n as f64 * (1.0 + eps))));
    }
    let lhs = eps1 * eps1 / (c * c) + eps2;
    if !(lhs < delta / n as f64) {
        return Err(refuse(format!("ε₁²/c² + ε₂ = {lhs:e} is not < δ/n = {:e}", delta / n as f64)));
    }
    // π_U v_i in the ambient space
    let u_win = DMatrix::from_fn(dim, m, |r, k| uu[(r, window[k])]);
    let coef_win = DMatrix::from_fn(m, n, |k, i| coef[(window[k], i)]);
    let pu = &u_win * &coef_win;
    let mm = pu.transpose() * &pu;
    let min_pu_norm_sq = (0..n).map(|i| mm[(i, i)]).fold(f64::INFINITY, f64::min);
    let mut max_pu_overlap: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_pu_overlap = max_pu_overlap.max(mm[(i, j)].abs());
            }
        }
    }
    let e = &mm - DMatrix::identity(n, n);
    let gram_deviation = hs(&e);
    if !(gram_deviation < delta) {
        return Err(refuse(format!("‖M − I‖_HS = {gram_deviation:e} is not < δ = {delta}")));
    }
    if m < n {
        return Err(Error::numerical(MODULE, format!("m = {m} < n = {n} with a nonsingular Gram matrix")));
    }
    let a = inverse_sqrt(&mm);
    let a_deviation = hs(&(&a - DMatrix::identity(n, n)));
    let series_agreement = (gram_deviation < 0.5).then(|| hs(&(inverse_sqrt_series(&e) - &a)));
    let w = &pu * a.transpose();
    let w_gram_defect = (w.transpose() * &w - DMatrix::identity(n, n)).amax();
    let av = vv * a.transpose();
    let threshold = 1.0 - eps.sqrt();
    let mut certified = Vec::new();
    let mut b_rows = Vec::new();
    for &j in &window {
        let u = uu.column(j);
        let bj: DVector<f64> = w.transpose() * u;
        let weight = bj.norm_squared();
        if weight > threshold {
            let approx = &av * &bj;
            certified.push(CertifiedVector { index: j, w_weight: weight, distance: (u - approx).norm() });
            b_rows.push(bj.iter().copied().collect());
        }
    }
    let min_certified = n as f64 * (1.0 - eps.sqrt());
    if (certified.len() as f64) < min_certified {
        return Err(Error::numerical(
            MODULE,
            format!("only {} certified vectors, fewer than n(1−√ε) = {min_certified}", certified.len()),
        ));
    }
    Ok(ApproxReport {
        m,
        n,
        c,
        eps,
        delta,
        eps1,
        eps2,
        window_indices: window,
        min_pu_norm_sq,
        max_pu_overlap,
        gram_deviation,
        a_deviation,
        series_agreement,
        w_gram_defect,
        b: b_rows,
        certified,
        bound: eps.powf(0.25) + 2.0 * delta.powf(1.5),
        construction_bound: eps.powf(0.25) + (1.0 + 2.0 * delta) * delta.sqrt(),
        min_certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_examples() {
        let iv = |v: Vec<Cluster>| v.iter().map(|c| (c.lo, c.hi)).collect::<Vec<_>>();
        assert_eq!(iv(build_clusters(&[1.0, 10.0], 1.0).unwrap()), vec![(0.0, 2.0), (9.0, 11.0)]);
        assert_eq!(iv(build_clusters(&[1.0, 2.5], 1.0).unwrap()), vec![(0.0, 3.5)]);
        assert_eq!(iv(build_clusters(&[1.0, 3.0], 1.0).unwrap()), vec![(0.0, 4.0)]);
        assert!(build_clusters(&[2.0, 1.0], 1.0).is_err());
        assert!(build_clusters(&[1.0], 0.0).is_err());
    }

    #[test]
    fn series_matches_spectral_inverse_square_root() {
        let e = DMatrix::from_row_slice(3, 3, &[0.1, 0.05, 0.0, 0.05, -0.2, 0.1, 0.0, 0.1, 0.05]);
        let m = DMatrix::identity(3, 3) + &e;
        assert!(hs(&(inverse_sqrt_series(&e) - inverse_sqrt(&m))) < 1e-13);
    }
}
