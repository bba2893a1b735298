//! Bessel functions of integer order, their zeros, Airy zeros and the
//! uniform (Airy-type) asymptotics of Bessel zeros.
//!
//! `J_n` is evaluated by the ascending series when `x² ≤ 8(n+1)`, by the
//! Hankel expansion when `x ≥ 25 + n²/2`, and by Miller's normalised
//! backward recurrence in between.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported Bessel order.
pub const MAX_ORDER: u32 = 1000;
/// Largest supported Bessel argument.
pub const MAX_ARG: f64 = 5000.0;
/// Largest supported zero index.
pub const MAX_ZERO_INDEX: u32 = 1000;

fn check_envelope(n: u32, x: f64) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::range("specfun", format!("order {n} exceeds {MAX_ORDER}")));
    }
    if !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::range("specfun", format!("argument {x} outside [0, {MAX_ARG}]")));
    }
    Ok(())
}

enum Method {
    Series,
    Miller,
    Hankel,
}

fn method(n: u32, x: f64) -> Method {
    let nf = n as f64;
    if x * x <= 8.0 * (nf + 1.0) {
        Method::Series
    } else if x >= 25.0 + 0.5 * nf * nf {
        Method::Hankel
    } else {
        Method::Miller
    }
}

/// `ln n!`.
fn ln_factorial(n: u32) -> f64 {
    if n < 30 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        let z = n as f64 + 1.0;
        let z2 = z * z;
        (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * z)
            - 1.0 / (360.0 * z * z2)
            + 1.0 / (1260.0 * z * z2 * z2)
            - 1.0 / (1680.0 * z * z2 * z2 * z2)
    }
}

/// Ascending series; `n` may be any nonnegative order.
fn series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let lead = n as f64 * (0.5 * x).ln() - ln_factorial(n);
    if lead < -745.0 {
        return 0.0;
    }
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (n as f64 + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    lead.exp() * sum
}

/// Miller's backward recurrence normalised by `J_0 + 2 Σ J_{2k} = 1`.
/// Returns `(J_{n-1}, J_n, J_{n+1})`, with `J_{-1} = -J_1`.
fn miller(n: u32, x: f64) -> (f64, f64, f64) {
    let top = (n as f64).max(x);
    let mut m = (top + 30.0 + (160.0 * top).sqrt()) as u32;
    m += m % 2;
    let mut jp = 0.0; // J_{k+1}
    let mut j = 1e-300; // J_k
    let mut sum = 0.0;
    let mut cap = [0.0f64; 3]; // J_{n-1}, J_n, J_{n+1}
    let want = |k: u32| -> Option<usize> {
        if k + 1 == n {
            Some(0)
        } else if k == n {
            Some(1)
        } else if k == n + 1 {
            Some(2)
        } else {
            None
        }
    };
    if let Some(i) = want(m) {
        cap[i] = j;
    }
    for k in (1..=m).rev() {
        let jm = (2.0 * k as f64 / x) * j - jp;
        jp = j;
        j = jm;
        let idx = k - 1;
        if let Some(i) = want(idx) {
            cap[i] = j;
        }
        if idx > 0 && idx % 2 == 0 {
            sum += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            sum *= 1e-250;
            for c in cap.iter_mut() {
                *c *= 1e-250;
            }
        }
    }
    sum += j;
    if n == 0 {
        // J_{-1} = -J_1
        cap[0] = -cap[2];
    }
    (cap[0] / sum, cap[1] / sum, cap[2] / sum)
}

/// Hankel large-argument expansion.
fn hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kk = k as f64;
        term *= (mu - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * x);
        if term.abs() > prev && kk * kk > mu {
            break;
        }
        prev = term.abs();
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn raw_j(n: u32, x: f64) -> f64 {
    match method(n, x) {
        Method::Series => series(n, x),
        Method::Hankel => hankel(n, x),
        Method::Miller => miller(n, x).1,
    }
}

/// `J_n(x)` for `0 ≤ n ≤ MAX_ORDER`, `0 ≤ x ≤ MAX_ARG`.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    check_envelope(n, x)?;
    Ok(raw_j(n, x))
}

/// `(J_n(x), J_n'(x))` with `J_n' = (J_{n-1} − J_{n+1})/2`.
pub fn bessel_j_and_derivative(n: u32, x: f64) -> Result<(f64, f64)> {
    check_envelope(n, x)?;
    Ok(raw_pair(n, x))
}

fn raw_pair(n: u32, x: f64) -> (f64, f64) {
    let (jm, j, jp) = match method(n, x) {
        Method::Miller => miller(n, x),
        m => {
            let f = |k: u32| match m {
                Method::Series => series(k, x),
                _ => hankel(k, x),
            };
            let jm = if n == 0 { -f(1) } else { f(n - 1) };
            (jm, f(n), f(n + 1))
        }
    };
    (j, 0.5 * (jm - jp))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselZero {
    pub n: u32,
    pub k: u32,
    pub alpha: f64,
    /// `|J_n(alpha)|` at the returned root.
    pub residual: f64,
}

/// Safeguarded Newton on `J_n` inside a sign-change bracket.
fn refine_zero(n: u32, mut a: f64, mut b: f64, start: f64) -> Result<(f64, f64)> {
    let mut fa = raw_j(n, a);
    let fb = raw_j(n, b);
    if fa == 0.0 {
        return Ok((a, 0.0));
    }
    if fb == 0.0 {
        return Ok((b, 0.0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical(
            "specfun",
            format!("no sign change of J_{n} on [{a}, {b}]"),
        ));
    }
    let mut x = if start > a && start < b { start } else { 0.5 * (a + b) };
    for _ in 0..200 {
        let (f, df) = raw_pair(n, x);
        if f == 0.0 {
            return Ok((x, 0.0));
        }
        if f.signum() == fa.signum() {
            a = x;
            fa = f;
        } else {
            b = x;
        }
        let newton = x - f / df;
        let next = if newton > a && newton < b && df != 0.0 { newton } else { 0.5 * (a + b) };
        let step = (next - x).abs();
        x = next;
        if step <= 2e-16 * x || b - a <= 4e-16 * x {
            break;
        }
    }
    let r = raw_j(n, x).abs();
    let (_, d) = raw_pair(n, x);
    if r > 1e-10 * (x * d.abs()).max(1.0) {
        return Err(Error::numerical(
            "specfun",
            format!("zero of J_{n} near {x} has residual {r:e}"),
        ));
    }
    Ok((x, r))
}

/// Initial estimate of `α_{n,k}`.
fn zero_guess(n: u32, k: u32) -> Result<f64> {
    if n == 0 {
        let b = (k as f64 - 0.25) * PI;
        Ok(b + 1.0 / (8.0 * b) - 124.0 / (1536.0 * b * b * b))
    } else {
        zero_uniform_asymptotic(n, k)
    }
}

/// The `k`-th positive zero of `J_n`.
pub fn bessel_zero(n: u32, k: u32) -> Result<BesselZero> {
    if k == 0 || k > MAX_ZERO_INDEX || n > MAX_ORDER {
        return Err(Error::range(
            "specfun",
            format!("zero index (n={n}, k={k}) outside 0 <= n <= {MAX_ORDER}, 1 <= k <= {MAX_ZERO_INDEX}"),
        ));
    }
    let g = zero_guess(n, k)?;
    // zeros are at least 3.11 apart, so this bracket holds at most one
    let (a, b) = ((g - 1.5).max(1e-3), g + 1.5);
    if b > MAX_ARG {
        return Err(Error::range("specfun", format!("zero ({n},{k}) beyond argument envelope")));
    }
    let (alpha, residual) = refine_zero(n, a, b, g)?;
    Ok(BesselZero { n, k, alpha, residual })
}

/// All positive zeros of `J_n` up to and including the first one above
/// `xmax`, starting after `after` (which must be a zero or below the first).
fn scan_zeros(n: u32, after: f64, xmax: f64) -> Result<Vec<(f64, f64)>> {
    const STEP: f64 = 1.5;
    let mut out = Vec::new();
    let mut x0 = after;
    let mut f0 = raw_j(n, x0);
    loop {
        let x1 = x0 + STEP;
        if x1 > MAX_ARG {
            return Err(Error::range("specfun", format!("zero scan of J_{n} passed {MAX_ARG}")));
        }
        let f1 = raw_j(n, x1);
        if f0 == 0.0 || f0.signum() != f1.signum() {
            let z = refine_zero(n, x0, x1, 0.5 * (x0 + x1))?;
            out.push(z);
            if z.0 > xmax {
                return Ok(out);
            }
            // the next zero is more than 3 away
            x0 = z.0 + 0.5;
            f0 = raw_j(n, x0);
        } else {
            x0 = x1;
            f0 = f1;
        }
    }
}

fn scan_start(n: u32) -> f64 {
    if n == 0 {
        0.5
    } else {
        n as f64
    }
}

/// Positive zeros of `J_n` not exceeding `xmax`, ascending.
pub fn bessel_zeros_below(n: u32, xmax: f64) -> Result<Vec<f64>> {
    check_envelope(n, 0.0)?;
    if xmax <= scan_start(n) {
        return Ok(Vec::new());
    }
    let mut z: Vec<f64> = scan_zeros(n, scan_start(n), xmax)?.into_iter().map(|p| p.0).collect();
    z.retain(|&a| a <= xmax);
    Ok(z)
}

// ---------------------------------------------------------------- Airy

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = -0.258_819_403_792_806_8;

/// One Taylor step of `y'' = x y` from `x0` by `h`.
fn airy_taylor_step(x0: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    // (k+2)(k+1) c_{k+2} = x0 c_k + c_{k-1}
    let (mut cm1, mut c0, mut c1) = (0.0, y, dy);
    let (mut val, mut der) = (y + dy * h, dy);
    let mut hk = 1.0; // h^k
    let mut small = 0;
    let scale = y.abs() + dy.abs();
    for k in 0..400usize {
        let c2 = (x0 * c0 + cm1) / (((k + 2) * (k + 1)) as f64);
        hk *= h;
        // c2 multiplies h^{k+2}; its derivative term is (k+2) c2 h^{k+1}
        let tv = c2 * hk * h;
        val += tv;
        der += (k + 2) as f64 * c2 * hk;
        (cm1, c0, c1) = (c0, c1, c2);
        if tv.abs() < 1e-18 * scale.max(val.abs()) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    (val, der)
}

/// Large-negative-argument expansion: `(Ai(-z), Ai'(-z))` for `z ≥ 10`.
fn airy_asymptotic_neg(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let (mut su_e, mut su_o, mut sv_e, mut sv_o) = (1.0, 0.0, 1.0, 0.0);
    let mut u = 1.0;
    let mut zp = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zp /= zeta;
        let tu = u * zp;
        if tu.abs() > prev {
            break;
        }
        prev = tu.abs();
        let tv = v * zp;
        // (-1)^j for the j-th even or odd term
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            su_e += sign * tu;
            sv_e += sign * tv;
        } else {
            su_o += sign * tu;
            sv_o += sign * tv;
        }
        if tu.abs() < 1e-17 {
            break;
        }
    }
    let ph = zeta - 0.25 * PI;
    let (s, c) = ph.sin_cos();
    let pre = 1.0 / PI.sqrt();
    let q = z.powf(0.25);
    let ai = pre / q * (c * su_e + s * su_o);
    let aip = pre * q * (s * sv_e - c * sv_o);
    (ai, aip)
}

/// `(Ai(x), Ai'(x))` for `x ≤ 2`.
pub fn airy_ai(x: f64) -> Result<(f64, f64)> {
    if !(x <= 2.0) || !x.is_finite() {
        return Err(Error::range("specfun", format!("Airy argument {x} outside (-inf, 2]")));
    }
    if x < -10.0 {
        return Ok(airy_asymptotic_neg(-x));
    }
    let steps = x.abs().ceil().max(1.0);
    let h = x / steps;
    let (mut y, mut dy) = (AI0, AIP0);
    let mut x0 = 0.0;
    for _ in 0..steps as usize {
        (y, dy) = airy_taylor_step(x0, y, dy, h);
        x0 += h;
    }
    Ok((y, dy))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiryZero {
    pub k: u32,
    pub a: f64,
}

/// The `k`-th negative zero of `Ai`, by Newton from `−(3π(4k−1)/8)^{2/3}`.
pub fn airy_zero(k: u32) -> Result<AiryZero> {
    if k == 0 || k > MAX_ZERO_INDEX {
        return Err(Error::range("specfun", format!("Airy zero index {k} outside 1..={MAX_ZERO_INDEX}")));
    }
    let t = 3.0 * PI * (4.0 * k as f64 - 1.0) / 8.0;
    let mut a = -t.powf(2.0 / 3.0) * (1.0 + 5.0 / 48.0 / (t * t));
    for _ in 0..50 {
        let (f, df) = airy_ai(a)?;
        let step = f / df;
        a -= step;
        if step.abs() <= 1e-15 * a.abs() {
            break;
        }
    }
    let (f, _) = airy_ai(a)?;
    if f.abs() > 1e-10 {
        return Err(Error::numerical("specfun", format!("Airy zero {k} residual {f:e}")));
    }
    Ok(AiryZero { k, a })
}

/// Root `z ≥ 1` of `(2/3)(−ζ)^{3/2} = √(z²−1) − arcsec z`.
pub fn z_of_zeta(zeta: f64) -> Result<f64> {
    if !(zeta <= 0.0) {
        return Err(Error::invalid("specfun", format!("zeta must be <= 0, got {zeta}")));
    }
    let w = 2.0 / 3.0 * (-zeta).powf(1.5);
    if w == 0.0 {
        return Ok(1.0);
    }
    let f = |z: f64| (z * z - 1.0).sqrt() - (1.0 / z).acos() - w;
    let (mut a, mut b) = (1.0, w + 1.0 + 0.5 * PI);
    // near z = 1 the right side grows like (z−1)^{3/2}
    let mut z = (1.0 + (1.5 * w / 2f64.sqrt()).powf(2.0 / 3.0)).min(0.5 * (a + b));
    for _ in 0..200 {
        let fz = f(z);
        if fz == 0.0 {
            return Ok(z);
        }
        if fz < 0.0 {
            a = z;
        } else {
            b = z;
        }
        let d = (z * z - 1.0).sqrt() / z;
        let newton = z - fz / d;
        let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        let step = (next - z).abs();
        z = next;
        if step <= 1e-15 * z || b - a <= 2e-16 * z {
            break;
        }
    }
    Ok(z)
}

/// Leading-order uniform asymptotic `n·z(n^{−2/3} a_k)` for `α_{n,k}`.
pub fn zero_uniform_asymptotic(n: u32, k: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("specfun", "uniform asymptotic needs n >= 1"));
    }
    let a = airy_zero(k)?.a;
    let nf = n as f64;
    Ok(nf * z_of_zeta(a / nf.powf(2.0 / 3.0))?)
}

/// Both sides of the Debye-type envelope bounds for `J_n(nx)` and `J_n'(nx)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub j_value: f64,
    pub j_bound: f64,
    pub dj_value: f64,
    pub dj_bound: f64,
}

impl EnvelopeCheck {
    pub fn holds(&self) -> (bool, bool) {
        (self.j_value.abs() <= self.j_bound, self.dj_value.abs() <= self.dj_bound)
    }
}

/// `|J_n(nx)| ≤ xⁿ e^{n√(1−x²)}/(1+√(1−x²))ⁿ` and
/// `|J_n'(nx)| ≤ (1+x²)^{1/4}/(x√(2πn)) · xⁿ e^{n√(1−x²)}/(1+√(1−x²))ⁿ`.
pub fn envelope_bounds_check(n: u32, x: f64) -> Result<EnvelopeCheck> {
    if !(x > 0.0 && x <= 1.0) || n == 0 {
        return Err(Error::invalid("specfun", "envelope check needs n >= 1 and 0 < x <= 1"));
    }
    let nf = n as f64;
    let (j, dj) = bessel_j_and_derivative(n, nf * x)?;
    let s = (1.0 - x * x).sqrt();
    let log_core = nf * (x.ln() + s - (1.0 + s).ln());
    let j_bound = log_core.exp();
    let dj_bound = (log_core + 0.25 * (1.0 + x * x).ln() - x.ln() - 0.5 * (2.0 * PI * nf).ln()).exp();
    Ok(EnvelopeCheck { j_value: j, j_bound, dj_value: dj, dj_bound })
}

// ---------------------------------------------------------------- cache

/// Disk-backed table of Bessel zeros keyed by `(n, k)`.
///
/// The file holds one `n,k,alpha,residual` record per line, sorted. Saving
/// merges with whatever is on disk and replaces the file by atomic rename,
/// so concurrent writers can only lose work, never corrupt the table.
#[derive(Debug, Default)]
pub struct ZeroCache {
    path: Option<PathBuf>,
    zeros: BTreeMap<(u32, u32), (f64, f64)>,
    dirty: bool,
}

fn parse_cache(text: &str, path: &Path) -> Result<BTreeMap<(u32, u32), (f64, f64)>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("{}:{}: malformed zero record", path.display(), i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let n: u32 = f[0].trim().parse().map_err(|_| bad())?;
        let k: u32 = f[1].trim().parse().map_err(|_| bad())?;
        let alpha: f64 = f[2].trim().parse().map_err(|_| bad())?;
        let res: f64 = f[3].trim().parse().map_err(|_| bad())?;
        if k == 0 || !(alpha > n as f64) {
            return Err(bad());
        }
        map.insert((n, k), (alpha, res));
    }
    Ok(map)
}

impl ZeroCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or prepares to create) the cache file at `path`.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let zeros = match fs::read_to_string(&path) {
            Ok(text) => parse_cache(&text, &path)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self { path: Some(path), zeros, dirty: false })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn zero(&mut self, n: u32, k: u32) -> Result<BesselZero> {
        if let Some(&(alpha, residual)) = self.zeros.get(&(n, k)) {
            return Ok(BesselZero { n, k, alpha, residual });
        }
        let z = bessel_zero(n, k)?;
        self.zeros.insert((n, k), (z.alpha, z.residual));
        self.dirty = true;
        Ok(z)
    }

    /// Length of the run `k = 1, 2, …` stored for order `n`.
    fn prefix(&self, n: u32) -> Vec<f64> {
        let mut out = Vec::new();
        for (&(_, k), &(a, _)) in self.zeros.range((n, 1)..=(n, u32::MAX)) {
            if k as usize != out.len() + 1 {
                break;
            }
            out.push(a);
        }
        out
    }

    fn extend_order(n: u32, known: &[f64], xmax: f64) -> Result<Vec<(f64, f64)>> {
        match known.last() {
            Some(&a) if a > xmax => Ok(Vec::new()),
            Some(&a) => scan_zeros(n, a + 0.5, xmax),
            None if xmax <= scan_start(n) => Ok(Vec::new()),
            None => scan_zeros(n, scan_start(n), xmax),
        }
    }

    /// Zeros `α_{n,k} ≤ xmax` for every order in `orders`, computing missing
    /// ones in parallel.
    pub fn zeros_below_many(&mut self, orders: &[u32], xmax: f64) -> Result<Vec<Vec<f64>>> {
        for &n in orders {
            check_envelope(n, 0.0)?;
        }
        let prefixes: Vec<Vec<f64>> = orders.iter().map(|&n| self.prefix(n)).collect();
        let fresh: Vec<Vec<(f64, f64)>> = orders
            .par_iter()
            .zip(prefixes.par_iter())
            .map(|(&n, known)| Self::extend_order(n, known, xmax))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(orders.len());
        for ((&n, mut known), new) in orders.iter().zip(prefixes).zip(fresh) {
            for (a, r) in new {
                known.push(a);
                self.zeros.insert((n, known.len() as u32), (a, r));
                self.dirty = true;
            }
            known.retain(|&a| a <= xmax);
            out.push(known);
        }
        Ok(out)
    }

    pub fn zeros_below(&mut self, n: u32, xmax: f64) -> Result<Vec<f64>> {
        Ok(self.zeros_below_many(&[n], xmax)?.pop().unwrap_or_default())
    }

    /// Writes the table if it has a path and unsaved entries.
    pub fn save(&mut self) -> Result<()> {
        let Some(path) = self.path.clone() else {
            return Ok(());
        };
        if !self.dirty {
            return Ok(());
        }
        let mut merged = match fs::read_to_string(&path) {
            Ok(text) => parse_cache(&text, &path).unwrap_or_default(),
            Err(_) => BTreeMap::new(),
        };
        merged.extend(self.zeros.iter().map(|(k, v)| (*k, *v)));
        let mut body = String::with_capacity(merged.len() * 40);
        for ((n, k), (a, r)) in &merged {
            body.push_str(&format!("{n},{k},{a},{r:e}\n"));
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(body.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        self.zeros = merged;
        self.dirty = false;
        Ok(())
    }
}
