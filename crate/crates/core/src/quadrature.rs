//! Composite Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (z * p - p0) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite rule: `panels` equal panels of `order`-point Gauss–Legendre.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Composite {
    pub panels: usize,
    pub order: usize,
}

impl Default for Composite {
    fn default() -> Self {
        Self { panels: 8, order: 32 }
    }
}

impl Composite {
    pub fn refined(self) -> Self {
        Self { panels: 2 * self.panels, ..self }
    }

    /// Nodes and weights on `[a, b]`.
    pub fn rule(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (x, w) = gauss_legendre(self.order);
        let h = (b - a) / self.panels as f64;
        let mut out = Vec::with_capacity(self.panels * self.order);
        for p in 0..self.panels {
            let lo = a + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
            }
        }
        out
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.rule(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}
