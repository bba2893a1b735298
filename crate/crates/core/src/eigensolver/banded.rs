//! Symmetric banded matrices and their `LDLᵀ` factorisation.

/// Symmetric matrix with half-bandwidth `b`, stored by rows: row `i` holds
/// columns `i−b .. i−1` in `low[i*b ..]`.
#[derive(Clone, Debug)]
pub(crate) struct BandedSym {
    pub n: usize,
    pub b: usize,
    pub diag: Vec<f64>,
    pub low: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, b: usize) -> Self {
        Self { n, b, diag: vec![0.0; n], low: vec![0.0; n * b] }
    }

    /// Sets `A[i][j]` for `j < i`.
    pub fn set_lower(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j < i && i - j <= self.b);
        self.low[i * self.b + j + self.b - i] = v;
    }
}

/// `A − σI = L D Lᵀ` with unit lower-triangular banded `L`.
pub(crate) struct Ldl {
    n: usize,
    b: usize,
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Ldl {
    /// Factorises without pivoting. Returns `None` if a pivot is tiny
    /// relative to the matrix scale.
    pub fn factor(a: &BandedSym, sigma: f64) -> Option<Self> {
        let (n, b) = (a.n, a.b);
        let scale = a.diag.iter().fold(sigma.abs(), |m, &x| m.max(x.abs()));
        let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n * b];
        let mut w = vec![0.0; b];
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let row_off = i * b + b - i;
            for j in lo..i {
                let mut s = a.low[row_off + j];
                let j_off = j * b + b - j;
                for k in lo..j {
                    s -= w[k - lo] * l[j_off + k];
                }
                w[j - lo] = s;
                l[row_off + j] = s / d[j];
            }
            let mut dii = a.diag[i] - sigma;
            for k in lo..i {
                dii -= w[k - lo] * l[row_off + k];
            }
            if dii.abs() < tiny || !dii.is_finite() {
                return None;
            }
            d[i] = dii;
        }
        Some(Self { n, b, d, l })
    }

    /// Number of eigenvalues of `A` below `σ`.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    /// Overwrites `x` with `(A − σI)⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let off = i * b + b - i;
            let mut s = x[i];
            for k in lo..i {
                s -= self.l[off + k] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let lo = i.saturating_sub(b);
            let off = i * b + b - i;
            let xi = x[i];
            for k in lo..i {
                x[k] -= self.l[off + k] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, b: usize, seed: u64) -> BandedSym {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandedSym::zeros(n, b);
        for i in 0..n {
            a.diag[i] = rng.gen_range(-1.0..1.0);
            for j in i.saturating_sub(b)..i {
                a.set_lower(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        a
    }

    fn dense(a: &BandedSym) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(a.n, a.n);
        for i in 0..a.n {
            m[(i, i)] = a.diag[i];
            for j in i.saturating_sub(a.b)..i {
                let v = a.low[i * a.b + j + a.b - i];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn solves_and_counts_like_dense() {
        for (n, b, seed) in [(30, 4, 1u64), (50, 7, 2), (12, 11, 3)] {
            let a = random_banded(n, b, seed);
            let m = dense(&a);
            let sigma = 0.1;
            let f = Ldl::factor(&a, sigma).unwrap();
            let eig = m.clone().symmetric_eigen();
            let below = eig.eigenvalues.iter().filter(|&&e| e < sigma).count();
            assert_eq!(f.negative_count(), below);
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let mut x = rhs.clone();
            f.solve_in_place(&mut x);
            let shifted = &m - nalgebra::DMatrix::identity(n, n) * sigma;
            let back = &shifted * nalgebra::DVector::from_vec(x);
            for i in 0..n {
                assert!((back[i] - rhs[i]).abs() < 1e-8, "n={n} i={i}");
            }
        }
    }
}
