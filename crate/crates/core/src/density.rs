//! Finite-horizon assembly of a density-`d` index set along which a
//! function tends to zero, from partial-density sets `S_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `#{k ≤ n : k ∈ A}` over `n`, kept as an exact count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Density {
    pub count: usize,
    pub n: usize,
}

impl Density {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.n as f64
    }
}

/// `d_n(A)` for a sorted index set `A ⊆ ℕ` (1-based).
pub fn d_n(a: &[usize], n: usize) -> Result<Density> {
    if n == 0 {
        return Err(Error::invalid("density", "d_n needs n >= 1"));
    }
    Ok(Density { count: a.partition_point(|&k| k <= n), n })
}

/// Running counts `#{k ≤ n : member(k)}` for `n = 0..=n_max`.
fn prefix_counts(n_max: usize, member: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut c = vec![0; n_max + 1];
    for k in 1..=n_max {
        c[k] = c[k - 1] + member(k) as usize;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityInstance {
    /// `g(1), …, g(N_max)`.
    pub g: Vec<f64>,
    /// Sorted 1-based members of each `S_j` up to the horizon.
    pub sets: Vec<Vec<usize>>,
    pub eps: Vec<f64>,
    pub eps_prime: Vec<f64>,
    pub d: f64,
    /// First `n` at which the asymptotic hypotheses are checked; defaults
    /// to the second half of the horizon.
    #[serde(default)]
    pub check_from: Option<usize>,
}

impl DensityInstance {
    pub fn n_max(&self) -> usize {
        self.g.len()
    }

    pub fn check_from(&self) -> usize {
        self.check_from.unwrap_or(self.n_max().div_ceil(2).max(1))
    }

    fn validate(&self) -> Result<()> {
        let n_max = self.n_max();
        let j = self.sets.len();
        if n_max == 0 || j == 0 {
            return Err(Error::invalid("density", "need a non-empty horizon and at least one set"));
        }
        if self.eps.len() != j || self.eps_prime.len() != j {
            return Err(Error::invalid(
                "density",
                format!("{j} sets but {} ε and {} ε′ values", self.eps.len(), self.eps_prime.len()),
            ));
        }
        for (name, seq) in [("ε", &self.eps), ("ε′", &self.eps_prime)] {
            if seq.iter().any(|&e| !(e > 0.0)) || seq.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::invalid("density", format!("{name} must be positive and strictly decreasing")));
            }
        }
        if !(self.d > 0.0 && self.d <= 1.0) {
            return Err(Error::invalid("density", format!("target density {} must lie in (0, 1]", self.d)));
        }
        if self.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("density", "g must be finite"));
        }
        for (i, s) in self.sets.iter().enumerate() {
            if s.windows(2).any(|w| w[1] <= w[0]) || s.first().is_some_and(|&k| k == 0) || s.last().is_some_and(|&k| k > n_max) {
                return Err(Error::invalid(
                    "density",
                    format!("S_{} must be strictly increasing within [1, {n_max}]", i + 1),
                ));
            }
        }
        let c = self.check_from();
        if c == 0 || c > n_max {
            return Err(Error::invalid("density", format!("check_from {c} must lie in [1, {n_max}]")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// `d_n(S_j) > d − ε_j`.
    Density,
    /// `g(n) < ε′_j` for `n ∈ S_j`.
    Decay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub j: usize,
    pub n: usize,
    pub hypothesis: Hypothesis,
}

/// Every `(j, n)` in `[check_from, N_max]` where a hypothesis fails.
pub fn hypothesis_violations(inst: &DensityInstance) -> Result<Vec<Violation>> {
    inst.validate()?;
    let n_max = inst.n_max();
    let from = inst.check_from();
    let mut out = Vec::new();
    for (i, s) in inst.sets.iter().enumerate() {
        let j = i + 1;
        let mut member = vec![false; n_max + 1];
        s.iter().for_each(|&k| member[k] = true);
        let mut count = s.partition_point(|&k| k < from);
        for n in from..=n_max {
            count += member[n] as usize;
            if !(count as f64 > (inst.d - inst.eps[i]) * n as f64) {
                out.push(Violation { j, n, hypothesis: Hypothesis::Density });
            }
            if member[n] && !(inst.g[n - 1] < inst.eps_prime[i]) {
                out.push(Violation { j, n, hypothesis: Hypothesis::Decay });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub j: usize,
    pub n_j: usize,
    /// `#B_j` within the horizon.
    pub b_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assembly {
    pub n_max: usize,
    /// Sorted members of `S = ℕ ∖ B` up to the horizon.
    pub set: Vec<usize>,
    /// `N_j` for the sets whose threshold lies within the horizon.
    pub thresholds: Vec<Threshold>,
    /// Indices `j` whose threshold lies beyond the horizon.
    pub beyond_horizon: Vec<usize>,
}

impl Assembly {
    /// `S` as inclusive runs `(first, last)`.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &k in &self.set {
            match out.last_mut() {
                Some(r) if r.1 + 1 == k => r.1 = k,
                _ => out.push((k, k)),
            }
        }
        out
    }
}

/// `B_j = {k : g(k) ≥ 2ε′_j}`, thresholds `N_j` with
/// `d_n(B_j) < 1 − d + 2ε_j` on `[N_j, N_max]`, and `S = ℕ ∖ ∪ B_j ∩ [N_j, ∞)`.
pub fn assemble(inst: &DensityInstance) -> Result<Assembly> {
    if let Some(v) = hypothesis_violations(inst)?.first() {
        let what = match v.hypothesis {
            Hypothesis::Density => format!("d_n(S_j) > d − ε_j fails for j = {} at n = {}", v.j, v.n),
            Hypothesis::Decay => format!("g(n) < ε′_j on S_j fails for j = {} at n = {}", v.j, v.n),
        };
        return Err(Error::refused("density", what));
    }
    let n_max = inst.n_max();
    let mut in_b = vec![false; n_max + 1];
    let mut thresholds: Vec<Threshold> = Vec::new();
    let mut beyond_horizon = Vec::new();
    for i in 0..inst.sets.len() {
        let j = i + 1;
        let cut = 2.0 * inst.eps_prime[i];
        let counts = prefix_counts(n_max, |k| inst.g[k - 1] >= cut);
        let bound = 1.0 - inst.d + 2.0 * inst.eps[i];
        // smallest n such that the inequality holds on all of [n, N_max]
        let mut first_ok = n_max + 1;
        while first_ok > 1 && (counts[first_ok - 1] as f64) < bound * (first_ok - 1) as f64 {
            first_ok -= 1;
        }
        let n_j = first_ok.max(thresholds.last().map_or(1, |t| t.n_j + 1));
        if n_j > n_max {
            beyond_horizon.push(j);
            continue;
        }
        if !beyond_horizon.is_empty() {
            // thresholds must increase, so later sets cannot start earlier
            beyond_horizon.push(j);
            continue;
        }
        for k in n_j..=n_max {
            if inst.g[k - 1] >= cut {
                in_b[k] = true;
            }
        }
        thresholds.push(Threshold { j, n_j, b_size: counts[n_max] });
    }
    let set = (1..=n_max).filter(|&k| !in_b[k]).collect();
    Ok(Assembly { n_max, set, thresholds, beyond_horizon })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_compress_consecutive_indices() {
        let a = Assembly { n_max: 9, set: vec![1, 2, 3, 5, 7, 8], thresholds: vec![], beyond_horizon: vec![] };
        assert_eq!(a.runs(), vec![(1, 3), (5, 5), (7, 8)]);
    }
}
