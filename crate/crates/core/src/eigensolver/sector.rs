//! Five-point operators on a grid, optionally restricted to an x-parity sector.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::banded::BandedSym;
use super::grid::{Grid, Link};

/// Behaviour under `x ↦ −x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Sparse symmetric operator on the unknowns of one sector.
///
/// In the even sector the unknowns on `x = 0` are `u`, the others `√2·u`,
/// which keeps the reduced matrix symmetric. In the odd sector the unknowns
/// are `√2·u` for `x > 0`.
pub(crate) struct Sector {
    pub parity: Option<Parity>,
    /// Grid node of each unknown.
    pub dofs: Vec<u32>,
    pub diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

const NONE: u32 = u32::MAX;

impl Sector {
    pub fn build(grid: &Grid, parity: Option<Parity>) -> Self {
        let keep = |i: i32| match parity {
            None => true,
            Some(Parity::Even) => i >= 0,
            Some(Parity::Odd) => i > 0,
        };
        let mut dof_of = vec![NONE; grid.len()];
        let mut dofs = Vec::new();
        for (k, &(i, _)) in grid.nodes.iter().enumerate() {
            if keep(i) {
                dof_of[k] = dofs.len() as u32;
                dofs.push(k as u32);
            }
        }
        let axis = |k: usize| parity == Some(Parity::Even) && grid.nodes[k].0 == 0;
        let s = 1.0 / (grid.h * grid.h);
        let mut diag = Vec::with_capacity(dofs.len());
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &k in &dofs {
            let k = k as usize;
            let on_axis = axis(k);
            let mut dg = 0.0;
            for (d, link) in grid.links[k].iter().enumerate() {
                // the west neighbour of an axis node mirrors the east one
                if on_axis && d == 1 {
                    continue;
                }
                let mult = if on_axis && d == 0 { 2.0 } else { 1.0 };
                match *link {
                    Link::Wall(theta) => dg += mult / theta,
                    Link::Node(m) => {
                        dg += mult;
                        let m = m as usize;
                        if dof_of[m] != NONE {
                            let c = if on_axis != axis(m) { -SQRT_2 } else { -1.0 };
                            cols.push(dof_of[m]);
                            vals.push(c * s);
                        }
                    }
                }
            }
            diag.push(dg * s);
            row_ptr.push(cols.len());
        }
        Self { parity, dofs, diag, row_ptr, cols, vals }
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p] as usize];
            }
            y[i] = s;
        }
    }

    pub fn banded(&self) -> BandedSym {
        let n = self.len();
        let mut b = 1;
        for i in 0..n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                b = b.max(i.abs_diff(self.cols[p] as usize));
            }
        }
        let mut a = BandedSym::zeros(n, b);
        a.diag.copy_from_slice(&self.diag);
        for i in 0..n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p] as usize;
                if j < i {
                    a.set_lower(i, j, self.vals[p]);
                }
            }
        }
        a
    }

    /// Grid function `u` (discrete L² weight `h²`) of a sector vector `z`
    /// normalised in the Euclidean norm.
    pub fn expand(&self, grid: &Grid, z: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; grid.len()];
        let inv_h = 1.0 / grid.h;
        for (&k, &zk) in self.dofs.iter().zip(z) {
            let k = k as usize;
            let (i, j) = grid.nodes[k];
            match self.parity {
                None => u[k] = zk * inv_h,
                Some(_) if i == 0 => u[k] = zk * inv_h,
                Some(p) => {
                    let v = zk * inv_h / SQRT_2;
                    u[k] = v;
                    let mirror = grid.node_at(-i, j).expect("lattice is mirror symmetric");
                    u[mirror] = if p == Parity::Even { v } else { -v };
                }
            }
        }
        u
    }
}
