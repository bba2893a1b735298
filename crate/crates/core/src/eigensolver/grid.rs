//! Domains and their five-point lattices.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    chain, BoundarySegment, MushroomGeometry, Point, RegionTag, SegmentKind, SegmentShape, Vec2,
};

/// Planar domains the solver accepts. All are symmetric under `x ↦ −x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Mushroom(MushroomGeometry),
    /// Upper half of the disk of this radius.
    Semidisk { radius: f64 },
    /// `[−half_width, half_width] × [−depth, 0]`.
    Rectangle { half_width: f64, depth: f64 },
}

impl Domain {
    pub fn boundary_segments(&self) -> Vec<BoundarySegment> {
        let p = Vec2::new;
        match *self {
            Domain::Mushroom(g) => g.boundary_segments(),
            Domain::Semidisk { radius: r } => chain(vec![
                (SegmentKind::Diameter, SegmentShape::line(p(-r, 0.0), p(r, 0.0))),
                (SegmentKind::CapArc, SegmentShape::arc(r, 0.0, PI)),
            ]),
            Domain::Rectangle { half_width: w, depth: d } => chain(vec![
                (SegmentKind::StalkBottom, SegmentShape::line(p(-w, -d), p(w, -d))),
                (SegmentKind::StalkRightWall, SegmentShape::line(p(w, -d), p(w, 0.0))),
                (SegmentKind::Lid, SegmentShape::line(p(w, 0.0), p(-w, 0.0))),
                (SegmentKind::StalkLeftWall, SegmentShape::line(p(-w, 0.0), p(-w, -d))),
            ]),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Mushroom(g) => g.area(),
            Domain::Semidisk { radius } => 0.5 * PI * radius * radius,
            Domain::Rectangle { half_width, depth } => 2.0 * half_width * depth,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            Domain::Mushroom(g) => g.perimeter(),
            Domain::Semidisk { radius } => (2.0 + PI) * radius,
            Domain::Rectangle { half_width, depth } => 4.0 * half_width + 2.0 * depth,
        }
    }

    /// Open-set membership.
    pub fn inside(&self, p: Point) -> bool {
        match *self {
            Domain::Mushroom(g) => g.classify_interior(p) != RegionTag::Outside,
            Domain::Semidisk { radius } => p.y > 0.0 && p.norm() < radius,
            Domain::Rectangle { half_width, depth } => {
                p.x.abs() < half_width && p.y > -depth && p.y < 0.0
            }
        }
    }

    /// `(xmin, xmax, ymin, ymax)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Domain::Mushroom(g) => (-g.r2(), g.r2(), -g.t(), g.r2()),
            Domain::Semidisk { radius } => (-radius, radius, 0.0, radius),
            Domain::Rectangle { half_width, depth } => (-half_width, half_width, -depth, 0.0),
        }
    }

    pub fn centroid(&self) -> Point {
        match *self {
            Domain::Mushroom(g) => {
                let cap = 0.5 * PI * g.r2() * g.r2();
                let stalk = 2.0 * g.r1() * g.t();
                let y = (cap * 4.0 * g.r2() / (3.0 * PI) - stalk * 0.5 * g.t()) / (cap + stalk);
                Vec2::new(0.0, y)
            }
            Domain::Semidisk { radius } => Vec2::new(0.0, 4.0 * radius / (3.0 * PI)),
            Domain::Rectangle { depth, .. } => Vec2::new(0.0, -0.5 * depth),
        }
    }

    /// The length that must span at least ten grid cells, and whose walls
    /// must fall on grid lines.
    fn resolved_length(&self) -> f64 {
        match *self {
            Domain::Mushroom(g) => g.r1(),
            Domain::Semidisk { radius } => radius,
            Domain::Rectangle { half_width, depth } => half_width.min(depth),
        }
    }

    fn aligned_lengths(&self) -> Vec<f64> {
        match *self {
            Domain::Mushroom(g) => vec![g.r1()],
            Domain::Semidisk { .. } => vec![],
            Domain::Rectangle { half_width, .. } => vec![half_width],
        }
    }
}

/// Neighbour of a lattice node in one of the four directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Link {
    Node(u32),
    /// Boundary at distance `θh` along the lattice direction.
    Wall(f64),
}

/// Directions in the order east, west, north, south.
pub(crate) const DIRS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Interior nodes closer than this fraction of `h` to the boundary along a
/// lattice direction are treated as boundary points.
const DROP_FRACTION: f64 = 0.1;

const NONE: u32 = u32::MAX;

/// Lattice `hℤ²` restricted to the interior of a domain.
#[derive(Clone, Debug)]
pub struct Grid {
    pub h: f64,
    pub domain: Domain,
    i_min: i32,
    j_min: i32,
    width: usize,
    height: usize,
    lookup: Vec<u32>,
    /// Interior nodes `(i, j)` ordered by `j`, then `i`.
    pub nodes: Vec<(i32, i32)>,
    pub(crate) links: Vec<[Link; 4]>,
}

fn boundary_distance(segs: &[BoundarySegment], p: Point, step: Vec2) -> Option<f64> {
    segs.iter()
        .filter_map(|s| s.ray_hit(p, step, 0.0))
        .min_by(f64::total_cmp)
}

impl Grid {
    pub fn new(domain: Domain, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("eigensolver", format!("grid spacing must be positive, got {h}")));
        }
        let len = domain.resolved_length();
        if len / h < 10.0 - 1e-9 {
            return Err(Error::invalid(
                "eigensolver",
                format!("grid too coarse: {len}/{h} < 10 cells across the narrowest feature"),
            ));
        }
        for l in domain.aligned_lengths() {
            let m = l / h;
            if (m - m.round()).abs() > 1e-9 * m.max(1.0) {
                return Err(Error::invalid(
                    "eigensolver",
                    format!("spacing {h} does not divide wall offset {l}"),
                ));
            }
        }
        let (x0, x1, y0, y1) = domain.bounding_box();
        let i_min = (x0 / h).floor() as i32 - 1;
        let i_max = (x1 / h).ceil() as i32 + 1;
        let j_min = (y0 / h).floor() as i32 - 1;
        let j_max = (y1 / h).ceil() as i32 + 1;
        let width = (i_max - i_min + 1) as usize;
        let height = (j_max - j_min + 1) as usize;
        let segs = domain.boundary_segments();
        let on_boundary_tol = 1e-9 * h;
        let pos = |i: i32, j: i32| Vec2::new(i as f64 * h, j as f64 * h);
        // evaluate geometry on the right half only so the lattice is exactly symmetric
        let wall = |i: i32, j: i32, di: i32, dj: i32| {
            let di = if i < 0 { -di } else { di.abs() };
            boundary_distance(&segs, pos(i.abs(), j), Vec2::new(di as f64 * h, dj as f64 * h))
        };

        // candidate interior nodes
        let mut alive = vec![false; width * height];
        for jj in 0..height {
            for ii in 0..width {
                let p = pos((ii as i32 + i_min).abs(), jj as i32 + j_min);
                if domain.inside(p) && segs.iter().all(|s| s.distance_to(p) > on_boundary_tol) {
                    alive[jj * width + ii] = true;
                }
            }
        }
        let at = |i: i32, j: i32| -> Option<usize> {
            let (ii, jj) = (i - i_min, j - j_min);
            (ii >= 0 && jj >= 0 && (ii as usize) < width && (jj as usize) < height)
                .then(|| jj as usize * width + ii as usize)
        };
        // drop nodes hugging the boundary
        let mut drop = Vec::new();
        for jj in 0..height {
            for ii in 0..width {
                if !alive[jj * width + ii] {
                    continue;
                }
                let (i, j) = (ii as i32 + i_min, jj as i32 + j_min);
                for (di, dj) in DIRS {
                    let nb = at(i + di, j + dj).is_some_and(|k| alive[k]);
                    if !nb {
                        let theta = wall(i, j, di, dj).unwrap_or(1.0);
                        if theta < DROP_FRACTION {
                            drop.push(jj * width + ii);
                            break;
                        }
                    }
                }
            }
        }
        for k in drop {
            alive[k] = false;
        }

        let mut lookup = vec![NONE; width * height];
        let mut nodes = Vec::new();
        for jj in 0..height {
            for ii in 0..width {
                if alive[jj * width + ii] {
                    lookup[jj * width + ii] = nodes.len() as u32;
                    nodes.push((ii as i32 + i_min, jj as i32 + j_min));
                }
            }
        }
        let mut links = Vec::with_capacity(nodes.len());
        for &(i, j) in &nodes {
            let mut l = [Link::Wall(1.0); 4];
            for (d, (di, dj)) in DIRS.iter().enumerate() {
                let k = at(i + di, j + dj).map(|k| lookup[k]).unwrap_or(NONE);
                l[d] = if k != NONE {
                    Link::Node(k)
                } else {
                    let theta = wall(i, j, *di, *dj).ok_or_else(|| {
                        Error::numerical(
                            "eigensolver",
                            format!("no boundary found from node ({i}, {j}) in direction ({di}, {dj})"),
                        )
                    })?;
                    Link::Wall(theta)
                };
            }
            links.push(l);
        }
        Ok(Self { h, domain, i_min, j_min, width, height, lookup, nodes, links })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, node: usize) -> Point {
        let (i, j) = self.nodes[node];
        Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }

    /// Node index at lattice point `(i, j)`, if interior.
    pub fn node_at(&self, i: i32, j: i32) -> Option<usize> {
        let (ii, jj) = (i - self.i_min, j - self.j_min);
        if ii < 0 || jj < 0 || ii as usize >= self.width || jj as usize >= self.height {
            return None;
        }
        let k = self.lookup[jj as usize * self.width + ii as usize];
        (k != NONE).then_some(k as usize)
    }

    /// Grid function value at a lattice point, zero off the interior.
    pub fn value_at(&self, u: &[f64], i: i32, j: i32) -> f64 {
        self.node_at(i, j).map_or(0.0, |k| u[k])
    }

    /// Bilinear interpolation of a grid function extended by zero.
    pub fn interpolate(&self, u: &[f64], p: Point) -> f64 {
        let (fx, fy) = (p.x / self.h, p.y / self.h);
        let (i, j) = (fx.floor() as i32, fy.floor() as i32);
        let (a, b) = (fx - i as f64, fy - j as f64);
        (1.0 - a) * (1.0 - b) * self.value_at(u, i, j)
            + a * (1.0 - b) * self.value_at(u, i + 1, j)
            + (1.0 - a) * b * self.value_at(u, i, j + 1)
            + a * b * self.value_at(u, i + 1, j + 1)
    }

    /// Node nearest to `p`.
    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            (self.position(a) - p).norm().total_cmp(&(self.position(b) - p).norm())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_lattice() {
        let d = Domain::Rectangle { half_width: 1.0, depth: 1.0 };
        let g = Grid::new(d, 0.1).unwrap();
        assert_eq!(g.len(), 19 * 9);
        for l in &g.links {
            for x in l {
                if let Link::Wall(t) = x {
                    assert!((t - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(Grid::new(d, 0.3).is_err());
        assert!(Grid::new(d, 0.07).is_err());
    }

    #[test]
    fn semidisk_distances() {
        let d = Domain::Semidisk { radius: 2.0 };
        let g = Grid::new(d, 0.1).unwrap();
        for (k, l) in g.links.iter().enumerate() {
            let p = g.position(k);
            assert!(p.norm() < 2.0 && p.y > 0.0);
            if let Link::Wall(t) = l[0] {
                let exact = ((4.0 - p.y * p.y).sqrt() - p.x) / 0.1;
                assert!((t - exact).abs() < 1e-9, "{t} vs {exact}");
                assert!(t >= DROP_FRACTION);
            }
        }
    }

    #[test]
    fn mushroom_has_mouth_nodes() {
        let g = MushroomGeometry::new(1.0, 2.0, 1.0).unwrap();
        let grid = Grid::new(Domain::Mushroom(g), 0.1).unwrap();
        assert!(grid.node_at(0, 0).is_some());
        assert!(grid.node_at(9, 0).is_some());
        assert!(grid.node_at(10, 0).is_none());
        assert!(grid.node_at(12, 0).is_none());
        assert!(grid.node_at(10, -3).is_none());
        assert!(grid.node_at(9, -9).is_some());
        assert!(grid.node_at(9, -10).is_none());
        assert!((Domain::Mushroom(g).area() - g.area()).abs() < 1e-15);
    }
}
