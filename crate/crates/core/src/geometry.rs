//! Mushroom domains `M_t = R_t ∪ S`.
//!
//! The cap `S` is the closed upper semidisk of radius `r2` centred at the
//! origin and the stalk `R_t = [-r1, r1] × [-t, 0]` hangs below it. The
//! boundary is traversed counterclockwise starting at the left end of the
//! stalk bottom; every normal returned here points out of the domain.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar point or vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub type Point = Vec2;

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Stalk half-width `r1`, cap radius `r2` and stalk length `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MushroomGeometry {
    r1: f64,
    r2: f64,
    t: f64,
}

impl MushroomGeometry {
    pub fn new(r1: f64, r2: f64, t: f64) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite() && t.is_finite()) {
            return Err(Error::invalid("geometry", "parameters must be finite"));
        }
        if !(r1 > 0.0 && r1 < r2) {
            return Err(Error::invalid(
                "geometry",
                format!("need 0 < r1 < r2, got r1={r1}, r2={r2}"),
            ));
        }
        if !(t > 0.0 && t <= 2.0) {
            return Err(Error::invalid("geometry", format!("need 0 < t <= 2, got t={t}")));
        }
        Ok(Self { r1, r2, t })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Same cap, different stalk length.
    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.r1, self.r2, t)
    }

    /// Aspect ratio `C = r2 / r1`.
    pub fn aspect(&self) -> f64 {
        self.r2 / self.r1
    }

    pub fn area(&self) -> f64 {
        0.5 * PI * self.r2 * self.r2 + 2.0 * self.r1 * self.t
    }

    /// d(area)/dt; the area is affine in `t`.
    pub fn area_rate(&self) -> f64 {
        2.0 * self.r1
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * self.r1 + 2.0 * self.t + 2.0 * (self.r2 - self.r1) + PI * self.r2
    }

    /// Boundary classification tolerance `τ_b`.
    pub fn boundary_tolerance(&self) -> f64 {
        1e-12 * self.r2
    }

    pub fn boundary_segments(&self) -> Vec<BoundarySegment> {
        let (r1, r2, t) = (self.r1, self.r2, self.t);
        let p = Vec2::new;
        chain(vec![
            (SegmentKind::StalkBottom, SegmentShape::line(p(-r1, -t), p(r1, -t))),
            (SegmentKind::StalkRightWall, SegmentShape::line(p(r1, -t), p(r1, 0.0))),
            (SegmentKind::HatRightShelf, SegmentShape::line(p(r1, 0.0), p(r2, 0.0))),
            (SegmentKind::CapArc, SegmentShape::arc(r2, 0.0, PI)),
            (SegmentKind::HatLeftShelf, SegmentShape::line(p(-r2, 0.0), p(-r1, 0.0))),
            (SegmentKind::StalkLeftWall, SegmentShape::line(p(-r1, 0.0), p(-r1, -t))),
        ])
    }

    /// The six corner points, in boundary order.
    pub fn corners(&self) -> Vec<Point> {
        self.boundary_segments().iter().map(|s| s.start()).collect()
    }

    pub fn classify_point(&self, p: Point) -> RegionTag {
        let tol = self.boundary_tolerance();
        if self
            .boundary_segments()
            .iter()
            .any(|s| s.distance_to(p) <= tol)
        {
            return RegionTag::Boundary;
        }
        self.classify_interior(p)
    }

    /// Region of a point already known not to lie on the boundary.
    pub(crate) fn classify_interior(&self, p: Point) -> RegionTag {
        let r = p.norm();
        if p.y > 0.0 {
            if r <= self.r1 {
                RegionTag::InnerSemidisk
            } else if r < self.r2 {
                RegionTag::SemiAnnulus
            } else {
                RegionTag::Outside
            }
        } else if p.y > -self.t && p.x.abs() < self.r1 {
            RegionTag::Stalk
        } else {
            RegionTag::Outside
        }
    }

    /// Membership in the closed domain.
    pub fn contains(&self, p: Point) -> bool {
        !matches!(self.classify_point(p), RegionTag::Outside)
    }
}

impl fmt::Display for MushroomGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r1={} r2={} t={}", self.r1, self.r2, self.t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionTag {
    Stalk,
    InnerSemidisk,
    SemiAnnulus,
    Outside,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    StalkLeftWall,
    StalkRightWall,
    StalkBottom,
    HatLeftShelf,
    HatRightShelf,
    CapArc,
    /// Straight edge of a bare semidisk.
    Diameter,
    /// Top edge of a bare rectangle.
    Lid,
}

impl SegmentKind {
    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::StalkLeftWall => "stalk-left-wall",
            SegmentKind::StalkRightWall => "stalk-right-wall",
            SegmentKind::StalkBottom => "stalk-bottom",
            SegmentKind::HatLeftShelf => "hat-left-shelf",
            SegmentKind::HatRightShelf => "hat-right-shelf",
            SegmentKind::CapArc => "cap-arc",
            SegmentKind::Diameter => "diameter",
            SegmentKind::Lid => "lid",
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Straight edge or circular arc centred at the origin (counterclockwise).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentShape {
    Line { start: Point, end: Point },
    Arc { radius: f64, theta_start: f64, theta_end: f64 },
}

impl SegmentShape {
    pub fn line(start: Point, end: Point) -> Self {
        SegmentShape::Line { start, end }
    }

    pub fn arc(radius: f64, theta_start: f64, theta_end: f64) -> Self {
        SegmentShape::Arc { radius, theta_start, theta_end }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment {
    pub kind: SegmentKind,
    pub shape: SegmentShape,
    /// Arclength interval of this piece along the whole boundary.
    pub s_start: f64,
    pub s_end: f64,
}

pub(crate) fn chain(pieces: Vec<(SegmentKind, SegmentShape)>) -> Vec<BoundarySegment> {
    let mut s = 0.0;
    pieces
        .into_iter()
        .map(|(kind, shape)| {
            let mut seg = BoundarySegment { kind, shape, s_start: s, s_end: s };
            s += seg.length();
            seg.s_end = s;
            seg
        })
        .collect()
}

impl BoundarySegment {
    pub fn length(&self) -> f64 {
        match self.shape {
            SegmentShape::Line { start, end } => (end - start).norm(),
            SegmentShape::Arc { radius, theta_start, theta_end } => {
                radius * (theta_end - theta_start)
            }
        }
    }

    /// Point at local arclength `s ∈ [0, length]`.
    pub fn point_at(&self, s: f64) -> Point {
        match self.shape {
            SegmentShape::Line { start, end } => {
                let len = (end - start).norm();
                start + (s / len) * (end - start)
            }
            SegmentShape::Arc { radius, theta_start, .. } => {
                let th = theta_start + s / radius;
                Vec2::new(radius * th.cos(), radius * th.sin())
            }
        }
    }

    /// Outward unit normal at local arclength `s`.
    pub fn normal_at(&self, s: f64) -> Vec2 {
        match self.shape {
            SegmentShape::Line { start, end } => {
                let d = (end - start).normalized();
                // counterclockwise traversal keeps the interior on the left
                Vec2::new(d.y, -d.x)
            }
            SegmentShape::Arc { radius, theta_start, .. } => {
                let th = theta_start + s / radius;
                Vec2::new(th.cos(), th.sin())
            }
        }
    }

    pub fn start(&self) -> Point {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Point {
        self.point_at(self.length())
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        match self.shape {
            SegmentShape::Line { start, end } => {
                let d = end - start;
                let u = ((p - start).dot(d) / d.dot(d)).clamp(0.0, 1.0);
                (p - (start + u * d)).norm()
            }
            SegmentShape::Arc { radius, theta_start, theta_end } => {
                let th = p.y.atan2(p.x);
                if p.norm() > 0.0 && th >= theta_start && th <= theta_end {
                    (p.norm() - radius).abs()
                } else {
                    let a = self.start();
                    let b = self.end();
                    (p - a).norm().min((p - b).norm())
                }
            }
        }
    }

    /// Smallest ray parameter `s > min_s` with `origin + s·dir` on this piece.
    ///
    /// `dir` need not be normalised; the parameter is in units of `|dir|`.
    pub fn ray_hit(&self, origin: Point, dir: Vec2, min_s: f64) -> Option<f64> {
        match self.shape {
            SegmentShape::Line { start, end } => {
                let e = end - start;
                let denom = dir.cross(e);
                if denom == 0.0 {
                    return None;
                }
                let w = start - origin;
                let s = w.cross(e) / denom;
                let u = w.cross(dir) / denom;
                let tol = 1e-12;
                (s > min_s && (-tol..=1.0 + tol).contains(&u)).then_some(s)
            }
            SegmentShape::Arc { radius, theta_start, theta_end } => {
                // |o + s d|^2 = R^2
                let a = dir.dot(dir);
                let b = origin.dot(dir);
                let c = origin.dot(origin) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // numerically stable pair of roots
                let q = if b >= 0.0 { -(b + sq) } else { -b + sq };
                let mut roots = [q / a, if q != 0.0 { c / q } else { 0.0 }];
                roots.sort_by(f64::total_cmp);
                let ang_tol = 1e-12;
                roots.into_iter().find(|&s| {
                    if s <= min_s {
                        return false;
                    }
                    let p = origin + s * dir;
                    let th = p.y.atan2(p.x);
                    // the upper arc [0, π] wraps to -π at its left end
                    let th = if th < -PI / 2.0 { th + 2.0 * PI } else { th };
                    th >= theta_start - ang_tol && th <= theta_end + ang_tol
                })
            }
        }
    }
}
