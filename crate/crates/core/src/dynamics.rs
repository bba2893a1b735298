//! Billiard flow on the unit cotangent bundle of a mushroom.
//!
//! Trajectories are straight chords joined by specular reflections. The
//! split into ergodic and integrable phase space is decided analytically by
//! the impact parameter `|x ∧ ξ|`: inside the semi-annulus a chord whose
//! distance from the centre exceeds `r1` is a disk-billiard orbit that never
//! reaches the stalk or the inner semidisk.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MushroomGeometry, Point, RegionTag, SegmentKind, SegmentShape, Vec2};

/// Tangency tolerance `τ_tan` on `⟨ξ, n⟩`.
pub const TANGENCY_TOL: f64 = 1e-12;

/// Relative borderline tolerance: `τ_p = BORDERLINE_REL_TOL · r1`.
pub const BORDERLINE_REL_TOL: f64 = 1e-9;

/// Smallest admissible chord length; avoids re-hitting the wall just left.
const MIN_CHORD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Point,
    pub xi: Vec2,
}

impl PhasePoint {
    pub fn new(x: Point, xi: Vec2) -> Result<Self> {
        if ((xi.norm() - 1.0).abs()) > 1e-12 {
            return Err(Error::invalid(
                "dynamics",
                format!("direction must be a unit vector, |xi| = {}", xi.norm()),
            ));
        }
        Ok(Self { x, xi })
    }

    /// Normalises `xi` before building the point.
    pub fn from_direction(x: Point, xi: Vec2) -> Result<Self> {
        if xi.norm() == 0.0 || !xi.norm().is_finite() {
            return Err(Error::invalid("dynamics", "zero direction"));
        }
        Self::new(x, xi.normalized())
    }

    /// Distance from the cap centre to the line carrying this state.
    pub fn impact_parameter(&self) -> f64 {
        self.x.cross(self.xi).abs()
    }

    pub fn reversed(&self) -> Self {
        Self { x: self.x, xi: -self.xi }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExceptionalReason {
    /// Orbit runs into a corner of the boundary.
    Corner,
    /// Orbit meets the boundary tangentially.
    Tangency,
    /// Impact parameter within `τ_p` of `r1`: the separatrix between the two
    /// invariant sets.
    Borderline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryClass {
    Ergodic,
    Integrable,
    Exceptional(ExceptionalReason),
}

/// Specular reflection of an outgoing direction at a wall with outward
/// normal `normal`.
pub fn reflect(xi_in: Vec2, normal: Vec2) -> std::result::Result<Vec2, ExceptionalReason> {
    let c = xi_in.dot(normal);
    if c <= TANGENCY_TOL {
        return Err(ExceptionalReason::Tangency);
    }
    Ok(xi_in - (2.0 * c) * normal)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounce {
    pub position: Point,
    pub incoming: Vec2,
    pub outgoing: Vec2,
    pub wall: SegmentKind,
    /// Flow time at which the wall is reached.
    pub time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    BounceBudget,
    TimeBudget,
    Corner,
    Tangency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: PhasePoint,
    pub bounces: Vec<Bounce>,
    /// State at the end of the run.
    pub end: PhasePoint,
    pub total_time: f64,
    pub termination: Termination,
}

impl Trajectory {
    /// Chord endpoints in order, beginning with the start point.
    pub fn vertices(&self) -> Vec<Point> {
        let mut v = Vec::with_capacity(self.bounces.len() + 2);
        v.push(self.start.x);
        v.extend(self.bounces.iter().map(|b| b.position));
        if self.termination == Termination::TimeBudget || self.termination == Termination::Corner {
            v.push(self.end.x);
        }
        v
    }

    /// CSV with columns `index,x,y,dx,dy,wall` (outgoing direction).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y,dx,dy,wall\n");
        for (i, b) in self.bounces.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                i, b.position.x, b.position.y, b.outgoing.x, b.outgoing.y, b.wall
            );
        }
        out
    }
}

/// Next wall hit from `x` along unit `xi`, skipping the straight wall the
/// state currently sits on.
fn next_hit(
    g: &MushroomGeometry,
    x: Point,
    xi: Vec2,
    current: Option<SegmentKind>,
) -> Option<(f64, usize)> {
    let segs = g.boundary_segments();
    let mut best: Option<(f64, usize)> = None;
    for (i, seg) in segs.iter().enumerate() {
        let hit = match seg.shape {
            SegmentShape::Line { .. } if Some(seg.kind) == current => None,
            _ => seg.ray_hit(x, xi, MIN_CHORD),
        };
        if let Some(s) = hit {
            if best.is_none_or(|(b, _)| s < b) {
                best = Some((s, i));
            }
        }
    }
    best
}

/// Runs the billiard flow from an interior state.
pub fn evolve(
    g: &MushroomGeometry,
    z: PhasePoint,
    max_bounces: usize,
    max_time: f64,
) -> Result<Trajectory> {
    match g.classify_point(z.x) {
        RegionTag::Boundary => {
            return Err(Error::invalid("dynamics", "start point lies on the boundary"))
        }
        RegionTag::Outside => {
            return Err(Error::invalid("dynamics", "start point lies outside the domain"))
        }
        _ => {}
    }
    let segs = g.boundary_segments();
    let corners = g.corners();
    let corner_tol = g.boundary_tolerance();
    let mut x = z.x;
    let mut xi = z.xi;
    let mut time = 0.0;
    let mut current = None;
    let mut bounces = Vec::new();

    let termination = loop {
        if bounces.len() >= max_bounces {
            break Termination::BounceBudget;
        }
        let Some((s, idx)) = next_hit(g, x, xi, current) else {
            return Err(Error::numerical(
                "dynamics",
                format!(
                    "no boundary intersection from x=({}, {}) along ({}, {}) after {} bounces",
                    x.x,
                    x.y,
                    xi.x,
                    xi.y,
                    bounces.len()
                ),
            ));
        };
        if time + s > max_time {
            x = x + (max_time - time) * xi;
            time = max_time;
            break Termination::TimeBudget;
        }
        let seg = &segs[idx];
        let mut hit = x + s * xi;
        time += s;
        if corners.iter().any(|c| (*c - hit).norm() <= corner_tol) {
            x = hit;
            break Termination::Corner;
        }
        // project back onto the wall to stop drift
        if let SegmentShape::Arc { radius, .. } = seg.shape {
            hit = (radius / hit.norm()) * hit;
        } else if let SegmentShape::Line { start, end } = seg.shape {
            if start.x == end.x {
                hit.x = start.x;
            } else if start.y == end.y {
                hit.y = start.y;
            }
        }
        let normal = match seg.shape {
            SegmentShape::Arc { .. } => hit.normalized(),
            SegmentShape::Line { .. } => seg.normal_at(0.0),
        };
        let out = match reflect(xi, normal) {
            Ok(v) => v.normalized(),
            Err(_) => {
                x = hit;
                break Termination::Tangency;
            }
        };
        bounces.push(Bounce { position: hit, incoming: xi, outgoing: out, wall: seg.kind, time });
        x = hit;
        xi = out;
        current = Some(seg.kind);
    };

    Ok(Trajectory {
        start: z,
        bounces,
        end: PhasePoint { x, xi },
        total_time: time,
        termination,
    })
}

/// Phase-space class of a state in the closed domain.
pub fn classify(g: &MushroomGeometry, z: PhasePoint) -> TrajectoryClass {
    let region = match g.classify_point(z.x) {
        RegionTag::Boundary => {
            // the closure of the cap above the shelves versus the stalk
            if z.x.y > 0.0 || z.x.x.abs() >= g.r1() {
                if z.x.norm() <= g.r1() {
                    RegionTag::InnerSemidisk
                } else {
                    RegionTag::SemiAnnulus
                }
            } else {
                RegionTag::Stalk
            }
        }
        r => r,
    };
    match region {
        RegionTag::Stalk | RegionTag::InnerSemidisk => TrajectoryClass::Ergodic,
        _ => {
            let p = z.impact_parameter();
            let tol = BORDERLINE_REL_TOL * g.r1();
            if (p - g.r1()).abs() <= tol {
                TrajectoryClass::Exceptional(ExceptionalReason::Borderline)
            } else if p > g.r1() {
                TrajectoryClass::Integrable
            } else {
                TrajectoryClass::Ergodic
            }
        }
    }
}

/// Liouville fraction `d(t)` of phase space occupied by integrable orbits.
pub fn integrable_fraction(g: &MushroomGeometry) -> f64 {
    integrable_phase_volume(g) / g.area()
}

/// `π r2²/2 − r1² √(C²−1) − r2² asin(1/C)`: the integrable volume in units
/// where the whole unit cotangent bundle has volume `area`.
pub fn integrable_phase_volume(g: &MushroomGeometry) -> f64 {
    let (r1, r2) = (g.r1(), g.r2());
    let c = g.aspect();
    0.5 * PI * r2 * r2 - r1 * r1 * (c * c - 1.0).sqrt() - r2 * r2 * (1.0 / c).asin()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub integrable: u64,
}

/// Samples per independent RNG stream in the Monte-Carlo estimator.
const MC_BLOCK: u64 = 4096;

/// Uniform state on the unit cotangent bundle: rejection in the bounding box,
/// direction uniform on the circle.
pub fn sample_phase_point<R: Rng + ?Sized>(g: &MushroomGeometry, rng: &mut R) -> PhasePoint {
    loop {
        let x = rng.gen_range(-g.r2()..g.r2());
        let y = rng.gen_range(-g.t()..g.r2());
        let p = Vec2::new(x, y);
        if matches!(
            g.classify_point(p),
            RegionTag::Stalk | RegionTag::InnerSemidisk | RegionTag::SemiAnnulus
        ) {
            let phi = rng.gen_range(0.0..2.0 * PI);
            return PhasePoint { x: p, xi: Vec2::new(phi.cos(), phi.sin()) };
        }
    }
}

/// RNG for stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Monte-Carlo estimate of [`integrable_fraction`] with binomial standard error.
///
/// Samples are split into fixed-size blocks, each with its own counter-derived
/// stream, so the result does not depend on how blocks are scheduled.
pub fn integrable_fraction_mc(g: &MushroomGeometry, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::invalid("dynamics", "samples must be >= 1"));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let integrable: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let n = MC_BLOCK.min(samples - b * MC_BLOCK);
            (0..n)
                .filter(|_| {
                    let z = sample_phase_point(g, &mut rng);
                    classify(g, z) == TrajectoryClass::Integrable
                })
                .count() as u64
        })
        .sum();
    let p = integrable as f64 / samples as f64;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        integrable,
    })
}
