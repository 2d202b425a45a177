//! The billiard map, its inverse and finite orbits.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::DynamicsError;
use crate::geometry::{
    signed_angle, BoundaryPoint, Corner, PhasePoint, Side, StadiumTable, Vec2, MIN_FLIGHT,
    SINGULAR_TOL,
};

/// Slack on the side-membership test of a candidate hit point.
const EDGE_SLACK: f64 = 1e-9;

/// One free flight from a point to the next boundary collision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlightSegment {
    #[serde(skip)]
    pub start: Vec2,
    #[serde(skip)]
    pub direction: Vec2,
    pub tau: f64,
    pub end: BoundaryPoint,
    /// Nearest junction to the end point and its arc-length distance.
    pub nearest_junction: (Corner, f64),
    pub near_singular: bool,
}

impl FlightSegment {
    pub fn end_position(&self) -> Vec2 {
        self.start + self.tau * self.direction
    }
}

/// Diagnostics attached to each application of the billiard map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StepFlags {
    /// End point within tolerance of a junction.
    pub near_corner: bool,
    /// Outgoing angle within tolerance of tangency.
    pub near_tangent: bool,
    /// Perpendicular hit on a semicircle (the orbit passes through its centre).
    pub perpendicular_arc: bool,
}

impl StepFlags {
    pub fn any(&self) -> bool {
        self.near_corner || self.near_tangent || self.perpendicular_arc
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.near_corner {
            parts.push("corner");
        }
        if self.near_tangent {
            parts.push("tangent");
        }
        if self.perpendicular_arc {
            parts.push("perpendicular");
        }
        parts.join(";")
    }
}

/// First boundary intersection of the ray `position + t * direction`, `t > 1e-12`.
pub fn next_collision(
    table: &StadiumTable,
    position: Vec2,
    direction: Vec2,
) -> Result<FlightSegment, DynamicsError> {
    next_collision_from(table, position, direction, None)
}

/// As [`next_collision`], with the side the ray departs from when known.
/// Departing from an arc, the return chord is taken from the exact second root.
pub fn next_collision_from(
    table: &StadiumTable,
    position: Vec2,
    direction: Vec2,
    from: Option<Side>,
) -> Result<FlightSegment, DynamicsError> {
    let l = table.l();
    let mut best: Option<(f64, Side)> = None;
    let mut offer = |t: f64, side: Side| {
        if t > MIN_FLIGHT && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, side));
        }
    };

    if direction.y > 0.0 && from != Some(Side::T) {
        let t = (1.0 - position.y) / direction.y;
        let x = position.x + t * direction.x;
        if (-EDGE_SLACK..=l + EDGE_SLACK).contains(&x) {
            offer(t, Side::T);
        }
    }
    if direction.y < 0.0 && from != Some(Side::B) {
        let t = (-1.0 - position.y) / direction.y;
        let x = position.x + t * direction.x;
        if (-EDGE_SLACK..=l + EDGE_SLACK).contains(&x) {
            offer(t, Side::B);
        }
    }
    for (side, center) in [(Side::L, table.left_center()), (Side::R, table.right_center())] {
        let rel = position - center;
        let b = direction.dot(&rel);
        let on_half = |t: f64| {
            let x = position.x + t * direction.x;
            match side {
                Side::L => x <= EDGE_SLACK,
                _ => x >= l - EDGE_SLACK,
            }
        };
        if from == Some(side) {
            let t = -2.0 * b;
            if on_half(t) {
                offer(t, side);
            }
            continue;
        }
        let c = rel.dot(&rel) - 1.0;
        let disc = b * b - c;
        if disc < 0.0 {
            continue;
        }
        // stabilized roots of t^2 + 2bt + c = 0
        let q = -(b + b.signum() * disc.sqrt());
        if q != 0.0 {
            for t in [q, c / q] {
                if on_half(t) {
                    offer(t, side);
                }
            }
        }
    }

    let (tau, side) = best.ok_or(DynamicsError::NoIntersection)?;
    let hit = position + tau * direction;
    let end = BoundaryPoint::from_cartesian(table, canonical_side(l, side, hit), hit);
    let incidence = direction.dot(&end.inward_normal()).abs();
    if incidence < SINGULAR_TOL.sin() {
        return Err(DynamicsError::Tangential(side));
    }
    let nearest_junction = table.nearest_junction(&end);
    Ok(FlightSegment {
        start: position,
        direction,
        tau,
        end,
        nearest_junction,
        near_singular: nearest_junction.1 < SINGULAR_TOL,
    })
}

/// Within the edge slack the flat and arc candidates are numerically tied;
/// the side is decided by the abscissa of the hit.
fn canonical_side(l: f64, side: Side, hit: Vec2) -> Side {
    match side {
        Side::T | Side::B if hit.x < 0.0 => Side::L,
        Side::T | Side::B if hit.x > l => Side::R,
        Side::L if hit.x > 0.0 => flat_of(hit),
        Side::R if hit.x < l => flat_of(hit),
        s => s,
    }
}

fn flat_of(hit: Vec2) -> Side {
    if hit.y > 0.0 {
        Side::T
    } else {
        Side::B
    }
}

/// Specular reflection `v - 2 (v.n) n`.
pub fn reflect(direction: &Vec2, normal: &Vec2) -> Result<Vec2, DynamicsError> {
    let vn = direction.dot(normal);
    if vn.abs() < SINGULAR_TOL {
        return Err(DynamicsError::Grazing(vn));
    }
    Ok(direction - 2.0 * vn * normal)
}

fn check_state(pp: &PhasePoint) -> Result<(), DynamicsError> {
    if !(pp.theta.abs() < FRAC_PI_2 - SINGULAR_TOL) {
        return Err(DynamicsError::InvalidAngle(pp.theta));
    }
    Ok(())
}

/// One application of the billiard map together with the flight it used.
pub fn billiard_step(
    table: &StadiumTable,
    pp: &PhasePoint,
) -> Result<(PhasePoint, FlightSegment, StepFlags), DynamicsError> {
    check_state(pp)?;
    let seg = next_collision_from(
        table,
        pp.position(table),
        pp.direction(),
        Some(pp.point.side),
    )?;
    if seg.near_singular {
        return Err(DynamicsError::Singular {
            corner: seg.nearest_junction.0,
            distance: seg.nearest_junction.1,
        });
    }
    let normal = seg.end.inward_normal();
    let out = reflect(&seg.direction, &normal)?;
    let theta = signed_angle(&normal, &out);
    let next = PhasePoint {
        point: seg.end,
        theta,
    };
    let flags = StepFlags {
        near_corner: false,
        near_tangent: FRAC_PI_2 - theta.abs() < SINGULAR_TOL,
        perpendicular_arc: seg.end.side.is_arc() && theta.abs() < SINGULAR_TOL,
    };
    Ok((next, seg, flags))
}

/// The billiard map `F_l`.
pub fn billiard_map(table: &StadiumTable, pp: &PhasePoint) -> Result<PhasePoint, DynamicsError> {
    billiard_step(table, pp).map(|(next, _, _)| next)
}

/// The inverse map, by time-reversal conjugacy `F^-1 = R F R` with `R(s, theta) = (s, -theta)`.
pub fn billiard_map_inverse(
    table: &StadiumTable,
    pp: &PhasePoint,
) -> Result<PhasePoint, DynamicsError> {
    billiard_map(table, &pp.reversed()).map(|q| q.reversed())
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitStep {
    pub point: PhasePoint,
    pub segment: FlightSegment,
    pub flags: StepFlags,
}

#[derive(Clone, Debug)]
pub struct Orbit {
    pub start: PhasePoint,
    pub steps: Vec<OrbitStep>,
    /// Set when the orbit stopped before the requested number of steps.
    pub stopped: Option<DynamicsError>,
}

impl Orbit {
    pub fn is_complete(&self) -> bool {
        self.stopped.is_none()
    }

    /// Start point followed by every image.
    pub fn points(&self) -> impl Iterator<Item = &PhasePoint> + '_ {
        std::iter::once(&self.start).chain(self.steps.iter().map(|s| &s.point))
    }
}

/// `n` applications of the billiard map; stops early at the first error.
pub fn orbit(table: &StadiumTable, pp: &PhasePoint, n: usize) -> Orbit {
    let mut steps = Vec::with_capacity(n);
    let mut cur = *pp;
    let mut stopped = None;
    for _ in 0..n {
        match billiard_step(table, &cur) {
            Ok((next, segment, flags)) => {
                steps.push(OrbitStep {
                    point: next,
                    segment,
                    flags,
                });
                cur = next;
            }
            Err(e) => {
                stopped = Some(e);
                break;
            }
        }
    }
    Orbit {
        start: *pp,
        steps,
        stopped,
    }
}
