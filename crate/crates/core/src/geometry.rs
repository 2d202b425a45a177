//! Stadium table geometry and phase-space coordinates.
//!
//! The left semicircle is centred at the origin and the right one at
//! `(l, 0)`, both of radius one. The flats are `y = 1` (side `T`) and
//! `y = -1` (side `B`) for `x` in `[0, l]`. The junction corners are
//! `b = (0, 1)`, `p = (0, -1)`, `g = (l, -1)` and `r = (l, 1)`.
//!
//! Global arc length runs counterclockwise starting at `p`:
//! `B` covers `[0, l]`, `R` covers `[l, l + pi]`, `T` covers
//! `[l + pi, 2l + pi]` and `L` covers `[2l + pi, 2l + 2pi]`.
//!
//! `theta` is the signed angle from the inward normal to the outgoing
//! velocity, positive when the velocity is the normal rotated
//! counterclockwise.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;

pub type Vec2 = Vector2<f64>;

/// Distance (arc length, or `pi/2 - |theta|`) below which a state counts as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

/// Smallest admissible flight time; shorter roots are the departure point.
pub const MIN_FLIGHT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    T,
    R,
    B,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::L, Side::T, Side::R, Side::B];

    pub fn is_arc(self) -> bool {
        matches!(self, Side::L | Side::R)
    }

    pub fn is_flat(self) -> bool {
        !self.is_arc()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::L => "L",
            Side::T => "T",
            Side::R => "R",
            Side::B => "B",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The six corners: four junctions plus the two semicircle centres.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    #[serde(rename = "b")]
    B,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "cL")]
    CenterL,
    #[serde(rename = "cR")]
    CenterR,
}

impl Corner {
    pub const ALL: [Corner; 6] = [
        Corner::B,
        Corner::P,
        Corner::G,
        Corner::R,
        Corner::CenterL,
        Corner::CenterR,
    ];

    pub const JUNCTIONS: [Corner; 4] = [Corner::B, Corner::P, Corner::G, Corner::R];

    pub fn is_center(self) -> bool {
        matches!(self, Corner::CenterL | Corner::CenterR)
    }

    pub fn label(self) -> &'static str {
        match self {
            Corner::B => "b",
            Corner::P => "p",
            Corner::G => "g",
            Corner::R => "r",
            Corner::CenterL => "cL",
            Corner::CenterR => "cR",
        }
    }

    pub fn from_label(s: &str) -> Option<Corner> {
        Corner::ALL.into_iter().find(|c| c.label() == s)
    }

    /// The junction joining a flat and an arc, if the pair is adjacent.
    pub fn junction_between(a: Side, b: Side) -> Option<Corner> {
        use Side::*;
        match (a, b) {
            (T, L) | (L, T) => Some(Corner::B),
            (B, L) | (L, B) => Some(Corner::P),
            (B, R) | (R, B) => Some(Corner::G),
            (T, R) | (R, T) => Some(Corner::R),
            _ => None,
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Stadium billiard table with unit semicircles and flats of length `l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StadiumTable {
    l: f64,
}

impl StadiumTable {
    pub fn new(l: f64) -> Result<Self, DynamicsError> {
        if !(l.is_finite() && l > 0.0) {
            return Err(DynamicsError::InvalidTable(l));
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * self.l + 2.0 * PI
    }

    pub fn left_center(&self) -> Vec2 {
        Vec2::new(0.0, 0.0)
    }

    pub fn right_center(&self) -> Vec2 {
        Vec2::new(self.l, 0.0)
    }

    pub fn corner_position(&self, corner: Corner) -> Vec2 {
        match corner {
            Corner::B => Vec2::new(0.0, 1.0),
            Corner::P => Vec2::new(0.0, -1.0),
            Corner::G => Vec2::new(self.l, -1.0),
            Corner::R => Vec2::new(self.l, 1.0),
            Corner::CenterL => self.left_center(),
            Corner::CenterR => self.right_center(),
        }
    }

    /// Global arc-length position of a junction corner.
    pub fn junction_arclength(&self, corner: Corner) -> Option<f64> {
        let l = self.l;
        match corner {
            Corner::P => Some(0.0),
            Corner::G => Some(l),
            Corner::R => Some(l + PI),
            Corner::B => Some(2.0 * l + PI),
            _ => None,
        }
    }

    /// Range of the local coordinate on a side.
    pub fn local_range(&self, side: Side) -> (f64, f64) {
        match side {
            Side::L => (FRAC_PI_2, 3.0 * FRAC_PI_2),
            Side::R => (-FRAC_PI_2, FRAC_PI_2),
            Side::T | Side::B => (0.0, self.l),
        }
    }

    /// Boundary point from a global arc-length coordinate (taken modulo the perimeter).
    pub fn point_at_arclength(&self, s: f64) -> BoundaryPoint {
        let l = self.l;
        let s = s.rem_euclid(self.perimeter());
        if s <= l {
            BoundaryPoint::new_unchecked(Side::B, s)
        } else if s <= l + PI {
            BoundaryPoint::new_unchecked(Side::R, s - l - FRAC_PI_2)
        } else if s <= 2.0 * l + PI {
            BoundaryPoint::new_unchecked(Side::T, 2.0 * l + PI - s)
        } else {
            BoundaryPoint::new_unchecked(Side::L, s - 2.0 * l - PI + FRAC_PI_2)
        }
    }

    /// Signed periodic arc-length difference `a - b` in `(-P/2, P/2]`.
    pub fn arclength_delta(&self, a: f64, b: f64) -> f64 {
        let per = self.perimeter();
        let mut d = (a - b).rem_euclid(per);
        if d > per / 2.0 {
            d -= per;
        }
        d
    }

    /// Nearest junction corner to a boundary point and its arc-length distance.
    pub fn nearest_junction(&self, bp: &BoundaryPoint) -> (Corner, f64) {
        let s = bp.arclength(self);
        Corner::JUNCTIONS
            .into_iter()
            .map(|c| {
                let sc = self.junction_arclength(c).unwrap();
                (c, self.arclength_delta(s, sc).abs())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    }
}

/// A point of the table boundary: a side plus its local coordinate
/// (polar angle on an arc, abscissa on a flat).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub side: Side,
    pub coord: f64,
}

impl BoundaryPoint {
    pub fn new(table: &StadiumTable, side: Side, coord: f64) -> Result<Self, DynamicsError> {
        let (lo, hi) = table.local_range(side);
        if !(coord >= lo && coord <= hi) {
            return Err(DynamicsError::InvalidBoundaryPoint { side, coord });
        }
        Ok(Self { side, coord })
    }

    pub(crate) fn new_unchecked(side: Side, coord: f64) -> Self {
        Self { side, coord }
    }

    /// Projects a Cartesian point lying (approximately) on `side` to its local coordinate.
    pub(crate) fn from_cartesian(table: &StadiumTable, side: Side, q: Vec2) -> Self {
        let (lo, hi) = table.local_range(side);
        let coord = match side {
            Side::T | Side::B => q.x,
            Side::L => {
                let a = q.y.atan2(q.x);
                if a < 0.0 {
                    a + 2.0 * PI
                } else {
                    a
                }
            }
            Side::R => q.y.atan2(q.x - table.l()),
        };
        Self {
            side,
            coord: coord.clamp(lo, hi),
        }
    }

    pub fn position(&self, table: &StadiumTable) -> Vec2 {
        match self.side {
            Side::L => Vec2::new(self.coord.cos(), self.coord.sin()),
            Side::R => Vec2::new(table.l() + self.coord.cos(), self.coord.sin()),
            Side::T => Vec2::new(self.coord, 1.0),
            Side::B => Vec2::new(self.coord, -1.0),
        }
    }

    pub fn inward_normal(&self) -> Vec2 {
        match self.side {
            Side::L | Side::R => Vec2::new(-self.coord.cos(), -self.coord.sin()),
            Side::T => Vec2::new(0.0, -1.0),
            Side::B => Vec2::new(0.0, 1.0),
        }
    }

    pub fn arclength(&self, table: &StadiumTable) -> f64 {
        let l = table.l();
        match self.side {
            Side::B => self.coord,
            Side::R => l + self.coord + FRAC_PI_2,
            Side::T => 2.0 * l + PI - self.coord,
            Side::L => 2.0 * l + PI + self.coord - FRAC_PI_2,
        }
    }
}

/// A state of the billiard map: boundary point and outgoing angle to the inward normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub point: BoundaryPoint,
    pub theta: f64,
}

impl PhasePoint {
    pub fn new(point: BoundaryPoint, theta: f64) -> Result<Self, DynamicsError> {
        if !(theta.abs() < FRAC_PI_2) {
            return Err(DynamicsError::InvalidAngle(theta));
        }
        Ok(Self { point, theta })
    }

    pub fn from_arclength(table: &StadiumTable, s: f64, theta: f64) -> Result<Self, DynamicsError> {
        Self::new(table.point_at_arclength(s), theta)
    }

    /// Outgoing unit velocity.
    pub fn direction(&self) -> Vec2 {
        rotate(&self.point.inward_normal(), self.theta)
    }

    pub fn position(&self, table: &StadiumTable) -> Vec2 {
        self.point.position(table)
    }

    /// Time-reversal involution `(s, theta) -> (s, -theta)`.
    pub fn reversed(&self) -> Self {
        Self {
            point: self.point,
            theta: -self.theta,
        }
    }

    /// L1 distance in (arc length, theta) coordinates, periodic in arc length.
    pub fn distance(&self, other: &PhasePoint, table: &StadiumTable) -> f64 {
        let ds = table
            .arclength_delta(self.point.arclength(table), other.point.arclength(table))
            .abs();
        ds + (self.theta - other.theta).abs()
    }
}

pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Signed angle from `from` to `to` (both unit vectors).
pub fn signed_angle(from: &Vec2, to: &Vec2) -> f64 {
    let cross = from.x * to.y - from.y * to.x;
    cross.atan2(from.dot(to))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_length() {
        assert!(StadiumTable::new(0.0).is_err());
        assert!(StadiumTable::new(-1.0).is_err());
        assert!(StadiumTable::new(f64::NAN).is_err());
    }

    #[test]
    fn arclength_roundtrip_and_side_equations() {
        let table = StadiumTable::new(2.0).unwrap();
        let per = table.perimeter();
        for i in 0..1000 {
            let s = per * (i as f64 + 0.5) / 1000.0;
            let bp = table.point_at_arclength(s);
            assert!((bp.arclength(&table) - s).abs() < 1e-12);
            let q = bp.position(&table);
            let residual = match bp.side {
                Side::L => q.norm() - 1.0,
                Side::R => (q - table.right_center()).norm() - 1.0,
                Side::T => q.y - 1.0,
                Side::B => q.y + 1.0,
            };
            assert!(residual.abs() < 1e-12);
            assert!((bp.inward_normal().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn junction_positions_match_arclength() {
        let table = StadiumTable::new(3.0).unwrap();
        for c in Corner::JUNCTIONS {
            let s = table.junction_arclength(c).unwrap();
            let q = table.point_at_arclength(s).position(&table);
            assert!((q - table.corner_position(c)).norm() < 1e-12, "{c}");
        }
    }

    #[test]
    fn theta_convention_is_counterclockwise() {
        let table = StadiumTable::new(2.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // upper-left rectangle vertex heading right
        let bp = BoundaryPoint::from_cartesian(&table, Side::L, Vec2::new(-h, h));
        let pp = PhasePoint::new(bp, std::f64::consts::FRAC_PI_4).unwrap();
        let d = pp.direction();
        assert!((d - Vec2::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_tangent_angle() {
        let table = StadiumTable::new(1.0).unwrap();
        let bp = table.point_at_arclength(0.3);
        assert!(PhasePoint::new(bp, FRAC_PI_2).is_err());
        assert!(BoundaryPoint::new(&table, Side::T, 1.5).is_err());
    }
}
