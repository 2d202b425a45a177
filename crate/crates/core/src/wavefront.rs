//! Wave-front curvature along billiard orbits and the defocusing check.
//!
//! Sign conventions follow Chernov and Markarian, *Chaotic Billiards*:
//! curvature `G > 0` for a diverging front, `G < 0` for a converging one.
//! Free flight of length `tau` maps `G` to `G / (1 + tau G)`. A collision
//! maps `G-` to `G+ = G- + 2K / cos(theta)`, where `K` is the boundary
//! curvature, positive for dispersing walls. Flats have `K = 0`; the unit
//! semicircles are focusing with `K = -1`, so `G+ = G- - 2 / cos(theta)`.
//!
//! A converging front with `G+ < 0` focuses at distance `-1/G+` after the
//! collision. Between two semicircle collisions separated by total flight
//! time `tau` (flats in between leave `G` unchanged), the front expands when
//! `|1 + tau G+| > 1`, which holds when `G+ < -2/tau`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::dynamics::{next_collision_from, reflect};
use crate::error::DynamicsError;
use crate::geometry::{rotate, signed_angle, Corner, PhasePoint, Side, StadiumTable, Vec2};

/// Relative tolerance for `1 + tau G = 0` (focus exactly at a collision).
const FOCUS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Curvature {
    /// Finite curvature; `Finite(0.0)` is a flat front.
    Finite(f64),
    /// Front emitted from a point (divergent curvature, zero focal distance).
    PointSource,
}

impl Curvature {
    pub fn flat() -> Self {
        Curvature::Finite(0.0)
    }

    /// Signed distance from the front to its focus (`-1/G`); zero for a point source.
    pub fn focal_distance(&self) -> f64 {
        match *self {
            Curvature::Finite(g) => -1.0 / g,
            Curvature::PointSource => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FrontTag {
    PreCollision,
    PostCollision,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WaveFrontState {
    pub curvature: Curvature,
    /// Index of the collision the state is attached to.
    pub collision: usize,
    pub tag: FrontTag,
}

impl WaveFrontState {
    pub fn point_source() -> Self {
        Self {
            curvature: Curvature::PointSource,
            collision: 0,
            tag: FrontTag::PostCollision,
        }
    }

    pub fn with_curvature(g: f64) -> Self {
        Self {
            curvature: Curvature::Finite(g),
            collision: 0,
            tag: FrontTag::PreCollision,
        }
    }
}

/// Post-collision curvature at `collision` (given by its outgoing phase point).
pub fn curvature_reflect(
    state: WaveFrontState,
    collision: &PhasePoint,
) -> Result<WaveFrontState, DynamicsError> {
    let cos = collision.theta.cos();
    if cos < crate::geometry::SINGULAR_TOL {
        return Err(DynamicsError::Grazing(cos));
    }
    let curvature = match (collision.point.side, state.curvature) {
        (side, c) if side.is_flat() => c,
        (_, Curvature::Finite(g)) => Curvature::Finite(g - 2.0 / cos),
        // focal distance r -> r / (1 - 2r / cos) stays zero
        (_, Curvature::PointSource) => Curvature::PointSource,
    };
    Ok(WaveFrontState {
        curvature,
        collision: state.collision,
        tag: FrontTag::PostCollision,
    })
}

/// Free flight over time `tau`: `G -> G / (1 + tau G)`.
pub fn curvature_flight(state: WaveFrontState, tau: f64) -> Result<WaveFrontState, DynamicsError> {
    let curvature = match state.curvature {
        Curvature::PointSource => Curvature::Finite(1.0 / tau),
        Curvature::Finite(g) => {
            let denom = 1.0 + tau * g;
            if denom.abs() <= FOCUS_TOL * (1.0 + (tau * g).abs()) {
                return Err(DynamicsError::FocusAtCollision);
            }
            Curvature::Finite(g / denom)
        }
    };
    Ok(WaveFrontState {
        curvature,
        collision: state.collision + 1,
        tag: FrontTag::PreCollision,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Expansion {
    Strict,
    Equality,
    Violation,
}

/// Classifies `|1 + tau G+|` against 1 with absolute tolerance `tol`.
pub fn classify_expansion(g_plus: Curvature, tau: f64, tol: f64) -> Expansion {
    let factor = match g_plus {
        Curvature::PointSource => return Expansion::Strict,
        Curvature::Finite(g) => (1.0 + tau * g).abs(),
    };
    if factor > 1.0 + tol {
        Expansion::Strict
    } else if factor >= 1.0 - tol {
        Expansion::Equality
    } else {
        Expansion::Violation
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DefocusingViolation {
    pub source: String,
    pub collision: usize,
    pub tau: f64,
    pub g_plus: f64,
    pub factor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefocusingReport {
    pub l: f64,
    pub seed: u64,
    pub segments: usize,
    pub strict: usize,
    pub equality: usize,
    pub violations: Vec<DefocusingViolation>,
    /// Smallest observed `|1 + tau G+|`.
    pub min_factor: f64,
    /// Orbits abandoned at a corner, tangency or exact focus.
    pub abandoned: usize,
}

impl DefocusingReport {
    pub fn strict_fraction(&self) -> f64 {
        self.strict as f64 / self.segments.max(1) as f64
    }

    pub fn equality_fraction(&self) -> f64 {
        self.equality as f64 / self.segments.max(1) as f64
    }
}

/// Tolerance used by [`defocusing_report`] for the equality band.
pub const EXPANSION_TOL: f64 = 1e-9;
const MAX_COLLISIONS_PER_SOURCE: usize = 40;
const SOURCES_PER_CHUNK: u64 = 64;

struct SourceOutcome {
    segments: usize,
    strict: usize,
    equality: usize,
    violations: Vec<DefocusingViolation>,
    min_factor: f64,
    abandoned: bool,
}

/// Launches point-source fronts from the six corners in random directions
/// and checks `|1 + tau G+| >= 1` over successive semicircle collisions.
///
/// Deterministic in `(table, samples, seed)`: each source draws from its own stream.
pub fn defocusing_report(table: &StadiumTable, samples: usize, seed: u64) -> DefocusingReport {
    let samples = samples.max(1);
    let mut report = DefocusingReport {
        l: table.l(),
        seed,
        segments: 0,
        strict: 0,
        equality: 0,
        violations: Vec::new(),
        min_factor: f64::INFINITY,
        abandoned: 0,
    };
    let mut next_source = 0u64;
    while report.segments < samples {
        let chunk: Vec<SourceOutcome> = (next_source..next_source + SOURCES_PER_CHUNK)
            .into_par_iter()
            .map(|i| run_source(table, seed, i))
            .collect();
        next_source += SOURCES_PER_CHUNK;
        for o in chunk {
            if report.segments >= samples {
                break;
            }
            report.segments += o.segments;
            report.strict += o.strict;
            report.equality += o.equality;
            report.violations.extend(o.violations);
            report.min_factor = report.min_factor.min(o.min_factor);
            report.abandoned += o.abandoned as usize;
        }
    }
    report
}

fn run_source(table: &StadiumTable, seed: u64, index: u64) -> SourceOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let corner = Corner::ALL[(index % 6) as usize];
    let origin = table.corner_position(corner);
    let direction = if corner.is_center() {
        let a = rng.gen_range(0.0..2.0 * PI);
        Vec2::new(a.cos(), a.sin())
    } else {
        let inward = if matches!(corner, Corner::B | Corner::R) {
            Vec2::new(0.0, -1.0)
        } else {
            Vec2::new(0.0, 1.0)
        };
        let psi = rng.gen_range(-FRAC_PI_2 + 1e-6..FRAC_PI_2 - 1e-6);
        rotate(&inward, psi)
    };
    let mut out = SourceOutcome {
        segments: 0,
        strict: 0,
        equality: 0,
        violations: Vec::new(),
        min_factor: f64::INFINITY,
        abandoned: false,
    };

    let mut front = WaveFrontState::point_source();
    let mut pos = origin;
    let mut dir = direction;
    let mut from: Option<Side> = None;
    // post-collision curvature at the last arc collision, and flight time since
    let mut last_arc: Option<(Curvature, f64)> = None;

    for k in 0..MAX_COLLISIONS_PER_SOURCE {
        let seg = match next_collision_from(table, pos, dir, from) {
            Ok(s) if !s.near_singular => s,
            _ => {
                out.abandoned = true;
                break;
            }
        };
        let arrived = match curvature_flight(front, seg.tau) {
            Ok(f) => f,
            Err(_) => {
                out.abandoned = true;
                break;
            }
        };
        if let Some((_, ref mut tau)) = last_arc {
            *tau += seg.tau;
        }
        let normal = seg.end.inward_normal();
        let Ok(outgoing) = reflect(&dir, &normal) else {
            out.abandoned = true;
            break;
        };
        let pp = PhasePoint {
            point: seg.end,
            theta: signed_angle(&normal, &outgoing),
        };
        if seg.end.side.is_arc() {
            if let Some((g_plus, tau)) = last_arc {
                out.segments += 1;
                let factor = match g_plus {
                    Curvature::Finite(g) => (1.0 + tau * g).abs(),
                    Curvature::PointSource => f64::INFINITY,
                };
                out.min_factor = out.min_factor.min(factor);
                match classify_expansion(g_plus, tau, EXPANSION_TOL) {
                    Expansion::Strict => out.strict += 1,
                    Expansion::Equality => out.equality += 1,
                    Expansion::Violation => out.violations.push(DefocusingViolation {
                        source: format!("{corner}#{index}"),
                        collision: k,
                        tau,
                        g_plus: match g_plus {
                            Curvature::Finite(g) => g,
                            Curvature::PointSource => f64::INFINITY,
                        },
                        factor,
                    }),
                }
            }
        }
        front = match curvature_reflect(arrived, &pp) {
            Ok(f) => f,
            Err(_) => {
                out.abandoned = true;
                break;
            }
        };
        if seg.end.side.is_arc() {
            last_arc = Some((front.curvature, 0.0));
        }
        pos = seg.end.position(table);
        dir = outgoing;
        from = Some(seg.end.side);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryPoint;

    fn arc_point(table: &StadiumTable, theta: f64) -> PhasePoint {
        PhasePoint::new(BoundaryPoint::new(table, Side::L, PI).unwrap(), theta).unwrap()
    }

    #[test]
    fn flat_collision_keeps_curvature() {
        let t = StadiumTable::new(2.0).unwrap();
        let pp = PhasePoint::new(BoundaryPoint::new(&t, Side::T, 1.0).unwrap(), 0.4).unwrap();
        for g in [-3.0, 0.0, 0.7] {
            let out = curvature_reflect(WaveFrontState::with_curvature(g), &pp).unwrap();
            assert_eq!(out.curvature, Curvature::Finite(g));
        }
    }

    #[test]
    fn parallel_beam_focuses_at_mirror_distance() {
        let t = StadiumTable::new(2.0).unwrap();
        for theta in [0.0, 0.3, -0.9, 1.2] {
            let out = curvature_reflect(WaveFrontState::with_curvature(0.0), &arc_point(&t, theta))
                .unwrap();
            let t_star = out.curvature.focal_distance();
            assert!((t_star - theta.cos() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flight_identities() {
        let f = curvature_flight(WaveFrontState::with_curvature(0.0), 3.0).unwrap();
        assert_eq!(f.curvature, Curvature::Finite(0.0));
        let tau0 = 1.7;
        let f = curvature_flight(WaveFrontState::with_curvature(-1.0 / (2.0 * tau0)), tau0).unwrap();
        match f.curvature {
            Curvature::Finite(g) => assert!((g + 1.0 / tau0).abs() < 1e-12),
            _ => panic!(),
        }
        let f = curvature_flight(WaveFrontState::point_source(), 2.5).unwrap();
        assert_eq!(f.curvature, Curvature::Finite(0.4));
        assert_eq!(
            curvature_flight(WaveFrontState::with_curvature(-0.5), 2.0),
            Err(DynamicsError::FocusAtCollision)
        );
    }

    #[test]
    fn axial_front_defocuses_before_midpoint() {
        // point source at (-1,0), flight 4 to (3,0), reflect, next flight 4
        let t = StadiumTable::new(2.0).unwrap();
        let arrived = curvature_flight(WaveFrontState::point_source(), 4.0).unwrap();
        let hit = PhasePoint::new(BoundaryPoint::new(&t, Side::R, 0.0).unwrap(), 0.0).unwrap();
        let post = curvature_reflect(arrived, &hit).unwrap();
        assert_eq!(post.curvature, Curvature::Finite(-1.75));
        assert!(post.curvature.focal_distance() < 2.0);
        assert_eq!(classify_expansion(post.curvature, 4.0, EXPANSION_TOL), Expansion::Strict);
    }

    #[test]
    fn same_arc_fixed_point_is_equality() {
        // source at the midpoint of the previous chord of a same-arc run
        let t = StadiumTable::new(2.0).unwrap();
        for theta in [0.2, 0.8, 1.3] {
            let c = f64::cos(theta);
            let arrived = curvature_flight(WaveFrontState::point_source(), c).unwrap();
            let post = curvature_reflect(arrived, &arc_point(&t, theta)).unwrap();
            assert!((post.curvature.focal_distance() - c).abs() < 1e-9);
            assert_eq!(
                classify_expansion(post.curvature, 2.0 * c, EXPANSION_TOL),
                Expansion::Equality
            );
        }
    }

    #[test]
    fn violation_is_detected() {
        assert_eq!(
            classify_expansion(Curvature::Finite(-0.2), 1.0, EXPANSION_TOL),
            Expansion::Violation
        );
    }

    #[test]
    fn small_report_is_deterministic() {
        let t = StadiumTable::new(2.0).unwrap();
        let a = defocusing_report(&t, 500, 7);
        let b = defocusing_report(&t, 500, 7);
        assert_eq!(a.segments, b.segments);
        assert_eq!(a.strict, b.strict);
        assert_eq!(a.min_factor, b.min_factor);
        assert!(a.violations.is_empty());
    }
}
