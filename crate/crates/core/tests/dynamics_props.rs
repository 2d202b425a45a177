use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use proptest::prelude::*;
use stadium_core::coding::{code_orbit, phi_regroup, CodeLetter};
use stadium_core::dynamics::{billiard_map, billiard_map_inverse, billiard_step, next_collision, orbit};
use stadium_core::geometry::rotate;
use stadium_core::wavefront::{curvature_flight, curvature_reflect, Curvature, WaveFrontState};
use stadium_core::{BoundaryPoint, PhasePoint, Side, StadiumTable, Vec2};

fn table_len() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0), Just(5.0), 0.1f64..8.0]
}

fn phase(l: f64) -> impl Strategy<Value = (f64, f64)> {
    let per = 2.0 * l + 2.0 * PI;
    (0.0..per, -1.5f64..1.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn inverse_undoes_map((l, (s, theta)) in table_len().prop_flat_map(|l| (Just(l), phase(l)))) {
        let t = StadiumTable::new(l).unwrap();
        let x = PhasePoint::from_arclength(&t, s, theta).unwrap();
        if let Ok(y) = billiard_map(&t, &x) {
            if let Ok(z) = billiard_map_inverse(&t, &y) {
                prop_assert!(z.distance(&x, &t) < 1e-9, "{x:?} -> {y:?} -> {z:?}");
            }
        }
    }

    #[test]
    fn reflection_is_specular((l, (s, theta)) in table_len().prop_flat_map(|l| (Just(l), phase(l)))) {
        let t = StadiumTable::new(l).unwrap();
        let x = PhasePoint::from_arclength(&t, s, theta).unwrap();
        if let Ok((y, seg, _)) = billiard_step(&t, &x) {
            let n = y.point.inward_normal();
            let incoming = seg.direction;
            let outgoing = y.direction();
            // equal angles with the normal, tangential component preserved
            prop_assert!((incoming.dot(&n) + outgoing.dot(&n)).abs() < 1e-12);
            let tangent = rotate(&n, FRAC_PI_2);
            prop_assert!((incoming.dot(&tangent) - outgoing.dot(&tangent)).abs() < 1e-12);
            prop_assert!(outgoing.dot(&n) > 0.0);
        }
    }

    #[test]
    fn time_reversal((l, (s, theta)) in table_len().prop_flat_map(|l| (Just(l), phase(l)))) {
        let t = StadiumTable::new(l).unwrap();
        let x = PhasePoint::from_arclength(&t, s, theta).unwrap();
        let o = orbit(&t, &x, 5);
        prop_assume!(o.is_complete());
        let last = o.steps.last().unwrap().point;
        let back = orbit(&t, &last.reversed(), 5);
        prop_assume!(back.is_complete());
        let end = back.steps.last().unwrap().point.reversed();
        prop_assert!(end.distance(&x, &t) < 1e-8);
    }

    #[test]
    fn phi_commutes_with_shift((l, (s, theta)) in table_len().prop_flat_map(|l| (Just(l), phase(l)))) {
        let t = StadiumTable::new(l).unwrap();
        let x = PhasePoint::from_arclength(&t, s, theta).unwrap();
        let c = code_orbit(&t, &x, 12);
        prop_assume!(c.as_ref().is_ok_and(|c| c.valid));
        let w = c.unwrap().word.letters;
        let full = phi_regroup(&w).unwrap();
        prop_assert_eq!(&phi_regroup(&w[1..]).unwrap()[..], &full[1..]);
    }
}

#[test]
fn same_arc_collisions_keep_theta() {
    let t = StadiumTable::new(2.0).unwrap();
    let mut checked = 0;
    for i in 0..400 {
        let x = PhasePoint::from_arclength(&t, 0.37 * i as f64, -1.4 + 0.007 * i as f64).unwrap();
        let o = orbit(&t, &x, 30);
        let pts: Vec<_> = o.points().copied().collect();
        for w in pts.windows(2) {
            if w[0].point.side.is_arc() && w[0].point.side == w[1].point.side {
                assert!((w[0].theta - w[1].theta).abs() < 1e-12);
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn appendix_rectangle_windows() {
    let t = StadiumTable::new(2.0).unwrap();
    // lower point of the left arc, moving straight up
    let lower = PhasePoint::new(BoundaryPoint::new(&t, Side::L, 5.0 * FRAC_PI_4).unwrap(), FRAC_PI_4).unwrap();
    assert!((lower.direction() - Vec2::new(0.0, 1.0)).norm() < 1e-15);
    let up = code_orbit(&t, &lower, 5).unwrap();
    let up: Vec<String> = phi_regroup(&up.word.letters).unwrap().iter().map(|x| x.to_string()).collect();
    assert_eq!(up, ["LL+", "LR", "RR+", "RL"]);

    // upper point of the left arc, moving straight down
    let upper = PhasePoint::new(BoundaryPoint::new(&t, Side::L, 3.0 * FRAC_PI_4).unwrap(), -FRAC_PI_4).unwrap();
    assert!((upper.direction() - Vec2::new(0.0, -1.0)).norm() < 1e-15);
    let down = code_orbit(&t, &upper, 5).unwrap();
    assert_eq!(down.word.letters[0], CodeLetter::LMinus);
    let down: Vec<String> = phi_regroup(&down.word.letters).unwrap().iter().map(|x| x.to_string()).collect();
    assert_eq!(down, ["LL-", "LR", "RR-", "RL"]);
}

/// Focus of the reflected pencil found by intersecting two neighbouring rays.
fn pencil_focus(t: &StadiumTable, source: Vec2, dir: Vec2, eps: f64) -> (f64, f64, PhasePoint) {
    let trace = |d: Vec2| {
        let seg = next_collision(t, source, d).unwrap();
        let n = seg.end.inward_normal();
        let out = d - 2.0 * d.dot(&n) * n;
        (seg.end_position(), out, seg.tau, seg.end)
    };
    let (p0, d0, tau, end) = trace(dir);
    let (p1, d1, _, _) = trace(rotate(&dir, eps));
    // p0 + a d0 = p1 + b d1
    let m = nalgebra::Matrix2::from_columns(&[d0, -d1]);
    let ab = m.try_inverse().unwrap() * (p1 - p0);
    let theta = stadium_core::geometry::signed_angle(&end.inward_normal(), &d0);
    (ab.x, tau, PhasePoint::new(end, theta).unwrap())
}

#[test]
fn curvature_matches_ray_pencil() {
    let t = StadiumTable::new(2.0).unwrap();
    let sources = [Vec2::new(0.3, 0.2), Vec2::new(2.5, -0.4), Vec2::new(1.0, 0.9), Vec2::new(-0.5, 0.1)];
    let mut checked = 0;
    for src in sources {
        for k in 0..24 {
            let dir = rotate(&Vec2::new(1.0, 0.0), 0.1 + k as f64 * 2.0 * PI / 24.0);
            let seg = next_collision(&t, src, dir).unwrap();
            if !seg.end.side.is_arc() || seg.end.inward_normal().dot(&dir).abs() < 0.2 {
                continue;
            }
            let (focus, tau, pp) = pencil_focus(&t, src, dir, 1e-7);
            let state = curvature_flight(WaveFrontState::point_source(), tau).unwrap();
            let state = curvature_reflect(state, &pp).unwrap();
            let Curvature::Finite(g) = state.curvature else { panic!() };
            let pencil = -1.0 / focus;
            assert!(
                (g - pencil).abs() < 1e-5 * (1.0 + g.abs()),
                "source {src:?}: curvature {g}, pencil {pencil}"
            );
            checked += 1;
        }
    }
    assert!(checked > 20);
}

#[test]
fn mid_chord_source_focuses_on_chord() {
    let t = StadiumTable::new(2.0).unwrap();
    // source at the midpoint of a chord of the left circle refocuses at the
    // midpoint of the reflected chord
    for theta in [0.2, 0.5, 0.9, 1.2] {
        let arc = BoundaryPoint::new(&t, Side::L, PI - 0.1).unwrap();
        let n = arc.inward_normal();
        let hit = arc.position(&t);
        let incoming = rotate(&(-n), theta);
        let source = hit - theta.cos() * incoming;
        let (focus, tau, _) = pencil_focus(&t, source, incoming, 1e-7);
        assert!((tau - theta.cos()).abs() < 1e-12);
        assert!((focus - theta.cos()).abs() < 1e-5, "theta {theta}: {focus}");
    }
}
