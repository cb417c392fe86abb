use std::f64::consts::PI;

use proptest::prelude::*;
use tnlab_core::config::preset;
use tnlab_core::geometry::fd::{gradient_fd, laplace_beltrami_fd, mean_curvature_level};
use tnlab_core::geometry::foil::normal_exponential;
use tnlab_core::geometry::geodesic::integrate_geodesic;
use tnlab_core::geometry::tube::tube_volume_density;
use tnlab_core::geometry::{
    EndCondition, Fiber, FlatFoliation, FlatQuotient, IntervalKind, PlaneIsometry, Warp, WarpedProfile,
};
use tnlab_core::verify::tube_curvature_check;
use tnlab_core::{Foil, LoopCurve, ManifoldModel, Point, Side, Tangent};

fn pt(x: f64, y: f64) -> Point {
    Point::from_vec(vec![x, y])
}

fn model(name: &str) -> ManifoldModel {
    preset(name).unwrap().build().unwrap().0
}

fn plane() -> ManifoldModel {
    ManifoldModel::Flat(FlatQuotient::new(vec![], FlatFoliation::Radial { center: [0.0, 0.0] }).unwrap())
}

fn torus_2pi() -> ManifoldModel {
    ManifoldModel::Flat(
        FlatQuotient::new(
            vec![PlaneIsometry::translation(2.0 * PI, 0.0), PlaneIsometry::translation(0.0, 2.0 * PI)],
            FlatFoliation::Horizontal,
        )
        .unwrap(),
    )
}

fn equator(m: &ManifoldModel) -> Foil {
    Foil::regular_loop(m, LoopCurve::line(pt(PI / 2.0, 0.0), Tangent::from_vec(vec![0.0, 2.0 * PI])), 64).unwrap()
}

#[test]
fn metric_examples() {
    let g = model("torus").metric_at(&pt(0.4, -0.2)).unwrap();
    assert_eq!(g, nalgebra::DMatrix::identity(2, 2));
    let g = model("sphere").metric_at(&pt(PI / 2.0, 1.0)).unwrap();
    assert!((g - nalgebra::DMatrix::identity(2, 2)).norm() < 1e-15);
    let w = WarpedProfile::new(
        IntervalKind::FullLine,
        EndCondition::Open,
        EndCondition::Open,
        Fiber::Circle { length: 2.0 * PI },
        Warp::Constant { value: 2.0 },
    )
    .unwrap();
    let g = ManifoldModel::Warped(w).metric_at(&pt(0.3, 0.3)).unwrap();
    assert_eq!((g[(0, 0)], g[(1, 1)], g[(0, 1)]), (1.0, 4.0, 0.0));
}

#[test]
fn straight_line_on_plane() {
    let path = integrate_geodesic(&plane(), &pt(0.0, 0.0), &Tangent::from_vec(vec![1.0, 0.0]), 3.0, 1e-2).unwrap();
    let (p, _) = path.endpoint();
    assert!((p[0] - 3.0).abs() < 1e-12 && p[1].abs() < 1e-12);
}

#[test]
fn great_circle_closes() {
    let m = model("sphere");
    let start = pt(PI / 2.0, 0.3);
    let path = integrate_geodesic(&m, &start, &Tangent::from_vec(vec![-1.0, 0.0]), 2.0 * PI, 1e-2).unwrap();
    let (p, _) = path.endpoint_canonical(&m);
    assert!(m.local_distance(&p, &start) < 1e-6, "ended at {p:?}");
    assert!(path.max_drift <= 1e-8, "drift {}", path.max_drift);
    assert!(!path.events.is_empty());
}

#[test]
fn torus_period_closes() {
    let m = torus_2pi();
    let path = integrate_geodesic(&m, &pt(0.0, 0.0), &Tangent::from_vec(vec![0.0, 1.0]), 2.0 * PI, 1e-2).unwrap();
    let (p, _) = path.endpoint_canonical(&m);
    assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9, "{p:?}");
}

#[test]
fn oblique_geodesic_keeps_energy_on_sphere() {
    let m = model("sphere");
    let v = Tangent::from_vec(vec![0.6, 0.8 / (1.1f64).sin()]);
    let path = integrate_geodesic(&m, &pt(1.1, 0.0), &v, 10.0, 1e-2).unwrap();
    assert!(path.max_drift <= 1e-8, "drift {}", path.max_drift);
}

#[test]
fn distance_sphere_of_the_pole_is_the_equator() {
    let m = model("sphere");
    let pole = Foil::point(&m, &pt(0.0, 0.0), 32).unwrap();
    for p in normal_exponential(&m, &pole, Side::Positive, PI / 2.0).unwrap() {
        assert!(p[0].cos().abs() <= 1e-6, "{p:?}");
    }
}

#[test]
fn cylinder_waist_moves_up() {
    let m = model("cylinder");
    let waist = Foil::regular_loop(&m, LoopCurve::line(pt(0.0, 0.0), Tangent::from_vec(vec![2.0 * PI, 0.0])), 32).unwrap();
    let up = normal_exponential(&m, &waist, Side::Positive, 1.0).unwrap();
    let down = normal_exponential(&m, &waist, Side::Negative, 1.0).unwrap();
    let (hu, hd) = (up[0][1], down[0][1]);
    assert!((hu.abs() - 1.0).abs() < 1e-9 && (hu + hd).abs() < 1e-9);
    assert!(up.iter().all(|p| (p[1] - hu).abs() < 1e-9));
}

#[test]
fn mobius_core_tube_is_one_circle() {
    let m = model("mobius");
    let core = Foil::regular_loop(&m, LoopCurve::line(pt(0.0, 0.0), Tangent::from_vec(vec![PI, 0.0])), 64).unwrap();
    let up = normal_exponential(&m, &core, Side::Positive, 0.5).unwrap();
    let down = normal_exponential(&m, &core, Side::Negative, 0.5).unwrap();
    // both sides land on the same connected curve, which meets y = 0.5 and y = -0.5
    assert!(m.hausdorff(&up, &down) < 1e-6);
    assert!(up.iter().any(|p| (p[1] - 0.5).abs() < 1e-9) && up.iter().any(|p| (p[1] + 0.5).abs() < 1e-9));
    // each sheet y = +-0.5 covers the whole fundamental interval, so the curve has length 2c
    for sheet in [0.5, -0.5] {
        let mut xs: Vec<f64> = up.iter().filter(|p| (p[1] - sheet).abs() < 1e-9).map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        let gaps = xs.windows(2).map(|w| w[1] - w[0]).fold(xs[0] + PI - xs[xs.len() - 1], f64::max);
        assert!(gaps < PI / 8.0, "gap {gaps}");
    }
}

#[test]
fn finite_difference_examples() {
    let m = plane();
    let fx = |p: &Point| p[0];
    let g = gradient_fd(&fx, &m, &pt(0.3, -1.2), 1e-4).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-10 && g[1].abs() < 1e-10);
    assert!(laplace_beltrami_fd(&fx, &m, &pt(0.3, -1.2), 1e-4).unwrap().abs() < 1e-6);
    let r2 = |p: &Point| p[0] * p[0] + p[1] * p[1];
    assert!((laplace_beltrami_fd(&r2, &m, &pt(0.7, 0.2), 1e-4).unwrap() - 4.0).abs() < 1e-5);

    let s = model("sphere");
    let f = |p: &Point| p[0].cos();
    for r in [0.4, 1.0, 2.0, 2.7] {
        let p = pt(r, 0.5);
        let g = gradient_fd(&f, &s, &p, 1e-3).unwrap();
        let fv = r.cos();
        assert!((s.inner(&p, &g, &g) - (1.0 - fv * fv)).abs() < 1e-4);
        assert!((laplace_beltrami_fd(&f, &s, &p, 1e-3).unwrap() + 2.0 * fv).abs() < 1e-4);
    }
}

#[test]
fn gradient_error_is_second_order() {
    let s = model("sphere");
    let f = |p: &Point| p[0].cos() * (1.0 + 0.3 * p[1].sin());
    let p = pt(1.1, 0.7);
    let exact = Tangent::from_vec(vec![-(1.1f64).sin() * (1.0 + 0.3 * (0.7f64).sin()), (1.1f64).cos() * 0.3 * (0.7f64).cos() / (1.1f64).sin().powi(2)]);
    let err = |h: f64| (gradient_fd(&f, &s, &p, h).unwrap() - &exact).norm();
    let ratio = err(2e-2) / err(1e-2);
    assert!(ratio >= 3.5, "ratio {ratio}");
}

#[test]
fn level_mean_curvature_examples() {
    let m = plane();
    let r2 = |p: &Point| p[0] * p[0] + p[1] * p[1];
    for r in [0.5, 1.0, 2.0] {
        let h = mean_curvature_level(&r2, &m, &pt(r, 0.0), 4.0 * r * r, 4.0, 1e-4).unwrap();
        assert!((h + 1.0 / r).abs() < 1e-5, "r = {r}: {h}");
    }
    let c = model("cylinder");
    let height = |p: &Point| p[1];
    assert!(mean_curvature_level(&height, &c, &pt(1.0, 0.5), 1.0, 0.0, 1e-4).unwrap().abs() < 1e-8);
    // levels of cos r, oriented by grad f (toward the north pole): H = cot r
    let s = model("sphere");
    let f = |p: &Point| p[0].cos();
    let fv = (PI / 4.0).cos();
    let h = mean_curvature_level(&f, &s, &pt(PI / 4.0, 0.2), 1.0 - fv * fv, -2.0 * fv, 1e-4).unwrap();
    assert!((h - 1.0).abs() < 1e-5, "{h}");
}

#[test]
fn tube_densities() {
    let c = model("cylinder");
    let waist = Foil::regular_loop(&c, LoopCurve::line(pt(0.0, 0.0), Tangent::from_vec(vec![2.0 * PI, 0.0])), 16).unwrap();
    let p = plane();
    let circle = Foil::regular_loop(&p, LoopCurve::circle([0.0, 0.0], 1.0), 16).unwrap();
    let s = model("sphere");
    let eq = equator(&s);
    for t in [0.2, 0.7, 1.2] {
        for u in [0.1, 0.6] {
            assert!((tube_volume_density(&c, &waist, Side::Positive, t, u).unwrap() - 1.0).abs() < 1e-8);
            assert!((tube_volume_density(&p, &circle, Side::Positive, t, u).unwrap() - (1.0 + t)).abs() < 1e-8);
            assert!((tube_volume_density(&s, &eq, Side::Positive, t, u).unwrap() - t.cos()).abs() < 1e-8);
        }
    }
}

#[test]
fn sphere_tubes_match_level_curvature() {
    let s = model("sphere");
    let eq = equator(&s);
    let level = |p: &Point| p[0];
    for side in [Side::Positive, Side::Negative] {
        let r = tube_curvature_check(&s, &eq, side, &level, &[0.2, 0.6, 1.0, 1.3], 1e-3).unwrap();
        assert!(r.pass, "residual {}", r.max_spread);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonicalization_is_idempotent(x in -40.0f64..40.0, y in -40.0f64..40.0, which in 0usize..4) {
        let m = model(["cylinder", "mobius", "torus", "klein"][which]);
        let c = m.canonicalize(&pt(x, y));
        prop_assert_eq!(m.canonicalize(&c), c);
    }

    #[test]
    fn deck_images_share_a_canonical_form(x in -5.0f64..5.0, y in -2.0f64..2.0, which in 0usize..3) {
        let m = model(["mobius", "torus", "klein"][which]);
        let p = pt(x, y);
        let c = m.canonicalize(&p);
        for (q, _) in m.images(&p, &Tangent::zeros(2)) {
            prop_assert!(m.local_distance(&m.canonicalize(&q), &c) < 1e-9);
        }
    }
}
