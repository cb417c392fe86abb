use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use tnlab_core::surgery::{
    assemble_and_verify, blend_metric, bump, moser_normalize, mu_rescale, phi_profile, Density, LDDBDSpec,
    NeckComponent, NeckMetric, SURGERY_PRESETS,
};
use tnlab_core::Error;

fn run(name: &str) -> tnlab_core::surgery::SurgeryResult {
    let t0 = std::time::Instant::now();
    let r = assemble_and_verify(&LDDBDSpec::preset(name).unwrap(), 1e-3).unwrap();
    eprintln!(
        "{name}: {:?} before {:.3e} after {:.3e} sup {:?} closure {:.3e} iso {:.3e} mu_flat {:.3e} moser {:?}",
        t0.elapsed(),
        r.max_std_h_before,
        r.max_std_h,
        r.sup_abs_h,
        r.closure_max_residual,
        r.isoparametric_spread,
        r.mu_flat_error,
        r.moser.iter().map(|m| m.pushforward_error).collect::<Vec<_>>()
    );
    r
}

#[test]
fn torus_levels_become_minimal() {
    let r = run("torus-two-cylinders");
    assert!(r.max_std_h_before > 1e-2);
    assert!(r.max_std_h <= 1e-3);
    assert!(r.sup_abs_h.unwrap() <= 1e-3);
    assert!(r.pass);
}

#[test]
fn klein_levels_become_minimal() {
    let r = run("klein-two-mobius");
    assert!(r.sup_abs_h.unwrap() <= 1e-3);
    assert!(r.pass);
}

#[test]
fn sphere_levels_have_constant_mean_curvature() {
    let r = run("sphere-two-disks");
    assert!(r.sup_abs_h.is_none());
    assert!(r.max_std_h <= 1e-3);
    assert!(r.closure_max_residual <= 1e-3);
    assert!(r.isoparametric_spread <= 1e-3);
    assert!(r.pass);
}

#[test]
fn bump_values() {
    assert_eq!(bump(-0.5).unwrap(), 1.0);
    assert_eq!(bump(0.5).unwrap(), 0.0);
    assert!((bump(0.0).unwrap() - 0.5).abs() < 1e-15);
    assert!(matches!(bump(0.7), Err(Error::Domain(_))));
    // slope at the center: with psi(x) = exp(-1/x) the step has slope 2 at 1/2, times 3
    let h = 1e-5;
    let slope = (bump(h).unwrap() - bump(-h).unwrap()) / (2.0 * h);
    assert!((slope + 6.0).abs() < 1e-6, "slope {slope}");
}

fn constant(v: f64) -> Density {
    Arc::new(move |_| v)
}

fn component(sigma1: Density, pulled2: Density, k1: usize, k2: usize) -> NeckComponent {
    NeckComponent { length: 2.0 * PI, k1, k2, sigma1, pulled2, rescaled: false }
}

#[test]
fn blend_at_center() {
    let c = component(constant(1.0), constant(2.0), 1, 1);
    let f0 = bump(0.0).unwrap();
    let h = blend_metric(&c, 0.0, 0.3).unwrap();
    assert!((h - (f0 * 1.0 + (1.0 - f0) * 4.0)).abs() < 1e-15);
    assert_eq!(blend_metric(&c, -0.5, 0.3).unwrap(), 1.0);
    assert_eq!(blend_metric(&c, 0.5, 0.3).unwrap(), 4.0);
    assert!(blend_metric(&c, 0.9, 0.3).is_err());
}

#[test]
fn blended_caps_stay_positive() {
    let wobble: Density = Arc::new(|x: f64| 1.0 + 0.2 * x.cos());
    let c = component(constant(1.0), wobble, 2, 2);
    for i in 1..200 {
        let r = -0.66 + 1.32 * i as f64 / 200.0;
        for j in 0..32 {
            assert!(blend_metric(&c, r, 2.0 * PI * j as f64 / 32.0).unwrap() > 0.0);
        }
    }
}

#[test]
fn phi_values() {
    for r in [-0.6, -0.1, 0.0, 0.3, 0.6] {
        assert_eq!(phi_profile(r, 1, 1).unwrap(), 1.0);
    }
    assert!((phi_profile(-0.5, 2, 1).unwrap() - 0.5).abs() < 1e-15);
    assert!((phi_profile(0.5, 1, 3).unwrap() - 0.25).abs() < 1e-15);
    assert!(phi_profile(-0.7, 1, 1).is_err());
}

#[test]
fn rescale_flattens_level_densities() {
    let sigma1: Density = Arc::new(|x: f64| 1.0 + 0.1 * x.sin());
    let pulled: Density = Arc::new(|x: f64| 1.0 + 0.3 * (2.0 * x).cos());
    let neck = NeckMetric { n: 2, components: vec![component(sigma1.clone(), pulled, 1, 1)] };
    let out = mu_rescale(neck).unwrap();
    let c = &out.components[0];
    for i in 0..25 {
        let r = -0.6 + 0.05 * i as f64;
        for j in 0..16 {
            let x = 2.0 * PI * j as f64 / 16.0;
            let rho = blend_metric(c, r, x).unwrap().sqrt();
            // mu = Phi sigma1 / rho for a circle fiber
            assert!((c.mu(r, x) - sigma1(x) / rho).abs() < 1e-14);
            assert!((c.density(r, x) / sigma1(x) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn moser_identity_when_equal() {
    let rho: Density = Arc::new(|x: f64| 1.0 + 0.4 * x.cos());
    let m = moser_normalize(1, rho.clone(), rho, 2.0 * PI).unwrap();
    for i in 0..32 {
        let x = 2.0 * PI * i as f64 / 32.0;
        assert!((m.chi(x) - x).abs() < 1e-12);
        assert!((m.chi_t(0.5, x) - x).abs() < 1e-12);
    }
}

/// Dense trapezoid CDF with linear interpolation.
fn oracle_chi(rho0: &dyn Fn(f64) -> f64, rho1: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let n = 200_000;
    let h = 2.0 * PI / n as f64;
    let cum = |rho: &dyn Fn(f64) -> f64| {
        let mut c = vec![0.0];
        for i in 0..n {
            let a = i as f64 * h;
            c.push(c[i] + 0.5 * h * (rho(a) + rho(a + h)));
        }
        c
    };
    let (c0, c1) = (cum(rho0), cum(rho1));
    let i = ((x / h) as usize).min(n - 1);
    let target = c0[i] + (x - i as f64 * h) / h * (c0[i + 1] - c0[i]);
    let j = c1.partition_point(|&v| v < target).clamp(1, n);
    (j - 1) as f64 * h + (target - c1[j - 1]) / (c1[j] - c1[j - 1]) * h
}

#[test]
fn moser_matches_cdf_oracle() {
    let rho0: Density = constant(1.0);
    let rho1: Density = Arc::new(|x: f64| 1.0 + 0.5 * x.cos());
    let m = moser_normalize(1, rho0.clone(), rho1.clone(), 2.0 * PI).unwrap();
    assert!(m.pushforward_error < 1e-8, "{}", m.pushforward_error);
    assert!(m.min_lift_derivative > 0.0);
    assert_eq!(m.base_point, 0.0);
    let r = m.report();
    assert!(r.identity_at_start);
    for x in [0.3, 1.7, 3.1, 5.5] {
        assert!((m.chi(x) - oracle_chi(&*rho0, &*rho1, x)).abs() < 1e-6);
        assert_eq!(m.chi_t(0.0, x), x);
    }
}

#[test]
fn moser_recovers_rotations() {
    let a = 0.8;
    let rho0: Density = Arc::new(|x: f64| 1.0 + 0.5 * x.cos() + 0.2 * (2.0 * x).sin());
    let r0 = rho0.clone();
    let rho1: Density = Arc::new(move |x: f64| r0(x - a));
    let m = moser_normalize(1, rho0, rho1, 2.0 * PI).unwrap();
    assert!((m.base_point - a).abs() < 1e-12);
    for x in [0.0, 1.0, 4.0] {
        assert!((m.chi(x) - (x + a)).abs() < 1e-10);
    }
}

#[test]
fn moser_rejects_bad_input() {
    let one = constant(1.0);
    assert!(matches!(moser_normalize(1, one.clone(), constant(1.1), 2.0 * PI), Err(Error::Input(_))));
    assert!(matches!(moser_normalize(2, one.clone(), one, 2.0 * PI), Err(Error::NotImplemented(_))));
}

#[test]
fn surgery_rejects_bad_specs() {
    let mut spec = LDDBDSpec::preset("torus-two-cylinders").unwrap();
    spec.glue = tnlab_core::surgery::GlueMap::MonotoneFourier { shift: 0.0, cos: vec![], sin: vec![1.5] };
    assert!(matches!(assemble_and_verify(&spec, 1e-3), Err(Error::Input(_))));
    let mut spec = LDDBDSpec::preset("torus-two-cylinders").unwrap();
    spec.d2 = tnlab_core::BundleSpec::mobius(2.0 * PI);
    assert!(matches!(assemble_and_verify(&spec, 1e-3), Err(Error::Input(_))));
    let mut spec = LDDBDSpec::preset("sphere-two-disks").unwrap();
    spec.d1 = tnlab_core::BundleSpec::trivial(tnlab_core::BaseSpec::Point, 3);
    spec.d2 = spec.d1.clone();
    assert!(matches!(assemble_and_verify(&spec, 1e-3), Err(Error::NotImplemented(_))));
    assert!(LDDBDSpec::preset("nope").is_err());
    assert_eq!(SURGERY_PRESETS.len(), 3);
}

#[test]
fn unequal_base_lengths_are_rescaled_and_flagged() {
    let mut spec = LDDBDSpec::preset("torus-two-cylinders").unwrap();
    spec.d2 = tnlab_core::BundleSpec::trivial(tnlab_core::BaseSpec::Circle { length: 2.0 * PI, metric: 2.25 }, 1);
    let r = assemble_and_verify(&spec, 1e-3).unwrap();
    assert!((r.mass_rescale.unwrap() - 1.0 / 1.5).abs() < 1e-12);
    assert!(r.pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn moser_pushforward_is_exact(a1 in -0.4f64..0.4, b1 in -0.4f64..0.4, a2 in -0.2f64..0.2, shift in -1.0f64..1.0) {
        let rho0: Density = constant(1.0);
        let rho1: Density = Arc::new(move |x: f64| 1.0 + a1 * (x + shift).cos() + b1 * x.sin() + a2 * (2.0 * x).cos());
        let m = moser_normalize(1, rho0, rho1, 2.0 * PI).unwrap();
        prop_assert!(m.pushforward_error <= 1e-8);
        prop_assert!(m.min_lift_derivative > 0.0);
        prop_assert_eq!(m.chi_t(0.0, 1.234), 1.234);
    }
}
