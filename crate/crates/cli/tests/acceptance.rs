//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tnlab_core::config::{is_compact, perturbed_preset, preset, Perturbation, PRESETS, TORUS_T0};
use tnlab_core::geometry::geodesic::integrate_geodesic;
use tnlab_core::geometry::tube::tube_volume_density;
use tnlab_core::geometry::{FlatFoliation, FlatQuotient};
use tnlab_core::surgery::{assemble_and_verify, moser_normalize, Density, GlueMap, LDDBDSpec, SURGERY_PRESETS};
use tnlab_core::transnormal::{build_transnormal_function, classify};
use tnlab_core::verify::{
    bundle_identity_report, isoparametric_report, tube_curvature_check, cosine_radius_demo, sample_points,
    transnormality_report, transnormality_report_on, VerifyOptions,
};
use tnlab_core::{
    BaseSpec, BundleSpec, BundleTotalSpace, Foil, LoopCurve, ManifoldModel, Point, Side, SystemType, Tangent,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pt(x: f64, y: f64) -> Point {
    Point::from_vec(vec![x, y])
}

fn tnlab(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_tnlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--no-timestamp")
        .output()
        .expect("running tnlab");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap_or_default()).unwrap_or(Value::Null)
}

fn expected_type(name: &str) -> (&'static str, SystemType) {
    match name {
        "plane" => ("Planar", SystemType::Planar),
        "cylinder" => ("Cylindrical", SystemType::Cylindrical),
        "mobius" => ("TwistedCylindrical", SystemType::TwistedCylindrical),
        "torus" => ("Toric", SystemType::Toric),
        "klein" => ("KleinBottled", SystemType::KleinBottled),
        "sphere" => ("Spherical", SystemType::Spherical),
        "rp2" => ("RealProjective", SystemType::RealProjective),
        _ => unreachable!(),
    }
}

fn c1_presets_classify() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    for name in PRESETS {
        let out = dir.path().join(name);
        let (code, err) = tnlab(&["classify", "--preset", name], &out);
        let want = if is_compact(name) { 0 } else { 2 };
        check(code == want, || format!("{name}: exit {code}, expected {want}: {err}"))?;
        let d = json(&out.join("descriptor.json"));
        let ty = expected_type(name);
        check(d["type"] == ty.0, || format!("{name}: type {}", d["type"]))?;
        let (n_sr, n_s, finite) = ty.1.signature();
        check(d["N_SR"] == n_sr && d["N_S"] == n_s, || format!("{name}: N_SR {} N_S {}", d["N_SR"], d["N_S"]))?;
        check(d["D"].is_f64() == finite && (finite || d["D"] == "inf"), || format!("{name}: D = {}", d["D"]))?;
        let t = d["T"].as_f64();
        match name {
            "sphere" => check(t.is_some_and(|t| (t - PI).abs() < 1e-3), || format!("sphere T = {t:?}"))?,
            "torus" => check(t.is_some_and(|t| (t - TORUS_T0).abs() < 1e-3), || format!("torus T = {t:?}"))?,
            _ => {}
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("7 presets in {secs:.1} s"))
}

fn c2_special_foil_count() -> Outcome {
    let mut n = 0;
    for name in PRESETS {
        let cfg = preset(name).map_err(|e| e.to_string())?;
        let (m, seed) = cfg.build().map_err(|e| e.to_string())?;
        let d = classify(&m, &seed, &cfg.classify_options(&m)).map_err(|e| e.to_string())?;
        check(d.n_c() <= 2, || format!("{name}: N_C = {}", d.n_c()))?;
        n += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for name in ["torus", "klein", "sphere", "rp2"] {
        for _ in 0..20 {
            let p = Perturbation {
                amplitude: rng.random_range(0.0..0.1),
                mode: 2 * rng.random_range(1..=3),
                phase: rng.random_range(0.0..2.0 * PI),
            };
            let cfg = perturbed_preset(name, p).map_err(|e| e.to_string())?;
            let (m, seed) = cfg.build().map_err(|e| e.to_string())?;
            let d = classify(&m, &seed, &cfg.classify_options(&m)).map_err(|e| format!("{name} {p:?}: {e}"))?;
            check(d.n_c() <= 2, || format!("{name} {p:?}: N_C = {}", d.n_c()))?;
            d.check_consistency().map_err(|e| format!("{name} {p:?}: {e}"))?;
            n += 1;
        }
    }
    Ok(format!("N_C <= 2 on {n} systems"))
}

fn c3_functions_transnormal() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in PRESETS {
        let cfg = preset(name).map_err(|e| e.to_string())?;
        let (m, seed) = cfg.build().map_err(|e| e.to_string())?;
        let d = classify(&m, &seed, &cfg.classify_options(&m)).map_err(|e| e.to_string())?;
        let tf = build_transnormal_function(&d, &m).map_err(|e| e.to_string())?;
        let r = transnormality_report(&tf, &VerifyOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        check(r.pass && r.profile_pass(), || {
            format!("{name}: spread {:.2e}, profile error {:?}", r.max_spread, r.profile_max_error)
        })?;
        worst = worst.max(r.max_spread).max(r.profile_max_error.unwrap_or(0.0));
    }
    Ok(format!("worst spread or profile error {worst:.2e}"))
}

fn c4_bundle_identities() -> Outcome {
    let circle = BaseSpec::Circle { length: 2.0 * PI, metric: 1.0 };
    let specs = [
        ("trivial k=1", BundleSpec::trivial(circle.clone(), 1)),
        ("trivial k=2", BundleSpec::trivial(circle.clone(), 2)),
        ("trivial k=3", BundleSpec::trivial(circle, 3)),
        ("mobius", BundleSpec::mobius(PI)),
        ("omega=0.3", BundleSpec::twisted_plane(2.0 * PI, 0.3)),
    ];
    let mut worst: f64 = 0.0;
    for (label, spec) in specs {
        let r = bundle_identity_report(&spec, 1000, 1e-3, 0).map_err(|e| format!("{label}: {e}"))?;
        check(r.pass, || {
            format!(
                "{label}: grad {:.2e}/{:.2e}, laplacian {:.2e}/{:.2e}, H {:.2e}",
                r.max_grad_error_analytic,
                r.max_grad_error_fd,
                r.max_laplacian_error_analytic,
                r.max_laplacian_error_fd,
                r.max_mean_curvature_error
            )
        })?;
        check(r.max_grad_error_analytic <= 1e-6 && r.max_laplacian_error_analytic <= 1e-6, || {
            format!("{label}: analytic identities off")
        })?;
        worst = worst.max(r.max_mean_curvature_error);
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (code, err) = tnlab(&["bundle", "verify", "--rank", "2", "--omega", "0.3"], dir.path());
    check(code == 0, || format!("cli exit {code}: {err}"))?;
    check(json(&dir.path().join("bundle_report.json"))["pass"] == true, || "cli report not passing".into())?;
    Ok(format!("5 bundles, worst sphere-bundle H error {worst:.2e}"))
}

fn c5_geodesics() -> Outcome {
    let sphere = preset("sphere").and_then(|c| c.build()).map_err(|e| e.to_string())?.0;
    let start = pt(PI / 2.0, 0.3);
    let path = integrate_geodesic(&sphere, &start, &Tangent::from_vec(vec![-1.0, 0.0]), 2.0 * PI, 1e-2)
        .map_err(|e| e.to_string())?;
    let (p, _) = path.endpoint_canonical(&sphere);
    let miss = sphere.local_distance(&p, &start);
    check(miss < 1e-6, || format!("great circle misses by {miss:.2e}"))?;
    let mut drift = path.max_drift;
    let oblique = Tangent::from_vec(vec![0.6, 0.8 / 1.1f64.sin()]);
    drift = drift.max(integrate_geodesic(&sphere, &pt(1.1, 0.0), &oblique, 10.0, 1e-2).map_err(|e| e.to_string())?.max_drift);
    for name in ["torus", "klein", "rp2"] {
        let m = preset(name).and_then(|c| c.build()).map_err(|e| e.to_string())?.0;
        let v = Tangent::from_vec(vec![0.6, 0.8]);
        let v = &v / m.norm(&pt(0.7, 0.3), &v);
        drift = drift.max(integrate_geodesic(&m, &pt(0.7, 0.3), &v, 10.0, 1e-2).map_err(|e| e.to_string())?.max_drift);
    }
    check(drift <= 1e-8, || format!("energy drift {drift:.2e}"))?;
    Ok(format!("closure {miss:.1e}, drift {drift:.1e}"))
}

fn c6_tubes() -> Outcome {
    let plane = ManifoldModel::Flat(
        FlatQuotient::new(vec![], FlatFoliation::Radial { center: [0.0, 0.0] }).map_err(|e| e.to_string())?,
    );
    let cyl = preset("cylinder").and_then(|c| c.build()).map_err(|e| e.to_string())?.0;
    let sphere = preset("sphere").and_then(|c| c.build()).map_err(|e| e.to_string())?.0;
    let waist = Foil::regular_loop(&cyl, LoopCurve::line(pt(0.0, 0.0), Tangent::from_vec(vec![2.0 * PI, 0.0])), 32)
        .map_err(|e| e.to_string())?;
    let circle = Foil::regular_loop(&plane, LoopCurve::circle([0.0, 0.0], 1.0), 32).map_err(|e| e.to_string())?;
    let equator =
        Foil::regular_loop(&sphere, LoopCurve::line(pt(PI / 2.0, 0.0), Tangent::from_vec(vec![0.0, 2.0 * PI])), 64)
            .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.4, 0.8, 1.2] {
        for s in [0.0, 0.3, 0.7] {
            let e1 = (tube_volume_density(&cyl, &waist, Side::Positive, t, s).map_err(|e| e.to_string())? - 1.0).abs();
            let e2 = (tube_volume_density(&plane, &circle, Side::Positive, t, s).map_err(|e| e.to_string())? - (1.0 + t)).abs();
            let e3 = (tube_volume_density(&sphere, &equator, Side::Positive, t, s).map_err(|e| e.to_string())? - t.cos()).abs();
            worst = worst.max(e1).max(e2).max(e3);
        }
    }
    check(worst <= 1e-6, || format!("density error {worst:.2e}"))?;
    let height = |p: &Point| p[1];
    let radius = |p: &Point| p.norm();
    let colat = |p: &Point| p[0];
    let checks: [(&str, &ManifoldModel, &Foil, &(dyn Fn(&Point) -> f64 + Sync)); 3] =
        [("cylinder", &cyl, &waist, &height), ("plane", &plane, &circle, &radius), ("sphere", &sphere, &equator, &colat)];
    for (name, m, foil, level) in checks {
        let r = tube_curvature_check(m, foil, Side::Positive, level, &[0.1, 0.5, 1.0], 1e-3).map_err(|e| format!("{name}: {e}"))?;
        check(r.pass, || format!("{name}: tube/level curvature residual {:.2e}", r.max_spread))?;
    }
    Ok(format!("density error {worst:.1e}; tube and level curvatures agree on 3 models"))
}

fn c7_moser() -> Outcome {
    let rho0: Density = Arc::new(|_| 1.0);
    let rho1: Density = Arc::new(|x: f64| 1.0 + 0.5 * x.cos());
    let m = moser_normalize(1, rho0, rho1, 2.0 * PI).map_err(|e| e.to_string())?;
    check(m.pushforward_error <= 1e-8, || format!("pushforward error {:.2e}", m.pushforward_error))?;
    check(m.min_lift_derivative > 0.0, || "lift is not monotone".into())?;
    check(m.report().identity_at_start, || "chi_0 is not the identity".into())?;
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        for j in 0..256 {
            let x = 2.0 * PI * j as f64 / 256.0;
            let dchi = m.chi_t_derivative(t, x);
            check(dchi > 0.0, || format!("chi_{t} has derivative {dchi:.2e} at {x:.3}"))?;
        }
    }
    // closed form: x = chi + 0.5 sin(chi) for rho0 = 1 and base point 0
    let mut worst: f64 = 0.0;
    for i in 0..64 {
        let x = 2.0 * PI * i as f64 / 64.0;
        let c = m.chi(x);
        worst = worst.max((c + 0.5 * c.sin() - x).abs());
    }
    check(worst <= 1e-8, || format!("closed-form mismatch {worst:.2e}"))?;
    Ok(format!("pushforward error {:.1e}, closed form {worst:.1e}", m.pushforward_error))
}

fn c8_surgery() -> Outcome {
    let tol = 1e-3;
    let mut summary = Vec::new();
    for name in SURGERY_PRESETS {
        let spec = LDDBDSpec::preset(name).map_err(|e| e.to_string())?;
        let r = assemble_and_verify(&spec, tol).map_err(|e| format!("{name}: {e}"))?;
        check(r.pass, || {
            format!(
                "{name}: std(H) {:.2e}, closure {:.2e}, spread {:.2e}, mu flat {:.2e}",
                r.max_std_h, r.closure_max_residual, r.isoparametric_spread, r.mu_flat_error
            )
        })?;
        check(r.max_std_h_before > 1e-2, || format!("{name}: std(H) before rescaling {:.2e}", r.max_std_h_before))?;
        check(r.max_std_h <= tol && r.closure_max_residual <= tol, || {
            format!("{name}: std(H) {:.2e}, closure {:.2e}", r.max_std_h, r.closure_max_residual)
        })?;
        if name == "klein-two-mobius" {
            let sup = r.sup_abs_h.unwrap_or(f64::INFINITY);
            check(r.minimal_case && sup <= tol, || format!("{name}: sup|H| = {sup:.2e}"))?;
        }
        summary.push(format!("{name} {:.2}->{:.0e}", r.max_std_h_before, r.max_std_h));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (code, err) = tnlab(&["surgery", "run", "--preset", "sphere-two-disks"], dir.path());
    check(code == 0, || format!("cli exit {code}: {err}"))?;
    for f in ["surgery_report.json", "neck.csv", "moser.json", "verification.json"] {
        check(dir.path().join(f).exists(), || format!("missing {f}"))?;
    }
    Ok(summary.join(", "))
}

fn c9_cosine_demo() -> Outcome {
    let o = cosine_radius_demo(&VerifyOptions::default()).map_err(|e| e.to_string())?;
    check(o.transnormal_pass, || format!("cos r not transnormal: {:.2e}", o.transnormality.max_spread))?;
    check(!o.isoparametric_pass, || "cos r reported isoparametric".into())?;
    let gap = o.h_inner - o.h_outer;
    check(gap > 10.0, || format!("H gap {gap:.2}"))?;
    check(o.top_bin_h_range > 10.0, || format!("top bin H range {:.2}", o.top_bin_h_range))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (code, err) = tnlab(&["demo-remark34"], dir.path());
    check(code == 3, || format!("cli exit {code}: {err}"))?;
    for f in ["cosine_transnormality.json", "cosine_isoparametric.json"] {
        check(dir.path().join(f).exists(), || format!("missing {f}"))?;
    }
    Ok(format!("H {:.2} vs {:.2} on one level, exit 3", o.h_inner, o.h_outer))
}

fn c10_negative_controls() -> Outcome {
    let opts = VerifyOptions::default();
    let sphere = preset("sphere").and_then(|c| c.build()).map_err(|e| e.to_string())?.0;
    let points = sample_points(&sphere, opts.n_samples, 0);
    let bumpy = |p: &Point| p[0].cos() + 0.1 * p[0].sin().powi(2) * (2.0 * p[1]).cos();
    let r = transnormality_report_on(&sphere, &bumpy, None, &points, &opts).map_err(|e| e.to_string())?;
    check(!r.pass, || "perturbed sphere function passed transnormality".into())?;

    let cfg = preset("sphere").map_err(|e| e.to_string())?;
    let (m, seed) = cfg.build().map_err(|e| e.to_string())?;
    let d = classify(&m, &seed, &cfg.classify_options(&m)).map_err(|e| e.to_string())?;
    let mut tf = build_transnormal_function(&d, &m).map_err(|e| e.to_string())?;
    tf.evaluator = Arc::new(move |p: &Point| bumpy(p));
    tf.gradient = None;
    check(!isoparametric_report(&tf, &opts).map_err(|e| e.to_string())?.pass, || {
        "perturbed sphere function passed isoparametricity".into()
    })?;

    let bundle = BundleTotalSpace::new(BundleSpec::twisted_plane(2.0 * PI, 0.3)).map_err(|e| e.to_string())?;
    let bm = ManifoldModel::Bundle(bundle);
    let pts = sample_points(&bm, opts.n_samples, 0);
    let wrong = |p: &Point| p[1] * p[1] + 2.0 * p[2] * p[2];
    let r = transnormality_report_on(&bm, &wrong, None, &pts, &opts).map_err(|e| e.to_string())?;
    check(!r.pass, || "anisotropic fiber norm passed transnormality".into())?;

    let plane = ManifoldModel::Flat(
        FlatQuotient::new(vec![], FlatFoliation::Radial { center: [0.0, 0.0] }).map_err(|e| e.to_string())?,
    );
    let circle = Foil::regular_loop(&plane, LoopCurve::circle([0.0, 0.0], 1.0), 32).map_err(|e| e.to_string())?;
    let ellipse = |p: &Point| (p[0] * p[0] + 2.0 * p[1] * p[1]).sqrt();
    let r = tube_curvature_check(&plane, &circle, Side::Positive, &ellipse, &[0.1, 0.5, 1.0], 1e-3).map_err(|e| e.to_string())?;
    check(!r.pass, || "ellipse levels matched circle tubes".into())?;

    let rho: Density = Arc::new(|x: f64| 1.0 + 0.5 * x.cos());
    check(moser_normalize(1, Arc::new(|_| 1.0), Arc::new(|_| 2.0), 2.0 * PI).is_err(), || {
        "Moser accepted unequal masses".into()
    })?;
    check(moser_normalize(2, rho.clone(), rho, 2.0 * PI).is_err(), || "Moser accepted a 2-dimensional boundary".into())?;

    let mut folded = LDDBDSpec::preset("torus-two-cylinders").map_err(|e| e.to_string())?;
    folded.glue = GlueMap::MonotoneFourier { shift: 0.0, cos: vec![], sin: vec![2.0] };
    check(assemble_and_verify(&folded, 1e-3).is_err(), || "surgery accepted a non-monotone glue map".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (code, _) = tnlab(&["verify", "--preset", "sphere", "--tol", "1e-15"], dir.path());
    check(code == 4, || format!("verify with an unreachable tolerance exited {code}"))?;
    let (code, _) = tnlab(&["classify", "--preset", "nowhere"], dir.path());
    check(code == 1, || format!("unknown preset exited {code}"))?;
    Ok("8 controls rejected".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("presets classify with the expected type and widths", c1_presets_classify),
        ("at most two special foils, also under perturbation", c2_special_foil_count),
        ("built functions are transnormal with their profile", c3_functions_transnormal),
        ("squared fiber norm identities and sphere bundle curvature", c4_bundle_identities),
        ("geodesic energy drift and great-circle closure", c5_geodesics),
        ("tube volume densities and tube/level curvature", c6_tubes),
        ("Moser normalization of 1 + cos/2", c7_moser),
        ("surgery necks become isoparametric", c8_surgery),
        ("cos r is transnormal but not isoparametric", c9_cosine_demo),
        ("negative controls are rejected", c10_negative_controls),
    ];
    let mut failed = 0;
    for (i, (label, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {label} ({detail}; {secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {label} ({why}; {secs:.1} s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 10 criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
