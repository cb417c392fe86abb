use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tnlab_core::config::{preset, ManifoldConfig};
use tnlab_core::geometry::fd::gradient_fd;
use tnlab_core::geometry::geodesic::{advance, DEFAULT_STEP};
use tnlab_core::geometry::H_FD;
use tnlab_core::surgery::{assemble_and_verify, LDDBDSpec};
use tnlab_core::transnormal::{build_transnormal_function, classify as classify_system};
use tnlab_core::verify::{
    bundle_identity_report, isoparametric_report, cosine_radius_demo, transnormality_report, VerifyOptions,
};
use tnlab_core::{BundleSpec, ManifoldModel, SystemDescriptor};

use crate::output::OutDir;
use crate::{Check, March, Output, Sampling, Source, EXIT_DEMO, EXIT_HORIZON, EXIT_OK, EXIT_VERIFY_FAILED};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(source: &Source, march: &March) -> Result<ManifoldConfig> {
    let mut cfg = match (&source.preset, &source.spec) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => ManifoldConfig::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        _ => bail!("give exactly one of --preset or --spec"),
    };
    if march.dt.is_some() {
        cfg.dt = march.dt;
    }
    if march.tmax.is_some() {
        cfg.t_max = march.tmax;
    }
    Ok(cfg)
}

fn classified(cfg: &ManifoldConfig) -> Result<(ManifoldModel, SystemDescriptor)> {
    let (m, seed) = cfg.build()?;
    let d = classify_system(&m, &seed, &cfg.classify_options(&m))?;
    Ok((m, d))
}

pub fn classify(source: &Source, march: &March, output: &Output) -> Result<u8> {
    let cfg = load(source, march)?;
    let (_, d) = classified(&cfg)?;
    let out = OutDir::create(&output.out, !output.no_timestamp)?;
    out.write_json("descriptor.json", &d)?;
    println!("{} T={} D={} N_SR={} N_S={}", d.type_tag, d.t_inj, d.diameter, d.n_sr, d.n_s);
    Ok(if d.horizon_limited { EXIT_HORIZON } else { EXIT_OK })
}

pub fn build_fn(source: &Source, march: &March, output: &Output) -> Result<u8> {
    let cfg = load(source, march)?;
    let (m, d) = classified(&cfg)?;
    let tf = build_transnormal_function(&d, &m)?;
    let seed = d.seed.as_ref().context("descriptor carries no seed foil")?;
    let (p0, v0) = seed.samples.first().context("seed foil has no samples")?;
    let t_max = march.tmax.unwrap_or(if d.diameter.is_finite() { d.diameter } else { 3.0 });
    let dt = march.dt.unwrap_or(0.05);
    let f = |p: &tnlab_core::Point| tf.eval(p);
    let mut csv = String::new();
    let case = tf.case.map(|c| format!("{c:?}")).unwrap_or_else(|| "-".into());
    let _ = writeln!(csv, "# type={} case={case}", d.type_tag);
    csv.push_str("t,f,b,grad_sq\n");
    let steps = (t_max / dt).floor() as usize;
    let (mut p, mut v) = (p0.clone(), v0.clone());
    for i in 0..=steps {
        if i > 0 {
            (p, v) = advance(&m, &p, &v, dt, DEFAULT_STEP.min(dt))?;
        }
        let value = tf.eval(&p);
        // the gradient degenerates on special foils; report it as NaN there
        let grad_sq = gradient_fd(&f, &m, &p, H_FD).map(|g| m.norm(&p, &g).powi(2)).unwrap_or(f64::NAN);
        let _ = writeln!(csv, "{:.6},{value:.12e},{:.12e},{grad_sq:.12e}", i as f64 * dt, tf.profile_b.eval(value));
    }
    let out = OutDir::create(&output.out, !output.no_timestamp)?;
    out.write_bytes("function.csv", csv.as_bytes())?;
    println!("{} case {case}, profile {:?}", d.type_tag, tf.profile_b);
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
pub fn bundle_verify(
    spec: Option<&Path>,
    rank: usize,
    omega: f64,
    mobius: bool,
    length: f64,
    samples: usize,
    tol: f64,
    seed_grid: u64,
    output: &Output,
) -> Result<u8> {
    let spec: BundleSpec = match spec {
        Some(path) => serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        None if mobius => {
            if rank != 1 {
                bail!("--mobius needs --rank 1");
            }
            BundleSpec::mobius(length)
        }
        None if omega != 0.0 => {
            if rank != 2 {
                bail!("--omega needs --rank 2");
            }
            BundleSpec::twisted_plane(length, omega)
        }
        None => BundleSpec::trivial(tnlab_core::BaseSpec::Circle { length, metric: 1.0 }, rank),
    };
    let report = bundle_identity_report(&spec, samples, tol, seed_grid)?;
    let out = OutDir::create(&output.out, !output.no_timestamp)?;
    out.write_json("bundle_report.json", &report)?;
    println!(
        "rank {}: grad err {:.2e}, laplacian err {:.2e}, sphere H err {:.2e} -> {}",
        report.rank,
        report.max_grad_error_fd,
        report.max_laplacian_error_fd,
        report.max_mean_curvature_error,
        if report.pass { "pass" } else { "FAIL" }
    );
    Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

pub fn surgery(source: &Source, tol: f64, output: &Output) -> Result<u8> {
    let spec = match (&source.preset, &source.spec) {
        (Some(name), None) => LDDBDSpec::preset(name)?,
        (None, Some(path)) => serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        _ => bail!("give exactly one of --preset or --spec"),
    };
    let result = assemble_and_verify(&spec, tol)?;
    let out = OutDir::create(&output.out, !output.no_timestamp)?;
    out.write_json("surgery_report.json", &result)?;
    out.write_bytes("neck.csv", result.to_csv().as_bytes())?;
    #[derive(Serialize)]
    struct Moser<'a> {
        components: &'a [tnlab_core::surgery::MoserReport],
    }
    out.write_json("moser.json", &Moser { components: &result.moser })?;
    #[derive(Serialize)]
    struct Verification {
        max_std_h_before: f64,
        max_std_h: f64,
        sup_abs_h: Option<f64>,
        closure_max_residual: f64,
        isoparametric_spread: f64,
        tol: f64,
        pass: bool,
    }
    out.write_json(
        "verification.json",
        &Verification {
            max_std_h_before: result.max_std_h_before,
            max_std_h: result.max_std_h,
            sup_abs_h: result.sup_abs_h,
            closure_max_residual: result.closure_max_residual,
            isoparametric_spread: result.isoparametric_spread,
            tol: result.tol,
            pass: result.pass,
        },
    )?;
    println!(
        "std(H) {:.3e} -> {:.3e}, closure {:.2e} -> {}",
        result.max_std_h_before,
        result.max_std_h,
        result.closure_max_residual,
        if result.pass { "pass" } else { "FAIL" }
    );
    Ok(if result.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn options(s: &Sampling) -> VerifyOptions {
    VerifyOptions { n_samples: s.samples, n_bins: s.bins, tol: s.tol, seed_grid: s.seed_grid, ..VerifyOptions::default() }
}

pub fn verify(source: &Source, march: &March, check: Check, sampling: &Sampling, output: &Output) -> Result<u8> {
    let cfg = load(source, march)?;
    let (m, d) = classified(&cfg)?;
    let tf = build_transnormal_function(&d, &m)?;
    let opts = options(sampling);
    let out = OutDir::create(&output.out, !output.no_timestamp)?;
    let mut ok = true;
    if matches!(check, Check::Transnormality | Check::Both) {
        let r = transnormality_report(&tf, &opts)?;
        out.write_json("transnormality_report.json", &r)?;
        out.write_bytes("transnormality_profile.csv", r.to_csv().as_bytes())?;
        println!("transnormality: spread {:.2e}, profile err {:?}, pass {}", r.max_spread, r.profile_max_error, r.pass && r.profile_pass());
        ok &= r.pass && r.profile_pass();
    }
    if matches!(check, Check::Isoparametric | Check::Both) {
        let r = isoparametric_report(&tf, &opts)?;
        out.write_json("isoparametric_report.json", &r)?;
        out.write_bytes("isoparametric_profile.csv", r.to_csv().as_bytes())?;
        println!("isoparametric: spread {:.2e}, pass {}", r.max_spread, r.pass);
        ok &= r.pass;
    }
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

pub fn cosine_demo(sampling: &Sampling, output: &Output) -> Result<u8> {
    let o = cosine_radius_demo(&options(sampling))?;
    let out = OutDir::create(&output.out, !output.no_timestamp)?;
    out.write_json("cosine_transnormality.json", &o.transnormality)?;
    out.write_json("cosine_isoparametric.json", &o.isoparametricity)?;
    out.write_json("cosine_demo.json", &o)?;
    println!(
        "cos r: transnormal {}, isoparametric {}, H near 0 {:.3}, H near 2pi {:.3}",
        o.transnormal_pass, o.isoparametric_pass, o.h_inner, o.h_outer
    );
    Ok(if o.transnormal_pass && !o.isoparametric_pass { EXIT_DEMO } else { EXIT_VERIFY_FAILED })
}
