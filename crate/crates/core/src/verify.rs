//! Sampling-based verification of transnormality, isoparametricity and the
//! tube-volume identity.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{sphere_bundle_mean_curvature, BundleSpec, BundleTotalSpace};
use crate::error::{Error, Result};
use crate::geometry::fd::{gradient_fd, laplace_beltrami_fd, mean_curvature_divergence};
use crate::geometry::foil::{Foil, Side};
use crate::geometry::geodesic::{advance, DEFAULT_STEP};
use crate::geometry::tube::tube_volume_density;
use crate::geometry::{FlatFoliation, FlatQuotient, ManifoldModel, Point, EPS_REG, H_FD};
use crate::sampling::halton_box;
use crate::transnormal::{Profile, TransnormalFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub n_samples: usize,
    pub n_bins: usize,
    pub tol: f64,
    pub h_fd: f64,
    pub min_per_bin: usize,
    /// Offset into the Halton sequence; selects the sample grid.
    pub seed_grid: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { n_samples: 4096, n_bins: 64, tol: 1e-3, h_fd: H_FD, min_per_bin: 8, seed_grid: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinStat {
    pub f_lo: f64,
    pub f_hi: f64,
    pub count: usize,
    /// Mean of the tested quantity.
    pub mean: f64,
    /// Largest deviation from a quadratic fit in `f` within the bin.
    pub spread: f64,
    /// Mean of the declared profile over the bin's samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub test: String,
    pub n: usize,
    pub n_bins: usize,
    pub bins: Vec<BinStat>,
    pub max_spread: f64,
    pub tol: f64,
    pub pass: bool,
    /// Samples dropped because the gradient (nearly) vanishes there.
    pub excluded_singular: usize,
    /// Largest per-bin gap between the measured and the declared profile.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure_max_residual: Option<f64>,
    /// Range of the level mean curvature inside the bin with the largest `f`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_bin_h_range: Option<f64>,
}

impl VerificationReport {
    pub fn profile_pass(&self) -> bool {
        self.profile_max_error.is_none_or(|e| e <= self.tol)
    }

    /// Fitted profile table as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f_lo,f_hi,count,mean,spread,profile_mean\n");
        for b in &self.bins {
            let pm = b.profile_mean.map_or(String::new(), |v| format!("{v:.12e}"));
            let _ = writeln!(out, "{:.12e},{:.12e},{},{:.12e},{:.6e},{pm}", b.f_lo, b.f_hi, b.count, b.mean, b.spread);
        }
        out
    }
}

/// Deterministic sample points in the model's sampling box.
pub fn sample_points(m: &ManifoldModel, n: usize, seed_grid: u64) -> Vec<Point> {
    halton_box(&m.sample_box(), n, seed_grid)
}

/// Quadratic least-squares fit `q ~ c0 + c1 x + c2 x^2` with `x` the centered, scaled `f`.
struct QuadFit {
    center: f64,
    scale: f64,
    coef: [f64; 3],
}

impl QuadFit {
    fn new(fs: &[f64], qs: &[f64]) -> Self {
        let center = fs.iter().sum::<f64>() / fs.len() as f64;
        let half = fs.iter().map(|f| (f - center).abs()).fold(0.0, f64::max);
        let scale = if half > 0.0 { half } else { 1.0 };
        let a = DMatrix::from_fn(fs.len(), 3, |i, j| ((fs[i] - center) / scale).powi(j as i32));
        let b = DVector::from_column_slice(qs);
        let coef = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map(|c| [c[0], c[1], c[2]])
            .unwrap_or([qs.iter().sum::<f64>() / qs.len() as f64, 0.0, 0.0]);
        Self { center, scale, coef }
    }

    fn eval(&self, f: f64) -> f64 {
        let x = (f - self.center) / self.scale;
        self.coef[0] + x * (self.coef[1] + x * self.coef[2])
    }

    fn derivative(&self, f: f64) -> f64 {
        let x = (f - self.center) / self.scale;
        (self.coef[1] + 2.0 * x * self.coef[2]) / self.scale
    }
}

struct Binned {
    bins: Vec<BinStat>,
    /// Sample indices (into the sorted order) of each bin.
    members: Vec<std::ops::Range<usize>>,
    order: Vec<usize>,
}

fn bin_samples(fs: &[f64], qs: &[f64], declared: Option<&[f64]>, n_bins: usize, min_per_bin: usize) -> Result<Binned> {
    if n_bins == 0 {
        return Err(Error::Input("need at least one bin".into()));
    }
    let mut order: Vec<usize> = (0..fs.len()).collect();
    order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]).then(a.cmp(&b)));
    let n = fs.len();
    let mut bins = Vec::with_capacity(n_bins);
    let mut members = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let range = (k * n / n_bins)..((k + 1) * n / n_bins);
        if range.len() < min_per_bin {
            return Err(Error::InsufficientSamples { bin: k, count: range.len(), min: min_per_bin });
        }
        let f: Vec<f64> = order[range.clone()].iter().map(|&i| fs[i]).collect();
        let q: Vec<f64> = order[range.clone()].iter().map(|&i| qs[i]).collect();
        let fit = QuadFit::new(&f, &q);
        let spread = f.iter().zip(&q).map(|(&a, &b)| (b - fit.eval(a)).abs()).fold(0.0, f64::max);
        let count = f.len() as f64;
        bins.push(BinStat {
            f_lo: f[0],
            f_hi: f[f.len() - 1],
            count: f.len(),
            mean: q.iter().sum::<f64>() / count,
            spread,
            profile_mean: declared.map(|d| order[range.clone()].iter().map(|&i| d[i]).sum::<f64>() / count),
        });
        members.push(range);
    }
    Ok(Binned { bins, members, order })
}

fn assemble(test: &str, n: usize, binned: &Binned, tol: f64, excluded: usize) -> VerificationReport {
    let max_spread = binned.bins.iter().map(|b| b.spread).fold(0.0, f64::max);
    let profile_max_error = binned.bins[0]
        .profile_mean
        .map(|_| binned.bins.iter().map(|b| (b.mean - b.profile_mean.unwrap_or(0.0)).abs()).fold(0.0, f64::max));
    VerificationReport {
        test: test.to_string(),
        n,
        n_bins: binned.bins.len(),
        bins: binned.bins.clone(),
        max_spread,
        tol,
        pass: max_spread <= tol,
        excluded_singular: excluded,
        profile_max_error,
        closure_max_residual: None,
        top_bin_h_range: None,
    }
}

struct GradSample {
    f: f64,
    grad_sq: f64,
}

fn gradient_samples(
    m: &ManifoldModel,
    f: &(dyn Fn(&Point) -> f64 + Sync),
    points: &[Point],
    h: f64,
) -> Result<(Vec<(usize, GradSample)>, usize)> {
    let evaluated: Vec<Result<Option<GradSample>>> = points
        .par_iter()
        .map(|p| {
            let g = gradient_fd(f, m, p, h)?;
            let grad_sq = m.inner(p, &g, &g);
            if grad_sq.sqrt() <= EPS_REG {
                return Ok(None);
            }
            Ok(Some(GradSample { f: f(p), grad_sq }))
        })
        .collect();
    let mut kept = Vec::with_capacity(points.len());
    let mut excluded = 0;
    for (i, r) in evaluated.into_iter().enumerate() {
        match r? {
            Some(s) => kept.push((i, s)),
            None => excluded += 1,
        }
    }
    Ok((kept, excluded))
}

/// Bins samples by `f` and measures the spread of `|grad f|^2` within each bin.
pub fn transnormality_report_on(
    m: &ManifoldModel,
    f: &(dyn Fn(&Point) -> f64 + Sync),
    declared_b: Option<Profile>,
    points: &[Point],
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let (kept, excluded) = gradient_samples(m, f, points, opts.h_fd)?;
    let fs: Vec<f64> = kept.iter().map(|(_, s)| s.f).collect();
    let qs: Vec<f64> = kept.iter().map(|(_, s)| s.grad_sq).collect();
    let declared: Option<Vec<f64>> = declared_b.map(|b| fs.iter().map(|&x| b.eval(x)).collect());
    let binned = bin_samples(&fs, &qs, declared.as_deref(), opts.n_bins, opts.min_per_bin)?;
    Ok(assemble("transnormality", points.len(), &binned, opts.tol, excluded))
}

pub fn transnormality_report(tf: &TransnormalFunction, opts: &VerifyOptions) -> Result<VerificationReport> {
    let points = sample_points(&tf.manifold, opts.n_samples, opts.seed_grid);
    let f = |p: &Point| tf.eval(p);
    transnormality_report_on(&tf.manifold, &f, Some(tf.profile_b), &points, opts)
}

/// Bins samples by `f` and measures the spread of `Delta f`; also checks
/// `Delta f = b'/2 - H sqrt(b)` with `H = -div(grad f / |grad f|)` and `b` fitted
/// (or declared).
pub fn isoparametric_report_on(
    m: &ManifoldModel,
    f: &(dyn Fn(&Point) -> f64 + Sync),
    declared_a: Option<Profile>,
    declared_b: Option<Profile>,
    points: &[Point],
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let (kept, excluded) = gradient_samples(m, f, points, opts.h_fd)?;
    let extra: Vec<(f64, f64)> = kept
        .par_iter()
        .map(|(i, _)| {
            let p = &points[*i];
            Ok((laplace_beltrami_fd(f, m, p, opts.h_fd)?, mean_curvature_divergence(f, m, p, opts.h_fd)?))
        })
        .collect::<Result<_>>()?;
    let fs: Vec<f64> = kept.iter().map(|(_, s)| s.f).collect();
    let lap: Vec<f64> = extra.iter().map(|e| e.0).collect();
    let declared: Option<Vec<f64>> = declared_a.map(|a| fs.iter().map(|&x| a.eval(x)).collect());
    let binned = bin_samples(&fs, &lap, declared.as_deref(), opts.n_bins, opts.min_per_bin)?;
    let mut report = assemble("isoparametricity", points.len(), &binned, opts.tol, excluded);

    // b and b' from the transnormality fit of the same bins, unless declared
    let grad_sq: Vec<f64> = kept.iter().map(|(_, s)| s.grad_sq).collect();
    let mut residual: f64 = 0.0;
    for range in &binned.members {
        let idx: Vec<usize> = binned.order[range.clone()].to_vec();
        let bf = QuadFit::new(&idx.iter().map(|&i| fs[i]).collect::<Vec<_>>(), &idx.iter().map(|&i| grad_sq[i]).collect::<Vec<_>>());
        for &i in &idx {
            let (b, bp) = match declared_b {
                Some(p) => (p.eval(fs[i]), p.derivative(fs[i])),
                None => (bf.eval(fs[i]), bf.derivative(fs[i])),
            };
            let h = extra[i].1;
            residual = residual.max((lap[i] - (0.5 * bp - h * b.max(0.0).sqrt())).abs());
        }
    }
    report.closure_max_residual = Some(residual);
    if let Some(top) = binned.members.last() {
        let hs: Vec<f64> = binned.order[top.clone()].iter().map(|&i| extra[i].1).collect();
        let hi = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = hs.iter().copied().fold(f64::INFINITY, f64::min);
        report.top_bin_h_range = Some(hi - lo);
    }
    Ok(report)
}

pub fn isoparametric_report(tf: &TransnormalFunction, opts: &VerifyOptions) -> Result<VerificationReport> {
    let points = sample_points(&tf.manifold, opts.n_samples, opts.seed_grid);
    let f = |p: &Point| tf.eval(p);
    isoparametric_report_on(&tf.manifold, &f, tf.profile_a, Some(tf.profile_b), &points, opts)
}

/// Compares `d/dt log lambda_t` with `-H_t` along the normal flow of a loop foil.
/// `level` is a function whose level sets are the flowed foils; `H_t` is its
/// level mean curvature, oriented along the flow.
pub fn tube_curvature_check(
    m: &ManifoldModel,
    foil: &Foil,
    side: Side,
    level: &(dyn Fn(&Point) -> f64 + Sync),
    t_grid: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    const DT: f64 = 1e-3;
    const PARAMS: [f64; 4] = [0.05, 0.3, 0.55, 0.8];
    let curve = foil
        .curve
        .as_ref()
        .ok_or_else(|| Error::NotImplemented("tube densities need a loop foil".into()))?;
    if t_grid.iter().any(|&t| t < 2.0 * DT) {
        return Err(Error::Input(format!("flow times must be at least {}", 2.0 * DT)));
    }
    let mut bins = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let residuals: Vec<f64> = PARAMS
            .par_iter()
            .map(|&s| {
                let up = tube_volume_density(m, foil, side, t + DT, s)?.ln();
                let down = tube_volume_density(m, foil, side, t - DT, s)?.ln();
                let dlog = (up - down) / (2.0 * DT);
                let p = curve.point(s);
                let nu = crate::geometry::foil::curve_normal(m, &p, &curve.velocity(s))? * side.sign();
                let (q, v) = advance(m, &p, &nu, t, DEFAULT_STEP)?;
                let g = gradient_fd(level, m, &q, H_FD)?;
                let orient = m.inner(&q, &g, &v).signum();
                let h = orient * mean_curvature_divergence(level, m, &q, H_FD)?;
                Ok((dlog + h).abs())
            })
            .collect::<Result<_>>()?;
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        bins.push(BinStat {
            f_lo: t,
            f_hi: t,
            count: residuals.len(),
            mean: residuals.iter().sum::<f64>() / residuals.len() as f64,
            spread: worst,
            profile_mean: None,
        });
    }
    let max_spread = bins.iter().map(|b| b.spread).fold(0.0, f64::max);
    Ok(VerificationReport {
        test: "tube_curvature".into(),
        n: bins.len() * PARAMS.len(),
        n_bins: bins.len(),
        bins,
        max_spread,
        tol,
        pass: max_spread <= tol,
        excluded_singular: 0,
        profile_max_error: None,
        closure_max_residual: None,
        top_bin_h_range: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosineRadiusOutcome {
    pub transnormality: VerificationReport,
    pub isoparametricity: VerificationReport,
    pub transnormal_pass: bool,
    pub isoparametric_pass: bool,
    /// Spread of the level mean curvature inside the bin nearest `f = 1`.
    pub top_bin_h_range: f64,
    /// Mean curvature of the level `f = cos 0.1` at `r = 0.1` and at `r = 2 pi - 0.1`.
    pub h_inner: f64,
    pub h_outer: f64,
}

/// `f = cos r` on the plane: transnormal, but levels near `f = 1` mix small
/// circles around the origin with large circles near `r = 2 pi`.
pub fn cosine_radius_demo(opts: &VerifyOptions) -> Result<CosineRadiusOutcome> {
    let m = ManifoldModel::Flat(FlatQuotient::new(vec![], FlatFoliation::Radial { center: [0.0, 0.0] })?);
    let radius = 2.0 * PI + 0.5;
    let n_theta = 8usize;
    let n_r = (opts.n_samples / n_theta).max(1);
    let mut points = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_r {
        let r = radius * (i as f64 + 0.5) / n_r as f64;
        for j in 0..n_theta {
            let a = 2.0 * PI * (j as f64 + 0.25) / n_theta as f64;
            points.push(Point::from_vec(vec![r * a.cos(), r * a.sin()]));
        }
    }
    let f = |p: &Point| p.norm().cos();
    let b = Profile::CosineSquared { scale: 1.0 };
    let transnormality = transnormality_report_on(&m, &f, Some(b), &points, opts)?;
    let isoparametricity = isoparametric_report_on(&m, &f, None, Some(b), &points, opts)?;
    let h_inner = mean_curvature_divergence(&f, &m, &Point::from_vec(vec![0.1, 0.0]), opts.h_fd)?;
    let h_outer = mean_curvature_divergence(&f, &m, &Point::from_vec(vec![2.0 * PI - 0.1, 0.0]), opts.h_fd)?;
    Ok(CosineRadiusOutcome {
        h_inner,
        h_outer,
        transnormal_pass: transnormality.pass && transnormality.profile_pass(),
        isoparametric_pass: isoparametricity.pass,
        top_bin_h_range: isoparametricity.top_bin_h_range.unwrap_or(0.0),
        transnormality,
        isoparametricity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereCurvatureSample {
    pub r: f64,
    pub h: f64,
    pub expected: f64,
}

/// Checks `|grad f|^2 = 4 f` and `Delta f = 2k` for `f = |u|^2` on a bundle total space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleIdentityReport {
    pub rank: usize,
    pub n: usize,
    pub max_grad_error_analytic: f64,
    pub max_laplacian_error_analytic: f64,
    pub max_grad_error_fd: f64,
    pub max_laplacian_error_fd: f64,
    pub tol_analytic: f64,
    pub tol: f64,
    pub sphere_mean_curvature: Vec<SphereCurvatureSample>,
    pub max_mean_curvature_error: f64,
    pub pass: bool,
}

pub fn bundle_identity_report(spec: &BundleSpec, n: usize, tol: f64, seed_grid: u64) -> Result<BundleIdentityReport> {
    const TOL_ANALYTIC: f64 = 1e-6;
    let bundle = BundleTotalSpace::new(spec.clone())?;
    let k = bundle.rank();
    let m = ManifoldModel::Bundle(bundle.clone());
    let points = halton_box(&m.sample_box(), n, seed_grid);
    let b = bundle.clone();
    let f = move |p: &Point| b.fiber_norm(p).powi(2);
    let errors: Vec<[f64; 4]> = points
        .par_iter()
        .map(|p| {
            let fv = f(p);
            let g = gradient_fd(&f, &m, p, H_FD)?;
            let lap = laplace_beltrami_fd(&f, &m, p, H_FD)?;
            Ok([
                (bundle.squared_norm_grad_sq(p) - 4.0 * fv).abs(),
                (bundle.squared_norm_laplacian(p) - 2.0 * k as f64).abs(),
                (m.inner(p, &g, &g) - 4.0 * fv).abs(),
                (lap - 2.0 * k as f64).abs(),
            ])
        })
        .collect::<Result<_>>()?;
    let worst = |i: usize| errors.iter().map(|e| e[i]).fold(0.0, f64::max);
    let mut sphere_mean_curvature = Vec::new();
    for r in [0.25, 0.5, 1.0, 2.0] {
        let h = sphere_bundle_mean_curvature(spec, r)?;
        sphere_mean_curvature.push(SphereCurvatureSample { r, h, expected: -(k as f64 - 1.0) / r });
    }
    let max_mean_curvature_error = sphere_mean_curvature.iter().map(|s| (s.h - s.expected).abs()).fold(0.0, f64::max);
    let (ga, la, gf, lf) = (worst(0), worst(1), worst(2), worst(3));
    Ok(BundleIdentityReport {
        rank: k,
        n: points.len(),
        max_grad_error_analytic: ga,
        max_laplacian_error_analytic: la,
        max_grad_error_fd: gf,
        max_laplacian_error_fd: lf,
        tol_analytic: TOL_ANALYTIC,
        tol,
        pass: ga <= TOL_ANALYTIC && la <= TOL_ANALYTIC && gf <= tol && lf <= tol && max_mean_curvature_error <= tol,
        sphere_mean_curvature,
        max_mean_curvature_error,
    })
}
