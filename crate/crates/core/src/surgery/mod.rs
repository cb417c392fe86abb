//! Reassembly of a surface from two disk bundles glued along their boundary
//! circles, with the neck metric rescaled so every level has constant mean
//! curvature.

pub mod bump;
pub mod moser;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{BaseSpec, BundleSpec};
use crate::error::{Error, Result};
use crate::geometry::fd::laplace_beltrami_fd;
use crate::geometry::{ManifoldModel, Point, WarpedProfile, H_FD};
use crate::transnormal::{Case, Profile};

pub use bump::{bump, EDGE, NECK};
pub use moser::{moser_normalize, Density, MoserReport, MoserResult};

use bump::{bump_unchecked, check_neck};

/// Boundary identification, applied to every boundary circle. Coefficients are in
/// the units of the first bundle's boundary coordinate `x in [0, L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GlueMap {
    Identity,
    Rotation { shift: f64 },
    /// `x + shift + sum_m cos[m-1] cos(2 pi m x / L) + sin[m-1] sin(2 pi m x / L)`
    MonotoneFourier {
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl GlueMap {
    /// Lift and derivative on a circle of length `l1`, mapped onto one of length `l2`.
    fn eval(&self, x: f64, l1: f64, l2: f64) -> (f64, f64) {
        let scale = l2 / l1;
        let (p, dp) = match self {
            GlueMap::Identity => (x, 1.0),
            GlueMap::Rotation { shift } => (x + shift, 1.0),
            GlueMap::MonotoneFourier { shift, cos, sin } => {
                let w = 2.0 * PI / l1;
                let (mut p, mut dp) = (x + shift, 1.0);
                for (m, c) in cos.iter().enumerate() {
                    let k = w * (m + 1) as f64;
                    p += c * (k * x).cos();
                    dp -= c * k * (k * x).sin();
                }
                for (m, s) in sin.iter().enumerate() {
                    let k = w * (m + 1) as f64;
                    p += s * (k * x).sin();
                    dp += s * k * (k * x).cos();
                }
                (p, dp)
            }
        };
        (scale * p, scale * dp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LDDBDSpec {
    pub d1: BundleSpec,
    pub d2: BundleSpec,
    pub glue: GlueMap,
}

pub const SURGERY_PRESETS: [&str; 3] = ["torus-two-cylinders", "klein-two-mobius", "sphere-two-disks"];

impl LDDBDSpec {
    pub fn preset(name: &str) -> Result<Self> {
        let circle = BaseSpec::Circle { length: 2.0 * PI, metric: 1.0 };
        match name {
            "torus-two-cylinders" => Ok(Self {
                d1: BundleSpec::trivial(circle.clone(), 1),
                d2: BundleSpec::trivial(circle, 1),
                glue: GlueMap::MonotoneFourier { shift: 0.0, cos: vec![], sin: vec![0.3] },
            }),
            "klein-two-mobius" => Ok(Self {
                d1: BundleSpec::mobius(PI),
                d2: BundleSpec::mobius(PI),
                glue: GlueMap::MonotoneFourier { shift: 0.0, cos: vec![], sin: vec![0.2] },
            }),
            "sphere-two-disks" => Ok(Self {
                d1: BundleSpec::trivial(BaseSpec::Point, 2),
                d2: BundleSpec::trivial(BaseSpec::Point, 2),
                glue: GlueMap::MonotoneFourier { shift: 0.0, cos: vec![], sin: vec![0.2] },
            }),
            other => Err(Error::Config(format!(
                "unknown surgery preset '{other}' (expected one of {})",
                SURGERY_PRESETS.join(", ")
            ))),
        }
    }
}

/// One boundary circle of a unit disk bundle. At radius `s` its density is `s^(k-1) sigma(x)`.
#[derive(Clone)]
pub struct BoundaryCircle {
    pub length: f64,
    pub sigma: Density,
}

struct DiskBundle {
    k: usize,
    dim: usize,
    circles: Vec<BoundaryCircle>,
}

fn disk_bundle(spec: &BundleSpec) -> Result<DiskBundle> {
    let k = spec.rank;
    match (&spec.base, k) {
        (BaseSpec::Line { .. }, _) => Err(Error::Input("disk bundles over a line are not compact".into())),
        (BaseSpec::Circle { length, metric }, 1) => {
            if !(*length > 0.0 && *metric > 0.0) {
                return Err(Error::Input("circle base needs positive length and metric".into()));
            }
            let sigma: Density = {
                let s = metric.sqrt();
                Arc::new(move |_| s)
            };
            let twisted = match &spec.transition {
                None => false,
                Some(t) if t.len() == 1 && t[0].len() == 1 && (t[0][0].abs() - 1.0).abs() < 1e-12 => t[0][0] < 0.0,
                Some(_) => return Err(Error::Input("rank-1 transition must be +1 or -1".into())),
            };
            let circles = if twisted {
                vec![BoundaryCircle { length: 2.0 * length, sigma }]
            } else {
                vec![
                    BoundaryCircle { length: *length, sigma: sigma.clone() },
                    BoundaryCircle { length: *length, sigma },
                ]
            };
            Ok(DiskBundle { k, dim: 2, circles })
        }
        (BaseSpec::Point, 2) => Ok(DiskBundle {
            k,
            dim: 2,
            circles: vec![BoundaryCircle { length: 2.0 * PI, sigma: Arc::new(|_| 1.0) }],
        }),
        (BaseSpec::Point, 1) => Err(Error::Input("rank-1 bundle over a point is one-dimensional".into())),
        _ => Err(Error::NotImplemented(format!(
            "boundary of dimension {} (rank {k} over {:?})",
            k - 1 + usize::from(matches!(spec.base, BaseSpec::Circle { .. })),
            spec.base
        ))),
    }
}

/// One boundary circle of the neck `(-2/3, 2/3) x S^1`.
#[derive(Clone)]
pub struct NeckComponent {
    pub length: f64,
    pub k1: usize,
    pub k2: usize,
    /// Unit-radius density of the first bundle.
    pub sigma1: Density,
    /// Unit-radius density of the second bundle pulled back by the glue map.
    pub pulled2: Density,
    /// Whether `mu` is applied.
    pub rescaled: bool,
}

impl NeckComponent {
    /// Fiber metric coefficient `h(r)(x)`, the square of the blended density.
    pub fn blended_metric(&self, r: f64, x: f64) -> f64 {
        let f = bump_unchecked(r);
        let a = (r + 1.0).powi(self.k1 as i32 - 1) * (self.sigma1)(x);
        let b = (1.0 - r).powi(self.k2 as i32 - 1) * (self.pulled2)(x);
        f * a * a + (1.0 - f) * b * b
    }

    pub fn mu(&self, r: f64, x: f64) -> f64 {
        if self.rescaled {
            phi_unchecked(r, self.k1, self.k2) * (self.sigma1)(x) / self.blended_metric(r, x).sqrt()
        } else {
            1.0
        }
    }

    /// Density of `mu^2 h(r)` on the level circle.
    pub fn density(&self, r: f64, x: f64) -> f64 {
        self.mu(r, x) * self.blended_metric(r, x).sqrt()
    }

    /// Level mean curvature along `d/dr`, from the derivative of the log density.
    pub fn mean_curvature(&self, r: f64, x: f64) -> f64 {
        let h = 1e-4;
        -((self.density(r + h, x)).ln() - (self.density(r - h, x)).ln()) / (2.0 * h)
    }
}

#[derive(Clone)]
pub struct NeckMetric {
    pub n: usize,
    pub components: Vec<NeckComponent>,
}

/// Metric coefficient of the blended fiber metric of one neck component.
pub fn blend_metric(neck: &NeckComponent, r: f64, x: f64) -> Result<f64> {
    check_neck(r)?;
    Ok(neck.blended_metric(r, x))
}

fn phi_unchecked(r: f64, k1: usize, k2: usize) -> f64 {
    let f = bump_unchecked(r);
    (f * (k1 as f64 - 1.0) * (r + 1.0).ln() + (1.0 - f) * (k2 as f64 - 1.0) * (1.0 - r).ln()).exp()
}

/// Positive profile equal to `(r + 1)^(k1 - 1)` left of the blend and `(1 - r)^(k2 - 1)` right of it.
pub fn phi_profile(r: f64, k1: usize, k2: usize) -> Result<f64> {
    check_neck(r)?;
    Ok(phi_unchecked(r, k1, k2))
}

/// Applies `mu = [Phi sigma1 / rho_h]^(1/(n-1))`, after which every level density is `Phi(r) sigma1(x)`.
pub fn mu_rescale(neck: NeckMetric) -> Result<NeckMetric> {
    if neck.n != 2 {
        return Err(Error::NotImplemented(format!("neck of a {}-manifold", neck.n)));
    }
    for c in &neck.components {
        for (r, x) in level_grid(c.length) {
            let h = c.blended_metric(r, x);
            if !(h > 0.0 && (c.sigma1)(x) > 0.0) {
                return Err(Error::SingularMetric(format!("density not positive at r = {r}, x = {x}")));
            }
        }
    }
    let components = neck.components.into_iter().map(|c| NeckComponent { rescaled: true, ..c }).collect();
    Ok(NeckMetric { n: neck.n, components })
}

const N_LEVELS: usize = 121;
const N_FIBER: usize = 128;
const R_MAX: f64 = 0.6;

fn levels() -> impl Iterator<Item = f64> {
    (0..N_LEVELS).map(|j| -R_MAX + 2.0 * R_MAX * j as f64 / (N_LEVELS - 1) as f64)
}

fn fiber_points(length: f64) -> impl Iterator<Item = f64> {
    (0..N_FIBER).map(move |i| length * (i as f64 + 0.5) / N_FIBER as f64)
}

fn level_grid(length: f64) -> Vec<(f64, f64)> {
    levels().flat_map(|r| fiber_points(length).map(move |x| (r, x))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStat {
    pub component: usize,
    pub r: f64,
    pub phi: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mean_h: f64,
    pub std_h: f64,
    /// Spread of the mean curvature with the original glue map and no rescaling.
    pub std_h_before: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalFunction {
    pub case: Case,
    #[serde(rename = "T")]
    pub t_inj: f64,
    pub profile_b: Profile,
    /// Samples `(f, a(f))` of the Laplacian profile.
    pub profile_a: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurgeryResult {
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
    pub minimal_case: bool,
    /// Constant applied to the second bundle metric to equalize boundary volumes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_rescale: Option<f64>,
    pub moser: Vec<MoserReport>,
    pub levels: Vec<LevelStat>,
    pub max_std_h_before: f64,
    pub max_std_h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_abs_h: Option<f64>,
    /// Largest gap between the blend and the pure bundle metrics where `F` is flat.
    pub well_defined_error: f64,
    /// Largest relative deviation of `density / (Phi sigma1)` from 1.
    pub density_spread: f64,
    /// Largest `|mu - 1|` where `F` is flat.
    pub mu_flat_error: f64,
    pub closure_max_residual: f64,
    pub isoparametric_spread: f64,
    pub function: FinalFunction,
    pub tol: f64,
    pub pass: bool,
}

impl SurgeryResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("component,r,phi,mu_min,mu_max,mean_h,std_h,std_h_before\n");
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{},{:.6},{:.12e},{:.12e},{:.12e},{:.6e},{:.6e},{:.6e}",
                l.component, l.r, l.phi, l.mu_min, l.mu_max, l.mean_h, l.std_h, l.std_h_before
            );
        }
        out
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn integrate_circle(rho: &Density, length: f64) -> f64 {
    // trapezoid rule is spectrally accurate for smooth periodic densities
    let n = 2048;
    (0..n).map(|i| rho(length * i as f64 / n as f64)).sum::<f64>() * length / n as f64
}

/// Runs the full construction: volume normalization, blend, `Phi`, `mu`, level
/// curvature statistics and the final level function.
pub fn assemble_and_verify(spec: &LDDBDSpec, tol: f64) -> Result<SurgeryResult> {
    let b1 = disk_bundle(&spec.d1)?;
    let b2 = disk_bundle(&spec.d2)?;
    if b1.dim != b2.dim {
        return Err(Error::Input(format!("dimensions differ: {} vs {}", b1.dim, b2.dim)));
    }
    if b1.circles.len() != b2.circles.len() {
        return Err(Error::Input(format!(
            "boundaries have {} and {} components",
            b1.circles.len(),
            b2.circles.len()
        )));
    }
    let n = b1.dim;

    // glue maps per component, checked to be orientation-preserving diffeomorphisms
    let mut glues = Vec::new();
    for (c1, c2) in b1.circles.iter().zip(&b2.circles) {
        let (l1, l2) = (c1.length, c2.length);
        let (p0, _) = spec.glue.eval(0.0, l1, l2);
        let (p1, _) = spec.glue.eval(l1, l1, l2);
        if ((p1 - p0) - l2).abs() > 1e-9 * l2 {
            return Err(Error::Input("glue map is not a degree-one circle map".into()));
        }
        let min_d = (0..4096).map(|i| spec.glue.eval(l1 * i as f64 / 4096.0, l1, l2).1).fold(f64::INFINITY, f64::min);
        if min_d <= 1e-6 {
            return Err(Error::Input(format!("glue map lift derivative {min_d:.3e} is not positive")));
        }
        let glue = spec.glue.clone();
        glues.push(Arc::new(move |x: f64| glue.eval(x, l1, l2)) as Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>);
    }

    // one global constant on the second metric equalizes the boundary volumes
    let mass1: f64 = b1.circles.iter().map(|c| integrate_circle(&c.sigma, c.length)).sum();
    let mass2: f64 = b2.circles.iter().map(|c| integrate_circle(&c.sigma, c.length)).sum();
    let lambda = mass1 / mass2;
    let mass_rescale = ((lambda - 1.0).abs() > moser::MASS_TOL).then_some(lambda);
    for (c1, c2) in b1.circles.iter().zip(&b2.circles) {
        let m1 = integrate_circle(&c1.sigma, c1.length);
        let m2 = lambda * integrate_circle(&c2.sigma, c2.length);
        if (m1 - m2).abs() > 1e-10 * m1 {
            return Err(Error::Input("boundary components cannot be volume-matched by one constant".into()));
        }
    }

    let mut moser_reports = Vec::new();
    let mut after = Vec::new();
    let mut before = Vec::new();
    for ((c1, c2), glue) in b1.circles.iter().zip(&b2.circles).zip(&glues) {
        let sigma2 = c2.sigma.clone();
        let g = glue.clone();
        let pulled: Density = Arc::new(move |x| {
            let (p, dp) = g(x);
            lambda * sigma2(p) * dp
        });
        let m = moser_normalize(n - 1, c1.sigma.clone(), pulled.clone(), c1.length)?;
        moser_reports.push(m.report());
        let (sigma2, g) = (c2.sigma.clone(), glue.clone());
        let m = Arc::new(m);
        // pullback by glue o chi, with chi' measured by finite differences
        let normalized: Density = Arc::new(move |x| {
            let (p, dp) = g(m.chi(x));
            lambda * sigma2(p) * dp * m.chi_t_derivative(1.0, x)
        });
        before.push(NeckComponent {
            length: c1.length,
            k1: b1.k,
            k2: b2.k,
            sigma1: c1.sigma.clone(),
            pulled2: pulled,
            rescaled: false,
        });
        after.push(NeckComponent {
            length: c1.length,
            k1: b1.k,
            k2: b2.k,
            sigma1: c1.sigma.clone(),
            pulled2: normalized,
            rescaled: false,
        });
    }
    let neck = mu_rescale(NeckMetric { n, components: after })?;

    // well-definedness on the flat regions of F
    let mut well_defined_error: f64 = 0.0;
    for c in &neck.components {
        for x in fiber_points(c.length) {
            for r in [-0.6, -0.4, -0.2, 0.2, 0.4, 0.6] {
                let pure = if r < 0.0 {
                    (r + 1.0_f64).powi(c.k1 as i32 - 1) * (c.sigma1)(x)
                } else {
                    (1.0_f64 - r).powi(c.k2 as i32 - 1) * (c.pulled2)(x)
                };
                well_defined_error = well_defined_error.max((c.blended_metric(r, x) - pure * pure).abs());
            }
        }
    }

    // mu is 1 where F is flat exactly when the glue map is volume preserving
    let mut mu_flat_error: f64 = 0.0;
    for c in &neck.components {
        for x in fiber_points(c.length) {
            for r in [-0.6, -0.4, -0.2, 0.2, 0.4, 0.6] {
                mu_flat_error = mu_flat_error.max((c.mu(r, x) - 1.0).abs());
            }
        }
    }

    let stats: Vec<(LevelStat, f64, f64)> = neck
        .components
        .par_iter()
        .zip(before.par_iter())
        .enumerate()
        .flat_map_iter(|(ci, (c, cb))| {
            levels().map(move |r| {
                let xs: Vec<f64> = fiber_points(c.length).collect();
                let hs: Vec<f64> = xs.iter().map(|&x| c.mean_curvature(r, x)).collect();
                let hb: Vec<f64> = xs.iter().map(|&x| cb.mean_curvature(r, x)).collect();
                let mus: Vec<f64> = xs.iter().map(|&x| c.mu(r, x)).collect();
                let phi = phi_unchecked(r, c.k1, c.k2);
                let spread = xs
                    .iter()
                    .map(|&x| (c.density(r, x) / (phi * (c.sigma1)(x)) - 1.0).abs())
                    .fold(0.0, f64::max);
                let sup_h = hs.iter().map(|h| h.abs()).fold(0.0, f64::max);
                let (mean_h, std_h) = mean_std(&hs);
                let stat = LevelStat {
                    component: ci,
                    r,
                    phi,
                    mu_min: mus.iter().copied().fold(f64::INFINITY, f64::min),
                    mu_max: mus.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    mean_h,
                    std_h,
                    std_h_before: mean_std(&hb).1,
                };
                (stat, spread, sup_h)
            })
        })
        .collect();
    let density_spread = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let sup_h = stats.iter().map(|s| s.2).fold(0.0, f64::max);
    let levels_out: Vec<LevelStat> = stats.into_iter().map(|s| s.0).collect();
    let max_std_h = levels_out.iter().map(|l| l.std_h).fold(0.0, f64::max);
    let max_std_h_before = levels_out.iter().map(|l| l.std_h_before).fold(0.0, f64::max);
    let minimal_case = b1.k == 1 && b2.k == 1;

    let closure = level_function_check(&neck, b1.circles.len())?;

    let moser_ok = moser_reports.iter().all(|m| m.pushforward_error <= 1e-8 && m.min_lift_derivative > 0.0);
    let pass = max_std_h <= tol
        && (!minimal_case || sup_h <= tol)
        && closure.residual <= tol
        && closure.spread <= tol
        && density_spread <= 1e-10
        && mu_flat_error <= 1e-8
        && moser_ok;
    Ok(SurgeryResult {
        n,
        k1: b1.k,
        k2: b2.k,
        minimal_case,
        mass_rescale,
        moser: moser_reports,
        levels: levels_out,
        max_std_h_before,
        max_std_h,
        sup_abs_h: minimal_case.then_some(sup_h),
        well_defined_error,
        density_spread,
        mu_flat_error,
        closure_max_residual: closure.residual,
        isoparametric_spread: closure.spread,
        function: closure.function,
        tol,
        pass,
    })
}

struct Closure {
    residual: f64,
    spread: f64,
    function: FinalFunction,
}

/// Level function of the reassembled surface restricted to the neck, with `s = r + 1`
/// the distance from the first zero section. Two boundary circles on each side
/// give a leaf space circle of length 4; otherwise it is a segment of length 2.
fn level_function_check(neck: &NeckMetric, n_components: usize) -> Result<Closure> {
    let w = PI / 2.0;
    let case = if n_components == 2 { Case::D } else { Case::B };
    // value and r-derivative of f on the neck
    let g = move |r: f64| match case {
        // leaf in the middle of the neck; both components see sin(pi r / 2)
        Case::D => ((w * r).sin(), w * (w * r).cos()),
        _ => ((w * (r + 1.0)).cos(), -w * (w * (r + 1.0)).sin()),
    };
    let profile_b = Profile::CosineSquared { scale: w * w };
    let mut residual: f64 = 0.0;
    let mut spread: f64 = 0.0;
    let mut profile_a = Vec::new();
    for (ci, c) in neck.components.iter().enumerate() {
        let cc = c.clone();
        let density = Arc::new(move |r: f64, x: f64| cc.density(r, x));
        let model = ManifoldModel::Warped(WarpedProfile::patch(-NECK, NECK, c.length, density)?);
        let f = move |p: &Point| g(p[0]).0;
        let rs: Vec<f64> = levels().step_by(5).collect();
        // (f, mean Laplacian, Laplacian spread, worst closure residual) per level
        let rows: Vec<(f64, f64, f64, f64)> = rs
            .par_iter()
            .map(|&r| {
                let (fv, fr) = g(r);
                let (b, bp) = (profile_b.eval(fv), profile_b.derivative(fv));
                let mut laps = Vec::new();
                let mut worst: f64 = 0.0;
                for x in fiber_points(c.length).step_by(4) {
                    let lap = laplace_beltrami_fd(&f, &model, &Point::from_vec(vec![r, x]), H_FD)?;
                    // mean curvature oriented along grad f
                    let h = fr.signum() * c.mean_curvature(r, x);
                    worst = worst.max((lap - (0.5 * bp - h * b.sqrt())).abs());
                    laps.push(lap);
                }
                let hi = laps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = laps.iter().copied().fold(f64::INFINITY, f64::min);
                Ok((fv, mean_std(&laps).0, hi - lo, worst))
            })
            .collect::<Result<_>>()?;
        for (fv, a, sp, worst) in rows {
            residual = residual.max(worst);
            spread = spread.max(sp);
            if ci == 0 {
                profile_a.push([fv, a]);
            }
        }
    }
    Ok(Closure { residual, spread, function: FinalFunction { case, t_inj: 2.0, profile_b, profile_a } })
}
