//! Marching the normal exponential map of a seed foil to find special foils
//! and identifications, and reading off the type.

use rayon::prelude::*;
use serde::Serialize;

use super::{SpecialFoil, SystemDescriptor, SystemType};
use crate::error::{Error, Result};
use crate::geometry::foil::{normal_bundle_connectivity, normal_exponential_states, Connectivity, Foil, FoilKind};
use crate::geometry::geodesic::{advance, DEFAULT_STEP};
use crate::geometry::{ManifoldModel, Point, Tangent};

/// Clouds with at most this extent are treated as collapsed to a point.
const POINT_EXTENT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub t_max: f64,
    pub dt: f64,
    /// Matching tolerance relative to the reference foil extent.
    pub eps_rel: f64,
    pub step: f64,
    /// Fail with `HorizonExceeded` instead of declaring unmatched ends open.
    pub strict_horizon: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { t_max: 10.0, dt: 0.05, eps_rel: 1e-4, step: DEFAULT_STEP, strict_horizon: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Identification {
    NoMatch,
    /// A special foil sits halfway between the two times.
    MirrorAt(f64),
    /// The clouds repeat with this period.
    Period(f64),
}

/// Grid of lifted states along one side of the seed.
struct Track<'a> {
    m: &'a ManifoldModel,
    dt: f64,
    step: f64,
    grid: Vec<Vec<(Point, Tangent)>>,
}

impl<'a> Track<'a> {
    fn new(m: &'a ManifoldModel, seed: &Foil, sign: f64, dt: f64, step: f64) -> Self {
        let start = seed.samples.iter().map(|(p, v)| (p.clone(), v * sign)).collect();
        Self { m, dt, step, grid: vec![start] }
    }

    fn extend_to(&mut self, j: usize) -> Result<()> {
        while self.grid.len() <= j {
            let last = self.grid.last().expect("grid starts with the seed");
            let next = last
                .par_iter()
                .map(|(p, v)| advance(self.m, p, v, self.dt, self.step))
                .collect::<Result<Vec<_>>>()?;
            self.grid.push(next);
        }
        Ok(())
    }

    fn points(&mut self, j: usize) -> Result<Vec<Point>> {
        self.extend_to(j)?;
        Ok(self.grid[j].iter().map(|(p, _)| p.clone()).collect())
    }

    fn cloud_at(&mut self, t: f64) -> Result<Vec<Point>> {
        let t = t.max(0.0);
        let j = (t / self.dt).floor() as usize;
        self.extend_to(j)?;
        let rest = t - j as f64 * self.dt;
        if rest <= 0.0 {
            return Ok(self.grid[j].iter().map(|(p, _)| p.clone()).collect());
        }
        let (m, step) = (self.m, self.step);
        self.grid[j]
            .par_iter()
            .map(|(p, v)| advance(m, p, v, rest, step).map(|s| s.0))
            .collect()
    }
}

fn golden_min(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if (b - a).abs() < 1e-11 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

fn is_grid_min(vals: &[f64], c: usize, first: usize, dt: f64) -> bool {
    let v = vals[c];
    v.is_finite()
        && v < 1.5 * dt
        && c + 1 < vals.len()
        && v <= vals[c + 1]
        && (c == first || v <= vals[c - 1])
}

struct Fold {
    t: f64,
    cloud: Vec<Point>,
}

fn special_from_cloud(m: &ManifoldModel, t: f64, cloud: &[Point]) -> SpecialFoil {
    let ext = m.extent(cloud);
    let (kind, codim) = if ext <= POINT_EXTENT { (FoilKind::S, m.dim()) } else { (FoilKind::SR, 1) };
    SpecialFoil { t, kind, codim, leaf: m.leaf_coordinate(&cloud[0]) }
}

/// Classifies the transnormal system containing `seed`.
pub fn classify(m: &ManifoldModel, seed: &Foil, opts: &ClassifyOptions) -> Result<SystemDescriptor> {
    if !(opts.dt > 0.0 && opts.t_max > 3.0 * opts.dt && opts.eps_rel > 0.0 && opts.step > 0.0) {
        return Err(Error::Input("need dt > 0, t_max > 3 dt, eps_rel > 0 and step > 0".into()));
    }
    if seed.samples.is_empty() {
        return Err(Error::Input("seed foil has no samples".into()));
    }
    let dt = opts.dt;
    let two_sided = seed.kind == FoilKind::DR;
    let signs: &[f64] = if two_sided { &[1.0, -1.0] } else { &[1.0] };
    let mut tracks: Vec<Track> = signs.iter().map(|&s| Track::new(m, seed, s, dt, opts.step)).collect();

    let seed_points = seed.samples.iter().map(|(p, _)| p.clone()).collect::<Vec<_>>();
    let mut reference = m.extent(&seed_points).max(m.extent(&tracks[0].points(1)?));
    if reference <= POINT_EXTENT {
        reference = m.diameter_hint();
    }
    let eps = opts.eps_rel * reference;

    let first = if two_sided { 1 } else { 2 };
    let n_grid = (opts.t_max / dt).floor() as usize;
    let mut fvals = vec![vec![f64::NAN; n_grid + 1]; tracks.len()];
    let mut qvals = vec![f64::NAN; n_grid + 1];
    let mut folds: Vec<Option<Fold>> = (0..tracks.len()).map(|_| None).collect();
    let mut period: Option<f64> = None;

    for j in first..n_grid {
        for (s, track) in tracks.iter_mut().enumerate() {
            if folds[s].is_none() {
                let ahead = track.points(j + 1)?;
                let behind = track.points(j - 1)?;
                fvals[s][j] = m.hausdorff(&ahead, &behind);
            }
        }
        let no_folds = folds.iter().all(Option::is_none);
        if two_sided && no_folds {
            let (a, b) = tracks.split_at_mut(1);
            qvals[j] = m.hausdorff(&a[0].points(j)?, &b[0].points(j)?);
        }
        if j == first {
            continue;
        }
        let c = j - 1;
        let tc = c as f64 * dt;
        for s in 0..tracks.len() {
            if folds[s].is_some() || !is_grid_min(&fvals[s], c, first, dt) {
                continue;
            }
            let track = &mut tracks[s];
            let lo = (tc - dt).max(dt);
            let (t_star, val) = golden_min(
                |t| {
                    let a = track.cloud_at(t + dt)?;
                    let b = track.cloud_at(t - dt)?;
                    Ok(m.hausdorff(&a, &b))
                },
                lo,
                tc + dt,
            )?;
            if val <= eps {
                folds[s] = Some(Fold { t: t_star, cloud: track.cloud_at(t_star)? });
            }
        }
        if two_sided && no_folds && folds.iter().all(Option::is_none) && is_grid_min(&qvals, c, first, dt) {
            let (a, b) = tracks.split_at_mut(1);
            let (t_star, val) = golden_min(
                |t| Ok(m.hausdorff(&a[0].cloud_at(t)?, &b[0].cloud_at(t)?)),
                (tc - dt).max(0.5 * dt),
                tc + dt,
            )?;
            if val <= eps {
                period = Some(t_star);
            }
        }
        if period.is_some() || folds.iter().all(Option::is_some) {
            break;
        }
    }

    let mut special = Vec::new();
    if seed.kind != FoilKind::DR {
        special.push(SpecialFoil { t: 0.0, kind: seed.kind, codim: seed.codim, leaf: m.leaf_coordinate(&seed_points[0]) });
    }
    for (s, fold) in folds.iter().enumerate() {
        if let Some(f) = fold {
            special.push(special_from_cloud(m, signs[s] * f.t, &f.cloud));
        }
    }
    let n_sr = special.iter().filter(|f| f.kind == FoilKind::SR).count();
    let n_s = special.iter().filter(|f| f.kind == FoilKind::S).count();

    let diameter = if let Some(t) = period {
        t
    } else if folds.iter().all(Option::is_some) {
        folds.iter().flatten().map(|f| f.t).sum()
    } else {
        f64::INFINITY
    };
    let horizon_limited = diameter.is_infinite();
    if horizon_limited && opts.strict_horizon {
        return Err(Error::HorizonExceeded { t_max: opts.t_max });
    }
    let type_tag = SystemType::from_signature(n_sr, n_s, diameter.is_finite()).ok_or_else(|| {
        Error::InconsistentSystem(format!(
            "N_SR = {n_sr}, N_S = {n_s}, D = {diameter} matches no type"
        ))
    })?;
    Ok(SystemDescriptor {
        type_tag,
        t_inj: diameter,
        diameter,
        n_sr,
        n_s,
        special_foils: special,
        horizon_limited,
        seed_kind: seed.kind,
        seed_leaf: m.leaf_coordinate(&seed_points[0]),
        seed: Some(seed.clone()),
    })
}

fn cloud(m: &ManifoldModel, seed: &Foil, t: f64) -> Result<Vec<Point>> {
    Ok(normal_exponential_states(m, seed, t, DEFAULT_STEP)?.into_iter().map(|(p, _)| p).collect())
}

/// Compares `exp_L(t1)` with `exp_L(t2)` and decides between a fold and a period.
pub fn detect_identification(m: &ManifoldModel, seed: &Foil, t1: f64, t2: f64, eps_match: f64) -> Result<Identification> {
    if t1 == t2 || !(eps_match > 0.0) {
        return Err(Error::Input("need distinct times and a positive tolerance".into()));
    }
    let (a, b) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
    if m.hausdorff(&cloud(m, seed, a)?, &cloud(m, seed, b)?) > eps_match {
        return Ok(Identification::NoMatch);
    }
    let delta = (0.25 * (b - a)).min(0.05);
    let mirror = m.hausdorff(&cloud(m, seed, a - delta)?, &cloud(m, seed, b + delta)?) <= eps_match;
    let repeat = m.hausdorff(&cloud(m, seed, a + delta)?, &cloud(m, seed, b + delta)?) <= eps_match;
    match (mirror, repeat) {
        (true, true) => Err(Error::AmbiguousMatch),
        (true, false) => Ok(Identification::MirrorAt(0.5 * (a + b))),
        (false, true) => Ok(Identification::Period(b - a)),
        (false, false) => Ok(Identification::NoMatch),
    }
}

/// Foils `exp_L(t, B(L))` of the classified system on a grid of signed times.
pub fn foil_census(descriptor: &SystemDescriptor, m: &ManifoldModel, t_grid: &[f64]) -> Result<Vec<(f64, Foil)>> {
    let seed = descriptor
        .seed
        .as_ref()
        .ok_or_else(|| Error::Input("descriptor carries no seed foil".into()))?;
    let delta = 1e-2;
    t_grid
        .iter()
        .map(|&t| {
            let states = normal_exponential_states(m, seed, t, DEFAULT_STEP)?;
            let points: Vec<Point> = states.iter().map(|(p, _)| p.clone()).collect();
            let ext = m.extent(&points);
            let foil = if ext <= POINT_EXTENT {
                Foil::singular(if t == 0.0 { seed.codim } else { m.dim() }, states)
            } else {
                let kind = if t == 0.0 && seed.curve.is_some() {
                    match normal_bundle_connectivity(m, seed)? {
                        Connectivity::Connected => FoilKind::SR,
                        Connectivity::Disconnected => FoilKind::DR,
                    }
                } else {
                    let folded = m.hausdorff(&cloud(m, seed, t + delta)?, &cloud(m, seed, t - delta)?);
                    if folded <= 1e-4 * ext {
                        FoilKind::SR
                    } else {
                        FoilKind::DR
                    }
                };
                Foil { kind, codim: 1, samples: states, curve: None }
            };
            Ok((t, foil))
        })
        .collect()
}
