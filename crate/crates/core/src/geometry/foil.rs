//! Foils: sampled leaves of a transnormal system together with their unit normals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geodesic::{advance, DEFAULT_STEP};
use super::{EndCondition, ManifoldModel, Point, Tangent};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FoilKind {
    /// Regular, with a disconnected normal sphere bundle.
    DR,
    /// Regular, with a connected normal sphere bundle (one-sided).
    SR,
    /// Singular, codimension at least two.
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    Connected,
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

type CurveFn = Arc<dyn Fn(f64) -> Point + Send + Sync>;

/// Closed curve `s in [0, 1] -> chart` in lifted coordinates; `point(1)` is a deck
/// image of `point(0)`.
#[derive(Clone)]
pub struct LoopCurve {
    point: CurveFn,
    velocity: CurveFn,
}

impl fmt::Debug for LoopCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LoopCurve({:?} -> {:?})", (self.point)(0.0).as_slice(), (self.point)(1.0).as_slice())
    }
}

impl LoopCurve {
    pub fn new(point: CurveFn, velocity: CurveFn) -> Self {
        Self { point, velocity }
    }

    /// `start + s * span`.
    pub fn line(start: Point, span: Tangent) -> Self {
        let v = span.clone();
        Self { point: Arc::new(move |s| &start + &span * s), velocity: Arc::new(move |_| v.clone()) }
    }

    /// Circle in the flat plane, traversed clockwise so that the foil normal points outward.
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self {
            point: Arc::new(move |s| {
                let a = -2.0 * PI * s;
                Point::from_vec(vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()])
            }),
            velocity: Arc::new(move |s| {
                let a = -2.0 * PI * s;
                Tangent::from_vec(vec![2.0 * PI * radius * a.sin(), -2.0 * PI * radius * a.cos()])
            }),
        }
    }

    pub fn point(&self, s: f64) -> Point {
        (self.point)(s)
    }

    pub fn velocity(&self, s: f64) -> Tangent {
        (self.velocity)(s)
    }
}

/// Unit normal of a curve on a surface: `g^{-1}(-tau_2, tau_1)` normalized.
pub fn curve_normal(m: &ManifoldModel, p: &Point, tau: &Tangent) -> Result<Tangent> {
    if m.dim() != 2 {
        return Err(Error::NotImplemented(format!("loop foils in dimension {}", m.dim())));
    }
    let w = Tangent::from_vec(vec![-tau[1], tau[0]]);
    let gi = m
        .metric_raw(p)
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric("metric not invertible on the loop".into()))?;
    let n = gi * w;
    let len = m.norm(p, &n);
    if !(len > 0.0) {
        return Err(Error::Input("loop velocity vanishes".into()));
    }
    Ok(n / len)
}

#[derive(Clone)]
pub struct Foil {
    pub kind: FoilKind,
    pub codim: usize,
    /// Samples of `B(L)`: chart points with a unit normal each.
    pub samples: Vec<(Point, Tangent)>,
    /// Parametrization for codimension-one loops.
    pub curve: Option<LoopCurve>,
}

impl fmt::Debug for Foil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Foil")
            .field("kind", &self.kind)
            .field("codim", &self.codim)
            .field("samples", &self.samples.len())
            .field("curve", &self.curve)
            .finish()
    }
}

impl PartialEq for Foil {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.codim == other.codim && self.samples == other.samples
    }
}

impl Foil {
    /// Codimension-one foil traced by a closed curve; the kind follows from
    /// transporting the normal once around the loop. `n` samples per pass.
    pub fn regular_loop(m: &ManifoldModel, curve: LoopCurve, n: usize) -> Result<Foil> {
        if n < 2 {
            return Err(Error::Input("a loop foil needs at least two samples".into()));
        }
        let kind = match loop_connectivity(m, &curve)? {
            Connectivity::Disconnected => FoilKind::DR,
            Connectivity::Connected => FoilKind::SR,
        };
        let mut samples = Vec::with_capacity(2 * n);
        for i in 0..n {
            let s = i as f64 / n as f64;
            let p = curve.point(s);
            let nu = curve_normal(m, &p, &curve.velocity(s))?;
            samples.push((p, nu));
        }
        if kind == FoilKind::SR {
            let flipped: Vec<_> = samples.iter().map(|(p, v)| (p.clone(), -v)).collect();
            samples.extend(flipped);
        }
        Ok(Foil { kind, codim: 1, samples, curve: Some(curve) })
    }

    pub fn singular(codim: usize, samples: Vec<(Point, Tangent)>) -> Foil {
        Foil { kind: FoilKind::S, codim, samples, curve: None }
    }

    /// A point on a surface, with `n` unit directions. On a collapse end of a
    /// warped profile the directions are the radial ones at `n` fiber angles.
    pub fn point(m: &ManifoldModel, p: &Point, n: usize) -> Result<Foil> {
        if m.dim() != 2 {
            return Err(Error::NotImplemented("point foils are supported on surfaces".into()));
        }
        if n < 2 {
            return Err(Error::Input("a point foil needs at least two directions".into()));
        }
        if let ManifoldModel::Warped(w) = m {
            for (end, at) in w.ends() {
                if matches!(end, EndCondition::Collapse { .. }) && (p[0] - at).abs() < 1e-12 {
                    let inward = if at == w.bounds().0 { 1.0 } else { -1.0 };
                    let l = w.fiber_length();
                    let samples = (0..n)
                        .map(|j| {
                            (Point::from_vec(vec![at, l * j as f64 / n as f64]), Tangent::from_vec(vec![inward, 0.0]))
                        })
                        .collect();
                    return Ok(Foil::singular(2, samples));
                }
            }
        }
        let g = m.metric_at(p)?;
        // g-orthonormal frame by Gram-Schmidt on the coordinate basis
        let e1 = Tangent::from_vec(vec![1.0 / g[(0, 0)].sqrt(), 0.0]);
        let mut e2 = Tangent::from_vec(vec![0.0, 1.0]);
        e2 -= &e1 * m.inner(p, &e1, &e2);
        let e2 = &e2 / m.norm(p, &e2);
        let samples = (0..n)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / n as f64;
                (p.clone(), &e1 * a.cos() + &e2 * a.sin())
            })
            .collect();
        Ok(Foil::singular(2, samples))
    }

    pub fn points(&self) -> Vec<Point> {
        self.samples.iter().map(|(p, _)| p.clone()).collect()
    }
}

fn loop_connectivity(m: &ManifoldModel, curve: &LoopCurve) -> Result<Connectivity> {
    let p0 = curve.point(0.0);
    let n0 = curve_normal(m, &p0, &curve.velocity(0.0))?;
    let p1 = curve.point(1.0);
    let n1 = curve_normal(m, &p1, &curve.velocity(1.0))?;
    let (c0, m0) = m.canonicalize_state(&p0, &n0);
    let (c1, m1) = m.canonicalize_state(&p1, &n1);
    let (q, w) = m
        .images(&c1, &m1)
        .into_iter()
        .min_by(|a, b| m.segment_length(&c0, &a.0).total_cmp(&m.segment_length(&c0, &b.0)))
        .expect("images include the identity");
    if m.segment_length(&c0, &q) > 1e-6 {
        return Err(Error::Input("loop curve does not close up in the quotient".into()));
    }
    Ok(if m.inner(&c0, &w, &m0) > 0.0 { Connectivity::Disconnected } else { Connectivity::Connected })
}

/// Whether the unit normal bundle of a codimension-one loop foil is connected.
pub fn normal_bundle_connectivity(m: &ManifoldModel, foil: &Foil) -> Result<Connectivity> {
    if foil.codim != 1 {
        return Err(Error::Input("normal bundle connectivity needs a codimension-one foil".into()));
    }
    let curve = foil
        .curve
        .as_ref()
        .ok_or_else(|| Error::Input("foil has no loop parametrization".into()))?;
    loop_connectivity(m, curve)
}

/// Lifted end states of the normal geodesics from every sample of `B(L)` after
/// signed arclength `t` (negative `t` shoots along `-B(L)`).
pub fn normal_exponential_states(m: &ManifoldModel, foil: &Foil, t: f64, step: f64) -> Result<Vec<(Point, Tangent)>> {
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    foil.samples
        .par_iter()
        .map(|(p, v)| advance(m, p, &(v * sign), t.abs(), step))
        .collect()
}

/// Canonicalized point cloud `exp_L(t, B(L))` on the requested side.
pub fn normal_exponential(m: &ManifoldModel, foil: &Foil, side: Side, t: f64) -> Result<Vec<Point>> {
    if t < 0.0 {
        return Err(Error::Input("arclength must be non-negative; choose the side instead".into()));
    }
    let states = normal_exponential_states(m, foil, side.sign() * t, DEFAULT_STEP)?;
    Ok(states.iter().map(|(p, _)| m.canonicalize(p)).collect())
}
