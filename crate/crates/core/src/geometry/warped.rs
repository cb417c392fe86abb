//! Surfaces of the form `dr^2 + rho(r, theta)^2 dtheta^2` over an interval.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::flat::{wrap_centered, wrap_positive};
use super::{PathEvent, Point, Tangent};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalKind {
    FullLine,
    HalfLine { start: f64 },
    /// Periodic profile coordinate with the given period (`2T`).
    Circle { period: f64 },
    Segment { start: f64, length: f64 },
}

/// Behaviour of the profile at a finite end of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndCondition {
    /// Chart boundary; geodesics must not reach it.
    Open,
    /// The fiber collapses to a point (a focal variety of codimension `codim`).
    Collapse { codim: usize },
    /// The fiber is folded by the antipodal involution `theta -> theta + length/2`.
    Mirror,
}

impl EndCondition {
    fn reflects(self) -> bool {
        !matches!(self, EndCondition::Open)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fiber {
    Circle { length: f64 },
    RoundSphere { dim: usize },
}

impl Fiber {
    pub fn length(&self) -> Result<f64> {
        match *self {
            Fiber::Circle { length } if length > 0.0 => Ok(length),
            Fiber::Circle { .. } => Err(Error::Input("fiber circle length must be positive".into())),
            Fiber::RoundSphere { dim: 1 } => Ok(2.0 * PI),
            Fiber::RoundSphere { dim } => Err(Error::NotImplemented(format!(
                "warped profiles with {dim}-dimensional sphere fibers"
            ))),
        }
    }
}

/// Fiber density `rho(r, theta)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warp {
    Constant { value: f64 },
    /// `amplitude * sin(frequency * (r - offset))`
    Sine { amplitude: f64, frequency: f64, offset: f64 },
    /// `slope * (r - offset)`
    Linear { slope: f64, offset: f64 },
    /// `base * exp(amplitude * sin^2(pi (r - lo)/(hi - lo)) * cos(2 pi mode theta / L + phase))`.
    /// The factor is 1 to second order at both ends, so end conditions are preserved.
    Perturbed { base: Box<Warp>, amplitude: f64, mode: u32, phase: f64, lo: f64, hi: f64 },
    #[serde(skip)]
    Custom(#[allow(clippy::type_complexity)] Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Warp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warp::Constant { value } => write!(f, "Constant({value})"),
            Warp::Sine { amplitude, frequency, offset } => {
                write!(f, "Sine({amplitude}, {frequency}, {offset})")
            }
            Warp::Linear { slope, offset } => write!(f, "Linear({slope}, {offset})"),
            Warp::Perturbed { base, amplitude, mode, .. } => {
                write!(f, "Perturbed({base:?}, amp={amplitude}, mode={mode})")
            }
            Warp::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PartialEq for Warp {
    fn eq(&self, other: &Self) -> bool {
        format!("{self:?}") == format!("{other:?}")
    }
}

impl Warp {
    pub fn eval(&self, r: f64, theta: f64, fiber_length: f64) -> f64 {
        match self {
            Warp::Constant { value } => *value,
            Warp::Sine { amplitude, frequency, offset } => amplitude * (frequency * (r - offset)).sin(),
            Warp::Linear { slope, offset } => slope * (r - offset),
            Warp::Perturbed { base, amplitude, mode, phase, lo, hi } => {
                let s = (PI * (r - lo) / (hi - lo)).sin();
                let angle = 2.0 * PI * (*mode as f64) * theta / fiber_length + phase;
                base.eval(r, theta, fiber_length) * (amplitude * s * s * angle.cos()).exp()
            }
            Warp::Custom(f) => f(r, theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedProfile {
    pub interval: IntervalKind,
    pub left_end: EndCondition,
    pub right_end: EndCondition,
    pub fiber: Fiber,
    pub warp: Warp,
    fiber_length: f64,
}

impl WarpedProfile {
    pub fn new(
        interval: IntervalKind,
        left_end: EndCondition,
        right_end: EndCondition,
        fiber: Fiber,
        warp: Warp,
    ) -> Result<Self> {
        let fiber_length = fiber.length()?;
        let (lo, hi) = bounds(interval);
        for (end, at) in [(left_end, lo), (right_end, hi)] {
            if let EndCondition::Collapse { codim } = end {
                if at.is_infinite() {
                    return Err(Error::Input("collapse end on an unbounded side".into()));
                }
                if codim != 2 {
                    return Err(Error::NotImplemented(format!(
                        "collapse of codimension {codim} on a surface"
                    )));
                }
            }
            if end == EndCondition::Mirror && at.is_infinite() {
                return Err(Error::Input("mirror end on an unbounded side".into()));
            }
        }
        if let IntervalKind::Circle { period } = interval {
            if period <= 0.0 {
                return Err(Error::Input("circle period must be positive".into()));
            }
        }
        if let IntervalKind::Segment { length, .. } = interval {
            if length <= 0.0 {
                return Err(Error::Input("segment length must be positive".into()));
            }
        }
        let m = Self { interval, left_end, right_end, fiber, warp, fiber_length };
        m.check_positive()?;
        Ok(m)
    }

    /// Coordinate patch over `(lo, hi)` with a circle fiber of the given length and an arbitrary density.
    pub fn patch(
        lo: f64,
        hi: f64,
        fiber_length: f64,
        density: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    ) -> Result<Self> {
        Self::new(
            IntervalKind::Segment { start: lo, length: hi - lo },
            EndCondition::Open,
            EndCondition::Open,
            Fiber::Circle { length: fiber_length },
            Warp::Custom(density),
        )
    }

    fn check_positive(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        let (lo, hi) = (lo.max(-50.0), hi.min(50.0));
        for i in 1..64 {
            let r = lo + (hi - lo) * i as f64 / 64.0;
            for j in 0..16 {
                let theta = self.fiber_length * j as f64 / 16.0;
                let rho = self.density(r, theta);
                if !(rho > 0.0) {
                    return Err(Error::SingularMetric(format!(
                        "warp rho({r:.4}, {theta:.4}) = {rho} is not positive"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn fiber_length(&self) -> f64 {
        self.fiber_length
    }

    pub fn bounds(&self) -> (f64, f64) {
        bounds(self.interval)
    }

    pub fn density(&self, r: f64, theta: f64) -> f64 {
        self.warp.eval(r, theta, self.fiber_length)
    }

    /// `diag(1, rho^2)` without any domain checks.
    pub fn metric_raw(&self, p: &Point) -> [f64; 2] {
        let rho = self.density(p[0], p[1]);
        [1.0, rho * rho]
    }

    pub fn check_domain(&self, p: &Point) -> Result<()> {
        let (lo, hi) = self.bounds();
        let r = p[0];
        let eps = 1e-12;
        for (end, at, outside) in [(self.left_end, lo, r < lo - eps), (self.right_end, hi, r > hi + eps)] {
            if matches!(end, EndCondition::Collapse { .. }) && (r - at).abs() <= eps {
                return Err(Error::Domain(format!("r = {r} lies on a collapse end")));
            }
            if outside && !matches!(self.interval, IntervalKind::Circle { .. }) {
                return Err(Error::Domain(format!("r = {r} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn ends(&self) -> [(EndCondition, f64); 2] {
        let (lo, hi) = self.bounds();
        [(self.left_end, lo), (self.right_end, hi)]
    }

    /// Reflects states that left the interval through a collapse or mirror end.
    pub fn continue_chart(&self, p: &Point, v: &Tangent) -> (Point, Tangent, Option<PathEvent>) {
        let (mut r, mut th, mut vr) = (p[0], p[1], v[0]);
        let mut event = None;
        if let IntervalKind::Circle { period } = self.interval {
            r = wrap_positive(r, period);
            return (Point::from_vec(vec![r, th]), v.clone(), None);
        }
        let (lo, hi) = self.bounds();
        for _ in 0..4 {
            let crossing = if r < lo && self.left_end.reflects() {
                Some((lo, self.left_end))
            } else if r > hi && self.right_end.reflects() {
                Some((hi, self.right_end))
            } else {
                None
            };
            let Some((at, end)) = crossing else { break };
            r = 2.0 * at - r;
            th += 0.5 * self.fiber_length;
            vr = -vr;
            event = Some(match end {
                EndCondition::Collapse { .. } => PathEvent::CollapseReached,
                _ => PathEvent::MirrorCrossed,
            });
        }
        (Point::from_vec(vec![r, th]), Tangent::from_vec(vec![vr, v[1]]), event)
    }

    pub fn canonicalize_state(&self, p: &Point, v: &Tangent) -> (Point, Tangent) {
        let (mut q, w, _) = self.continue_chart(p, v);
        q[1] = wrap_positive(q[1], self.fiber_length);
        (q, w)
    }

    pub fn images(&self, p: &Point, v: &Tangent) -> Vec<(Point, Tangent)> {
        let l = self.fiber_length;
        let mut base = vec![(p[0], p[1], v[0])];
        for (end, at) in self.ends() {
            if end.reflects() {
                base.push((2.0 * at - p[0], p[1] + 0.5 * l, -v[0]));
            }
        }
        if let IntervalKind::Circle { period } = self.interval {
            base.push((p[0] + period, p[1], v[0]));
            base.push((p[0] - period, p[1], v[0]));
        }
        let mut out = Vec::with_capacity(base.len() * 3);
        for (r, th, vr) in base {
            for k in [-1.0, 0.0, 1.0] {
                out.push((Point::from_vec(vec![r, th + k * l]), Tangent::from_vec(vec![vr, v[1]])));
            }
        }
        out
    }

    /// Start state for geodesics leaving a point on a collapse end: nudged off the end
    /// along the radial direction, which is an exact geodesic.
    pub fn escape_focal(&self, p: &Point, v: &Tangent) -> Option<(Point, f64)> {
        const NUDGE: f64 = 1e-7;
        for (end, at) in self.ends() {
            if matches!(end, EndCondition::Collapse { .. }) && (p[0] - at).abs() < 1e-12 {
                let mut q = p.clone();
                q[0] += NUDGE * v[0].signum();
                return Some((q, NUDGE));
            }
        }
        None
    }

    pub fn leaf_coordinate(&self, p: &Point) -> f64 {
        self.canonicalize_state(p, &Tangent::zeros(2)).0[0]
    }

    pub fn leaf_distance(&self, a: f64, b: f64) -> f64 {
        match self.interval {
            IntervalKind::Circle { period } => wrap_centered(a - b, period).abs(),
            _ => (a - b).abs(),
        }
    }

    pub fn leaf_offset(&self, a: f64, b: f64) -> f64 {
        match self.interval {
            IntervalKind::Circle { period } => {
                let w = wrap_centered(a - b, period);
                if w <= -0.5 * period {
                    w + period
                } else {
                    w
                }
            }
            _ => a - b,
        }
    }

    /// Sampling box in chart coordinates, kept slightly away from collapse ends.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = self.bounds();
        let (lo, hi) = match self.interval {
            IntervalKind::Circle { period } => (0.0, period),
            IntervalKind::FullLine => (-3.0, 3.0),
            IntervalKind::HalfLine { start } => (start, start + 3.0),
            IntervalKind::Segment { .. } => (lo, hi),
        };
        let margin = 1e-2 * (hi - lo);
        let lo = if matches!(self.left_end, EndCondition::Collapse { .. } | EndCondition::Open) {
            lo + margin
        } else {
            lo
        };
        let hi = if matches!(self.right_end, EndCondition::Collapse { .. } | EndCondition::Open) {
            hi - margin
        } else {
            hi
        };
        vec![(lo, hi), (0.0, self.fiber_length)]
    }
}

fn bounds(interval: IntervalKind) -> (f64, f64) {
    match interval {
        IntervalKind::FullLine => (f64::NEG_INFINITY, f64::INFINITY),
        IntervalKind::HalfLine { start } => (start, f64::INFINITY),
        IntervalKind::Circle { period } => (0.0, period),
        IntervalKind::Segment { start, length } => (start, start + length),
    }
}
