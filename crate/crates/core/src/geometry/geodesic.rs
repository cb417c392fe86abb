//! Classical fourth-order Runge-Kutta integration of the geodesic equation.

use serde::Serialize;

use super::{ManifoldModel, PathEvent, Point, Tangent, EPS_ENERGY};
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    pub step: f64,
    pub energy_tol: f64,
    /// Continue antipodally through collapse ends instead of failing.
    pub continue_through_focal: bool,
    /// Record every n-th step (the final state is always recorded).
    pub record_every: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self { step: DEFAULT_STEP, energy_tol: EPS_ENERGY, continue_through_focal: true, record_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub times: Vec<f64>,
    /// Lifted chart states; reflecting ends are already applied.
    pub states: Vec<(Point, Tangent)>,
    /// `g(v, v)` at each recorded state.
    pub energy: Vec<f64>,
    pub events: Vec<(f64, PathEvent)>,
    pub max_drift: f64,
    pub step: f64,
}

impl GeodesicPath {
    pub fn endpoint(&self) -> &(Point, Tangent) {
        self.states.last().expect("paths always hold the initial state")
    }

    pub fn endpoint_canonical(&self, m: &ManifoldModel) -> (Point, Tangent) {
        let (p, v) = self.endpoint();
        m.canonicalize_state(p, v)
    }
}

fn rk4(m: &ManifoldModel, p: &Point, v: &Tangent, h: f64) -> Result<(Point, Tangent)> {
    let a1 = m.geodesic_acceleration(p, v)?;
    let (p2, v2) = (p + v * (0.5 * h), v + &a1 * (0.5 * h));
    let a2 = m.geodesic_acceleration(&p2, &v2)?;
    let (p3, v3) = (p + &v2 * (0.5 * h), v + &a2 * (0.5 * h));
    let a3 = m.geodesic_acceleration(&p3, &v3)?;
    let (p4, v4) = (p + &v3 * h, v + &a3 * h);
    let a4 = m.geodesic_acceleration(&p4, &v4)?;
    let p_next = p + (v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
    let v_next = v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
    Ok((p_next, v_next))
}

/// Integrates a unit-speed geodesic for arclength `t_max`.
pub fn integrate_geodesic(m: &ManifoldModel, p0: &Point, v0: &Tangent, t_max: f64, step: f64) -> Result<GeodesicPath> {
    let speed = m.norm(p0, v0);
    if (speed - 1.0).abs() > 1e-12 && m.escape_focal(p0, v0).is_none() {
        return Err(Error::Input(format!("initial velocity must have unit length, got {speed}")));
    }
    integrate_geodesic_with(m, p0, v0, t_max, &GeodesicOptions { step, ..GeodesicOptions::default() })
}

pub fn integrate_geodesic_with(
    m: &ManifoldModel,
    p0: &Point,
    v0: &Tangent,
    t_max: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicPath> {
    if !(opts.step > 0.0) || !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::Input("step must be positive and t_max finite and non-negative".into()));
    }
    if p0.len() != m.dim() || v0.len() != m.dim() {
        return Err(Error::Input("state dimension does not match the manifold".into()));
    }
    let mut times = vec![0.0];
    let mut states = vec![(p0.clone(), v0.clone())];
    let (mut p, mut v) = (p0.clone(), v0.clone());
    let mut t0 = 0.0;
    let mut events = Vec::new();
    if let Some((q, nudge)) = m.escape_focal(p0, v0) {
        if !opts.continue_through_focal {
            return Err(Error::CollapseReached { t: 0.0 });
        }
        p = q;
        t0 = nudge.min(t_max);
        // the nudge moves along an exact radial geodesic
        times.push(t0);
        states.push((p.clone(), v.clone()));
    }
    let e0 = m.inner(&p, &v, &v);
    let mut energy = vec![e0; states.len()];
    let remaining = t_max - t0;
    let n = (remaining / opts.step).ceil().max(if remaining > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if n > 0 { remaining / n as f64 } else { 0.0 };
    let mut max_drift: f64 = 0.0;
    for i in 0..n {
        let (pn, vn) = rk4(m, &p, &v, h)?;
        let t = t0 + (i + 1) as f64 * h;
        let (pc, vc, ev) = m.continue_chart(&pn, &vn);
        if let Some(ev) = ev {
            if ev == PathEvent::CollapseReached && !opts.continue_through_focal {
                return Err(Error::CollapseReached { t });
            }
            events.push((t, ev));
        }
        p = pc;
        v = vc;
        let e = m.inner(&p, &v, &v);
        max_drift = max_drift.max((e - e0).abs());
        if max_drift > opts.energy_tol {
            return Err(Error::StepTooLarge { drift: max_drift, tol: opts.energy_tol });
        }
        if (i + 1) % opts.record_every.max(1) == 0 || i + 1 == n {
            times.push(t);
            states.push((p.clone(), v.clone()));
            energy.push(e);
        }
    }
    Ok(GeodesicPath { times, states, energy, events, max_drift, step: h })
}

/// Advances a state by arclength `t` without recording, for bulk shooting.
pub fn advance(m: &ManifoldModel, p: &Point, v: &Tangent, t: f64, step: f64) -> Result<(Point, Tangent)> {
    let opts = GeodesicOptions { step, record_every: usize::MAX, ..GeodesicOptions::default() };
    let path = integrate_geodesic_with(m, p, v, t, &opts)?;
    Ok(path.endpoint().clone())
}
