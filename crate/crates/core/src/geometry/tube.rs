//! Volume density of the normal flow of a loop foil.

use super::foil::{curve_normal, Foil, Side};
use super::geodesic::{advance, DEFAULT_STEP};
use super::{ManifoldModel, Point};
use crate::error::{Error, Result};

/// Parameter step for pushing the loop tangent forward.
const S_STEP: f64 = 1e-5;

fn flowed(m: &ManifoldModel, foil: &Foil, side: Side, t: f64, s: f64) -> Result<Point> {
    let curve = foil.curve.as_ref().expect("checked by caller");
    let p = curve.point(s);
    let nu = curve_normal(m, &p, &curve.velocity(s))? * side.sign();
    Ok(advance(m, &p, &nu, t, DEFAULT_STEP)?.0)
}

/// `lambda_t(x)`: ratio of the length element of `L_t` at `phi_t(x)` to that of `L` at `x`,
/// for the loop parameter `s` of `x`.
pub fn tube_volume_density(m: &ManifoldModel, foil: &Foil, side: Side, t: f64, s: f64) -> Result<f64> {
    let curve = foil
        .curve
        .as_ref()
        .ok_or_else(|| Error::NotImplemented("tube densities need a loop foil".into()))?;
    if foil.codim != 1 {
        return Err(Error::Input("tube densities need a hypersurface foil".into()));
    }
    let push = |time: f64| -> Result<(Point, f64)> {
        let a = flowed(m, foil, side, time, s - S_STEP)?;
        let b = flowed(m, foil, side, time, s + S_STEP)?;
        let mid = flowed(m, foil, side, time, s)?;
        let d = (b - a) / (2.0 * S_STEP);
        Ok((mid.clone(), m.norm(&mid, &d)))
    };
    let base = m.norm(&curve.point(s), &curve.velocity(s));
    let (_, len_t) = push(t)?;
    let lambda = len_t / base;
    if !(lambda > 1e-8) {
        return Err(Error::SingularLevel { grad_norm: lambda });
    }
    Ok(lambda)
}
