//! Smooth cut-off on the neck interval.

use crate::error::{Error, Result};

/// Half-width of the neck interval.
pub const NECK: f64 = 2.0 / 3.0;
/// `F` is constant outside `[-EDGE, EDGE]`.
pub const EDGE: f64 = 1.0 / 6.0;

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step from 0 at `t <= 0` to 1 at `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    let a = psi(t);
    let b = psi(1.0 - t);
    a / (a + b)
}

pub(crate) fn check_neck(r: f64) -> Result<()> {
    if r.is_finite() && r.abs() < NECK {
        Ok(())
    } else {
        Err(Error::Domain(format!("r = {r} outside the neck (-2/3, 2/3)")))
    }
}

/// Non-increasing cut-off: exactly 1 for `r <= -1/6`, exactly 0 for `r >= 1/6`, `F(0) = 1/2`.
pub fn bump(r: f64) -> Result<f64> {
    check_neck(r)?;
    Ok(bump_unchecked(r))
}

pub(crate) fn bump_unchecked(r: f64) -> f64 {
    smooth_step((EDGE - r) / (2.0 * EDGE))
}
