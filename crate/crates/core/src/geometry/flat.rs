//! Flat surfaces obtained as quotients of the Euclidean plane.
//!
//! The supported deck groups are generated by at most one isometry along the
//! x axis (a translation, or a glide that also reflects across the x axis)
//! and at most one translation along the y axis. This covers the plane,
//! cylinder, Möbius band, torus and Klein bottle.

use serde::{Deserialize, Serialize};

use super::{Point, Tangent};
use crate::error::{Error, Result};

/// Axis a glide reflects across.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectAxis {
    /// `(x, y) -> (x, -y)`
    X,
    /// `(x, y) -> (-x, y)`
    Y,
}

/// A translation, optionally composed with a reflection (a glide).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneIsometry {
    pub translation: [f64; 2],
    #[serde(default)]
    pub reflect: Option<ReflectAxis>,
}

impl PlaneIsometry {
    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { translation: [dx, dy], reflect: None }
    }

    pub fn glide(dx: f64) -> Self {
        Self { translation: [dx, 0.0], reflect: Some(ReflectAxis::X) }
    }
}

/// Which natural foliation of the quotient is used for leaf coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlatFoliation {
    /// Horizontal lines `y = const`.
    Horizontal,
    /// Circles around a center (only meaningful on the plane).
    Radial { center: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatQuotient {
    generators: Vec<PlaneIsometry>,
    /// Length of the x generator and whether it is a glide.
    along_x: Option<(f64, bool)>,
    y_period: Option<f64>,
    foliation: FlatFoliation,
}

impl FlatQuotient {
    pub fn new(generators: Vec<PlaneIsometry>, foliation: FlatFoliation) -> Result<Self> {
        let mut along_x = None;
        let mut y_period = None;
        for g in &generators {
            let [dx, dy] = g.translation;
            if !(dx.is_finite() && dy.is_finite()) {
                return Err(Error::UnsupportedGroup("non-finite translation".into()));
            }
            match (g.reflect, dx != 0.0, dy != 0.0) {
                (None, true, false) | (Some(ReflectAxis::X), true, false) => {
                    if along_x.is_some() {
                        return Err(Error::UnsupportedGroup(
                            "at most one generator along the x axis".into(),
                        ));
                    }
                    if dx <= 0.0 {
                        return Err(Error::UnsupportedGroup(
                            "x generator must have positive length".into(),
                        ));
                    }
                    along_x = Some((dx, g.reflect.is_some()));
                }
                (None, false, true) => {
                    if y_period.is_some() {
                        return Err(Error::UnsupportedGroup(
                            "at most one translation along the y axis".into(),
                        ));
                    }
                    y_period = Some(dy.abs());
                }
                _ => {
                    return Err(Error::UnsupportedGroup(format!(
                        "generator {g:?} is not an axis translation or an x-glide"
                    )))
                }
            }
        }
        if matches!(foliation, FlatFoliation::Radial { .. }) && !generators.is_empty() {
            return Err(Error::Input("radial foliation requires the plane (no generators)".into()));
        }
        Ok(Self { generators, along_x, y_period, foliation })
    }

    pub fn generators(&self) -> &[PlaneIsometry] {
        &self.generators
    }

    pub fn foliation(&self) -> FlatFoliation {
        self.foliation
    }

    pub fn x_generator(&self) -> Option<(f64, bool)> {
        self.along_x
    }

    pub fn y_period(&self) -> Option<f64> {
        self.y_period
    }

    pub fn has_glide(&self) -> bool {
        matches!(self.along_x, Some((_, true)))
    }

    /// Axis-aligned fundamental rectangle `[[x0, x1], [y0, y1]]`; unbounded sides are infinite.
    pub fn fundamental_domain(&self) -> [[f64; 2]; 2] {
        let xs = match self.along_x {
            Some((c, _)) => [0.0, c],
            None => [f64::NEG_INFINITY, f64::INFINITY],
        };
        let ys = match self.y_period {
            Some(p) => [-0.5 * p, 0.5 * p],
            None => [f64::NEG_INFINITY, f64::INFINITY],
        };
        [xs, ys]
    }

    /// Reduces a state to the fundamental domain, transforming the vector by the
    /// differential of the deck element used.
    pub fn canonicalize_state(&self, p: &Point, v: &Tangent) -> (Point, Tangent) {
        let (mut x, mut y) = (p[0], p[1]);
        let mut vy = v[1];
        if let Some(per) = self.y_period {
            y = wrap_centered(y, per);
        }
        if let Some((c, glide)) = self.along_x {
            let k = (x / c).floor();
            x -= k * c;
            let mut odd = (k as i64).rem_euclid(2) == 1;
            if x >= c {
                x = 0.0;
                odd = !odd;
            }
            if x < 0.0 {
                x = 0.0;
            }
            if glide && odd {
                y = -y;
                vy = -vy;
                if let Some(per) = self.y_period {
                    y = wrap_centered(y, per);
                }
            }
        }
        (Point::from_vec(vec![x, y]), Tangent::from_vec(vec![v[0], vy]))
    }

    pub fn canonicalize(&self, p: &Point) -> Point {
        self.canonicalize_state(p, &Tangent::zeros(2)).0
    }

    /// Images of `(p, v)` under the deck elements adjacent to the identity.
    pub fn images(&self, p: &Point, v: &Tangent) -> Vec<(Point, Tangent)> {
        let kx_range: &[i32] = if self.along_x.is_some() { &[-1, 0, 1] } else { &[0] };
        let ky_range: &[i32] = if self.y_period.is_some() { &[-1, 0, 1] } else { &[0] };
        let mut out = Vec::with_capacity(9);
        for &kx in kx_range {
            for &ky in ky_range {
                let (mut x, mut y, mut vy) = (p[0], p[1], v[1]);
                if let Some((c, glide)) = self.along_x {
                    x += kx as f64 * c;
                    if glide && kx % 2 != 0 {
                        y = -y;
                        vy = -vy;
                    }
                }
                if let Some(per) = self.y_period {
                    y += ky as f64 * per;
                }
                out.push((Point::from_vec(vec![x, y]), Tangent::from_vec(vec![v[0], vy])));
            }
        }
        out
    }

    pub fn leaf_coordinate(&self, p: &Point) -> f64 {
        match self.foliation {
            FlatFoliation::Horizontal => self.canonicalize(p)[1],
            FlatFoliation::Radial { center } => (p[0] - center[0]).hypot(p[1] - center[1]),
        }
    }

    pub fn leaf_distance(&self, a: f64, b: f64) -> f64 {
        match self.foliation {
            FlatFoliation::Radial { .. } => (a - b).abs(),
            FlatFoliation::Horizontal => {
                let signs: &[f64] = if self.has_glide() { &[1.0, -1.0] } else { &[1.0] };
                let shifts: &[f64] = if self.y_period.is_some() { &[-1.0, 0.0, 1.0] } else { &[0.0] };
                let per = self.y_period.unwrap_or(0.0);
                let mut best = f64::INFINITY;
                for &s in signs {
                    for &k in shifts {
                        best = best.min((s * a + k * per - b).abs());
                    }
                }
                best
            }
        }
    }

    /// Signed leaf offset `a - b`, wrapped into `(-P/2, P/2]` when the leaf space is a circle.
    pub fn leaf_offset(&self, a: f64, b: f64) -> f64 {
        match (self.foliation, self.y_period) {
            (FlatFoliation::Horizontal, Some(per)) => {
                let w = wrap_centered(a - b, per);
                if w <= -0.5 * per {
                    w + per
                } else {
                    w
                }
            }
            _ => a - b,
        }
    }
}

impl FlatQuotient {
    /// Fundamental rectangle with unbounded sides clipped to `[-3, 3]`.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        let [xs, ys] = self.fundamental_domain();
        let clip = |r: [f64; 2]| if r[0].is_finite() { (r[0], r[1]) } else { (-3.0, 3.0) };
        vec![clip(xs), clip(ys)]
    }
}

/// Wraps `y` into `[-p/2, p/2)`.
pub(crate) fn wrap_centered(y: f64, p: f64) -> f64 {
    let mut r = y - p * ((y + 0.5 * p) / p).floor();
    if r >= 0.5 * p {
        r -= p;
    }
    if r < -0.5 * p {
        r = -0.5 * p;
    }
    r
}

/// Wraps `x` into `[0, p)`.
pub(crate) fn wrap_positive(x: f64, p: f64) -> f64 {
    let mut r = x - p * (x / p).floor();
    if r >= p {
        r -= p;
    }
    if r < 0.0 {
        r = 0.0;
    }
    r
}
