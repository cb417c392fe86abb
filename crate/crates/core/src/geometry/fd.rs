//! Finite-difference gradient, Laplace-Beltrami operator, divergence and mean curvature.

use super::{EndCondition, ManifoldModel, Point, Tangent, EPS_REG};
use crate::error::{Error, Result};

/// Fails when a stencil of half-width `2h` around `p` leaves an open chart patch.
fn check_stencil(m: &ManifoldModel, p: &Point, h: f64) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::Input("finite-difference step must be positive".into()));
    }
    if let ManifoldModel::Warped(w) = m {
        for (end, at) in w.ends() {
            if end == EndCondition::Open && at.is_finite() && (p[0] - at).abs() <= 2.0 * h {
                return Err(Error::Domain(format!("stencil at r = {} crosses the chart boundary {at}", p[0])));
            }
        }
    }
    Ok(())
}

fn shifted(p: &Point, i: usize, s: f64) -> Point {
    let mut q = p.clone();
    q[i] += s;
    q
}

/// Central-difference differential `df` (covector components).
pub fn differential_fd(f: &dyn Fn(&Point) -> f64, p: &Point, h: f64) -> Tangent {
    Tangent::from_fn(p.len(), |i, _| (f(&shifted(p, i, h)) - f(&shifted(p, i, -h))) / (2.0 * h))
}

/// `grad f = g^{-1} df` with central differences.
pub fn gradient_fd(f: &dyn Fn(&Point) -> f64, m: &ManifoldModel, p: &Point, h: f64) -> Result<Tangent> {
    check_stencil(m, p, h)?;
    let g = m.metric_at(p)?;
    let df = differential_fd(f, p, h);
    let gi = g.try_inverse().ok_or_else(|| Error::SingularMetric("metric not invertible".into()))?;
    Ok(gi * df)
}

/// `g^{ij} (d_i d_j f - Gamma^k_ij d_k f)`.
pub fn laplace_beltrami_fd(f: &dyn Fn(&Point) -> f64, m: &ManifoldModel, p: &Point, h: f64) -> Result<f64> {
    check_stencil(m, p, h)?;
    let g = m.metric_at(p)?;
    let gi = g.try_inverse().ok_or_else(|| Error::SingularMetric("metric not invertible".into()))?;
    let gamma = m.christoffel(p)?;
    let n = p.len();
    let f0 = f(p);
    let df = differential_fd(f, p, h);
    let mut out = 0.0;
    for i in 0..n {
        for j in i..n {
            let d2 = if i == j {
                (f(&shifted(p, i, h)) - 2.0 * f0 + f(&shifted(p, i, -h))) / (h * h)
            } else {
                let pp = shifted(&shifted(p, i, h), j, h);
                let pm = shifted(&shifted(p, i, h), j, -h);
                let mp = shifted(&shifted(p, i, -h), j, h);
                let mm = shifted(&shifted(p, i, -h), j, -h);
                (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h)
            };
            let conn: f64 = (0..n).map(|k| gamma[k][(i, j)] * df[k]).sum();
            let w = if i == j { 1.0 } else { 2.0 };
            out += w * gi[(i, j)] * (d2 - conn);
        }
    }
    Ok(out)
}

/// `(1 / sqrt|g|) d_i (sqrt|g| X^i)` with central differences.
pub fn divergence_fd(x: &dyn Fn(&Point) -> Result<Tangent>, m: &ManifoldModel, p: &Point, h: f64) -> Result<f64> {
    check_stencil(m, p, h)?;
    let vol = |q: &Point| m.metric_raw(q).determinant().max(0.0).sqrt();
    let v0 = vol(p);
    if !(v0 > 0.0) {
        return Err(Error::SingularMetric("degenerate volume element".into()));
    }
    let mut out = 0.0;
    for i in 0..p.len() {
        let (qp, qm) = (shifted(p, i, h), shifted(p, i, -h));
        out += (vol(&qp) * x(&qp)?[i] - vol(&qm) * x(&qm)?[i]) / (2.0 * h);
    }
    Ok(out / v0)
}

fn require_regular(grad_norm: f64) -> Result<()> {
    if grad_norm <= EPS_REG || !grad_norm.is_finite() {
        return Err(Error::SingularLevel { grad_norm });
    }
    Ok(())
}

/// Mean curvature of the level of `f` through `p` from the Laplacian:
/// `H = -Delta f / sqrt(b) + b' / (2 sqrt(b))`, normal `grad f / |grad f|`.
pub fn mean_curvature_level(
    f: &dyn Fn(&Point) -> f64,
    m: &ManifoldModel,
    p: &Point,
    b_value: f64,
    b_prime: f64,
    h: f64,
) -> Result<f64> {
    let grad = gradient_fd(f, m, p, h)?;
    require_regular(m.norm(p, &grad))?;
    if !(b_value > 0.0) {
        return Err(Error::SingularLevel { grad_norm: b_value.max(0.0).sqrt() });
    }
    let lap = laplace_beltrami_fd(f, m, p, h)?;
    let sb = b_value.sqrt();
    Ok(-lap / sb + b_prime / (2.0 * sb))
}

/// Mean curvature as `-div(nu)` with `nu = grad f / |grad f|`; independent of the Laplacian route.
pub fn mean_curvature_divergence(f: &dyn Fn(&Point) -> f64, m: &ManifoldModel, p: &Point, h: f64) -> Result<f64> {
    let grad = gradient_fd(f, m, p, h)?;
    require_regular(m.norm(p, &grad))?;
    let inner_h = h * 0.5;
    let nu = |q: &Point| -> Result<Tangent> {
        let g = gradient_fd(f, m, q, inner_h)?;
        let n = m.norm(q, &g);
        require_regular(n)?;
        Ok(g / n)
    };
    Ok(-divergence_fd(&nu, m, p, h)?)
}
