//! Volume normalization on a circle by cumulative-distribution matching.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
const PANELS: usize = 256;
/// Relative mass mismatch tolerated between the two densities.
pub const MASS_TOL: f64 = 1e-12;

fn gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

/// Lifted cumulative integral of a positive periodic density.
#[derive(Clone)]
struct Cdf {
    rho: Density,
    length: f64,
    width: f64,
    cum: Vec<f64>,
    mass: f64,
}

impl Cdf {
    fn new(rho: Density, length: f64) -> Self {
        let width = length / PANELS as f64;
        let mut cum = Vec::with_capacity(PANELS + 1);
        cum.push(0.0);
        for i in 0..PANELS {
            let a = i as f64 * width;
            let next = cum[i] + gauss(&*rho, a, a + width);
            cum.push(next);
        }
        let mass = cum[PANELS];
        Self { rho, length, width, cum, mass }
    }

    fn at(&self, x: f64) -> f64 {
        let k = (x / self.length).floor();
        let x0 = x - k * self.length;
        let i = ((x0 / self.width) as usize).min(PANELS - 1);
        let a = i as f64 * self.width;
        self.cum[i] + gauss(&*self.rho, a, x0) + k * self.mass
    }

    fn fourier1(&self) -> (f64, f64) {
        let w = 2.0 * PI / self.length;
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..PANELS {
            let a = i as f64 * self.width;
            re += gauss(&|x| (self.rho)(x) * (w * x).cos(), a, a + self.width);
            im -= gauss(&|x| (self.rho)(x) * (w * x).sin(), a, a + self.width);
        }
        (re, im)
    }
}

/// Solves `(1 - t) C0(x) + t C1(x) = c` for the lift `x`.
fn invert(c0: &Cdf, c1: &Cdf, t: f64, c: f64) -> f64 {
    let mass = (1.0 - t) * c0.mass + t * c1.mass;
    let length = c0.length;
    let cdf = |x: f64| (1.0 - t) * c0.at(x) + t * c1.at(x);
    let rho = |x: f64| (1.0 - t) * (c0.rho)(x) + t * (c1.rho)(x);
    let guess = c / mass * length;
    let (mut lo, mut hi) = (guess - length, guess + length);
    let mut x = guess;
    for _ in 0..200 {
        let g = cdf(x) - c;
        if g.abs() <= 1e-15 * mass.max(c.abs()) {
            break;
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = x - g / rho(x);
        x = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * length {
            break;
        }
    }
    x
}

/// Result of matching `rho0` to `rho1`: `chi^* (rho1 dx) = rho0 dx`.
#[derive(Clone)]
pub struct MoserResult {
    cdf0: Cdf,
    cdf1: Cdf,
    pub length: f64,
    pub base_point: f64,
    pub pushforward_error: f64,
    pub min_lift_derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoserReport {
    pub length: f64,
    pub mass: f64,
    pub base_point: f64,
    pub pushforward_error: f64,
    pub min_lift_derivative: f64,
    pub identity_at_start: bool,
}

impl MoserResult {
    /// The isotopy `chi_t`, matching `rho0` to `(1 - t) rho0 + t rho1`; `chi_0` is the identity.
    pub fn chi_t(&self, t: f64, x: f64) -> f64 {
        if t == 0.0 {
            return x;
        }
        let ct = |y: f64| (1.0 - t) * self.cdf0.at(y) + t * self.cdf1.at(y);
        invert(&self.cdf0, &self.cdf1, t, self.cdf0.at(x) + ct(t * self.base_point))
    }

    pub fn chi(&self, x: f64) -> f64 {
        self.chi_t(1.0, x)
    }

    /// Derivative of the lift of `chi_t` by a fourth-order central difference.
    pub fn chi_t_derivative(&self, t: f64, x: f64) -> f64 {
        let h = 1e-3 * self.length / (2.0 * PI);
        let c = |d: f64| self.chi_t(t, x + d);
        (8.0 * (c(h) - c(-h)) - (c(2.0 * h) - c(-2.0 * h))) / (12.0 * h)
    }

    pub fn report(&self) -> MoserReport {
        let identity_at_start = (0..64).all(|i| {
            let x = self.length * i as f64 / 64.0;
            self.chi_t(0.0, x) == x
        });
        MoserReport {
            length: self.length,
            mass: self.cdf0.mass,
            base_point: self.base_point,
            pushforward_error: self.pushforward_error,
            min_lift_derivative: self.min_lift_derivative,
            identity_at_start,
        }
    }
}

/// Finds a diffeomorphism `chi` of the circle of the given length, isotopic to the
/// identity, with `rho1(chi(x)) chi'(x) = rho0(x)`.
pub fn moser_normalize(boundary_dim: usize, rho0: Density, rho1: Density, length: f64) -> Result<MoserResult> {
    if boundary_dim != 1 {
        return Err(Error::NotImplemented(format!(
            "volume normalization on {boundary_dim}-dimensional boundaries"
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Input("circle length must be positive".into()));
    }
    for i in 0..512 {
        let x = length * i as f64 / 512.0;
        if !(rho0(x) > 0.0 && rho1(x) > 0.0) {
            return Err(Error::Input(format!("density not positive at x = {x}")));
        }
    }
    let cdf0 = Cdf::new(rho0, length);
    let cdf1 = Cdf::new(rho1, length);
    if (cdf0.mass - cdf1.mass).abs() > MASS_TOL * cdf0.mass {
        return Err(Error::Input(format!("masses differ: {} vs {}", cdf0.mass, cdf1.mass)));
    }
    let (a_re, a_im) = cdf0.fourier1();
    let (b_re, b_im) = cdf1.fourier1();
    let tiny = 1e-9 * cdf0.mass;
    let base_point = if a_re.hypot(a_im) <= tiny || b_re.hypot(b_im) <= tiny {
        0.0
    } else {
        let shift = -(b_im.atan2(b_re) - a_im.atan2(a_re)) * length / (2.0 * PI);
        shift - length * (shift / length + 0.5).floor()
    };
    let mut out = MoserResult {
        cdf0,
        cdf1,
        length,
        base_point,
        pushforward_error: 0.0,
        min_lift_derivative: f64::INFINITY,
    };
    let mut err: f64 = 0.0;
    for i in 0..512 {
        let x = length * (i as f64 + 0.5) / 512.0;
        let pushed = (out.cdf1.rho)(out.chi(x)) * out.chi_t_derivative(1.0, x);
        err = err.max((pushed - (out.cdf0.rho)(x)).abs());
    }
    let mut min_d = f64::INFINITY;
    for j in 0..=8 {
        let t = j as f64 / 8.0;
        for i in 0..128 {
            let x = length * (i as f64 + 0.5) / 128.0;
            min_d = min_d.min(out.chi_t_derivative(t, x));
        }
    }
    out.pushforward_error = err;
    out.min_lift_derivative = min_d;
    Ok(out)
}
