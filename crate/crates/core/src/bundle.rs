//! Total spaces of vector bundles over one-dimensional bases with the metric
//! induced by a bundle metric and a compatible connection.
//!
//! Chart coordinates are `(theta, u)` with `u` in the fiber `R^k`. The
//! connection is the skew matrix field `A(theta)`; horizontal vectors are
//! `d/dtheta - (A u) . d/du`. Over a point base the chart is just `u`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fd::mean_curvature_level;
use crate::geometry::flat::wrap_positive;
use crate::geometry::foil::{Foil, LoopCurve};
use crate::geometry::{ManifoldModel, Point, Tangent, H_FD};
use crate::transnormal::{classify, ClassifyOptions, Profile, TransnormalFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpec {
    Circle {
        length: f64,
        /// Constant coefficient of the base metric `g_N = metric * dtheta^2`.
        #[serde(default = "one")]
        metric: f64,
    },
    Line {
        #[serde(default = "one")]
        metric: f64,
    },
    /// A single point; the total space is the fiber itself.
    Point,
}

fn one() -> f64 {
    1.0
}

/// Square matrix given as rows.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConnectionSpec {
    Zero,
    Constant { matrix: Rows },
    /// `A(theta) = constant + sum_m cos[m-1] cos(2 pi m theta / l) + sin[m-1] sin(2 pi m theta / l)`.
    Fourier {
        constant: Rows,
        #[serde(default)]
        cos: Vec<Rows>,
        #[serde(default)]
        sin: Vec<Rows>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub base: BaseSpec,
    pub rank: usize,
    #[serde(default = "zero_connection")]
    pub connection: ConnectionSpec,
    /// Orthogonal gluing matrix at the seam: `(theta + l, u) ~ (theta, T u)`.
    #[serde(default)]
    pub transition: Option<Rows>,
}

fn zero_connection() -> ConnectionSpec {
    ConnectionSpec::Zero
}

impl BundleSpec {
    pub fn trivial(base: BaseSpec, rank: usize) -> Self {
        Self { base, rank, connection: ConnectionSpec::Zero, transition: None }
    }

    /// Rank-1 bundle over a circle glued by `-1`.
    pub fn mobius(length: f64) -> Self {
        Self {
            base: BaseSpec::Circle { length, metric: 1.0 },
            rank: 1,
            connection: ConnectionSpec::Zero,
            transition: Some(vec![vec![-1.0]]),
        }
    }

    /// Rank-2 bundle over a circle with constant connection `omega * J`.
    pub fn twisted_plane(length: f64, omega: f64) -> Self {
        Self {
            base: BaseSpec::Circle { length, metric: 1.0 },
            rank: 2,
            connection: ConnectionSpec::Constant { matrix: vec![vec![0.0, -omega], vec![omega, 0.0]] },
            transition: None,
        }
    }
}

fn rows_to_matrix(rows: &Rows, k: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(Error::Input(format!("{what} must be {k}x{k}")));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleTotalSpace {
    spec: BundleSpec,
    k: usize,
    /// `Some((length, g_N))` for a circle base, `Some((inf, g_N))` for a line.
    base: Option<(f64, f64)>,
    a0: DMatrix<f64>,
    a_cos: Vec<DMatrix<f64>>,
    a_sin: Vec<DMatrix<f64>>,
    transition: DMatrix<f64>,
}

impl BundleTotalSpace {
    pub fn new(spec: BundleSpec) -> Result<Self> {
        let k = spec.rank;
        if k == 0 {
            return Err(Error::Input("bundle rank must be at least 1".into()));
        }
        let base = match spec.base {
            BaseSpec::Circle { length, metric } => {
                if !(length > 0.0 && metric > 0.0) {
                    return Err(Error::Input("circle base needs positive length and metric".into()));
                }
                Some((length, metric))
            }
            BaseSpec::Line { metric } => {
                if !(metric > 0.0) {
                    return Err(Error::Input("line base needs a positive metric".into()));
                }
                Some((f64::INFINITY, metric))
            }
            BaseSpec::Point => None,
        };
        let (a0, a_cos, a_sin) = match &spec.connection {
            ConnectionSpec::Zero => (DMatrix::zeros(k, k), vec![], vec![]),
            ConnectionSpec::Constant { matrix } => (rows_to_matrix(matrix, k, "connection")?, vec![], vec![]),
            ConnectionSpec::Fourier { constant, cos, sin } => {
                if !matches!(spec.base, BaseSpec::Circle { .. }) {
                    return Err(Error::Input("Fourier connections need a circle base".into()));
                }
                let c = cos.iter().map(|m| rows_to_matrix(m, k, "connection")).collect::<Result<_>>()?;
                let s = sin.iter().map(|m| rows_to_matrix(m, k, "connection")).collect::<Result<_>>()?;
                (rows_to_matrix(constant, k, "connection")?, c, s)
            }
        };
        for m in std::iter::once(&a0).chain(&a_cos).chain(&a_sin) {
            if (m + m.transpose()).abs().max() > 1e-12 {
                return Err(Error::Input("connection matrices must be skew-symmetric".into()));
            }
        }
        let transition = match &spec.transition {
            None => DMatrix::identity(k, k),
            Some(rows) => {
                if !matches!(spec.base, BaseSpec::Circle { .. }) {
                    return Err(Error::Input("a transition matrix needs a circle base".into()));
                }
                rows_to_matrix(rows, k, "transition")?
            }
        };
        if (&transition * transition.transpose() - DMatrix::identity(k, k)).abs().max() > 1e-12 {
            return Err(Error::Input("transition matrix must be orthogonal".into()));
        }
        let b = Self { spec, k, base, a0, a_cos, a_sin, transition };
        if let Some((l, _)) = b.base.filter(|(l, _)| l.is_finite()) {
            for i in 0..32 {
                let a = b.connection(l * i as f64 / 32.0);
                if (b.transition.transpose() * &a * &b.transition - &a).abs().max() > 1e-10 {
                    return Err(Error::Input(
                        "connection is not compatible with the transition at the seam".into(),
                    ));
                }
            }
        }
        Ok(b)
    }

    pub fn spec(&self) -> &BundleSpec {
        &self.spec
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k + usize::from(self.base.is_some())
    }

    pub fn has_base(&self) -> bool {
        self.base.is_some()
    }

    pub fn base_length(&self) -> Option<f64> {
        self.base.map(|(l, _)| l).filter(|l| l.is_finite())
    }

    pub fn base_metric(&self) -> f64 {
        self.base.map_or(1.0, |(_, g)| g)
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    fn fiber_offset(&self) -> usize {
        usize::from(self.base.is_some())
    }

    pub fn connection(&self, theta: f64) -> DMatrix<f64> {
        let mut a = self.a0.clone();
        if let Some(l) = self.base_length() {
            for (m, c) in self.a_cos.iter().enumerate() {
                a += c * (2.0 * PI * (m + 1) as f64 * theta / l).cos();
            }
            for (m, s) in self.a_sin.iter().enumerate() {
                a += s * (2.0 * PI * (m + 1) as f64 * theta / l).sin();
            }
        }
        a
    }

    pub fn connection_derivative(&self, theta: f64) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.k, self.k);
        if let Some(l) = self.base_length() {
            for (m, c) in self.a_cos.iter().enumerate() {
                let f = 2.0 * PI * (m + 1) as f64 / l;
                d -= c * (f * (f * theta).sin());
            }
            for (m, s) in self.a_sin.iter().enumerate() {
                let f = 2.0 * PI * (m + 1) as f64 / l;
                d += s * (f * (f * theta).cos());
            }
        }
        d
    }

    fn fiber(&self, p: &Point) -> DVector<f64> {
        p.rows(self.fiber_offset(), self.k).into_owned()
    }

    pub fn fiber_norm(&self, p: &Point) -> f64 {
        self.fiber(p).norm()
    }

    /// `[[g_N + |Au|^2, (Au)^T], [Au, I]]`.
    pub fn metric(&self, p: &Point) -> DMatrix<f64> {
        let Some((_, gn)) = self.base else {
            return DMatrix::identity(self.k, self.k);
        };
        let au = self.connection(p[0]) * self.fiber(p);
        let mut g = DMatrix::identity(self.k + 1, self.k + 1);
        g[(0, 0)] = gn + au.norm_squared();
        for a in 0..self.k {
            g[(0, a + 1)] = au[a];
            g[(a + 1, 0)] = au[a];
        }
        g
    }

    pub fn canonicalize_state(&self, p: &Point, v: &Tangent) -> (Point, Tangent) {
        let Some(l) = self.base_length() else {
            return (p.clone(), v.clone());
        };
        let turns = (p[0] / l).floor();
        let mut theta = wrap_positive(p[0], l);
        let mut turns = turns as i64;
        if theta == 0.0 && p[0] - turns as f64 * l >= l {
            turns += 1;
        }
        if !theta.is_finite() {
            theta = 0.0;
        }
        let t = self.transition_power(turns);
        let (mut q, mut w) = (p.clone(), v.clone());
        q[0] = theta;
        q.rows_mut(1, self.k).copy_from(&(&t * self.fiber(p)));
        w.rows_mut(1, self.k).copy_from(&(&t * v.rows(1, self.k)));
        (q, w)
    }

    fn transition_power(&self, n: i64) -> DMatrix<f64> {
        let step = if n >= 0 { self.transition.clone() } else { self.transition.transpose() };
        let mut out = DMatrix::identity(self.k, self.k);
        for _ in 0..n.unsigned_abs() {
            out = &step * out;
        }
        out
    }

    pub fn images(&self, p: &Point, v: &Tangent) -> Vec<(Point, Tangent)> {
        let Some(l) = self.base_length() else {
            return vec![(p.clone(), v.clone())];
        };
        let mut out = vec![(p.clone(), v.clone())];
        for (shift, t) in [(-l, self.transition.clone()), (l, self.transition.transpose())] {
            let (mut q, mut w) = (p.clone(), v.clone());
            q[0] += shift;
            q.rows_mut(1, self.k).copy_from(&(&t * p.rows(1, self.k)));
            w.rows_mut(1, self.k).copy_from(&(&t * v.rows(1, self.k)));
            out.push((q, w));
        }
        out
    }

    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        let mut b = Vec::with_capacity(self.dim());
        match self.base {
            Some((l, _)) if l.is_finite() => b.push((0.0, l)),
            Some(_) => b.push((-3.0, 3.0)),
            None => {}
        }
        b.extend(std::iter::repeat_n((-1.5, 1.5), self.k));
        b
    }

    /// Parallel transport of `u0` along the base path `theta0 -> theta0 + dtheta`
    /// (`du/ds = -A(theta(s)) u dtheta`), returning the lifted states. No seam is applied.
    pub fn horizontal_lift(&self, theta0: f64, dtheta: f64, u0: &DVector<f64>, steps: usize) -> Result<Vec<Point>> {
        if !self.has_base() {
            return Err(Error::Input("horizontal lifts need a base curve".into()));
        }
        if u0.len() != self.k || steps == 0 {
            return Err(Error::Input(format!("fiber vector must have {} entries and steps > 0", self.k)));
        }
        let h = 1.0 / steps as f64;
        let rhs = |s: f64, u: &DVector<f64>| -(self.connection(theta0 + s * dtheta) * u) * dtheta;
        let mut u = u0.clone();
        let mut out = Vec::with_capacity(steps + 1);
        let pack = |s: f64, u: &DVector<f64>| {
            let mut p = Point::zeros(self.k + 1);
            p[0] = theta0 + s * dtheta;
            p.rows_mut(1, self.k).copy_from(u);
            p
        };
        out.push(pack(0.0, &u));
        for i in 0..steps {
            let s = i as f64 * h;
            let k1 = rhs(s, &u);
            let k2 = rhs(s + 0.5 * h, &(&u + &k1 * (0.5 * h)));
            let k3 = rhs(s + 0.5 * h, &(&u + &k2 * (0.5 * h)));
            let k4 = rhs(s + h, &(&u + &k3 * h));
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            out.push(pack(s + h, &u));
        }
        Ok(out)
    }

    /// Holonomy of one or more full loops around a circle base, seam included.
    pub fn holonomy(&self, loops: usize, steps_per_loop: usize) -> Result<DMatrix<f64>> {
        let l = self
            .base_length()
            .ok_or_else(|| Error::Input("holonomy needs a circle base".into()))?;
        let mut h = DMatrix::zeros(self.k, self.k);
        for j in 0..self.k {
            let mut e = DVector::zeros(self.k);
            e[j] = 1.0;
            let path = self.horizontal_lift(0.0, l * loops as f64, &e, steps_per_loop * loops)?;
            let end = path.last().expect("non-empty path");
            let (c, _) = self.canonicalize_state(end, &Tangent::zeros(self.dim()));
            h.set_column(j, &c.rows(1, self.k));
        }
        Ok(h)
    }

    /// `|grad f|^2` of `f = |u|^2` from the closed-form inverse metric.
    pub fn squared_norm_grad_sq(&self, p: &Point) -> f64 {
        let u = self.fiber(p);
        let Some((_, gn)) = self.base else {
            return 4.0 * u.norm_squared();
        };
        let au = self.connection(p[0]) * &u;
        // g^{-1} on the fiber block is I + (Au)(Au)^T / g_N
        4.0 * (u.norm_squared() + au.dot(&u).powi(2) / gn)
    }

    /// `Delta f` of `f = |u|^2` from the divergence of the closed-form gradient.
    pub fn squared_norm_laplacian(&self, p: &Point) -> f64 {
        let u = self.fiber(p);
        let k = self.k as f64;
        let Some((_, gn)) = self.base else {
            return 2.0 * k;
        };
        let a = self.connection(p[0]);
        let ap = self.connection_derivative(p[0]);
        let au = &a * &u;
        let s = au.dot(&u);
        let sym = &a + a.transpose();
        // X^theta = -2 s / g_N, X^u = 2u + 2 (Au) s / g_N, sqrt(det g) = sqrt(g_N) constant.
        let d_theta = -2.0 * (&ap * &u).dot(&u) / gn;
        let d_u = 2.0 * k + 2.0 * (a.trace() * s + au.dot(&(&sym * &u))) / gn;
        d_theta + d_u
    }

    /// Closed-form gradient of `|u|^2`.
    pub fn squared_norm_gradient(&self, p: &Point) -> Tangent {
        let off = self.fiber_offset();
        let mut df = Tangent::zeros(self.dim());
        df.rows_mut(off, self.k).copy_from(&(self.fiber(p) * 2.0));
        match self.metric(p).try_inverse() {
            Some(gi) => gi * df,
            None => df,
        }
    }

    /// The zero section as a foil: a loop for rank 1 over a circle, otherwise
    /// base samples times fiber directions.
    pub fn zero_section_foil(&self, n: usize) -> Result<Foil> {
        let model = ManifoldModel::Bundle(self.clone());
        match (&self.spec.base, self.k) {
            (BaseSpec::Circle { length, .. }, 1) => {
                let curve = LoopCurve::line(Point::zeros(2), Tangent::from_vec(vec![*length, 0.0]));
                Foil::regular_loop(&model, curve, n)
            }
            (BaseSpec::Line { .. }, 1) => {
                Err(Error::NotImplemented("zero section of a line bundle over a line".into()))
            }
            (BaseSpec::Point, 1) => Err(Error::Input("the zero section of a rank-1 bundle over a point is a point".into())),
            _ => {
                let dirs = sphere_directions(self.k, n);
                let bases: Vec<f64> = match self.base_length() {
                    Some(l) => (0..8).map(|i| l * i as f64 / 8.0).collect(),
                    None if self.has_base() => vec![0.0],
                    None => vec![],
                };
                let mut samples = Vec::new();
                let off = self.fiber_offset();
                let mk = |theta: Option<f64>, d: &DVector<f64>| {
                    let mut p = Point::zeros(self.dim());
                    let mut v = Tangent::zeros(self.dim());
                    if let Some(t) = theta {
                        p[0] = t;
                    }
                    v.rows_mut(off, self.k).copy_from(d);
                    (p, v)
                };
                if bases.is_empty() {
                    samples.extend(dirs.iter().map(|d| mk(None, d)));
                } else {
                    for &t in &bases {
                        samples.extend(dirs.iter().map(|d| mk(Some(t), d)));
                    }
                }
                Ok(Foil::singular(self.k, samples))
            }
        }
    }
}

/// Roughly uniform unit vectors in `R^k`; antipodally symmetric.
pub fn sphere_directions(k: usize, n: usize) -> Vec<DVector<f64>> {
    match k {
        1 => vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-1.0])],
        2 => (0..n)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / n as f64;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            // Fibonacci points on the first two coordinates' sphere, mirrored.
            let half = n.div_ceil(2).max(1);
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut out = Vec::with_capacity(2 * half);
            for i in 0..half {
                let z = 1.0 - (2 * i + 1) as f64 / (2 * half) as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                let mut d = DVector::zeros(k);
                d[0] = r * a.cos();
                d[1] = r * a.sin();
                d[2] = z;
                out.push(d.clone());
                out.push(-d);
            }
            out
        }
    }
}

/// `f = |u|^2` with `b(f) = 4f` and `a(f) = 2k`; the descriptor comes from
/// classifying the zero section.
pub fn squared_norm_function(spec: &BundleSpec) -> Result<TransnormalFunction> {
    let bundle = BundleTotalSpace::new(spec.clone())?;
    let k = bundle.rank();
    let model = ManifoldModel::Bundle(bundle.clone());
    let seed = bundle.zero_section_foil(16)?;
    let opts = ClassifyOptions { t_max: 2.0, dt: 0.1, ..ClassifyOptions::default() };
    let descriptor = classify(&model, &seed, &opts)?;
    let b_eval = bundle.clone();
    let b_grad = bundle.clone();
    Ok(TransnormalFunction::new(
        model,
        Arc::new(move |p: &Point| b_eval.fiber_norm(p).powi(2)),
        Profile::Linear { slope: 4.0, intercept: 0.0 },
    )
    .with_gradient(Arc::new(move |p: &Point| b_grad.squared_norm_gradient(p)))
    .with_profile_a(Profile::Linear { slope: 0.0, intercept: 2.0 * k as f64 })
    .with_descriptor(descriptor))
}

/// Mean curvature of the sphere subbundle `|u| = r` from the Laplacian of `|u|^2`.
pub fn sphere_bundle_mean_curvature(spec: &BundleSpec, r: f64) -> Result<f64> {
    let bundle = BundleTotalSpace::new(spec.clone())?;
    let model = ManifoldModel::Bundle(bundle.clone());
    let mut p = Point::zeros(bundle.dim());
    if bundle.has_base() {
        p[0] = 0.37 * bundle.base_length().unwrap_or(1.0);
    }
    p[bundle.fiber_offset()] = r;
    let f = move |q: &Point| bundle.fiber_norm(q).powi(2);
    mean_curvature_level(&f, &model, &p, 4.0 * r * r, 4.0, H_FD)
}
