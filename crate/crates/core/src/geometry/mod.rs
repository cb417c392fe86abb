//! Manifold representations, metric evaluation and chart bookkeeping.

pub mod fd;
pub mod flat;
pub mod foil;
pub mod geodesic;
pub mod tube;
pub mod warped;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use flat::{FlatFoliation, FlatQuotient, PlaneIsometry, ReflectAxis};
pub use warped::{EndCondition, Fiber, IntervalKind, Warp, WarpedProfile};

use crate::bundle::BundleTotalSpace;
use crate::error::{Error, Result};

/// Chart coordinates of a point.
pub type Point = DVector<f64>;
/// Components of a tangent vector in the chart basis.
pub type Tangent = DVector<f64>;

/// Tolerance for identifying points.
pub const EPS_PT: f64 = 1e-6;
/// Allowed drift of `g(v, v)` along a geodesic.
pub const EPS_ENERGY: f64 = 1e-8;
/// Gradient norm below which a point counts as singular.
pub const EPS_REG: f64 = 1e-6;
/// Default finite-difference step for differential operators.
pub const H_FD: f64 = 1e-4;

/// Step used for metric derivatives in the Christoffel symbols.
const H_CHRISTOFFEL: f64 = 1e-3;

/// Something that happened while continuing a state across a chart end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathEvent {
    CollapseReached,
    MirrorCrossed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldModel {
    Flat(FlatQuotient),
    Warped(WarpedProfile),
    Bundle(BundleTotalSpace),
}

/// `gamma[k][(i, j)] = Gamma^k_ij`.
pub type Christoffel = Vec<DMatrix<f64>>;

impl ManifoldModel {
    pub fn dim(&self) -> usize {
        match self {
            ManifoldModel::Flat(_) | ManifoldModel::Warped(_) => 2,
            ManifoldModel::Bundle(b) => b.dim(),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, ManifoldModel::Flat(_))
    }

    /// Metric matrix at `p` without domain or definiteness checks.
    pub fn metric_raw(&self, p: &Point) -> DMatrix<f64> {
        match self {
            ManifoldModel::Flat(_) => DMatrix::identity(2, 2),
            ManifoldModel::Warped(w) => {
                let [a, b] = w.metric_raw(p);
                DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]))
            }
            ManifoldModel::Bundle(b) => b.metric(p),
        }
    }

    pub fn metric_at(&self, p: &Point) -> Result<DMatrix<f64>> {
        if p.len() != self.dim() {
            return Err(Error::Input(format!("expected {} coordinates, got {}", self.dim(), p.len())));
        }
        if let ManifoldModel::Warped(w) = self {
            w.check_domain(p)?;
        }
        let g = self.metric_raw(p);
        if g.iter().any(|x| !x.is_finite()) || g.clone().cholesky().is_none() {
            return Err(Error::SingularMetric(format!("metric at {:?} is not positive definite", p.as_slice())));
        }
        Ok(g)
    }

    pub fn inner(&self, p: &Point, a: &Tangent, b: &Tangent) -> f64 {
        match self {
            ManifoldModel::Flat(_) => a.dot(b),
            _ => (self.metric_raw(p) * b).dot(a),
        }
    }

    pub fn norm(&self, p: &Point, v: &Tangent) -> f64 {
        self.inner(p, v, v).max(0.0).sqrt()
    }

    pub fn normalize(&self, p: &Point, v: &Tangent) -> Tangent {
        v / self.norm(p, v)
    }

    /// Partial derivatives `d g / d x^m` by fourth-order central differences.
    pub fn metric_derivatives(&self, p: &Point) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        if self.is_flat() {
            return vec![DMatrix::zeros(n, n); n];
        }
        let h = H_CHRISTOFFEL;
        (0..n)
            .map(|m| {
                let at = |s: f64| {
                    let mut q = p.clone();
                    q[m] += s * h;
                    self.metric_raw(&q)
                };
                (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) / (12.0 * h)
            })
            .collect()
    }

    pub fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let n = self.dim();
        if self.is_flat() {
            return Ok(vec![DMatrix::zeros(n, n); n]);
        }
        let ginv = self
            .metric_raw(p)
            .try_inverse()
            .ok_or_else(|| Error::SingularMetric(format!("metric at {:?} is singular", p.as_slice())))?;
        let dg = self.metric_derivatives(p);
        let mut out = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                // lowered symbol Gamma_{l,ij}
                let low: Vec<f64> =
                    (0..n).map(|l| 0.5 * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)])).collect();
                for (k, gk) in out.iter_mut().enumerate() {
                    let v: f64 = (0..n).map(|l| ginv[(k, l)] * low[l]).sum();
                    gk[(i, j)] = v;
                    gk[(j, i)] = v;
                }
            }
        }
        Ok(out)
    }

    /// `-Gamma^k_ij v^i v^j`. Products with a vanishing factor are skipped so that
    /// radial motion next to a collapse end stays finite.
    pub fn geodesic_acceleration(&self, p: &Point, v: &Tangent) -> Result<Tangent> {
        let n = self.dim();
        if self.is_flat() {
            return Ok(Tangent::zeros(n));
        }
        let gamma = self.christoffel(p)?;
        let mut a = Tangent::zeros(n);
        for (k, gk) in gamma.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let vv = v[i] * v[j];
                    if vv != 0.0 {
                        s += gk[(i, j)] * vv;
                    }
                }
            }
            a[k] = -s;
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularMetric(format!(
                "geodesic acceleration is not finite at {:?}",
                p.as_slice()
            )));
        }
        Ok(a)
    }

    pub fn canonicalize_state(&self, p: &Point, v: &Tangent) -> (Point, Tangent) {
        match self {
            ManifoldModel::Flat(f) => f.canonicalize_state(p, v),
            ManifoldModel::Warped(w) => w.canonicalize_state(p, v),
            ManifoldModel::Bundle(b) => b.canonicalize_state(p, v),
        }
    }

    pub fn canonicalize(&self, p: &Point) -> Point {
        self.canonicalize_state(p, &Tangent::zeros(self.dim())).0
    }

    /// Moves a lifted state back into the chart after it crossed a reflecting end.
    pub fn continue_chart(&self, p: &Point, v: &Tangent) -> (Point, Tangent, Option<PathEvent>) {
        match self {
            ManifoldModel::Warped(w) => w.continue_chart(p, v),
            _ => (p.clone(), v.clone(), None),
        }
    }

    /// Chart representatives of `(p, v)` under the deck elements next to the identity.
    pub fn images(&self, p: &Point, v: &Tangent) -> Vec<(Point, Tangent)> {
        match self {
            ManifoldModel::Flat(f) => f.images(p, v),
            ManifoldModel::Warped(w) => w.images(p, v),
            ManifoldModel::Bundle(b) => b.images(p, v),
        }
    }

    pub fn escape_focal(&self, p: &Point, v: &Tangent) -> Option<(Point, f64)> {
        match self {
            ManifoldModel::Warped(w) => w.escape_focal(p, v),
            _ => None,
        }
    }

    /// Length of the chart segment from `a` to `b` measured with the metric at its midpoint.
    pub fn segment_length(&self, a: &Point, b: &Point) -> f64 {
        let d = b - a;
        match self {
            ManifoldModel::Flat(_) => d.norm(),
            _ => {
                let mid = (a + b) * 0.5;
                (self.metric_raw(&mid) * &d).dot(&d).max(0.0).sqrt()
            }
        }
    }

    /// Short-range distance between two points: the smallest segment length over the
    /// images of `b`. Accurate for nearby points, an upper bound otherwise.
    pub fn local_distance(&self, a: &Point, b: &Point) -> f64 {
        let a = self.canonicalize(a);
        let b = self.canonicalize(b);
        let zero = Tangent::zeros(self.dim());
        self.images(&b, &zero)
            .iter()
            .map(|(q, _)| self.segment_length(&a, q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Symmetric Hausdorff distance between two point clouds under `local_distance`.
    pub fn hausdorff(&self, a: &[Point], b: &[Point]) -> f64 {
        if a.is_empty() || b.is_empty() {
            return f64::INFINITY;
        }
        let zero = Tangent::zeros(self.dim());
        let ca: Vec<Point> = a.iter().map(|p| self.canonicalize(p)).collect();
        let cb: Vec<Point> = b.iter().map(|p| self.canonicalize(p)).collect();
        let expand = |c: &[Point]| -> Vec<Point> {
            c.iter().flat_map(|p| self.images(p, &zero).into_iter().map(|(q, _)| q)).collect()
        };
        let (ea, eb) = (expand(&ca), expand(&cb));
        // nearest neighbour with the metric frozen at `p`, then the exact segment length
        let one_sided = |from: &[Point], to: &[Point]| {
            from.iter()
                .map(|p| {
                    let g = (!self.is_flat()).then(|| self.metric_raw(p));
                    let n = p.len();
                    let mut best = (f64::INFINITY, 0);
                    for (k, q) in to.iter().enumerate() {
                        let mut quad = 0.0;
                        for i in 0..n {
                            let di = q[i] - p[i];
                            match &g {
                                None => quad += di * di,
                                Some(g) => {
                                    for j in 0..n {
                                        quad += g[(i, j)] * di * (q[j] - p[j]);
                                    }
                                }
                            }
                        }
                        if quad < best.0 {
                            best = (quad, k);
                        }
                    }
                    self.segment_length(p, &to[best.1])
                })
                .fold(0.0, f64::max)
        };
        one_sided(&ca, &eb).max(one_sided(&cb, &ea))
    }

    /// Largest pairwise `local_distance` within a cloud.
    pub fn extent(&self, cloud: &[Point]) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in cloud.iter().enumerate() {
            for b in &cloud[i + 1..] {
                best = best.max(self.local_distance(a, b));
            }
        }
        best
    }

    /// Coordinate of the leaf through `p` in the natural foliation of the model.
    pub fn leaf_coordinate(&self, p: &Point) -> f64 {
        match self {
            ManifoldModel::Flat(f) => f.leaf_coordinate(p),
            ManifoldModel::Warped(w) => w.leaf_coordinate(p),
            ManifoldModel::Bundle(b) => b.fiber_norm(p),
        }
    }

    /// Distance between the leaves with coordinates `a` and `b`.
    pub fn leaf_distance(&self, a: f64, b: f64) -> f64 {
        match self {
            ManifoldModel::Flat(f) => f.leaf_distance(a, b),
            ManifoldModel::Warped(w) => w.leaf_distance(a, b),
            ManifoldModel::Bundle(_) => (a - b).abs(),
        }
    }

    /// Signed leaf offset `a - b`, wrapped when the leaf space is a circle.
    pub fn leaf_offset(&self, a: f64, b: f64) -> f64 {
        match self {
            ManifoldModel::Flat(f) => f.leaf_offset(a, b),
            ManifoldModel::Warped(w) => w.leaf_offset(a, b),
            ManifoldModel::Bundle(_) => a - b,
        }
    }

    /// Coordinate box used for sampling.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        match self {
            ManifoldModel::Flat(f) => f.sample_box(),
            ManifoldModel::Warped(w) => w.sample_box(),
            ManifoldModel::Bundle(b) => b.sample_box(),
        }
    }

    /// Largest chart extent of the sampling box; a scale for horizons and tolerances.
    pub fn diameter_hint(&self) -> f64 {
        self.sample_box().iter().map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
    }
}
