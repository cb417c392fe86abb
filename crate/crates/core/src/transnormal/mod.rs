//! Transnormal systems: classification into the seven types and the
//! transnormal functions attached to each type.

mod classify;
mod function;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

pub use classify::{classify, detect_identification, foil_census, ClassifyOptions, Identification};
pub use function::build_transnormal_function;

use crate::geometry::foil::{Foil, FoilKind};
use crate::geometry::{ManifoldModel, Point, Tangent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemType {
    Cylindrical,
    Planar,
    TwistedCylindrical,
    Toric,
    Spherical,
    RealProjective,
    KleinBottled,
}

impl SystemType {
    pub const ALL: [SystemType; 7] = [
        SystemType::Cylindrical,
        SystemType::Planar,
        SystemType::TwistedCylindrical,
        SystemType::Toric,
        SystemType::Spherical,
        SystemType::RealProjective,
        SystemType::KleinBottled,
    ];

    /// `(N_SR, N_S, D finite)` of the type.
    pub fn signature(self) -> (usize, usize, bool) {
        match self {
            SystemType::Cylindrical => (0, 0, false),
            SystemType::Planar => (0, 1, false),
            SystemType::TwistedCylindrical => (1, 0, false),
            SystemType::Toric => (0, 0, true),
            SystemType::Spherical => (0, 2, true),
            SystemType::RealProjective => (1, 1, true),
            SystemType::KleinBottled => (2, 0, true),
        }
    }

    pub fn from_signature(n_sr: usize, n_s: usize, finite: bool) -> Option<SystemType> {
        Self::ALL.into_iter().find(|t| t.signature() == (n_sr, n_s, finite))
    }

    pub fn case(self) -> Case {
        match self {
            SystemType::Planar | SystemType::TwistedCylindrical => Case::A,
            SystemType::Spherical | SystemType::RealProjective | SystemType::KleinBottled => Case::B,
            SystemType::Cylindrical => Case::C,
            SystemType::Toric => Case::D,
        }
    }
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Which explicit construction a transnormal function uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `d_L^2`
    A,
    /// `cos(pi d_L / T)`
    B,
    /// oriented distance
    C,
    /// `sin(pi d_L / T)` with oriented distance
    D,
}

/// Serializes infinite lengths as the string `"inf"`.
pub fn serialize_length<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecialFoil {
    /// Signed arclength from the seed.
    pub t: f64,
    pub kind: FoilKind,
    pub codim: usize,
    /// Leaf coordinate of the foil in the model's natural foliation.
    pub leaf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemDescriptor {
    #[serde(rename = "type")]
    pub type_tag: SystemType,
    #[serde(rename = "T", serialize_with = "serialize_length")]
    pub t_inj: f64,
    #[serde(rename = "D", serialize_with = "serialize_length")]
    pub diameter: f64,
    #[serde(rename = "N_SR")]
    pub n_sr: usize,
    #[serde(rename = "N_S")]
    pub n_s: usize,
    /// Special foils (at most two), including the seed when it is special.
    #[serde(rename = "foils")]
    pub special_foils: Vec<SpecialFoil>,
    pub horizon_limited: bool,
    pub seed_kind: FoilKind,
    /// Leaf coordinate of the seed.
    pub seed_leaf: f64,
    #[serde(skip)]
    pub seed: Option<Foil>,
}

impl SystemDescriptor {
    pub fn n_c(&self) -> usize {
        self.n_sr + self.n_s
    }

    /// Checks the counting rules and the agreement of the tag with the counts.
    pub fn check_consistency(&self) -> Result<(), String> {
        let finite = self.diameter.is_finite();
        if self.n_c() > 2 {
            return Err(format!("N_SR + N_S = {} exceeds 2", self.n_c()));
        }
        if finite && self.n_c() == 1 {
            return Err("finite diameter with exactly one special foil".into());
        }
        if !finite && self.n_c() == 2 {
            return Err("infinite diameter with two special foils".into());
        }
        if self.type_tag.signature() != (self.n_sr, self.n_s, finite) {
            return Err(format!(
                "type {} does not match N_SR = {}, N_S = {}, D finite = {finite}",
                self.type_tag, self.n_sr, self.n_s
            ));
        }
        Ok(())
    }
}

/// Closed-form profile as a function of the level value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `slope * f + intercept`
    Linear { slope: f64, intercept: f64 },
    /// `scale * (1 - f^2)`
    CosineSquared { scale: f64 },
}

impl Profile {
    pub fn eval(&self, f: f64) -> f64 {
        match *self {
            Profile::Linear { slope, intercept } => slope * f + intercept,
            Profile::CosineSquared { scale } => scale * (1.0 - f * f),
        }
    }

    pub fn derivative(&self, f: f64) -> f64 {
        match *self {
            Profile::Linear { slope, .. } => slope,
            Profile::CosineSquared { scale } => -2.0 * scale * f,
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point) -> Tangent + Send + Sync>;

/// A scalar field with its declared gradient profile `|grad f|^2 = b(f)`.
#[derive(Clone)]
pub struct TransnormalFunction {
    pub manifold: ManifoldModel,
    pub evaluator: ScalarFn,
    pub gradient: Option<VectorFn>,
    pub profile_b: Profile,
    pub profile_a: Option<Profile>,
    pub descriptor: Option<SystemDescriptor>,
    pub case: Option<Case>,
}

impl fmt::Debug for TransnormalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransnormalFunction")
            .field("profile_b", &self.profile_b)
            .field("profile_a", &self.profile_a)
            .field("case", &self.case)
            .field("descriptor", &self.descriptor.as_ref().map(|d| d.type_tag))
            .finish()
    }
}

impl TransnormalFunction {
    pub fn new(manifold: ManifoldModel, evaluator: ScalarFn, profile_b: Profile) -> Self {
        Self { manifold, evaluator, gradient: None, profile_b, profile_a: None, descriptor: None, case: None }
    }

    pub fn with_gradient(mut self, g: VectorFn) -> Self {
        self.gradient = Some(g);
        self
    }

    pub fn with_profile_a(mut self, a: Profile) -> Self {
        self.profile_a = Some(a);
        self
    }

    pub fn with_descriptor(mut self, d: SystemDescriptor) -> Self {
        self.descriptor = Some(d);
        self
    }

    pub fn eval(&self, p: &Point) -> f64 {
        (self.evaluator)(p)
    }
}
