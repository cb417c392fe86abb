//! Structured manifold specifications and the compiled-in presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bundle::{BundleSpec, BundleTotalSpace};
use crate::error::{Error, Result};
use crate::geometry::foil::{Foil, LoopCurve};
use crate::geometry::{
    EndCondition, Fiber, FlatFoliation, FlatQuotient, IntervalKind, ManifoldModel, PlaneIsometry, Point, Tangent, Warp,
    WarpedProfile,
};
use crate::transnormal::ClassifyOptions;

pub const PRESETS: [&str; 7] = ["plane", "cylinder", "mobius", "torus", "klein", "sphere", "rp2"];

/// Half-period of the torus preset in the leaf direction.
pub const TORUS_T0: f64 = 1.3;
/// Glide length of the Möbius and Klein presets.
pub const GLIDE: f64 = PI;
/// Leaf-space length of the Klein preset.
pub const KLEIN_T: f64 = 1.2;

fn horizontal() -> FlatFoliation {
    FlatFoliation::Horizontal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldSpec {
    Flat {
        #[serde(default)]
        generators: Vec<PlaneIsometry>,
        #[serde(default = "horizontal")]
        foliation: FlatFoliation,
    },
    Warped {
        interval: IntervalKind,
        left_end: EndCondition,
        right_end: EndCondition,
        fiber: Fiber,
        warp: Warp,
    },
    Bundle {
        bundle: BundleSpec,
    },
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<ManifoldModel> {
        Ok(match self {
            ManifoldSpec::Flat { generators, foliation } => {
                ManifoldModel::Flat(FlatQuotient::new(generators.clone(), *foliation)?)
            }
            ManifoldSpec::Warped { interval, left_end, right_end, fiber, warp } => ManifoldModel::Warped(
                WarpedProfile::new(*interval, *left_end, *right_end, *fiber, warp.clone())?,
            ),
            ManifoldSpec::Bundle { bundle } => ManifoldModel::Bundle(BundleTotalSpace::new(bundle.clone())?),
        })
    }
}

fn default_samples() -> usize {
    64
}

/// How to build the seed foil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpec {
    Point {
        at: Vec<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Closed chart segment `start + s * span`, `s in [0, 1]`.
    Line {
        start: Vec<f64>,
        span: Vec<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    ZeroSection {
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

impl SeedSpec {
    pub fn build(&self, m: &ManifoldModel) -> Result<Foil> {
        let check_even = |n: usize| {
            if n % 2 == 1 {
                Err(Error::Config("seed sample counts must be even".into()))
            } else {
                Ok(n)
            }
        };
        match self {
            SeedSpec::Point { at, samples } => Foil::point(m, &Point::from_vec(at.clone()), check_even(*samples)?),
            SeedSpec::Line { start, span, samples } => Foil::regular_loop(
                m,
                LoopCurve::line(Point::from_vec(start.clone()), Tangent::from_vec(span.clone())),
                check_even(*samples)?,
            ),
            SeedSpec::Circle { center, radius, samples } => {
                Foil::regular_loop(m, LoopCurve::circle(*center, *radius), check_even(*samples)?)
            }
            SeedSpec::ZeroSection { samples } => match m {
                ManifoldModel::Bundle(b) => b.zero_section_foil(check_even(*samples)?),
                _ => Err(Error::Config("zero_section seeds need a bundle manifold".into())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConfig {
    pub manifold: ManifoldSpec,
    pub seed: SeedSpec,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
}

impl ManifoldConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn build(&self) -> Result<(ManifoldModel, Foil)> {
        let m = self.manifold.build()?;
        let seed = self.seed.build(&m)?;
        Ok((m, seed))
    }

    /// Classification options; the horizon defaults to ten model diameters.
    pub fn classify_options(&self, m: &ManifoldModel) -> ClassifyOptions {
        let mut o = ClassifyOptions::default();
        o.t_max = self.t_max.unwrap_or_else(|| (10.0 * m.diameter_hint()).clamp(5.0, 10.0));
        if let Some(dt) = self.dt {
            o.dt = dt;
        }
        o
    }
}

fn sine_warp() -> Warp {
    Warp::Sine { amplitude: 1.0, frequency: 1.0, offset: 0.0 }
}

fn flat(generators: Vec<PlaneIsometry>, seed: SeedSpec) -> ManifoldConfig {
    ManifoldConfig { manifold: ManifoldSpec::Flat { generators, foliation: FlatFoliation::Horizontal }, seed, t_max: None, dt: None }
}

fn line(start: [f64; 2], span: [f64; 2]) -> SeedSpec {
    SeedSpec::Line { start: start.to_vec(), span: span.to_vec(), samples: 64 }
}

pub fn preset(name: &str) -> Result<ManifoldConfig> {
    let two_pi = 2.0 * PI;
    Ok(match name {
        "plane" => ManifoldConfig {
            manifold: ManifoldSpec::Flat { generators: vec![], foliation: FlatFoliation::Radial { center: [0.0, 0.0] } },
            seed: SeedSpec::Point { at: vec![0.0, 0.0], samples: 64 },
            t_max: Some(10.0),
            dt: None,
        },
        "cylinder" => flat(vec![PlaneIsometry::translation(two_pi, 0.0)], line([0.0, 0.0], [two_pi, 0.0])),
        "mobius" => flat(vec![PlaneIsometry::glide(GLIDE)], line([0.0, 0.0], [GLIDE, 0.0])),
        "torus" => flat(
            vec![PlaneIsometry::translation(two_pi, 0.0), PlaneIsometry::translation(0.0, 2.0 * TORUS_T0)],
            line([0.0, 0.0], [two_pi, 0.0]),
        ),
        "klein" => flat(
            vec![PlaneIsometry::glide(GLIDE), PlaneIsometry::translation(0.0, 2.0 * KLEIN_T)],
            line([0.0, 0.4], [2.0 * GLIDE, 0.0]),
        ),
        "sphere" => ManifoldConfig {
            manifold: ManifoldSpec::Warped {
                interval: IntervalKind::Segment { start: 0.0, length: PI },
                left_end: EndCondition::Collapse { codim: 2 },
                right_end: EndCondition::Collapse { codim: 2 },
                fiber: Fiber::RoundSphere { dim: 1 },
                warp: sine_warp(),
            },
            seed: SeedSpec::Point { at: vec![0.0, 0.0], samples: 64 },
            t_max: None,
            dt: None,
        },
        "rp2" => ManifoldConfig {
            manifold: ManifoldSpec::Warped {
                interval: IntervalKind::Segment { start: 0.0, length: 0.5 * PI },
                left_end: EndCondition::Collapse { codim: 2 },
                right_end: EndCondition::Mirror,
                fiber: Fiber::RoundSphere { dim: 1 },
                warp: sine_warp(),
            },
            seed: SeedSpec::Point { at: vec![0.0, 0.0], samples: 64 },
            t_max: None,
            dt: None,
        },
        other => {
            return Err(Error::Config(format!("unknown preset {other:?}; expected one of {}", PRESETS.join(", "))))
        }
    })
}

/// Whether the preset is a closed surface.
pub fn is_compact(name: &str) -> bool {
    matches!(name, "torus" | "klein" | "sphere" | "rp2")
}

/// Parameters of a fiber-dependent warp perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    /// Even, so mirror ends stay symmetric.
    pub mode: u32,
    pub phase: f64,
}

/// A compact preset as a warped profile whose warp carries the perturbation.
/// Flat presets are first rewritten as profiles over their leaf space.
pub fn perturbed_preset(name: &str, p: Perturbation) -> Result<ManifoldConfig> {
    if p.mode % 2 == 1 {
        return Err(Error::Config("perturbation modes must be even".into()));
    }
    let two_pi = 2.0 * PI;
    let (interval, left_end, right_end, fiber, base, seed) = match name {
        "torus" => (
            IntervalKind::Circle { period: 2.0 * TORUS_T0 },
            EndCondition::Open,
            EndCondition::Open,
            Fiber::Circle { length: two_pi },
            Warp::Constant { value: 1.0 },
            line([0.0, 0.0], [0.0, two_pi]),
        ),
        "klein" => (
            IntervalKind::Segment { start: 0.0, length: KLEIN_T },
            EndCondition::Mirror,
            EndCondition::Mirror,
            Fiber::Circle { length: 2.0 * GLIDE },
            Warp::Constant { value: 1.0 },
            line([0.4, 0.0], [0.0, 2.0 * GLIDE]),
        ),
        "sphere" | "rp2" => {
            let cfg = preset(name)?;
            let ManifoldSpec::Warped { interval, left_end, right_end, fiber, warp } = cfg.manifold else {
                unreachable!("sphere presets are warped")
            };
            (interval, left_end, right_end, fiber, warp, cfg.seed)
        }
        other => return Err(Error::Config(format!("no perturbation family for preset {other:?}"))),
    };
    let (lo, hi) = match interval {
        IntervalKind::Circle { period } => (0.0, period),
        IntervalKind::Segment { start, length } => (start, start + length),
        _ => unreachable!("compact presets have bounded leaf spaces"),
    };
    let warp = Warp::Perturbed { base: Box::new(base), amplitude: p.amplitude, mode: p.mode, phase: p.phase, lo, hi };
    Ok(ManifoldConfig {
        manifold: ManifoldSpec::Warped { interval, left_end, right_end, fiber, warp },
        seed,
        t_max: Some(8.0),
        dt: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.build().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn json_round_trip() {
        let cfg = preset("klein").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ManifoldConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn reports_parse_position() {
        match ManifoldConfig::from_json("{\n  \"manifold\": 3\n}") {
            Err(Error::Config(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
