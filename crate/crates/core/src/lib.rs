//! Transnormal systems, isoparametric functions and disk-bundle metric surgery
//! on flat quotients, warped profiles and vector-bundle total spaces.

pub mod bundle;
pub mod config;
pub mod error;
pub mod geometry;
pub mod sampling;
pub mod surgery;
pub mod transnormal;
pub mod verify;

pub use bundle::{BaseSpec, BundleSpec, BundleTotalSpace, ConnectionSpec};
pub use error::{Error, Result};
pub use geometry::foil::{Connectivity, Foil, FoilKind, LoopCurve, Side};
pub use geometry::{ManifoldModel, Point, Tangent};
pub use transnormal::{SystemDescriptor, SystemType, TransnormalFunction};
