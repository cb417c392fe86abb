//! The explicit transnormal function of each type.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{Case, Profile, SystemDescriptor, TransnormalFunction};
use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Point};

/// Builds the case-matched function from a classified descriptor. Distances to
/// the reference foil are read off the model's leaf coordinate.
pub fn build_transnormal_function(descriptor: &SystemDescriptor, m: &ManifoldModel) -> Result<TransnormalFunction> {
    descriptor.check_consistency().map_err(Error::UnsupportedDescriptor)?;
    let leaf = descriptor.special_foils.first().map_or(descriptor.seed_leaf, |f| f.leaf);
    let case = descriptor.type_tag.case();
    let t = descriptor.t_inj;
    if matches!(case, Case::B | Case::D) && !(t.is_finite() && t > 0.0) {
        return Err(Error::UnsupportedDescriptor(format!("case {case:?} needs a finite positive T, got {t}")));
    }
    let model = m.clone();
    let (evaluator, profile): (Arc<dyn Fn(&Point) -> f64 + Send + Sync>, Profile) = match case {
        Case::A => (
            Arc::new(move |p: &Point| model.leaf_distance(model.leaf_coordinate(p), leaf).powi(2)),
            Profile::Linear { slope: 4.0, intercept: 0.0 },
        ),
        Case::B => (
            Arc::new(move |p: &Point| (PI * model.leaf_distance(model.leaf_coordinate(p), leaf) / t).cos()),
            Profile::CosineSquared { scale: (PI / t).powi(2) },
        ),
        Case::C => (
            Arc::new(move |p: &Point| model.leaf_offset(model.leaf_coordinate(p), leaf)),
            Profile::Linear { slope: 0.0, intercept: 1.0 },
        ),
        Case::D => (
            Arc::new(move |p: &Point| (PI * model.leaf_offset(model.leaf_coordinate(p), leaf) / t).sin()),
            Profile::CosineSquared { scale: (PI / t).powi(2) },
        ),
    };
    let mut f = TransnormalFunction::new(m.clone(), evaluator, profile).with_descriptor(descriptor.clone());
    f.case = Some(case);
    Ok(f)
}
