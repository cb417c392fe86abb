//! Shared fixtures for the benchmarks in `benches/`.

use tnlab_core::config::preset;
use tnlab_core::transnormal::ClassifyOptions;
use tnlab_core::{Foil, ManifoldModel};

/// A built preset with its seed foil and default classification options.
pub fn fixture(name: &str) -> (ManifoldModel, Foil, ClassifyOptions) {
    let cfg = preset(name).expect("benchmark presets exist");
    let (m, seed) = cfg.build().expect("benchmark presets build");
    let opts = cfg.classify_options(&m);
    (m, seed, opts)
}
