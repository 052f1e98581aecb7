//! Shared fixtures for the benchmarks in `benches/`.

use facegate_core::forest::{train_forest, Forest};
use facegate_core::pipeline::{synth_trace, Segment, Template, TraceSpec};
use facegate_core::synth::{synthetic_feature_dataset, FeatureTableSpec};
use facegate_core::{Dataset, ForestConfig, RngSeed, SensorSample};

/// 40 samples (0.4 s at 102.4 Hz) of swing motion.
pub fn window() -> Vec<SensorSample> {
    let spec = TraceSpec::new(vec![Segment::new(0.4, Template::Swing, 2.0)]);
    synth_trace(&spec, RngSeed(1)).expect("valid spec")
}

/// Ten minutes of rest with a one-second burst every ten seconds.
pub fn trace() -> Vec<SensorSample> {
    let mut spec = TraceSpec::new(vec![
        Segment::new(9.0, Template::Rest, 1.0),
        Segment::new(1.0, Template::Burst, 10.0),
    ]);
    spec.repeat = 60;
    synth_trace(&spec, RngSeed(3)).expect("valid spec")
}

/// A labelled base-feature table with `rows` rows.
pub fn base_table(rows: usize) -> Dataset {
    let spec = FeatureTableSpec {
        rows,
        ..FeatureTableSpec::default()
    };
    synthetic_feature_dataset(&spec, RngSeed(7)).expect("valid spec")
}

/// [`base_table`] expanded to 1540 columns.
pub fn poly_table(rows: usize) -> Dataset {
    base_table(rows).poly_expanded().expect("54 columns")
}

pub fn forest(data: &Dataset, n_trees: usize) -> Forest {
    let config = ForestConfig {
        n_trees,
        ..ForestConfig::default()
    };
    train_forest(data, &config).expect("trainable")
}
