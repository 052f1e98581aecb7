//! Face-touch detection from wrist-worn accelerometer and gyroscope data.
//!
//! The crate covers the whole path from raw sensor logs to alerts:
//!
//! - [`ingest`] reads sensor CSVs and annotations into [`Session`]s.
//! - [`gate`] is an STA/LTA energy trigger that keeps the classifier idle
//!   while the hand is still.
//! - [`features`] cuts windows and computes 54 statistics, optionally
//!   expanded to 1540 degree-2 polynomial terms.
//! - [`forest`] is a CART random forest with randomized hyperparameter
//!   search and a checksummed model format.
//! - [`eval`] runs train/test and leave-one-participant-out protocols and
//!   the window, feature-count and PCA studies.
//! - [`pipeline`] replays a trace through gate, features and forest.
//!
//! All randomness flows from explicit [`RngSeed`]s, so every result is
//! reproducible.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod gate;
pub mod ingest;
pub mod kv;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod types;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, EvalReport};
pub use features::{FeatureVector, WindowInstance};
pub use forest::{Classifier, DecisionTree, Forest, ForestConfig, MaxFeatures, Prediction};
pub use gate::{Gate, GateConfig, GateDecision, GateState};
pub use kv::KeyValues;
pub use pipeline::{AlertEvent, RunReport};
pub use rng::RngSeed;
pub use types::{Activity, ActivityLabel, Label, Phase, PhaseInterval, SensorSample, Session, Stance};
