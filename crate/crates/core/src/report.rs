//! Flat result record shared by the CD, AQC and qDRIFT pipelines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub pipeline: String,
    pub model: String,
    pub level: usize,
    pub eps: f64,
    /// Square-root infidelity, or trace distance for the randomized channel.
    pub error: f64,
    /// Error the run is expected to stay below.
    pub bound: f64,
    pub gate_count: u64,
    pub factor_count: u64,
    /// Selected and derived parameters, keyed by name.
    pub params: BTreeMap<String, f64>,
    /// `bound / measured` per checked ingredient.
    pub margins: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub(crate) fn set(&mut self, key: &str, value: f64) {
        self.params.insert(key.to_string(), value);
    }
}

/// `bound / measured`, infinite when nothing was measured.
pub fn margin(bound: f64, measured: f64) -> f64 {
    if measured > 0.0 {
        bound / measured
    } else {
        f64::INFINITY
    }
}
