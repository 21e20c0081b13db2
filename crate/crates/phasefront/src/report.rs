//! Machine-readable run reports.

use serde::Serialize;
use serde_json::Value;

/// JSON schema every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// The fully resolved configuration.
    pub inputs: Value,
    pub outputs: Value,
    /// Files written next to the report.
    pub artifacts: Vec<String>,
    /// Absent unless requested, so reruns stay byte-identical.
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, inputs: Value, outputs: Value) -> Self {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs,
            outputs,
            artifacts: Vec::new(),
            timings: None,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
