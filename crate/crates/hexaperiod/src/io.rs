//! JSON formats: tilings, density triples and the metadata block carried by
//! every command output.

use std::collections::BTreeMap;

use hexaperiod_core::{DensityTriple, TilingState};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA: &str = "hexaperiod/1";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("malformed tiling JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] hexaperiod_core::Error),
}

/// `{"n": int, "heights": [[int]]}`, one row of `2n + 1` heights per path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingJson {
    pub n: usize,
    pub heights: Vec<Vec<i32>>,
}

impl From<&TilingState> for TilingJson {
    fn from(t: &TilingState) -> Self {
        TilingJson { n: t.n(), heights: t.rows() }
    }
}

impl TilingJson {
    pub fn into_state(self) -> Result<TilingState, IoError> {
        Ok(TilingState::from_rows(self.n, &self.heights)?)
    }
}

pub fn tiling_to_json(t: &TilingState) -> String {
    serde_json::to_string(&TilingJson::from(t)).expect("plain struct")
}

pub fn tiling_from_json(s: &str) -> Result<TilingState, IoError> {
    serde_json::from_str::<TilingJson>(s)?.into_state()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RngInfo {
    pub algorithm: &'static str,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub version: &'static str,
    pub command: String,
    /// Every flag value the command ran with.
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngInfo>,
    /// Wall-clock seconds; `None` when timing is suppressed for
    /// byte-reproducible output.
    pub elapsed_seconds: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
}

impl RunMetadata {
    pub fn new(command: &str, config: Value) -> Self {
        RunMetadata {
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            rng: None,
            elapsed_seconds: None,
            residuals: BTreeMap::new(),
        }
    }
}

/// Wraps a result object with the schema tag and metadata.
pub fn envelope(meta: &RunMetadata, body: Value) -> Value {
    let mut out = serde_json::Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("metadata".into(), serde_json::to_value(meta).expect("plain struct"));
    if let Value::Object(m) = body {
        out.extend(m);
    } else {
        out.insert("result".into(), body);
    }
    Value::Object(out)
}

/// `{"P1": [[..],[..]], "P2": .., "P3": ..}`.
pub fn density_json(d: &DensityTriple) -> Value {
    json!({ "P1": d.p[0], "P2": d.p[1], "P3": d.p[2] })
}

pub fn density_from_json(v: &Value) -> Option<DensityTriple> {
    let mut d = DensityTriple::default();
    for (k, key) in ["P1", "P2", "P3"].iter().enumerate() {
        d.p[k] = serde_json::from_value(v.get(*key)?.clone()).ok()?;
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hexaperiod_core::model::t_max;

    #[test]
    fn tiling_round_trip() {
        let t = t_max(4).unwrap();
        let s = tiling_to_json(&t);
        assert!(s.starts_with("{\"n\":4,\"heights\":[["));
        assert_eq!(tiling_from_json(&s).unwrap(), t);
        assert!(tiling_from_json("{\"n\":2,\"heights\":[[0,0,0,0,0],[0,0,0,0,0]]}").is_err());
        assert!(tiling_from_json("{\"n\":2}").is_err());
    }

    #[test]
    fn envelope_layout() {
        let meta = RunMetadata::new("density", json!({"alpha": 0.5}));
        let v = envelope(&meta, json!({"x": 1}));
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["metadata"]["command"], "density");
        assert_eq!(v["x"], 1);
        let d = DensityTriple { p: [[[0.25, 0.5], [1.0, 0.0]]; 3] };
        assert_eq!(density_from_json(&density_json(&d)), Some(d));
    }
}
