//! Run configuration: one JSON document binding model, grid, solver,
//! propagation and reproducibility knobs.
//!
//! Parsing is two-phase so that a report can list every violation at
//! once: each top-level section is decoded independently (a malformed
//! `solver` does not mask a malformed `grid`), then the assembled config
//! is checked against the physics invariants. Schema faults carry a
//! `schema.` code prefix and physics faults a `physics.` prefix. Missing
//! sections fall back to the documented defaults: regime-A3 couplings
//! (λ₁ = 0, λ₂ = 1, λ₃ = 1, p = 5) on an L = 16, n = 64 box.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::PropagationConfig;
use crate::error::{EdgpeError, Result};
use crate::grid::GridSpec;
use crate::ground_state::SolverConfig;
use crate::params::ModelParams;

/// Everything one run needs; the unit of reproducibility. A fixed config
/// (including `seed`) makes every numeric artifact byte-identical across
/// runs on one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub propagation: PropagationConfig,
    /// PRNG seed for generated test fields.
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams {
                lambda1: 0.0,
                lambda2: 1.0,
                lambda3: 1.0,
                p: 5.0,
                trap: None,
            },
            grid: GridSpec::default(),
            solver: SolverConfig::default(),
            propagation: PropagationConfig::default(),
            seed: 1,
            output_dir: PathBuf::from("edgpe-out"),
        }
    }
}

impl RunConfig {
    /// Checks every physics invariant, collecting all faults.
    pub fn validate(&self) -> Result<()> {
        let mut faults = Vec::new();
        collect_physics(self, &mut faults);
        if faults.is_empty() {
            Ok(())
        } else {
            Err(EdgpeError::Config(faults))
        }
    }
}

const SECTIONS: [&str; 6] = [
    "params",
    "grid",
    "solver",
    "propagation",
    "seed",
    "output_dir",
];

/// Parses and validates a config document, reporting every violated
/// invariant rather than the first.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| EdgpeError::Config(vec![format!("schema.json: {e}")]))?;
    let obj = match value.as_object() {
        Some(o) => o,
        None => {
            return Err(EdgpeError::Config(vec![
                "schema.root: the document must be a JSON object".into(),
            ]))
        }
    };
    let mut faults = Vec::new();
    for key in obj.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            faults.push(format!("schema.unknown_field: {key:?}"));
        }
    }

    let mut cfg = RunConfig::default();
    fn decode<T: DeserializeOwned>(
        name: &str,
        value: Option<&Value>,
        faults: &mut Vec<String>,
    ) -> Option<T> {
        value.and_then(|v| match serde_json::from_value::<T>(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                faults.push(format!("schema.{name}: {e}"));
                None
            }
        })
    }
    if let Some(v) = decode::<ModelParams>("params", obj.get("params"), &mut faults) {
        cfg.params = v;
    }
    if let Some(v) = decode::<GridSpec>("grid", obj.get("grid"), &mut faults) {
        cfg.grid = v;
    }
    if let Some(v) = decode::<SolverConfig>("solver", obj.get("solver"), &mut faults) {
        cfg.solver = v;
    }
    if let Some(v) =
        decode::<PropagationConfig>("propagation", obj.get("propagation"), &mut faults)
    {
        cfg.propagation = v;
    }
    if let Some(v) = decode::<u64>("seed", obj.get("seed"), &mut faults) {
        cfg.seed = v;
    }
    if let Some(v) = decode::<PathBuf>("output_dir", obj.get("output_dir"), &mut faults) {
        cfg.output_dir = v;
    }

    collect_physics(&cfg, &mut faults);
    if faults.is_empty() {
        Ok(cfg)
    } else {
        Err(EdgpeError::Config(faults))
    }
}

fn collect_physics(cfg: &RunConfig, faults: &mut Vec<String>) {
    if let Err(e) = cfg.params.validate() {
        faults.push(format!("physics.params: {}", message_of(e)));
    }
    if let Err(e) = crate::grid::Grid::new(cfg.grid.l, cfg.grid.n) {
        faults.push(format!("physics.grid: {}", message_of(e)));
    }
    if let Err(e) = cfg.solver.validate() {
        faults.push(format!("physics.solver: {}", message_of(e)));
    }
    if let Err(e) = cfg.propagation.validate() {
        faults.push(format!("physics.propagation: {}", message_of(e)));
    }
}

fn message_of(e: EdgpeError) -> String {
    match e {
        EdgpeError::InvalidParams(m)
        | EdgpeError::InvalidArgument(m)
        | EdgpeError::GridMismatch(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!(cfg.grid.l, [16.0; 3]);
        assert_eq!(cfg.grid.n, [64; 3]);
        assert_eq!(
            (cfg.params.lambda1, cfg.params.lambda2, cfg.params.lambda3, cfg.params.p),
            (0.0, 1.0, 1.0, 5.0)
        );
        assert_eq!(cfg.seed, 1);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn default_config_round_trips_through_json() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn supercritical_exponent_is_a_physics_fault() {
        let err = parse_config(
            r#"{"params": {"lambda1": 1.0, "lambda2": 0.0, "lambda3": 1.0, "p": 7.0}}"#,
        )
        .unwrap_err();
        match err {
            EdgpeError::Config(faults) => {
                assert!(faults.iter().any(|f| f.starts_with("physics.params")
                    && f.contains("p = 7 out of (4, 6]")));
            }
            other => panic!("expected config fault list, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_couplings_are_a_physics_fault() {
        let err = parse_config(
            r#"{"params": {"lambda1": 0.0, "lambda2": 0.0, "lambda3": 1.0, "p": 5.0}}"#,
        )
        .unwrap_err();
        match err {
            EdgpeError::Config(faults) => {
                assert!(faults.iter().any(|f| f.contains("nondegeneracy")));
            }
            other => panic!("expected config fault list, got {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_reported_not_just_the_first() {
        let err = parse_config(
            r#"{
                "params": {"lambda1": 0.0, "lambda2": 0.0, "lambda3": -1.0, "p": 7.0},
                "grid": {"n": [3, 64, 64], "l": [16.0, 16.0, 16.0]},
                "seed": "not-a-number",
                "typo_section": {}
            }"#,
        )
        .unwrap_err();
        let faults = match err {
            EdgpeError::Config(faults) => faults,
            other => panic!("expected config fault list, got {other:?}"),
        };
        assert!(faults.iter().any(|f| f.starts_with("schema.unknown_field")));
        assert!(faults.iter().any(|f| f.starts_with("schema.seed")));
        assert!(faults.iter().any(|f| f.starts_with("physics.params")
            && f.contains("lambda3")
            && f.contains("out of (4, 6]")
            && f.contains("nondegeneracy")));
        assert!(faults.iter().any(|f| f.starts_with("physics.grid")));
        assert!(faults.len() >= 4, "faults: {faults:?}");
    }

    #[test]
    fn schema_and_physics_codes_are_distinct() {
        let schema_err = parse_config(r#"{"seed": -3}"#).unwrap_err();
        let physics_err = parse_config(
            r#"{"params": {"lambda1": 1.0, "lambda2": 0.0, "lambda3": 1.0, "p": 7.0}}"#,
        )
        .unwrap_err();
        let first = |e: EdgpeError| match e {
            EdgpeError::Config(f) => f.first().cloned().unwrap_or_default(),
            other => panic!("expected config fault list, got {other:?}"),
        };
        assert!(first(schema_err).starts_with("schema."));
        assert!(first(physics_err).starts_with("physics."));
    }

    #[test]
    fn malformed_json_is_a_schema_fault() {
        let err = parse_config("{not json").unwrap_err();
        match err {
            EdgpeError::Config(faults) => {
                assert!(faults[0].starts_with("schema.json"))
            }
            other => panic!("expected config fault list, got {other:?}"),
        }
    }
}
