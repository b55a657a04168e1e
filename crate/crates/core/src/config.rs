//! Run configuration shared by every pipeline stage.
//!
//! A single JSON object; every key is optional and unknown keys are
//! rejected. Defaults:
//!
//! | key | default |
//! |-----|---------|
//! | `tech` | `{"name": "65nm"}` (`r_wl`, `r_bl` override the table) |
//! | `crossbar_N` | 128 |
//! | `v_drive` | 0.5 V |
//! | `r_cell_levels` | `[100000, 10000, 1000]` ohms, level 0 first |
//! | `circuit_mode` | `"series"` |
//! | `calibration` | `{"anchors": [[0.57, 5.227], [0.40, 31.214]]}` |
//! | `disturb` | none; a full parameter set replacing `calibration` |
//! | `cost` | 1 Mbit/s, 2 bits/cell, 1 ms program-and-verify, 128 parallel |
//! | `mode` | `"proposed"` |
//! | `epsilon` | 1e-6 |
//! | `threshold` | 0.01 |
//! | `seed` | `RRAM_DRIFT_SEED`, else 0 |
//! | `exact_cap` | 6 |
//! | `budget` | `50 * N^2` size-weighted neighbour evaluations |
//! | `inference_period` | 0.01 s |
//! | `window` | 100 samples |
//! | `stream_length` | 1000 inferences |
//! | `stress_accounting` | `"mean"` |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitMode, CrossbarConfig, StressField, TechNodeParams};
use crate::disturb::{calibrate_hrs, transition_time, DisturbParams, HrsLanding, DEFAULT_HRS_ANCHORS};
use crate::error::{Error, Result};
use crate::io;
use crate::mapper::{MapMode, MapOptions, TransitionTable, DEFAULT_EXACT_CAP};
use crate::profile::{DEFAULT_EPSILON, DEFAULT_THRESHOLD};
use crate::simulate::{ReprogramCostModel, SimOptions, StressAccounting, DEFAULT_INFERENCE_PERIOD, DEFAULT_WINDOW};

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "RRAM_DRIFT_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechSelection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_wl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_bl: Option<f64>,
}

impl Default for TechSelection {
    fn default() -> Self {
        Self {
            name: "65nm".into(),
            r_wl: None,
            r_bl: None,
        }
    }
}

impl TechSelection {
    pub fn resolve(&self) -> Result<TechNodeParams> {
        match (TechNodeParams::lookup(&self.name), self.r_wl, self.r_bl) {
            (Ok(mut t), r_wl, r_bl) => {
                if let Some(v) = r_wl {
                    t.r_wl = v;
                }
                if let Some(v) = r_bl {
                    t.r_bl = v;
                }
                t.validate()?;
                Ok(t)
            }
            (Err(_), Some(r_wl), Some(r_bl)) => TechNodeParams::new(&self.name, r_wl, r_bl),
            (Err(e), _, _) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub anchors: [(f64, f64); 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_width: Option<f64>,
    #[serde(default)]
    pub hrs_landing: HrsLanding,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            anchors: DEFAULT_HRS_ANCHORS,
            pulse_width: None,
            hrs_landing: HrsLanding::NextLevel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub tech: TechSelection,
    #[serde(rename = "crossbar_N")]
    pub crossbar_n: usize,
    pub v_drive: f64,
    pub r_cell_levels: Vec<f64>,
    pub circuit_mode: CircuitMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disturb: Option<DisturbParams>,
    pub cost: ReprogramCostModel,
    pub mode: MapMode,
    pub epsilon: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub exact_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    pub inference_period: f64,
    pub window: usize,
    pub stream_length: u64,
    pub stress_accounting: StressAccounting,
}

impl Default for RunConfig {
    fn default() -> Self {
        let xb = CrossbarConfig::default();
        Self {
            tech: TechSelection::default(),
            crossbar_n: xb.n,
            v_drive: xb.v_drive,
            r_cell_levels: xb.r_cell_by_level,
            circuit_mode: CircuitMode::Series,
            calibration: None,
            disturb: None,
            cost: ReprogramCostModel::default(),
            mode: MapMode::Proposed,
            epsilon: DEFAULT_EPSILON,
            threshold: DEFAULT_THRESHOLD,
            seed: None,
            exact_cap: DEFAULT_EXACT_CAP,
            budget: None,
            inference_period: DEFAULT_INFERENCE_PERIOD,
            window: DEFAULT_WINDOW,
            stream_length: 1000,
            stress_accounting: StressAccounting::Mean,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&io::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.crossbar()?;
        self.cost.validate()?;
        if self.calibration.is_some() && self.disturb.is_some() {
            return Err(Error::invalid("disturb", "give either calibration or disturb, not both"));
        }
        if let Some(d) = &self.disturb {
            d.validate()?;
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::invalid("threshold", "must be finite and >= 0"));
        }
        if !(self.inference_period.is_finite() && self.inference_period > 0.0) {
            return Err(Error::invalid("inference_period", "must be positive"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be at least 1"));
        }
        if self.stream_length == 0 {
            return Err(Error::invalid("stream_length", "must be at least 1"));
        }
        if self.budget == Some(0) {
            return Err(Error::invalid("budget", "must be at least 1"));
        }
        Ok(())
    }

    pub fn crossbar(&self) -> Result<CrossbarConfig> {
        let cfg = CrossbarConfig {
            n: self.crossbar_n,
            tech: self.tech.resolve()?,
            r_cell_by_level: self.r_cell_levels.clone(),
            v_drive: self.v_drive,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn disturb_params(&self) -> Result<DisturbParams> {
        if let Some(d) = &self.disturb {
            d.validate()?;
            return Ok(d.clone());
        }
        let cal = self.calibration.clone().unwrap_or_default();
        let mut params = calibrate_hrs(cal.anchors[0], cal.anchors[1])?;
        if let Some(pw) = cal.pulse_width {
            params.pulse_width = pw;
        }
        params.hrs_landing = cal.hrs_landing;
        params.validate()?;
        Ok(params)
    }

    /// Explicit seed, else the environment fallback, else 0.
    pub fn resolved_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        seed_from_env()
    }

    pub fn map_options(&self, mode: MapMode, seed: u64, pulse_width: f64) -> MapOptions {
        MapOptions {
            mode,
            seed,
            exact_cap: self.exact_cap,
            budget: self.budget,
            pulse_width,
        }
    }

    pub fn sim_options(&self, seed: u64) -> SimOptions {
        SimOptions {
            seed,
            window: self.window,
            inference_period: self.inference_period,
            stream_length: self.stream_length,
            accounting: self.stress_accounting,
            ..SimOptions::default()
        }
    }
}

/// Seed from `RRAM_DRIFT_SEED`, or 0 when unset.
pub fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(SEED_ENV, format!("not an unsigned integer: {v:?}"))),
        Err(_) => Ok(0),
    }
}

/// Circuit and device state derived from a configuration.
#[derive(Debug, Clone)]
pub struct Environment {
    pub crossbar: CrossbarConfig,
    pub field: StressField,
    pub params: DisturbParams,
    pub table: TransitionTable,
}

impl Environment {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let crossbar = cfg.crossbar()?;
        let params = cfg.disturb_params()?;
        if transition_time(0, 0.45, &params)? <= transition_time(1, 0.45, &params)? {
            log::warn!("calibrated HRS transition time at 0.45 V does not exceed the LRS time");
        }
        let field = StressField::build(&crossbar, cfg.circuit_mode)?;
        let table = TransitionTable::build(&field, &params)?;
        Ok(Self {
            crossbar,
            field,
            params,
            table,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.crossbar().unwrap().n, 128);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_json(r#"{"crossbar_n": 64}"#).unwrap_err();
        assert!(err.to_string().contains("crossbar_n"), "{err}");
    }

    #[test]
    fn anchors_override() {
        let cfg = RunConfig::from_json(r#"{"calibration":{"anchors":[[0.57,5.227],[0.40,31.214]]}}"#).unwrap();
        let p = cfg.disturb_params().unwrap();
        assert_eq!(p, RunConfig::default().disturb_params().unwrap());
        let bad = RunConfig::from_json(r#"{"calibration":{"anchors":[[0.57,40.0],[0.40,31.214]]}}"#).unwrap();
        assert!(bad.disturb_params().is_err());
    }

    #[test]
    fn invalid_values_name_their_field() {
        for (json, field) in [
            (r#"{"epsilon": 0}"#, "epsilon"),
            (r#"{"crossbar_N": 0}"#, "crossbar_N"),
            (r#"{"tech": {"name": "7nm"}}"#, "tech"),
            (r#"{"cost": {"channel_bandwidth": 0, "bits_per_cell": 2, "pv_latency": 1e-3, "pv_parallelism": 1}}"#, "cost.channel_bandwidth"),
        ] {
            let err = RunConfig::from_json(json).unwrap_err();
            assert!(err.field().is_some_and(|f| f.contains(field)), "{json}: {err:?}");
        }
    }

    #[test]
    fn custom_tech_needs_both_resistances() {
        let sel = TechSelection { name: "28nm".into(), r_wl: Some(5.0), r_bl: Some(2.0) };
        assert_eq!(sel.resolve().unwrap().r_wl, 5.0);
        let half = TechSelection { name: "28nm".into(), r_wl: Some(5.0), r_bl: None };
        assert!(half.resolve().is_err());
    }
}
