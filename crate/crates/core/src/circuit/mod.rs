//! Crossbar parasitics: per-cell path resistance, stress voltage and current.
//!
//! Two evaluation modes are provided. The series mode treats each cell as an
//! isolated voltage divider between the cell and the parasitic wire segments
//! on its path. The nodal mode builds the full resistive ladder and solves it
//! directly (see [`nodal`]).
//!
//! Coordinates are `(i, j)` with `i` the wordline (input port) and `j` the
//! bitline (output port). A cell's path crosses `i + j + 1` parasitic
//! segments: one access segment of `r_wl`, `i` steps of `r_wl` and `j` steps
//! of `r_bl`.

mod banded;
pub mod nodal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nodal::{solve_nodal, CellEnvironment, CellSite, NodalOptions};

/// Unit wire resistances of a technology node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechNodeParams {
    pub name: String,
    /// Ohms per wordline segment.
    pub r_wl: f64,
    /// Ohms per bitline segment.
    pub r_bl: f64,
    /// Extrapolated rather than characterized.
    #[serde(default)]
    pub projected: bool,
}

impl TechNodeParams {
    pub fn new(name: &str, r_wl: f64, r_bl: f64) -> Result<Self> {
        let t = Self {
            name: name.to_string(),
            r_wl,
            r_bl,
            projected: false,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn nm65() -> Self {
        Self { name: "65nm".into(), r_wl: 2.5, r_bl: 1.0, projected: false }
    }

    pub fn nm16() -> Self {
        Self { name: "16nm".into(), r_wl: 10.0, r_bl: 3.8, projected: false }
    }

    /// The 5nm bitline value has no characterization data and is set equal
    /// to the wordline value.
    pub fn nm5() -> Self {
        Self { name: "5nm".into(), r_wl: 25.0, r_bl: 25.0, projected: true }
    }

    pub fn builtin() -> [TechNodeParams; 3] {
        [Self::nm65(), Self::nm16(), Self::nm5()]
    }

    pub fn lookup(name: &str) -> Result<Self> {
        Self::builtin()
            .into_iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::invalid("tech.name", format!("unknown node {name:?} (known: 65nm, 16nm, 5nm)"))
            })
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("tech.r_wl", self.r_wl), ("tech.r_bl", self.r_bl)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, "must be positive"));
            }
        }
        Ok(())
    }
}

/// Geometry, parasitics and cell states of one crossbar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossbarConfig {
    /// Cells per side.
    pub n: usize,
    pub tech: TechNodeParams,
    /// Cell resistance per weight level; level 0 is the high-resistance state
    /// and values strictly decrease with level.
    pub r_cell_by_level: Vec<f64>,
    /// Spike voltage applied by a pre-synaptic neuron.
    pub v_drive: f64,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        Self {
            n: 128,
            tech: TechNodeParams::nm65(),
            r_cell_by_level: vec![100_000.0, 10_000.0, 1_000.0],
            v_drive: 0.5,
        }
    }
}

impl CrossbarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("crossbar_N", "crossbar needs at least one cell per side"));
        }
        self.tech.validate()?;
        if !(self.v_drive.is_finite() && self.v_drive > 0.0) {
            return Err(Error::invalid("v_drive", "must be positive"));
        }
        if self.r_cell_by_level.is_empty() {
            return Err(Error::invalid("r_cell_levels", "at least one level required"));
        }
        if self.r_cell_by_level.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("r_cell_levels", "resistances must be positive"));
        }
        if self.r_cell_by_level.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid(
                "r_cell_levels",
                "resistances must strictly decrease with level",
            ));
        }
        Ok(())
    }

    pub fn num_levels(&self) -> usize {
        self.r_cell_by_level.len()
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::OutOfRange { i, j, n: self.n });
        }
        Ok(())
    }
}

/// Parasitic resistance on the current path through cell `(i, j)`.
pub fn path_resistance(i: usize, j: usize, config: &CrossbarConfig) -> Result<f64> {
    config.check(i, j)?;
    Ok(path_unchecked(i, j, &config.tech))
}

fn path_unchecked(i: usize, j: usize, tech: &TechNodeParams) -> f64 {
    i as f64 * tech.r_wl + j as f64 * tech.r_bl + tech.r_wl
}

/// Voltage across and current through one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub stress_voltage: f64,
    pub current: f64,
}

/// Divider between the cell and its parasitic path, driven at `v_drive`.
pub fn series_cell_state(
    i: usize,
    j: usize,
    config: &CrossbarConfig,
    cell_resistance: f64,
) -> Result<OperatingPoint> {
    let path = path_resistance(i, j, config)?;
    if !(cell_resistance.is_finite() && cell_resistance > 0.0) {
        return Err(Error::invalid("cell_resistance", "must be positive"));
    }
    Ok(divider(config.v_drive, cell_resistance, path))
}

fn divider(v_drive: f64, cell: f64, path: f64) -> OperatingPoint {
    let current = v_drive / (cell + path);
    OperatingPoint {
        stress_voltage: current * cell,
        current,
    }
}

/// Relative shortfall of the far-corner current against the `(0, 0)` current
/// in an `n x n` crossbar: `1 - I(n-1, n-1) / I(0, 0)`.
pub fn corner_current_difference(tech: &TechNodeParams, n: usize, r_cell: f64) -> f64 {
    let short = path_unchecked(0, 0, tech);
    let long = path_unchecked(n - 1, n - 1, tech);
    1.0 - (r_cell + short) / (r_cell + long)
}

/// Cell resistance that makes the corner current difference of an
/// `anchor_n x anchor_n` crossbar equal `target`.
///
/// Closed form of `(R + R_short) / (R + R_long) = 1 - target`.
pub fn calibrate_rcell(tech: &TechNodeParams, target: f64, anchor_n: usize) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid("target", "corner difference must lie in (0, 1)"));
    }
    if anchor_n < 2 {
        return Err(Error::invalid("anchor_n", "need at least a 2x2 crossbar"));
    }
    tech.validate()?;
    let short = path_unchecked(0, 0, tech);
    let long = path_unchecked(anchor_n - 1, anchor_n - 1, tech);
    let r = ((1.0 - target) * long - short) / target;
    if r <= 0.0 {
        return Err(Error::Infeasible(format!(
            "corner difference {target} unreachable at {anchor_n}x{anchor_n}: needs R_cell = {r} ohm"
        )));
    }
    Ok(r)
}

/// How cell stress voltages are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitMode {
    #[default]
    Series,
    Nodal,
}

/// Stress voltage of every cell for every programmable level.
///
/// The programmed level travels with a synapse, so the mapper needs the
/// voltage a cell would see for each level it might hold. In nodal mode each
/// level is solved with the whole array at that level and every wordline
/// driven.
#[derive(Debug, Clone, PartialEq)]
pub struct StressField {
    n: usize,
    num_levels: usize,
    mode: CircuitMode,
    /// `[level][i * n + j]`
    volts: Vec<Vec<f64>>,
}

impl StressField {
    pub fn build(config: &CrossbarConfig, mode: CircuitMode) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let volts = match mode {
            CircuitMode::Series => config
                .r_cell_by_level
                .iter()
                .map(|&r| {
                    (0..n * n)
                        .map(|c| {
                            let p = path_unchecked(c / n, c % n, &config.tech);
                            divider(config.v_drive, r, p).stress_voltage
                        })
                        .collect()
                })
                .collect(),
            CircuitMode::Nodal => {
                let active = vec![true; n];
                config
                    .r_cell_by_level
                    .iter()
                    .map(|&r| {
                        let cells = vec![r; n * n];
                        let env = solve_nodal(config, &cells, &active, &NodalOptions::default())?;
                        Ok(env.cells.iter().map(|c| c.stress_voltage).collect())
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self {
            n,
            num_levels: config.num_levels(),
            mode,
            volts,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn mode(&self) -> CircuitMode {
        self.mode
    }

    pub fn voltage(&self, i: usize, j: usize, level: u8) -> f64 {
        self.volts[level as usize][i * self.n + j]
    }
}

/// Extremes of a voltage map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageMapStats {
    pub v_min: f64,
    pub v_max: f64,
    pub argmin: (usize, usize),
    pub argmax: (usize, usize),
}

pub fn voltage_map_stats(env: &CellEnvironment) -> VoltageMapStats {
    let mut stats = VoltageMapStats {
        v_min: f64::INFINITY,
        v_max: f64::NEG_INFINITY,
        argmin: (0, 0),
        argmax: (0, 0),
    };
    for c in &env.cells {
        if c.stress_voltage < stats.v_min {
            stats.v_min = c.stress_voltage;
            stats.argmin = (c.i, c.j);
        }
        if c.stress_voltage > stats.v_max {
            stats.v_max = c.stress_voltage;
            stats.argmax = (c.i, c.j);
        }
    }
    stats
}

/// Series-mode environment for an arbitrary per-cell resistance matrix
/// (row-major, `n * n` entries).
pub fn series_environment(config: &CrossbarConfig, cells: &[f64]) -> Result<CellEnvironment> {
    config.validate()?;
    let n = config.n;
    if cells.len() != n * n {
        return Err(Error::invalid("cells", format!("expected {} entries", n * n)));
    }
    let sites = cells
        .iter()
        .enumerate()
        .map(|(c, &r)| {
            let (i, j) = (c / n, c % n);
            let path = path_unchecked(i, j, &config.tech);
            let op = divider(config.v_drive, r, path);
            CellSite {
                i,
                j,
                path_resistance: path,
                stress_voltage: op.stress_voltage,
                current: op.current,
            }
        })
        .collect();
    Ok(CellEnvironment {
        n,
        mode: CircuitMode::Series,
        cells: sites,
        kcl_residual: 0.0,
        injected_power: f64::NAN,
        dissipated_power: f64::NAN,
    })
}

/// Uniform-array reference whose nodal voltage map spans roughly
/// 0.40 V to 0.57 V on a 128x128 crossbar at 65nm with every wordline driven.
///
/// Frozen output of [`nodal::calibrate_uniform`] for those targets.
pub fn nodal_reference_config() -> CrossbarConfig {
    CrossbarConfig {
        n: 128,
        tech: TechNodeParams::nm65(),
        r_cell_by_level: vec![NODAL_REFERENCE_R_CELL],
        v_drive: NODAL_REFERENCE_V_DRIVE,
    }
}

pub const NODAL_REFERENCE_R_CELL: f64 = 69_115.054_352_361_75;
pub const NODAL_REFERENCE_V_DRIVE: f64 = 0.572_450_685_475_136;
