//! Plot-ready CSV for the device and circuit characteristics.

use rram_drift::circuit::nodal::{solve_nodal, NodalOptions};
use rram_drift::circuit::{calibrate_rcell, corner_current_difference, nodal_reference_config};
use rram_drift::disturb::{transition_time, DisturbParams};
use rram_drift::{Error, RunConfig};

use crate::commands::load_config;
use crate::output::write_atomic;
use crate::{FigdataArgs, Figure};

/// Crossbar size and corner difference `R_cell` is calibrated against.
pub const FIG4_ANCHOR: (usize, f64) = (128, 0.392);
/// Crossbar sizes of the corner-difference sweep, with published reference values.
pub const FIG4_SIZES: [(usize, f64); 4] = [(32, 0.133), (64, 0.251), (128, 0.392), (256, 0.558)];
/// Stress voltages of the transition-time sweep span 0.40 V to 0.57 V.
pub const FIG8_STEPS: usize = 18;

pub fn run(a: &FigdataArgs) -> Result<(), Error> {
    let (cfg, _) = load_config(a.config.as_ref())?;
    let csv = match a.which {
        Figure::Fig4 => fig4(&cfg)?,
        Figure::Fig5 => fig5(&cfg)?,
        Figure::Fig8 => fig8(&cfg)?,
    };
    write_atomic(&a.out, &csv)
}

/// Corner current difference against crossbar size in the series model,
/// with `R_cell` calibrated on the anchor for the configured technology.
pub fn fig4(cfg: &RunConfig) -> Result<String, Error> {
    let tech = cfg.tech.resolve()?;
    let r_cell = calibrate_rcell(&tech, FIG4_ANCHOR.1, FIG4_ANCHOR.0)?;
    let mut out = String::from("N,tech,r_cell,corner_diff,reference\n");
    for (n, reference) in FIG4_SIZES {
        let diff = corner_current_difference(&tech, n, r_cell);
        out.push_str(&format!("{n},{},{r_cell},{diff},{reference}\n", tech.name));
    }
    Ok(out)
}

/// Nodal voltage map of the uniform 128x128 reference array with every
/// wordline driven, plus the HRS transition time each cell's voltage implies.
pub fn fig5(cfg: &RunConfig) -> Result<String, Error> {
    let params = cfg.disturb_params()?;
    let config = nodal_reference_config();
    let cells = vec![config.r_cell_by_level[0]; config.n * config.n];
    let active = vec![true; config.n];
    let env = solve_nodal(&config, &cells, &active, &NodalOptions::default())?;
    let mut out = String::from("i,j,voltage,current,hrs_transition_time\n");
    for c in &env.cells {
        let t = transition_time(0, c.stress_voltage, &params)?;
        out.push_str(&format!("{},{},{},{},{t}\n", c.i, c.j, c.stress_voltage, c.current));
    }
    Ok(out)
}

/// Transition time of an HRS (level 0) and an LRS (level 1) cell against
/// stress voltage.
pub fn fig8(cfg: &RunConfig) -> Result<String, Error> {
    let params = cfg.disturb_params()?;
    fig8_with(&params)
}

fn fig8_with(params: &DisturbParams) -> Result<String, Error> {
    let mut out = String::from("voltage,hrs_transition_time,lrs_transition_time\n");
    for k in 0..FIG8_STEPS {
        let v = 0.40 + 0.01 * k as f64;
        let hrs = transition_time(0, v, params)?;
        let lrs = transition_time(1, v, params)?;
        out.push_str(&format!("{v:.2},{hrs},{lrs}\n"));
    }
    Ok(out)
}
