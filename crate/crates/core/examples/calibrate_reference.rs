//! Prints the uniform-array nodal calibration for the 128x128 / 65nm reference.

use rram_drift::circuit::nodal::calibrate_uniform;
use rram_drift::circuit::TechNodeParams;

fn main() {
    let (r, v) = calibrate_uniform(&TechNodeParams::nm65(), 128, 0.57, 0.40).expect("calibration");
    println!("r_cell = {r:?}\nv_drive = {v:?}");
}
