//! Read-disturb physics of OxRRAM cells.
//!
//! A cell in the high-resistance state (level 0) drifts when repeated read
//! stress closes the vertical filament gap:
//!
//! ```text
//! dg/dt = -v0 * exp(-Ea / kT) * sinh(gamma * a0 / L * qV / kT),
//! gamma = gamma0 - beta * (g / g0)^3
//! ```
//!
//! The transition time is the time for `g` to fall from `g0` to `g_close`.
//! Low-resistance levels follow the empirical `t = 10^(-14.7 V + 6.7)` seconds.
//!
//! Stress is measured in seconds of applied read voltage; one spike applies
//! `pulse_width` seconds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV: f64 = 8.617_333_262e-5;

/// Default calibration anchors `(volts, seconds)` for the HRS transition time.
pub const DEFAULT_HRS_ANCHORS: [(f64, f64); 2] = [(0.57, 5.227), (0.40, 31.214)];

const MAX_STEPS: u64 = 100_000_000;
const DEFAULT_RTOL: f64 = 1e-8;

/// Where an HRS cell lands when its gap closes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HrsLanding {
    #[default]
    NextLevel,
    MaxLevel,
}

/// Filament-gap model parameters.
///
/// `q` is a multiple of the elementary charge, so `q * V / (k * T)` is
/// dimensionless with `V` in volts and `k * T` in eV. Lengths are in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbParams {
    /// Gap velocity prefactor, nm/s.
    pub vartheta0: f64,
    /// Activation energy, eV.
    pub ea: f64,
    /// Boltzmann constant, eV/K.
    #[serde(default = "default_k")]
    pub k: f64,
    /// Temperature, K.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    pub gamma0: f64,
    #[serde(default)]
    pub beta: f64,
    /// Atomic hopping distance, nm.
    pub a0: f64,
    /// Vertical filament length, nm.
    pub l_fil: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Initial gap, nm.
    pub g0: f64,
    /// Gap at which the cell has switched, nm.
    pub g_close: f64,
    /// Seconds of stress per spike.
    #[serde(default = "default_pulse_width")]
    pub pulse_width: f64,
    #[serde(default)]
    pub hrs_landing: HrsLanding,
}

fn default_k() -> f64 {
    BOLTZMANN_EV
}
fn default_temperature() -> f64 {
    300.0
}
fn default_q() -> f64 {
    1.0
}
fn default_pulse_width() -> f64 {
    1e-3
}

impl DisturbParams {
    fn kt(&self) -> f64 {
        self.k * self.temperature
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vartheta0", self.vartheta0),
            ("ea", self.ea),
            ("k", self.k),
            ("temperature", self.temperature),
            ("gamma0", self.gamma0),
            ("a0", self.a0),
            ("l_fil", self.l_fil),
            ("q", self.q),
            ("g0", self.g0),
            ("g_close", self.g_close),
            ("pulse_width", self.pulse_width),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("disturb.{field}"), "must be positive and finite"));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid("disturb.beta", "must be finite and >= 0"));
        }
        if self.g_close >= self.g0 {
            return Err(Error::invalid("disturb.g_close", "must be below g0"));
        }
        Ok(())
    }

    /// Lumped constants `(A, B)` with `t(V) = 1 / (A * sinh(B * V))` when
    /// `beta == 0`.
    pub fn lumped(&self) -> (f64, f64) {
        let kt = self.kt();
        let a = self.vartheta0 * (-self.ea / kt).exp() / (self.g0 - self.g_close);
        let b = self.gamma0 * self.a0 * self.q / (self.l_fil * kt);
        (a, b)
    }

    /// Parameter set with `beta = 0` reproducing the lumped constants.
    ///
    /// Only the lumped pair is observable; the remaining constants are fixed
    /// at nominal values and `vartheta0`, `gamma0` absorb the fit.
    pub fn from_lumped(a: f64, b: f64) -> Self {
        let mut p = Self {
            vartheta0: 1.0,
            ea: 0.6,
            k: BOLTZMANN_EV,
            temperature: 300.0,
            gamma0: 1.0,
            beta: 0.0,
            a0: 0.25,
            l_fil: 3.0,
            q: 1.0,
            g0: 1.7,
            g_close: 0.2,
            pulse_width: default_pulse_width(),
            hrs_landing: HrsLanding::NextLevel,
        };
        let kt = p.kt();
        p.vartheta0 = a * (p.g0 - p.g_close) * (p.ea / kt).exp();
        p.gamma0 = b * p.l_fil * kt / (p.a0 * p.q);
        p
    }

    /// Gap closing speed (nm/s, positive) at gap `g` under `v` volts.
    fn closing_rate(&self, g: f64, v: f64) -> std::result::Result<f64, String> {
        let kt = self.kt();
        let gamma = self.gamma0 - self.beta * (g / self.g0).powi(3);
        if gamma <= 0.0 {
            return Err(format!("field enhancement gamma = {gamma} <= 0 at g = {g} nm"));
        }
        let arg = gamma * self.a0 / self.l_fil * self.q * v / kt;
        Ok(self.vartheta0 * (-self.ea / kt).exp() * arg.sinh())
    }
}

impl Default for DisturbParams {
    /// Calibrated to the default HRS anchors.
    fn default() -> Self {
        calibrate_hrs(DEFAULT_HRS_ANCHORS[0], DEFAULT_HRS_ANCHORS[1])
            .expect("default anchors are consistent")
    }
}

/// LRS transition time, seconds.
pub fn lrs_transition_time(v: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid("voltage", format!("must be positive, got {v}")));
    }
    Ok(10f64.powf(-14.7 * v + 6.7))
}

/// HRS transition time, seconds, by integrating the gap equation.
pub fn hrs_transition_time(v: f64, params: &DisturbParams) -> Result<f64> {
    hrs_transition_time_with_tol(v, params, DEFAULT_RTOL)
}

/// Same as [`hrs_transition_time`] with an explicit relative tolerance.
///
/// Integrates `dt/ds = 1 / rate(g0 - s)` over the closed distance
/// `s in [0, g0 - g_close]` with an embedded Dormand-Prince 5(4) pair.
pub fn hrs_transition_time_with_tol(v: f64, params: &DisturbParams, rtol: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid("voltage", format!("must be positive, got {v}")));
    }
    params.validate()?;
    let fail = |message: String| Error::Integration {
        message,
        voltage: v,
        gamma0: params.gamma0,
        beta: params.beta,
        g0: params.g0,
        g_close: params.g_close,
    };
    let span = params.g0 - params.g_close;
    let f = |s: f64| -> Result<f64> {
        let rate = params.closing_rate(params.g0 - s, v).map_err(&fail)?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(fail(format!("gap velocity {rate} is not positive and finite")));
        }
        Ok(1.0 / rate)
    };

    let mut s = 0.0;
    let mut t = 0.0;
    let mut h = span / 16.0;
    let mut k1 = f(s)?;
    let mut steps = 0u64;
    while s < span {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(fail(format!("no convergence within {MAX_STEPS} steps")));
        }
        if s + h > span {
            h = span - s;
        }
        let (t5, err, k7) = dopri_step(&f, s, t, h, k1)?;
        let scale = rtol * t5.abs().max(t.abs()) + f64::MIN_POSITIVE;
        let ratio = err / scale;
        if ratio <= 1.0 {
            s += h;
            t = t5;
            k1 = k7;
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h <= span * 1e-15 {
            return Err(fail("step size underflow".into()));
        }
    }
    Ok(t)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One step of `dt/ds = f(s)`. The right-hand side does not depend on `t`,
/// so the stage values only need the abscissae.
fn dopri_step(
    f: &impl Fn(f64) -> Result<f64>,
    s: f64,
    t: f64,
    h: f64,
    k1: f64,
) -> Result<(f64, f64, f64)> {
    let mut k = [0.0; 7];
    k[0] = k1;
    for stage in 1..7 {
        k[stage] = f(s + C[stage] * h)?;
    }
    let t5 = t + h * B5.iter().zip(&k).map(|(b, k)| b * k).sum::<f64>();
    let t4 = t + h * B4.iter().zip(&k).map(|(b, k)| b * k).sum::<f64>();
    Ok((t5, (t5 - t4).abs(), k[6]))
}

/// Closed-form HRS transition time for `beta == 0`.
pub fn hrs_closed_form(v: f64, params: &DisturbParams) -> f64 {
    let (a, b) = params.lumped();
    1.0 / (a * (b * v).sinh())
}

/// Fits the lumped HRS constants through two `(volts, seconds)` anchors.
///
/// `B` is found by bisection on `sinh(B v_hi) / sinh(B v_lo) = t_lo / t_hi`;
/// `A` then follows from either anchor.
pub fn calibrate_hrs(anchor1: (f64, f64), anchor2: (f64, f64)) -> Result<DisturbParams> {
    let (hi, lo) = if anchor1.0 > anchor2.0 { (anchor1, anchor2) } else { (anchor2, anchor1) };
    let (v_hi, t_hi) = hi;
    let (v_lo, t_lo) = lo;
    for (v, t) in [hi, lo] {
        if !(v.is_finite() && v > 0.0 && t.is_finite() && t > 0.0) {
            return Err(Error::invalid("calibration.anchors", "voltages and times must be positive"));
        }
    }
    if v_hi == v_lo {
        return Err(Error::invalid("calibration.anchors", "anchor voltages must differ"));
    }
    if t_hi >= t_lo {
        return Err(Error::invalid(
            "calibration.anchors",
            "transition time must decrease with voltage",
        ));
    }
    let target = (t_lo / t_hi).ln();
    // As B -> 0 the ratio tends to v_hi / v_lo, its infimum.
    if target <= (v_hi / v_lo).ln() {
        return Err(Error::invalid(
            "calibration.anchors",
            format!("time ratio {} not above voltage ratio {}", t_lo / t_hi, v_hi / v_lo),
        ));
    }
    let log_ratio = |b: f64| ln_sinh(b * v_hi) - ln_sinh(b * v_lo);
    let (mut lo_b, mut hi_b) = (1e-9, 1.0);
    while log_ratio(hi_b) < target {
        hi_b *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo_b + hi_b);
        let r = log_ratio(mid);
        if (r - target).abs() < 1e-12 {
            lo_b = mid;
            hi_b = mid;
            break;
        }
        if r < target {
            lo_b = mid;
        } else {
            hi_b = mid;
        }
    }
    let b = 0.5 * (lo_b + hi_b);
    let a = 1.0 / (t_hi * (b * v_hi).sinh());
    Ok(DisturbParams::from_lumped(a, b))
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-2.0 * x).exp_m1().ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Transition time for a cell at `level` under `v` volts.
pub fn transition_time(level: u8, v: f64, params: &DisturbParams) -> Result<f64> {
    if level == 0 {
        hrs_transition_time(v, params)
    } else {
        lrs_transition_time(v)
    }
}

/// Inferences a cell survives: transition time over stress per inference.
pub fn inference_lifetime(t_transition: f64, eta: f64, pulse_width: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "spikes per inference must be positive"));
    }
    if !(pulse_width > 0.0) {
        return Err(Error::invalid("pulse_width", "must be positive"));
    }
    Ok(t_transition / (eta * pulse_width))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Hrs,
    Lrs,
}

/// Drift state of one programmed cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub level: u8,
    /// Stress seconds accumulated since the last transition or reprogram.
    pub accumulated_stress: f64,
    /// `(volts, seconds)` of the last transition-time evaluation at this level.
    cached: Option<(f64, f64)>,
}

/// A level change caused by accumulated stress.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: u8,
    pub to: u8,
}

impl CellState {
    pub fn programmed(level: u8) -> Self {
        Self {
            level,
            accumulated_stress: 0.0,
            cached: None,
        }
    }

    pub fn phase(&self) -> Phase {
        if self.level == 0 {
            Phase::Hrs
        } else {
            Phase::Lrs
        }
    }

    fn transition_time_at(&mut self, v: f64, params: &DisturbParams) -> Result<f64> {
        if let Some((cv, ct)) = self.cached {
            if cv == v {
                return Ok(ct);
            }
        }
        let t = transition_time(self.level, v, params)?;
        self.cached = Some((v, t));
        Ok(t)
    }
}

/// Adds `spikes` read pulses of stress at `v` volts.
pub fn accumulate_stress(
    state: &CellState,
    spikes: u64,
    v: f64,
    params: &DisturbParams,
    max_level: u8,
) -> Result<(CellState, Vec<Transition>)> {
    accumulate_stress_seconds(state, spikes as f64 * params.pulse_width, v, params, max_level)
}

/// Adds `seconds` of stress at `v` volts, stepping the level each time the
/// accumulated stress reaches the current level's transition time. The
/// remainder carries over to the new level. A cell at `max_level` keeps
/// accumulating but cannot move.
pub fn accumulate_stress_seconds(
    state: &CellState,
    seconds: f64,
    v: f64,
    params: &DisturbParams,
    max_level: u8,
) -> Result<(CellState, Vec<Transition>)> {
    let mut next = *state;
    let mut events = Vec::new();
    next.accumulated_stress += seconds;
    while next.level < max_level {
        let t = next.transition_time_at(v, params)?;
        if next.accumulated_stress < t {
            break;
        }
        next.accumulated_stress -= t;
        let from = next.level;
        next.level = match (from, params.hrs_landing) {
            (0, HrsLanding::MaxLevel) => max_level,
            _ => from + 1,
        };
        next.cached = None;
        events.push(Transition { from, to: next.level });
    }
    Ok((next, events))
}
