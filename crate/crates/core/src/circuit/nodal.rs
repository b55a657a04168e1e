//! Direct DC solve of the full crossbar resistive ladder.
//!
//! Every cell `(i, j)` has an input-side node on wordline `i` and an
//! output-side node on bitline `j`. Wordline `i` is driven through one access
//! segment of `r_wl` (at `v_drive` when active, at 0 V otherwise) and steps
//! of `r_bl` separate consecutive cells along it. Bitline nodes are joined by
//! steps of `r_wl` down to the row-0 end, which sits at virtual ground. With
//! this accounting a lone conducting cell sees exactly the series-mode path
//! `r_wl + i * r_wl + j * r_bl`.
//!
//! Node voltages come from a band Cholesky factorization of the conductance
//! matrix followed by iterative refinement on the KCL residual.

use std::fmt::Write as _;

use super::banded::BandMatrix;
use super::{path_unchecked, CircuitMode, CrossbarConfig, TechNodeParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalOptions {
    /// Refinement stops once max |KCL| / injected current falls below this.
    pub residual_tol: f64,
    pub max_refinements: usize,
}

impl Default for NodalOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-13,
            max_refinements: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSite {
    pub i: usize,
    pub j: usize,
    pub path_resistance: f64,
    pub stress_voltage: f64,
    pub current: f64,
}

/// Per-cell operating points of one crossbar evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellEnvironment {
    pub n: usize,
    pub mode: CircuitMode,
    /// Row-major, `n * n` entries.
    pub cells: Vec<CellSite>,
    /// Max |net node current| / total injected current (nodal mode only).
    pub kcl_residual: f64,
    pub injected_power: f64,
    pub dissipated_power: f64,
}

impl CellEnvironment {
    pub fn cell(&self, i: usize, j: usize) -> &CellSite {
        &self.cells[i * self.n + j]
    }

    /// Row-major CSV with header `i,j,voltage,current`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,voltage,current\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{},{}", c.i, c.j, c.stress_voltage, c.current);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Terminal {
    Node(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy)]
struct Resistor {
    a: Terminal,
    b: Terminal,
    g: f64,
}

impl Resistor {
    fn drop(&self, x: &[f64]) -> f64 {
        volt(self.a, x) - volt(self.b, x)
    }
}

fn volt(t: Terminal, x: &[f64]) -> f64 {
    match t {
        Terminal::Node(p) => x[p],
        Terminal::Fixed(v) => v,
    }
}

/// Solves the ladder for per-cell resistances `cells` (row-major `n * n`)
/// with the wordlines flagged in `active` driven at `v_drive`.
pub fn solve_nodal(
    config: &CrossbarConfig,
    cells: &[f64],
    active: &[bool],
    opts: &NodalOptions,
) -> Result<CellEnvironment> {
    config.tech.validate()?;
    let n = config.n;
    if n == 0 {
        return Err(Error::invalid("N", "crossbar needs at least one cell per side"));
    }
    if cells.len() != n * n {
        return Err(Error::invalid("cells", format!("expected {} resistances, got {}", n * n, cells.len())));
    }
    if let Some(k) = cells.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::invalid(format!("cells[{k}]"), "resistance must be positive and finite"));
    }
    if active.len() != n {
        return Err(Error::invalid("active_inputs", format!("expected {n} flags")));
    }

    // Unknown numbering interleaves the two nodes of each cell, row-major,
    // which keeps the half-bandwidth near 2n.
    let mut input_node = vec![0usize; n * n];
    let mut output_node = vec![Terminal::Fixed(0.0); n * n];
    let mut count = 0;
    for c in 0..n * n {
        input_node[c] = count;
        count += 1;
        if c >= n {
            output_node[c] = Terminal::Node(count);
            count += 1;
        }
    }

    let tech = &config.tech;
    let mut resistors = Vec::with_capacity(3 * n * n + n);
    for i in 0..n {
        let v = if active[i] { config.v_drive } else { 0.0 };
        resistors.push(Resistor {
            a: Terminal::Fixed(v),
            b: Terminal::Node(input_node[i * n]),
            g: 1.0 / tech.r_wl,
        });
    }
    let driver_count = n;
    for i in 0..n {
        for j in 0..n {
            let c = i * n + j;
            if j > 0 {
                resistors.push(Resistor {
                    a: Terminal::Node(input_node[c - 1]),
                    b: Terminal::Node(input_node[c]),
                    g: 1.0 / tech.r_bl,
                });
            }
            resistors.push(Resistor {
                a: Terminal::Node(input_node[c]),
                b: output_node[c],
                g: 1.0 / cells[c],
            });
            if i > 0 {
                resistors.push(Resistor {
                    a: output_node[c],
                    b: output_node[c - n],
                    g: 1.0 / tech.r_wl,
                });
            }
        }
    }

    let bw = resistors
        .iter()
        .filter_map(|r| match (r.a, r.b) {
            (Terminal::Node(p), Terminal::Node(q)) => Some(p.abs_diff(q)),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut matrix = BandMatrix::zeros(count, bw);
    let mut rhs = vec![0.0; count];
    for r in &resistors {
        match (r.a, r.b) {
            (Terminal::Node(p), Terminal::Node(q)) => {
                matrix.add(p, p, r.g);
                matrix.add(q, q, r.g);
                matrix.add(p, q, -r.g);
            }
            (Terminal::Node(p), Terminal::Fixed(v)) | (Terminal::Fixed(v), Terminal::Node(p)) => {
                matrix.add(p, p, r.g);
                rhs[p] += r.g * v;
            }
            (Terminal::Fixed(_), Terminal::Fixed(_)) => {}
        }
    }
    let chol = matrix
        .factor()
        .map_err(|p| Error::Singular(format!("non-positive pivot at unknown {p} of {count}")))?;

    let mut x = rhs.clone();
    chol.solve(&mut x);

    let injected_current: f64 = resistors[..driver_count]
        .iter()
        .map(|r| (r.drop(&x) * r.g).abs())
        .sum();
    let mut residual = kcl(&resistors, &x, count);
    let scale = injected_current.max(f64::MIN_POSITIVE);
    let mut rel = max_abs(&residual) / scale;
    for _ in 0..opts.max_refinements {
        if rel <= opts.residual_tol {
            break;
        }
        chol.solve(&mut residual);
        for (xi, d) in x.iter_mut().zip(&residual) {
            *xi += d;
        }
        residual = kcl(&resistors, &x, count);
        rel = max_abs(&residual) / scale;
    }

    let injected_power = resistors[..driver_count]
        .iter()
        .map(|r| volt(r.a, &x) * r.drop(&x) * r.g)
        .sum();
    let dissipated_power = resistors.iter().map(|r| r.drop(&x).powi(2) * r.g).sum();

    let cells_out = (0..n * n)
        .map(|c| {
            let (i, j) = (c / n, c % n);
            let v = x[input_node[c]] - volt(output_node[c], &x);
            CellSite {
                i,
                j,
                path_resistance: path_unchecked(i, j, tech),
                stress_voltage: v,
                current: v / cells[c],
            }
        })
        .collect();
    Ok(CellEnvironment {
        n,
        mode: CircuitMode::Nodal,
        cells: cells_out,
        kcl_residual: if injected_current > 0.0 { rel } else { max_abs(&residual) },
        injected_power,
        dissipated_power,
    })
}

/// Net current flowing into each unknown node.
fn kcl(resistors: &[Resistor], x: &[f64], count: usize) -> Vec<f64> {
    let mut net = vec![0.0; count];
    for r in resistors {
        let i = r.drop(x) * r.g;
        if let Terminal::Node(p) = r.a {
            net[p] -= i;
        }
        if let Terminal::Node(q) = r.b {
            net[q] += i;
        }
    }
    net
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Finds the uniform cell resistance and drive voltage for which an
/// all-wordlines-driven `n x n` array shows `v_max` at its best cell and
/// `v_min` at its worst.
///
/// The network is linear, so the max/min ratio depends on the cell
/// resistance alone; it is found by bisection on `ln R`, and the drive
/// voltage is then scaled to hit `v_max`.
pub fn calibrate_uniform(
    tech: &TechNodeParams,
    n: usize,
    v_max: f64,
    v_min: f64,
) -> Result<(f64, f64)> {
    if !(v_min > 0.0 && v_max > v_min) {
        return Err(Error::invalid("targets", "need 0 < v_min < v_max"));
    }
    let target = v_max / v_min;
    let extremes = |r: f64| -> Result<(f64, f64)> {
        let config = CrossbarConfig {
            n,
            tech: tech.clone(),
            r_cell_by_level: vec![r],
            v_drive: 1.0,
        };
        let env = solve_nodal(&config, &vec![r; n * n], &vec![true; n], &NodalOptions::default())?;
        let s = super::voltage_map_stats(&env);
        Ok((s.v_max, s.v_min))
    };
    let ratio = |r: f64| extremes(r).map(|(hi, lo)| hi / lo);
    let (mut lo, mut hi) = (1.0f64.ln(), 1e9f64.ln());
    if !(ratio(lo.exp())? > target && ratio(hi.exp())? < target) {
        return Err(Error::Infeasible(format!(
            "voltage ratio {target} not bracketed for a {n}x{n} array"
        )));
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = (0.5 * (lo + hi)).exp();
    let (unit_max, _) = extremes(r)?;
    Ok((r, v_max / unit_max))
}
