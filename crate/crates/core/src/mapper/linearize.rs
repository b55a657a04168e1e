//! Binary-indicator view of a placement.
//!
//! A placement is `x[i][j] = 1` iff pre `i` sits on row `j` and
//! `y[k][l] = 1` iff post `k` sits on column `l`. The product
//! `z[i][j][k][l] = x[i][j] * y[k][l]` marks the cell used by synapse
//! `(i, k)`; a linear model replaces the product by
//! `z <= x`, `z <= y`, `z >= x + y - 1`.

use super::MappingSolution;

/// Whether `z` satisfies the linearization of `x * y`; with
/// `lower = false` the constraint `z >= x + y - 1` is dropped.
pub fn satisfies(x: bool, y: bool, z: bool, lower: bool) -> bool {
    let (x, y, z) = (i8::from(x), i8::from(y), i8::from(z));
    z <= x && z <= y && (!lower || z >= x + y - 1)
}

/// Outcome of [`exhaustive_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearizationCheck {
    /// `(x, y)` indicator combinations examined.
    pub combinations: usize,
    /// Every combination's product satisfies the constraints, and no other
    /// `z` does.
    pub exact: bool,
    /// Without the lower bound some `z != x * y` is admitted.
    pub negative_control_admits: bool,
}

/// Enumerates every assignment of row indicators `x` (`ports` of them) and
/// column indicators `y` (`ports` of them), checking each product variable
/// `z[j][l]` against the constraints.
pub fn exhaustive_check(ports: usize) -> LinearizationCheck {
    let mut exact = true;
    let mut admits = false;
    let side = 1usize << ports;
    for xs in 0..side {
        for ys in 0..side {
            for j in 0..ports {
                for l in 0..ports {
                    let x = xs >> j & 1 == 1;
                    let y = ys >> l & 1 == 1;
                    let product = x && y;
                    for z in [false, true] {
                        exact &= satisfies(x, y, z, true) == (z == product);
                        admits |= satisfies(x, y, z, false) && z != product;
                    }
                }
            }
        }
    }
    LinearizationCheck {
        combinations: side * side,
        exact,
        negative_control_admits: admits,
    }
}

/// Indicator matrices of a placement: `x` is rows x ports, `y` is
/// cols x ports.
pub fn indicators(sol: &MappingSolution, ports: usize) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    let one_hot = |p: usize| (0..ports).map(|q| q == p).collect::<Vec<_>>();
    (
        sol.rows.iter().map(|&p| one_hot(p)).collect(),
        sol.cols.iter().map(|&p| one_hot(p)).collect(),
    )
}

/// Checks the assignment constraints (each neuron on exactly one port, each
/// port used at most once) and that the products satisfy the linearization
/// for every `(i, j, k, l)`.
pub fn placement_consistent(x: &[Vec<bool>], y: &[Vec<bool>]) -> bool {
    let ports = x.first().or(y.first()).map_or(0, Vec::len);
    let one_each = |m: &[Vec<bool>]| m.iter().all(|r| r.iter().filter(|&&b| b).count() == 1);
    let port_once = |m: &[Vec<bool>]| (0..ports).all(|p| m.iter().filter(|r| r[p]).count() <= 1);
    if !(one_each(x) && one_each(y) && port_once(x) && port_once(y)) {
        return false;
    }
    x.iter().all(|xr| {
        y.iter().all(|yr| {
            xr.iter()
                .all(|&xv| yr.iter().all(|&yv| satisfies(xv, yv, xv && yv, true)))
        })
    })
}

#[cfg(test)]
mod tests {
    use super::super::SolverKind;
    use super::*;

    #[test]
    fn two_port_toy_is_exact() {
        let check = exhaustive_check(2);
        assert_eq!(check.combinations, 16);
        assert!(check.exact);
        assert!(check.negative_control_admits);
    }

    #[test]
    fn truth_table() {
        for (x, y) in [(false, false), (false, true), (true, false), (true, true)] {
            assert!(satisfies(x, y, x && y, true));
            assert!(!satisfies(x, y, !(x && y), true));
        }
        assert!(satisfies(true, true, false, false));
    }

    #[test]
    fn placement_indicators() {
        let sol = MappingSolution { rows: vec![2, 0], cols: vec![1], tau: 1.0, solver: SolverKind::Random };
        let (x, y) = indicators(&sol, 3);
        assert!(placement_consistent(&x, &y));
        let clash = vec![vec![true, false, false], vec![true, false, false]];
        assert!(!placement_consistent(&clash, &y));
    }
}
