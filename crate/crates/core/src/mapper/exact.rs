//! Exhaustive placement search for small clusters.
//!
//! Row injections are enumerated in lexicographic order. With rows fixed
//! the column side is a bottleneck assignment problem, solved exactly by
//! thresholding and bipartite matching, so only `P(N, m)` row placements
//! need to be visited.

use super::{LifetimeInstance, MappingSolution, SolverKind};
use crate::error::{Error, Result};

/// Largest cluster side the exact solver accepts by default.
pub const DEFAULT_EXACT_CAP: usize = 6;

/// Upper bound on row placements the exact solver will enumerate.
pub const EXACT_ENUMERATION_LIMIT: u128 = 5_000_000;

fn permutations(n: usize, k: usize) -> u128 {
    (0..k).map(|i| (n - i) as u128).product()
}

/// Optimal placement; ties go to the lexicographically smallest
/// `(rows, cols)`.
pub fn solve_exact(inst: &LifetimeInstance, cap: usize) -> Result<MappingSolution> {
    let (m, n, ports) = (inst.num_rows(), inst.num_cols(), inst.ports());
    if m > cap || n > cap || permutations(ports, m) > EXACT_ENUMERATION_LIMIT {
        return Err(Error::ExactCapExceeded {
            rows: m,
            cols: n,
            ports,
            cap,
        });
    }
    let mut search = Search {
        inst,
        rows: Vec::with_capacity(m),
        used: vec![false; ports],
        best: None,
        colval: vec![vec![f64::INFINITY; ports]; n],
    };
    search.recurse();
    let (rows, cols, _) = search.best.expect("at least one placement exists");
    Ok(MappingSolution::scored(inst, rows, cols, SolverKind::Exact))
}

struct Search<'a> {
    inst: &'a LifetimeInstance,
    rows: Vec<usize>,
    used: Vec<bool>,
    best: Option<(Vec<usize>, Vec<usize>, f64)>,
    /// Scratch: bottleneck value of post `k` at port `l` given the rows.
    colval: Vec<Vec<f64>>,
}

impl Search<'_> {
    fn recurse(&mut self) {
        let inst = self.inst;
        if self.rows.len() == inst.num_rows() {
            self.visit();
            return;
        }
        for j in 0..inst.ports() {
            if self.used[j] {
                continue;
            }
            self.used[j] = true;
            self.rows.push(j);
            self.recurse();
            self.rows.pop();
            self.used[j] = false;
        }
    }

    fn visit(&mut self) {
        let inst = self.inst;
        let ports = inst.ports();
        for (k, vals) in self.colval.iter_mut().enumerate() {
            for (l, v) in vals.iter_mut().enumerate() {
                *v = inst
                    .synapses_of_post(k)
                    .iter()
                    .map(|&s| inst.lifetime(s, self.rows[inst.synapses[s].pre], l))
                    .fold(f64::INFINITY, f64::min);
            }
        }
        // No column placement can beat the worst post's best port.
        let bound = self
            .colval
            .iter()
            .map(|vals| vals.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min);
        if let Some((_, _, best)) = &self.best {
            if bound <= *best {
                return;
            }
        }
        let tau = bottleneck_value(&self.colval, ports);
        if matches!(&self.best, Some((_, _, best)) if tau <= *best) {
            return;
        }
        let cols = lex_smallest_matching(&self.colval, ports, tau);
        self.best = Some((self.rows.clone(), cols, tau));
    }
}

/// Largest `t` such that every item can take a distinct port whose value
/// is at least `t`; infinite when there are no items.
fn bottleneck_value(values: &[Vec<f64>], ports: usize) -> f64 {
    if values.is_empty() {
        return f64::INFINITY;
    }
    let mut candidates: Vec<f64> = values.iter().flatten().copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // The smallest candidate admits every edge, so it is always feasible.
    let (mut lo, mut hi) = (0usize, candidates.len());
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if matching(values, ports, candidates[mid], &[]).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    candidates[lo]
}

/// Optimal bottleneck assignment of items (rows of `values`) to distinct
/// ports: returns the achieved minimum and one maximizing assignment.
pub(crate) fn bottleneck_assignment(values: &[Vec<f64>], ports: usize) -> (f64, Vec<usize>) {
    let t = bottleneck_value(values, ports);
    if values.is_empty() {
        return (t, Vec::new());
    }
    let assignment = matching(values, ports, t, &[]).expect("threshold admits a matching");
    (t, assignment)
}

/// Perfect matching of posts into ports using edges with value >= `t`,
/// with the first `fixed.len()` posts pinned. Returns the port per post.
pub(crate) fn matching(colval: &[Vec<f64>], ports: usize, t: f64, fixed: &[usize]) -> Option<Vec<usize>> {
    let n = colval.len();
    let mut owner: Vec<Option<usize>> = vec![None; ports];
    let mut assigned = vec![usize::MAX; n];
    for (k, &l) in fixed.iter().enumerate() {
        owner[l] = Some(k);
        assigned[k] = l;
    }
    for k in fixed.len()..n {
        let mut seen = vec![false; ports];
        if !augment(k, colval, t, fixed.len(), &mut owner, &mut assigned, &mut seen) {
            return None;
        }
    }
    Some(assigned)
}

fn augment(
    k: usize,
    colval: &[Vec<f64>],
    t: f64,
    pinned: usize,
    owner: &mut [Option<usize>],
    assigned: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for l in 0..owner.len() {
        if seen[l] || colval[k][l] < t {
            continue;
        }
        seen[l] = true;
        let free = match owner[l] {
            None => true,
            Some(other) => other >= pinned && augment(other, colval, t, pinned, owner, assigned, seen),
        };
        if free {
            owner[l] = Some(k);
            assigned[k] = l;
            return true;
        }
    }
    false
}

fn lex_smallest_matching(colval: &[Vec<f64>], ports: usize, t: f64) -> Vec<usize> {
    let mut fixed = Vec::with_capacity(colval.len());
    for k in 0..colval.len() {
        let mut chosen = None;
        for l in 0..ports {
            if fixed.contains(&l) || colval[k][l] < t {
                continue;
            }
            fixed.push(l);
            let ok = matching(colval, ports, t, &fixed).is_some();
            fixed.pop();
            if ok {
                chosen = Some(l);
                break;
            }
        }
        let l = chosen.expect("threshold admits a matching");
        fixed.push(l);
    }
    fixed
}

#[cfg(test)]
mod tests {
    use super::super::testutil::random_instance;
    use super::*;

    /// Plain enumeration of every row and column injection.
    fn brute_force(inst: &LifetimeInstance) -> f64 {
        fn injections(len: usize, ports: usize) -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            let mut cur = Vec::new();
            fn go(len: usize, ports: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if cur.len() == len {
                    out.push(cur.clone());
                    return;
                }
                for p in 0..ports {
                    if !cur.contains(&p) {
                        cur.push(p);
                        go(len, ports, cur, out);
                        cur.pop();
                    }
                }
            }
            go(len, ports, &mut cur, &mut out);
            out
        }
        let rows = injections(inst.num_rows(), inst.ports());
        let cols = injections(inst.num_cols(), inst.ports());
        let mut best = f64::NEG_INFINITY;
        for r in &rows {
            for c in &cols {
                best = best.max(inst.evaluate(r, c));
            }
        }
        best
    }

    #[test]
    fn matches_brute_force_3x3() {
        for seed in 0..100 {
            let inst = random_instance(3, 3, 3, seed);
            assert_eq!(solve_exact(&inst, 6).unwrap().tau, brute_force(&inst), "seed {seed}");
        }
    }

    #[test]
    fn padding_into_larger_crossbar() {
        for seed in 0..20 {
            let inst = random_instance(2, 2, 4, 500 + seed);
            let sol = solve_exact(&inst, 6).unwrap();
            assert_eq!(sol.tau, brute_force(&inst));
            assert_eq!(sol.tau, inst.evaluate(&sol.rows, &sol.cols));
        }
    }

    #[test]
    fn single_cell() {
        let inst = random_instance(1, 1, 1, 3);
        let sol = solve_exact(&inst, 6).unwrap();
        assert_eq!(sol.tau, inst.lifetime(0, 0, 0));
    }

    #[test]
    fn cap_enforced() {
        let inst = random_instance(7, 7, 7, 1);
        let err = solve_exact(&inst, 6).unwrap_err();
        assert!(err.to_string().contains("exceeds exact-solver cap"));
        let wide = random_instance(4, 4, 128, 1);
        assert!(solve_exact(&wide, 6).is_err());
    }

    #[test]
    fn ties_take_lexicographic_minimum() {
        let table = super::super::TransitionTable::from_values(3, 1, vec![1.0; 9]).unwrap();
        let syn = vec![super::super::InstanceSynapse { id: 0, pre: 0, post: 0, level: 0, eta: 1.0 }];
        let inst = LifetimeInstance::new(vec![0], vec![1], syn, table, 1.0).unwrap();
        let sol = solve_exact(&inst, 6).unwrap();
        assert_eq!((sol.rows, sol.cols), (vec![0], vec![0]));
    }
}
