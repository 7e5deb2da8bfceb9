//! Fractional relaxation: `min t` subject to `Σ_k b_kl c_l(X_k) ≤ t` and
//! stochastic rows, solved by a dense primal simplex with Bland's rule.
//!
//! Column layout: `b_kl` at `3k + l`, then `t`, then the three load slacks.
//! Row layout: the three load rows, then one row per object. The bounds
//! `b_kl ≤ 1` are implied by the row constraints and never enter the basis
//! logic.

use serde::{Deserialize, Serialize};

use super::{allocate_greedy, AllocationError, Assignment, Instance};
use crate::geometry::Cell;

/// Largest `n` accepted by [`solve_fractional`].
pub const DEFAULT_LP_CAP: usize = 2000;

const EPS: f64 = 1e-12;
const FRACTION_TOL: f64 = 1e-10;

/// Row-stochastic `n × 3` matrix with its objective `ρ̃_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalAssignment {
    pub rows: Vec<[f64; 3]>,
    pub objective: f64,
    pub loads: [f64; 3],
    pub iterations: usize,
}

impl FractionalAssignment {
    /// Objects with some entry strictly between 0 and 1.
    pub fn fractional_rows(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&b| b > FRACTION_TOL && b < 1.0 - FRACTION_TOL))
            .map(|(k, _)| k)
            .collect()
    }

    /// Largest pairwise difference of the three loads.
    pub fn load_gap(&self) -> f64 {
        let l = self.loads;
        l[0].max(l[1]).max(l[2]) - l[0].min(l[1]).min(l[2])
    }
}

struct Tableau {
    width: usize,
    /// `(rows + 1) × width`; the last row is the reduced-cost row, the last
    /// column the right-hand side.
    cells: Vec<f64>,
    rows: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.at(pr, pc);
        for v in &mut self.cells[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.cells[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.at(r, pc);
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.cells[r * w..(r + 1) * w];
            for (v, &q) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * q;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }
}

pub fn solve_fractional(instance: &Instance) -> Result<FractionalAssignment, AllocationError> {
    solve_fractional_with_cap(instance, DEFAULT_LP_CAP)
}

pub fn solve_fractional_with_cap(instance: &Instance, cap: usize) -> Result<FractionalAssignment, AllocationError> {
    let n = instance.len();
    if n > cap {
        return Err(AllocationError::TooLarge { n, cap });
    }
    let costs = instance.costs();
    let vars = 3 * n + 4;
    let t_col = 3 * n;
    let width = vars + 1;
    let rows = n + 3;
    let mut tab = Tableau {
        width,
        cells: vec![0.0; (rows + 1) * width],
        rows,
        basis: vec![usize::MAX; rows],
    };
    for l in 0..3 {
        for (k, c) in costs.iter().enumerate() {
            tab.cells[l * width + 3 * k + l] = c[l];
        }
        tab.cells[l * width + t_col] = -1.0;
        tab.cells[l * width + t_col + 1 + l] = 1.0;
    }
    for k in 0..n {
        let r = 3 + k;
        for l in 0..3 {
            tab.cells[r * width + 3 * k + l] = 1.0;
        }
        tab.cells[r * width + vars] = 1.0;
    }
    tab.cells[rows * width + t_col] = 1.0;

    // Greedy starting basis: each object in its Voronoi bin, t in the
    // heaviest load row, slacks elsewhere.
    let greedy = allocate_greedy(instance);
    let mut loads = [0.0; 3];
    for (k, b) in greedy.bins.iter().enumerate() {
        loads[b.index()] += costs[k][b.index()];
        tab.pivot(3 + k, 3 * k + b.index());
    }
    let heaviest = (0..3).fold(0, |m, l| if loads[l] > loads[m] { l } else { m });
    for l in 0..3 {
        if l != heaviest {
            tab.basis[l] = t_col + 1 + l;
        }
    }
    tab.pivot(heaviest, t_col);

    let max_iterations = 50 * (n + 3) + 1000;
    let mut iterations = 0;
    loop {
        let entering = (0..vars).find(|&c| tab.at(rows, c) < -EPS);
        let Some(pc) = entering else { break };
        if iterations >= max_iterations {
            return Err(AllocationError::SolverStall {
                iterations,
                basis: tab.basis.clone(),
            });
        }
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let a = tab.at(r, pc);
            if a > EPS {
                let ratio = tab.rhs(r) / a;
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - EPS || (ratio <= best + EPS && tab.basis[r] < tab.basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((pr, _)) = leave else {
            // The objective is bounded below by zero, so an unbounded ray
            // means the tableau has lost accuracy.
            return Err(AllocationError::SolverStall {
                iterations,
                basis: tab.basis.clone(),
            });
        };
        tab.pivot(pr, pc);
        iterations += 1;
    }

    let mut values = vec![0.0; vars];
    for (r, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.rhs(r);
    }
    let mut out_rows = Vec::with_capacity(n);
    let mut loads = [0.0; 3];
    for (k, c) in costs.iter().enumerate() {
        let mut row = [0.0; 3];
        for l in 0..3 {
            row[l] = values[3 * k + l].max(0.0);
        }
        let s: f64 = row.iter().sum();
        for v in &mut row {
            *v /= s;
        }
        for l in 0..3 {
            loads[l] += row[l] * c[l];
        }
        out_rows.push(row);
    }
    Ok(FractionalAssignment {
        rows: out_rows,
        objective: values[t_col],
        loads,
        iterations,
    })
}

/// Integer rows are kept; each fractional row goes to its cheapest bin.
pub fn round_fractional(instance: &Instance, frac: &FractionalAssignment) -> Assignment {
    let fractional = frac.fractional_rows();
    let bins = frac
        .rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let pick = if fractional.binary_search(&k).is_ok() {
                let c = instance.costs()[k];
                (0..3).fold(0, |m, l| if c[l] < c[m] { l } else { m })
            } else {
                (0..3).fold(0, |m, l| if row[l] > row[m] { l } else { m })
            };
            Cell::from_index(pick)
        })
        .collect();
    Assignment { bins }
}
