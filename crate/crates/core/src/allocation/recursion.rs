//! The cone-sweep allocation `Â`.
//!
//! Starting from the Voronoi partition, the boundary ray shared by the
//! lightest region `m` and the heaviest region `M` is rotated until exactly
//! one object of `M` falls into `m`, and this is repeated until the region
//! loads differ by at most `2‖c‖∞`. If `M = σ(m)` the ray of component `m`
//! advances (region `m` grows); otherwise the ray of component `M` retreats
//! (region `M` shrinks).

use serde::{Deserialize, Serialize};

use super::{loads_of, AllocationError, Assignment, Instance, LoadTriple};
use crate::geometry::{Cell, ConeShift};

const MAX_NUDGES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionStep {
    pub lightest: Cell,
    pub heaviest: Cell,
    /// Shift after the step.
    pub shift: ConeShift,
    /// Index of the object that changed region.
    pub moved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionTrace {
    pub steps: Vec<RecursionStep>,
    pub final_shift: ConeShift,
    pub step_count: usize,
}

impl RecursionTrace {
    fn with(steps: &[RecursionStep], shift: ConeShift) -> Box<Self> {
        Box::new(RecursionTrace {
            steps: steps.to_vec(),
            final_shift: shift,
            step_count: steps.len(),
        })
    }
}

fn lowest_argmin(loads: &[f64; 3]) -> usize {
    (0..3).fold(0, |m, l| if loads[l] < loads[m] { l } else { m })
}

fn lowest_argmax(loads: &[f64; 3]) -> usize {
    (0..3).fold(0, |m, l| if loads[l] > loads[m] { l } else { m })
}

pub fn allocate_recursive(
    instance: &Instance,
) -> Result<(Assignment, LoadTriple, RecursionTrace), AllocationError> {
    let f = *instance.model().frame();
    let costs = instance.costs();
    let points = instance.points();
    let n = points.len();
    let bound = 2.0 * instance.model().sup_norm();

    let mut shift = super::shift_zero();
    let rays = f.boundary_rays(&shift);
    let mut region: Vec<Cell> = points.iter().map(|&p| f.cone_region_unchecked(&rays, p)).collect();
    let mut loads = loads_of(costs, &region).loads;
    let crossings: Vec<[Option<f64>; 3]> = points
        .iter()
        .map(|&p| Cell::ALL.map(|l| f.crossing_shift(l, p)))
        .collect();
    let mut steps: Vec<RecursionStep> = Vec::new();

    loop {
        let m = Cell::from_index(lowest_argmin(&loads));
        let big = Cell::from_index(lowest_argmax(&loads));
        if loads[big.index()] - loads[m.index()] <= bound {
            break;
        }
        if steps.len() >= n {
            return Err(AllocationError::NonTermination {
                steps: steps.len(),
                trace: RecursionTrace::with(&steps, shift),
            });
        }
        let (component, dir) = if big == m.next() { (m, 1.0) } else { (big, -1.0) };
        let t = shift.component(component);

        // Nearest crossing of the moving ray among the objects of `M`.
        let mut target: Option<f64> = None;
        for (k, c) in crossings.iter().enumerate() {
            if region[k] != big {
                continue;
            }
            let Some(s) = c[component.index()] else { continue };
            let ahead = if dir > 0.0 { s > t } else { s <= t };
            if ahead && target.is_none_or(|best| dir * (s - best) < 0.0) {
                target = Some(s);
            }
        }
        let Some(mut next_t) = target else {
            return Err(AllocationError::SweepExhausted {
                component,
                trace: RecursionTrace::with(&steps, shift),
            });
        };

        let mut step = f64::EPSILON * next_t.abs().max(1.0);
        let mut nudges = 0;
        let (moved, candidate) = loop {
            if next_t.abs() > f.side {
                return Err(AllocationError::SweepExhausted {
                    component,
                    trace: RecursionTrace::with(&steps, shift),
                });
            }
            let candidate = shift.with_component(component, next_t);
            let rays = f.boundary_rays(&candidate);
            let moved: Vec<(usize, Cell)> = (0..n)
                .filter(|&k| region[k] == big)
                .filter_map(|k| {
                    let r = f.cone_region_unchecked(&rays, points[k]);
                    (r != big).then_some((k, r))
                })
                .collect();
            if !moved.is_empty() || nudges == MAX_NUDGES {
                break (moved, candidate);
            }
            next_t += dir * step;
            step *= 2.0;
            nudges += 1;
        };
        match moved.as_slice() {
            [(k, r)] if *r == m => {
                let k = *k;
                region[k] = m;
                loads[big.index()] -= costs[k][big.index()];
                loads[m.index()] += costs[k][m.index()];
                shift = candidate;
                steps.push(RecursionStep { lightest: m, heaviest: big, shift, moved: k });
            }
            [] => {
                return Err(AllocationError::SweepExhausted {
                    component,
                    trace: RecursionTrace::with(&steps, shift),
                })
            }
            _ => {
                return Err(AllocationError::Degenerate {
                    moved: moved.len(),
                    trace: RecursionTrace::with(&steps, shift),
                })
            }
        }
    }

    let rays = f.boundary_rays(&shift);
    let bins: Vec<Cell> = points.iter().map(|&p| f.cone_region_unchecked(&rays, p)).collect();
    let loads = loads_of(costs, &bins);
    let trace = RecursionTrace { step_count: steps.len(), steps, final_shift: shift };
    Ok((Assignment { bins }, loads, trace))
}
