//! Exhaustive branch-and-bound for `ρ_n` on small instances.

use super::{allocate_greedy, loads_of, AllocationError, Assignment, Instance, LoadTriple};
use crate::geometry::Cell;

/// Largest `n` accepted by [`allocate_exact`] unless a cap is given.
pub const DEFAULT_EXACT_CAP: usize = 12;

const PRUNE_SLACK: f64 = 1e-12;

struct Search<'a> {
    costs: &'a [[f64; 3]],
    order: Vec<usize>,
    /// `Σ_{j ≥ i} min_l c_l` over the search order.
    tail_min: Vec<f64>,
    current: Vec<Cell>,
    best: Vec<Cell>,
    best_rho: f64,
}

impl Search<'_> {
    fn leaf(&mut self) {
        let rho = loads_of(self.costs, &self.current).rho;
        if rho < self.best_rho || (rho == self.best_rho && self.current < self.best) {
            self.best_rho = rho;
            self.best.clone_from(&self.current);
        }
    }

    fn descend(&mut self, depth: usize, loads: [f64; 3]) {
        if depth == self.order.len() {
            self.leaf();
            return;
        }
        let k = self.order[depth];
        for l in Cell::ALL {
            let mut next = loads;
            next[l.index()] += self.costs[k][l.index()];
            let partial_max = next[0].max(next[1]).max(next[2]);
            let spread_bound = (next[0] + next[1] + next[2] + self.tail_min[depth + 1]) / 3.0;
            if partial_max.max(spread_bound) > self.best_rho * (1.0 + PRUNE_SLACK) {
                continue;
            }
            self.current[k] = l;
            self.descend(depth + 1, next);
        }
    }
}

/// Global minimiser of `ρ_n(A)` over all `3^n` assignments.
///
/// Among optimal assignments the lexicographically smallest bins vector is
/// returned.
pub fn allocate_exact(instance: &Instance, cap: usize) -> Result<(Assignment, LoadTriple), AllocationError> {
    let n = instance.len();
    if n > cap {
        return Err(AllocationError::TooLarge { n, cap });
    }
    let costs = instance.costs();
    let spread = |c: &[f64; 3]| c[0].max(c[1]).max(c[2]) - c[0].min(c[1]).min(c[2]);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| spread(&costs[j]).total_cmp(&spread(&costs[i])).then(i.cmp(&j)));
    let mut tail_min = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let c = &costs[order[i]];
        tail_min[i] = tail_min[i + 1] + c[0].min(c[1]).min(c[2]);
    }
    let greedy = allocate_greedy(instance).bins;
    let best_rho = loads_of(costs, &greedy).rho;
    let mut search = Search {
        costs,
        order,
        tail_min,
        current: vec![Cell::One; n],
        best: greedy,
        best_rho,
    };
    search.descend(0, [0.0; 3]);
    let loads = loads_of(costs, &search.best);
    Ok((Assignment { bins: search.best }, loads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{constant_cost, radial_cost};
    use crate::geometry::Point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_force(inst: &Instance) -> f64 {
        let n = inst.len();
        let mut best = f64::INFINITY;
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let bins: Vec<Cell> = (0..n)
                .map(|_| {
                    let b = Cell::from_index(c % 3);
                    c /= 3;
                    b
                })
                .collect();
            best = best.min(loads_of(inst.costs(), &bins).rho);
        }
        best
    }

    #[test]
    fn single_object_goes_to_cheapest_bin() {
        let m = radial_cost(2.0).unwrap();
        let p = Point::new(0.2, -0.1);
        let inst = Instance::new(vec![p], m.clone()).unwrap();
        let (a, lt) = allocate_exact(&inst, DEFAULT_EXACT_CAP).unwrap();
        let c = m.costs(p);
        let best = (0..3).min_by(|&i, &j| c[i].total_cmp(&c[j])).unwrap();
        assert_eq!(a.bins[0].index(), best);
        assert_eq!(lt.rho, c[best]);
    }

    #[test]
    fn pigeonhole_with_constant_cost() {
        let c = constant_cost(1.0).unwrap();
        let inst = Instance::new(vec![Point::new(0.1, 0.05); 4], c).unwrap();
        let (a, lt) = allocate_exact(&inst, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(lt.rho, 2.0);
        // lexicographically smallest optimum
        assert_eq!(a.bins, vec![Cell::One, Cell::One, Cell::Two, Cell::Two]);
    }

    #[test]
    fn matches_brute_force() {
        let m = radial_cost(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 1..=8 {
            let inst = Instance::sample(&m, n, &mut rng).unwrap();
            let (_, lt) = allocate_exact(&inst, DEFAULT_EXACT_CAP).unwrap();
            assert_eq!(lt.rho, brute_force(&inst), "n = {n}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let m = radial_cost(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = Instance::sample(&m, 13, &mut rng).unwrap();
        assert_eq!(
            allocate_exact(&inst, DEFAULT_EXACT_CAP).unwrap_err(),
            AllocationError::TooLarge { n: 13, cap: 12 }
        );
    }
}
