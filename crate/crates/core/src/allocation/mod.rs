//! Allocators: greedy nearest bin, exact branch-and-bound, fractional LP
//! relaxation with rounding, and the cone-sweep recursion.

mod exact;
mod lp;
mod marked;
mod recursion;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostError, CostModel, ModelSpec};
use crate::geometry::{Cell, ConeShift, GeometryError, Point};

pub use exact::{allocate_exact, DEFAULT_EXACT_CAP};
pub use lp::{round_fractional, solve_fractional, solve_fractional_with_cap, FractionalAssignment, DEFAULT_LP_CAP};
pub use marked::{marked_greedy, marked_greedy_lowest_tie, MarkedSinr};
pub use recursion::{allocate_recursive, RecursionStep, RecursionTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("assignment has {got} entries, instance has {expected} objects")]
    LengthMismatch { expected: usize, got: usize },
    #[error("instance has {n} objects, solver cap is {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("simplex stalled after {iterations} iterations; basis {basis:?}")]
    SolverStall { iterations: usize, basis: Vec<usize> },
    #[error("cone sweep did not terminate within {steps} steps")]
    NonTermination { steps: usize, trace: Box<RecursionTrace> },
    #[error("no sample point can cross boundary {component} within the admissible shift range")]
    SweepExhausted { component: Cell, trace: Box<RecursionTrace> },
    #[error("boundary move transferred {moved} points at once")]
    Degenerate { moved: usize, trace: Box<RecursionTrace> },
    #[error("object {object} has equal costs for bins {first} and {second}")]
    TieDetected { object: usize, first: Cell, second: Cell },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// `n` objects in the triangle together with the cost model and, if known,
/// the seed that generated them.
#[derive(Debug, Clone)]
pub struct Instance {
    points: Vec<Point>,
    costs: Vec<[f64; 3]>,
    model: CostModel,
    seed: Option<u64>,
}

impl Instance {
    pub fn new(points: Vec<Point>, model: CostModel) -> Result<Self, AllocationError> {
        if points.is_empty() {
            return Err(AllocationError::InvalidInstance("no objects".into()));
        }
        let f = model.frame();
        if let Some(p) = points.iter().find(|p| !f.contains_strictly(**p)) {
            return Err(GeometryError::OutsideTriangle { x: p.x, y: p.y }.into());
        }
        let costs = points.iter().map(|&p| model.costs(p)).collect();
        Ok(Instance { points, costs, model, seed: None })
    }

    /// `n` uniform points drawn from `rng`.
    pub fn sample<R: Rng + ?Sized>(model: &CostModel, n: usize, rng: &mut R) -> Result<Self, AllocationError> {
        let f = *model.frame();
        let points = (0..n)
            .map(|_| loop {
                let p = f.sample_uniform(rng);
                if f.contains_strictly(p) {
                    break p;
                }
            })
            .collect();
        Instance::new(points, model.clone())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// `c_l(X_k)` for every object.
    pub fn costs(&self) -> &[[f64; 3]] {
        &self.costs
    }

    pub fn cost(&self, k: usize, l: Cell) -> f64 {
        self.costs[k][l.index()]
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn to_file(&self) -> Option<InstanceFile> {
        Some(InstanceFile {
            seed: self.seed,
            n: self.len(),
            model: *self.model.spec()?,
            points: self.points.clone(),
        })
    }
}

/// On-disk form of an instance: `{seed, n, model, points: [[x, y], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub seed: Option<u64>,
    pub n: usize,
    pub model: ModelSpec,
    pub points: Vec<Point>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, AllocationError> {
        if self.n != self.points.len() {
            return Err(AllocationError::LengthMismatch {
                expected: self.n,
                got: self.points.len(),
            });
        }
        if let Some(p) = self.points.iter().find(|p| !p.is_finite()) {
            return Err(GeometryError::OutsideTriangle { x: p.x, y: p.y }.into());
        }
        let inst = Instance::new(self.points, self.model.build()?)?;
        Ok(match self.seed {
            Some(s) => inst.with_seed(s),
            None => inst,
        })
    }
}

/// Parses an instance from JSON text.
pub fn parse_instance(text: &str) -> Result<Instance, AllocationError> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| AllocationError::InvalidInstance(e.to_string()))?;
    file.into_instance()
}

/// One bin per object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub bins: Vec<Cell>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// The three bin loads and their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadTriple {
    pub loads: [f64; 3],
    pub rho: f64,
}

impl LoadTriple {
    pub fn new(loads: [f64; 3]) -> Self {
        LoadTriple { loads, rho: loads[0].max(loads[1]).max(loads[2]) }
    }

    pub fn load(&self, l: Cell) -> f64 {
        self.loads[l.index()]
    }

    /// `max − min` of the three loads.
    pub fn spread(&self) -> f64 {
        let min = self.loads[0].min(self.loads[1]).min(self.loads[2]);
        self.rho - min
    }
}

/// Bin loads of an assignment.
pub fn load(instance: &Instance, assignment: &Assignment) -> Result<LoadTriple, AllocationError> {
    if assignment.len() != instance.len() {
        return Err(AllocationError::LengthMismatch {
            expected: instance.len(),
            got: assignment.len(),
        });
    }
    Ok(loads_of(instance.costs(), &assignment.bins))
}

pub(crate) fn loads_of(costs: &[[f64; 3]], bins: &[Cell]) -> LoadTriple {
    let mut loads = [0.0; 3];
    for (c, b) in costs.iter().zip(bins) {
        loads[b.index()] += c[b.index()];
    }
    LoadTriple::new(loads)
}

/// Each object to the bin of its Voronoi cell.
pub fn allocate_greedy(instance: &Instance) -> Assignment {
    let f = instance.model().frame();
    Assignment {
        bins: instance.points().iter().map(|&p| f.voronoi_cell_unchecked(p)).collect(),
    }
}

/// `w_l = n^{-1/2}(Σ_{X_k ∈ T_l} c_l(X_k) − nγ)`.
pub fn bridge_statistic(instance: &Instance, gamma: f64) -> [f64; 3] {
    let greedy = allocate_greedy(instance);
    bridge_from_loads(&loads_of(instance.costs(), &greedy.bins), instance.len(), gamma)
}

pub(crate) fn bridge_from_loads(loads: &LoadTriple, n: usize, gamma: f64) -> [f64; 3] {
    let nf = n as f64;
    loads.loads.map(|l| (l - nf * gamma) / nf.sqrt())
}

/// Convenience: greedy loads of an instance.
pub fn greedy_loads(instance: &Instance) -> LoadTriple {
    loads_of(instance.costs(), &allocate_greedy(instance).bins)
}

pub(crate) fn shift_zero() -> ConeShift {
    ConeShift::ZERO
}
