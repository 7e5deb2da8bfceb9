//! Integration over a Voronoi cell in polar coordinates centred at its bin.
//!
//! Seen from `B_l`, the kite `T_l` is the 60° wedge between the two edges
//! at `B_l`, cut off by the two perpendicular bisectors through the origin.
//! A ray at angle `ψ` from the edge towards `B_{σ(l)}` leaves the cell at
//! `R(ψ) = (side/2)/cos ψ` for `ψ ≤ π/6` and `(side/2)/cos(π/3 − ψ)`
//! beyond. Circles centred at `B_l` become straight lines `r = const`, so a
//! cap switching on such a circle is handled by a breakpoint in `r`.

use std::cell::{Cell as StdCell, RefCell};
use std::f64::consts::PI;

use super::gk::{graded, integrate, Outcome};
use super::QuadratureError;
use crate::geometry::{Cell, Point, TriangleFrame};

const MAX_INTERVALS: usize = 4000;

pub(crate) struct PolarOptions {
    /// Radius around the bin where the integrand has a kink.
    pub kink: Option<f64>,
    /// Number of geometric refinement levels toward the bin and toward the
    /// origin, used when the integrand is sharply peaked there.
    pub levels: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

pub(crate) fn integrate_cell<const N: usize, F: Fn(Point) -> [f64; N]>(
    frame: &TriangleFrame,
    l: Cell,
    f: &F,
    opts: &PolarOptions,
) -> Result<Outcome<N>, QuadratureError> {
    let bin = frame.vertex(l);
    let e = frame.vertex(l.next()) - bin;
    let e = e * (1.0 / e.norm());
    let half_side = 0.5 * frame.side;
    let failure: RefCell<Option<QuadratureError>> = RefCell::new(None);
    let inner_error = StdCell::new(0.0f64);
    let inner_count = StdCell::new(0usize);

    let ray = |psi: f64| -> [f64; N] {
        if failure.borrow().is_some() {
            return [0.0; N];
        }
        let u = e.rotate(psi);
        let reach = if psi <= PI / 6.0 {
            half_side / psi.cos()
        } else {
            half_side / (PI / 3.0 - psi).cos()
        };
        let mut breaks = graded(0.0, reach, opts.levels, true, true);
        if let Some(k) = opts.kink {
            if k > 0.0 && k < reach {
                breaks.push(k);
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
            }
        }
        let radial = |r: f64| {
            let v = f(bin + u * r);
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = v[i] * r;
            }
            out
        };
        match integrate(&radial, &breaks, opts.abs_tol, opts.rel_tol, MAX_INTERVALS) {
            Ok(o) => {
                let err = o.error.iter().fold(0.0f64, |m, &x| m.max(x));
                inner_error.set(inner_error.get().max(err));
                inner_count.set(inner_count.get() + o.intervals);
                o.value
            }
            Err(err) => {
                *failure.borrow_mut() = Some(err);
                [0.0; N]
            }
        }
    };

    let mut breaks = graded(0.0, PI / 6.0, opts.levels, false, true);
    breaks.extend(graded(PI / 6.0, PI / 3.0, opts.levels, true, false));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut out = integrate(&ray, &breaks, opts.abs_tol, opts.rel_tol, MAX_INTERVALS)?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let spill = inner_error.get() * PI / 3.0;
    for e in out.error.iter_mut() {
        *e += spill;
    }
    out.intervals += inner_count.get();
    Ok(out)
}
