//! Globally adaptive Gauss–Kronrod (7, 15) quadrature for vector-valued
//! integrands on an interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::QuadratureError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub intervals: usize,
}

struct Piece<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    key: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, o: &Self) -> Ordering {
        // Largest error first; ties broken by position for determinism.
        self.key
            .total_cmp(&o.key)
            .then_with(|| o.a.total_cmp(&self.a))
    }
}

fn rule<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> ([f64; N], [f64; N]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(c);
    for i in 0..N {
        k[i] = WGK[7] * fc[i];
        g[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for i in 0..N {
        k[i] *= h;
        err[i] = (k[i] - g[i] * h).abs();
    }
    (k, err)
}

fn piece<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> Piece<N> {
    let (value, error) = rule(f, a, b);
    let key = error.iter().fold(0.0f64, |m, &e| m.max(e));
    Piece { a, b, value, error, key }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the
/// partition given by `breaks`, until every component meets
/// `max(abs_tol, rel_tol·|value|)`.
pub(crate) fn integrate<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: &F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Outcome<N>, QuadratureError> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(piece(f, w[0], w[1]));
        }
    }
    let mut count = heap.len();
    let (mut value, mut error) = totals(&heap);
    loop {
        let done = |v: &[f64; N], e: &[f64; N]| {
            (0..N).all(|i| e[i] <= abs_tol.max(rel_tol * v[i].abs()))
        };
        if done(&value, &error) {
            // Re-sum in a fixed order so the result does not depend on the
            // refinement history.
            let (v, e) = totals(&heap);
            if done(&v, &e) {
                return Ok(Outcome { value: v, error: e, intervals: count });
            }
            (value, error) = (v, e);
            continue;
        }
        if count >= max_intervals {
            return Err(QuadratureError::BudgetExceeded { limit: max_intervals });
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        for i in 0..N {
            value[i] -= worst.value[i];
            error[i] -= worst.error[i];
        }
        let children = if mid > worst.a && mid < worst.b {
            count += 1;
            vec![piece(f, worst.a, mid), piece(f, mid, worst.b)]
        } else {
            // Interval cannot be split further; accept its estimate.
            vec![Piece { key: 0.0, error: [0.0; N], ..worst }]
        };
        for c in children {
            for i in 0..N {
                value[i] += c.value[i];
                error[i] += c.error[i];
            }
            heap.push(c);
        }
    }
}

fn totals<const N: usize>(heap: &BinaryHeap<Piece<N>>) -> ([f64; N], [f64; N]) {
    let mut pieces: Vec<&Piece<N>> = heap.iter().collect();
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for p in pieces {
        for i in 0..N {
            value[i] += p.value[i];
            error[i] += p.error[i];
        }
    }
    (value, error)
}

/// Breakpoints of `[a, b]` refined geometrically toward the requested ends:
/// `a + (b-a)2^{-k}` and `b - (b-a)2^{-k}` for `k = 1..=levels`.
pub(crate) fn graded(a: f64, b: f64, levels: usize, toward_a: bool, toward_b: bool) -> Vec<f64> {
    let mut pts = vec![a, b];
    let w = b - a;
    for k in 1..=levels {
        let d = w * 0.5f64.powi(k as i32);
        if toward_a {
            pts.push(a + d);
        }
        if toward_b {
            pts.push(b - d);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_smooth_functions() {
        let r = integrate(&|x: f64| [x.powi(5), x.exp()], &[0.0, 2.0], 1e-14, 1e-14, 100).unwrap();
        assert!((r.value[0] - 64.0 / 6.0).abs() < 1e-12);
        assert!((r.value[1] - (2f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn kinked_and_peaked() {
        let r = integrate(&|x: f64| [(x - 0.3).abs()], &[0.0, 1.0], 1e-13, 1e-13, 1000).unwrap();
        assert!((r.value[0] - (0.09 + 0.49) / 2.0).abs() < 1e-12);
        let theta = 1e4;
        let br = graded(0.0, 1.0, 20, false, true);
        let r = integrate(&|x: f64| [(theta * (x - 1.0)).exp()], &br, 0.0, 1e-12, 10_000).unwrap();
        assert!((r.value[0] - 1.0 / theta).abs() < 1e-12 / theta);
    }

    #[test]
    fn budget() {
        let step = |x: f64| [if x < 1.0 / 3.0 { 0.0 } else { 1.0 }];
        assert!(matches!(
            integrate(&step, &[0.0, 1.0], 1e-15, 0.0, 20),
            Err(QuadratureError::BudgetExceeded { .. })
        ));
    }
}
