//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! The oscillatory sensitivity integrands defeat naive bisection once the
//! integration window covers many oscillation periods, so callers seed the
//! segment queue with panel edges at the zeros of the relevant cosine before
//! any refinement happens. Refinement then always splits the segment with the
//! worst error estimate.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// 15-point Kronrod abscissae on [-1, 1] (symmetric; only x >= 0 stored).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Embedded 7-point Gauss weights (odd-index abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Converged integral estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Conservative absolute error bound.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss-Kronrod 15 application on [a, b]; returns (value, error, resabs).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv_lo = [0.0f64; 7];
    let mut fv_hi = [0.0f64; 7];
    let mut kronrod = WGK[7] * f_center;
    let mut gauss = 0.0;
    let mut resabs = kronrod.abs();

    for j in 0..7 {
        let dx = half * XGK[j];
        let f_lo = f(center - dx);
        let f_hi = f(center + dx);
        fv_lo[j] = f_lo;
        fv_hi[j] = f_hi;
        let sum = f_lo + f_hi;
        kronrod += WGK[j] * sum;
        resabs += WGK[j] * (f_lo.abs() + f_hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    gauss += WG[3] * f_center;

    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv_lo[j] - mean).abs() + (fv_hi[j] - mean).abs());
    }

    let raw_err = ((kronrod - gauss) * half).abs();
    resasc *= half.abs();
    resabs *= half.abs();

    // QUADPACK error rescaling
    let mut err = raw_err;
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }

    (kronrod * half, err, resabs)
}

/// Integrate `f` over [a, b] to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature> {
    integrate_with_floor(f, a, b, rel_tol, &[], 0.0)
}

/// Integrate `f` over [a, b], seeding segment edges from `breakpoints` (any
/// values outside (a, b) are ignored). Tolerance is relative to the integral
/// when it does not cancel, and to 1e-3 of the total absolute mass when it
/// does, so near-cancelling oscillatory integrals still converge.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    breakpoints: &[f64],
) -> Result<Quadrature> {
    integrate_with_floor(f, a, b, rel_tol, breakpoints, 0.0)
}

/// [`integrate_with_breakpoints`] with an absolute error floor: once the
/// error bound drops below `abs_floor` the estimate is accepted, so integrals
/// that are pure roundoff noise on the caller's scale stop refining.
pub fn integrate_with_floor<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    breakpoints: &[f64],
    abs_floor: f64,
) -> Result<Quadrature> {
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("bad integration range [{a:e}, {b:e}]")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }

    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|x| *x > a && *x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    const MAX_EVALS: usize = 20_000_000;

    let mut heap = BinaryHeap::with_capacity(edges.len() + 64);
    let mut evaluations = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut total_resabs = 0.0;
    for pair in edges.windows(2) {
        let (value, error, resabs) = gk15(&f, pair[0], pair[1]);
        evaluations += 15;
        total += value;
        total_err += error;
        total_resabs += resabs;
        heap.push(Segment { a: pair[0], b: pair[1], value, error, resabs });
    }

    let target =
        |total: f64, resabs: f64| (rel_tol * total.abs().max(1e-3 * resabs)).max(abs_floor);

    while total_err > target(total, total_resabs) {
        if !total.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                context: format!("non-finite integrand on [{a:e}, {b:e}]"),
                estimate: total,
                bound: total_err,
            });
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || evaluations >= MAX_EVALS {
            // interval exhausted to machine width or budget spent
            heap.push(worst);
            let (estimate, bound) = heap_totals(&heap);
            return Err(Error::QuadratureNonConvergence {
                context: format!("range [{a:e}, {b:e}]"),
                estimate,
                bound,
            });
        }
        let (lv, le, lr) = gk15(&f, worst.a, mid);
        let (rv, re, rr) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        total_resabs += lr + rr - worst.resabs;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le, resabs: lr });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re, resabs: rr });
    }

    // re-sum from the heap to shed accumulated cancellation in the running totals
    let (value, error) = heap_totals(&heap);
    Ok(Quadrature { value, error, evaluations })
}

fn heap_totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut value = 0.0;
    let mut error = 0.0;
    for seg in heap.iter() {
        value += seg.value;
        error += seg.error;
    }
    (value, error)
}

/// Zeros of cos(freq * s) inside (a, b), for seeding oscillatory panels.
pub fn cosine_zeros(freq: f64, a: f64, b: f64) -> Vec<f64> {
    if freq <= 0.0 || b <= a {
        return Vec::new();
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let pi = std::f64::consts::PI;
    // smallest k with (pi/2 + k pi)/freq > a
    let k0 = ((a * freq - half_pi) / pi).floor() as i64 + 1;
    let mut zeros = Vec::new();
    let mut k = k0.max(0);
    loop {
        let z = (half_pi + k as f64 * pi) / freq;
        if z >= b {
            break;
        }
        if z > a {
            zeros.push(z);
        }
        k += 1;
    }
    zeros
}
