//! Adaptive Gauss-Kronrod (7/15) quadrature with user breakpoints.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Add;

use crate::error::{Error, Result};

/// Positive Kronrod nodes; odd indices are the 7-point Gauss nodes.
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

/// Gauss weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Hard cap on live subintervals.
const MAX_INTERVALS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    /// Maximum number of bisections of any initial subinterval.
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_depth: 40,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, max_depth: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::InvalidInput(format!("abs_tol must be positive, got {abs_tol}")));
        }
        Ok(Self { abs_tol, max_depth })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Add for Integral {
    type Output = Integral;

    fn add(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };

    pub fn scale(self, k: f64) -> Integral {
        Integral {
            value: k * self.value,
            error: k.abs() * self.error,
            evaluations: self.evaluations,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Error that roundoff alone can explain; not worth refining.
    floor: f64,
    depth: usize,
}

impl Segment {
    fn excess(&self) -> f64 {
        if self.error <= self.floor {
            0.0
        } else {
            self.error
        }
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.excess() == other.excess()
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.excess().total_cmp(&other.excess())
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: usize) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = kronrod.abs();
    for i in 0..7 {
        let dx = half * XGK[i];
        let (f1, f2) = (f(center - dx), f(center + dx));
        kronrod += WGK[i] * (f1 + f2);
        resabs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        floor: 50.0 * f64::EPSILON * resabs * half.abs(),
        depth,
    }
}

/// `int_a^b f` with the interval first split at every breakpoint inside
/// `(a, b)`, then refined by global bisection of the worst segment.
///
/// Converges when the summed error estimate, ignoring segments already at
/// roundoff level, is within `abs_tol`. Segments at `max_depth` are frozen;
/// if the remaining error is still too large the best estimate is returned
/// inside the error.
pub fn integrate<F>(f: F, a: f64, b: f64, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("integration limits [{a}, {b}] must be finite")));
    }
    if a == b {
        return Ok(Integral::ZERO);
    }
    if a > b {
        return integrate(f, b, a, breakpoints, spec).map(|r| r.scale(-1.0));
    }
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&t| t > a && t < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut evaluations = 0;
    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    // Excess of the live (refinable) segments, kept as a running sum.
    let mut live = 0.0;
    let mut stuck = 0.0;
    for w in cuts.windows(2) {
        let s = gk15(&f, w[0], w[1], 0);
        live += s.excess();
        heap.push(s);
        evaluations += 15;
    }
    while let Some(worst) = heap.pop() {
        if live.max(0.0) + stuck <= spec.abs_tol || worst.excess() == 0.0 {
            heap.push(worst);
            break;
        }
        live -= worst.excess();
        if worst.depth >= spec.max_depth || heap.len() + frozen.len() >= MAX_INTERVALS {
            stuck += worst.excess();
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (l, r) = (gk15(&f, worst.a, mid, worst.depth + 1), gk15(&f, mid, worst.b, worst.depth + 1));
        live += l.excess() + r.excess();
        heap.push(l);
        heap.push(r);
        evaluations += 30;
    }
    let all = || heap.iter().chain(frozen.iter());
    let value: f64 = all().map(|s| s.value).sum();
    let error: f64 = all().map(|s| s.error).sum();
    let excess: f64 = all().map(Segment::excess).sum();
    if !value.is_finite() || excess > spec.abs_tol {
        return Err(Error::Quadrature {
            estimate: value,
            error_bound: error,
        });
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

/// `int_a^inf f` through `s = a + t / (1 - t)`, `t` in `[0, 1)`.
pub fn integrate_to_infinity<F>(f: F, a: f64, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    let to_t = |s: f64| (s - a) / (1.0 + s - a);
    let bps: Vec<f64> = breakpoints.iter().filter(|&&s| s > a && s.is_finite()).map(|&s| to_t(s)).collect();
    integrate(
        |t| {
            let u = 1.0 - t;
            let v = f(a + t / u) / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        &bps,
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_with_breakpoints_are_exact() {
        let f = |t: f64| if t < 0.5 { 4.0 * t - 1.0 } else { 2.0 - 2.0 * t };
        let r = integrate(f, 0.25, 1.0, &[0.5], &QuadratureSpec::default()).unwrap();
        // (1/8) + (1/4)
        assert!((r.value - 0.375).abs() < 1e-15);
        assert_eq!(r.evaluations, 30);
    }

    #[test]
    fn smooth_and_reversed() {
        let spec = QuadratureSpec::default();
        let r = integrate(|t: f64| (-t).exp(), 1.0, 2.0, &[], &spec).unwrap();
        let exact = (-1.0_f64).exp() - (-2.0_f64).exp();
        assert!((r.value - exact).abs() < 1e-14);
        let r = integrate(|t: f64| (-t).exp(), 2.0, 1.0, &[], &spec).unwrap();
        assert!((r.value + exact).abs() < 1e-14);
        assert_eq!(integrate(|t: f64| t, 3.0, 3.0, &[], &spec).unwrap().value, 0.0);
    }

    #[test]
    fn discontinuity_without_breakpoint_still_converges() {
        let r = integrate(|t: f64| if t > 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, &[], &QuadratureSpec::default()).unwrap();
        assert!((r.value - 0.7).abs() < 1e-11);
    }

    #[test]
    fn singular_integrand_reports_failure() {
        let spec = QuadratureSpec::new(1e-12, 6).unwrap();
        match integrate(|t: f64| 1.0 / t.sqrt(), 0.0, 1.0, &[], &spec) {
            Err(Error::Quadrature { estimate, error_bound }) => {
                assert!(estimate.is_finite() && error_bound > 1e-12);
            }
            other => panic!("expected quadrature failure, got {other:?}"),
        }
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_infinity(|t: f64| (-t).exp(), 0.0, &[], &QuadratureSpec::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_to_infinity(|t: f64| (-t * t).exp(), 0.0, &[], &QuadratureSpec::default()).unwrap();
        assert!((r.value - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
