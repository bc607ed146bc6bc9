//! The partition-preserving integral transform.
//!
//! In one dimension, with `S = [-1, -c) u (c, 1]`,
//! `Kf(x) = int_{-|x|/c}^{-|x|} f + int_{|x|}^{|x|/c} f`, and dilation sums of
//! `Kf` by `c` reproduce `int f`. On `R^d` the kernel form is
//! `K_g f(x) = int f(t) g(x / ||t||) dt`, implemented for radial `f`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{from_radii, Limits, Potential, ScalarField, Support};
use crate::matrix::{Norm, SquareMatrix};
use crate::pou::{PartitionSystem, TruncationPolicy};
use crate::quadrature::{integrate, integrate_to_infinity, Integral, QuadratureSpec};

/// A real function of one variable with the points where it may be
/// non-smooth and the range of `|t|` outside which it vanishes.
pub trait Integrand: Send + Sync {
    fn value(&self, t: f64) -> f64;

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `(inner, outer)`: `f(t) = 0` unless `inner <= |t| <= outer`.
    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
}

/// A closure with optional breakpoints and support.
pub struct Func<F> {
    f: F,
    breakpoints: Vec<f64>,
    support: (f64, f64),
}

impl<F> Func<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            breakpoints: Vec::new(),
            support: (0.0, f64::INFINITY),
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn with_support(mut self, inner: f64, outer: f64) -> Self {
        self.support = (inner, outer);
        self
    }
}

impl<F> Integrand for Func<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }
}

/// Kernel and quadrature settings for [`transform_dd`].
#[derive(Clone, Debug)]
pub struct TransformSpec {
    pub kernel: ScalarField,
    pub norm: Norm,
    /// Dilation factor when the kernel comes from the one-dimensional
    /// specialisation.
    pub c: Option<f64>,
    pub quadrature: QuadratureSpec,
}

impl TransformSpec {
    pub fn new(kernel: ScalarField, norm: Norm) -> Self {
        Self {
            kernel,
            norm,
            c: None,
            quadrature: QuadratureSpec::default(),
        }
    }
}

pub(crate) fn check_c(c: f64) -> Result<()> {
    if !(c > 1e-9 && c < 1.0 - 1e-9) {
        return Err(Error::InvalidInput(format!("c must lie in (0, 1) away from the ends, got {c}")));
    }
    Ok(())
}

/// `int f` over `{lo <= |t| <= hi}` clipped to the support of `f`, both signs.
fn integrate_shell(f: &dyn Integrand, lo: f64, hi: f64, quad: &QuadratureSpec) -> Result<Integral> {
    let (s_lo, s_hi) = f.support();
    let (a, b) = (lo.max(s_lo), hi.min(s_hi));
    if !(a < b) {
        return Ok(Integral::ZERO);
    }
    let bps = f.breakpoints();
    let side = |sign: f64| -> Result<Integral> {
        let g = |t: f64| f.value(sign * t);
        let bp: Vec<f64> = bps.iter().map(|t| sign * t).collect();
        if b.is_finite() {
            integrate(g, a, b, &bp, quad)
        } else {
            integrate_to_infinity(g, a, &bp, quad)
        }
    };
    Ok(side(1.0)? + side(-1.0)?)
}

/// `Kf(gamma)`, zero at `gamma = 0`.
pub fn transform_1d(f: &dyn Integrand, c: f64, gamma: f64, quad: &QuadratureSpec) -> Result<Integral> {
    check_c(c)?;
    let x = gamma.abs();
    if x == 0.0 {
        return Ok(Integral::ZERO);
    }
    integrate_shell(f, x, x / c, quad)
}

/// `2 int_gamma^{gamma/c} f` for even `f` and `gamma >= 0`.
pub fn transform_even(f: &dyn Integrand, c: f64, gamma: f64, quad: &QuadratureSpec) -> Result<Integral> {
    check_c(c)?;
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("transform_even needs gamma >= 0, got {gamma}")));
    }
    let (s_lo, s_hi) = f.support();
    let (a, b) = (gamma.max(s_lo), (gamma / c).min(s_hi));
    if gamma == 0.0 || !(a < b) {
        return Ok(Integral::ZERO);
    }
    integrate(|t| f.value(t), a, b, &f.breakpoints(), quad).map(|r| r.scale(2.0))
}

/// `int f` over the line.
pub fn integral_of(f: &dyn Integrand, quad: &QuadratureSpec) -> Result<Integral> {
    integrate_shell(f, 0.0, f64::INFINITY, quad)
}

/// Surface measure of the unit sphere of `norm` in `R^d`, `d * vol(B)`.
pub fn sphere_measure(dim: usize, norm: Norm) -> f64 {
    let d = dim as f64;
    match norm {
        Norm::Euclidean => 2.0 * PI.powf(0.5 * d) / gamma_half(dim),
        Norm::Max => d * 2f64.powi(dim as i32),
    }
}

/// `Gamma(d / 2)` for a positive integer `d`.
fn gamma_half(dim: usize) -> f64 {
    if dim.is_multiple_of(2) {
        (1..dim / 2).map(|k| k as f64).product()
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x).
        (0..(dim - 1) / 2).fold(PI.sqrt(), |g, k| g * (k as f64 + 0.5))
    }
}

/// Spot-check that `f` depends on `||x||` only.
fn check_radial(f: &ScalarField, norm: Norm) -> Result<()> {
    let d = f.dim();
    if d == 1 {
        return Ok(());
    }
    let dirs = crate::grid::directions(d, 7, norm);
    let (lo, hi) = f.support().radii();
    let span = if hi.is_finite() { hi } else { lo.max(1.0) * 4.0 };
    for i in 1..=9 {
        let r = lo + (span - lo) * i as f64 / 10.0;
        let vals: Vec<f64> = dirs
            .iter()
            .map(|u| f.eval_re(&u.iter().map(|v| v * r).collect::<Vec<_>>()))
            .collect();
        let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        if vals.iter().any(|v| (v - vals[0]).abs() > 1e-9 * scale) {
            return Err(Error::InvalidInput(
                "transform_dd handles radial f only; f varies on the sphere".into(),
            ));
        }
    }
    Ok(())
}

/// `F(s)` with `int f = kappa int F(s) s^(d-1) ds`; in one dimension
/// `F(s) = f(s) + f(-s)` and `kappa = 1`.
fn radial_profile(f: &ScalarField, norm: Norm) -> (impl Fn(f64) -> f64 + '_, f64) {
    let d = f.dim();
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    let e = norm.normalize(&e);
    let kappa = if d == 1 { 1.0 } else { sphere_measure(d, norm) };
    let profile = move |s: f64| {
        if d == 1 {
            f.eval_re(&[s]) + f.eval_re(&[-s])
        } else {
            f.eval_re(&e.iter().map(|v| v * s).collect::<Vec<_>>())
        }
    };
    (profile, kappa)
}

fn check_dims(f: &ScalarField, dim: usize, gamma: &[f64]) -> Result<()> {
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: f.dim(),
        });
    }
    if gamma.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: gamma.len(),
        });
    }
    Ok(())
}

fn check_integrable(f: &ScalarField, kernel: &ScalarField) -> Result<()> {
    if kernel.bound().is_none() && !f.support().is_bounded() {
        return Err(Error::Refused(
            "the kernel has no declared bound and f has no compact support".into(),
        ));
    }
    Ok(())
}

/// `K_g f(gamma) = int f(t) g(gamma / ||t||) dt` for radial `f`, reduced to
/// `kappa int F(s) s^(d-1) g(gamma / s) ds` and integrated over the range of
/// `s` allowed by both supports.
pub fn transform_dd(f: &ScalarField, spec: &TransformSpec, gamma: &[f64]) -> Result<Integral> {
    let g = &spec.kernel;
    check_dims(f, g.dim(), gamma)?;
    check_integrable(f, g)?;
    check_radial(f, spec.norm)?;
    transform_dd_unchecked(f, spec, gamma)
}

fn transform_dd_unchecked(f: &ScalarField, spec: &TransformSpec, gamma: &[f64]) -> Result<Integral> {
    let g = &spec.kernel;
    let d = g.dim();
    let r = spec.norm.of(gamma);
    let (f_lo, f_hi) = f.support().radii();
    let (g_lo, g_hi) = g.support().radii();
    let s_lo = f_lo.max(if g_hi.is_finite() { r / g_hi } else { 0.0 });
    let s_hi = f_hi.min(if g_lo > 0.0 { r / g_lo } else { f64::INFINITY });
    if !(s_lo < s_hi) {
        return Ok(Integral::ZERO);
    }
    let (profile, kappa) = radial_profile(f, spec.norm);
    let integrand = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let x: Vec<f64> = gamma.iter().map(|v| v / s).collect();
        let v = profile(s) * g.eval_re(&x);
        if v == 0.0 {
            0.0
        } else {
            v * s.powi(d as i32 - 1)
        }
    };
    let mut bps: Vec<f64> = f.radial_knots().to_vec();
    if r > 0.0 {
        bps.extend(g.radial_knots().iter().filter(|k| **k > 0.0).map(|k| r / k));
        bps.extend([g_lo, g_hi].iter().filter(|k| **k > 0.0 && k.is_finite()).map(|k| r / k));
    }
    let res = if s_hi.is_finite() {
        integrate(integrand, s_lo, s_hi, &bps, &spec.quadrature)?
    } else {
        integrate_to_infinity(integrand, s_lo, &bps, &spec.quadrature)?
    };
    Ok(res.scale(kappa))
}

/// `K_g f` as a field. Values where quadrature fails are NaN. With supports
/// `a(R1, R2)` for `f` and `a(R3, R4)` for `g` the result lives on
/// `a(R1 R3, R2 R4)`.
pub fn transform_dd_field(f: &ScalarField, spec: &TransformSpec) -> Result<ScalarField> {
    let g = &spec.kernel;
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: f.dim(),
        });
    }
    check_integrable(f, g)?;
    check_radial(f, spec.norm)?;
    let (r1, r2) = f.support().radii();
    let (r3, r4) = g.support().radii();
    let lo = if r1 == 0.0 || r3 == 0.0 { 0.0 } else { r1 * r3 };
    let hi = if r2.is_finite() && r4.is_finite() { r2 * r4 } else { f64::INFINITY };
    let (fc, sc) = (f.clone(), spec.clone());
    let out = ScalarField::real(g.dim(), move |x| {
        transform_dd_unchecked(&fc, &sc, x).map_or(f64::NAN, |r| r.value)
    });
    Ok(out.assume_support(from_radii(lo, hi), spec.norm))
}

/// `int f(t) k(gamma, ||t||) dt` for radial `f` with bounded support; a
/// generalised kernel with no partition guarantee attached.
pub fn transform_dd_callback(
    f: &ScalarField,
    kernel: &dyn Fn(&[f64], f64) -> f64,
    gamma: &[f64],
    norm: Norm,
    quad: &QuadratureSpec,
) -> Result<Integral> {
    check_dims(f, f.dim(), gamma)?;
    let (lo, hi) = f.support().radii();
    if !hi.is_finite() {
        return Err(Error::Refused("callback kernels need f with bounded support".into()));
    }
    check_radial(f, norm)?;
    let d = f.dim();
    let (profile, kappa) = radial_profile(f, norm);
    let res = integrate(
        |s| profile(s) * kernel(gamma, s) * s.powi(d as i32 - 1),
        lo,
        hi,
        f.radial_knots(),
        quad,
    )?;
    Ok(res.scale(kappa))
}

/// `x -> Kf(||x||)` on `R^dim`.
///
/// If `f` vanishes outside `a <= |t| <= b` the result vanishes outside
/// `c a <= ||x|| <= b`. Otherwise the field carries the potential
/// `phi(x) = -int_{|t| >= ||x||/c} f`, whose telescoping remainders certify
/// truncated dilation sums.
pub fn lift_radial(
    f: Arc<dyn Integrand>,
    c: f64,
    norm: Norm,
    dim: usize,
    quad: QuadratureSpec,
) -> Result<ScalarField> {
    check_c(c)?;
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let (a, b) = f.support();
    let mut knots: Vec<f64> = f.breakpoints().iter().map(|t| t.abs()).filter(|t| *t > 0.0).collect();
    knots.extend(knots.clone().iter().map(|t| c * t));
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let fc = f.clone();
    let field = ScalarField::real(dim, move |x| {
        transform_1d(fc.as_ref(), c, norm.of(x), &quad).map_or(f64::NAN, |r| r.value)
    })
    .with_radial_knots(knots)
    .assume_support(from_radii(c * a, b), norm);
    if a > 0.0 && b.is_finite() {
        return Ok(field);
    }
    let total = integral_of(f.as_ref(), &quad)?.value;
    let fp = f.clone();
    let phi = ScalarField::real(dim, move |x| {
        let r = norm.of(x);
        -integrate_shell(fp.as_ref(), r / c, f64::INFINITY, &quad).map_or(f64::NAN, |v| v.value)
    })
    .assume_support(Support::Unbounded, norm);
    Ok(field.with_potential(Potential {
        phi: Arc::new(phi),
        matrix: SquareMatrix::scalar(dim, c),
        limits: Limits {
            at_origin: -total,
            at_infinity: 0.0,
        },
    }))
}

/// The lifted field with dilation `c I` and target `int f`.
pub fn lifted_partition(
    f: Arc<dyn Integrand>,
    c: f64,
    norm: Norm,
    dim: usize,
    quad: QuadratureSpec,
) -> Result<PartitionSystem> {
    let total = integral_of(f.as_ref(), &quad)?.value;
    let field = lift_radial(f, c, norm, dim, quad)?;
    PartitionSystem::new(field, SquareMatrix::scalar(dim, c), TruncationPolicy::default(), total)
}
