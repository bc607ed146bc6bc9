//! Scalar fields on `R^d` with support metadata, and radial profiles.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{Norm, SquareMatrix};

pub type RealFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Values {
    Real(RealFn),
    Complex(ComplexFn),
}

/// Where a field may be nonzero, measured in the field's norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Unbounded,
    /// Zero outside the closed ball of the given radius.
    Ball { radius: f64 },
    /// Zero outside `inner <= ||x|| <= outer`.
    Annulus { inner: f64, outer: f64 },
}

impl Support {
    /// `(inner, outer)` radii; `inner = 0` for balls, `outer = inf` when unbounded.
    pub fn radii(&self) -> (f64, f64) {
        match *self {
            Support::Unbounded => (0.0, f64::INFINITY),
            Support::Ball { radius } => (0.0, radius),
            Support::Annulus { inner, outer } => (inner, outer),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.radii().1.is_finite()
    }

    /// Bounded and bounded away from the origin.
    pub fn is_annular(&self) -> bool {
        let (lo, hi) = self.radii();
        lo > 0.0 && hi.is_finite()
    }

    pub fn contains_radius(&self, r: f64) -> bool {
        let (lo, hi) = self.radii();
        r >= lo && r <= hi
    }

    /// Smallest support of the expected shape covering both.
    pub fn union(&self, other: &Support) -> Support {
        let (a, b) = self.radii();
        let (c, d) = other.radii();
        from_radii(a.min(c), b.max(d))
    }
}

pub(crate) fn from_radii(lo: f64, hi: f64) -> Support {
    if !hi.is_finite() {
        Support::Unbounded
    } else if lo > 0.0 {
        Support::Annulus { inner: lo, outer: hi }
    } else {
        Support::Ball { radius: hi }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Support::Unbounded => write!(f, "unbounded"),
            Support::Ball { radius } => write!(f, "ball({radius})"),
            Support::Annulus { inner, outer } => write!(f, "annulus({inner}, {outer})"),
        }
    }
}

/// Limits of a field at the origin and at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    pub at_origin: f64,
    pub at_infinity: f64,
}

/// Records that a field is `phi(x) - phi(Mx)` for a known `phi` with known
/// limits, which turns dilation-sum tails into exact remainders.
#[derive(Clone)]
pub struct Potential {
    pub phi: Arc<ScalarField>,
    pub matrix: SquareMatrix,
    pub limits: Limits,
}

/// A real- or complex-valued function on `R^d` together with what is known
/// about it: support, plateau, bound, limits and smoothness.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    values: Values,
    support: Support,
    norm: Norm,
    plateau: Option<(f64, f64)>,
    smoothness: String,
    bound: Option<f64>,
    limits: Option<Limits>,
    potential: Option<Potential>,
    radial_knots: Vec<f64>,
    tail_certified: bool,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("real", &self.is_real())
            .field("support", &self.support)
            .field("norm", &self.norm)
            .field("plateau", &self.plateau)
            .field("smoothness", &self.smoothness)
            .field("bound", &self.bound)
            .field("limits", &self.limits)
            .field("tail_certified", &self.tail_certified)
            .finish()
    }
}

impl ScalarField {
    fn with_values(dim: usize, values: Values) -> Self {
        Self {
            dim,
            values,
            support: Support::Unbounded,
            norm: Norm::Euclidean,
            plateau: None,
            smoothness: String::new(),
            bound: None,
            limits: None,
            potential: None,
            radial_knots: Vec::new(),
            tail_certified: true,
        }
    }

    pub fn real<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::with_values(dim, Values::Real(Arc::new(f)))
    }

    pub fn complex<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self::with_values(dim, Values::Complex(Arc::new(f)))
    }

    pub fn zero(dim: usize) -> Self {
        let mut z = Self::real(dim, |_| 0.0);
        z.bound = Some(0.0);
        z.smoothness = "C^inf".into();
        z
    }

    /// `x -> profile(||x||)`.
    pub fn radial<F>(dim: usize, norm: Norm, profile: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut f = Self::real(dim, move |x| profile(norm.of(x)));
        f.norm = norm;
        f
    }

    /// Declares the support and spot-checks that the field vanishes on
    /// sampled exterior points.
    pub fn with_support(mut self, support: Support, norm: Norm) -> Result<Self> {
        let (lo, hi) = support.radii();
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::InvalidInput(format!("invalid support radii ({lo}, {hi})")));
        }
        self.norm = norm;
        self.support = support;
        let mut radii = Vec::new();
        if lo > 0.0 {
            radii.extend([0.0, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99].iter().map(|t| t * lo));
        }
        if hi.is_finite() {
            radii.extend([1.01, 1.1, 1.5, 2.0, 5.0, 10.0, 100.0].iter().map(|t| t * hi));
        }
        for dir in probe_directions(self.dim) {
            let unit = norm.normalize(&dir);
            for &r in &radii {
                let x: Vec<f64> = unit.iter().map(|u| u * r).collect();
                let v = self.eval(&x);
                if v.norm() != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "field is {v} at {x:?}, outside the declared support {support}"
                    )));
                }
            }
        }
        Ok(self)
    }

    /// Declares without checking; for internal constructions whose support
    /// follows from the mathematics.
    pub(crate) fn assume_support(mut self, support: Support, norm: Norm) -> Self {
        self.support = support;
        self.norm = norm;
        self
    }

    /// The field equals `value` on the closed ball of radius `radius`.
    pub fn with_plateau(mut self, radius: f64, value: f64) -> Self {
        self.plateau = Some((radius, value));
        self
    }

    pub fn with_smoothness(mut self, tag: impl Into<String>) -> Self {
        self.smoothness = tag.into();
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = Some(limits);
        self
    }

    /// Radii at which a radial field may fail to be smooth.
    pub fn with_radial_knots(mut self, knots: Vec<f64>) -> Self {
        self.radial_knots = knots;
        self
    }

    pub(crate) fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = Some(potential);
        self
    }

    pub(crate) fn with_tail_certified(mut self, certified: bool) -> Self {
        self.tail_certified = certified;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_real(&self) -> bool {
        matches!(self.values, Values::Real(_))
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn plateau(&self) -> Option<(f64, f64)> {
        self.plateau
    }

    pub fn smoothness(&self) -> &str {
        &self.smoothness
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn limits(&self) -> Option<Limits> {
        self.limits
    }

    pub fn potential(&self) -> Option<&Potential> {
        self.potential.as_ref()
    }

    pub fn radial_knots(&self) -> &[f64] {
        &self.radial_knots
    }

    /// False when a truncated series behind this field hit its cap without a
    /// tail certificate.
    pub fn tail_certified(&self) -> bool {
        self.tail_certified
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match &self.values {
            Values::Real(f) => Complex64::new(f(x), 0.0),
            Values::Complex(f) => f(x),
        }
    }

    /// Real part of the value.
    pub fn eval_re(&self, x: &[f64]) -> f64 {
        match &self.values {
            Values::Real(f) => f(x),
            Values::Complex(f) => f(x).re,
        }
    }

    /// `k * self`, keeping support metadata.
    pub fn scaled(&self, k: f64) -> ScalarField {
        let values = match &self.values {
            Values::Real(f) => {
                let f = f.clone();
                Values::Real(Arc::new(move |x| k * f(x)))
            }
            Values::Complex(f) => {
                let f = f.clone();
                Values::Complex(Arc::new(move |x| k * f(x)))
            }
        };
        ScalarField {
            dim: self.dim,
            values,
            support: self.support,
            norm: self.norm,
            plateau: self.plateau.map(|(r, v)| (r, k * v)),
            smoothness: self.smoothness.clone(),
            bound: self.bound.map(|b| b * k.abs()),
            limits: self.limits.map(|l| Limits {
                at_origin: k * l.at_origin,
                at_infinity: k * l.at_infinity,
            }),
            potential: None,
            radial_knots: self.radial_knots.clone(),
            tail_certified: self.tail_certified,
        }
    }
}

/// Coordinate axes and diagonals, both signs.
fn probe_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            dirs.push(e);
        }
    }
    if dim > 1 {
        dirs.push(vec![1.0; dim]);
        dirs.push((0..dim).map(|i| if i % 2 == 0 { 1.0 } else { -0.5 }).collect());
    }
    dirs
}

/// A profile `r: [0, inf) -> R` with `r(0) = 1`, used to build radial
/// potentials `phi(x) = r(||x||)`.
#[derive(Clone)]
pub struct RadialProfile {
    name: String,
    r: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support_radius: f64,
    plateau_radius: f64,
    monotone_decreasing: bool,
    continuous: bool,
    knots: Vec<f64>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("name", &self.name)
            .field("support_radius", &self.support_radius)
            .field("plateau_radius", &self.plateau_radius)
            .field("monotone_decreasing", &self.monotone_decreasing)
            .field("continuous", &self.continuous)
            .finish()
    }
}

impl RadialProfile {
    /// Validates `r(0) = 1`, the declared plateau and support, and (when
    /// claimed) monotonicity on a sample grid. Continuity is sampled and
    /// recorded rather than enforced.
    pub fn new<F>(
        name: impl Into<String>,
        r: F,
        support_radius: f64,
        plateau_radius: f64,
        monotone_decreasing: bool,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_radius > 0.0) {
            return Err(Error::InvalidInput("support radius must be positive".into()));
        }
        if !(plateau_radius >= 0.0 && plateau_radius <= support_radius) {
            return Err(Error::InvalidInput(format!(
                "plateau radius {plateau_radius} must lie in [0, {support_radius}]"
            )));
        }
        if (r(0.0) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("profile must satisfy r(0) = 1, got {}", r(0.0))));
        }
        let span = if support_radius.is_finite() {
            1.5 * support_radius
        } else {
            10.0_f64.max(3.0 * plateau_radius)
        };
        let n = 4096;
        let samples: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let s = span * i as f64 / n as f64;
                (s, r(s))
            })
            .collect();
        for &(s, v) in &samples {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("profile is not finite at {s}")));
            }
            if s <= plateau_radius && v != 1.0 {
                return Err(Error::InvalidInput(format!("profile is {v} at {s}, inside the plateau")));
            }
            if s >= support_radius && v != 0.0 {
                return Err(Error::InvalidInput(format!("profile is {v} at {s}, outside its support")));
            }
        }
        if monotone_decreasing && samples.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::InvalidInput("profile is not decreasing on the sample grid".into()));
        }
        let continuous = samples
            .windows(2)
            .all(|w| !jump_persists(&r, w[0].0, w[1].0));
        Ok(Self {
            name: name.into(),
            r: Arc::new(r),
            support_radius,
            plateau_radius,
            monotone_decreasing,
            continuous,
            knots: Vec::new(),
        })
    }

    /// `exp(-s^2)`.
    pub fn gaussian() -> Self {
        Self::new("gaussian", |s: f64| (-s * s).exp(), f64::INFINITY, 0.0, true).unwrap()
    }

    /// `exp(-s)`.
    pub fn exp_abs() -> Self {
        Self::new("exp-abs", |s: f64| (-s).exp(), f64::INFINITY, 0.0, true).unwrap()
    }

    /// 1 on `[0, r1]`, linear down to 0 at `r`, zero beyond.
    pub fn plateau_linear(r1: f64, r: f64) -> Result<Self> {
        if !(r1 > 0.0 && r > r1) {
            return Err(Error::InvalidInput(format!("plateau-linear needs 0 < r1 < r, got ({r1}, {r})")));
        }
        let profile = move |s: f64| {
            if s <= r1 {
                1.0
            } else if s >= r {
                0.0
            } else {
                (r - s) / (r - r1)
            }
        };
        let mut p = Self::new("plateau-linear", profile, r, r1, true)?;
        p.knots = vec![r1, r];
        Ok(p)
    }

    /// Indicator of `[0, r]`.
    pub fn step(r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("step radius must be positive, got {r}")));
        }
        let mut p = Self::new("step", move |s: f64| if s <= r { 1.0 } else { 0.0 }, r, r, true)?;
        p.knots = vec![r];
        Ok(p)
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.r)(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `R`, or infinity.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `R1`, or 0.
    pub fn plateau_radius(&self) -> f64 {
        self.plateau_radius
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.monotone_decreasing
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `phi(x) = r(||x||)` on `R^dim`, with support, plateau and limits.
    pub fn potential_field(&self, dim: usize, norm: Norm) -> ScalarField {
        let r = self.r.clone();
        let mut phi = ScalarField::radial(dim, norm, move |s| r(s))
            .with_limits(Limits {
                at_origin: 1.0,
                at_infinity: 0.0,
            })
            .with_radial_knots(self.knots.clone())
            .assume_support(from_radii(0.0, self.support_radius), norm);
        if self.plateau_radius > 0.0 {
            phi = phi.with_plateau(self.plateau_radius, 1.0);
        }
        if self.monotone_decreasing {
            phi = phi.with_bound(1.0);
        }
        phi
    }
}

/// Bisects a sample cell; a jump that survives 48 halvings is a discontinuity.
fn jump_persists(r: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> bool {
    let (mut fa, mut fb) = (r(a), r(b));
    if (fb - fa).abs() <= 1e-3 {
        return false;
    }
    for _ in 0..48 {
        let m = 0.5 * (a + b);
        let fm = r(m);
        if (fm - fa).abs() >= (fb - fm).abs() {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    (fb - fa).abs() > 1e-6
}
