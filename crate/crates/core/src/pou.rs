//! Scaling partitions of unity `sum_j g(M^j x) = target` and the telescoping
//! representation `g(x) = phi(x) - phi(Mx)`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dilation::{OrbitSum, PowerLadder, TailBound};
use crate::error::{Error, Result};
use crate::field::{from_radii, Limits, Potential, RadialProfile, ScalarField, Support};
use crate::matrix::{expansion_certificate, ExpansionCertificate, Norm, SquareMatrix};
use crate::report::{SampleRecord, VerificationReport};

/// How sums over `j` in `Z` are cut off when they are not finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub tail_tol: f64,
    pub j_abs_max: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            j_abs_max: 200,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tail_tol: f64, j_abs_max: usize) -> Result<Self> {
        if !(tail_tol > 0.0) {
            return Err(Error::InvalidInput(format!("tail_tol must be positive, got {tail_tol}")));
        }
        if j_abs_max < 1 {
            return Err(Error::InvalidInput("j_abs_max must be at least 1".into()));
        }
        Ok(Self { tail_tol, j_abs_max })
    }
}

/// A kernel `g`, a dilation matrix and the constant its dilation sum should
/// reproduce.
#[derive(Clone, Debug)]
pub struct PartitionSystem {
    g: ScalarField,
    matrix: SquareMatrix,
    certificate: Option<ExpansionCertificate>,
    truncation: TruncationPolicy,
    target_constant: f64,
    nonnegative: bool,
    notes: Vec<String>,
    ladder: Arc<PowerLadder>,
}

impl PartitionSystem {
    pub fn new(g: ScalarField, matrix: SquareMatrix, truncation: TruncationPolicy, target_constant: f64) -> Result<Self> {
        if g.dim() != matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: matrix.dim(),
                found: g.dim(),
            });
        }
        TruncationPolicy::new(truncation.tail_tol, truncation.j_abs_max)?;
        let ladder = PowerLadder::new(&matrix, g.norm(), truncation.j_abs_max)?;
        let certificate = expansion_certificate(&matrix, g.norm()).ok();
        Ok(Self {
            g,
            matrix,
            certificate,
            truncation,
            target_constant,
            nonnegative: false,
            notes: Vec::new(),
            ladder: Arc::new(ladder),
        })
    }

    pub(crate) fn with_nonnegative(mut self, nonnegative: bool) -> Self {
        self.nonnegative = nonnegative;
        self
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn certificate(&self) -> Option<&ExpansionCertificate> {
        self.certificate.as_ref()
    }

    pub fn truncation(&self) -> TruncationPolicy {
        self.truncation
    }

    pub fn target_constant(&self) -> f64 {
        self.target_constant
    }

    /// Whether `g >= 0` is guaranteed by construction.
    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn ladder(&self) -> &PowerLadder {
        &self.ladder
    }

    /// Radii `[r, r * factor)` of one scale band, if `M` or `M^-1` grows.
    pub fn scale_band_factor(&self) -> Option<f64> {
        self.ladder.scale_band_factor()
    }

    /// `sum_j g(M^j x)`.
    pub fn dilation_sum(&self, x: &[f64]) -> OrbitSum {
        let tail = telescoping_tail(&self.ladder, &self.matrix, &self.g, false);
        let g = &self.g;
        self.ladder.orbit_sum(
            x,
            &g.support(),
            tail.as_deref(),
            self.truncation.tail_tol,
            |y| g.eval(y),
        )
    }

    /// `sum_j |g(M^j x)|^2`.
    pub fn square_sum(&self, x: &[f64]) -> OrbitSum {
        let tail = if self.nonnegative {
            telescoping_tail(&self.ladder, &self.matrix, &self.g, true)
        } else {
            None
        };
        let g = &self.g;
        self.ladder.orbit_sum(
            x,
            &g.support(),
            tail.as_deref(),
            self.truncation.tail_tol,
            |y| Complex64::new(g.eval(y).norm_sqr(), 0.0),
        )
    }

    /// `sum_j |g(M^j x)|`.
    pub fn abs_sum(&self, x: &[f64]) -> OrbitSum {
        let tail = if self.nonnegative {
            telescoping_tail(&self.ladder, &self.matrix, &self.g, false)
        } else {
            None
        };
        let g = &self.g;
        self.ladder.orbit_sum(
            x,
            &g.support(),
            tail.as_deref(),
            self.truncation.tail_tol,
            |y| Complex64::new(g.eval(y).norm(), 0.0),
        )
    }
}

/// Remainders of a telescoping sum: forward from index `k`,
/// `sum_(j>=k) g(M^j x) = phi(M^k x) - L_fwd`; backward through index `-k`,
/// `sum_(j<=-k) = L_bwd - phi(M^(1-k) x)`. `L` is the limit of `phi` in the
/// direction the orbit goes. With `squared`, the remainder is squared, which
/// bounds a square sum of nonnegative terms.
fn telescoping_tail<'a>(
    ladder: &'a PowerLadder,
    matrix: &'a SquareMatrix,
    g: &'a ScalarField,
    squared: bool,
) -> Option<Box<TailBound<'a>>> {
    let pot = g.potential()?;
    if pot.matrix != *matrix {
        return None;
    }
    let limit = |forward: bool| {
        ladder.tends_to_infinity(forward).map(|inf| {
            if inf {
                pot.limits.at_infinity
            } else {
                pot.limits.at_origin
            }
        })
    };
    let (l_fwd, l_bwd) = (limit(true), limit(false));
    let phi = pot.phi.clone();
    Some(Box::new(move |y: &[f64], forward: bool| {
        let r = if forward {
            (phi.eval(y) - l_fwd?).norm()
        } else {
            (l_bwd? - phi.eval(&matrix.apply(y))).norm()
        };
        Some(if squared { r * r } else { r })
    }))
}

/// `g(x) = phi(x) - phi(Mx)`.
///
/// If `phi` declares a support ball of radius `R` and a plateau of radius
/// `R1`, `g` vanishes outside the annulus `[min(R1, R1/mu_1), max(R, R/lambda_1)]`,
/// which is `[R1/mu_1, R]` when `||x|| <= ||Mx||`.
pub fn g_from_phi(phi: &ScalarField, m: &SquareMatrix) -> Result<ScalarField> {
    if phi.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: phi.dim(),
        });
    }
    if !m.is_invertible() {
        return Err(Error::SingularMatrix {
            det: m.det(),
            tolerance: m.det_tolerance(),
        });
    }
    let norm = phi.norm();
    let (p1, p2) = (phi.clone(), phi.clone());
    let (m1, m2) = (m.clone(), m.clone());
    let mut g = if phi.is_real() {
        ScalarField::real(phi.dim(), move |x| p1.eval_re(x) - p1.eval_re(&m1.apply(x)))
    } else {
        ScalarField::complex(phi.dim(), move |x| p2.eval(x) - p2.eval(&m2.apply(x)))
    };
    let lambda1 = norm.lower_bound(m);
    let mu1 = norm.operator_norm(m);
    let (_, big_r) = phi.support().radii();
    let r1 = phi.plateau().map_or(0.0, |(r, _)| r);
    let support = from_radii(r1.min(r1 / mu1), big_r.max(big_r / lambda1));
    g = g
        .assume_support(support, norm)
        .with_smoothness(phi.smoothness().to_string());
    if let Some(b) = phi.bound() {
        g = g.with_bound(2.0 * b);
    }
    if let Some(limits) = phi.limits() {
        g = g.with_potential(Potential {
            phi: Arc::new(phi.clone()),
            matrix: m.clone(),
            limits,
        });
    }
    Ok(g)
}

/// The canonical potential `phi(x) = sum_(j>=0) g(M^j x)`.
///
/// Needs `M` expanding or `g` supported on an annulus, so that either the
/// support argument or a telescoping remainder certifies the tail. Points
/// where the cap `j_abs_max` is hit instead are not flagged individually;
/// the field's `tail_certified` says whether that can happen at all.
pub fn phi_from_g(g: &ScalarField, m: &SquareMatrix, policy: TruncationPolicy) -> Result<ScalarField> {
    if g.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: g.dim(),
        });
    }
    TruncationPolicy::new(policy.tail_tol, policy.j_abs_max)?;
    let cert = expansion_certificate(m, g.norm())?;
    let support = g.support();
    if !cert.is_expanding && !support.is_annular() {
        return Err(Error::Refused(
            "M is not expanding and g has no annular support: the series sum_(j>=0) g(M^j x) has no convergence certificate"
                .into(),
        ));
    }
    let ladder = Arc::new(PowerLadder::new(m, g.norm(), policy.j_abs_max)?);
    let grows = ladder.tends_to_infinity(true);
    let (lo, hi) = support.radii();
    let has_tail = g.potential().is_some_and(|p| p.matrix == *m) && grows.is_some();
    let certified = match grows {
        Some(true) => hi.is_finite() || has_tail,
        Some(false) => lo > 0.0 || has_tail,
        None => false,
    };
    let (gc, lc, mc) = (g.clone(), ladder.clone(), m.clone());
    let eval = move |x: &[f64]| -> Complex64 {
        let tail = telescoping_tail(&lc, &mc, &gc, false);
        lc.forward_sum(x, &gc.support(), tail.as_deref(), policy.tail_tol, |y| gc.eval(y))
            .value
    };
    let mut phi = if g.is_real() {
        ScalarField::real(g.dim(), move |x| eval(x).re)
    } else {
        ScalarField::complex(g.dim(), eval)
    };
    if grows == Some(true) && hi.is_finite() {
        let min_lambda = (0..=ladder.reach(true) as i32)
            .filter_map(|j| ladder.bounds(j))
            .map(|b| b.0)
            .fold(f64::INFINITY, f64::min);
        phi = phi.assume_support(Support::Ball { radius: hi / min_lambda }, g.norm());
    } else {
        phi = phi.assume_support(Support::Unbounded, g.norm());
    }
    if let (Some(true), Some(p)) = (grows, g.potential()) {
        phi = phi.with_limits(Limits {
            at_origin: p.limits.at_origin - p.limits.at_infinity,
            at_infinity: 0.0,
        });
    }
    Ok(phi.with_tail_certified(certified).with_smoothness(g.smoothness().to_string()))
}

/// Evaluates the dilation sum at every sample and compares with the target.
///
/// Samples at the origin are skipped. Each record carries whether its sum
/// was certified (finite support closure or telescoping remainder) or hit the
/// `j_abs_max` cap.
pub fn verify_partition(sys: &PartitionSystem, samples: &[Vec<f64>], tol: f64) -> Result<VerificationReport> {
    check_dims(sys, samples)?;
    let target = Complex64::new(sys.target_constant, 0.0);
    let (kept, skipped): (Vec<&Vec<f64>>, Vec<&Vec<f64>>) =
        samples.iter().partition(|x| x.iter().any(|v| *v != 0.0));
    let records: Vec<SampleRecord> = kept
        .par_iter()
        .map(|x| {
            let s = sys.dilation_sum(x);
            SampleRecord {
                point: x.to_vec(),
                value: s.value.re,
                deviation: (s.value - target).norm(),
                n_terms: s.n_terms,
                certified: s.certified,
                extra: None,
            }
        })
        .collect();
    let mut report = VerificationReport::from_samples("partition_of_unity", tol, format!("{} samples", samples.len()), records);
    report.skipped = skipped.len();
    if !skipped.is_empty() {
        report.note(format!("{} sample(s) at the origin skipped", skipped.len()));
    }
    let unc = report.uncertified();
    if unc > 0 {
        report.note(format!("{unc} sample(s) reached j_abs_max without a tail certificate"));
    } else {
        report.note("all sums finite by support or closed by a telescoping remainder");
    }
    report.note(format!("target = {}", sys.target_constant));
    Ok(report)
}

fn check_dims(sys: &PartitionSystem, samples: &[Vec<f64>]) -> Result<()> {
    let d = sys.matrix.dim();
    match samples.iter().find(|x| x.len() != d) {
        Some(x) => Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        }),
        None => Ok(()),
    }
}

/// `g(x) = r(||x||) - r(||Mx||)` with target 1.
///
/// With `require_nonnegative`, `||x|| <= ||Mx||` must hold in `norm`; for a
/// decreasing profile this makes `g >= 0` and `sum_j g^2 <= 1`.
pub fn build_radial_pou(
    r: &RadialProfile,
    m: &SquareMatrix,
    norm: Norm,
    require_nonnegative: bool,
) -> Result<PartitionSystem> {
    let cert = expansion_certificate(m, norm)?;
    if !cert.is_expanding {
        return Err(Error::Refused(format!(
            "M is not expanding: rho(M^-1) = {} >= 1",
            cert.spectral_radius_of_inverse
        )));
    }
    if require_nonnegative && !cert.norm_monotone {
        return Err(Error::Refused(format!(
            "nonnegativity needs ||x|| <= ||Mx|| for all x in the {norm} norm, but inf ||Mx||/||x|| = {}",
            cert.min_stretch
        )));
    }
    if require_nonnegative && !r.is_monotone_decreasing() {
        return Err(Error::Refused("nonnegativity needs a decreasing profile".into()));
    }
    let phi = r.potential_field(m.dim(), norm);
    let g = g_from_phi(&phi, m)?;
    let nonnegative = cert.norm_monotone && r.is_monotone_decreasing();
    let sys = PartitionSystem::new(g, m.clone(), TruncationPolicy::default(), 1.0)?
        .with_nonnegative(nonnegative)
        .with_note(format!("profile = {}", r.name()));
    Ok(if nonnegative {
        sys.with_note("g >= 0 and sum_j g(M^j x)^2 <= 1 guaranteed")
    } else {
        sys.with_note("nonnegativity not guaranteed: ||x|| <= ||Mx|| fails or profile not decreasing")
    })
}

/// Grid extrema of `sum_j |g(M^j x)|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareSumBounds {
    pub lower: f64,
    pub upper: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    /// Every sample's sum was certified.
    pub certified: bool,
}

/// Grid min and max of `sum_j |g(M^j x)|^2` (grid estimates of the ess-inf
/// and ess-sup). Systems built with a nonnegativity guarantee must land in
/// `(0, 1 + 1e-12]`.
pub fn square_sum_bounds(sys: &PartitionSystem, samples: &[Vec<f64>]) -> Result<SquareSumBounds> {
    let (lower, argmin, upper, argmax, certified) = extrema(sys, samples, |x| sys.square_sum(x))?;
    if sys.nonnegative && !(upper <= 1.0 + 1e-12 && lower > 0.0) {
        return Err(Error::InvariantViolated(format!(
            "square sums of a nonnegative partition must lie in (0, 1], got [{lower}, {upper}]"
        )));
    }
    Ok(SquareSumBounds {
        lower,
        upper,
        argmin,
        argmax,
        certified,
    })
}

/// Grid max of `sum_j |g(M^j x)|`, a grid estimate only.
pub fn abs_sum_bound(sys: &PartitionSystem, samples: &[Vec<f64>]) -> Result<f64> {
    extrema(sys, samples, |x| sys.abs_sum(x)).map(|e| e.2)
}

type Extrema = (f64, Vec<f64>, f64, Vec<f64>, bool);

fn extrema<F>(sys: &PartitionSystem, samples: &[Vec<f64>], f: F) -> Result<Extrema>
where
    F: Fn(&[f64]) -> OrbitSum + Sync,
{
    check_dims(sys, samples)?;
    let pts: Vec<&Vec<f64>> = samples.iter().filter(|x| x.iter().any(|v| *v != 0.0)).collect();
    if pts.is_empty() {
        return Err(Error::InvalidInput("no nonzero samples".into()));
    }
    let vals: Vec<(f64, bool)> = pts
        .par_iter()
        .map(|x| {
            let s = f(x);
            (s.value.re, s.certified)
        })
        .collect();
    let (mut lo, mut hi) = (0, 0);
    for (i, v) in vals.iter().enumerate() {
        if v.0 < vals[lo].0 {
            lo = i;
        }
        if v.0 > vals[hi].0 {
            hi = i;
        }
    }
    let certified = vals.iter().all(|v| v.1);
    Ok((vals[lo].0, pts[lo].clone(), vals[hi].0, pts[hi].clone(), certified))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn gaussian_phi(dim: usize) -> ScalarField {
        RadialProfile::gaussian().potential_field(dim, Norm::Euclidean)
    }

    fn indicator_half_one() -> ScalarField {
        ScalarField::real(1, |x| if x[0].abs() > 0.5 && x[0].abs() <= 1.0 { 1.0 } else { 0.0 })
            .with_support(Support::Annulus { inner: 0.5, outer: 1.0 }, Norm::Euclidean)
            .unwrap()
    }

    #[test]
    fn g_from_phi_gaussian() {
        let g = g_from_phi(&gaussian_phi(2), &SquareMatrix::scalar(2, 2.0)).unwrap();
        let x = [0.3, -0.4];
        let r2: f64 = 0.25;
        assert!((g.eval_re(&x) - ((-r2).exp() - (-4.0 * r2).exp())).abs() < 1e-15);
        assert_eq!(g.eval_re(&[0.0, 0.0]), 0.0);

        let g1 = g_from_phi(&gaussian_phi(1), &SquareMatrix::scalar(1, 2.0)).unwrap();
        let expected = (-1.0_f64).exp() - (-4.0_f64).exp();
        assert!((g1.eval_re(&[1.0]) - expected).abs() < 1e-15);
        assert!((g1.eval_re(&[1.0]) - 0.3495638).abs() < 1e-7);
    }

    #[test]
    fn g_from_phi_identity_is_zero() {
        let g = g_from_phi(&gaussian_phi(2), &SquareMatrix::identity(2)).unwrap();
        for x in [[0.1, 0.2], [3.0, -1.0], [0.0, 7.0]] {
            assert_eq!(g.eval_re(&x), 0.0);
        }
    }

    #[test]
    fn g_from_phi_dimension_mismatch() {
        assert!(matches!(
            g_from_phi(&gaussian_phi(1), &SquareMatrix::scalar(2, 2.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn g_from_phi_support_for_plateau_profile() {
        let r = RadialProfile::plateau_linear(1.0, 2.0).unwrap();
        let g = g_from_phi(&r.potential_field(2, Norm::Euclidean), &SquareMatrix::scalar(2, 2.0)).unwrap();
        assert_eq!(g.support(), Support::Annulus { inner: 0.5, outer: 2.0 });
    }

    #[test]
    fn phi_from_g_indicator() {
        let phi = phi_from_g(&indicator_half_one(), &SquareMatrix::scalar(1, 2.0), TruncationPolicy::default()).unwrap();
        // Enumerate the nonzero terms directly.
        let oracle = |x: f64| (0..64).filter(|j| {
            let y = x * 2f64.powi(*j);
            y > 0.5 && y <= 1.0
        }).count() as f64;
        for x in [0.6, 1.2, 0.3, 0.01, 0.75] {
            assert_eq!(phi.eval_re(&[x]), oracle(x));
        }
        assert_eq!(phi.eval_re(&[0.6]), 1.0);
        assert_eq!(phi.eval_re(&[1.2]), 0.0);
        assert!(phi.tail_certified());
    }

    #[test]
    fn phi_from_g_zero() {
        let z = ScalarField::zero(1);
        let phi = phi_from_g(&z, &SquareMatrix::scalar(1, 2.0), TruncationPolicy::default()).unwrap();
        assert_eq!(phi.eval_re(&[0.7]), 0.0);
    }

    #[test]
    fn phi_from_g_gaussian() {
        let m = SquareMatrix::scalar(1, 2.0);
        let g = g_from_phi(&gaussian_phi(1), &m).unwrap();
        let phi = phi_from_g(&g, &m, TruncationPolicy::default()).unwrap();
        let oracle: f64 = (0..60)
            .map(|j| {
                let t = 2f64.powi(j);
                (-t * t).exp() - (-4.0 * t * t).exp()
            })
            .sum();
        assert!((phi.eval_re(&[1.0]) - oracle).abs() < 1e-15);
        assert!((phi.eval_re(&[1.0]) - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn phi_from_g_refuses_without_certificate() {
        let g = g_from_phi(&gaussian_phi(1), &SquareMatrix::scalar(1, 0.5)).unwrap();
        let err = phi_from_g(&g, &SquareMatrix::identity(1), TruncationPolicy::default());
        assert!(matches!(err, Err(Error::Refused(_))));
    }

    #[test]
    fn verify_gaussian_partition_1d_and_2d() {
        for dim in [1, 2] {
            let m = SquareMatrix::scalar(dim, 2.0);
            let g = g_from_phi(&gaussian_phi(dim), &m).unwrap();
            let sys = PartitionSystem::new(g, m, TruncationPolicy::default(), 1.0).unwrap();
            let pts = GridSpec::log(1e-3, 1e3, 200).with_dirs(8).points(dim, Norm::Euclidean).unwrap();
            let rep = verify_partition(&sys, &pts, 1e-10).unwrap();
            assert!(rep.passed, "{}", rep.to_key_value());
            assert_eq!(rep.uncertified(), 0);
        }
    }

    #[test]
    fn verify_zero_partition() {
        let sys = PartitionSystem::new(ScalarField::zero(1), SquareMatrix::scalar(1, 2.0), TruncationPolicy::new(1e-12, 20).unwrap(), 0.0).unwrap();
        let rep = verify_partition(&sys, &[vec![0.5], vec![3.0]], 0.0).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn verify_skips_origin() {
        let m = SquareMatrix::scalar(1, 2.0);
        let sys = PartitionSystem::new(g_from_phi(&gaussian_phi(1), &m).unwrap(), m, TruncationPolicy::default(), 1.0).unwrap();
        let rep = verify_partition(&sys, &[vec![0.0], vec![1.0]], 1e-10).unwrap();
        assert_eq!(rep.skipped, 1);
        assert_eq!(rep.samples.len(), 1);
    }

    #[test]
    fn radial_plateau_linear_partition() {
        let r = RadialProfile::plateau_linear(1.0, 2.0).unwrap();
        let m = SquareMatrix::scalar(2, 2.0);
        let sys = build_radial_pou(&r, &m, Norm::Euclidean, true).unwrap();
        assert!(sys.is_nonnegative());
        let pts = GridSpec::log(0.01, 100.0, 300).points(2, Norm::Euclidean).unwrap();
        for x in &pts {
            assert!(sys.g().eval_re(x) >= 0.0);
        }
        let rep = verify_partition(&sys, &pts, 1e-10).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.uncertified(), 0);
    }

    #[test]
    fn counterexample_refuses_nonnegativity() {
        let m = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.75, 0.0]]).unwrap();
        let r = RadialProfile::plateau_linear(1.0, 2.0).unwrap();
        assert!(matches!(build_radial_pou(&r, &m, Norm::Euclidean, true), Err(Error::Refused(_))));
        // Without the request the system is still a partition of unity.
        let sys = build_radial_pou(&r, &m, Norm::Euclidean, false).unwrap();
        assert!(!sys.is_nonnegative());
        let pts = GridSpec::log(0.1, 10.0, 50).points(2, Norm::Euclidean).unwrap();
        assert!(verify_partition(&sys, &pts, 1e-10).unwrap().passed);
        // And g does take negative values somewhere.
        assert!(pts.iter().any(|x| sys.g().eval_re(x) < 0.0));
    }

    #[test]
    fn non_expanding_refused() {
        let r = RadialProfile::gaussian();
        assert!(matches!(
            build_radial_pou(&r, &SquareMatrix::identity(2), Norm::Euclidean, false),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn step_profile_partition() {
        let r = RadialProfile::step(1.0).unwrap();
        let sys = build_radial_pou(&r, &SquareMatrix::scalar(1, 2.0), Norm::Euclidean, true).unwrap();
        let pts = GridSpec::log(0.013, 77.0, 500).points(1, Norm::Euclidean).unwrap();
        let rep = verify_partition(&sys, &pts, 0.0).unwrap();
        assert!(rep.passed, "{}", rep.to_key_value());
    }

    #[test]
    fn square_sums_gaussian_against_direct_oracle() {
        let m = SquareMatrix::scalar(1, 2.0);
        let sys = build_radial_pou(&RadialProfile::gaussian(), &m, Norm::Euclidean, true).unwrap();
        let pts = GridSpec::band(1.0, 2.0, 2000).points(1, Norm::Euclidean).unwrap();
        let b = square_sum_bounds(&sys, &pts).unwrap();
        assert!(b.certified);
        let oracle = |x: f64| -> f64 {
            (-60..=60)
                .map(|j| {
                    let t = x * 2f64.powi(j);
                    let v = (-t * t).exp() - (-4.0 * t * t).exp();
                    v * v
                })
                .sum()
        };
        let vals: Vec<f64> = pts.iter().map(|x| oracle(x[0])).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        assert!((b.lower - lo).abs() < 1e-12);
        assert!((b.upper - hi).abs() < 1e-12);
        assert!(b.lower > 0.3 && b.upper < 0.33);
    }

    #[test]
    fn square_sum_needs_samples() {
        let m = SquareMatrix::scalar(1, 2.0);
        let sys = build_radial_pou(&RadialProfile::gaussian(), &m, Norm::Euclidean, true).unwrap();
        assert!(square_sum_bounds(&sys, &[]).is_err());
    }

    #[test]
    fn partial_sum_identity() {
        let m = SquareMatrix::from_rows(&[vec![1.5, 0.5], vec![-0.25, 2.0]]).unwrap();
        let phi = gaussian_phi(2);
        let g = g_from_phi(&phi, &m).unwrap();
        for x in [[0.3, 0.7], [-2.0, 0.1], [0.01, -0.02]] {
            for lo in 0..=8 {
                for hi in 0..=8 {
                    let s: f64 = (-lo..=hi).map(|j| g.eval_re(&m.pow(j).unwrap().apply(&x))).sum();
                    let t = phi.eval_re(&m.pow(-lo).unwrap().apply(&x)) - phi.eval_re(&m.pow(hi + 1).unwrap().apply(&x));
                    assert!((s - t).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn telescoping_round_trip(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            prop_assume!(x.abs() + y.abs() > 1e-6);
            let g = ScalarField::radial(2, Norm::Euclidean, |s| if (1.0..=3.0).contains(&s) { (s - 1.0) * (3.0 - s) } else { 0.0 })
                .with_support(Support::Annulus { inner: 1.0, outer: 3.0 }, Norm::Euclidean)
                .unwrap();
            let m = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
            let phi = phi_from_g(&g, &m, TruncationPolicy::default()).unwrap();
            let back = g_from_phi(&phi, &m).unwrap();
            prop_assert!((back.eval_re(&[x, y]) - g.eval_re(&[x, y])).abs() <= 1e-12);
        }

        #[test]
        fn scale_periodicity(x in 1e-3f64..1e3, sign in prop::bool::ANY) {
            let m = SquareMatrix::scalar(1, 2.0);
            let sys = PartitionSystem::new(g_from_phi(&gaussian_phi(1), &m).unwrap(), m, TruncationPolicy::default(), 1.0).unwrap();
            let x = if sign { x } else { -x };
            let a = sys.dilation_sum(&[x]).value.re;
            let b = sys.dilation_sum(&[2.0 * x]).value.re;
            prop_assert!((a - b).abs() <= 2.0 * sys.truncation().tail_tol);
        }
    }
}
