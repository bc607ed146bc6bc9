//! Wavelet frame generator pairs, checked on the Fourier side.
//!
//! The system `{D_(M^j) T_(bk) psi}` is handled through `psi_hat` and the
//! frequency dilation `A = M^T` (or the scalar `c` in one dimension).

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dilation::PowerLadder;
use crate::error::{Error, Result};
use crate::field::{RadialProfile, ScalarField, Support};
use crate::grid::{directions, GridSpec};
use crate::matrix::{expansion_certificate, Norm, PowerBounds, SquareMatrix, J_MAX};
use crate::pou::g_from_phi;
use crate::report::{fmt_f64, SampleRecord, VerificationReport};
use crate::spline::{partition_normalizer, PiecewiseEvenSpline};
use crate::transform::check_c;

/// Relative slack on the closed-interval conditions for `b`.
const B_SLACK: f64 = 1e-12;

/// Radii used by the default frame bound grid.
pub const DEFAULT_BAND_RADII: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum FrameDilation {
    /// One-dimensional dilation by `c`; the frequency side uses `c^j`.
    Scalar(f64),
    /// Dilation by `M`; the frequency side uses `(M^T)^j`.
    Matrix(SquareMatrix),
}

impl FrameDilation {
    pub fn dim(&self) -> usize {
        match self {
            FrameDilation::Scalar(_) => 1,
            FrameDilation::Matrix(m) => m.dim(),
        }
    }

    /// The matrix whose powers act on frequencies.
    pub fn frequency_matrix(&self) -> SquareMatrix {
        match self {
            FrameDilation::Scalar(c) => SquareMatrix::scalar(1, *c),
            FrameDilation::Matrix(m) => m.transpose(),
        }
    }
}

/// The finite set of `j` for which `psi_hat(A^j .)` can meet `supp psi_hat`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSetJ {
    pub j_min: i32,
    pub j_max: i32,
    pub members: Vec<i32>,
    /// Bounds of `A^j` for each member.
    pub witness: Vec<PowerBounds>,
}

impl IndexSetJ {
    pub fn contains(&self, j: i32) -> bool {
        self.members.contains(&j)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorKind {
    Spline { n: usize, c: f64 },
    Radial { profile: String, r1: f64, r: f64, index_set: IndexSetJ },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCertificates {
    /// `2 b R_eff <= 1`: no translate `k/b`, `k != 0`, of one support meets
    /// the other, so the `m != 0` conditions hold.
    pub support_disjoint: bool,
    /// `b` satisfies the construction's own bound.
    pub b_admissible: bool,
    /// Constant value of `psi_dual_hat` on `supp psi_hat`, when known.
    pub plateau_value: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct FrameGeneratorPair {
    psi_hat: ScalarField,
    psi_dual_hat: ScalarField,
    dilation: FrameDilation,
    b: f64,
    r_eff: f64,
    norm: Norm,
    kind: GeneratorKind,
    certificates: PairCertificates,
}

impl FrameGeneratorPair {
    /// A pair from arbitrary generators; both must declare bounded annular
    /// supports.
    pub fn new(psi_hat: ScalarField, psi_dual_hat: ScalarField, dilation: FrameDilation, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidInput(format!("translation step b must be positive, got {b}")));
        }
        let d = dilation.dim();
        for f in [&psi_hat, &psi_dual_hat] {
            if f.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: f.dim() });
            }
        }
        let (s1, s2) = (psi_hat.support(), psi_dual_hat.support());
        if !(s1.is_annular() && s2.is_annular() && s1.is_bounded() && s2.is_bounded()) {
            return Err(Error::Refused(
                "both generators need a bounded support away from the origin".into(),
            ));
        }
        let norm = psi_hat.norm();
        let r_eff = s1.radii().1.max(s2.radii().1);
        let certificates = PairCertificates {
            support_disjoint: 2.0 * b * r_eff <= 1.0 + B_SLACK,
            b_admissible: true,
            plateau_value: None,
            notes: Vec::new(),
        };
        Ok(Self {
            psi_hat,
            psi_dual_hat,
            dilation,
            b,
            r_eff,
            norm,
            kind: GeneratorKind::Custom,
            certificates,
        })
    }

    pub fn psi_hat(&self) -> &ScalarField {
        &self.psi_hat
    }

    pub fn psi_dual_hat(&self) -> &ScalarField {
        &self.psi_dual_hat
    }

    pub fn dilation(&self) -> &FrameDilation {
        &self.dilation
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.dilation.dim()
    }

    /// Radius of a ball containing both supports.
    pub fn r_eff(&self) -> f64 {
        self.r_eff
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn certificates(&self) -> &PairCertificates {
        &self.certificates
    }

    pub fn psi_support(&self) -> (f64, f64) {
        self.psi_hat.support().radii()
    }

    pub fn dual_support(&self) -> (f64, f64) {
        self.psi_dual_hat.support().radii()
    }

    /// The same pair with `psi_dual_hat` multiplied by `k`.
    pub fn with_dual_scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.psi_dual_hat = self.psi_dual_hat.scaled(k);
        out.certificates.plateau_value = self.certificates.plateau_value.map(|v| v * k);
        out
    }

    /// `key = value` description: kind, parameters, supports, `b` and the
    /// certificates. Spline and radial pairs can be rebuilt from it.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.kind {
            GeneratorKind::Spline { n, c } => {
                let _ = writeln!(out, "kind = \"spline\"");
                let _ = writeln!(out, "n = {n}");
                let _ = writeln!(out, "c = {c:?}");
            }
            GeneratorKind::Radial { profile, r1, r, index_set } => {
                let _ = writeln!(out, "kind = \"radial\"");
                let _ = writeln!(out, "profile = \"{profile}\"");
                let _ = writeln!(out, "r1 = {r1:?}");
                let _ = writeln!(out, "r = {r:?}");
                if let FrameDilation::Matrix(m) = &self.dilation {
                    let rows: Vec<String> = m
                        .rows()
                        .iter()
                        .map(|row| {
                            let v: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                            format!("[{}]", v.join(", "))
                        })
                        .collect();
                    let _ = writeln!(out, "matrix = [{}]", rows.join(", "));
                }
                let _ = writeln!(out, "norm = \"{}\"", self.norm.name());
                let j: Vec<String> = index_set.members.iter().map(|j| j.to_string()).collect();
                let _ = writeln!(out, "index_set = [{}]", j.join(", "));
            }
            GeneratorKind::Custom => {
                let _ = writeln!(out, "kind = \"custom\"");
            }
        }
        let _ = writeln!(out, "b = {:?}", self.b);
        let _ = writeln!(out, "dim = {}", self.dim());
        let (a, z) = self.psi_support();
        let _ = writeln!(out, "psi_support = [{a:?}, {z:?}]");
        let (a, z) = self.dual_support();
        let _ = writeln!(out, "dual_support = [{a:?}, {z:?}]");
        let _ = writeln!(out, "r_eff = {:?}", self.r_eff);
        let c = &self.certificates;
        let _ = writeln!(out, "support_disjoint = {}", c.support_disjoint);
        let _ = writeln!(out, "b_admissible = {}", c.b_admissible);
        if let Some(p) = c.plateau_value {
            let _ = writeln!(out, "plateau_value = {p:?}");
        }
        for n in &c.notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }
}

/// Grid estimates of the frame bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBoundEstimate {
    /// `max(a_raw, 0)`.
    pub a_est: f64,
    pub a_raw: f64,
    pub b_est: f64,
    pub grid_spec: String,
    /// Each coordinate of `k` ranged over `k_range.0 ..= k_range.1`.
    pub k_range: (i64, i64),
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    /// `a_raw > 0` and every orbit sum was closed by the support argument.
    pub certified: bool,
}

impl FrameBoundEstimate {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "a_est = {}", fmt_f64(self.a_est));
        let _ = writeln!(out, "a_raw = {}", fmt_f64(self.a_raw));
        let _ = writeln!(out, "b_est = {}", fmt_f64(self.b_est));
        let _ = writeln!(out, "k_range = [{}, {}]", self.k_range.0, self.k_range.1);
        let _ = writeln!(out, "grid = {}", self.grid_spec);
        let _ = writeln!(out, "certified = {}", self.certified);
        if !self.certified {
            let _ = writeln!(out, "note = frame property not certified on grid");
        }
        out
    }
}

/// The band `[r_lo, r_lo * factor)` of the inner support radius, which every
/// frequency orbit crosses.
pub fn default_bound_grid(psi_hat: &ScalarField, dilation: &FrameDilation) -> Result<GridSpec> {
    let ladder = PowerLadder::new(&dilation.frequency_matrix(), psi_hat.norm(), J_MAX)?;
    let factor = ladder
        .scale_band_factor()
        .ok_or_else(|| Error::Refused("the frequency dilation is not expanding".into()))?;
    let (lo, _) = bounded_annulus(psi_hat)?;
    let dirs = if dilation.dim() == 1 { 2 } else { 64 };
    Ok(GridSpec::band(lo, factor, DEFAULT_BAND_RADII).with_dirs(dirs))
}

fn bounded_annulus(psi_hat: &ScalarField) -> Result<(f64, f64)> {
    let s = psi_hat.support();
    if !s.is_bounded() {
        return Err(Error::Refused("psi_hat has unbounded support; the k-sum is not finite".into()));
    }
    if !s.is_annular() {
        return Err(Error::Refused(
            "psi_hat must vanish near the origin for the j-sum to be finite".into(),
        ));
    }
    Ok(s.radii())
}

struct BoundSample {
    diag: f64,
    cross: f64,
    closed: bool,
}

fn bound_samples(
    psi_hat: &ScalarField,
    dilation: &FrameDilation,
    b: f64,
    pts: &[Vec<f64>],
) -> Result<(Vec<BoundSample>, i64)> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidInput(format!("translation step b must be positive, got {b}")));
    }
    if psi_hat.dim() != dilation.dim() {
        return Err(Error::DimensionMismatch { expected: dilation.dim(), found: psi_hat.dim() });
    }
    let (_, r_hi) = bounded_annulus(psi_hat)?;
    let ladder = PowerLadder::new(&dilation.frequency_matrix(), psi_hat.norm(), J_MAX)?;
    let support = psi_hat.support();
    let d = psi_hat.dim();
    let k_max = (2.0 * r_hi * b * (1.0 + B_SLACK)).floor() as i64;
    let side = (2 * k_max + 1) as usize;
    let lattice: Vec<Vec<f64>> = (0..side.pow(d as u32))
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let k = (idx % side) as i64 - k_max;
                    idx /= side;
                    k as f64 / b
                })
                .collect()
        })
        .filter(|k: &Vec<f64>| k.iter().any(|v| *v != 0.0))
        .collect();
    let samples = pts
        .par_iter()
        .map(|x| {
            let (j_lo, j_hi, closed) = ladder.active_range(x, &support);
            let (mut diag, mut cross) = (0.0, 0.0);
            for j in j_lo..=j_hi {
                let y = ladder.apply(j, x).expect("index within ladder");
                let v = psi_hat.eval(&y).norm();
                if v == 0.0 {
                    continue;
                }
                diag += v * v;
                for k in &lattice {
                    let z: Vec<f64> = y.iter().zip(k).map(|(a, b)| a - b).collect();
                    cross += v * psi_hat.eval(&z).norm();
                }
            }
            BoundSample { diag, cross, closed }
        })
        .collect();
    Ok((samples, k_max))
}

/// Grid supremum of `b^-d sum_j sum_k |psi_hat(A^j y) psi_hat(A^j y - k/b)|`.
pub fn bessel_bound_estimate(
    psi_hat: &ScalarField,
    dilation: &FrameDilation,
    b: f64,
    grid: Option<&GridSpec>,
) -> Result<f64> {
    frame_bounds(psi_hat, dilation, b, grid).map(|e| e.b_est)
}

/// Grid estimates of the lower and upper frame bounds.
///
/// The lower one is `b^-d inf (sum_j |psi_hat(A^j y)|^2 - sum_j sum_(k!=0) ...)`;
/// it is only an estimate of the essential infimum.
pub fn frame_bounds(
    psi_hat: &ScalarField,
    dilation: &FrameDilation,
    b: f64,
    grid: Option<&GridSpec>,
) -> Result<FrameBoundEstimate> {
    let grid = match grid {
        Some(g) => g.clone(),
        None => default_bound_grid(psi_hat, dilation)?,
    };
    let pts: Vec<Vec<f64>> = grid
        .points(psi_hat.dim(), psi_hat.norm())?
        .into_iter()
        .filter(|x| x.iter().any(|v| *v != 0.0))
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidInput("frame bound grid has no nonzero points".into()));
    }
    let (samples, k_max) = bound_samples(psi_hat, dilation, b, &pts)?;
    let scale = b.powi(-(psi_hat.dim() as i32));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut argmin, mut argmax) = (0, 0);
    for (i, s) in samples.iter().enumerate() {
        let (l, h) = (s.diag - s.cross, s.diag + s.cross);
        if l < lo {
            lo = l;
            argmin = i;
        }
        if h > hi {
            hi = h;
            argmax = i;
        }
    }
    let closed = samples.iter().all(|s| s.closed);
    let a_raw = scale * lo;
    Ok(FrameBoundEstimate {
        a_est: a_raw.max(0.0),
        a_raw,
        b_est: scale * hi,
        grid_spec: grid.to_string(),
        k_range: (-k_max, k_max),
        argmin: pts[argmin].clone(),
        argmax: pts[argmax].clone(),
        certified: a_raw > 0.0 && closed,
    })
}

/// `psi_hat = h_n` and `psi_dual_hat = (b / Q_(n-1)^2) sum_(|j|<=n-1) h_n(c^j .)`,
/// for `0 < b <= c^(n-1) / 2`.
pub fn build_spline_dual_pair(n: usize, c: f64, b: f64) -> Result<FrameGeneratorPair> {
    check_c(c)?;
    if n < 2 {
        return Err(Error::InvalidInput(format!("the spline dual pair needs n >= 2, got {n}")));
    }
    let h = Arc::new(PiecewiseEvenSpline::build(n, c)?);
    let b_max = c.powi(n as i32 - 1) / 2.0;
    if !(b > 0.0 && b <= b_max * (1.0 + B_SLACK)) {
        return Err(Error::Refused(format!(
            "b = {b} is outside (0, c^(n-1)/2] = (0, {b_max}] required for the spline dual frame"
        )));
    }
    let q = partition_normalizer(n, c)?;
    let top = n as i32 - 1;
    let scales: Vec<f64> = (-top..=top).map(|j| c.powi(j)).collect();
    let coef = b / (q * q);
    let hd = h.clone();
    let inner = c.powi(2 * n as i32 - 1);
    let outer = c.powi(-top);
    let dual = ScalarField::real(1, move |x| coef * scales.iter().map(|s| hd.eval(s * x[0])).sum::<f64>())
        .assume_support(Support::Annulus { inner, outer }, Norm::Euclidean)
        .with_smoothness(format!("C^{}", n - 2));
    let psi = h.to_field();
    let mut pair = FrameGeneratorPair::new(psi, dual, FrameDilation::Scalar(c), b)?;
    pair.kind = GeneratorKind::Spline { n, c };
    pair.certificates.b_admissible = true;
    pair.certificates.plateau_value = Some(b / q);
    pair.certificates
        .notes
        .push(format!("psi_dual_hat = b / Q_(n-1) = {} on supp psi_hat", b / q));
    pair.certificates
        .notes
        .push("m != 0 conditions via support disjointness".into());
    Ok(pair)
}

/// `J = { j : lambda_j r_in <= R and mu_j R >= r_in }` with `r_in = R1 / ||M^T||`
/// and `lambda_j, mu_j` the bounds of `(M^T)^j`. May contain indices whose
/// terms vanish identically.
pub fn compute_index_set(m: &SquareMatrix, big_r: f64, r1: f64, norm: Norm) -> Result<IndexSetJ> {
    if !(r1 > 0.0 && r1 <= big_r && big_r.is_finite()) {
        return Err(Error::InvalidInput(format!("need 0 < R1 <= R < inf, got R1 = {r1}, R = {big_r}")));
    }
    let a = m.transpose();
    let cert = expansion_certificate(&a, norm)?;
    if !cert.is_expanding {
        return Err(Error::Refused("M is not expanding".into()));
    }
    let ladder = PowerLadder::new(&a, norm, J_MAX)?;
    let r_in = r1 / norm.operator_norm(&a);
    let mut members = Vec::new();
    let mut witness = Vec::new();
    for forward in [true, false] {
        // lambda is supermultiplicative and mu submultiplicative, so once a
        // full period of indices misses on the same side, all later ones do.
        let grow = (1..=ladder.reach(forward)).find(|&k| ladder.bounds(signed(k, forward)).unwrap().0 > 1.0);
        let shrink = (1..=ladder.reach(forward)).find(|&k| ladder.bounds(signed(k, forward)).unwrap().1 < 1.0);
        let (mut beyond, mut inside) = (0, 0);
        let mut closed = false;
        let start = if forward { 0 } else { 1 };
        for k in start..=ladder.reach(forward) {
            let j = signed(k, forward);
            let (lambda, mu) = ladder.bounds(j).unwrap();
            let is_beyond = lambda * r_in > big_r * (1.0 + B_SLACK);
            let is_inside = mu * big_r < r_in * (1.0 - B_SLACK);
            beyond = if is_beyond { beyond + 1 } else { 0 };
            inside = if is_inside { inside + 1 } else { 0 };
            if !is_beyond && !is_inside {
                members.push(j);
                witness.push(PowerBounds { j, lambda, mu });
            }
            if grow.is_some_and(|p| beyond >= p) || shrink.is_some_and(|q| inside >= q) {
                closed = true;
                break;
            }
        }
        if !closed {
            return Err(Error::InvariantViolated(format!(
                "index set scan reached J_max = {J_MAX} without closing"
            )));
        }
    }
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by_key(|&i| members[i]);
    let members: Vec<i32> = order.iter().map(|&i| members[i]).collect();
    let witness = order.iter().map(|&i| witness[i]).collect();
    Ok(IndexSetJ {
        j_min: members[0],
        j_max: *members.last().unwrap(),
        members,
        witness,
    })
}

fn signed(k: usize, forward: bool) -> i32 {
    if forward {
        k as i32
    } else {
        -(k as i32)
    }
}

/// `psi_hat(x) = r(||x||) - r(||M^T x||)` and
/// `psi_dual_hat = b^d sum_(j in J) psi_hat((M^T)^j .)`.
///
/// Without `b`, uses the largest admissible `b = (2 R max_J lambda_j^-1)^-1`.
pub fn build_radial_dual_pair(
    r: &RadialProfile,
    m: &SquareMatrix,
    b: Option<f64>,
    norm: Norm,
) -> Result<FrameGeneratorPair> {
    let a = m.transpose();
    let cert = expansion_certificate(&a, norm)?;
    if !cert.is_expanding {
        return Err(Error::Refused(format!(
            "M is not expanding: rho(M^-1) = {}",
            cert.spectral_radius_of_inverse
        )));
    }
    if !cert.norm_monotone {
        return Err(Error::Refused(format!(
            "the radial dual pair needs ||x|| <= ||M^T x|| in the {norm} norm, but inf ||M^T x||/||x|| = {}",
            cert.min_stretch
        )));
    }
    let (r1, big_r) = (r.plateau_radius(), r.support_radius());
    if !(r1 > 0.0 && big_r.is_finite()) {
        return Err(Error::Refused(format!(
            "the profile must equal 1 on [0, R1] with R1 > 0 and vanish beyond a finite R (got R1 = {r1}, R = {big_r})"
        )));
    }
    if !r.is_monotone_decreasing() || !r.is_continuous() {
        return Err(Error::Refused("the profile must be continuous and decreasing".into()));
    }
    let d = m.dim();
    let index_set = compute_index_set(m, big_r, r1, norm)?;
    let max_inv = index_set.witness.iter().map(|w| 1.0 / w.lambda).fold(0.0, f64::max);
    let b_max = 1.0 / (2.0 * big_r * max_inv);
    let b = match b {
        None => b_max,
        Some(b) if b > 0.0 && b <= b_max * (1.0 + B_SLACK) => b,
        Some(b) => {
            return Err(Error::Refused(format!(
                "b = {b} exceeds the admissible bound (2 R max_J lambda_j^-1)^-1 = {b_max}"
            )))
        }
    };
    let psi = g_from_phi(&r.potential_field(d, norm), &a)?;
    let ladder = Arc::new(PowerLadder::new(&a, norm, J_MAX)?);
    let bd = b.powi(d as i32);
    let (js, lad, p) = (index_set.members.clone(), ladder.clone(), psi.clone());
    let max_mu = index_set.witness.iter().map(|w| w.mu).fold(0.0, f64::max);
    let (r_in, _) = psi.support().radii();
    let dual = ScalarField::real(d, move |x| {
        bd * js
            .iter()
            .map(|&j| p.eval_re(&lad.apply(j, x).expect("index within ladder")))
            .sum::<f64>()
    })
    .assume_support(
        Support::Annulus {
            inner: r_in / max_mu,
            outer: big_r * max_inv,
        },
        norm,
    );
    check_index_sum(&psi, &ladder, &index_set, norm)?;
    let mut pair = FrameGeneratorPair::new(psi, dual, FrameDilation::Matrix(m.clone()), b)?;
    pair.kind = GeneratorKind::Radial {
        profile: r.name().to_string(),
        r1,
        r: big_r,
        index_set,
    };
    pair.certificates.b_admissible = true;
    pair.certificates.plateau_value = Some(bd);
    pair.certificates
        .notes
        .push(format!("psi_dual_hat = b^d = {bd} on supp psi_hat"));
    pair.certificates
        .notes
        .push("m != 0 conditions via support disjointness".into());
    Ok(pair)
}

/// Asserts `sum_(j in J) psi_hat(A^j x) = 1` on samples of `supp psi_hat`.
fn check_index_sum(psi: &ScalarField, ladder: &PowerLadder, j: &IndexSetJ, norm: Norm) -> Result<()> {
    let (lo, hi) = psi.support().radii();
    let pts = GridSpec::log(lo, hi, 64).points(psi.dim(), norm)?;
    let worst = pts
        .par_iter()
        .map(|x| {
            let s: f64 = j
                .members
                .iter()
                .map(|&k| psi.eval_re(&ladder.apply(k, x).expect("index within ladder")))
                .sum();
            (s - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max);
    if worst > 1e-10 {
        return Err(Error::InvariantViolated(format!(
            "sum over J of psi_hat(A^j x) deviates from 1 by {worst} on supp psi_hat"
        )));
    }
    Ok(())
}

/// Outcome of [`verify_dual_relation`].
#[derive(Clone, Debug, PartialEq)]
pub struct DualRelationReport {
    /// Per-sample `sum_j conj(psi_hat) psi_dual_hat (A^j gamma)` against `b^d`,
    /// with `sum_j |psi_hat(A^j gamma)|^2` as the extra column.
    pub report: VerificationReport,
    /// `2 b R_eff <= 1`; without it the `m != 0` conditions are not
    /// established.
    pub support_disjoint: bool,
    /// Both generators vanished at every sampled point outside their
    /// declared supports.
    pub exterior_vanishing: bool,
}

impl DualRelationReport {
    pub fn passed(&self) -> bool {
        self.report.passed && self.support_disjoint && self.exterior_vanishing
    }

    pub fn to_key_value(&self) -> String {
        let mut out = self.report.to_key_value();
        let _ = writeln!(out, "support_disjoint = {}", self.support_disjoint);
        let _ = writeln!(out, "exterior_vanishing = {}", self.exterior_vanishing);
        out
    }
}

/// Checks `sum_j conj(psi_hat(A^j g)) psi_dual_hat(A^j g) = b^d` at every
/// nonzero sample, after the support-disjointness check.
pub fn verify_dual_relation(pair: &FrameGeneratorPair, samples: &[Vec<f64>], tol: f64) -> Result<DualRelationReport> {
    let d = pair.dim();
    if let Some(x) = samples.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let support_disjoint = 2.0 * pair.b * pair.r_eff <= 1.0 + B_SLACK;
    let ladder = PowerLadder::new(&pair.dilation.frequency_matrix(), pair.norm, J_MAX)?;
    let support = pair.psi_hat.support();
    let target = pair.b.powi(d as i32);
    let kept: Vec<&Vec<f64>> = samples.iter().filter(|x| x.iter().any(|v| *v != 0.0)).collect();
    let records: Vec<SampleRecord> = kept
        .par_iter()
        .map(|x| {
            let s = ladder.orbit_sum(x, &support, None, 0.0, |y| {
                pair.psi_hat.eval(y).conj() * pair.psi_dual_hat.eval(y)
            });
            let sq = ladder.orbit_sum(x, &support, None, 0.0, |y| {
                Complex64::new(pair.psi_hat.eval(y).norm_sqr(), 0.0)
            });
            SampleRecord {
                point: x.to_vec(),
                value: s.value.re,
                deviation: (s.value - target).norm(),
                n_terms: s.n_terms,
                certified: s.certified,
                extra: Some(sq.value.re),
            }
        })
        .collect();
    let mut report = VerificationReport::from_samples("dual_relation", tol, format!("{} samples", samples.len()), records);
    report.skipped = samples.len() - kept.len();
    report.note(format!("target b^d = {target}"));
    if support_disjoint {
        report.note(format!(
            "m != 0 via support disjointness: 2 b R_eff = {} <= 1",
            2.0 * pair.b * pair.r_eff
        ));
    } else {
        report.note(format!(
            "m != 0 condition not established: 2 b R_eff = {} > 1",
            2.0 * pair.b * pair.r_eff
        ));
    }
    report.note("Bessel property rests on compact support and the grid frame bound estimate");
    let exterior_vanishing = exterior_check(pair, 1000);
    if !exterior_vanishing {
        report.note("a generator is nonzero outside its declared support");
    }
    Ok(DualRelationReport {
        report,
        support_disjoint,
        exterior_vanishing,
    })
}

/// Evaluates both generators at about `n` points inside the inner and
/// beyond the outer support radius.
fn exterior_check(pair: &FrameGeneratorPair, n: usize) -> bool {
    let d = pair.dim();
    let dirs = directions(d, if d == 1 { 2 } else { 16 }, pair.norm);
    let per = (n / (2 * dirs.len())).max(1);
    [&pair.psi_hat, &pair.psi_dual_hat].iter().all(|f| {
        let (lo, hi) = f.support().radii();
        let mut radii: Vec<f64> = (0..per).map(|i| hi * (1.0 + 1e-9) * 10f64.powf(i as f64 / per as f64)).collect();
        if lo > 0.0 {
            radii.extend((1..=per).map(|i| lo * (1.0 - 1e-9) * i as f64 / per as f64));
        }
        dirs.par_iter().all(|u| {
            radii.iter().all(|r| {
                let x: Vec<f64> = u.iter().map(|v| v * r).collect();
                f.eval(&x).norm() == 0.0
            })
        })
    })
}

/// Largest `|psi_dual_hat - plateau|` over samples where `psi_hat != 0`.
pub fn plateau_deviation(pair: &FrameGeneratorPair, samples: &[Vec<f64>]) -> Result<f64> {
    let plateau = pair
        .certificates
        .plateau_value
        .ok_or_else(|| Error::InvalidInput("pair has no plateau value".into()))?;
    Ok(samples
        .par_iter()
        .filter(|x| pair.psi_hat.eval(x).norm() != 0.0)
        .map(|x| (pair.psi_dual_hat.eval(x) - plateau).norm())
        .reduce(|| 0.0, f64::max))
}
