//! Small dense real matrices: inverses, powers, singular values, spectral
//! radius and the "expanding" predicate with its growth constants.
//!
//! Dimensions are expected to be small (d <= 8), so every routine here is a
//! direct O(d^3) method.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Margin used for the strict inequality `rho(M^-1) < 1`.
pub const TAU_SPEC: f64 = 1e-9;

/// Default cap on `|j|` for matrix powers.
pub const J_MAX: usize = 200;

/// Largest power used when fitting the growth constant `C`.
pub const N_FIT: usize = 32;

const GELFAND_MAX_SQUARINGS: usize = 64;
const JACOBI_MAX_SWEEPS: usize = 80;

/// A dense `d x d` real matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("matrix entry {bad} is not finite")));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    /// `a * I` in dimension `dim`.
    pub fn scalar(dim: usize, a: f64) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = a;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.entries[i * d + j];
            }
        }
        Self { dim: d, entries }
    }

    /// Matrix product `self * other`. Panics on dimension mismatch.
    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let d = self.dim;
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * other.entries[k * d + j];
                }
            }
        }
        SquareMatrix { dim: d, entries }
    }

    /// Matrix-vector product `self * x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn scaled(&self, s: f64) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|v| v * s).collect(),
        }
    }

    fn frobenius(&self) -> f64 {
        let m = self.max_abs_entry();
        if m == 0.0 {
            return 0.0;
        }
        m * self.entries.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn det(&self) -> f64 {
        let d = self.dim;
        let mut a = self.entries.clone();
        let mut det = 1.0;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&x, &y| a[x * d + col].abs().total_cmp(&a[y * d + col].abs()))
                .unwrap();
            if a[pivot * d + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..d {
                    a.swap(col * d + j, pivot * d + j);
                }
                det = -det;
            }
            let p = a[col * d + col];
            det *= p;
            for i in col + 1..d {
                let f = a[i * d + col] / p;
                for j in col..d {
                    a[i * d + j] -= f * a[col * d + j];
                }
            }
        }
        det
    }

    /// `tau_det = 1e-12 * (max |entry|)^d`.
    pub fn det_tolerance(&self) -> f64 {
        1e-12 * self.max_abs_entry().powi(self.dim as i32)
    }

    pub fn is_invertible(&self) -> bool {
        self.det().abs() > self.det_tolerance()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<SquareMatrix> {
        let det = self.det();
        let tolerance = self.det_tolerance();
        if !(det.abs() > tolerance) {
            return Err(Error::SingularMatrix { det, tolerance });
        }
        let d = self.dim;
        let mut a = self.entries.clone();
        let mut inv = SquareMatrix::identity(d).entries;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&x, &y| a[x * d + col].abs().total_cmp(&a[y * d + col].abs()))
                .unwrap();
            if pivot != col {
                for j in 0..d {
                    a.swap(col * d + j, pivot * d + j);
                    inv.swap(col * d + j, pivot * d + j);
                }
            }
            let p = a[col * d + col];
            for j in 0..d {
                a[col * d + j] /= p;
                inv[col * d + j] /= p;
            }
            for i in 0..d {
                if i == col {
                    continue;
                }
                let f = a[i * d + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..d {
                    a[i * d + j] -= f * a[col * d + j];
                    inv[i * d + j] -= f * inv[col * d + j];
                }
            }
        }
        SquareMatrix::new(d, inv)
    }

    /// `M^j` for any integer `j`; negative powers go through the inverse.
    pub fn pow(&self, j: i32) -> Result<SquareMatrix> {
        let base = if j < 0 { self.inverse()? } else { self.clone() };
        let mut out = SquareMatrix::identity(self.dim);
        for _ in 0..j.unsigned_abs() {
            out = base.matmul(&out);
        }
        if !out.is_finite() {
            return Err(Error::OutOfRange(format!("M^{j} overflows double precision")));
        }
        Ok(out)
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.entries.chunks(self.dim).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// The two norms on `R^d` supported throughout the crate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Norm {
    #[default]
    Euclidean,
    Max,
}

impl Norm {
    pub fn of(self, x: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => {
                let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if m == 0.0 || !m.is_finite() {
                    return m;
                }
                m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
            }
            Norm::Max => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Rescales `x` to unit length in this norm.
    pub fn normalize(self, x: &[f64]) -> Vec<f64> {
        let n = self.of(x);
        x.iter().map(|v| v / n).collect()
    }

    /// Induced operator norm `sup ||Mx|| / ||x||`.
    pub fn operator_norm(self, m: &SquareMatrix) -> f64 {
        match self {
            Norm::Euclidean => singular_values(m)[0],
            Norm::Max => max_row_sum(m),
        }
    }

    /// `inf ||Mx|| / ||x||`, zero for singular matrices.
    ///
    /// For the max norm the infimum is `1 / ||M^-1||_inf`, the maximum of the
    /// convex map `x -> ||M^-1 x||_inf` over the sign vertices of the unit cube.
    pub fn lower_bound(self, m: &SquareMatrix) -> f64 {
        match self {
            Norm::Euclidean => *singular_values(m).last().unwrap(),
            Norm::Max => match m.inverse() {
                Ok(inv) => 1.0 / max_row_sum(&inv),
                Err(_) => 0.0,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::Euclidean => "euclid",
            Norm::Max => "max",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "euclid" | "euclidean" | "l2" => Ok(Norm::Euclidean),
            "max" | "inf" | "linf" => Ok(Norm::Max),
            other => Err(Error::InvalidInput(format!("unknown norm '{other}'"))),
        }
    }
}

fn max_row_sum(m: &SquareMatrix) -> f64 {
    m.entries
        .chunks(m.dim)
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Singular values in descending order, by one-sided Jacobi rotations.
pub fn singular_values(m: &SquareMatrix) -> Vec<f64> {
    let d = m.dim;
    let scale = m.max_abs_entry();
    if scale == 0.0 {
        return vec![0.0; d];
    }
    // Work on the columns of M / scale.
    let mut a: Vec<f64> = m.entries.iter().map(|v| v / scale).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..d {
                    let (x, y) = (a[i * d + p], a[i * d + q]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..d {
                    let (x, y) = (a[i * d + p], a[i * d + q]);
                    a[i * d + p] = c * x - s * y;
                    a[i * d + q] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..d)
        .map(|j| {
            let col: Vec<f64> = (0..d).map(|i| a[i * d + j]).collect();
            Norm::Euclidean.of(&col) * scale
        })
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Spectral radius `rho(M)`.
///
/// Exact through the characteristic polynomial for `d <= 2`; otherwise the
/// Gelfand limit `||M^N||^(1/N)` along `N = 2^k` with renormalised squaring,
/// stopped once successive estimates agree or after 64 squarings.
pub fn spectral_radius(m: &SquareMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    match m.dim {
        1 => Ok(m.entries[0].abs()),
        2 => Ok(spectral_radius_2x2(m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1))),
        _ => Ok(gelfand_radius(m)),
    }
}

fn spectral_radius_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (a - d) * (a - d) + 4.0 * b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let r1 = 0.5 * (tr + tr.signum() * s);
        if r1 == 0.0 {
            return 0.0;
        }
        let r2 = det / r1;
        r1.abs().max(r2.abs())
    } else {
        det.sqrt()
    }
}

fn gelfand_radius(m: &SquareMatrix) -> f64 {
    let n0 = m.frobenius();
    if n0 == 0.0 {
        return 0.0;
    }
    // M^(2^k) = exp(log_norm) * a, with ||a||_F = 1.
    let mut a = m.scaled(1.0 / n0);
    let mut log_norm = n0.ln();
    let mut power = 1.0_f64;
    let mut estimate = n0;
    for _ in 0..GELFAND_MAX_SQUARINGS {
        let sq = a.matmul(&a);
        let nrm = sq.frobenius();
        if nrm == 0.0 || !nrm.is_finite() {
            return 0.0;
        }
        log_norm = 2.0 * log_norm + nrm.ln();
        power *= 2.0;
        a = sq.scaled(1.0 / nrm);
        let next = (log_norm / power).exp();
        let converged = (next - estimate).abs() <= 1e-15 * next;
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

/// Growth constants with `||M^N x|| >= C alpha^N ||x||` for `0 <= N <= n_fit`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthConstants {
    pub c: f64,
    pub alpha: f64,
    pub n_fit: usize,
}

/// Result of the expanding test for a matrix in a chosen norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionCertificate {
    pub norm: Norm,
    pub is_expanding: bool,
    pub spectral_radius_of_inverse: f64,
    /// Whether `||x|| <= ||Mx||` for every `x`.
    pub norm_monotone: bool,
    /// `inf ||Mx|| / ||x||`.
    pub min_stretch: f64,
    pub growth_constants: Option<GrowthConstants>,
}

impl ExpansionCertificate {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("norm = {}\n", self.norm));
        out.push_str(&format!("is_expanding = {}\n", self.is_expanding));
        out.push_str(&format!(
            "spectral_radius_of_inverse = {:.17e}\n",
            self.spectral_radius_of_inverse
        ));
        out.push_str(&format!("norm_monotone = {}\n", self.norm_monotone));
        out.push_str(&format!("min_stretch = {:.17e}\n", self.min_stretch));
        match &self.growth_constants {
            Some(g) => {
                out.push_str(&format!("growth_c = {:.17e}\n", g.c));
                out.push_str(&format!("growth_alpha = {:.17e}\n", g.alpha));
                out.push_str(&format!(
                    "growth_note = C is a witness over 0 <= N <= {}, not a proof\n",
                    g.n_fit
                ));
            }
            None => out.push_str("growth_c = none\n"),
        }
        out
    }
}

/// Expanding test in the Euclidean norm.
pub fn is_expanding(m: &SquareMatrix) -> Result<ExpansionCertificate> {
    expansion_certificate(m, Norm::Euclidean)
}

/// Expanding test: `rho(M^-1) < 1 - TAU_SPEC`, plus norm monotonicity and
/// growth constants in `norm`.
pub fn expansion_certificate(m: &SquareMatrix, norm: Norm) -> Result<ExpansionCertificate> {
    let inv = m.inverse()?;
    let rho_inv = spectral_radius(&inv)?;
    let is_expanding = rho_inv < 1.0 - TAU_SPEC;
    let min_stretch = norm.lower_bound(m);
    let norm_monotone = min_stretch >= 1.0 - 1e-12;
    let growth_constants = if is_expanding {
        let alpha = 1.0 / (rho_inv + TAU_SPEC);
        // The infimum over unit vectors of ||M^N x|| is exactly the lower
        // bound of M^N, so the minimum below dominates any sampled witness.
        let mut c = 1.0_f64;
        let mut power = SquareMatrix::identity(m.dim);
        for n in 1..=N_FIT {
            power = m.matmul(&power);
            if !power.is_finite() {
                break;
            }
            c = c.min(norm.lower_bound(&power) / alpha.powi(n as i32));
        }
        Some(GrowthConstants {
            c: c.clamp(f64::MIN_POSITIVE, 1.0),
            alpha,
            n_fit: N_FIT,
        })
    } else {
        None
    };
    Ok(ExpansionCertificate {
        norm,
        is_expanding,
        spectral_radius_of_inverse: rho_inv,
        norm_monotone,
        min_stretch,
        growth_constants,
    })
}

/// Two-sided bounds `lambda ||x|| <= ||M^j x|| <= mu ||x||`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerBounds {
    pub j: i32,
    pub lambda: f64,
    pub mu: f64,
}

/// Bounds on `M^j` in `norm`, for `|j| <= j_max`.
pub fn power_bounds(m: &SquareMatrix, j: i32, norm: Norm, j_max: usize) -> Result<PowerBounds> {
    if j.unsigned_abs() as usize > j_max {
        return Err(Error::OutOfRange(format!("|j| = {} exceeds J_max = {j_max}", j.abs())));
    }
    if !m.is_invertible() {
        return Err(Error::SingularMatrix {
            det: m.det(),
            tolerance: m.det_tolerance(),
        });
    }
    if j == 0 {
        return Ok(PowerBounds { j, lambda: 1.0, mu: 1.0 });
    }
    let p = m.pow(j)?;
    let (lambda, mu) = match norm {
        Norm::Euclidean => {
            let sv = singular_values(&p);
            (*sv.last().unwrap(), sv[0])
        }
        Norm::Max => {
            let q = m.pow(-j)?;
            (1.0 / max_row_sum(&q), max_row_sum(&p))
        }
    };
    Ok(PowerBounds { j, lambda, mu })
}

/// Smallest and largest singular value of `M^j`.
pub fn singular_interval(m: &SquareMatrix, j: i32) -> Result<PowerBounds> {
    power_bounds(m, j, Norm::Euclidean, J_MAX)
}
