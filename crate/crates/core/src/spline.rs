//! The geometric-knot spline family `h_n`.
//!
//! `h_1` is the indicator of `S = [-1, -c) u (c, 1]` and `h_n = K h_(n-1)`,
//! computed through
//! `h_n(x) = 2/(n-1) [(1 - x) h_(n-1)(x) + (x/c - c^(n-1)) h_(n-1)(x/c)]`, `x > 0`.
//!
//! Piece `k` lives on `I_k = [c^(k+1), c^k]`, `k = 0..n`, and is stored as a
//! polynomial in the local coordinate `u = (x - c^(k+1)) / (c^k - c^(k+1))`.
//! Since `x -> x/c` maps `I_k` onto `I_(k-1)` with the same `u`, the
//! recursion is plain coefficient arithmetic and stays well conditioned for
//! small `c` and large `n`, unlike monomials in `x`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, Support};
use crate::matrix::{Norm, SquareMatrix};
use crate::pou::{PartitionSystem, TruncationPolicy};
use crate::quadrature::QuadratureSpec;
use crate::report::{SampleRecord, VerificationReport};
use crate::transform::{check_c, transform_1d, Integrand};

/// Largest supported order.
pub const N_MAX: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseEvenSpline {
    n: usize,
    c: f64,
    /// `knots[k] = c^k` for `k = 0..=n`, by repeated multiplication.
    knots: Vec<f64>,
    /// `pieces[k]`: ascending coefficients in the local coordinate of `I_k`.
    pieces: Vec<Vec<f64>>,
}

/// A piece in monomial form, `sum_i coeffs[i] x^i` on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialPiece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

fn mul_linear(p: &[f64], a: f64, b: f64) -> Vec<f64> {
    // p(u) * (a + b u)
    let mut out = vec![0.0; p.len() + 1];
    for (i, &v) in p.iter().enumerate() {
        out[i] += a * v;
        out[i + 1] += b * v;
    }
    out
}

fn add_into(acc: &mut Vec<f64>, p: &[f64]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, v) in acc.iter_mut().zip(p) {
        *a += v;
    }
}

fn horner(p: &[f64], u: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &v| acc * u + v)
}

/// Coefficients of the `m`-th derivative.
fn derivative(p: &[f64], m: usize) -> Vec<f64> {
    if m >= p.len() {
        return vec![0.0];
    }
    (m..p.len())
        .map(|i| {
            let falling: f64 = (0..m).map(|r| (i - r) as f64).product();
            p[i] * falling
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl PiecewiseEvenSpline {
    /// `h_n` for `1 <= n <= N_MAX` and `c` in `(0, 1)`.
    pub fn build(n: usize, c: f64) -> Result<Self> {
        Ok(Self::family(n, c)?.pop().expect("family is nonempty"))
    }

    /// `h_1, ..., h_n`.
    pub fn family(n: usize, c: f64) -> Result<Vec<Self>> {
        check_c(c)?;
        if n == 0 {
            return Err(Error::InvalidInput("spline order must be at least 1".into()));
        }
        if n > N_MAX {
            return Err(Error::OutOfRange(format!("spline order {n} exceeds N_max = {N_MAX}")));
        }
        let mut out = vec![Self {
            n: 1,
            c,
            knots: vec![1.0, c],
            pieces: vec![vec![1.0]],
        }];
        for _ in 1..n {
            let next = out.last().unwrap().next();
            out.push(next);
        }
        Ok(out)
    }

    fn next(&self) -> Self {
        let m = self.n + 1;
        let mut knots = self.knots.clone();
        knots.push(knots[self.n] * self.c);
        let w = |k: usize| knots[k] - knots[k + 1];
        let scale = 2.0 / (m - 1) as f64;
        let pieces = (0..m)
            .map(|k| {
                let mut acc = Vec::new();
                if k + 1 < m {
                    // (1 - x) h(x) with x = knots[k+1] + w_k u.
                    add_into(&mut acc, &mul_linear(&self.pieces[k], 1.0 - knots[k + 1], -w(k)));
                }
                if k >= 1 {
                    // (x/c - c^(m-1)) h(x/c) with x/c = knots[k] + w_(k-1) u.
                    add_into(&mut acc, &mul_linear(&self.pieces[k - 1], knots[k] - knots[m - 1], w(k - 1)));
                }
                acc.iter().map(|v| v * scale).collect()
            })
            .collect();
        Self {
            n: m,
            c: self.c,
            knots,
            pieces,
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Positive knots in ascending order, `c^n, ..., c, 1`.
    pub fn knots(&self) -> Vec<f64> {
        self.knots.iter().rev().copied().collect()
    }

    /// Number of pieces on the positive half.
    pub fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Local-coordinate coefficients of the piece on `[c^(k+1), c^k]`.
    pub fn local_piece(&self, k: usize) -> &[f64] {
        &self.pieces[k]
    }

    fn width(&self, k: usize) -> f64 {
        self.knots[k] - self.knots[k + 1]
    }

    /// `(k, u)` with `x` in `(c^(k+1), c^k]`, or `None` outside `(c^n, 1]`.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !(x > self.knots[self.n] && x <= 1.0) {
            return None;
        }
        let k = (0..self.n).find(|&k| x > self.knots[k + 1])?;
        Some((k, (x - self.knots[k + 1]) / self.width(k)))
    }

    /// `h_n(x)`: even, zero outside `(c^n, 1]` in `|x|`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.locate(x.abs()) {
            Some((k, u)) => horner(&self.pieces[k], u),
            None => 0.0,
        }
    }

    /// `h_n^(m)(x)`, using odd symmetry of odd derivatives.
    pub fn eval_deriv(&self, x: f64, m: usize) -> f64 {
        if m == 0 {
            return self.eval(x);
        }
        match self.locate(x.abs()) {
            Some((k, u)) => {
                let v = horner(&derivative(&self.pieces[k], m), u) / self.width(k).powi(m as i32);
                if x < 0.0 && m % 2 == 1 {
                    -v
                } else {
                    v
                }
            }
            None => 0.0,
        }
    }

    /// `Q_n = int h_n`, from exact antiderivatives of the pieces.
    pub fn integral(&self) -> f64 {
        2.0 * self
            .pieces
            .iter()
            .enumerate()
            .map(|(k, p)| {
                self.width(k) * p.iter().enumerate().map(|(i, a)| a / (i + 1) as f64).sum::<f64>()
            })
            .sum::<f64>()
    }

    /// Pieces as polynomials in `x`, ascending in `x`.
    pub fn monomial_pieces(&self) -> Vec<MonomialPiece> {
        (0..self.n)
            .rev()
            .map(|k| {
                let (a, w) = (self.knots[k + 1], self.width(k));
                let p = &self.pieces[k];
                let coeffs = (0..p.len())
                    .map(|m| {
                        (m..p.len())
                            .map(|i| p[i] / w.powi(i as i32) * binomial(i, m) * (-a).powi((i - m) as i32))
                            .sum()
                    })
                    .collect();
                MonomialPiece {
                    lo: a,
                    hi: self.knots[k],
                    coeffs,
                }
            })
            .collect()
    }

    /// One line per positive piece, `[lo,hi] : k0 k1 ...`.
    pub fn pieces_dump(&self) -> String {
        let mut out = String::new();
        for p in self.monomial_pieces() {
            let coeffs: Vec<String> = p.coeffs.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "[{:.16e},{:.16e}] : {}", p.lo, p.hi, coeffs.join(" "));
        }
        out
    }

    /// Derivative matching at the knots.
    pub fn smoothness(&self) -> SmoothnessReport {
        let n = self.n;
        // One-sided derivatives at knots[k]: from below (piece k at u = 1) and
        // from above (piece k-1 at u = 0); outside the support they are 0.
        let side = |k: usize, m: usize, below: bool| -> f64 {
            let (piece, u) = if below { (k, 1.0) } else { (k.wrapping_sub(1), 0.0) };
            if piece >= n {
                return 0.0;
            }
            horner(&derivative(&self.pieces[piece], m), u) / self.width(piece).powi(m as i32)
        };
        let mut jumps = vec![vec![0.0; n + 1]; n];
        let mut scales = vec![0.0_f64; n];
        for (m, row) in jumps.iter_mut().enumerate() {
            for (k, slot) in row.iter_mut().enumerate() {
                let (lo, hi) = (side(k, m, true), side(k, m, false));
                *slot = (lo - hi).abs();
                scales[m] = scales[m].max(lo.abs()).max(hi.abs());
            }
        }
        let mut max_rel_mismatch = 0.0_f64;
        for m in 0..n.saturating_sub(1) {
            for &j in &jumps[m] {
                max_rel_mismatch = max_rel_mismatch.max(j / scales[m].max(f64::MIN_POSITIVE));
            }
        }
        let top = n - 1;
        let top_jumps: Vec<f64> = jumps[top].clone();
        let sharp = top_jumps.iter().any(|j| *j > 1e-6 * scales[top]);
        SmoothnessReport {
            order: n,
            max_rel_mismatch,
            top_order_jumps: top_jumps,
            sharp,
        }
    }

    /// `h_n` as a one-dimensional field.
    pub fn to_field(&self) -> ScalarField {
        let s = Arc::new(self.clone());
        let inner = self.knots[self.n];
        let knots = self.knots();
        let n = self.n;
        ScalarField::real(1, move |x| s.eval(x[0]))
            .assume_support(Support::Annulus { inner, outer: 1.0 }, Norm::Euclidean)
            .with_radial_knots(knots)
            .with_bound(f64::INFINITY.min(self.sup_bound()))
            .with_smoothness(if n >= 2 { format!("C^{}", n - 2) } else { "piecewise constant".into() })
    }

    /// `x -> h_n(||x||)` on `R^dim`.
    pub fn to_radial_field(&self, dim: usize, norm: Norm) -> ScalarField {
        let s = Arc::new(self.clone());
        let inner = self.knots[self.n];
        ScalarField::radial(dim, norm, move |r| s.eval(r))
            .assume_support(Support::Annulus { inner, outer: 1.0 }, norm)
            .with_radial_knots(self.knots())
            .with_bound(self.sup_bound())
    }

    /// Upper bound on `|h_n|` from the coefficient sums.
    fn sup_bound(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Integrand for PiecewiseEvenSpline {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots.iter().flat_map(|&k| [k, -k]).collect()
    }

    fn support(&self) -> (f64, f64) {
        (self.knots[self.n], 1.0)
    }
}

/// Knot-by-knot derivative agreement of a spline.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessReport {
    pub order: usize,
    /// Largest jump of derivatives of order `<= n-2` over all knots,
    /// including `c^n` and `1`, relative to the size of that derivative.
    pub max_rel_mismatch: f64,
    /// Jumps of the order `n-1` derivative at `c^n, ..., 1` (descending knot
    /// index order as stored: `1, c, ..., c^n`).
    pub top_order_jumps: Vec<f64>,
    /// Some order `n-1` jump is nonzero, so the smoothness is not higher.
    pub sharp: bool,
}

/// `Q_1, ..., Q_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineIntegrals {
    pub q: Vec<f64>,
}

impl SplineIntegrals {
    pub fn compute(n: usize, c: f64) -> Result<Self> {
        Ok(Self {
            q: PiecewiseEvenSpline::family(n, c)?.iter().map(|h| h.integral()).collect(),
        })
    }

    /// `Q_k`, with `Q_0 = 1` by convention.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.q[k - 1]
        }
    }
}

/// `Q_(n-1)` with `Q_0 = 1`: every `x != 0` has exactly one `j` with
/// `c^j |x|` in `(c, 1]`, so `h_1` already sums to one.
pub fn partition_normalizer(n: usize, c: f64) -> Result<f64> {
    if n <= 1 {
        PiecewiseEvenSpline::family(1, c)?;
        return Ok(1.0);
    }
    Ok(PiecewiseEvenSpline::build(n - 1, c)?.integral())
}

/// `g = h_n / Q_(n-1)` with dilation `(c)` and target 1.
pub fn normalized_partition(n: usize, c: f64) -> Result<PartitionSystem> {
    let h = PiecewiseEvenSpline::build(n, c)?;
    let q = partition_normalizer(n, c)?;
    let g = h.to_field().scaled(1.0 / q);
    Ok(PartitionSystem::new(g, SquareMatrix::scalar(1, c), TruncationPolicy::default(), 1.0)?
        .with_nonnegative(true)
        .with_note(format!("g = h_{n} / Q_{} with Q = {q}", n - 1)))
}

/// Compares `K h_(n-1)` by quadrature with the recursion-built `h_n` on
/// `n_points` equispaced points of `[-1.25, 1.25]`.
pub fn transform_consistency_check(
    n: usize,
    c: f64,
    quad: &QuadratureSpec,
    n_points: usize,
    tol: f64,
) -> Result<VerificationReport> {
    if n < 2 {
        return Err(Error::InvalidInput("the consistency check needs n >= 2".into()));
    }
    let fam = PiecewiseEvenSpline::family(n, c)?;
    let (prev, h) = (&fam[n - 2], &fam[n - 1]);
    let pts: Vec<f64> = (0..n_points)
        .map(|i| -1.25 + 2.5 * i as f64 / (n_points.max(2) - 1) as f64)
        .collect();
    let records: Result<Vec<SampleRecord>> = pts
        .par_iter()
        .map(|&x| {
            let k = transform_1d(prev, c, x, quad)?;
            let v = h.eval(x);
            Ok(SampleRecord {
                point: vec![x],
                value: v,
                deviation: (k.value - v).abs(),
                n_terms: 0,
                certified: true,
                extra: Some(k.error),
            })
        })
        .collect();
    let mut rep = VerificationReport::from_samples(
        format!("transform_consistency n={n} c={c}"),
        tol,
        format!("lin:-1.25:1.25:{n_points}"),
        records?,
    );
    rep.note("K h_(n-1) by adaptive Gauss-Kronrod with the knots as breakpoints");
    Ok(rep)
}
