//! Dilation orbits `j -> M^j x` and sums over them.
//!
//! A [`PowerLadder`] stores `M^k` and `M^-k` for `0 <= k <= j_max` together
//! with the bounds `lambda_k ||x|| <= ||M^k x|| <= mu_k ||x||`. If `lambda_p > 1`
//! then `lambda_(k+p) >= lambda_k`, so once `p` consecutive powers push the
//! orbit beyond the outer radius of a support annulus every later power does
//! too. The same argument with `mu_q < 1` handles the inner radius. This is
//! what turns a sum over all of `Z` into an exact finite sum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Support;
use crate::matrix::{singular_values, Norm, SquareMatrix};

/// Relative slack when deciding that a term lies outside a support annulus.
const SUPPORT_SLACK: f64 = 1e-10;

#[derive(Clone, Debug)]
struct Rung {
    matrix: SquareMatrix,
    lambda: f64,
    mu: f64,
}

/// Powers of `M` in one direction with their norm bounds.
#[derive(Clone, Debug)]
struct Side {
    rungs: Vec<Rung>,
    /// First `k >= 1` with `lambda_k > 1`.
    grow_period: Option<usize>,
    /// First `k >= 1` with `mu_k < 1`.
    shrink_period: Option<usize>,
}

impl Side {
    fn build(step: &SquareMatrix, norm: Norm, j_max: usize) -> Side {
        let d = step.dim();
        let mut mats = vec![SquareMatrix::identity(d)];
        for k in 1..=j_max {
            let next = step.matmul(&mats[k - 1]);
            if !next.is_finite() || next.max_abs_entry() == 0.0 {
                break;
            }
            mats.push(next);
        }
        let rungs: Vec<Rung> = mats
            .into_iter()
            .enumerate()
            .map(|(k, matrix)| {
                let (lambda, mu) = if k == 0 { (1.0, 1.0) } else { bounds(&matrix, norm) };
                Rung { matrix, lambda, mu }
            })
            .collect();
        let grow_period = rungs.iter().skip(1).position(|r| r.lambda > 1.0).map(|p| p + 1);
        let shrink_period = rungs.iter().skip(1).position(|r| r.mu < 1.0).map(|p| p + 1);
        Side {
            rungs,
            grow_period,
            shrink_period,
        }
    }
}

fn bounds(p: &SquareMatrix, norm: Norm) -> (f64, f64) {
    match norm {
        Norm::Euclidean => {
            let sv = singular_values(p);
            (*sv.last().unwrap(), sv[0])
        }
        Norm::Max => (norm.lower_bound(p), norm.operator_norm(p)),
    }
}

/// Precomputed powers `M^k`, `M^-k` and their bounds in a fixed norm.
#[derive(Clone, Debug)]
pub struct PowerLadder {
    norm: Norm,
    forward: Side,
    backward: Side,
}

impl PowerLadder {
    pub fn new(m: &SquareMatrix, norm: Norm, j_max: usize) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::InvalidInput("j_max must be at least 1".into()));
        }
        let inv = m.inverse()?;
        Ok(Self {
            norm,
            forward: Side::build(m, norm, j_max),
            backward: Side::build(&inv, norm, j_max),
        })
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.forward.rungs[0].matrix.dim()
    }

    fn side(&self, j: i32) -> (&Side, usize) {
        if j >= 0 {
            (&self.forward, j as usize)
        } else {
            (&self.backward, j.unsigned_abs() as usize)
        }
    }

    /// Largest `|j|` available in the direction of `j`'s sign.
    pub fn reach(&self, forward: bool) -> usize {
        let side = if forward { &self.forward } else { &self.backward };
        side.rungs.len() - 1
    }

    pub fn matrix(&self, j: i32) -> Option<&SquareMatrix> {
        let (side, k) = self.side(j);
        side.rungs.get(k).map(|r| &r.matrix)
    }

    /// `(lambda_j, mu_j)`.
    pub fn bounds(&self, j: i32) -> Option<(f64, f64)> {
        let (side, k) = self.side(j);
        side.rungs.get(k).map(|r| (r.lambda, r.mu))
    }

    pub fn apply(&self, j: i32, x: &[f64]) -> Option<Vec<f64>> {
        self.matrix(j).map(|m| m.apply(x))
    }

    /// Whether `M^j x` with `||x|| = radius` certainly misses the support,
    /// and on which side.
    fn classify(&self, j: i32, radius: f64, support: &Support) -> Placement {
        let (lo, hi) = support.radii();
        let (lambda, mu) = self.bounds(j).expect("index within ladder");
        if lambda * radius * (1.0 - SUPPORT_SLACK) > hi {
            Placement::Beyond
        } else if mu * radius * (1.0 + SUPPORT_SLACK) < lo {
            Placement::Inside
        } else {
            Placement::Maybe
        }
    }

    /// Whether orbit points in this direction tend to infinity (`Some(true)`),
    /// to zero (`Some(false)`), or neither is established.
    pub fn tends_to_infinity(&self, forward: bool) -> Option<bool> {
        let side = if forward { &self.forward } else { &self.backward };
        match (side.grow_period, side.shrink_period) {
            (Some(_), _) => Some(true),
            (None, Some(_)) => Some(false),
            _ => None,
        }
    }

    /// Range of `j` (within the ladder) for which `M^j x` may meet the
    /// support, together with whether both ends were closed by the period
    /// argument.
    pub fn active_range(&self, x: &[f64], support: &Support) -> (i32, i32, bool) {
        let radius = self.norm.of(x);
        let mut lo_j = 0;
        let mut hi_j = -1;
        let mut closed = true;
        for forward in [true, false] {
            let walk = self.walk(radius, support, forward);
            closed &= walk.closed;
            for j in walk.active {
                if hi_j < lo_j {
                    lo_j = j;
                    hi_j = j;
                } else {
                    lo_j = lo_j.min(j);
                    hi_j = hi_j.max(j);
                }
            }
        }
        (lo_j, hi_j, closed)
    }

    fn walk(&self, radius: f64, support: &Support, forward: bool) -> Walk {
        let side = if forward { &self.forward } else { &self.backward };
        let mut active = Vec::new();
        let (mut beyond_run, mut inside_run) = (0usize, 0usize);
        let start = if forward { 0 } else { 1 };
        for k in start..side.rungs.len() {
            let j = if forward { k as i32 } else { -(k as i32) };
            match self.classify(j, radius, support) {
                Placement::Beyond => {
                    beyond_run += 1;
                    inside_run = 0;
                }
                Placement::Inside => {
                    inside_run += 1;
                    beyond_run = 0;
                }
                Placement::Maybe => {
                    beyond_run = 0;
                    inside_run = 0;
                    active.push(j);
                }
            }
            let closed = side.grow_period.is_some_and(|p| beyond_run >= p)
                || side.shrink_period.is_some_and(|q| inside_run >= q);
            if closed {
                return Walk { active, closed: true };
            }
        }
        Walk { active, closed: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Placement {
    Beyond,
    Inside,
    Maybe,
}

struct Walk {
    active: Vec<i32>,
    closed: bool,
}

/// Bound on the part of an orbit sum not yet added.
///
/// Called with the orbit point where summation would continue and the
/// direction; returns an upper bound on the absolute remainder, if known.
pub type TailBound<'a> = dyn Fn(&[f64], bool) -> Option<f64> + Sync + 'a;

/// Result of summing `f(M^j x)` over `j` in `Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitSum {
    pub value: Complex64,
    /// Terms actually evaluated.
    pub n_terms: usize,
    pub j_min: i32,
    pub j_max: i32,
    /// Both directions ended by a support or tail certificate rather than by
    /// the ladder cap.
    pub certified: bool,
}

impl PowerLadder {
    /// Sums `f(M^j x)` over all `j`, skipping indices whose orbit point
    /// certainly misses `support`, and stopping each direction once the
    /// support argument closes it or `tail` reports a remainder within
    /// `tail_tol / 2`.
    pub fn orbit_sum<F>(
        &self,
        x: &[f64],
        support: &Support,
        tail: Option<&TailBound<'_>>,
        tail_tol: f64,
        f: F,
    ) -> OrbitSum
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let a = self.side_sum(x, support, tail, tail_tol, &f, true);
        let b = self.side_sum(x, support, tail, tail_tol, &f, false);
        OrbitSum::join(a, b)
    }

    /// As [`orbit_sum`](Self::orbit_sum) but over `j >= 0` only.
    pub fn forward_sum<F>(
        &self,
        x: &[f64],
        support: &Support,
        tail: Option<&TailBound<'_>>,
        tail_tol: f64,
        f: F,
    ) -> OrbitSum
    where
        F: Fn(&[f64]) -> Complex64,
    {
        self.side_sum(x, support, tail, tail_tol, &f, true)
    }

    fn side_sum(
        &self,
        x: &[f64],
        support: &Support,
        tail: Option<&TailBound<'_>>,
        tail_tol: f64,
        f: &dyn Fn(&[f64]) -> Complex64,
        forward: bool,
    ) -> OrbitSum {
        let radius = self.norm.of(x);
        let side = if forward { &self.forward } else { &self.backward };
        let mut out = OrbitSum::empty();
        let (mut beyond_run, mut inside_run) = (0usize, 0usize);
        let start = if forward { 0 } else { 1 };
        let mut closed = false;
        for k in start..side.rungs.len() {
            let j = if forward { k as i32 } else { -(k as i32) };
            let place = self.classify(j, radius, support);
            match place {
                Placement::Beyond => {
                    beyond_run += 1;
                    inside_run = 0;
                }
                Placement::Inside => {
                    inside_run += 1;
                    beyond_run = 0;
                }
                Placement::Maybe => {
                    beyond_run = 0;
                    inside_run = 0;
                }
            }
            if side.grow_period.is_some_and(|p| beyond_run >= p)
                || side.shrink_period.is_some_and(|q| inside_run >= q)
            {
                closed = true;
                break;
            }
            let y = side.rungs[k].matrix.apply(x);
            // The tail callback bounds all terms from this index on.
            if let Some(bound) = tail {
                if bound(&y, forward).is_some_and(|r| r <= 0.5 * tail_tol) {
                    closed = true;
                    break;
                }
            }
            if place == Placement::Maybe {
                out.add(j, f(&y));
            }
        }
        out.certified = closed;
        out
    }

    /// Radii `[1, factor)` of a band that every orbit `M^j x`, `x != 0`,
    /// passes through: `factor` is `mu_1` of whichever of `M`, `M^-1` grows.
    pub fn scale_band_factor(&self) -> Option<f64> {
        match self.tends_to_infinity(true) {
            Some(true) => self.bounds(1).map(|b| b.1),
            Some(false) => self.bounds(-1).map(|b| b.1),
            None => None,
        }
    }
}

impl OrbitSum {
    fn empty() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            n_terms: 0,
            j_min: 0,
            j_max: -1,
            certified: true,
        }
    }

    fn add(&mut self, j: i32, v: Complex64) {
        self.value += v;
        if self.n_terms == 0 {
            self.j_min = j;
            self.j_max = j;
        } else {
            self.j_min = self.j_min.min(j);
            self.j_max = self.j_max.max(j);
        }
        self.n_terms += 1;
    }

    fn join(a: OrbitSum, b: OrbitSum) -> OrbitSum {
        let (j_min, j_max) = match (a.n_terms, b.n_terms) {
            (0, _) => (b.j_min, b.j_max),
            (_, 0) => (a.j_min, a.j_max),
            _ => (a.j_min.min(b.j_min), a.j_max.max(b.j_max)),
        };
        OrbitSum {
            value: a.value + b.value,
            n_terms: a.n_terms + b.n_terms,
            j_min,
            j_max,
            certified: a.certified && b.certified,
        }
    }
}
