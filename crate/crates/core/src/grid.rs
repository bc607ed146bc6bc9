//! Deterministic sample grids: radii times unit directions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Norm;

/// Seed for the random directions used when `d > 3`.
pub const DIRECTION_SEED: u64 = 0x5CA1E;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

/// Radii `lo ..= hi` (or `lo .. hi` when `half_open`) in `n_radii` steps,
/// times `n_dirs` directions.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub spacing: Spacing,
    pub lo: f64,
    pub hi: f64,
    pub n_radii: usize,
    /// `None` picks the default for the dimension.
    pub n_dirs: Option<usize>,
    pub half_open: bool,
}

impl GridSpec {
    pub fn log(lo: f64, hi: f64, n_radii: usize) -> Self {
        Self {
            spacing: Spacing::Log,
            lo,
            hi,
            n_radii,
            n_dirs: None,
            half_open: false,
        }
    }

    pub fn linear(lo: f64, hi: f64, n_radii: usize) -> Self {
        Self {
            spacing: Spacing::Linear,
            ..Self::log(lo, hi, n_radii)
        }
    }

    /// Log-spaced radii over the band `[lo, lo * factor)`.
    pub fn band(lo: f64, factor: f64, n_radii: usize) -> Self {
        Self {
            half_open: true,
            ..Self::log(lo, lo * factor, n_radii)
        }
    }

    pub fn with_dirs(mut self, n_dirs: usize) -> Self {
        self.n_dirs = Some(n_dirs);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_radii == 0 {
            return Err(Error::InvalidInput("grid needs at least one radius".into()));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::InvalidInput(format!("grid range [{}, {}] is invalid", self.lo, self.hi)));
        }
        if self.spacing == Spacing::Log && self.lo <= 0.0 {
            return Err(Error::InvalidInput("log grids need lo > 0".into()));
        }
        if self.n_dirs == Some(0) {
            return Err(Error::InvalidInput("grid needs at least one direction".into()));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        let n = self.n_radii;
        let steps = if self.half_open || n == 1 { n } else { n - 1 };
        (0..n)
            .map(|i| {
                let t = if steps == 0 { 0.0 } else { i as f64 / steps as f64 };
                match self.spacing {
                    Spacing::Log => self.lo * (self.hi / self.lo).powf(t),
                    Spacing::Linear => self.lo + (self.hi - self.lo) * t,
                }
            })
            .collect()
    }

    /// Every radius times every direction, direction-major.
    pub fn points(&self, dim: usize, norm: Norm) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let radii = self.radii();
        let dirs = directions(dim, self.n_dirs.unwrap_or(default_dirs(dim)), norm);
        let mut pts = Vec::with_capacity(radii.len() * dirs.len());
        for u in &dirs {
            for &r in &radii {
                pts.push(u.iter().map(|v| v * r).collect());
            }
        }
        Ok(pts)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.spacing {
            Spacing::Log => "log",
            Spacing::Linear => "lin",
        };
        write!(f, "{kind}:{}:{}:{}", self.lo, self.hi, self.n_radii)?;
        if let Some(n) = self.n_dirs {
            write!(f, "x{n}")?;
        }
        if self.half_open {
            write!(f, " (half-open)")?;
        }
        Ok(())
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `[log:|lin:]lo:hi:n[xdirs]`; log is the default spacing.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad grid spec '{s}', expected [log:|lin:]lo:hi:n[xdirs]"));
        let mut parts: Vec<&str> = s.trim().split(':').collect();
        let spacing = match parts.first() {
            Some(&"log") => {
                parts.remove(0);
                Spacing::Log
            }
            Some(&"lin") => {
                parts.remove(0);
                Spacing::Linear
            }
            _ => Spacing::Log,
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let (n, dirs) = match parts[2].split_once('x') {
            Some((n, d)) => (n, Some(d.trim().parse::<usize>().map_err(|_| bad())?)),
            None => (parts[2], None),
        };
        let n_radii: usize = n.trim().parse().map_err(|_| bad())?;
        let spec = GridSpec {
            spacing,
            lo,
            hi,
            n_radii,
            n_dirs: dirs,
            half_open: false,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// 1 for `d = 1` (radii used as signed coordinates), 64 for `d = 2, 3`,
/// 256 otherwise.
pub fn default_dirs(dim: usize) -> usize {
    match dim {
        1 => 1,
        2 | 3 => 64,
        _ => 256,
    }
}

/// `n` unit directions in `R^dim` (unit in `norm`).
///
/// `d = 1` gives `+1` and, for `n >= 2`, `-1`; `d = 2` equally spaced
/// angles; `d = 3` a Fibonacci sphere; higher dimensions normalised
/// Gaussian vectors from a fixed seed.
pub fn directions(dim: usize, n: usize, norm: Norm) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = match dim {
        1 if n == 1 => vec![vec![1.0]],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5.0_f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
            (0..n)
                .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect()
        }
    };
    raw.into_iter().map(|v| norm.normalize(&v)).collect()
}
