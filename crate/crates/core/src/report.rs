//! Verification reports shared by the partition, spline and frame checks.

use std::fmt::Write as _;

/// One evaluated sample of a check.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub point: Vec<f64>,
    pub value: f64,
    pub deviation: f64,
    pub n_terms: usize,
    pub certified: bool,
    /// Check-specific extra column (for example the square sum).
    pub extra: Option<f64>,
}

/// Outcome of a sampled check; `passed` holds iff `max_deviation <= tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub check_name: String,
    pub max_deviation: f64,
    pub argmax_point: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub route_notes: Vec<String>,
    pub grid_spec: String,
    pub samples: Vec<SampleRecord>,
    pub skipped: usize,
}

impl VerificationReport {
    /// Builds the report from evaluated samples; NaN deviations count as
    /// failures.
    pub fn from_samples(
        check_name: impl Into<String>,
        tolerance: f64,
        grid_spec: impl Into<String>,
        samples: Vec<SampleRecord>,
    ) -> Self {
        let mut max_deviation = 0.0_f64;
        let mut argmax_point = Vec::new();
        let mut nan = false;
        for s in &samples {
            if s.deviation.is_nan() {
                if !nan {
                    argmax_point = s.point.clone();
                }
                nan = true;
            } else if !nan && (argmax_point.is_empty() || s.deviation > max_deviation) {
                max_deviation = s.deviation;
                argmax_point = s.point.clone();
            }
        }
        if nan {
            max_deviation = f64::NAN;
        }
        Self {
            check_name: check_name.into(),
            max_deviation,
            argmax_point,
            tolerance,
            passed: max_deviation <= tolerance,
            route_notes: Vec::new(),
            grid_spec: grid_spec.into(),
            samples,
            skipped: 0,
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.route_notes.push(note.into());
    }

    pub fn uncertified(&self) -> usize {
        self.samples.iter().filter(|s| !s.certified).count()
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "check = {}", self.check_name);
        let _ = writeln!(out, "passed = {}", self.passed);
        let _ = writeln!(out, "max_deviation = {:.6e}", self.max_deviation);
        let _ = writeln!(out, "tolerance = {:.6e}", self.tolerance);
        let _ = writeln!(out, "argmax = {}", fmt_point(&self.argmax_point));
        let _ = writeln!(out, "samples = {}", self.samples.len());
        let _ = writeln!(out, "skipped = {}", self.skipped);
        let _ = writeln!(out, "uncertified = {}", self.uncertified());
        let _ = writeln!(out, "grid = {}", self.grid_spec);
        for n in &self.route_notes {
            let _ = writeln!(out, "note = {n}");
        }
        out
    }

    /// CSV with `x0..x(d-1)`, the value column, deviation, terms and the
    /// optional extra column.
    pub fn to_csv(&self, value_name: &str, extra_name: Option<&str>) -> String {
        self.table("x", value_name, extra_name, true)
    }

    /// As [`to_csv`](Self::to_csv) with `gamma` coordinates (`gamma0..` when
    /// `d > 1`) and no term count.
    pub fn to_frequency_csv(&self, value_name: &str, extra_name: Option<&str>) -> String {
        self.table("gamma", value_name, extra_name, false)
    }

    fn table(&self, prefix: &str, value_name: &str, extra_name: Option<&str>, terms: bool) -> String {
        let dim = self.samples.first().map_or(0, |s| s.point.len());
        let mut out = String::new();
        let mut header: Vec<String> = if dim == 1 && !terms {
            vec![prefix.to_string()]
        } else {
            (0..dim).map(|i| format!("{prefix}{i}")).collect()
        };
        header.push(value_name.into());
        header.push("deviation".into());
        if terms {
            header.push("n_terms".into());
        }
        if let Some(e) = extra_name {
            header.push(e.into());
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for s in &self.samples {
            let mut row: Vec<String> = s.point.iter().map(|v| fmt_f64(*v)).collect();
            row.push(fmt_f64(s.value));
            row.push(fmt_f64(s.deviation));
            if terms {
                row.push(s.n_terms.to_string());
            }
            if extra_name.is_some() {
                row.push(s.extra.map_or_else(String::new, fmt_f64));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}
