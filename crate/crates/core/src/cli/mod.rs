//! Command-line front end.
//!
//! Exit codes: 0 all checks passed, 1 checks ran and some failed, 2 invalid
//! input or refusal, 3 I/O failure. Reports go to the diagnostic stream as
//! `key = value` lines; data goes to `--out`/`--csv` files or stdout.

pub mod config;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::field::{RadialProfile, ScalarField};
use crate::frames::{
    build_radial_dual_pair, build_spline_dual_pair, frame_bounds, plateau_deviation, verify_dual_relation,
    FrameGeneratorPair,
};
use crate::grid::GridSpec;
use crate::matrix::{expansion_certificate, Norm, SquareMatrix};
use crate::pou::{build_radial_pou, square_sum_bounds, verify_partition};
use crate::quadrature::QuadratureSpec;
use crate::report::fmt_f64;
use crate::spline::PiecewiseEvenSpline;
use crate::transform::{check_c, transform_1d, Func, Integrand};

use config::{parse_value, Config};

#[derive(Parser, Debug)]
#[command(name = "scaling-pou", version, about = "Scaling partitions of unity and wavelet frame generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partitions of unity from radial profiles.
    #[command(subcommand)]
    Pou(PouCmd),
    /// The partition-preserving integral transform.
    #[command(subcommand)]
    Transform(TransformCmd),
    /// Geometric-knot splines.
    #[command(subcommand)]
    Spline(SplineCmd),
    /// Wavelet frame generator pairs.
    #[command(subcommand)]
    Frame(FrameCmd),
}

#[derive(Subcommand, Debug)]
enum PouCmd {
    /// Build g(x) = r(||x||) - r(||Mx||) and report its certificate.
    Build {
        /// gaussian, exp-abs, plateau-linear:R1:R, step:R, or a profile file.
        #[arg(long, default_value = "gaussian")]
        profile: String,
        /// A number, a nested array such as [[2,0],[0,2]], or a file.
        #[arg(long, default_value = "2")]
        matrix: String,
        #[arg(long, default_value = "euclid")]
        norm: String,
        /// Refuse unless g is guaranteed nonnegative.
        #[arg(long)]
        nonnegative: bool,
        /// Emit g on this grid.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the dilation sum of g is 1.
    Verify {
        #[arg(long, default_value = "gaussian")]
        profile: String,
        #[arg(long, default_value = "2")]
        matrix: String,
        #[arg(long, default_value = "euclid")]
        norm: String,
        /// Radii per direction.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Sample one scale band instead of [1e-3, 1e3].
        #[arg(long)]
        band_only: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum TransformCmd {
    /// Evaluate Kf on a grid; CSV columns gamma, value, quad_error.
    Eval {
        /// gaussian, exp-abs, or spline:n[:c].
        #[arg(long)]
        f: String,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value = "lin:-2:2:101", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Emit {
    Pieces,
    Csv,
}

#[derive(Subcommand, Debug)]
enum SplineCmd {
    /// Build h_n and print its pieces or values.
    Build {
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'c')]
        c: f64,
        #[arg(long, value_enum, default_value = "pieces")]
        emit: Emit,
        #[arg(long, default_value = "lin:-1.25:1.25:251", allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum FrameCmd {
    /// The spline pair psi_hat = h_n with its dual.
    #[command(name = "build-1d")]
    Build1d {
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'c')]
        c: f64,
        #[arg(short = 'b')]
        b: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The radial pair on R^d from a plateau profile.
    #[command(name = "build-radial")]
    BuildRadial {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        matrix: String,
        #[arg(short = 'b')]
        b: Option<f64>,
        #[arg(long, default_value = "euclid")]
        norm: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the dual relation, plateau and frame bounds of a saved pair.
    Verify {
        #[arg(long)]
        pair: PathBuf,
        /// Samples for the dual relation; defaults to the support of psi_hat.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Failure of a command, mapped onto an exit code.
#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 3,
            Failure::Lib(Error::Quadrature { .. } | Error::InvariantViolated(_)) => 1,
            Failure::Lib(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) => format!("error: {m}"),
            Failure::Lib(e) => format!("error: {e}"),
        }
    }
}

type Outcome = std::result::Result<bool, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    let mut diag = String::new();
    let outcome = dispatch(cli.command, stdout, &mut diag);
    let _ = write!(stderr, "{diag}");
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.message());
            f.code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, diag: &mut String) -> Outcome {
    match cmd {
        Command::Pou(PouCmd::Build {
            profile,
            matrix,
            norm,
            nonnegative,
            grid,
            out,
        }) => {
            let (r, m, norm) = (parse_profile(&profile)?, parse_matrix(&matrix)?, parse_norm(&norm)?);
            let cert = expansion_certificate(&m, norm)?;
            diag.push_str(&cert.to_key_value());
            let sys = build_radial_pou(&r, &m, norm, nonnegative)?;
            let _ = writeln!(diag, "nonnegative = {}", sys.is_nonnegative());
            let (lo, hi) = sys.g().support().radii();
            let _ = writeln!(diag, "support = [{lo}, {hi}]");
            for n in sys.notes() {
                let _ = writeln!(diag, "note = {n}");
            }
            if let Some(g) = grid {
                let csv = emit_grid(sys.g(), &g.parse()?)?;
                write_output(out.as_deref(), &csv, stdout)?;
            }
            Ok(true)
        }
        Command::Pou(PouCmd::Verify {
            profile,
            matrix,
            norm,
            samples,
            band_only,
            tol,
            csv,
        }) => {
            let (r, m, norm) = (parse_profile(&profile)?, parse_matrix(&matrix)?, parse_norm(&norm)?);
            let sys = build_radial_pou(&r, &m, norm, false)?;
            let grid = if band_only {
                let factor = sys
                    .scale_band_factor()
                    .ok_or_else(|| Error::Refused("M has no scale band".into()))?;
                GridSpec::band(1.0, factor, samples)
            } else {
                GridSpec::log(1e-3, 1e3, samples)
            };
            let pts = grid.points(m.dim(), norm)?;
            let mut rep = verify_partition(&sys, &pts, tol)?;
            rep.grid_spec = grid.to_string();
            diag.push_str(&rep.to_key_value());
            let mut ok = rep.passed;
            if sys.is_nonnegative() {
                let sq = square_sum_bounds(&sys, &pts)?;
                let _ = writeln!(diag, "square_sum_min = {}", fmt_f64(sq.lower));
                let _ = writeln!(diag, "square_sum_max = {}", fmt_f64(sq.upper));
                ok &= sq.certified;
            }
            if let Some(path) = csv {
                write_file(&path, &rep.to_csv("sum", None))?;
            }
            Ok(ok)
        }
        Command::Transform(TransformCmd::Eval {
            f,
            c,
            grid,
            abs_tol,
            out,
        }) => {
            check_c(c)?;
            let quad = QuadratureSpec::new(abs_tol, QuadratureSpec::default().max_depth)?;
            let integrand = parse_integrand(&f)?;
            let grid: GridSpec = grid.parse()?;
            let mut csv = String::from("gamma,value,quad_error\n");
            let mut worst = 0.0_f64;
            for x in grid.points(1, Norm::Euclidean)? {
                let k = transform_1d(integrand.as_ref(), c, x[0], &quad)?;
                worst = worst.max(k.error);
                let _ = writeln!(csv, "{},{},{}", fmt_f64(x[0]), fmt_f64(k.value), fmt_f64(k.error));
            }
            let _ = writeln!(diag, "f = {f}");
            let _ = writeln!(diag, "c = {c}");
            let _ = writeln!(diag, "grid = {grid}");
            let _ = writeln!(diag, "max_quad_error = {worst:.6e}");
            write_output(out.as_deref(), &csv, stdout)?;
            Ok(true)
        }
        Command::Spline(SplineCmd::Build { n, c, emit, grid, out }) => {
            let h = PiecewiseEvenSpline::build(n, c)?;
            let text = match emit {
                Emit::Pieces => h.pieces_dump(),
                Emit::Csv => emit_grid(&h.to_field(), &grid.parse()?)?,
            };
            let s = h.smoothness();
            let _ = writeln!(diag, "n = {n}");
            let _ = writeln!(diag, "c = {c}");
            let _ = writeln!(diag, "integral = {}", fmt_f64(h.integral()));
            let _ = writeln!(diag, "smoothness_mismatch = {:.6e}", s.max_rel_mismatch);
            let _ = writeln!(diag, "sharp = {}", s.sharp);
            write_output(out.as_deref(), &text, stdout)?;
            Ok(true)
        }
        Command::Frame(FrameCmd::Build1d { n, c, b, out }) => {
            let pair = build_spline_dual_pair(n, c, b)?;
            finish_build(&pair, out.as_deref(), stdout, diag)
        }
        Command::Frame(FrameCmd::BuildRadial {
            profile,
            matrix,
            b,
            norm,
            out,
        }) => {
            let pair = build_radial_dual_pair(
                &parse_profile(&profile)?,
                &parse_matrix(&matrix)?,
                b,
                parse_norm(&norm)?,
            )?;
            finish_build(&pair, out.as_deref(), stdout, diag)
        }
        Command::Frame(FrameCmd::Verify { pair, grid, tol, csv }) => {
            let text = read_file(&pair)?;
            let pair = load_pair(&Config::parse(&text)?)?;
            let grid = match grid {
                Some(g) => g.parse()?,
                None => {
                    let (lo, hi) = pair.psi_support();
                    GridSpec::log(lo, hi, if pair.dim() == 1 { 1000 } else { 200 })
                }
            };
            let pts = grid.points(pair.dim(), pair.norm())?;
            let mut rep = verify_dual_relation(&pair, &pts, tol)?;
            rep.report.grid_spec = grid.to_string();
            diag.push_str(&rep.to_key_value());
            let mut ok = rep.passed();
            if pair.certificates().plateau_value.is_some() {
                let dev = plateau_deviation(&pair, &pts)?;
                let _ = writeln!(diag, "plateau_deviation = {dev:.6e}");
                ok &= dev <= tol;
            }
            let fb = frame_bounds(pair.psi_hat(), pair.dilation(), pair.b(), None)?;
            diag.push_str(&fb.to_key_value());
            if let Some(path) = csv {
                write_file(&path, &rep.report.to_frequency_csv("dual_sum", Some("sq_sum")))?;
            }
            Ok(ok)
        }
    }
}

fn finish_build(pair: &FrameGeneratorPair, out: Option<&Path>, stdout: &mut dyn Write, diag: &mut String) -> Outcome {
    let text = pair.to_text();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let _ = writeln!(diag, "{line}");
    }
    write_output(out, &text, stdout)?;
    Ok(true)
}

/// CSV of `field` on `grid`: `gamma,value` in one dimension, otherwise
/// `radius,direction,x0..,value`, direction-major.
pub fn emit_grid(field: &ScalarField, grid: &GridSpec) -> crate::error::Result<String> {
    let d = field.dim();
    let pts = grid.points(d, field.norm())?;
    let mut out = String::new();
    if d == 1 {
        out.push_str("gamma,value\n");
        for x in &pts {
            let _ = writeln!(out, "{},{}", fmt_f64(x[0]), fmt_f64(field.eval_re(x)));
        }
        return Ok(out);
    }
    let coords: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let _ = writeln!(out, "radius,direction,{},value", coords.join(","));
    let radii = grid.radii();
    for (i, x) in pts.iter().enumerate() {
        let row: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(radii[i % radii.len()]),
            i / radii.len(),
            row.join(","),
            fmt_f64(field.eval_re(x))
        );
    }
    Ok(out)
}

fn parse_norm(s: &str) -> crate::error::Result<Norm> {
    s.parse()
}

/// Inline number or nested array, else a file with a `matrix` key.
fn parse_matrix(s: &str) -> std::result::Result<SquareMatrix, Failure> {
    let value = match parse_value(s) {
        Ok(v) if v.as_rows().is_some() => v,
        _ => Config::parse(&read_file(Path::new(s))?)?.require("matrix")?.clone(),
    };
    let rows = value
        .as_rows()
        .ok_or_else(|| Error::InvalidInput(format!("'{s}' is not a square matrix")))?;
    Ok(SquareMatrix::from_rows(&rows)?)
}

/// Built-in profile name, else a file with `profile`, `r1`, `r` keys.
fn parse_profile(s: &str) -> std::result::Result<RadialProfile, Failure> {
    if let Some(p) = builtin_profile(s)? {
        return Ok(p);
    }
    let cfg = Config::parse(&read_file(Path::new(s))?)?;
    let name = cfg.str("profile")?;
    let spec = match name {
        "plateau-linear" => format!("plateau-linear:{}:{}", cfg.f64("r1")?, cfg.f64("r")?),
        "step" => format!("step:{}", cfg.f64("r")?),
        other => other.to_string(),
    };
    builtin_profile(&spec)?.ok_or_else(|| Error::InvalidInput(format!("unknown profile '{name}'")).into())
}

fn builtin_profile(s: &str) -> crate::error::Result<Option<RadialProfile>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> crate::error::Result<f64> {
        parts
            .get(i)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::InvalidInput(format!("profile '{s}' needs a number in position {i}")))
    };
    Ok(match parts[0] {
        "gaussian" if parts.len() == 1 => Some(RadialProfile::gaussian()),
        "exp-abs" if parts.len() == 1 => Some(RadialProfile::exp_abs()),
        "plateau-linear" if parts.len() == 3 => Some(RadialProfile::plateau_linear(num(1)?, num(2)?)?),
        "step" if parts.len() == 2 => Some(RadialProfile::step(num(1)?)?),
        "plateau-linear" | "step" | "gaussian" | "exp-abs" => {
            return Err(Error::InvalidInput(format!("bad parameters in profile '{s}'")))
        }
        _ => None,
    })
}

fn parse_integrand(s: &str) -> crate::error::Result<Box<dyn Integrand>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["gaussian"] => Ok(Box::new(Func::new(|t: f64| (-t * t).exp()))),
        ["exp-abs"] => Ok(Box::new(Func::new(|t: f64| (-t.abs()).exp()).with_breakpoints(vec![0.0]))),
        ["spline", n] | ["spline", n, _] => {
            let n: usize = n
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad spline order in '{s}'")))?;
            let c: f64 = match parts.get(2) {
                Some(c) => c.parse().map_err(|_| Error::InvalidInput(format!("bad c in '{s}'")))?,
                None => 0.5,
            };
            Ok(Box::new(PiecewiseEvenSpline::build(n, c)?))
        }
        _ => Err(Error::InvalidInput(format!(
            "unknown function '{s}', expected gaussian, exp-abs or spline:n[:c]"
        ))),
    }
}

fn load_pair(cfg: &Config) -> std::result::Result<FrameGeneratorPair, Failure> {
    let b = cfg.f64("b")?;
    match cfg.str("kind")? {
        "spline" => {
            let n = cfg.f64("n")?;
            if n.fract() != 0.0 || n < 0.0 {
                return Err(Error::InvalidInput(format!("n must be a nonnegative integer, got {n}")).into());
            }
            Ok(build_spline_dual_pair(n as usize, cfg.f64("c")?, b)?)
        }
        "radial" => {
            let profile = match cfg.str("profile")? {
                "plateau-linear" => RadialProfile::plateau_linear(cfg.f64("r1")?, cfg.f64("r")?)?,
                "step" => RadialProfile::step(cfg.f64("r")?)?,
                other => parse_profile(other)?,
            };
            let rows = cfg
                .require("matrix")?
                .as_rows()
                .ok_or_else(|| Error::InvalidInput("'matrix' must be a nested array".into()))?;
            let norm = match cfg.get("norm") {
                Some(_) => parse_norm(cfg.str("norm")?)?,
                None => Norm::Euclidean,
            };
            Ok(build_radial_dual_pair(&profile, &SquareMatrix::from_rows(&rows)?, Some(b), norm)?)
        }
        other => Err(Error::InvalidInput(format!("cannot rebuild a pair of kind '{other}'")).into()),
    }
}

fn read_file(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}"))),
    }
}
