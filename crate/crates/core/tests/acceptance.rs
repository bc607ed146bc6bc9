//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits nonzero if any fails.

use std::time::{Duration, Instant};

use scaling_pou::frames::{
    build_radial_dual_pair, build_spline_dual_pair, compute_index_set, frame_bounds, plateau_deviation,
    verify_dual_relation, FrameDilation,
};
use scaling_pou::grid::GridSpec;
use scaling_pou::matrix::expansion_certificate;
use scaling_pou::pou::{build_radial_pou, square_sum_bounds, verify_partition};
use scaling_pou::quadrature::QuadratureSpec;
use scaling_pou::spline::{normalized_partition, transform_consistency_check, PiecewiseEvenSpline, SplineIntegrals};
use scaling_pou::{Error, Norm, RadialProfile, SquareMatrix};

const CS: [f64; 3] = [0.3, 0.5, 0.8];

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn lin(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `n` points of `(lo, hi]`.
fn open_closed(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn h2_closed(c: f64, g: f64) -> f64 {
    let x = g.abs();
    if x <= c * c || x >= 1.0 {
        0.0
    } else if x <= c {
        2.0 / c * x - 2.0 * c
    } else {
        2.0 - 2.0 * x
    }
}

fn h3_closed(c: f64, g: f64) -> f64 {
    let x = g.abs();
    let (c2, c3) = (c * c, c * c * c);
    if x <= c3 || x >= 1.0 {
        0.0
    } else if x <= c2 {
        2.0 / c3 * x * x - 4.0 * x + 2.0 * c3
    } else if x <= c {
        -2.0 * (1.0 / c + 1.0 / c2) * x * x + 4.0 * (c + 1.0 / c) * x - 2.0 * (c + c2)
    } else {
        2.0 * (1.0 - x) * (1.0 - x)
    }
}

fn spline_closed_forms() -> Outcome {
    let mut worst = 0.0_f64;
    for c in CS {
        let (h2, h3) = (PiecewiseEvenSpline::build(2, c).unwrap(), PiecewiseEvenSpline::build(3, c).unwrap());
        for g in lin(-1.2, 1.2, 1000) {
            worst = worst.max((h2.eval(g) - h2_closed(c, g)).abs());
            worst = worst.max((h3.eval(g) - h3_closed(c, g)).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |h - closed form| = {worst:.3e} (tol 1e-12)"))
}

fn recursion_vs_transform() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    let mut all = true;
    for c in CS {
        for n in 2..=10 {
            match transform_consistency_check(n, c, &quad, 1000, 1e-10) {
                Ok(rep) => {
                    all &= rep.passed;
                    worst = worst.max(rep.max_deviation);
                }
                Err(e) => return outcome(false, format!("n={n} c={c}: {e}")),
            }
        }
    }
    outcome(all && worst <= 1e-10, format!("max |K h_(n-1) - h_n| = {worst:.3e} (tol 1e-10)"))
}

fn spline_partition() -> Outcome {
    let mut worst = 0.0_f64;
    let mut oracle_worst = 0.0_f64;
    for c in CS {
        let q = SplineIntegrals::compute(9, c).unwrap();
        for n in 2..=10 {
            let sys = normalized_partition(n, c).unwrap();
            let pts: Vec<Vec<f64>> = open_closed(c, 1.0, 1000).into_iter().map(|x| vec![x]).collect();
            let rep = verify_partition(&sys, &pts, 1e-12).unwrap();
            worst = worst.max(rep.max_deviation);
            if rep.uncertified() > 0 {
                return outcome(false, format!("n={n} c={c}: uncertified sums"));
            }
            // Direct finite sum: h_n(c^j x) != 0 needs c^n < c^j x <= 1.
            let h = PiecewiseEvenSpline::build(n, c).unwrap();
            for x in &pts {
                let s: f64 = (-(n as i32) - 1..=n as i32 + 1).map(|j| h.eval(c.powi(j) * x[0])).sum();
                oracle_worst = oracle_worst.max((s / q.get(n - 1) - 1.0).abs());
            }
        }
    }
    outcome(
        worst <= 1e-12 && oracle_worst <= 1e-12,
        format!("max deviation {worst:.3e}, direct-sum oracle {oracle_worst:.3e} (tol 1e-12)"),
    )
}

fn gaussian_partition() -> Outcome {
    let gauss = RadialProfile::gaussian();
    let mut parts = Vec::new();
    let mut ok = true;
    for (dim, radii) in [(1usize, 1000usize), (2, 200)] {
        let m = SquareMatrix::scalar(dim, 2.0);
        let sys = build_radial_pou(&gauss, &m, Norm::Euclidean, false).unwrap();
        let pts = GridSpec::log(1e-3, 1e3, radii).points(dim, Norm::Euclidean).unwrap();
        let rep = verify_partition(&sys, &pts, 1e-10).unwrap();
        ok &= rep.passed && rep.uncertified() == 0;
        parts.push(format!(
            "d={dim}: {:.3e} over {} samples, {} uncertified",
            rep.max_deviation,
            rep.samples.len(),
            rep.uncertified()
        ));
    }
    outcome(ok, format!("{} (tol 1e-10)", parts.join("; ")))
}

/// Derivative of order `m` of `sum_i p[i] u^i` at `u`.
fn local_deriv(p: &[f64], m: usize, u: f64) -> f64 {
    let mut acc = 0.0;
    for i in (m..p.len()).rev() {
        let f: f64 = (0..m).map(|r| (i - r) as f64).product();
        acc = acc * u + p[i] * f;
    }
    acc
}

fn smoothness() -> Outcome {
    let mut worst = 0.0_f64;
    let mut sharp_all = true;
    for c in CS {
        for n in 2..=10 {
            let h = PiecewiseEvenSpline::build(n, c).unwrap();
            let lib = h.smoothness();
            if !(lib.max_rel_mismatch <= 1e-9 && lib.sharp) {
                return outcome(false, format!("n={n} c={c}: library report {lib:?}"));
            }
            // Independent check from the raw local pieces; piece k lives on
            // [c^(k+1), c^k], so knot c^k joins piece k (u = 1) and k-1 (u = 0).
            let w = |k: usize| c.powi(k as i32) - c.powi(k as i32 + 1);
            let side = |k: usize, m: usize, below: bool| -> f64 {
                let piece = if below { k } else { k.wrapping_sub(1) };
                if piece >= n {
                    return 0.0;
                }
                let u = if below { 1.0 } else { 0.0 };
                local_deriv(h.local_piece(piece), m, u) / w(piece).powi(m as i32)
            };
            for m in 0..n {
                let vals: Vec<(f64, f64)> = (0..=n).map(|k| (side(k, m, true), side(k, m, false))).collect();
                let scale = vals.iter().fold(0.0_f64, |a, (l, r)| a.max(l.abs()).max(r.abs()));
                let jump = vals.iter().fold(0.0_f64, |a, (l, r)| a.max((l - r).abs())) / scale;
                if m + 2 <= n {
                    worst = worst.max(jump);
                } else {
                    sharp_all &= jump > 1e-6;
                }
            }
        }
    }
    outcome(
        worst <= 1e-9 && sharp_all,
        format!("max relative jump below order n-1: {worst:.3e} (tol 1e-9); order n-1 jumps nonzero: {sharp_all}"),
    )
}

fn counterexample() -> Outcome {
    let m = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.75, 0.0]]).unwrap();
    let cert = expansion_certificate(&m, Norm::Euclidean).unwrap();
    let rho_err = (cert.spectral_radius_of_inverse - (2.0_f64 / 3.0).sqrt()).abs();
    let refused = matches!(
        build_radial_pou(&RadialProfile::gaussian(), &m, Norm::Euclidean, true),
        Err(Error::Refused(_))
    );
    outcome(
        cert.is_expanding && !cert.norm_monotone && rho_err <= 1e-10 && refused,
        format!(
            "expanding={}, rho(M^-1) error {rho_err:.3e}, norm_monotone={}, nonnegative build refused={refused}",
            cert.is_expanding, cert.norm_monotone
        ),
    )
}

fn dual_frame_1d() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, c, b) in [(2usize, 0.5, 0.25), (3, 0.5, 0.125), (4, 0.7, 0.7f64.powi(3) / 2.0)] {
        let pair = match build_spline_dual_pair(n, c, b) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("({n}, {c}, {b}): {e}")),
        };
        let band: Vec<Vec<f64>> = open_closed(c, 1.0, 1000).into_iter().map(|x| vec![x]).collect();
        let rep = verify_dual_relation(&pair, &band, 1e-12).unwrap();
        let supp: Vec<Vec<f64>> = lin(c.powi(n as i32), 1.0, 1000).into_iter().map(|x| vec![x]).collect();
        let plateau = plateau_deviation(&pair, &supp).unwrap();
        // Oracle: b / Q_(n-1) with Q from its own quadrature-free sum.
        let q = SplineIntegrals::compute(n - 1, c).unwrap().get(n - 1);
        let h = PiecewiseEvenSpline::build(n, c).unwrap();
        let dual = |x: f64| b / (q * q) * (-(n as i32) + 1..n as i32).map(|j| h.eval(c.powi(j) * x)).sum::<f64>();
        let oracle = band
            .iter()
            .map(|x| {
                let s: f64 = (-(n as i32) - 1..=n as i32 + 1)
                    .map(|j| {
                        let y = c.powi(j) * x[0];
                        h.eval(y) * dual(y)
                    })
                    .sum();
                (s - b).abs()
            })
            .fold(0.0, f64::max);
        let this = rep.passed() && plateau <= 1e-12 && oracle <= 1e-12;
        ok &= this;
        parts.push(format!(
            "({n}, {c}, {b:.5}): dual {:.2e}, oracle {oracle:.2e}, plateau {plateau:.2e}",
            rep.report.max_deviation
        ));
    }
    outcome(ok, format!("{} (tol 1e-12)", parts.join("; ")))
}

fn dual_frame_plane() -> Outcome {
    let r = RadialProfile::plateau_linear(1.0, 2.0).unwrap();
    let m = SquareMatrix::scalar(2, 2.0);
    let j = compute_index_set(&m, 2.0, 1.0, Norm::Euclidean).unwrap();
    let pair = match build_radial_dual_pair(&r, &m, None, Norm::Euclidean) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    // Closed-form psi_hat for this profile.
    let prof = |s: f64| ((2.0 - s) / 1.0).clamp(0.0, 1.0);
    let psi = |x: &[f64]| {
        let s = x[0].hypot(x[1]);
        prof(s) - prof(2.0 * s)
    };
    let supp = GridSpec::log(0.5, 2.0, 100).with_dirs(10).points(2, Norm::Euclidean).unwrap();
    let sum_dev = supp
        .iter()
        .map(|x| {
            let s: f64 = j.members.iter().map(|&k| psi(&[x[0] * 2f64.powi(k), x[1] * 2f64.powi(k)])).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let lib_dev = supp.iter().map(|x| (pair.psi_hat().eval_re(x) - psi(x)).abs()).fold(0.0, f64::max);
    let pts = GridSpec::log(0.1, 10.0, 100).with_dirs(10).points(2, Norm::Euclidean).unwrap();
    let rep = verify_dual_relation(&pair, &pts, 1e-10).unwrap();
    let ok = j.members == vec![-2, -1, 0, 1, 2]
        && pair.b() == 1.0 / 16.0
        && sum_dev <= 1e-10
        && lib_dev <= 1e-15
        && rep.passed();
    outcome(
        ok,
        format!(
            "J = {:?}, b = {}, max |sum_J psi_hat - 1| = {sum_dev:.2e}, dual deviation {:.2e} (tol 1e-10)",
            j.members,
            pair.b(),
            rep.report.max_deviation
        ),
    )
}

fn frame_bound_estimates() -> Outcome {
    let h = PiecewiseEvenSpline::build(2, 0.5).unwrap();
    let est = frame_bounds(&h.to_field(), &FrameDilation::Scalar(0.5), 0.25, None).unwrap();
    // Oracle: only k = 0 survives, and one band (1/2, 1] carries
    // (2 - 2x)^2 + (2x - 1)^2.
    let b = 0.25;
    let vals: Vec<f64> = open_closed(0.5, 1.0, 100_000)
        .iter()
        .map(|x| ((2.0 - 2.0 * x).powi(2) + (2.0 * x - 1.0).powi(2)) / b)
        .collect();
    let a_or = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let b_or = vals.iter().cloned().fold(0.0, f64::max);
    let ok = (est.a_est - a_or).abs() <= 1e-3
        && (est.b_est - b_or).abs() <= 1e-3
        && (a_or - 2.0).abs() <= 1e-3
        && (b_or - 4.0).abs() <= 1e-3;
    outcome(
        ok,
        format!(
            "A_est = {:.6}, B_est = {:.6}; oracle A = {a_or:.6}, B = {b_or:.6} (tol 1e-3)",
            est.a_est, est.b_est
        ),
    )
}

fn square_sum_sandwich() -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for c in CS {
        for n in 2..=6 {
            let sys = normalized_partition(n, c).unwrap();
            let pts: Vec<Vec<f64>> = open_closed(c, 1.0, 1000).into_iter().map(|x| vec![x]).collect();
            match square_sum_bounds(&sys, &pts) {
                Ok(s) => {
                    lo = lo.min(s.lower);
                    hi = hi.max(s.upper);
                }
                Err(e) => return outcome(false, format!("n={n} c={c}: {e}")),
            }
        }
    }
    let r = RadialProfile::plateau_linear(1.0, 2.0).unwrap();
    let sys = build_radial_pou(&r, &SquareMatrix::scalar(2, 2.0), Norm::Euclidean, true).unwrap();
    let pts = GridSpec::band(1.0, 2.0, 200).points(2, Norm::Euclidean).unwrap();
    let (rlo, rhi) = match square_sum_bounds(&sys, &pts) {
        Ok(s) => (s.lower, s.upper),
        Err(e) => return outcome(false, format!("radial: {e}")),
    };
    outcome(
        lo > 0.0 && hi <= 1.0 + 1e-12 && rlo > 0.0 && rhi <= 1.0 + 1e-12,
        format!("splines [{lo:.4}, {hi:.12}], radial [{rlo:.4}, {rhi:.12}] within (0, 1 + 1e-12]"),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, u64); 10] = [
        ("closed-form spline match", spline_closed_forms, 1),
        ("recursion equals transform", recursion_vs_transform, 30),
        ("spline partition of unity", spline_partition, 5),
        ("gaussian partition of unity", gaussian_partition, 5),
        ("spline smoothness", smoothness, 1),
        ("counterexample handling", counterexample, 1),
        ("dual frame, splines", dual_frame_1d, 5),
        ("dual frame, radial in the plane", dual_frame_plane, 10),
        ("frame bound estimates", frame_bound_estimates, 5),
        ("square-sum sandwich", square_sum_sandwich, 5),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let pass = out.ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.3} s, budget {budget} s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
