use proptest::prelude::*;

use scaling_pou::frames::{build_spline_dual_pair, frame_bounds, plateau_deviation, verify_dual_relation, FrameDilation};
use scaling_pou::grid::GridSpec;
use scaling_pou::pou::{build_radial_pou, verify_partition};
use scaling_pou::{Norm, PiecewiseEvenSpline, RadialProfile, SquareMatrix};

fn scaled_rotation(a: f64, t: f64) -> SquareMatrix {
    SquareMatrix::from_rows(&[vec![a * t.cos(), -a * t.sin()], vec![a * t.sin(), a * t.cos()]]).unwrap()
}

fn band(c: f64, n: usize) -> Vec<Vec<f64>> {
    (1..=n).map(|i| vec![c + (1.0 - c) * i as f64 / n as f64]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spline_pairs_are_dual(n in 2usize..=6, c in 0.2f64..0.85, t in 0.05f64..=1.0) {
        let b = t * c.powi(n as i32 - 1) / 2.0;
        let pair = build_spline_dual_pair(n, c, b).unwrap();
        let rep = verify_dual_relation(&pair, &band(c, 200), 1e-10).unwrap();
        prop_assert!(rep.passed(), "{}", rep.to_key_value());
        let lo = c.powi(n as i32);
        let supp: Vec<Vec<f64>> = (0..200).map(|i| vec![lo + (1.0 - lo) * i as f64 / 199.0]).collect();
        prop_assert!(plateau_deviation(&pair, &supp).unwrap() <= 1e-12);
    }

    #[test]
    fn frame_bounds_sandwich_the_square_sum(n in 2usize..=5, ci in 0usize..3, wide in proptest::bool::ANY) {
        let c: f64 = [0.3, 0.5, 0.8][ci];
        let b = if wide { 1.0 } else { c.powi(n as i32 - 1) / 2.0 };
        let h = PiecewiseEvenSpline::build(n, c).unwrap();
        let grid = GridSpec::band(c.powi(n as i32), 1.0 / c, 128).with_dirs(2);
        let est = frame_bounds(&h.to_field(), &FrameDilation::Scalar(c), b, Some(&grid)).unwrap();
        prop_assert!(0.0 <= est.a_est && est.a_est <= est.b_est);
        for x in grid.points(1, Norm::Euclidean).unwrap() {
            let s: f64 = (-40..=40).map(|j| h.eval(c.powi(j) * x[0]).powi(2)).sum::<f64>() / b;
            prop_assert!(est.a_raw <= s * (1.0 + 1e-12) && s <= est.b_est * (1.0 + 1e-12));
        }
    }

    #[test]
    fn frame_bounds_are_scale_invariant(n in 2usize..=5, ci in 0usize..3, r in 0.2f64..1.0) {
        let c: f64 = [0.3, 0.5, 0.8][ci];
        let b = c.powi(n as i32 - 1) / 2.0;
        let psi = PiecewiseEvenSpline::build(n, c).unwrap().to_field();
        let d = FrameDilation::Scalar(c);
        let g0 = GridSpec::band(r, 1.0 / c, 256).with_dirs(2);
        let g1 = GridSpec::band(r / c, 1.0 / c, 256).with_dirs(2);
        let (e0, e1) = (frame_bounds(&psi, &d, b, Some(&g0)).unwrap(), frame_bounds(&psi, &d, b, Some(&g1)).unwrap());
        prop_assert!((e0.a_raw - e1.a_raw).abs() <= 1e-9 && (e0.b_est - e1.b_est).abs() <= 1e-9);
    }

    #[test]
    fn radial_pou_nonnegative_and_sums_to_one(a in 1.1f64..3.0, t in 0.0f64..6.3, gauss in proptest::bool::ANY) {
        let m = scaled_rotation(a, t);
        let profile = if gauss { RadialProfile::gaussian() } else { RadialProfile::plateau_linear(1.0, 2.0).unwrap() };
        let sys = build_radial_pou(&profile, &m, Norm::Euclidean, true).unwrap();
        let pts = GridSpec::log(1e-2, 1e2, 40).with_dirs(8).points(2, Norm::Euclidean).unwrap();
        for x in &pts {
            prop_assert!(sys.g().eval_re(x) >= 0.0);
        }
        let rep = verify_partition(&sys, &pts, 1e-10).unwrap();
        prop_assert_eq!(rep.uncertified(), 0);
        prop_assert!(rep.passed, "{}", rep.to_key_value());
    }

    #[test]
    fn partial_sums_telescope(
        a in 1.2f64..2.5,
        t in 0.0f64..6.3,
        lo in 0usize..=8,
        hi in 0usize..=8,
        x in -3.0f64..3.0,
        y in -3.0f64..3.0,
    ) {
        let m = scaled_rotation(a, t);
        let sys = build_radial_pou(&RadialProfile::gaussian(), &m, Norm::Euclidean, false).unwrap();
        let phi = |v: &[f64]| (-(v[0] * v[0] + v[1] * v[1])).exp();
        let pow = |j: i32, v: &[f64]| m.pow(j).unwrap().apply(v);
        let p = [x, y];
        let sum: f64 = (-(lo as i32)..=hi as i32).map(|j| sys.g().eval_re(&pow(j, &p))).sum();
        let closed = phi(&pow(-(lo as i32), &p)) - phi(&pow(hi as i32 + 1, &p));
        prop_assert!((sum - closed).abs() <= 1e-12);
    }
}
