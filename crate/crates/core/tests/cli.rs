use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scaling-pou"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn spline_pieces_match_closed_forms() {
    let o = run(&["spline", "build", "-n", "3", "-c", "0.5", "--emit", "pieces"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<(f64, f64, Vec<f64>)> = text
        .lines()
        .map(|l| {
            let (iv, co) = l.split_once(" : ").unwrap();
            let iv = iv.trim_matches(|c| c == '[' || c == ']');
            let (a, b) = iv.split_once(',').unwrap();
            let co = co.split_whitespace().map(|v| v.parse().unwrap()).collect();
            (a.parse().unwrap(), b.parse().unwrap(), co)
        })
        .collect();
    assert_eq!(rows.len(), 3);
    // 2 c^-3 x^2 - 4x + 2c^3, -2(c^-1 + c^-2) x^2 + 4(c + c^-1) x - 2(c + c^2), 2(1 - x)^2.
    let expected = [[0.25, -4.0, 16.0], [-1.5, 10.0, -12.0], [2.0, -4.0, 2.0]];
    for ((a, b, co), e) in rows.iter().zip(expected) {
        assert!(a < b);
        for (x, y) in co.iter().zip(e) {
            assert!((x - y).abs() < 1e-12, "{co:?} vs {e:?}");
        }
    }
    assert_eq!((rows[0].0, rows[2].1), (0.125, 1.0));
}

#[test]
fn spline_csv_values() {
    let o = run(&["spline", "build", "-n", "2", "-c", "0.5", "--emit", "csv", "--grid", "lin:0:1:11"]);
    assert_eq!(code(&o), 0);
    let csv = stdout(&o);
    assert!(csv.starts_with("gamma,value\n"));
    let v = column(&csv, 1);
    let want = [0.0, 0.0, 0.0, 0.2, 0.6, 1.0, 0.8, 0.6, 0.4, 0.2, 0.0];
    for (a, b) in v.iter().zip(want) {
        assert!((a - b).abs() < 1e-15, "{v:?}");
    }
}

#[test]
fn inadmissible_b_is_refused() {
    let o = run(&["frame", "build-1d", "-n", "2", "-c", "0.5", "-b", "0.3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("c^(n-1)/2"));
}

#[test]
fn default_pou_verify_passes() {
    let o = run(&["pou", "verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("passed = true"));
}

#[test]
fn pou_verify_band_and_failure() {
    let o = run(&["pou", "verify", "--matrix", "[[2,0],[0,2]]", "--band-only", "--samples", "50"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["pou", "verify", "--tol", "0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn counterexample_nonnegative_build_refused() {
    let o = run(&["pou", "build", "--matrix", "[[0,2],[0.75,0]]", "--nonnegative"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("norm_monotone = false"));
    let o = run(&["pou", "build", "--matrix", "[[0,2],[0.75,0]]"]);
    assert_eq!(code(&o), 0);
    let o = run(&["pou", "build", "--matrix", "[[1,0],[0,1]]"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn transform_of_indicator_is_h2() {
    let o = run(&["transform", "eval", "--f", "spline:1:0.5", "--c", "0.5", "--grid", "lin:-1.2:1.2:25"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("gamma,value,quad_error\n"));
    for (g, v) in column(&csv, 0).iter().zip(column(&csv, 1)) {
        let x = g.abs();
        let h2 = if x <= 0.25 || x >= 1.0 {
            0.0
        } else if x <= 0.5 {
            4.0 * x - 1.0
        } else {
            2.0 - 2.0 * x
        };
        assert!((v - h2).abs() < 1e-12, "{g}: {v} vs {h2}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let args = ["transform", "eval", "--f", "gaussian", "--c", "0.3", "--grid", "lin:-3:3:41"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["pou", "build", "--matrix", "[[2,1],[0,2]]", "--grid", "0.1:10:20"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("radius,direction,x0,x1,value\n"));
    assert_eq!(stdout(&a).lines().count(), 1 + 20 * 64);
}

#[test]
fn unwritable_output_exits_3() {
    let o = run(&["spline", "build", "-n", "2", "-c", "0.5", "--out", "/nonexistent/dir/h.txt"]);
    assert_eq!(code(&o), 3);
    let o = run(&["frame", "verify", "--pair", "/nonexistent/pair.txt"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_arguments_exit_2_and_help_exits_0() {
    assert_eq!(code(&run(&["spline", "build", "-n", "x"])), 2);
    assert_eq!(code(&run(&["nonsense"])), 2);
    assert_eq!(code(&run(&["spline", "build", "-n", "0", "-c", "0.5"])), 2);
    assert_eq!(code(&run(&["spline", "build", "-n", "31", "-c", "0.5"])), 2);
    assert_eq!(code(&run(&["transform", "eval", "--f", "spline:2", "--c", "1.5"])), 2);
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("frame"));
}

fn build_and_verify(build: &[&str], dir: &Path) -> (Output, String) {
    let pair = dir.join("pair.txt");
    let csv = dir.join("dual.csv");
    let mut args: Vec<&str> = build.to_vec();
    let p = pair.to_str().unwrap();
    args.extend(["--out", p]);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = run(&["frame", "verify", "--pair", p, "--csv", csv.to_str().unwrap()]);
    (v, std::fs::read_to_string(csv).unwrap_or_default())
}

#[test]
fn spline_pair_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (v, csv) = build_and_verify(&["frame", "build-1d", "-n", "3", "-c", "0.5", "-b", "0.125"], dir.path());
    assert_eq!(code(&v), 0, "{}", stderr(&v));
    assert!(csv.starts_with("gamma,dual_sum,deviation,sq_sum\n"));
    let err = stderr(&v);
    assert!(err.contains("support_disjoint = true"));
    assert!(err.contains("a_est"));
}

#[test]
fn radial_pair_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.txt");
    std::fs::write(&profile, "profile = \"plateau-linear\"\nr1 = 1\nr = 2\n").unwrap();
    let matrix = dir.path().join("matrix.txt");
    std::fs::write(&matrix, "# dilation\nmatrix = [[2, 0], [0, 2]]\n").unwrap();
    let (v, csv) = build_and_verify(
        &[
            "frame",
            "build-radial",
            "--profile",
            profile.to_str().unwrap(),
            "--matrix",
            matrix.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&v), 0, "{}", stderr(&v));
    assert!(csv.starts_with("gamma0,gamma1,dual_sum,deviation,sq_sum\n"));
    let text = std::fs::read_to_string(dir.path().join("pair.txt")).unwrap();
    assert!(text.contains("b = 0.0625"));
    assert!(text.contains("index_set = [-2, -1, 0, 1, 2]"));
}

#[test]
fn radial_pair_refusals() {
    let o = run(&["frame", "build-radial", "--profile", "plateau-linear:1:2", "--matrix", "[[0,2],[0.75,0]]"]);
    assert_eq!(code(&o), 2);
    let o = run(&["frame", "build-radial", "--profile", "plateau-linear:1:2", "--matrix", "[[2,0],[0,2]]", "-b", "0.1"]);
    assert_eq!(code(&o), 2);
    let o = run(&["frame", "build-radial", "--profile", "gaussian", "--matrix", "[[2,0],[0,2]]"]);
    assert_eq!(code(&o), 2);
}
