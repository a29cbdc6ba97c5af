use std::path::Path;
use std::process::Command;

use volcol::*;

fn run(dir: &Path, config: &str) -> (i32, String, String) {
    let cfg = dir.join("run.cfg");
    let out = dir.join("out.csv");
    std::fs::write(&cfg, config).unwrap();
    let _ = std::fs::remove_file(&out);
    let output = Command::new(env!("CARGO_BIN_EXE_volcol"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .output()
        .unwrap();
    let csv = std::fs::read_to_string(&out).unwrap_or_default();
    (
        output.status.code().unwrap(),
        csv,
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

#[test]
fn solve_csv_round_trips_through_the_equations() {
    let dir = tempfile::tempdir().unwrap();
    let (code, csv, _) = run(dir.path(), "command = solve\nmesh.N = 8\ncase = 2\nc2 = 0.45\n");
    assert_eq!(code, 0);
    let coeffs = csv.split("\n\n").next().unwrap();
    let mut table = vec![vec![0.0; 2]; 8];
    for line in coeffs.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (n, i): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        table[n][i - 1] = f[3].parse().unwrap();
    }
    let problem = make_problem(
        Kernel::power_convolution(1.0).unwrap(),
        Nonlinearity::power_root(2.0).unwrap(),
        Mesh64::uniform(1.0, 8).unwrap(),
        Params::case_two(0.45).unwrap(),
        Options::default(),
    )
    .unwrap();
    let worst = equation_residuals(&problem, &table)
        .unwrap()
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn exit_codes_separate_config_and_solver_failures() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(dir.path(), "command = solve\nmesh.N = 4\ncase = 1\nc1 = 0\n");
    assert_eq!(code, 1);
    assert!(err.contains("invalid"), "{err}");
    let (code, _, _) = run(dir.path(), "command = solve\nunknown.key = 3\n");
    assert_eq!(code, 1);
    let (code, _, err) = run(
        dir.path(),
        "command = solve\nnonlinearity = power\nG.p = 1\nmesh.N = 4\nc1 = 0.5\n",
    );
    assert_eq!(code, 2);
    assert!(err.contains("step 0"), "{err}");
}

#[test]
fn classify_reports_unconditional_existence() {
    let dir = tempfile::tempdir().unwrap();
    let (code, csv, _) = run(dir.path(), "command = classify\ncase = 1\nc1 = 0.5\n");
    assert_eq!(code, 0);
    assert!(csv.contains("category,unconditional\n"));
    assert!(csv.contains("nondivergent_uniqueness,true\n"));
}

#[test]
fn sweep_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = "command = sweep\ncase = 1\nsweep.h = 0.1, 0.05\nsweep.c_min = 0.2\nsweep.c_max = 0.6\nsweep.c_step = 0.1\n";
    let (code, first, _) = run(dir.path(), config);
    assert_eq!(code, 0);
    let (_, second, _) = run(dir.path(), config);
    assert_eq!(first, second);
    assert!(first.starts_with("case,m,h,c,relative_error,status\n"));
    assert!(first.contains("\nh,min_c,min_error,max_c,max_error\n"));
}
