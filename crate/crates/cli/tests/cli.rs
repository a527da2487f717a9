use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frift_core::fracint::Scheme;
use frift_core::model::{parse_problem, read_trajectory_csv};
use frift_core::solver::residual;
use frift_core::BENCHMARK;

fn bench_file(dir: &Path) -> PathBuf {
    let path = dir.join("bench.frift");
    std::fs::write(&path, BENCHMARK).unwrap();
    path
}

fn frift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frift")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn solve_writes_full_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let file = bench_file(dir.path());
    let csv = dir.path().join("x.csv");
    let out = frift(&["solve", file.to_str().unwrap(), "--n", "2000", "--tol", "1e-8", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("status = converged"));
    assert!(field(&text, "sup_norm") <= 2.0);
    let data = std::fs::read_to_string(&csv).unwrap();
    let mut lines = data.lines();
    assert_eq!(lines.next(), Some("t,x"));
    let rows: Vec<&str> = lines.collect();
    // 2000 history rows with t < 0, then 2001 grid nodes
    assert_eq!(rows.len(), 2000 + 2001);
    assert!(rows[0].starts_with("-3.1415926535897931e0,"));
    let digits = rows[1].split(',').nth(1).unwrap().split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(digits.len(), 17);
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = bench_file(dir.path());
    let out = frift(&["solve", file.to_str().unwrap(), "--n", "200", "--max-iter", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("max_iter_exceeded"));
    let out = frift(&["solve", file.to_str().unwrap(), "--n", "200", "--blow-up", "1e-6"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("diverged"));
    let out = frift(&["solve", dir.path().join("missing.frift").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.frift"));
    let out = frift(&["solve", file.to_str().unwrap(), "--method", "newton"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&frift(&[])), 1);
    assert_eq!(code(&frift(&["frobnicate"])), 1);
    assert_eq!(code(&frift(&["bench", "--bogus"])), 1);
    assert_eq!(code(&frift(&["--help"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.frift");
    std::fs::write(&bad, BENCHMARK.replace("alpha = 0.5", "alpha = 1.5")).unwrap();
    assert_eq!(code(&frift(&["solve", bad.to_str().unwrap()])), 1);
}

#[test]
fn certify_paths() {
    let dir = tempfile::tempdir().unwrap();
    let file = bench_file(dir.path());
    let f = file.to_str().unwrap();
    let out = frift(&["certify", f, "--r", "2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!((field(&text, "B_factor") - 7.854).abs() < 1e-3);
    assert!((field(&text, "L*M") - 0.109).abs() < 1e-3);
    assert!(text.contains("18.3346"));
    assert!(text.contains("claim_discrepancy = true"));

    let out = frift(&["certify", f, "--r", "25"]);
    assert_eq!(code(&out), 3);
    assert!(field(&stdout(&out), "denom") <= 0.0);
    assert_eq!(code(&frift(&["certify", f, "--r", "0"])), 1);

    let bare = dir.path().join("bare.frift");
    let text: String = BENCHMARK.split("[constants]").next().unwrap().to_string();
    std::fs::write(&bare, text).unwrap();
    let b = bare.to_str().unwrap();
    let out = frift(&["certify", b, "--r", "2"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing constants"));
    let out = frift(&["certify", b, "--r", "2", "--estimate", "--samples", "500"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("estimated"));
    assert_eq!(code(&frift(&["certify", f, "--r", "2", "--set", "L=1"])), 3);
    assert_eq!(code(&frift(&["certify", f, "--set", "Q=1"])), 1);
}

#[test]
fn compare_paths() {
    let dir = tempfile::tempdir().unwrap();
    let file = bench_file(dir.path());
    let f = file.to_str().unwrap();
    let csv = dir.path().join("pair.csv");
    let out = frift(&["compare", f, "--phi2", "0.9*sin(theta)", "--n", "500", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(field(&text, "empirical") <= field(&text, "bound"));
    let pair = std::fs::read_to_string(&csv).unwrap();
    assert!(pair.starts_with("t,x1,x2\n"));
    assert_eq!(pair.lines().count(), 1 + 500 + 501);

    let out = frift(&["compare", f, "--phi2", "sin(theta)", "--n", "300"]);
    assert_eq!(code(&out), 0);
    assert!(field(&stdout(&out), "empirical") <= 1e-7);

    let out = frift(&["compare", f, "--phi2", "xnorm"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("xnorm"));

    let out = frift(&["compare", f, "--phi2", "0.9*sin(theta)", "--n", "100", "--blow-up", "1e-6"]);
    assert_eq!(code(&out), 2);
    let out = frift(&["compare", f, "--phi2", "0.9*sin(theta)", "--set", "L=1"]);
    assert_eq!(code(&out), 3);
}

#[test]
#[allow(clippy::approx_constant)]
fn fracint_paths() {
    let out = frift(&["fracint", "--alpha", "0.5", "--expr", "1", "--T", "1", "--n", "100"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("t,Ialpha_u\n"));
    let last: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 1.1283792).abs() < 1e-7);

    let out = frift(&["fracint", "--alpha", "1", "--expr", "t", "--T", "2", "--n", "100"]);
    let last: f64 = stdout(&out).lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 2.0).abs() < 1e-12);

    assert_eq!(code(&frift(&["fracint", "--alpha", "1.5", "--expr", "t"])), 1);
    assert_eq!(code(&frift(&["fracint", "--alpha", "0.5", "--expr", "x"])), 1);
}

#[test]
fn residual_round_trip_and_gate() {
    let dir = tempfile::tempdir().unwrap();
    let file = bench_file(dir.path());
    let f = file.to_str().unwrap();
    let csv = dir.path().join("x.csv");
    let c = csv.to_str().unwrap();
    assert_eq!(code(&frift(&["solve", f, "--n", "400", "--out", c])), 0);
    let out = frift(&["residual", f, "--traj", c]);
    assert_eq!(code(&out), 0);
    let printed = field(&stdout(&out), "residual_integral");

    let spec = parse_problem(BENCHMARK).unwrap();
    let traj = read_trajectory_csv(&spec, std::fs::File::open(&csv).unwrap()).unwrap();
    let direct = residual(&spec, &traj, Scheme::Trap).unwrap().integral;
    assert!((printed - direct).abs() <= 1e-12);
    let report = frift_core::solver::picard_solve(&spec, &frift_core::solver::SolveConfig { n_steps: 400, ..Default::default() }).unwrap();
    assert!((printed - report.residual_integral.unwrap()).abs() <= 1e-12);

    // zero state: g vanishes, so the residual does too
    let zero: String = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 0 { l.to_string() } else { format!("{},0", l.split(',').next().unwrap()) })
        .collect::<Vec<_>>()
        .join("\n");
    let zpath = dir.path().join("zero.csv");
    std::fs::write(&zpath, zero).unwrap();
    assert_eq!(code(&frift(&["residual", f, "--traj", zpath.to_str().unwrap()])), 0);

    // bump one interior node
    let bumped: String = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 400 + 200 {
                let (t, x) = l.split_once(',').unwrap();
                format!("{t},{}", x.parse::<f64>().unwrap() + 0.1)
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let bpath = dir.path().join("bumped.csv");
    std::fs::write(&bpath, bumped).unwrap();
    assert_ne!(code(&frift(&["residual", f, "--traj", bpath.to_str().unwrap()])), 0);

    // a trajectory from another grid is rejected
    let other = dir.path().join("other.frift");
    std::fs::write(&other, BENCHMARK.replace("T = pi", "T = 2")).unwrap();
    assert_eq!(code(&frift(&["residual", other.to_str().unwrap(), "--traj", c])), 1);
}

#[test]
fn solve_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = bench_file(dir.path());
    let f = file.to_str().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, threads) in [(&a, "1"), (&b, "4")] {
        let out = Command::new(env!("CARGO_BIN_EXE_frift"))
            .args(["solve", f, "--n", "300", "--out", p.to_str().unwrap()])
            .env("FRIFT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let out = Command::new(env!("CARGO_BIN_EXE_frift")).args(["bench", "--n", "50"]).env("FRIFT_THREADS", "0").output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn bench_stages() {
    let out = frift(&["bench"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    for stage in ["certify", "solve", "residual", "compare"] {
        assert!(text.contains(&format!("[{stage}] PASS")), "{stage}\n{text}");
    }
    assert_eq!(code(&frift(&["bench", "--n", "250"])), 0);
    let out = frift(&["bench", "--n", "250", "--set", "L=1"]);
    assert_ne!(code(&out), 0);
    assert!(stdout(&out).contains("[compare] FAIL: dependence bound undefined"));
}

#[test]
fn sweep_writes_atlas() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.frift-sweep");
    std::fs::write(&plan, format!("{BENCHMARK}\n[sweep]\naxis.L = 0, 0.05, 1/12\nn = 100\n")).unwrap();
    let atlas = dir.path().join("atlas.csv");
    let out = frift(&["sweep", plan.to_str().unwrap(), "--out", atlas.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("cells: 3"));
    let text = std::fs::read_to_string(&atlas).unwrap();
    assert!(text.starts_with("cell,L,admissible,dhage_ok,status"));
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.contains(",true,true,converged,")));

    std::fs::write(&plan, BENCHMARK).unwrap();
    assert_eq!(code(&frift(&["sweep", plan.to_str().unwrap(), "--out", atlas.to_str().unwrap()])), 1);
}
