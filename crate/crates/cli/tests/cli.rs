use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const SLAB: &str = "[slab]\nn0 = 3.4\nL_um = 300.0\nlambda0_nm = 1500.0\ngamma_hat = 0.02\nalpha_per_cm = 200.0\n";

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specsing")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows_of_kind<'a>(csv: &'a str, kind: &str) -> Vec<Vec<&'a str>> {
    csv.lines().skip(1).map(|l| l.split(',').collect::<Vec<_>>()).filter(|r| r[0] == kind).collect()
}

#[test]
fn imaginary_delta_has_root_at_half_beta() {
    let cfg = scratch("d1.toml", "[deltas]\ncenters = [0.5]\ncouplings = [[0.0, 10.0]]\nk_min = 4.0\nk_max = 6.0\n");
    let o = run(&["deltas", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("kind,k,m22_re,m22_im,m22_abs,coupling_index,coupling_re,coupling_im\n"));
    assert_eq!(rows_of_kind(&text, "scan").len(), 2001);
    let roots = rows_of_kind(&text, "root");
    assert_eq!(roots.len(), 1);
    let k: f64 = roots[0][1].parse().unwrap();
    assert!((k - 5.0).abs() < 1e-9, "k = {k}");
}

#[test]
fn real_coupling_has_no_root() {
    let cfg = scratch("d2.toml", "[deltas]\ncenters = [0.5]\ncouplings = [[3.0, 0.0]]\nk_min = 0.5\nk_max = 20.0\n");
    let out = cfg.with_extension("json");
    let o = run(&["deltas", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["roots"].as_array().unwrap().len(), 0);
    assert_eq!(doc["scan"].as_array().unwrap().len(), 2001);
}

#[test]
fn unordered_centers_are_a_config_error() {
    let cfg = scratch("d3.toml", "[deltas]\ncenters = [0.6, 0.2]\ncouplings = [[1.0, 0.0], [1.0, 0.0]]\nk_min = 1.0\nk_max = 2.0\n");
    let o = run(&["deltas", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("strictly increasing"));
}

#[test]
fn wrong_block_and_missing_file_are_config_errors() {
    let cfg = scratch("s0.toml", SLAB);
    assert_eq!(run(&["deltas", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["slab", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    let bad_grid = run(&["slab", "--config", cfg.to_str().unwrap(), "--curves", "--nu-grid", "0:0.5"]);
    assert_eq!(bad_grid.status.code(), Some(2));
}

#[test]
fn slab_table_has_fifty_ordered_rows() {
    let cfg = scratch("s1.toml", SLAB);
    let o = run(&["slab", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "m,nu,pumping,lambda0_nm,g0_per_cm,lambda_star_nm,g_star_per_cm,eps,residual"
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 50);
    let keys: Vec<(i64, f64, u8)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap(), if r[2] == "single" { 0 } else { 1 }))
        .collect();
    assert!(keys.windows(2).all(|w| (w[0].0, w[0].1, w[0].2) < (w[1].0, w[1].1, w[1].2)));
    // central mode, nu = 0: the homogeneous root
    let r = &rows[20];
    assert_eq!((r[0].as_str(), r[1].as_str()), ("1360", "0"));
    assert!((r[5].parse::<f64>().unwrap() - 1499.999983259965).abs() < 1e-8);
    assert_eq!(r[5], rows[21][5]);
    assert_eq!(r[6], rows[21][6]);

    let again = run(&["slab", "--config", cfg.to_str().unwrap()]);
    assert_eq!(stdout(&again), text, "output must be deterministic");
}

#[test]
fn curves_cover_the_nu_grid() {
    let cfg = scratch("s2.toml", &format!("{SLAB}modes = [1359, 1360]\nnus = [0.0, 0.5]\n"));
    let out = cfg.with_extension("csv");
    let o = run(&[
        "slab",
        "--config",
        cfg.to_str().unwrap(),
        "--curves",
        "--nu-grid",
        "0:0.5:0.01",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1 + 8);
    let curves = fs::read_to_string(out.with_file_name("s2.curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(lines.next().unwrap(), "m,pumping,nu,lambda_star_nm,g_star_per_cm");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 51);
    for (block, chunk) in rows.chunks(51).enumerate() {
        assert!(chunk.iter().all(|r| r[0] == chunk[0][0] && r[1] == chunk[0][1]), "block {block}");
        assert_eq!(chunk[0][2], "0");
        assert_eq!(chunk[50][2], "0.5");
    }
}

#[test]
fn verify_flag_appends_full_solution() {
    let cfg = scratch("s3.toml", &format!("{SLAB}modes = [1360]\nnus = [0.05]\n"));
    let o = run(&["slab", "--config", cfg.to_str().unwrap(), "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[9..], ["full_lambda_star_nm", "full_g_star_per_cm", "full_residual"]);
    for line in text.lines().skip(1) {
        let r: Vec<f64> = line.split(',').filter_map(|c| c.parse().ok()).collect();
        let (g_first, g_full, full_residual) = (r[5], r[9], r[10]);
        assert!((g_first - g_full).abs() < 0.5, "{line}");
        assert!(full_residual < 1e-4, "{line}");
    }
}

#[test]
fn verify_quick_passes() {
    let o = run(&["verify", "--quick"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(!text.contains("second_order_routes"));
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 9);
}

#[test]
fn unattainable_tolerance_fails_by_name() {
    let o = run(&["verify", "--quick", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL delta_closed_vs_composition")), "{text}");
}
