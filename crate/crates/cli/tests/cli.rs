use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn minmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmod"))
        .args(args)
        .env_remove("MINMOD_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SQUARES: &str = "schema = 1\nkind = \"power\"\nexponent = 2.0\n";
const CUBES: &str = "schema = 1\nkind = \"power\"\nexponent = 3.0\n";

#[test]
fn profile_has_fixed_header_and_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "f.toml", "schema = 1\nkind = \"explicit\"\nzeros = [1.0, 4.0, 9.0]\n");
    let o = minmod(&["profile", &spec, "--from", "0", "--to", "2", "--points", "16"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "log_r,log_M,log_m,eps,k,log_M_over_sqrt_r");
    assert_eq!(lines.len(), 17);
    let last: Vec<&str> = lines[16].split(',').collect();
    assert_eq!(last.len(), 6);
    assert!((last[0].parse::<f64>().unwrap() - 100f64.ln()).abs() < 1e-14);
    // 17 significant digits
    assert_eq!(last[1].split('e').next().unwrap().len(), 18);
}

#[test]
fn squares_eps_matches_sinh() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sq.toml", SQUARES);
    let o = minmod(&["profile", &spec, "--from", "1", "--to", "6", "--points", "11"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut checked = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let lr: f64 = f[0].parse().unwrap();
        let x = std::f64::consts::PI * (0.5 * lr).exp();
        // log(sinh x / x) for large x
        let log_m = x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2 - x.ln();
        let eps = 0.5 - log_m.ln() / lr;
        let got: f64 = f[3].parse().unwrap();
        assert!((got - eps).abs() < 1e-6, "lr {lr}: {got} vs {eps}");
        checked += 1;
    }
    assert_eq!(checked, 11);
}

#[test]
fn negative_zero_is_a_spec_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.toml", "schema = 1\nkind = \"explicit\"\nzeros = [1.0, -4.0]\n");
    let o = minmod(&["profile", &spec, "--from", "0", "--to", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`zeros`"), "{}", stderr(&o));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.toml", "schema = 1\nkind = \"explicit\"\nzeros = [1.0,\n");
    let o = minmod(&["profile", &spec, "--from", "0", "--to", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn cubes_full_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "cubes.toml", CUBES);
    let o = minmod(&["verify", &spec, "--suite", "full"]);
    assert!(o.status.success(), "{}\n{}", stderr(&o), stdout(&o));
    let b: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(b["outputs"]["all_pass"], Value::Bool(true));
    let names: Vec<&str> = b["outputs"]["invariants"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["sandwich", "angular-monotonicity", "beurling", "trap-soundness"]);
}

#[test]
fn corrupted_profile_fails_named_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "cubes.toml", CUBES);
    let csv = dir.path().join("p.csv");
    let csv_s = csv.to_str().unwrap();
    let o = minmod(&["profile", &spec, "--from", "1", "--to", "4", "--points", "8", "--csv", csv_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let clean = minmod(&["verify", &spec, "--suite", "angular", "--profile-csv", csv_s]);
    assert!(clean.status.success(), "{}", stderr(&clean));

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[3].split(',').map(String::from).collect();
    let v: f64 = fields[1].parse().unwrap();
    fields[1] = format!("{:.16e}", v * 1.001);
    lines[3] = fields.join(",");
    std::fs::write(&csv, lines.join("\n") + "\n").unwrap();

    let o = minmod(&["verify", &spec, "--suite", "angular", "--profile-csv", csv_s]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("profile-consistency"), "{}", stderr(&o));
    let b: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(b["outputs"]["all_pass"], Value::Bool(false));
}

#[test]
fn empty_suite_name_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "cubes.toml", CUBES);
    let o = minmod(&["verify", &spec, "--suite", ""]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cache_hits_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let spec = write(dir.path(), "cubes.toml", CUBES);
    let args = ["criterion", &spec, "--at", "3,5", "--cache-dir", cache.to_str().unwrap()];
    let first = minmod(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    std::thread::sleep(std::time::Duration::from_millis(1100));
    let second = minmod(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);

    // environment variable works too, and a different command misses
    let o = Command::new(env!("CARGO_BIN_EXE_minmod"))
        .args(["criterion", &spec, "--at", "4"])
        .env("MINMOD_CACHE_DIR", &cache)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 2);
}

#[test]
fn profile_bundle_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sq.toml", SQUARES);
    let csv = dir.path().join("p.csv");
    let svg = dir.path().join("p.svg");
    let out = dir.path().join("b.json");
    let o = minmod(&[
        "profile",
        &spec,
        "--from",
        "0",
        "--to",
        "3",
        "--csv",
        csv.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 3);
    let b: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(b["schema"], 1);
    assert_eq!(b["outputs"]["csv_schema"], 1);
    assert_eq!(b["spec_digest"].as_str().unwrap().len(), 64);
    // 3 decades at 16 per decade
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 1 + 49);
}

#[test]
fn orbit_of_one_plus_z_hits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "lin.toml", "schema = 1\nkind = \"explicit\"\nzeros = [1.0]\n");
    let o = minmod(&["orbit", &spec, "--start", &format!("{}", 3f64.log10())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let orbit = &b["outputs"]["orbits"][0];
    assert_eq!(orbit["verdict"], "HIT_ZERO");
}

#[test]
fn max_map_escapes_for_cubes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "cubes.toml", CUBES);
    let o = minmod(&["orbit", &spec, "--start", "2", "--map", "max"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(b["outputs"]["orbits"][0]["verdict"], "ESCAPED");
}

#[test]
fn construct_emits_loadable_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec_out = dir.path().join("bands.toml");
    let o = minmod(&[
        "construct",
        "minimal-type",
        "--seed-log-a0",
        "0.5",
        "--seed-log-b0",
        "1.0",
        "--moderation",
        "2",
        "--delta-scale",
        "0.01",
        "--density",
        "balanced",
        "--spec-out",
        spec_out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(b["outputs"]["stopped_at_horizon"], Value::Bool(false));
    assert_eq!(b["outputs"]["bands"]["bands"].as_array().unwrap().len(), 4);
    assert!(b["outputs"]["recurrence_checks"].as_array().unwrap().iter().all(|c| c["separation"] == true));
    let spec = spec_out.to_str().unwrap();
    let o = minmod(&["mtilde", spec, "--from", "0", "--to", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn range_beyond_validity_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "reg.toml", "schema = 1\nkind = \"regular\"\nmax_log10_r = 4.0\neps = { form = \"constant\", eps = 0.1 }\n");
    let o = minmod(&["profile", &spec, "--from", "1", "--to", "6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("evaluable range"), "{}", stderr(&o));
}

#[test]
fn cached_profile_csv_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let spec = write(dir.path(), "cubes.toml", CUBES);
    let args = ["profile", &spec, "--from", "0.5", "--to", "7", "--cache-dir", cache.to_str().unwrap()];
    let fresh = minmod(&args);
    let hit = minmod(&args);
    assert!(fresh.status.success() && hit.status.success());
    assert_eq!(fresh.stdout, hit.stdout);
}

#[test]
fn shipped_specs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = minmod(&["profile", path.to_str().unwrap(), "--from", "0", "--to", "1", "--points", "4"]);
        assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
        n += 1;
    }
    assert!(n >= 6);
}
