use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nonlocal_bbm::fields::catalog_field;
use nonlocal_bbm::operators::frac_derivative;
use nonlocal_bbm::quadrature::Preset;
use nonlocal_bbm::QuadratureSpec;
use nonlocal_bbm_cli::output::Summary;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nonlocal-bbm"));
    c.env_remove("NONLOCAL_BBM_GOLDEN_DIR");
    c
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../golden")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn rows(csv: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn value_of(rows: &[Vec<String>], case_id: &str) -> f64 {
    rows.iter().find(|r| r[0] == case_id).unwrap()[3]
        .parse()
        .unwrap()
}

#[test]
fn constants_command() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["constants", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&dir.path().join("results.csv"));
    assert!((value_of(&r, "bbm_constant/n2") - 4.0).abs() < 1e-12);
    assert!((value_of(&r, "bbm_constant/n3") - 2.0 * PI).abs() < 1e-10);
    assert!((value_of(&r, "riesz_constant/n2/alpha1") - 1.0 / (2.0 * PI)).abs() < 1e-15);
    assert!((value_of(&r, "riesz_constant/n3/alpha1") - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);

    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"dimension": 2, "p": 2.0, "outputs": {"csv": "k.csv"}}"#,
    );
    let o = run(&["constants", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&dir.path().join("k.csv"));
    assert!((value_of(&r, "bbm_constant_p/n2/p2") - (PI / 2.0).sqrt()).abs() < 1e-14);
}

#[test]
fn constants_match_the_golden_file() {
    let dir = TempDir::new().unwrap();
    let o = run(&["constants", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report = dir.path().join("results.csv");
    let o = bin()
        .env("NONLOCAL_BBM_GOLDEN_DIR", golden_dir())
        .args([
            "compare-golden",
            "--report",
            report.to_str().unwrap(),
            "--golden",
            "constants.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases = [
        (
            "{\"dimension\": 2,\n \"field\": \"bump\",\n \"schedule\": [0.5, 1.0]}",
            "schedule",
        ),
        (
            r#"{"dimension": 2, "field": "bump", "alpha_max": 0.99}"#,
            "alpha_max",
        ),
        (r#"{"dimension": 5, "field": "bump"}"#, "dimension"),
        (r#"{"dimension": 2, "field": "bump", "p": 0.5}"#, "`p`"),
        (
            r#"{"dimension": 2, "field": "bump", "mode": "audit"}"#,
            "mode",
        ),
        (
            r#"{"dimension": 2, "field": "bump", "operator": "riesz_of_gradient"}"#,
            "operator",
        ),
        (
            r#"{"dimension": 2, "field": "bump", "quadrature": {"gauss_order": 2}}"#,
            "quadrature",
        ),
        ("{\"dimension\": 2,", ""),
    ];
    for (json, field) in cases {
        let cfg = write_config(dir.path(), "bad.json", json);
        let o = run(&["sweep", "--config", &cfg, "--out", out]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{json}: {err}");
        assert!(err.contains(field), "{json}: {err}");
    }
    let o = run(&["sweep", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["sweep", "--quad-preset", "medium"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn line_numbers_are_reported() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        "{\"dimension\": 2,\n \"field\": \"bump\",\n \"schedule\": [0.5, 1.0]}",
    );
    let o = run(&["sweep", "--config", &cfg]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn zero_field_sweep_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "z.json",
        r#"{"dimension": 2, "field": "zero", "points": [[0.0, 0.0], [0.5, 0.5]], "quadrature": {"preset": "fast"}}"#,
    );
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&dir.path().join("results.csv"));
    assert_eq!(r.len(), 14);
    for row in &r {
        for c in [3, 4, 5, 6] {
            assert_eq!(row[c].parse::<f64>().unwrap(), 0.0);
        }
        assert_eq!(row[8], "true");
    }
}

#[test]
fn coarse_audit_flags_non_convergence() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.json",
        r#"{"dimension": 2, "field": "bump", "points": [[0.3, 0.2]], "schedule": [0.5, 0.99],
            "quadrature": {"preset": "fast", "gauss_order": 8, "inner_shells": 8}}"#,
    );
    let o = run(&[
        "audit",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let summary: Summary =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let audit = &summary.audits[0];
    assert!(audit.all_pass());
    assert!(!audit.all_converged());
}

#[test]
fn eval_reproduces_library_values_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.json",
        r#"{"dimension": 1, "field": "modulated_bump", "points": [[0.25], [1.5]], "schedule": [0.3, 0.99]}"#,
    );
    let o = run(&[
        "eval",
        "--config",
        &cfg,
        "--quad-preset",
        "default",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let r = rows(&dir.path().join("results.csv"));
    assert_eq!(r.len(), 4);
    let f = catalog_field(1, "modulated_bump").unwrap();
    let spec = QuadratureSpec::preset(Preset::Default, 1);
    for row in &r {
        let alpha: f64 = row[1].parse().unwrap();
        let x: f64 = row[2].parse().unwrap();
        let v = frac_derivative(&f, alpha, &[x, 0.0, 0.0], &spec).unwrap();
        assert_eq!(row[3].parse::<f64>().unwrap(), v.value);
        assert_eq!(row[4].parse::<f64>().unwrap(), v.error_estimate);
    }
}

#[test]
fn summary_round_trips_and_hash_tracks_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"dimension": 1, "field": "bump", "points": [[0.2]], "quadrature": {"preset": "fast"}}"#,
    );
    let out = dir.path().join("a");
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("summary.json")).unwrap();
    let summary: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(summary.to_json(), text);
    assert_eq!(summary.version, 1);
    assert_eq!(summary.config_hash.len(), 64);
    assert_eq!(summary.fits.len(), 1);
    assert!((0.8..=1.2).contains(&summary.fits[0].fit.slope));

    let other = dir.path().join("b");
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--quad-preset",
        "default",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let b: Summary =
        serde_json::from_str(&fs::read_to_string(other.join("summary.json")).unwrap()).unwrap();
    assert_ne!(b.config_hash, summary.config_hash);
}

#[test]
fn compare_golden() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"dimension": 1, "field": "shifted_bump", "points": [[0.1], [0.6]], "quadrature": {"preset": "fast"}}"#,
    );
    let o = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report = dir.path().join("results.csv");
    let text = fs::read_to_string(&report).unwrap();
    let compare = |golden: &str, extra: &[&str]| {
        let g = dir.path().join("golden.csv");
        fs::write(&g, golden).unwrap();
        let mut args = vec![
            "compare-golden",
            "--report",
            report.to_str().unwrap(),
            "--golden",
            "golden.csv",
        ];
        args.extend_from_slice(extra);
        bin()
            .env("NONLOCAL_BBM_GOLDEN_DIR", dir.path())
            .args(&args)
            .output()
            .unwrap()
    };
    assert_eq!(compare(&text, &[]).status.code(), Some(0));

    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[3].split(',').map(str::to_string).collect();
    let v: f64 = cells[3].parse().unwrap();
    cells[3] = format!("{:.16e}", v * (1.0 + 1e-8));
    let id = format!("{} | {} | {}", cells[0], cells[1], cells[2]);
    lines[3] = cells.join(",");
    let perturbed = lines.join("\n") + "\n";
    let o = compare(&perturbed, &[]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains(&id) && stdout.contains("column value"),
        "{stdout}"
    );
    assert_eq!(
        compare(&perturbed, &["--tol", "value=1e-7"]).status.code(),
        Some(0)
    );

    let extra = format!("{text}pointwise_gradient/shifted_bump/n1,5.0000000000000000e-1,9.0000000000000000e0,1,0,0,0,,true\n");
    let o = compare(&extra, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("missing row"));

    assert_eq!(compare("not,a\ncsv\"", &[]).status.code(), Some(2));
    assert_eq!(compare(&text, &["--tol", "value"]).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.json",
        r#"{"dimension": 2, "field": "modulated_bump", "points": [[0.3, 0.2]], "schedule": [0.5, 0.9, 0.99],
            "quadrature": {"preset": "fast"}}"#,
    );
    let outputs: Vec<(Vec<u8>, Vec<u8>)> = ["1", "4"]
        .iter()
        .map(|t| {
            let out = dir.path().join(format!("t{t}"));
            let o = run(&[
                "--threads",
                t,
                "sweep",
                "--config",
                &cfg,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(o.status.code(), Some(0));
            (
                fs::read(out.join("results.csv")).unwrap(),
                fs::read(out.join("summary.json")).unwrap(),
            )
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn report_mode_runs_every_part() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.json",
        r#"{"dimension": 2, "field": "bump", "points": [[0.3, 0.2]], "schedule": [0.5, 0.99],
            "quadrature": {"preset": "fast"}, "mode": "report",
            "audit": {"lemma_bound": true, "seminorm_bound": false, "subrepresentation": false, "potential_domination": false}}"#,
    );
    let o = run(&[
        "report",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 1)));
    let summary: Summary =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.cases.len(), 2);
    assert_eq!(summary.audits.len(), 1);
    assert!(summary.audits[0].all_pass());
    let r = rows(&dir.path().join("results.csv"));
    assert!(r.iter().any(|row| row[0] == "bbm_constant/n2"));
    assert!(r.iter().any(|row| row[0] == "pointwise_gradient/bump/n2"));
    assert!(r.iter().any(|row| row[0] == "audit_lemma_bound/bump/n2"));
}
