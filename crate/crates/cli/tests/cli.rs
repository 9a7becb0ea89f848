use std::path::Path;
use std::process::{Command, Output};

use cvqkd_cli::presets::FIGURES;

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn fig4_right_has_four_curves() {
    let csv = stdout(&cvqkd(&["sweep", "--figure", "fig4-right"]));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "curve,g_alice,g_bob,distance_km,l_alice_km,l_bob_km,key_rate_raw,key_rate_effective,p_total,physical"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4 * 81);
    for label in ["none", "alice", "bob", "both"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{label},"))).count(), 81);
    }
}

#[test]
fn sweep_is_deterministic() {
    let a = stdout(&cvqkd(&["sweep", "--figure", "fig7-a"]));
    let b = stdout(&cvqkd(&["sweep", "--figure", "fig7-a"]));
    assert_eq!(a, b);
}

#[test]
fn dumped_presets_reproduce_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    for figure in FIGURES {
        let dumped = stdout(&cvqkd(&["sweep", "--figure", figure, "--dump-config"]));
        let path = write_config(dir.path(), &format!("{figure}.cfg"), &dumped);
        let from_preset = stdout(&cvqkd(&["sweep", "--figure", figure]));
        let from_dump = stdout(&cvqkd(&["sweep", "--config", &path]));
        assert_eq!(from_preset, from_dump, "{figure}");
        let redumped = stdout(&cvqkd(&["sweep", "--config", &path, "--dump-config"]));
        assert_eq!(dumped, redumped, "{figure}");
    }
}

#[test]
fn zero_length_grid_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "empty.cfg", "distances_km =\n");
    let csv = stdout(&cvqkd(&["sweep", "--config", &path]));
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn malformed_config_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "bad.cfg", "beta = 0.9\n# fine\nvarience = 1.7\n");
    let out = cvqkd(&["rate", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("varience"), "{err}");
}

#[test]
fn out_of_range_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "beta.cfg", "beta = 1.5\n");
    assert_eq!(cvqkd(&["rate", "--config", &path]).status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_2() {
    assert_eq!(cvqkd(&["rate", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let out = cvqkd(&["sweep", "--figure", "fig4-left", "--output", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("fig5.csv");
    let out = cvqkd(&["sweep", "--figure", "fig5-left", "--output", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert_eq!(written, stdout(&cvqkd(&["sweep", "--figure", "fig5-left"])));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn output_key_in_config() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("rate.txt");
    let path = write_config(dir.path(), "o.cfg", &format!("output = {}\n", target.display()));
    assert!(cvqkd(&["rate", "--config", &path]).status.success());
    assert!(std::fs::read_to_string(target).unwrap().contains("key_rate_effective"));
}

#[test]
fn minimal_rate() {
    let report = stdout(&cvqkd(&["rate"]));
    for key in ["mutual_info_bits", "holevo_bits", "key_rate_raw", "p_total", "key_rate_effective", "physical"] {
        assert!(report.contains(key), "{key} missing");
    }
}

#[test]
fn relay_rate_echoes_default_gains() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "relay.cfg", "protocol = relay\ndistance_km = 1\n");
    let report = stdout(&cvqkd(&["rate", "--config", &path]));
    // sqrt((V^2 - 1) / (2 T (V + eps) + 2 (1 - T))) at 0.5 km per arm.
    let t: f64 = 10f64.powf(-0.01);
    let expected = (1.89 / (2.0 * t * 1.702 + 2.0 * (1.0 - t))).sqrt();
    let line = report.lines().find(|l| l.starts_with("relay_gain_alice")).unwrap();
    let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((value - expected).abs() < 1e-8);
}

#[test]
fn zero_beta_max_distance() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "b.cfg", "beta = 0\n");
    let report = stdout(&cvqkd(&["max-distance", "--config", &path]));
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[8], "0");
}

#[test]
fn optimize_short_distance_keeps_unit_gain() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "o.cfg", "distance_km = 0\n");
    let report = stdout(&cvqkd(&["optimize", "--config", &path]));
    assert!(report.contains("g_alice               1.0000"), "{report}");
    assert!(report.contains("g_bob                 1.0000"), "{report}");
    assert!(report.contains("g_max_alice"));
}

#[test]
fn config_and_figure_conflict() {
    let out = cvqkd(&["sweep", "--figure", "fig4-left", "--config", "x.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}
