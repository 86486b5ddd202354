//! End-to-end checks of the command line: outputs, round trips, exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

use cpgame::io::{format_series, parse_series, read_series};

fn cpgame(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cpgame")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Re-serializes a CSV through the reader and writer; numeric fields must
/// survive a parse/print cycle unchanged.
fn csv_round_trips(file: &Path) {
    let original = fs::read(file).unwrap();
    let mut reader = csv::Reader::from_reader(original.as_slice());
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(reader.headers().unwrap()).unwrap();
    for record in reader.records() {
        let record = record.unwrap();
        for field in record.iter() {
            if let Ok(v) = field.parse::<f64>() {
                assert_eq!(v.to_string(), field, "{}: `{field}` is not in shortest form", file.display());
            }
        }
        writer.write_record(&record).unwrap();
    }
    assert_eq!(writer.into_inner().unwrap(), original, "{} changed on round trip", file.display());
}

#[test]
fn simulate_writes_round_trippable_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let run = cpgame(&["simulate", "--players", "5", "--cap", "1500", "--dynamics", "fpd", "--out", path(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for name in ["trajectory.csv", "peak_series.csv", "final_profile.csv", "summary.txt", "simulate.manifest.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    for name in ["trajectory.csv", "peak_series.csv", "final_profile.csv"] {
        csv_round_trips(&out.join(name));
    }
    let profile = read_series(&out.join("final_profile.csv")).unwrap();
    assert_eq!(profile.len(), 96);
    assert_eq!(format_series(&profile), fs::read_to_string(out.join("final_profile.csv")).unwrap());
}

#[test]
fn generated_day_feeds_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let gen = cpgame(&["gen-data", "--intervals", "24", "--noise-mw", "0", "--out", path(&data)]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let baseline = read_series(&data.join("baseline.csv")).unwrap();
    assert_eq!(baseline.iter().copied().fold(f64::MIN, f64::max), 85_000.0);
    let text = fs::read_to_string(data.join("prices.csv")).unwrap();
    assert_eq!(format_series(&parse_series(&text, "prices").unwrap()), text);

    let out = dir.path().join("sim");
    let config = data.join("scenario.toml");
    let sim = cpgame(&["simulate", "--config", path(&config), "--actions", "coarse", "--out", path(&out)]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    csv_round_trips(&out.join("library.csv"));
}

#[test]
fn counterexample_reports_the_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce");
    let run = cpgame(&["counterexample", "--case", "brd-oscillation", "--out", path(&out)]);
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("dynamics=BRD init=symmetric oscillation_period=2"), "{stdout}");
    csv_round_trips(&out.join("counterexample.csv"));
}

#[test]
fn report_needs_stored_results() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = dir.path().join("report");
    let run = cpgame(&["report", "--input", path(&empty), "--out", path(&out)]);
    assert_eq!(run.status.code(), Some(1));
    assert!(!out.exists(), "failed run left its output directory behind");
}

#[test]
fn report_renders_a_stored_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let run = cpgame(&["sweep", "--players", "3", "--cap", "1500", "--out", path(&sweep)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    csv_round_trips(&sweep.join("sweep.csv"));
    let report = cpgame(&["report", "--input", path(&sweep), "--out", path(&dir.path().join("r"))]);
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    assert_eq!(text, fs::read_to_string(sweep.join("table.txt")).unwrap());
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).display().to_string();
    assert_eq!(cpgame(&["simulate", "--dynamics", "xyz", "--out", &out("a")]).status.code(), Some(1));
    assert_eq!(cpgame(&["simulate", "--players", "0", "--out", &out("b")]).status.code(), Some(1));
    let missing = dir.path().join("nope.toml");
    assert_eq!(cpgame(&["simulate", "--config", path(&missing), "--out", &out("c")]).status.code(), Some(3));
    assert!(cpgame(&["--version"]).status.success());
    assert!(!dir.path().join("b").exists());
}

#[test]
fn replay_rejects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(cpgame(&["gen-data", "--intervals", "24", "--out", path(&data)]).status.success());
    let first = dir.path().join("first");
    let config = data.join("scenario.toml");
    assert!(cpgame(&["simulate", "--config", path(&config), "--out", path(&first)]).status.success());
    let manifest = first.join("simulate.manifest.json");

    let again = dir.path().join("again");
    let ok = cpgame(&["replay", "--manifest", path(&manifest), "--out", path(&again)]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let mut prices = read_series(&data.join("prices.csv")).unwrap();
    prices[0] += 1.0;
    fs::write(data.join("prices.csv"), format_series(&prices)).unwrap();
    let changed = cpgame(&["replay", "--manifest", path(&manifest), "--out", path(&dir.path().join("third"))]);
    assert_eq!(changed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&changed.stderr).contains("inputs differ"));
}
