use std::path::Path;
use std::process::{Command, Output};

fn splitdg(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_splitdg"));
    c.args(args).env("RUST_LOG", "warn").env_remove("SPLITDG_OUTPUT_DIR");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

const TGV: &str = r#"
degree = 2
[mesh]
cells = [2, 2, 2]
[case]
kind = "taylor_green"
mach = 0.1
[time]
max_steps = 2
"#;

fn write_config(dir: &Path, body: &str) -> String {
    let out = dir.join("out");
    let text = format!("{body}[output]\ndirectory = {:?}\n", out.to_str().unwrap());
    let p = dir.join("case.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TGV);
    let o = splitdg(&["run", &cfg], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/field_final.bin").exists());
    assert!(dir.path().join("out/timeseries.csv").exists());
}

#[test]
fn output_directory_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TGV);
    let alt = dir.path().join("alt");
    let o = splitdg(&["run", &cfg], &[("SPLITDG_OUTPUT_DIR", &alt)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(alt.join("field_final.bin").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TGV.replace("mach = 0.1", "mach = 0.1\nspeed = 3"));
    let o = splitdg(&["run", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("speed"));
    let cfg = write_config(dir.path(), &format!("preset = \"nope\"\n{TGV}"));
    assert_eq!(splitdg(&["run", &cfg], &[]).status.code(), Some(2));
    let o = splitdg(&["operators", "dump", "--degree", "0"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn crash_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = TGV.replace("max_steps = 2", "end_time = 30.0") + "[scheme]\ncfl = 80.0\n";
    let cfg = write_config(dir.path(), &body);
    let o = splitdg(&["run", &cfg], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/crash_report.txt").exists());
}

#[test]
fn io_and_format_errors_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(splitdg(&["run", missing.to_str().unwrap()], &[]).status.code(), Some(4));
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, b"NOTAFIELD").unwrap();
    let o = splitdg(&["analyze", bad.to_str().unwrap(), "--spectrum"], &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn analyze_stored_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TGV);
    assert_eq!(splitdg(&["run", &cfg], &[]).status.code(), Some(0));
    let field = dir.path().join("out/field_final.bin");
    let o = splitdg(&["analyze", field.to_str().unwrap(), "--spectrum", "--nu", "0.01"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("out/field_final_spectrum.csv").exists());
}

#[test]
fn operator_dump_is_consistent() {
    let o = splitdg(&["operators", "dump", "--degree", "3"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,i,j,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.iter().filter(|r| r[0] == "node").count(), 4);
    assert_eq!(rows.iter().filter(|r| r[0] == "derivative").count(), 16);
    let w: f64 = rows.iter().filter(|r| r[0] == "weight").map(|r| r[3].parse::<f64>().unwrap()).sum();
    assert!((w - 2.0).abs() < 1e-14);
    // rows of the derivative matrix annihilate constants
    for i in 0..4 {
        let s: f64 = rows
            .iter()
            .filter(|r| r[0] == "derivative" && r[1] == i.to_string())
            .map(|r| r[3].parse::<f64>().unwrap())
            .sum();
        assert!(s.abs() < 1e-13);
    }
}
