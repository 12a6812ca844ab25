use std::path::Path;

use splitdg::config::{RunConfig, PRESETS};
use splitdg::driver::{analyze, run, AnalyzeOptions, Simulation};
use splitdg::field::ConservedField;
use splitdg::Error;

fn tgv(extra: &str) -> String {
    format!(
        r#"
degree = 3
[mesh]
cells = [2, 2, 2]
[case]
kind = "taylor_green"
mach = 0.1
[gas]
mu = 0.001
{extra}
"#
    )
}

fn config(text: &str, dir: &Path) -> RunConfig {
    let mut c = RunConfig::from_toml(text).unwrap();
    c.output.directory = dir.to_path_buf();
    c
}

#[test]
fn runs_are_bitwise_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = format!("preset = \"split-pi-l2roe-smag\"\n{}", tgv("[time]\nend_time = 0.05\n"));
    let ca = config(&text, a.path());
    run(&ca, a.path()).unwrap();
    run(&ca, b.path()).unwrap();
    let fa = std::fs::read(a.path().join("field_final.bin")).unwrap();
    let fb = std::fs::read(b.path().join("field_final.bin")).unwrap();
    assert_eq!(fa, fb);
    let ta = std::fs::read_to_string(a.path().join("timeseries.csv")).unwrap();
    let tb = std::fs::read_to_string(b.path().join("timeseries.csv")).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn restart_continues_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let full = config(&tgv("[time]\nend_time = 10.0\nmax_steps = 8\n[output]\ncheckpoint_every = 4\n"), dir.path());
    run(&full, dir.path()).unwrap();
    let reference = ConservedField::read(&dir.path().join("field_final.bin")).unwrap();
    let ckpt = dir.path().join("checkpoint_00000004.bin");
    let half = ConservedField::read(&ckpt).unwrap();
    assert!(half.time > 0.0 && half.time < reference.time);

    let out = tempfile::tempdir().unwrap();
    let mut resumed = config(&tgv("[time]\nend_time = 10.0\nmax_steps = 4\n"), out.path());
    resumed.restart = Some(ckpt);
    run(&resumed, out.path()).unwrap();
    let cont = ConservedField::read(&out.path().join("field_final.bin")).unwrap();
    assert_eq!(cont.time, reference.time);
    assert_eq!(cont.data, reference.data);
}

#[test]
fn checkpoint_file_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let sim = Simulation::from_config(&config(&tgv(""), dir.path())).unwrap();
    let p = dir.path().join("f.bin");
    sim.field.write(&p).unwrap();
    let back = ConservedField::read(&p).unwrap();
    assert_eq!(back.data, sim.field.data);
    assert_eq!(back.time, sim.field.time);
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(ConservedField::read(&p), Err(Error::Format { .. })));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    std::fs::write(&p, &bad).unwrap();
    assert!(matches!(ConservedField::read(&p), Err(Error::Format { .. })));
}

#[test]
fn restart_with_mismatched_mesh_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sim = Simulation::from_config(&config(&tgv(""), dir.path())).unwrap();
    let p = dir.path().join("f.bin");
    sim.field.write(&p).unwrap();
    let mut other = config(&tgv("").replace("cells = [2, 2, 2]", "cells = [3, 3, 3]"), dir.path());
    other.restart = Some(p);
    assert!(matches!(Simulation::from_config(&other), Err(Error::Format { .. })));
}

#[test]
fn unstable_run_writes_crash_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&tgv("[scheme]\ncfl = 60.0\n[time]\nend_time = 20.0\n"), dir.path());
    let err = run(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::InvalidState { .. } | Error::NonFinite(_)), "{err}");
    let report = std::fs::read_to_string(dir.path().join("crash_report.txt")).unwrap();
    assert!(report.contains("status: crashed"));
    assert!(report.contains("step"));
    assert!(dir.path().join("timeseries.csv").exists());
}

#[test]
fn every_preset_takes_a_step() {
    for p in PRESETS {
        let dir = tempfile::tempdir().unwrap();
        let mut text = format!("preset = \"{p}\"\n{}", tgv("[time]\nmax_steps = 1\n"));
        if p == "channel-dynsmag" {
            text = text.replace("degree = 3", "degree = 4");
        }
        let mut cfg = config(&text, dir.path());
        cfg.output.diagnostics_every = 1;
        let s = run(&cfg, dir.path()).unwrap();
        assert_eq!(s.steps, 1, "{p}");
        assert_eq!(s.samples.len(), 2);
    }
}

#[test]
fn channel_run_produces_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
preset = "channel-dynsmag"
degree = 4
[mesh]
cells = [2, 4, 2]
[case]
kind = "channel"
re_tau = 180.0
[time]
max_steps = 4
[output]
channel_sample_every = 2
"#;
    let cfg = config(text, dir.path());
    let s = run(&cfg, dir.path()).unwrap();
    assert_eq!(s.steps, 4);
    let csv = std::fs::read_to_string(dir.path().join("channel_stats.csv")).unwrap();
    assert!(csv.contains("y_plus"));
    assert!(!dir.path().join("spectrum_final.csv").exists());
}

#[test]
fn analyze_writes_requested_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&tgv("[time]\nmax_steps = 1\n"), dir.path());
    run(&cfg, dir.path()).unwrap();
    let opts = AnalyzeOptions {
        spectrum: true,
        nu: Some(0.001),
        ..Default::default()
    };
    let out = analyze(&dir.path().join("field_final.bin"), &opts, dir.path()).unwrap();
    assert_eq!(out.len(), 1);
    assert!(out[0].ends_with("field_final_spectrum.csv"));
    let opts = AnalyzeOptions {
        channel_stats: true,
        ..Default::default()
    };
    assert!(analyze(&dir.path().join("field_final.bin"), &opts, dir.path()).is_err());
    let missing = analyze(&dir.path().join("nope.bin"), &AnalyzeOptions::default(), dir.path());
    assert!(matches!(missing, Err(Error::Io { .. })));
}

#[test]
fn config_file_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "degree = 3\n[mesh]\ncells = [2, 2]\n").unwrap();
    let err = RunConfig::from_file(&p).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("bad.toml"));
    assert!(matches!(RunConfig::from_file(&dir.path().join("none.toml")), Err(Error::Io { .. })));
}
