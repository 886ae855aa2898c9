//! End-to-end runs of the `platonic` binary.

use std::path::Path;
use std::process::{Command, Output};

use platonic::data::load_image;
use platonic::volume::VoxelGrid;

fn platonic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_platonic"))
        .args(["--threads", "1"])
        .args(args)
        .output()
        .expect("spawn platonic")
}

fn ok(args: &[&str]) -> Output {
    let out = platonic(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_grid_renders_black() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("empty.pvox");
    platonic::data::save_volume(&VoxelGrid::<f32>::zeros(1, 8), &vol).unwrap();
    let png = dir.path().join("empty.png");
    ok(&["render", "--volume", s(&vol), "--view", "30,20", "--formation", "ao", "--out", s(&png)]);
    let img = load_image(&png, 1, None).unwrap();
    assert_eq!(img.resolution(), 8);
    assert!(img.values().iter().all(|&v| v == 0.0));
}

#[test]
fn synth_train_reconstruct_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let held = dir.path().join("held");
    let run = dir.path().join("run");
    ok(&["synth", "--out", s(&data), "--shapes", "3", "--views", "4", "--np", "16", "--seed", "1"]);
    ok(&["synth", "--out", s(&held), "--shapes", "1", "--views", "2", "--np", "16", "--seed", "2"]);
    let manifest = data.join("manifest.csv");
    ok(&[
        "train",
        "--manifest",
        s(&manifest),
        "--held-out",
        s(&held.join("manifest.csv")),
        "--out",
        s(&run),
        "--np",
        "16",
        "--steps",
        "2",
        "--batch-size",
        "2",
        "--set",
        "checkpoint_every=1",
    ]);
    for name in ["config.cfg", "log.csv", "held_out.csv", "last.pnet", "step_000000.pnet", "step_000002.pnet"] {
        assert!(run.join(name).is_file(), "{name} missing");
    }
    let log = std::fs::read_to_string(run.join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);

    let image = std::fs::read_dir(data.join("images")).unwrap().next().unwrap().unwrap().path();
    let recon = dir.path().join("recon.pvox");
    ok(&["reconstruct", "--checkpoint", s(&run.join("last.pnet")), "--image", s(&image), "--out", s(&recon)]);
    let grid = platonic::data::load_volume(&recon).unwrap();
    assert_eq!((grid.channels(), grid.resolution()), (1, 16));
    for k in 0..4 {
        assert!(dir.path().join(format!("recon_view{k}.png")).is_file());
    }

    let truth = std::fs::read_dir(data.join("grids")).unwrap().next().unwrap().unwrap().path();
    let report = dir.path().join("eval.csv");
    let out = ok(&["evaluate", "--recon", s(&recon), "--truth", s(&truth), "--out", s(&report)]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("views per sample: 10"), "{text}");
    assert!(std::fs::read_to_string(&report).unwrap().lines().last().unwrap().starts_with("mean,"));
}

#[test]
fn exit_codes() {
    assert_eq!(platonic(&["--help"]).status.code(), Some(0));
    assert_eq!(platonic(&["render", "--bogus"]).status.code(), Some(1));
    let out = platonic(&["render", "--volume", "/nonexistent/v.pvox", "--view", "0,0", "--out", "/tmp/x.png"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/v.pvox"));
    assert_eq!(platonic(&["gradcheck", "--formation", "ao", "--np", "4"]).status.code(), Some(0));
}
