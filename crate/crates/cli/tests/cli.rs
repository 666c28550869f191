//! End-to-end checks of the binary: subcommand wiring, file layout,
//! exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn derain_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_derain"))
}

fn run(args: &[&str]) -> Output {
    derain_bin().args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "scene": {
    "width": 64, "height": 48, "frame_count": 40,
    "fps_num": 32, "fps_den": 1, "channels": 3, "seed": 7,
    "object": { "width": 10, "height": 10, "x": 6, "y": 20,
                "vx": 1, "vy": 0, "color": [230, 232, 226] }
  },
  "rain": {
    "streaks_per_frame": 8, "length_mean": 6.0, "length_std": 1.5,
    "angle_deg": 10.0, "streak_width": 1, "brightness_delta": 80,
    "rng_seed": 42
  }
}"#,
    )
    .unwrap();
    path
}

#[test]
fn synth_then_derain_then_psnr() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let data = dir.path().join("data");

    let out = run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--output",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "synth failed: {out:?}");
    for sub in ["clean", "rainy", "truth_rain", "truth_object"] {
        assert!(
            data.join(sub).join("meta.txt").is_file(),
            "missing {sub}/meta.txt"
        );
    }
    assert!(data.join("clean/frame_000000.png").is_file());
    assert!(data.join("truth_rain/frame_000039.pgm").is_file());
    assert!(data.join("config.json").is_file());

    let derained = dir.path().join("derained");
    let report = dir.path().join("report.csv");
    let out = run(&[
        "derain",
        "--input",
        data.join("rainy").to_str().unwrap(),
        "--output",
        derained.to_str().unwrap(),
        "--dump-masks",
        "--truth-clean",
        data.join("clean").to_str().unwrap(),
        "--truth-rain",
        data.join("truth_rain").to_str().unwrap(),
        "--truth-object",
        data.join("truth_object").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "derain failed: {out:?}");
    assert!(derained.join("out_000000.png").is_file());
    assert!(derained.join("out_000039.png").is_file());
    assert!(derained.join("mask_000039.pgm").is_file());

    let csv = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "frame,psnr_input_db,psnr_output_db,rain_recall,rain_precision,object_recall"
    );
    assert_eq!(lines.len(), 42, "40 frames + header + avg");
    assert!(lines[41].starts_with("avg,"));

    // deraining must improve psnr vs the rainy input on this scene
    let avg: Vec<f64> = lines[41]
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(
        avg[1] > avg[0],
        "output psnr {} <= input psnr {}",
        avg[1],
        avg[0]
    );

    let psnr_report = dir.path().join("psnr.csv");
    let out = run(&[
        "psnr",
        "--a",
        derained.to_str().unwrap(),
        "--b",
        data.join("clean").to_str().unwrap(),
        "--report",
        psnr_report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "psnr failed: {out:?}");
    let csv = std::fs::read_to_string(&psnr_report).unwrap();
    assert!(csv.starts_with("frame,psnr_db\n"));
    assert!(csv.lines().last().unwrap().starts_with("avg,"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("avg psnr:"), "stdout: {stdout}");
}

#[test]
fn psnr_of_identical_sequences_hits_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let data = dir.path().join("data");
    assert!(run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--output",
        data.to_str().unwrap()
    ])
    .status
    .success());
    let out = run(&[
        "psnr",
        "--a",
        data.join("clean").to_str().unwrap(),
        "--b",
        data.join("clean").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("avg psnr: 100.0000"));
}

#[test]
fn psnr_count_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let data = dir.path().join("data");
    assert!(run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--output",
        data.to_str().unwrap()
    ])
    .status
    .success());
    // shorten one sequence's declared count
    let meta_path = data.join("clean/meta.txt");
    let meta = std::fs::read_to_string(&meta_path).unwrap();
    std::fs::write(&meta_path, meta.replace("frame_count=40", "frame_count=39")).unwrap();
    let out = run(&[
        "psnr",
        "--a",
        data.join("clean").to_str().unwrap(),
        "--b",
        data.join("rainy").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "derain",
        "--input",
        dir.path().join("nope").to_str().unwrap(),
        "--output",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {:?}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("meta error"));
}

#[test]
fn invalid_fraction_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "derain",
        "--input",
        dir.path().to_str().unwrap(),
        "--output",
        dir.path().join("out").to_str().unwrap(),
        "--width-frac",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_synth_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, "{ not json").unwrap();
    let out = run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--output",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sequence_gap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let data = dir.path().join("data");
    assert!(run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--output",
        data.to_str().unwrap()
    ])
    .status
    .success());
    std::fs::remove_file(data.join("rainy/frame_000005.png")).unwrap();
    let out = run(&[
        "derain",
        "--input",
        data.join("rainy").to_str().unwrap(),
        "--output",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("000005"), "stderr: {stderr}");
}

#[test]
fn partial_truth_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "derain",
        "--input",
        dir.path().to_str().unwrap(),
        "--output",
        dir.path().join("out").to_str().unwrap(),
        "--truth-clean",
        dir.path().to_str().unwrap(),
    ]);
    // clap enforces the flag group; usage errors exit with 2
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let data = dir.path().join("data");
    assert!(run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--output",
        data.to_str().unwrap()
    ])
    .status
    .success());

    let mut outputs = Vec::new();
    for round in 0..2 {
        let out_dir = dir.path().join(format!("run{round}"));
        let report = dir.path().join(format!("report{round}.csv"));
        let out = run(&[
            "derain",
            "--input",
            data.join("rainy").to_str().unwrap(),
            "--output",
            out_dir.to_str().unwrap(),
            "--truth-clean",
            data.join("clean").to_str().unwrap(),
            "--truth-rain",
            data.join("truth_rain").to_str().unwrap(),
            "--truth-object",
            data.join("truth_object").to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let frames: Vec<Vec<u8>> = (0..40)
            .map(|n| std::fs::read(out_dir.join(format!("out_{n:06}.png"))).unwrap())
            .collect();
        outputs.push((frames, std::fs::read(&report).unwrap()));
    }
    assert_eq!(
        outputs[0].0, outputs[1].0,
        "output frames differ between runs"
    );
    assert_eq!(outputs[0].1, outputs[1].1, "reports differ between runs");
}

#[test]
fn mog_estimator_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let data = dir.path().join("data");
    assert!(run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--output",
        data.to_str().unwrap()
    ])
    .status
    .success());
    let out = run(&[
        "derain",
        "--input",
        data.join("rainy").to_str().unwrap(),
        "--output",
        dir.path().join("out").to_str().unwrap(),
        "--bg",
        "mog",
    ]);
    assert!(
        out.status.success(),
        "stderr: {:?}",
        String::from_utf8_lossy(&out.stderr)
    );
}
