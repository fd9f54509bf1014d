//! Binary-level tests: subcommand behavior, exit codes, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn orientpipe(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orientpipe"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_file_exits_1_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = orientpipe(&["homography", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("nope.csv"), "{}", stderr_of(&out));
}

#[test]
fn homography_from_four_points_writes_normalized_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("ann.csv"),
        "frame_id,label,src_x,src_y,dst_x,dst_y,domain_pair\n\
         0,corner_NW,100.0,100.0,0.0,0.0,IF\n\
         0,corner_NE,1800.0,110.0,105.0,0.0,IF\n\
         0,corner_SE,1820.0,1000.0,105.0,68.0,IF\n\
         0,corner_SW,90.0,990.0,0.0,68.0,IF\n",
    )
    .unwrap();
    let out = orientpipe(&["homography", "ann.csv", "--out", "h"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("max reprojection error"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("h/h_if.json")).unwrap())
            .unwrap();
    let m = json["frames"][0]["m"].as_array().unwrap();
    assert_eq!(m.len(), 9);
    assert_eq!(m[8].as_f64().unwrap(), 1.0);
}

#[test]
fn homography_degenerate_exits_2_naming_frame() {
    let dir = tempfile::tempdir().unwrap();
    // three collinear source points
    std::fs::write(
        dir.path().join("ann.csv"),
        "frame_id,label,src_x,src_y,dst_x,dst_y,domain_pair\n\
         7,a,100.0,100.0,0.0,0.0,IF\n\
         7,b,200.0,200.0,105.0,0.0,IF\n\
         7,c,300.0,300.0,105.0,68.0,IF\n\
         7,d,90.0,990.0,0.0,68.0,IF\n",
    )
    .unwrap();
    let out = orientpipe(&["homography", "ann.csv", "--out", "h"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("frame 7"), "{}", stderr_of(&out));
}

#[test]
fn synth_rejects_zero_players_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("synth.toml"), "n_players = 0\nduration_s = 1.0\n").unwrap();
    let out = orientpipe(
        &["synth", "--config", "synth.toml", "--out", "s"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("n_players"));
}

#[test]
fn synth_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("synth.toml"),
        "n_players = 2\nduration_s = 1.0\nmiss_rate = 0.1\njitter_m = 0.2\n",
    )
    .unwrap();
    for out_dir in ["a", "b"] {
        let out = orientpipe(
            &["synth", "--config", "synth.toml", "--seed", "7", "--out", out_dir],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    }
    for name in ["detections.jsonl", "sensors.csv", "annotations.csv", "truth.jsonl", "scenario.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across identical invocations");
    }
}

/// Full chain: synth -> homography -> build -> eval.
#[test]
fn full_chain_zero_noise_reports_full_match_rate() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("synth.toml"), "n_players = 3\nduration_s = 2.0\n").unwrap();
    let out = orientpipe(
        &["synth", "--config", "synth.toml", "--seed", "4", "--out", "scen"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));

    let out = orientpipe(
        &["homography", "scen/annotations.csv", "--out", "scen/h"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(dir.path().join("scen/h/h_sf.json").is_file());

    let out = orientpipe(
        &[
            "build",
            "--detections",
            "scen/detections.jsonl",
            "--sensors",
            "scen/sensors.csv",
            "--homographies",
            "scen/h",
            "--out",
            "built",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let report_line = text.lines().find(|l| l.starts_with("REPORT_JSON:")).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(report_line.trim_start_matches("REPORT_JSON:").trim()).unwrap();
    assert!(report["matched"].as_u64().unwrap() > 0);
    assert_eq!(report["frames_skipped"].as_u64().unwrap(), 0);
    assert!(dir.path().join("built/manifest.json").is_file());
    assert!(dir.path().join("built/dataset.jsonl").is_file());
    // grayscale exports mirror the matched crops
    assert!(dir.path().join("built/crops_gray/crops").is_dir());

    let out = orientpipe(
        &[
            "eval",
            "--pred",
            "built/dataset.jsonl",
            "--truth",
            "scen/truth.jsonl",
            "--experiment",
            "synthetic",
            "--out",
            "metrics",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let metrics = std::fs::read_to_string(dir.path().join("metrics/metrics.csv")).unwrap();
    let row = metrics.lines().nth(1).unwrap();
    assert!(row.starts_with("synthetic,-,-,0.000000,0.000000"), "{row}");
}

#[test]
fn build_with_empty_detections_exits_0_with_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("synth.toml"), "n_players = 2\nduration_s = 1.0\n").unwrap();
    let out = orientpipe(
        &["synth", "--config", "synth.toml", "--out", "scen"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let out = orientpipe(
        &["homography", "scen/annotations.csv", "--out", "scen/h"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = orientpipe(
        &[
            "build",
            "--detections",
            "empty.jsonl",
            "--sensors",
            "scen/sensors.csv",
            "--homographies",
            "scen/h",
            "--out",
            "built",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let dataset = std::fs::read_to_string(dir.path().join("built/dataset.jsonl")).unwrap();
    assert!(dataset.is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("built/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["matched"].as_u64().unwrap(), 0);
}

#[test]
fn build_with_bad_clock_offset_reports_skips() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("synth.toml"), "n_players = 2\nduration_s = 1.0\n").unwrap();
    orientpipe(&["synth", "--config", "synth.toml", "--out", "scen"], dir.path());
    orientpipe(&["homography", "scen/annotations.csv", "--out", "scen/h"], dir.path());
    std::fs::write(
        dir.path().join("build.toml"),
        "gate_m = 2.0\nfps = 25.0\nclock_offset_s = 500.0\nfield_length_m = 105.0\n\
         field_width_m = 68.0\nk_bins = 12\nseed = 0\n",
    )
    .unwrap();
    let out = orientpipe(
        &[
            "build",
            "--config",
            "build.toml",
            "--detections",
            "scen/detections.jsonl",
            "--sensors",
            "scen/sensors.csv",
            "--homographies",
            "scen/h",
            "--out",
            "built",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("built/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["matched"].as_u64().unwrap(), 0);
    assert!(report["player_frames_no_coverage"].as_u64().unwrap() > 0);
    assert_eq!(report["frames_skipped"], report["frames_total"]);
}

#[test]
fn eval_identical_files_give_zero_error_and_shifted_predictions_superdiagonal() {
    let dir = tempfile::tempdir().unwrap();
    let truth: String = (0..120)
        .map(|i| {
            format!(
                r#"{{"frame_id":{i},"player_id":"p","true_alpha":{}}}"#,
                (i * 3) % 360
            ) + "\n"
        })
        .collect();
    std::fs::write(dir.path().join("truth.jsonl"), &truth).unwrap();

    let out = orientpipe(
        &["eval", "--pred", "truth.jsonl", "--truth", "truth.jsonl", "--out", "m"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("MEAE=0.000000"));

    // predictions shifted one bin clockwise
    let shifted: String = (0..120)
        .map(|i| {
            format!(
                r#"{{"frame_id":{i},"player_id":"p","alpha":{}}}"#,
                ((i * 3) % 360 + 30) % 360
            ) + "\n"
        })
        .collect();
    std::fs::write(dir.path().join("pred.jsonl"), &shifted).unwrap();
    let out = orientpipe(
        &["eval", "--pred", "pred.jsonl", "--truth", "truth.jsonl", "--out", "m2", "--gnuplot"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let confusion = std::fs::read_to_string(dir.path().join("m2/confusion.csv")).unwrap();
    let lines: Vec<&str> = confusion.lines().collect();
    // row b1 concentrates on column b2, row b12 wraps to b1
    let b1: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(b1[0], "b1");
    assert!(b1[2].parse::<u64>().unwrap() > 0);
    assert_eq!(b1[1], "0");
    let b12: Vec<&str> = lines[12].split(',').collect();
    assert!(b12[1].parse::<u64>().unwrap() > 0);
    assert!(dir.path().join("m2/confusion.dat").is_file());
}

#[test]
fn eval_unmatched_keys_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("pred.jsonl"),
        r#"{"frame_id":0,"player_id":"ghost","alpha":1.0}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("truth.jsonl"),
        r#"{"frame_id":0,"player_id":"p","true_alpha":1.0}"#,
    )
    .unwrap();
    let out = orientpipe(
        &["eval", "--pred", "pred.jsonl", "--truth", "truth.jsonl", "--out", "m"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("ghost"), "{}", stderr_of(&out));
}

#[test]
fn toytrain_writes_row_per_loss_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("toy.json"),
        r#"{"k_bins": 12, "sigma": 0.2, "n_train": 120, "n_test": 60, "epochs": 40, "lr": 0.1, "seeds": [1, 2]}"#,
    )
    .unwrap();
    let out = orientpipe(
        &["toytrain", "--config", "toy.json", "--out", "toy"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let results = std::fs::read_to_string(dir.path().join("toy/results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines[0], "loss,seed,MEAE_t,MDAE_t,final_train_loss");
    assert_eq!(lines.len(), 1 + 4, "one row per (loss, seed)");
    assert!(lines.iter().skip(1).any(|l| l.starts_with("cyclic,1,")));
    assert!(lines.iter().skip(1).any(|l| l.starts_with("one-hot,2,")));
    let table = std::fs::read_to_string(dir.path().join("toy/table.csv")).unwrap();
    assert!(table.contains("cyclic-k12") && table.contains("one-hot-k12"));
}

#[test]
fn quiet_flag_suppresses_chatter() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("synth.toml"), "n_players = 1\nduration_s = 0.5\n").unwrap();
    let out = orientpipe(
        &["synth", "--config", "synth.toml", "--out", "s", "--quiet"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).is_empty());
}
