//! Command-line surface tests: exit codes, the demo pipeline, perfect-score
//! sanity, and the two plot kinds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ghosttrack::mot::write_predictions;
use ghosttrack::sequence::SequenceSource;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghosttrack")).args(args).output().expect("spawn ghosttrack")
}

fn scenario_json(dir: &Path) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(
        &p,
        r#"{
            "name": "cli", "width": 320, "height": 180, "frames": 100,
            "camera": { "focal": 300.0 },
            "background_depth": 60.0,
            "walkers": [
                { "start": {"x": -3.4, "y": 0.2, "z": 10.0, "height": 1.7, "aspect": 0.4},
                  "velocity": [0.075, 0.0, 0.0] },
                { "start": {"x": 4.2, "y": -0.5, "z": 16.0, "height": 1.8, "aspect": 0.4},
                  "velocity": [-0.085, 0.0, 0.0] }
            ],
            "occluders": [ { "x": [-0.5, 0.5], "y": [-1.8, 1.8], "z": [5.0, 5.6] } ],
            "detector": { "min_visibility": 0.5, "miss_rate": 0.05,
                          "center_noise_px": 1.5, "height_noise_px": 1.0 },
            "seed": 4
        }"#,
    )
    .unwrap();
    p
}

const TRACK_CFG: &[&str] =
    &["--set", "focal=300", "--set", "f_process=5", "--set", "f_observation=40"];

#[test]
fn help_succeeds_and_unknown_flags_fail() {
    assert!(cli(&["--help"]).status.success());
    assert!(cli(&["track", "--help"]).status.success());
    // missing required inputs: usage error, exit code 2
    assert_eq!(cli(&["track"]).status.code(), Some(2));
    assert_eq!(cli(&["eval"]).status.code(), Some(2));
    // unknown flags are rejected
    assert_eq!(cli(&["track", "--does-not-exist"]).status.code(), Some(2));
}

#[test]
fn runs_print_the_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let out = cli(&[
        "synth",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        tmp.path().join("seq").to_str().unwrap(),
        "--set",
        "n_age=12",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("resolved config:"));
    assert!(stdout.contains("n_age = 12"));
}

#[test]
fn demo_pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let seq = tmp.path().join("seq");
    let out_dir = tmp.path().join("out");
    let report = tmp.path().join("report.txt");

    let r = cli(&["synth", "--scenario", sc.to_str().unwrap(), "--out", seq.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let mut args =
        vec!["track", "--seq", seq.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    args.extend_from_slice(TRACK_CFG);
    let r = cli(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out_dir.join("cli.txt").is_file());
    assert!(out_dir.join("cli.hyp.jsonl").is_file());

    let r = cli(&[
        "eval",
        "--gt",
        seq.to_str().unwrap(),
        "--pred",
        out_dir.join("cli.hyp.jsonl").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let kv = std::fs::read_to_string(&report).unwrap();
    let f1: f64 = kv
        .lines()
        .find(|l| l.starts_with("aggregate.topk_f1_all"))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!(f1 > 0.7, "pipeline Top-5 F1 too low: {f1}");
}

#[test]
fn evaluating_ground_truth_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let seq = tmp.path().join("seq");
    assert!(cli(&["synth", "--scenario", sc.to_str().unwrap(), "--out", seq.to_str().unwrap()])
        .status
        .success());

    // convert ground truth into predictions and evaluate it against itself
    let src = SequenceSource::open(&seq).unwrap();
    let gt = src.read_gt().unwrap();
    let perfect = gt.as_predictions(0.10);
    let txt = tmp.path().join("perfect.txt");
    let hyp = tmp.path().join("perfect.hyp.jsonl");
    write_predictions(&perfect, &txt, &hyp).unwrap();

    let report = tmp.path().join("report.txt");
    let r = cli(&[
        "eval",
        "--gt",
        seq.to_str().unwrap(),
        "--pred",
        hyp.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let kv = std::fs::read_to_string(&report).unwrap();
    for key in
        ["topk_f1_occl", "topk_f1_all", "top1_f1_occl", "top1_f1_all", "idf1_occl", "idf1_all"]
    {
        let line = kv
            .lines()
            .find(|l| l.starts_with(&format!("aggregate.{key}")))
            .unwrap_or_else(|| panic!("missing {key}"));
        let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 1.0, "{key} must be exactly 1 for perfect predictions");
    }
}

#[test]
fn pr_curvelet_sweep_trades_recall_against_precision() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let seq = tmp.path().join("seq");
    assert!(cli(&["synth", "--scenario", sc.to_str().unwrap(), "--out", seq.to_str().unwrap()])
        .status
        .success());

    let csv = tmp.path().join("pr.csv");
    let svg = tmp.path().join("pr.svg");
    let mut args = vec![
        "plot",
        "pr_curvelet",
        "--seq",
        seq.to_str().unwrap(),
        "--n-age",
        "5,15,30,60",
        "--out-csv",
        csv.to_str().unwrap(),
        "--out-svg",
        svg.to_str().unwrap(),
    ];
    args.extend_from_slice(TRACK_CFG);
    let r = cli(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut rows: Vec<(u32, f64, f64)> = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        rows.push((f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap()));
    }
    assert_eq!(rows.len(), 4);
    for w in rows.windows(2) {
        assert!(w[1].0 > w[0].0, "sweep must be ordered by n_age");
        assert!(w[1].2 >= w[0].2 - 1e-9, "recall must not decrease with n_age: {rows:?}");
        assert!(w[1].1 <= w[0].1 + 1e-9, "precision must not increase with n_age: {rows:?}");
    }
    // the knob actually moves something
    assert!(rows.last().unwrap().2 > rows[0].2, "recall must grow over the sweep: {rows:?}");

    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.contains("<polyline"));
    assert_eq!(svg_text.matches("<circle").count(), 4);
}

#[test]
fn topdown_plot_emits_states_and_ellipses() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let seq = tmp.path().join("seq");
    assert!(cli(&["synth", "--scenario", sc.to_str().unwrap(), "--out", seq.to_str().unwrap()])
        .status
        .success());

    let csv = tmp.path().join("td.csv");
    let svg = tmp.path().join("td.svg");
    let mut args = vec![
        "plot",
        "topdown",
        "--seq",
        seq.to_str().unwrap(),
        "--ids",
        "1",
        "--out-csv",
        csv.to_str().unwrap(),
        "--out-svg",
        svg.to_str().unwrap(),
    ];
    args.extend_from_slice(TRACK_CFG);
    let r = cli(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() > 50, "expected a state row for most frames, got {}", rows.len());
    assert!(rows.iter().all(|r| r.starts_with("1,")), "only track 1 was requested");
    // occluded frames appear in the view
    assert!(rows.iter().any(|r| r.split(',').nth(2) == Some("1")));

    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.matches("<ellipse").count() > 50);
}

#[test]
fn track_handles_multiple_sequences_in_parallel() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let (seq_a, seq_b) = (tmp.path().join("a"), tmp.path().join("b"));
    for s in [&seq_a, &seq_b] {
        assert!(cli(&["synth", "--scenario", sc.to_str().unwrap(), "--out", s.to_str().unwrap()])
            .status
            .success());
        // distinct names so outputs do not collide
        std::fs::write(
            s.join("seqinfo.ini"),
            format!(
                "[Sequence]\nname={}\nframeRate=30\nseqLength=100\nimWidth=320\nimHeight=180\n",
                s.file_name().unwrap().to_string_lossy()
            ),
        )
        .unwrap();
    }
    let out_dir = tmp.path().join("out");
    let mut args = vec![
        "track",
        "--seq",
        seq_a.to_str().unwrap(),
        "--seq",
        seq_b.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ];
    args.extend_from_slice(TRACK_CFG);
    let r = cli(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for name in ["a", "b"] {
        assert!(out_dir.join(format!("{name}.txt")).is_file());
        assert!(out_dir.join(format!("{name}.hyp.jsonl")).is_file());
    }
    // identical inputs, identical outputs regardless of scheduling
    assert_eq!(
        std::fs::read(out_dir.join("a.txt")).unwrap(),
        std::fs::read(out_dir.join("b.txt")).unwrap()
    );
}

#[test]
fn mot_text_baselines_evaluate_with_simulated_hypotheses() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let seq = tmp.path().join("seq");
    assert!(cli(&["synth", "--scenario", sc.to_str().unwrap(), "--out", seq.to_str().unwrap()])
        .status
        .success());

    // a single-box baseline: ground truth converted to MOT track text
    let src = SequenceSource::open(&seq).unwrap();
    let gt = src.read_gt().unwrap();
    let perfect = gt.as_predictions(0.10);
    let txt = tmp.path().join("baseline.txt");
    let hyp = tmp.path().join("baseline.hyp.jsonl");
    write_predictions(&perfect, &txt, &hyp).unwrap();

    let report = tmp.path().join("report.txt");
    let r = cli(&[
        "eval",
        "--gt",
        seq.to_str().unwrap(),
        "--pred",
        txt.to_str().unwrap(),
        "--pred-format",
        "mot",
        "--baseline-gauss",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let kv = std::fs::read_to_string(&report).unwrap();
    let get = |key: &str| -> f64 {
        kv.lines()
            .find(|l| l.starts_with(&format!("aggregate.{key}")))
            .and_then(|l| l.split_whitespace().nth(1))
            .unwrap()
            .parse()
            .unwrap()
    };
    // hypothesis sets keep the exact box first, so Top-1 stays perfect and
    // the simulated spread can only help Top-k
    assert_eq!(get("top1_f1_all"), 1.0);
    assert!(get("topk_f1_all") >= get("top1_f1_all") - 1e-9);
}

#[test]
fn depth_disabled_tracks_without_depth_rasters() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario_json(tmp.path());
    let seq = tmp.path().join("seq");
    assert!(cli(&["synth", "--scenario", sc.to_str().unwrap(), "--out", seq.to_str().unwrap()])
        .status
        .success());
    std::fs::remove_dir_all(seq.join("depth")).unwrap();
    std::fs::remove_dir_all(seq.join("masks")).unwrap();

    let out_dir = tmp.path().join("out");
    // without the flag the missing rasters are an error
    let mut args =
        vec!["track", "--seq", seq.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    args.extend_from_slice(TRACK_CFG);
    assert!(!cli(&args).status.success());

    args.extend_from_slice(&["--set", "depth_disabled=true"]);
    let r = cli(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let txt = std::fs::read_to_string(out_dir.join("cli.txt")).unwrap();
    assert!(!txt.is_empty(), "plain forecast-free tracking must still report people");
}
