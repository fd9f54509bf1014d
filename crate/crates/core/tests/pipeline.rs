//! End-to-end pipeline tests: generate a scenario, estimate homographies
//! from its annotation file, run the dataset build, and compare against the
//! ground-truth sidecar.

use orientpipe::angles::{shortest_arc_deg, BinSet};
use orientpipe::config::{BuildConfig, SynthConfig};
use orientpipe::formats::{
    read_annotations, read_detections, read_sensor_csv, read_truth, DomainPair, IngestLimits,
    TruthRow,
};
use orientpipe::fusion::{build_dataset, DirCropSource, HomographySet, MatchedRecord};
use orientpipe::geometry::{estimate_homography, Correspondence, Domain};
use orientpipe::synthgen::{generate, GeneratedScenario};
use std::collections::BTreeMap;
use std::path::Path;

fn estimate_set(annotations: &Path, limits: &IngestLimits) -> HomographySet {
    let rows = read_annotations(annotations, Some(limits)).unwrap();
    let mut groups: BTreeMap<(DomainPair, i64), Vec<Correspondence>> = BTreeMap::new();
    for r in &rows {
        groups
            .entry((r.domain_pair, r.frame_id))
            .or_default()
            .push(Correspondence::new([r.src_x, r.src_y], [r.dst_x, r.dst_y]));
    }
    let mut if_frames = Vec::new();
    let mut sf = None;
    for ((pair, frame), pairs) in &groups {
        match pair {
            DomainPair::If => {
                let h = estimate_homography(pairs, Domain::Image, Domain::Field).unwrap();
                if_frames.push((*frame, h));
            }
            DomainPair::Sf => {
                sf = Some(estimate_homography(pairs, Domain::Geo, Domain::Field).unwrap());
            }
        }
    }
    HomographySet::new(if_frames, sf.expect("scenario writes SF annotations")).unwrap()
}

struct RunOutput {
    records: Vec<MatchedRecord>,
    report: orientpipe::fusion::BuildReport,
    truth: Vec<TruthRow>,
    generated: GeneratedScenario,
}

fn run_pipeline(synth: &SynthConfig, build: &BuildConfig, dir: &Path) -> RunOutput {
    let generated = generate(synth, dir).unwrap();
    let limits = IngestLimits {
        frame_width: build.frame_width,
        frame_height: build.frame_height,
        field_length_m: build.field_length_m,
        field_width_m: build.field_width_m,
    };
    let detections = read_detections(&generated.paths.detections, Some(&limits)).unwrap();
    let sensors = read_sensor_csv(&generated.paths.sensors).unwrap();
    let homographies = estimate_set(&generated.paths.annotations, &limits);
    let bins = BinSet::new(build.k_bins).unwrap();
    let crops = DirCropSource::new(dir);
    let (records, report) =
        build_dataset(&detections, &sensors, &homographies, &bins, build, &crops).unwrap();
    let truth = read_truth(&generated.paths.truth).unwrap();
    RunOutput { records, report, truth, generated }
}

/// Identity of the player that generated a detection, recoverable from the
/// crop filename.
fn true_player_of(record: &MatchedRecord) -> String {
    let crop_ref = record.crop_ref.as_ref().expect("scenario writes crops");
    let stem = crop_ref.rsplit('/').next().unwrap().strip_suffix(".png").unwrap();
    stem.split('_').nth(1).unwrap().to_string()
}

#[test]
fn zero_noise_recovers_identities_and_angles_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig { n_players: 4, duration_s: 4.0, seed: 11, ..SynthConfig::example() };
    let build = BuildConfig { seed: 11, ..BuildConfig::example() };
    let out = run_pipeline(&synth, &build, dir.path());

    // every visible home player-frame must be matched
    assert_eq!(out.records.len(), out.generated.stats.visible_home_player_frames);
    assert_eq!(out.report.matched, out.records.len());
    assert!(out.report.mean_match_distance_m < 1e-6);

    let truth_map: BTreeMap<(i64, &str), &TruthRow> = out
        .truth
        .iter()
        .map(|t| ((t.frame_id, t.player_id.as_str()), t))
        .collect();

    let mut max_err = 0.0f64;
    for r in &out.records {
        assert_eq!(r.player_id, true_player_of(r), "identity mismatch");
        let t = truth_map[&(r.frame_id, r.player_id.as_str())];
        max_err = max_err.max(shortest_arc_deg(r.alpha_compensated, t.true_alpha));
    }
    assert!(max_err < 1e-6, "max angle error {max_err}");

    // away and referee detections were filtered, none matched
    assert!(out.report.jersey_filter_applied);
    assert!(out.report.detections_filtered_out > 0);
}

#[test]
fn jittered_scenario_keeps_identity_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        n_players: 6,
        duration_s: 6.0,
        seed: 23,
        jitter_m: 0.5,
        min_spacing_m: 4.0,
        ..SynthConfig::example()
    };
    let build = BuildConfig { gate_m: 2.0, seed: 23, ..BuildConfig::example() };
    let out = run_pipeline(&synth, &build, dir.path());

    assert!(out.records.len() > 500);
    let correct = out
        .records
        .iter()
        .filter(|r| r.player_id == true_player_of(r))
        .count();
    let accuracy = correct as f64 / out.records.len() as f64;
    assert!(accuracy >= 0.99, "identity accuracy {accuracy}");
}

#[test]
fn moving_camera_with_sparse_annotations_still_matches() {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        n_players: 4,
        duration_s: 4.0,
        seed: 5,
        pan_amplitude_px: 20.0,
        zoom_amplitude: 0.03,
        annotation_stride: 10,
        ..SynthConfig::example()
    };
    let build = BuildConfig { gate_m: 2.0, seed: 5, ..BuildConfig::example() };
    let out = run_pipeline(&synth, &build, dir.path());

    // camera drift between annotated frames leaves residual mapping error;
    // identities must survive even though angles pick up bounded error
    let correct = out
        .records
        .iter()
        .filter(|r| r.player_id == true_player_of(r))
        .count();
    assert!(out.records.len() > 300);
    assert_eq!(correct, out.records.len());

    let truth_map: BTreeMap<(i64, &str), &TruthRow> = out
        .truth
        .iter()
        .map(|t| ((t.frame_id, t.player_id.as_str()), t))
        .collect();
    let mut max_err = 0.0f64;
    for r in &out.records {
        let t = truth_map[&(r.frame_id, r.player_id.as_str())];
        max_err = max_err.max(shortest_arc_deg(r.alpha_compensated, t.true_alpha));
    }
    // annotated frames are exact; in-between frames bounded by drift
    assert!(max_err < 10.0, "max angle error {max_err} unexpectedly large");
}

#[test]
fn bad_clock_offset_skips_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig { n_players: 2, duration_s: 2.0, seed: 3, ..SynthConfig::example() };
    let build = BuildConfig { clock_offset_s: 1000.0, seed: 3, ..BuildConfig::example() };
    let out = run_pipeline(&synth, &build, dir.path());
    assert!(out.records.is_empty());
    assert_eq!(out.report.frames_skipped, out.report.frames_total);
    assert!(out.report.player_frames_no_coverage > 0);
}

/// The cyclic loss should concentrate confusion mass on the diagonal and
/// its cyclic neighbors more than one-hot cross-entropy does.
#[test]
fn cyclic_confusion_concentrates_near_diagonal() {
    use orientpipe::config::ToyConfig;
    use orientpipe::eval::confusion;
    use orientpipe::toytrain::{run_experiment, LossKind};

    let config = ToyConfig {
        sigma: 0.3,
        n_train: 600,
        n_test: 400,
        epochs: 200,
        seeds: vec![1, 2, 3, 4, 5],
        ..ToyConfig::default()
    };
    let res = run_experiment(&config).unwrap();
    let bins = BinSet::new(config.k_bins).unwrap();
    let pooled = |kind: LossKind| {
        let mut preds = Vec::new();
        let mut truths = Vec::new();
        for r in res.rows.iter().filter(|r| r.loss == kind) {
            preds.extend(r.preds_deg.iter().map(|&a| orientpipe::angles::bin_of(a, &bins)));
            truths.extend(r.truths_deg.iter().map(|&a| orientpipe::angles::bin_of(a, &bins)));
        }
        confusion(&preds, &truths, config.k_bins).unwrap().tridiagonal_mass()
    };
    let cyclic_mass = pooled(LossKind::Cyclic);
    let onehot_mass = pooled(LossKind::OneHot);
    assert!(
        cyclic_mass >= onehot_mass,
        "tridiagonal mass: cyclic {cyclic_mass:.4} < one-hot {onehot_mass:.4}"
    );
}

#[test]
fn miss_rate_matches_binomial_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        n_players: 5,
        duration_s: 8.0,
        seed: 77,
        miss_rate: 0.2,
        ..SynthConfig::example()
    };
    let build = BuildConfig { seed: 77, ..BuildConfig::example() };
    let out = run_pipeline(&synth, &build, dir.path());

    let visible = out.generated.stats.visible_home_player_frames as f64;
    let expected = 0.8 * visible;
    let sigma = (visible * 0.2 * 0.8).sqrt();
    let matched = out.report.matched as f64;
    assert!(
        (matched - expected).abs() <= 3.0 * sigma,
        "matched {matched} outside {expected} +- {:.1}",
        3.0 * sigma
    );
}
