//! The `orientpipe` command-line front end.
//!
//! Subcommands: `homography`, `build`, `synth`, `eval`, `toytrain`. Exit
//! codes: 0 success, 1 I/O or input-shape failure, 2 mathematical or
//! degenerate failure. Every subcommand is deterministic given its config
//! and seed; output files never embed timestamps. `ORIENTPIPE_THREADS` caps
//! worker threads (default: machine cores).

use crate::angles::{bin_of, BinSet, CONVENTION_NOTE};
use crate::config::{load_config, BuildConfig, ConfigError, SynthConfig, ToyConfig};
use crate::eval::{confusion, summarize, write_confusion_csv, write_confusion_gnuplot, write_results_csv, ResultRow};
use crate::formats::{
    self, load_homography_set, read_annotations, read_detections, read_eval_records,
    read_sensor_csv, AugmentationSpec, DatasetManifest, DomainPair, FormatError, HomographyFile,
    IngestLimits,
};
use crate::fusion::{build_dataset, to_grayscale, CropSource, DirCropSource, FusionError};
use crate::geometry::{estimate_homography, max_reprojection_error, Correspondence, Domain, GeometryError};
use crate::synthgen::{self, SynthError};
use crate::toytrain::{run_experiment, ExperimentResults, LossKind, ToytrainError};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
/// I/O or input-shape failure.
pub const EXIT_INPUT: i32 = 1;
/// Mathematical or degenerate failure.
pub const EXIT_MATH: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { exit_code: EXIT_INPUT, message: message.into() }
    }

    fn math(message: impl Into<String>) -> Self {
        Self { exit_code: EXIT_MATH, message: message.into() }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(_) => CliError::math(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::math(e.to_string())
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::UnsortedInput(_) | FusionError::InvalidDetection(_) => {
                CliError::input(e.to_string())
            }
            _ => CliError::math(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) | SynthError::Geometry(_) => CliError::math(e.to_string()),
            SynthError::Format(f) => f.into(),
            SynthError::Io { .. } => CliError::input(e.to_string()),
        }
    }
}

impl From<ToytrainError> for CliError {
    fn from(e: ToytrainError) -> Self {
        CliError::math(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "orientpipe", version, about = "Sensor/video fusion toolchain for player body-orientation ground truth")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Config file (TOML or JSON) for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate per-frame homographies from a corner-annotation CSV.
    Homography(HomographyArgs),
    /// Run the dataset-completion pipeline over detections and sensor tracks.
    Build(BuildArgs),
    /// Generate a synthetic scenario with ground-truth sidecar.
    Synth,
    /// Compute circular error metrics and confusion matrices.
    Eval(EvalArgs),
    /// Train the toy classifier under both losses and export results.
    Toytrain,
}

#[derive(Args, Debug)]
pub struct HomographyArgs {
    /// Corner-annotation CSV (frame_id,label,src_x,src_y,dst_x,dst_y,domain_pair).
    pub annotations: PathBuf,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Detections JSONL.
    #[arg(long)]
    pub detections: PathBuf,
    /// Sensor track CSV.
    #[arg(long)]
    pub sensors: PathBuf,
    /// Directory containing h_if.json and h_sf.json (as written by
    /// `homography`).
    #[arg(long)]
    pub homographies: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predictions JSONL (records with alpha_compensated, alpha, or
    /// true_alpha).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth JSONL.
    #[arg(long)]
    pub truth: PathBuf,
    /// Bin count for the confusion matrix.
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    /// Experiment label for the results CSV.
    #[arg(long, default_value = "eval")]
    pub experiment: String,
    /// Optional validation-split prediction file for the _v columns.
    #[arg(long)]
    pub pred_val: Option<PathBuf>,
    /// Optional validation-split truth file.
    #[arg(long)]
    pub truth_val: Option<PathBuf>,
    /// Also write gnuplot-ready confusion heatmap data.
    #[arg(long)]
    pub gnuplot: bool,
}

/// Parse, run, and convert errors to exit codes. The binary's whole main.
pub fn main_impl() -> i32 {
    let cli = Cli::parse();
    init_thread_pool();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.exit_code
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("ORIENTPIPE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                // ignore failure: the global pool may already exist
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match &cli.command {
        Command::Homography(args) => cmd_homography(&cli, args, &out),
        Command::Build(args) => cmd_build(&cli, args, &out),
        Command::Synth => cmd_synth(&cli, &out),
        Command::Eval(args) => cmd_eval(&cli, args, &out),
        Command::Toytrain => cmd_toytrain(&cli, &out),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::input(format!("{}: no such file", path.display())));
    }
    Ok(())
}

fn build_config(cli: &Cli) -> Result<BuildConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => load_config::<BuildConfig>(path)?,
        None => BuildConfig::example(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate().map_err(CliError::math)?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// homography

fn cmd_homography(cli: &Cli, args: &HomographyArgs, out: &Path) -> Result<(), CliError> {
    require_file(&args.annotations)?;
    let config = build_config(cli)?;
    let limits = IngestLimits {
        frame_width: config.frame_width,
        frame_height: config.frame_height,
        field_length_m: config.field_length_m,
        field_width_m: config.field_width_m,
    };
    let rows = read_annotations(&args.annotations, Some(&limits))?;
    ensure_dir(out)?;

    let mut groups: BTreeMap<(DomainPair, i64), Vec<Correspondence>> = BTreeMap::new();
    for row in &rows {
        groups
            .entry((row.domain_pair, row.frame_id))
            .or_default()
            .push(Correspondence {
                src: [row.src_x, row.src_y],
                dst: [row.dst_x, row.dst_y],
                label: Some(row.label.clone()),
            });
    }
    if groups.is_empty() {
        return Err(CliError::input(format!(
            "{}: no annotation rows",
            args.annotations.display()
        )));
    }

    let mut per_pair: BTreeMap<DomainPair, Vec<(i64, crate::geometry::Homography)>> =
        BTreeMap::new();
    for ((pair, frame_id), pairs) in &groups {
        let (src_domain, pair_name) = match pair {
            DomainPair::If => (Domain::Image, "IF"),
            DomainPair::Sf => (Domain::Geo, "SF"),
        };
        if pairs.len() < 4 {
            return Err(CliError::math(format!(
                "frame {frame_id} ({pair_name}): only {} correspondences, need at least 4",
                pairs.len()
            )));
        }
        let h = estimate_homography(pairs, src_domain, Domain::Field)
            .map_err(|e| CliError::math(format!("frame {frame_id} ({pair_name}): {e}")))?;
        let err = max_reprojection_error(&h, pairs)
            .map_err(|e| CliError::math(format!("frame {frame_id} ({pair_name}): {e}")))?;
        if !cli.quiet {
            println!("frame {frame_id} ({pair_name}): {} points, max reprojection error {err:.3e}", pairs.len());
        }
        per_pair.entry(*pair).or_default().push((*frame_id, h));
    }

    for (pair, entries) in &per_pair {
        let name = match pair {
            DomainPair::If => "h_if.json",
            DomainPair::Sf => "h_sf.json",
        };
        let file = HomographyFile::from_homographies(entries).expect("nonempty group");
        formats::write_homography_file(&out.join(name), &file)?;
        if !cli.quiet {
            println!("wrote {} ({} frames)", out.join(name).display(), entries.len());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// build

fn cmd_build(cli: &Cli, args: &BuildArgs, out: &Path) -> Result<(), CliError> {
    for path in [&args.detections, &args.sensors] {
        require_file(path)?;
    }
    let h_if = args.homographies.join("h_if.json");
    let h_sf = args.homographies.join("h_sf.json");
    for path in [&h_if, &h_sf] {
        require_file(path)?;
    }
    let config = build_config(cli)?;
    let limits = IngestLimits {
        frame_width: config.frame_width,
        frame_height: config.frame_height,
        field_length_m: config.field_length_m,
        field_width_m: config.field_width_m,
    };

    let detections = read_detections(&args.detections, Some(&limits))?;
    let sensors = read_sensor_csv(&args.sensors)?;
    let homographies = load_homography_set(&h_if, &h_sf)?;
    let bins = BinSet::new(config.k_bins).map_err(|e| CliError::math(e.to_string()))?;
    let crop_base = args.detections.parent().unwrap_or(Path::new(".")).to_path_buf();
    let crops = DirCropSource::new(&crop_base);

    let (records, report) = build_dataset(&detections, &sensors, &homographies, &bins, &config, &crops)?;

    ensure_dir(out)?;
    formats::write_records(&out.join("dataset.jsonl"), &records)?;
    let manifest = DatasetManifest {
        bins: (&bins).into(),
        convention: CONVENTION_NOTE.to_string(),
        grayscale: config.grayscale,
        augmentation: AugmentationSpec::default(),
        counts: report.clone(),
        config_hash: config.config_hash(),
    };
    formats::write_manifest(&out.join("manifest.json"), &manifest)?;
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(out.join("report.json"), report_json.clone() + "\n")
        .map_err(|e| CliError::input(format!("{}: {e}", out.join("report.json").display())))?;

    // grayscale crop export for the matched records
    let mut gray_written = 0usize;
    if config.grayscale {
        let gray_dir = out.join("crops_gray");
        for record in &records {
            if let Some(crop_ref) = &record.crop_ref {
                if let Some(crop) = crops.load(crop_ref) {
                    let dest = gray_dir.join(crop_ref).with_extension("png");
                    if let Some(parent) = dest.parent() {
                        ensure_dir(parent)?;
                    }
                    let gray = to_grayscale(&crop);
                    let img = image::GrayImage::from_raw(
                        crop.width() as u32,
                        crop.height() as u32,
                        gray,
                    )
                    .expect("buffer sized for dimensions");
                    img.save(&dest)
                        .map_err(|e| CliError::input(format!("{}: {e}", dest.display())))?;
                    gray_written += 1;
                }
            }
        }
    }

    if !cli.quiet {
        print!("{}", report.human_summary());
        if gray_written > 0 {
            println!("grayscale crops exported: {gray_written}");
        }
        println!("records written: {} -> {}", records.len(), out.join("dataset.jsonl").display());
        println!("REPORT_JSON: {}", serde_json::to_string(&report).expect("report serializes"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// synth

fn cmd_synth(cli: &Cli, out: &Path) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => load_config::<SynthConfig>(path)?,
        None => SynthConfig::example(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let generated = synthgen::generate(&config, out)?;
    if !cli.quiet {
        println!(
            "scenario: {} frames, {} detections ({} home player-frames visible, {} missed)",
            generated.stats.n_frames,
            generated.stats.detections_total,
            generated.stats.visible_home_player_frames,
            generated.stats.missed_home_detections
        );
        println!("wrote {}", generated.paths.scenario.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

fn aligned_alphas(
    pred_path: &Path,
    truth_path: &Path,
) -> Result<(Vec<f64>, Vec<f64>, usize), CliError> {
    let preds = read_eval_records(pred_path)?;
    let truths = read_eval_records(truth_path)?;
    if preds.is_empty() {
        return Err(CliError::input(format!("{}: no records", pred_path.display())));
    }
    let truth_map: BTreeMap<(i64, &str), f64> = truths
        .iter()
        .map(|r| ((r.frame_id, r.player_id.as_str()), r.alpha))
        .collect();
    let mut p = Vec::with_capacity(preds.len());
    let mut t = Vec::with_capacity(preds.len());
    let mut missing = 0usize;
    let mut first_missing = None;
    let mut sorted = preds;
    sorted.sort_by(|a, b| (a.frame_id, a.player_id.as_str()).cmp(&(b.frame_id, b.player_id.as_str())));
    for r in &sorted {
        match truth_map.get(&(r.frame_id, r.player_id.as_str())) {
            Some(&alpha) => {
                p.push(r.alpha);
                t.push(alpha);
            }
            None => {
                missing += 1;
                if first_missing.is_none() {
                    first_missing = Some((r.frame_id, r.player_id.clone()));
                }
            }
        }
    }
    if missing > 0 {
        let (f, id) = first_missing.expect("missing counted");
        return Err(CliError::input(format!(
            "{} prediction keys missing from {} (first: frame {f}, player {id})",
            missing,
            truth_path.display()
        )));
    }
    let truth_only = truth_map.len().saturating_sub(p.len());
    Ok((p, t, truth_only))
}

fn cmd_eval(cli: &Cli, args: &EvalArgs, out: &Path) -> Result<(), CliError> {
    for path in [&args.pred, &args.truth] {
        require_file(path)?;
    }
    let bins = BinSet::new(args.k).map_err(|e| CliError::math(e.to_string()))?;
    let (preds, truths, truth_only) = aligned_alphas(&args.pred, &args.truth)?;
    let summary = summarize(&preds, &truths).map_err(|e| CliError::input(e.to_string()))?;

    let val_summary = match (&args.pred_val, &args.truth_val) {
        (Some(pv), Some(tv)) => {
            require_file(pv)?;
            require_file(tv)?;
            let (p, t, _) = aligned_alphas(pv, tv)?;
            Some(summarize(&p, &t).map_err(|e| CliError::input(e.to_string()))?)
        }
        (None, None) => None,
        _ => {
            return Err(CliError::input(
                "--pred-val and --truth-val must be given together",
            ))
        }
    };

    let pred_bins: Vec<usize> = preds.iter().map(|&a| bin_of(a, &bins)).collect();
    let truth_bins: Vec<usize> = truths.iter().map(|&a| bin_of(a, &bins)).collect();
    let matrix = confusion(&pred_bins, &truth_bins, args.k).map_err(|e| CliError::input(e.to_string()))?;

    ensure_dir(out)?;
    let row = ResultRow {
        experiment: args.experiment.clone(),
        meae_v: val_summary.map(|s| s.meae),
        mdae_v: val_summary.map(|s| s.mdae),
        meae_t: summary.meae,
        mdae_t: summary.mdae,
    };
    let metrics_path = out.join("metrics.csv");
    let file = std::fs::File::create(&metrics_path)
        .map_err(|e| CliError::input(format!("{}: {e}", metrics_path.display())))?;
    write_results_csv(file, &[row]).map_err(|e| CliError::input(e.to_string()))?;

    let confusion_path = out.join("confusion.csv");
    let file = std::fs::File::create(&confusion_path)
        .map_err(|e| CliError::input(format!("{}: {e}", confusion_path.display())))?;
    write_confusion_csv(file, &matrix).map_err(|e| CliError::input(e.to_string()))?;

    if args.gnuplot {
        let dat_path = out.join("confusion.dat");
        let file = std::fs::File::create(&dat_path)
            .map_err(|e| CliError::input(format!("{}: {e}", dat_path.display())))?;
        write_confusion_gnuplot(file, &matrix).map_err(|e| CliError::input(e.to_string()))?;
    }

    if !cli.quiet {
        println!(
            "{}: n={} MEAE={:.6} MDAE={:.6} (truth-only keys ignored: {truth_only})",
            args.experiment, summary.n, summary.meae, summary.mdae
        );
        if let Some(v) = val_summary {
            println!("validation: n={} MEAE={:.6} MDAE={:.6}", v.n, v.meae, v.mdae);
        }
        println!("wrote {} and {}", metrics_path.display(), confusion_path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// toytrain

fn write_toytrain_outputs(
    out: &Path,
    config: &ToyConfig,
    results: &ExperimentResults,
) -> Result<(), CliError> {
    let results_path = out.join("results.csv");
    let mut text = String::from("loss,seed,MEAE_t,MDAE_t,final_train_loss\n");
    for r in &results.rows {
        text.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            r.loss, r.seed, r.test_summary.meae, r.test_summary.mdae, r.final_train_loss
        ));
    }
    std::fs::write(&results_path, text)
        .map_err(|e| CliError::input(format!("{}: {e}", results_path.display())))?;

    // aggregated table rows, one per loss arm
    let mean = |kind: LossKind, f: &dyn Fn(&crate::toytrain::ArmResult) -> f64| {
        let v: Vec<f64> = results.rows.iter().filter(|r| r.loss == kind).map(f).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let rows = vec![
        ResultRow {
            experiment: format!("cyclic-k{}", results.k),
            meae_v: None,
            mdae_v: None,
            meae_t: results.mean_meae_cyclic,
            mdae_t: mean(LossKind::Cyclic, &|r| r.test_summary.mdae),
        },
        ResultRow {
            experiment: format!("one-hot-k{}", results.k),
            meae_v: None,
            mdae_v: None,
            meae_t: results.mean_meae_onehot,
            mdae_t: mean(LossKind::OneHot, &|r| r.test_summary.mdae),
        },
    ];
    let table_path = out.join("table.csv");
    let file = std::fs::File::create(&table_path)
        .map_err(|e| CliError::input(format!("{}: {e}", table_path.display())))?;
    write_results_csv(file, &rows).map_err(|e| CliError::input(e.to_string()))?;

    if config.emit_predictions {
        #[derive(serde::Serialize)]
        struct PredRow<'a> {
            frame_id: i64,
            player_id: &'a str,
            alpha: f64,
        }
        for r in &results.rows {
            let pred_path = out.join(format!("preds_{}_s{}.jsonl", r.loss, r.seed));
            let rows: Vec<PredRow> = r
                .preds_deg
                .iter()
                .enumerate()
                .map(|(i, &a)| PredRow { frame_id: i as i64, player_id: "sample", alpha: a })
                .collect();
            formats::write_jsonl(&pred_path, &rows)?;
            let truth_path = out.join(format!("truth_s{}.jsonl", r.seed));
            let rows: Vec<PredRow> = r
                .truths_deg
                .iter()
                .enumerate()
                .map(|(i, &a)| PredRow { frame_id: i as i64, player_id: "sample", alpha: a })
                .collect();
            formats::write_jsonl(&truth_path, &rows)?;
        }
    }
    Ok(())
}

fn cmd_toytrain(cli: &Cli, out: &Path) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => load_config::<ToyConfig>(path)?,
        None => ToyConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    let results = run_experiment(&config)?;
    ensure_dir(out)?;
    write_toytrain_outputs(out, &config, &results)?;
    if !cli.quiet {
        for r in &results.rows {
            println!(
                "{} seed={}: test MEAE={:.3} MDAE={:.3}",
                r.loss, r.seed, r.test_summary.meae, r.test_summary.mdae
            );
        }
        println!(
            "mean test MEAE: cyclic={:.4} one-hot={:.4}",
            results.mean_meae_cyclic, results.mean_meae_onehot
        );
        println!("wrote {}", out.join("results.csv").display());
    }
    Ok(())
}
