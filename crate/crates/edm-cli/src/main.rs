//! `edm` — train, search, evaluate, and run the fault-detection model.
//!
//! Exit codes: 0 success, 1 usage, 2 data/format, 3 numeric divergence.

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edm_cli::dataset::{decode_image, load_samples, scan_dataset, stratified_split, LabelMap};
use edm_cli::formats::{load_model_file, save_model_file};
use edm_cli::{Error, Result};
use edm_core::augment::apply_eval_augment;
use edm_core::layers::softmax_row;
use edm_core::metrics::Metrics;
use edm_core::model::{Model, ModelConfig, Task};
use edm_core::search::{run_depth, select_depth, DepthRecord, SearchReport};
use edm_core::train::{argmax, evaluate, train_with_progress, Sample, TrainConfig};

/// Train/test split ratio applied to scanned datasets (stratified).
const SPLIT_RATIO: f64 = 0.8;

#[derive(Parser)]
#[command(
    name = "edm",
    version,
    about = "Lightweight CNN fault detection for 3D-printer photographs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model of a fixed depth and save it
    Train(TrainCmd),
    /// Depth search: train from --max-depth down to 1, keep the smallest
    /// model whose test accuracy clears the threshold
    Search(SearchCmd),
    /// Evaluate a saved model over a dataset directory
    Eval(EvalCmd),
    /// Classify a single image with a saved model
    Predict(PredictCmd),
    /// Print per-class image counts for a dataset directory
    DatasetStats(StatsCmd),
}

#[derive(Args)]
struct CommonTrainArgs {
    /// Dataset directory (one subdirectory per class)
    #[arg(long)]
    data: PathBuf,
    /// Classification task: binary or multi
    #[arg(long, value_parser = parse_task)]
    task: Task,
    /// Number of training epochs
    #[arg(long)]
    epochs: usize,
    /// Learning rate
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// SGD momentum
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Mini-batch size
    #[arg(long, default_value_t = 32)]
    batch: usize,
    /// Seed for initialization, shuffling, and augmentation
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Model input side in pixels
    #[arg(long, default_value_t = 256)]
    input_size: usize,
    /// Worker threads for image decoding (search also trains depths in parallel)
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct TrainCmd {
    #[command(flatten)]
    common: CommonTrainArgs,
    /// Number of convolutional layers
    #[arg(long, default_value_t = 5)]
    depth: usize,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SearchCmd {
    #[command(flatten)]
    common: CommonTrainArgs,
    /// Deepest candidate model
    #[arg(long, default_value_t = 10)]
    max_depth: usize,
    /// Test-accuracy acceptance threshold
    #[arg(long, default_value_t = 0.90)]
    threshold: f64,
    /// Output CSV report file
    #[arg(long)]
    report: PathBuf,
    /// Output model file for the selected depth
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCmd {
    /// Saved model file
    #[arg(long)]
    model: PathBuf,
    /// Dataset directory to evaluate on
    #[arg(long)]
    data: PathBuf,
    /// Worker threads for image decoding
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct PredictCmd {
    /// Saved model file
    #[arg(long)]
    model: PathBuf,
    /// Image to classify
    #[arg(long)]
    image: PathBuf,
}

#[derive(Args)]
struct StatsCmd {
    /// Dataset directory
    #[arg(long)]
    data: PathBuf,
    /// Classification task: binary or multi
    #[arg(long, value_parser = parse_task)]
    task: Task,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: edm_core::Error| e.to_string())
}

fn usage(e: impl Display) -> Error {
    Error::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(args) => run_train(args),
        Command::Search(args) => run_search(args),
        Command::Eval(args) => run_eval(args),
        Command::Predict(args) => run_predict(args),
        Command::DatasetStats(args) => run_dataset_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn build_train_config(common: &CommonTrainArgs, threshold: f64) -> Result<TrainConfig> {
    if common.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let config = TrainConfig {
        learning_rate: common.lr,
        momentum: common.momentum,
        batch_size: common.batch,
        epochs: common.epochs,
        seed: common.seed,
        threshold,
        task: common.task,
        input_size: common.input_size,
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

/// Scans, splits, and decodes a dataset directory.
fn load_split(common: &CommonTrainArgs) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let scan = scan_dataset(&common.data, common.task)?;
    if scan.skipped > 0 {
        eprintln!("warning: skipped {} non-image file(s)", scan.skipped);
    }
    let split = stratified_split(&scan.samples, SPLIT_RATIO, common.seed)?;
    let train_set = load_samples(&split.train, common.workers)?;
    let test_set = load_samples(&split.test, common.workers)?;
    Ok((train_set, test_set))
}

fn run_train(args: TrainCmd) -> Result<()> {
    let config = build_train_config(&args.common, 0.90)?;
    let arch =
        ModelConfig::for_task(args.common.task, args.common.input_size, args.depth).map_err(usage)?;
    let (train_set, test_set) = load_split(&args.common)?;
    let (model, metrics) = train_with_progress(&arch, &config, &train_set, &test_set, |e, rec| {
        println!("epoch={e} loss={:.6} test_acc={:.6}", rec.train_loss, rec.test_accuracy);
    })?;
    save_model_file(&model, &args.out)?;
    println!("final_test_acc={:.6}", metrics.accuracy);
    Ok(())
}

fn run_search(args: SearchCmd) -> Result<()> {
    let config = build_train_config(&args.common, args.threshold)?;
    if !(1..=10).contains(&args.max_depth) {
        return Err(usage(format!("--max-depth must be in 1..=10, got {}", args.max_depth)));
    }
    let (train_set, test_set) = load_split(&args.common)?;

    let outcomes = run_all_depths(&config, &train_set, &test_set, args.max_depth, args.common.workers)?;
    let mut records: Vec<DepthRecord> = outcomes.iter().map(|(r, _)| r.clone()).collect();
    records.sort_by_key(|r| r.depth);
    for r in &records {
        eprintln!("depth={} params={} test_acc={:.6} passed={}", r.depth, r.param_count, r.test_accuracy, r.passed);
    }

    let (selected_depth, fallback_used) = select_depth(&records).map_err(Error::Core)?;
    let report = SearchReport {
        records,
        selected_depth,
        fallback_used,
    };
    let model = outcomes
        .into_iter()
        .find_map(|(r, m)| (r.depth == selected_depth).then_some(m).flatten())
        .map(|(model, _)| model)
        .expect("selected depth has a trained model");

    save_model_file(&model, &args.out)?;
    std::fs::write(&args.report, report.to_csv()).map_err(|e| Error::io(&args.report, e))?;
    println!("selected_depth={selected_depth} fallback={fallback_used}");
    Ok(())
}

type DepthOutcome = (DepthRecord, Option<(Model<f32>, Metrics)>);

/// Trains every candidate depth, spreading depths over `workers` threads.
/// Each depth seeds its own generator, so the outcome is identical to the
/// sequential order.
fn run_all_depths(
    config: &TrainConfig,
    train_set: &[Sample],
    test_set: &[Sample],
    max_depth: usize,
    workers: usize,
) -> Result<Vec<DepthOutcome>> {
    let depths: Vec<usize> = (1..=max_depth).rev().collect();
    if workers <= 1 {
        return depths
            .iter()
            .map(|&d| run_depth(config, train_set, test_set, d).map_err(Error::Core))
            .collect();
    }
    let chunk_size = depths.len().div_ceil(workers);
    let mut results: Vec<Result<Vec<DepthOutcome>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = depths
            .chunks(chunk_size)
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|&d| run_depth(config, train_set, test_set, d).map_err(Error::Core))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        for handle in handles {
            results.push(handle.join().expect("search worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(depths.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

fn run_eval(args: EvalCmd) -> Result<()> {
    if args.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let model = load_model_file(&args.model)?;
    let scan = scan_dataset(&args.data, model.config.task)?;
    if scan.skipped > 0 {
        eprintln!("warning: skipped {} non-image file(s)", scan.skipped);
    }
    let samples = load_samples(&scan.samples, args.workers)?;
    let metrics = evaluate(&model, &samples).map_err(Error::Core)?;
    print_metrics(&metrics, &model.config.class_names);
    Ok(())
}

fn print_metrics(metrics: &Metrics, class_names: &[String]) {
    println!("accuracy={:.6}", metrics.accuracy);
    for (name, row) in class_names.iter().zip(&metrics.confusion) {
        let counts: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        println!("{name}\t{}", counts.join("\t"));
    }
}

fn run_predict(args: PredictCmd) -> Result<()> {
    let model = load_model_file(&args.model)?;
    let img = decode_image(&args.image)?;
    let size = model.config.input_size;
    let input = apply_eval_augment::<f32>(&img, size)
        .and_then(|t| t.reshape(&[1, 3, size, size]))
        .map_err(Error::Core)?;
    let logits = model.forward(&input).map_err(Error::Core)?;
    let probs = softmax_row(logits.data());

    let names = &model.config.class_names;
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .expect("softmax probabilities are never NaN")
            .then(a.cmp(&b))
    });
    for i in order {
        println!("{}\t{:.6}", names[i], probs[i]);
    }
    println!("predicted={}", names[argmax(logits.data())]);
    Ok(())
}

fn run_dataset_stats(args: StatsCmd) -> Result<()> {
    let scan = scan_dataset(&args.data, args.task)?;
    if scan.skipped > 0 {
        eprintln!("warning: skipped {} non-image file(s)", scan.skipped);
    }
    let map = LabelMap::for_task(args.task);
    let mut counts = vec![0usize; map.classes.len()];
    for sample in &scan.samples {
        counts[sample.class_id] += 1;
    }
    for (name, count) in map.classes.iter().zip(&counts) {
        println!("{name}\t{count}");
    }
    println!("total\t{}", scan.samples.len());
    Ok(())
}
