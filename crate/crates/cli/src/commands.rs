use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};

use spatial_rank::dataset::{
    augment_with, class_counts, parse_line, parse_records, prepare_with, stratified_split, write_instances,
    AugmentOptions, PrepareOptions,
};
use spatial_rank::eval::{
    binary_accuracy, detector_coverage_analysis, evaluate, parse_binary_predictions, parse_coverage_cases,
    render_coverage_table, Lexicon, ReportConfig,
};
use spatial_rank::geometry::GEO_FEATURES;
use spatial_rank::mlp::{gradient_check, load_checkpoint, random_case, save_checkpoint, train_with_progress, TrainConfig};
use spatial_rank::ranking::{build_priors, rank_clause};
use spatial_rank::synthgen::{generate, SynthConfig};
use spatial_rank::{Instance, Model, Priors};

use crate::output::{config_path_for, write_atomic, write_json};

/// Saves every effective setting of a run next to its output.
fn echo_config<A: Serialize>(path: &Path, command: &str, args: &A) -> Result<()> {
    let echo = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "settings": args,
    });
    write_json(path, &echo)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// Reads a record file and keeps the usable positives. Dropped lines are
/// reported on stderr.
fn load_instances(path: &Path) -> Result<Vec<Instance>> {
    let records = parse_records::<f64, _>(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let (instances, summary) = prepare_with(&records, PrepareOptions::default());
    if summary.kept < summary.input {
        eprintln!(
            "warning: {}: kept {} of {} records (dropped: {:?})",
            path.display(),
            summary.kept,
            summary.input,
            summary.dropped
        );
    }
    ensure!(!instances.is_empty(), "{}: no usable instances", path.display());
    Ok(instances)
}

fn instances_bytes(instances: &[Instance]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_instances(&mut buf, instances)?;
    Ok(buf)
}

fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (model, _) = load_checkpoint::<f64>(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))?;
    Ok(model)
}

fn load_priors(path: &Path) -> Result<Priors> {
    let value: Value = serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Priors::from_json(&value).with_context(|| format!("loading priors {}", path.display()))
}

/// The feature layout follows the checkpoint; `--geo` only asserts it.
fn resolve_geo(model: &Model, geo_flag: bool) -> Result<bool> {
    let geo = model.in_dim() == GEO_FEATURES;
    if geo_flag && !geo {
        bail!("--geo given but the checkpoint expects {} base features", model.in_dim());
    }
    Ok(geo)
}

#[derive(Args, Debug, Serialize)]
pub struct PrepArgs {
    /// Grounding records, one JSON object per line.
    pub input: PathBuf,
    /// Directory receiving train.jsonl, test.jsonl and summary.json.
    pub out_dir: PathBuf,
    /// Fraction of every class assigned to train.
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop records whose subject or object confidence is below this.
    #[arg(long, default_value_t = 0.0)]
    pub min_confidence: f64,
}

pub fn prep(args: PrepArgs) -> Result<()> {
    let records = parse_records::<f64, _>(open(&args.input)?).with_context(|| format!("reading {}", args.input.display()))?;
    let opts = PrepareOptions { min_confidence: args.min_confidence };
    let (instances, summary) = prepare_with(&records, opts);
    let split = stratified_split(&instances, args.ratio, args.seed)?;

    write_atomic(&args.out_dir.join("train.jsonl"), &instances_bytes(&split.train)?)?;
    write_atomic(&args.out_dir.join("test.jsonl"), &instances_bytes(&split.test)?)?;
    let report = json!({
        "prepare": summary,
        "train": split.train.len(),
        "test": split.test.len(),
        "train_per_class": class_counts(&split.train),
        "test_per_class": class_counts(&split.test),
    });
    write_json(&args.out_dir.join("summary.json"), &report)?;
    echo_config(&args.out_dir.join("prep.config.json"), "prep", &args)?;

    println!("records: {}  kept: {}", summary.input, summary.kept);
    for (reason, n) in &summary.dropped {
        println!("dropped {reason:?}: {n}");
    }
    println!("train: {}  test: {}", split.train.len(), split.test.len());
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct AugmentArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    /// Keep `outside` instances without a swapped copy.
    #[arg(long)]
    pub outside_asymmetric: bool,
}

pub fn augment(args: AugmentArgs) -> Result<()> {
    let train = load_instances(&args.input)?;
    let opts = AugmentOptions { outside_symmetric: !args.outside_asymmetric };
    let out = augment_with(&train, opts);
    write_atomic(&args.out, &instances_bytes(&out)?)?;
    echo_config(&config_path_for(&args.out), "augment", &args)?;
    println!("{} -> {} instances", train.len(), out.len());
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    pub input: PathBuf,
    pub checkpoint_out: PathBuf,
    /// Append the unit direction and center distance to the box coordinates.
    #[arg(long)]
    pub geo: bool,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 12)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Visit the training set in file order every epoch.
    #[arg(long)]
    pub no_shuffle: bool,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let instances = load_instances(&args.input)?;
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        seed: args.seed,
        use_geo: args.geo,
        shuffle: !args.no_shuffle,
    };
    let outcome = train_with_progress(&instances, &config, |epoch, loss| {
        println!("epoch {epoch:>4}  loss {loss:.6}");
    })?;
    write_atomic(&args.checkpoint_out, &save_checkpoint(&outcome.model, Some(&outcome.optimizer)))?;
    let echo = json!({ "args": args, "train_config": config, "instances": instances.len() });
    echo_config(&config_path_for(&args.checkpoint_out), "train", &echo)?;
    println!("saved {}", args.checkpoint_out.display());
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct PriorsArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    /// Additive smoothing per class.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

pub fn priors(args: PriorsArgs) -> Result<()> {
    let train = load_instances(&args.input)?;
    let table = build_priors(&train, args.alpha)?;
    write_json(&args.out, &table.to_json())?;
    echo_config(&config_path_for(&args.out), "priors", &args)?;
    println!("{} name pairs, alpha {}", table.len(), table.alpha());
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct RankArgs {
    pub checkpoint: PathBuf,
    /// One record as a JSON object; `relation` and `label` may be omitted.
    pub instance: PathBuf,
    #[arg(long)]
    pub priors: Option<PathBuf>,
    #[arg(long)]
    pub geo: bool,
    #[arg(long, default_value = "rank.config.json")]
    pub config_out: PathBuf,
}

pub fn rank(args: RankArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let geo = resolve_geo(&model, args.geo)?;
    let priors = args.priors.as_deref().map(load_priors).transpose()?;

    let text = std::fs::read_to_string(&args.instance).with_context(|| format!("reading {}", args.instance.display()))?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.instance.display()))?;
    let obj = value.as_object_mut().context("query must be a JSON object")?;
    let gold = obj.get("relation").and_then(Value::as_str).map(str::to_string);
    // The classifier ignores the gold relation; fill the slot so the record parses.
    obj.entry("relation").or_insert_with(|| json!("near"));
    obj.entry("label").or_insert_with(|| json!(1));
    let rec = parse_line::<f64>(&value.to_string(), 1)?;
    let (instances, summary) = prepare_with(&[rec], PrepareOptions::default());
    let Some(instance) = instances.into_iter().next() else {
        bail!("query is not rankable: {:?}", summary.dropped.keys().collect::<Vec<_>>());
    };

    let ranked = rank_clause(&model, &instance, priors.as_ref(), geo)?;
    println!("{} ? {}", instance.subject_name, instance.object_name);
    for (i, s) in ranked.iter().enumerate() {
        let mark = if gold.is_some() && s.relation == instance.relation { "  <- given" } else { "" };
        println!("{:>2}. {:<10} {:.6e}{}", i + 1, s.relation.name(), s.score, mark);
    }
    echo_config(&args.config_out, "rank", &json!({ "args": args, "geo": geo }))?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub test: PathBuf,
    /// JSON report path; a text table is written beside it with a .txt extension.
    pub report_out: PathBuf,
    #[arg(long)]
    pub priors: Option<PathBuf>,
    #[arg(long)]
    pub geo: bool,
    /// Label the report as trained on augmented data.
    #[arg(long)]
    pub aug: bool,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let geo = resolve_geo(&model, args.geo)?;
    let priors = args.priors.as_deref().map(load_priors).transpose()?;
    let test = load_instances(&args.test)?;

    let mut report = evaluate(&model, &test, priors.as_ref(), geo)?;
    report.config = ReportConfig { geo, aug: args.aug, rerank: priors.is_some() };
    let table = report.render_table();
    write_json(&args.report_out, &report)?;
    write_atomic(&args.report_out.with_extension("txt"), table.as_bytes())?;
    echo_config(&config_path_for(&args.report_out), "eval", &json!({ "args": args, "geo": geo }))?;
    print!("{table}");
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    pub out: PathBuf,
    /// Instances per class.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that an instance uses its class's characteristic names.
    #[arg(long, default_value_t = 0.0)]
    pub name_skew: f64,
    #[arg(long, default_value_t = 0.25)]
    pub near_threshold: f64,
    #[arg(long, default_value_t = 0.6)]
    pub far_threshold: f64,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        per_class: args.n,
        seed: args.seed,
        name_skew: args.name_skew,
        near_threshold: args.near_threshold,
        far_threshold: args.far_threshold,
        ..SynthConfig::default()
    };
    let data = generate::<f64>(&config)?;
    write_atomic(&args.out, &instances_bytes(&data)?)?;
    echo_config(&config_path_for(&args.out), "synth", &json!({ "args": args, "synth_config": config }))?;
    println!("{} instances -> {}", data.len(), args.out.display());
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct GradcheckArgs {
    /// Seed of the first case; case k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub cases: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value = "gradcheck.config.json")]
    pub config_out: PathBuf,
    /// Optional JSON file with the per-case reports.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

pub fn gradcheck(args: GradcheckArgs) -> Result<()> {
    ensure!(args.cases > 0, "--cases must be positive");
    let mut reports = BTreeMap::new();
    let mut worst = 0.0f64;
    for seed in args.seed..args.seed + args.cases {
        let (model, batch, labels) = random_case(seed);
        let r = gradient_check(&model, &batch, &labels, args.step)?;
        println!(
            "seed {seed:>4}  max rel err {:.3e}  checked {}  skipped kinks {}",
            r.max_relative_error, r.checked, r.skipped_kinks
        );
        worst = worst.max(r.max_relative_error);
        reports.insert(seed, r);
    }
    echo_config(&args.config_out, "gradcheck", &args)?;
    if let Some(path) = &args.report_out {
        write_json(path, &json!({ "max_relative_error": worst, "cases": reports }))?;
    }
    println!("max relative error {worst:.3e} (tolerance {:.0e})", args.tolerance);
    ensure!(
        worst < args.tolerance && worst.is_finite(),
        "gradient check failed: {worst:.3e} >= {:.0e}",
        args.tolerance
    );
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct CoverageArgs {
    /// One case per line: correct, subject, object, detected_labels.
    pub cases: PathBuf,
    /// JSON object mapping a phrase to its synonyms.
    pub lexicon: PathBuf,
    /// Optional text file for the table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "coverage.config.json")]
    pub config_out: PathBuf,
}

pub fn coverage(args: CoverageArgs) -> Result<()> {
    let cases = parse_coverage_cases(open(&args.cases)?).with_context(|| format!("reading {}", args.cases.display()))?;
    let lexicon: Lexicon =
        serde_json::from_reader(open(&args.lexicon)?).with_context(|| format!("parsing {}", args.lexicon.display()))?;
    let table = render_coverage_table(&detector_coverage_analysis(&cases, &lexicon));
    if let Some(path) = &args.out {
        write_atomic(path, table.as_bytes())?;
    }
    echo_config(&args.config_out, "coverage", &args)?;
    print!("{table}");
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct BinaryArgs {
    /// One `{"prediction": 0|1, "label": 0|1}` object per line.
    pub predictions: PathBuf,
    #[arg(long, default_value = "binary.config.json")]
    pub config_out: PathBuf,
}

pub fn binary(args: BinaryArgs) -> Result<()> {
    let preds =
        parse_binary_predictions(open(&args.predictions)?).with_context(|| format!("reading {}", args.predictions.display()))?;
    let p: Vec<u8> = preds.iter().map(|r| r.prediction).collect();
    let l: Vec<u8> = preds.iter().map(|r| r.label).collect();
    let (acc, delta) = binary_accuracy(&p, &l)?;
    echo_config(&args.config_out, "binary", &args)?;
    println!("accuracy {:.2}%  delta over chance {:.2}%", 100.0 * acc, 100.0 * delta);
    Ok(())
}
