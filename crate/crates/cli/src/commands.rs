//! The five subcommands. Every result goes to a file under `--out`;
//! progress and diagnostics go to the log on stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use clap::Args;
use cogap::datasets::{load_dataset, make_splits, save_dataset, synth_generate, Dataset, Split, SplitPlan, SynthConfig};
use cogap::evaluation::{
    compare, eval_timestamp, evaluate, not_evaluable, time_name, training_items, Comparison, EvalConfig, EvalReport,
    Metric, ModelId, Winner,
};
use cogap::fitting::{fit, predict_items, FitConfig, FitResult, TrainingItem};
use cogap::metrics::EvalTime;
use cogap::model::ModelParams;
use cogap::prediction::PredictionRecord;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::{read_toml, ConfigArgs, RunConfig};
use crate::UsageError;

/// Where results are written.
#[derive(Args, Clone, Debug)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, env = "COGAP_OUT_DIR", default_value = "cogap-out")]
    pub out: PathBuf,
}

/// Settings and tool version recorded with every result file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub dataset: Option<String>,
    pub run: RunConfig,
    /// The fully resolved settings, defaults included.
    pub fit: FitConfig,
    pub eval: EvalConfig,
}

impl Provenance {
    pub fn new(command: &str, dataset: Option<&Dataset>, run: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            dataset: dataset.map(|d| d.metadata.name.clone()),
            run: run.clone(),
            fit: run.fit(),
            eval: run.eval(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub provenance: Provenance,
    pub split: Split,
    pub result: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub provenance: Provenance,
    /// Whether CM parameters came from fits or the untuned defaults.
    pub untuned: bool,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePredictionRecord {
    pub id: String,
    pub t0: f64,
    pub label: bool,
    pub prediction: PredictionRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub provenance: Provenance,
    pub time: EvalTime,
    pub params: ModelParams,
    pub skipped: Vec<(String, String)>,
    pub predictions: Vec<SamplePredictionRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub provenance: Provenance,
    pub comparison: Comparison,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<fs::File>> {
    log::info!("writing {}", path.display());
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

// ---------------------------------------------------------------- synth

#[derive(Args, Clone, Debug)]
pub struct SynthArgs {
    /// TOML file with generator settings.
    #[arg(long, value_name = "FILE")]
    pub config_file: Option<PathBuf>,
    /// Number of samples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let mut cfg: SynthConfig = match &args.config_file {
        Some(p) => read_toml(p)?,
        None => SynthConfig::default(),
    };
    if let Some(n) = args.n {
        cfg.n = n as usize;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if cfg.n == 0 {
        bail!(UsageError("n must be at least 1".into()));
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    log::info!("generator settings: {}", serde_json::to_string(&cfg)?);
    let syn = synth_generate(&cfg)?;
    let accepted = syn.truth.iter().filter(|t| t.accepted).count();
    save_dataset(&syn.dataset, &args.out.out)?;
    log::info!(
        "wrote {} samples ({accepted} accepted) to {}",
        syn.dataset.len(),
        args.out.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- fit

#[derive(Args, Clone, Debug)]
pub struct DataArgs {
    /// Dataset directory in the three-file format.
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,
}

fn load(data: &DataArgs) -> anyhow::Result<Dataset> {
    ensure!(
        data.data.is_dir(),
        UsageError(format!("dataset directory {} does not exist", data.data.display()))
    );
    load_dataset(&data.data).with_context(|| format!("loading {}", data.data.display()))
}

fn splits(ds: &Dataset, run: &RunConfig) -> anyhow::Result<SplitPlan> {
    Ok(make_splits(ds, run.n_random_splits, run.test_fraction, run.split_seed)?)
}

pub fn fit_file_name(label: &str, split: usize) -> String {
    format!("fit_{label}_split{split:02}.json")
}

#[derive(Args, Clone, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

fn items_for(ds: &Dataset, split: &Split, run: &RunConfig) -> anyhow::Result<Vec<TrainingItem>> {
    Ok(training_items(ds, split, run.n_i, run.lateral_tolerance)?)
}

pub fn fit_cmd(args: &FitArgs) -> anyhow::Result<()> {
    let run = args.config.resolve()?;
    ensure!(
        run.model == ModelId::CM,
        UsageError(format!("only CM is fitted by `fit`; {} is trained during `evaluate`", run.model))
    );
    let ds = load(&args.data)?;
    let plan = splits(&ds, &run)?;
    create_dir(&args.out.out)?;
    let prov = Provenance::new("fit", Some(&ds), &run);
    let label = run.label();
    for split in &plan.splits {
        let items = items_for(&ds, split, &run)?;
        log::info!("{label}: fitting split {} on {} samples", split.index, items.len());
        let result = fit(&items, &prov.fit)?;
        log::info!("{label}: split {} best loss {}", split.index, result.loss);
        let file = FitFile {
            provenance: prov.clone(),
            split: split.clone(),
            result,
        };
        write_json(&args.out.out.join(fit_file_name(&label, split.index)), &file)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- predict

fn parse_time(s: &str) -> Result<EvalTime, String> {
    [EvalTime::GapOpening, EvalTime::CharacteristicGap, EvalTime::CriticalDecision]
        .into_iter()
        .find(|&t| time_name(t) == s)
        .ok_or_else(|| format!("unknown time `{s}`; valid: gap_opening, characteristic, critical"))
}

#[derive(Args, Clone, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fit result whose parameters are used.
    #[arg(long, value_name = "FILE", conflicts_with = "untuned", required_unless_present = "untuned")]
    pub fit: Option<PathBuf>,
    /// Use the default parameters instead of a fit.
    #[arg(long)]
    pub untuned: bool,
    /// Prediction timestamp: gap_opening, characteristic or critical.
    #[arg(long, value_parser = parse_time, default_value = "gap_opening")]
    pub time: EvalTime,
    /// Comma-separated sample ids; all samples when absent.
    #[arg(long, value_delimiter = ',')]
    pub ids: Option<Vec<String>>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn predict_cmd(args: &PredictArgs) -> anyhow::Result<()> {
    let run = args.config.resolve()?;
    let ds = load(&args.data)?;
    let params = match &args.fit {
        Some(p) => {
            let f: FitFile = read_json(p)?;
            ensure!(
                f.provenance.run.cm_config == run.cm_config,
                UsageError(format!(
                    "{} was fitted as {} but the run uses {}",
                    p.display(),
                    f.provenance.run.cm_config,
                    run.cm_config
                ))
            );
            f.result.params
        }
        None => ModelParams::default(),
    };
    let ids: Vec<String> = match &args.ids {
        Some(ids) => ids.clone(),
        None => ds.samples.iter().map(|s| s.id.clone()).collect(),
    };
    let mut items = Vec::new();
    let mut labels = Vec::new();
    let mut skipped = Vec::new();
    for id in &ids {
        let s = ds
            .get(id)
            .ok_or_else(|| UsageError(format!("no sample `{id}` in {}", ds.metadata.name)))?;
        if let Some(reason) = not_evaluable(s, args.time, run.n_i) {
            log::warn!("skipping {id}: {reason}");
            skipped.push((id.clone(), reason));
            continue;
        }
        items.push(TrainingItem::from_sample(s, eval_timestamp(s, args.time), run.n_i, run.lateral_tolerance)?);
        labels.push(s.outcome.accepted);
    }
    let records = predict_items(&items, &params, &run.sim(), run.n_p, run.seed)?;
    let predictions: Vec<SamplePredictionRecord> = items
        .iter()
        .zip(labels)
        .zip(records)
        .map(|((it, label), prediction)| SamplePredictionRecord {
            id: it.key.clone(),
            t0: it.t0,
            label,
            prediction,
        })
        .collect();
    create_dir(&args.out.out)?;
    let label = if args.untuned {
        format!("{}_untuned", run.label())
    } else {
        run.label()
    };
    let stem = format!("predictions_{label}_{}", time_name(args.time));
    let mut w = csv_writer(&args.out.out.join(format!("{stem}.csv")))?;
    w.write_record(["sample_id", "t0", "a", "a_pred", "mean_acceptance_time", "variance"])?;
    for p in &predictions {
        let times = &p.prediction.acceptance_times;
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        w.write_record([
            p.id.clone(),
            p.t0.to_string(),
            u8::from(p.label).to_string(),
            p.prediction.a_pred.to_string(),
            mean.to_string(),
            p.prediction.variance.to_string(),
        ])?;
    }
    w.flush()?;
    let file = PredictionFile {
        provenance: Provenance::new("predict", Some(&ds), &run),
        time: args.time,
        params,
        skipped,
        predictions,
    };
    write_json(&args.out.out.join(format!("{stem}.json")), &file)
}

// ---------------------------------------------------------------- evaluate

#[derive(Args, Clone, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory holding the fit files of a CM run (defaults to --out).
    #[arg(long, value_name = "DIR")]
    pub fits: Option<PathBuf>,
    /// Evaluate CM with the default parameters instead of fits.
    #[arg(long)]
    pub untuned: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Reads the fit of every split and checks it was made for `plan` and `run`.
fn load_fits(dir: &Path, label: &str, plan: &SplitPlan, run: &RunConfig) -> anyhow::Result<Vec<ModelParams>> {
    let mut params = Vec::with_capacity(plan.splits.len());
    for split in &plan.splits {
        let path = dir.join(fit_file_name(label, split.index));
        ensure!(
            path.is_file(),
            UsageError(format!("missing fit file {}; run `fit` first", path.display()))
        );
        let f: FitFile = read_json(&path)?;
        if f.split != *split {
            bail!("{} was fitted on a different split", path.display());
        }
        let (a, b) = (&f.provenance.fit.sim, &run.sim());
        if a != b {
            bail!("{} used different simulation settings than this run", path.display());
        }
        params.push(f.result.params);
    }
    Ok(params)
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> anyhow::Result<()> {
    let run = args.config.resolve()?;
    let ds = load(&args.data)?;
    let plan = splits(&ds, &run)?;
    let mut label = run.label();
    let params = match run.model {
        ModelId::CM if args.untuned => {
            label.push_str("_untuned");
            Some(vec![ModelParams::default(); plan.splits.len()])
        }
        ModelId::CM => {
            let dir = args.fits.as_ref().unwrap_or(&args.out.out);
            Some(load_fits(dir, &label, &plan, &run)?)
        }
        _ => None,
    };
    let mut report = evaluate(&ds, &plan, run.model, params.as_deref(), &label, &run.eval())?;
    for s in &mut report.splits {
        s.metrics.retain(|m, _| run.metrics.contains(m));
        s.roc.retain(|m, _| run.metrics.contains(m));
    }
    report.random_mean.retain(|m, _| run.metrics.contains(m));
    report.critical.retain(|m, _| run.metrics.contains(m));
    for (m, v) in &report.random_mean {
        log::info!("{label}: {m} random mean {} critical {}", opt(*v), opt(report.critical[m]));
    }
    create_dir(&args.out.out)?;
    write_report_tables(&args.out.out, &report)?;
    let file = ReportFile {
        provenance: Provenance::new("evaluate", Some(&ds), &run),
        untuned: args.untuned,
        report,
    };
    write_json(&args.out.out.join(format!("report_{label}.json")), &file)
}

fn split_name(kind: cogap::datasets::SplitKind) -> &'static str {
    match kind {
        cogap::datasets::SplitKind::Random => "random",
        cogap::datasets::SplitKind::Critical => "critical",
    }
}

/// Metric table, ROC points and per-sample predictions as CSV.
fn write_report_tables(dir: &Path, r: &EvalReport) -> anyhow::Result<()> {
    let label = &r.label;
    let mut w = csv_writer(&dir.join(format!("metrics_{label}.csv")))?;
    w.write_record(["label", "dataset", "split", "kind", "metric", "value", "n_samples", "skipped"])?;
    for s in &r.splits {
        for (m, v) in &s.metrics {
            w.write_record([
                label.as_str(),
                &r.dataset,
                &s.index.to_string(),
                split_name(s.kind),
                m.as_str(),
                &opt(v.value),
                &v.n_samples.to_string(),
                v.skipped.as_deref().unwrap_or(""),
            ])?;
        }
    }
    for (m, v) in &r.random_mean {
        w.write_record([label.as_str(), &r.dataset, "mean", "random", m.as_str(), &opt(*v), "", ""])?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join(format!("roc_{label}.csv")))?;
    w.write_record(["label", "split", "kind", "metric", "fpr", "tpr"])?;
    for s in &r.splits {
        for (m, points) in &s.roc {
            for (fpr, tpr) in points {
                w.write_record([
                    label.as_str(),
                    &s.index.to_string(),
                    split_name(s.kind),
                    m.as_str(),
                    &fpr.to_string(),
                    &tpr.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join(format!("scores_{label}.csv")))?;
    w.write_record(["label", "split", "kind", "time", "sample_id", "t0", "a", "a_pred", "ade"])?;
    for s in &r.splits {
        for p in &s.predictions {
            w.write_record([
                label.as_str(),
                &s.index.to_string(),
                split_name(s.kind),
                time_name(p.time),
                &p.id,
                &p.t0.to_string(),
                &u8::from(p.label).to_string(),
                &p.a_pred.to_string(),
                &opt(p.ade),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- compare

#[derive(Args, Clone, Debug)]
pub struct CompareArgs {
    /// Report files of model A, one per dataset.
    #[arg(long = "a", value_name = "FILE", required = true, num_args = 1..)]
    pub a: Vec<PathBuf>,
    /// Report files of model B, one per dataset.
    #[arg(long = "b", value_name = "FILE", required = true, num_args = 1..)]
    pub b: Vec<PathBuf>,
    /// Significance level of the paired t-test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn compare_cmd(args: &CompareArgs) -> anyhow::Result<()> {
    ensure!(
        args.alpha > 0.0 && args.alpha < 1.0,
        UsageError(format!("alpha must lie in (0, 1), got {}", args.alpha))
    );
    let read = |paths: &[PathBuf]| -> anyhow::Result<Vec<ReportFile>> { paths.iter().map(|p| read_json(p)).collect() };
    let (fa, fb) = (read(&args.a)?, read(&args.b)?);
    let ra: Vec<EvalReport> = fa.iter().map(|f| f.report.clone()).collect();
    let rb: Vec<EvalReport> = fb.iter().map(|f| f.report.clone()).collect();
    let c = compare(&ra, &rb, args.alpha)?;
    create_dir(&args.out.out)?;
    let stem = format!("compare_{}_vs_{}", c.label_a, c.label_b);
    fs::write(args.out.out.join(format!("{stem}.txt")), comparison_table(&c))?;
    let run = RunConfig {
        alpha: args.alpha,
        ..fa[0].provenance.run.clone()
    };
    let file = ComparisonFile {
        provenance: Provenance::new("compare", None, &run),
        comparison: c,
    };
    write_json(&args.out.out.join(format!("{stem}.json")), &file)
}

fn winner(w: Option<Winner>, a: &str, b: &str) -> String {
    match w {
        Some(Winner::A) => a.to_string(),
        Some(Winner::B) => b.to_string(),
        Some(Winner::Neither) => "-".to_string(),
        None => "n/a".to_string(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

/// Plain-text table: one row per dataset and metric, then the share of
/// cases in which each side is significantly better, as `random (critical)`.
pub fn comparison_table(c: &Comparison) -> String {
    let (a, b) = (c.label_a.as_str(), c.label_b.as_str());
    let mut s = String::new();
    let _ = writeln!(s, "{a} (A) vs {b} (B), alpha = {}", c.alpha);
    let _ = writeln!(
        s,
        "{:<16} {:<20} {:>10} {:>10} {:>9} {:>8} {:>8} {:>10} {:>10} {:>8}",
        "dataset", "metric", "mean A", "mean B", "t", "p", "winner", "crit A", "crit B", "winner"
    );
    for r in &c.rows {
        let (t, p) = r
            .t_test
            .map_or(("n/a".to_string(), "n/a".to_string()), |t| (format!("{:.3}", t.t), format!("{:.4}", t.p)));
        let _ = writeln!(
            s,
            "{:<16} {:<20} {:>10} {:>10} {:>9} {:>8} {:>8} {:>10} {:>10} {:>8}",
            r.dataset,
            r.metric.as_str(),
            fmt_opt(r.mean_a),
            fmt_opt(r.mean_b),
            t,
            p,
            winner(r.random_winner, "A", "B"),
            fmt_opt(r.critical_a),
            fmt_opt(r.critical_b),
            winner(r.critical_winner, "A", "B"),
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<20} {:>14} {:>14}", "metric", "A better", "B better");
    for m in Metric::ALL {
        let (Some(ca), Some(cb)) = (c.a_better_by_metric.get(&m), c.b_better_by_metric.get(&m)) else {
            continue;
        };
        let _ = writeln!(s, "{:<20} {:>14} {:>14}", m.as_str(), ca.to_string(), cb.to_string());
    }
    let _ = writeln!(
        s,
        "{:<20} {:>14} {:>14}",
        "all",
        c.a_better.to_string(),
        c.b_better.to_string()
    );
    s
}
