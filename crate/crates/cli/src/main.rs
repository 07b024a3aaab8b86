//! `narc`: build easy variants of a reading-comprehension test set, probe
//! exported attention, and run the bag-of-words baseline.
//!
//! Exit status: 0 on success, 1 on invalid input or usage, 2 on I/O failure.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use narc_core::annotation::{apply_annotations, read_annotations, AnnotationKind, AnnotationStore};
use narc_core::baseline::{relative_improvement, run_baseline, stats};
use narc_core::corpus::{load_race_dir, read_canonical, tokenize, write_canonical, Dataset, Meta};
use narc_core::declarative::{read_parse_sidecar, ParseTree};
use narc_core::probe::{
    load_attention, run_probe, Layer, ProbeOptions, DEFAULT_EQUALITY_TOLERANCE,
};
use narc_core::transforms::{
    read_passage_sidecar, transform_dataset, TransformId, TransformRequest,
};
use narc_core::{Error, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "narc",
    version,
    about = "Non-adversarial reading-comprehension toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Output,
    QueryAware,
    #[value(name = "self")]
    SelfMatching,
}

impl From<LayerArg> for Layer {
    fn from(l: LayerArg) -> Layer {
        match l {
            LayerArg::Output => Layer::Output,
            LayerArg::QueryAware => Layer::QueryAware,
            LayerArg::SelfMatching => Layer::SelfMatching,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    P5,
    O3h,
}

impl From<TaskArg> for AnnotationKind {
    fn from(t: TaskArg) -> AnnotationKind {
        match t {
            TaskArg::P5 => AnnotationKind::SentenceSelection,
            TaskArg::O3h => AnnotationKind::ConfusingOption,
        }
    }
}

fn parse_op(s: &str) -> std::result::Result<TransformId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Apply one transform to a RACE directory or canonical JSONL file.
    Transform(TransformArgs),
    /// Score exported attention against a transformed dataset.
    Probe(ProbeArgs),
    /// Run the bag-of-words baseline.
    Baseline {
        #[arg(long)]
        dataset: PathBuf,
        /// Write per-example predictions here as JSONL.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Relative improvement of an accuracy over random guessing.
    Stats {
        #[arg(long)]
        accuracy: f64,
        #[arg(long, required_unless_present = "dataset")]
        options: Option<usize>,
        /// Take the option count from a dataset instead.
        #[arg(long, conflicts_with = "options")]
        dataset: Option<PathBuf>,
    },
    /// Show how a string is tokenized.
    Tokenize {
        #[arg(long)]
        text: String,
    },
    /// Serve an annotation task over HTTP.
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with the annotation UI build.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Build the P5 or O3(H) dataset from stored annotations.
    ApplyAnnotations {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum)]
        kind: TaskArg,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        allow_missing: bool,
    },
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long, value_parser = parse_op)]
    op: TransformId,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Options to keep (O3).
    #[arg(long)]
    keep: Option<usize>,
    /// Constituency parses for wh-queries, JSONL {id, parse}.
    #[arg(long)]
    parses: Option<PathBuf>,
    /// Replacement passages for P4/P5, JSONL {id, passage}.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Pass examples without a sidecar entry through unchanged.
    #[arg(long)]
    allow_missing: bool,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    attention: PathBuf,
    #[arg(long, value_enum)]
    layer: LayerArg,
    #[arg(long)]
    report: PathBuf,
    /// Also write per-example values as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    normalization_tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_EQUALITY_TOLERANCE)]
    equality_tolerance: f64,
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    if path.is_dir() {
        load_race_dir(path)
    } else {
        read_canonical(path)
    }
}

fn meta(dataset: &Dataset, subcommand: &str, seed: Option<u64>) -> Meta {
    Meta {
        subcommand: Some(subcommand.to_string()),
        seed,
        ..Meta::for_dataset(dataset)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn print(value: Value) {
    println!("{value}");
}

fn transform(args: TransformArgs) -> Result<()> {
    let TransformArgs {
        op,
        input,
        output,
        seed,
        keep,
        parses,
        sidecar,
        allow_missing,
    } = args;
    let dataset = load_dataset(&input)?;
    let parses: Option<HashMap<String, ParseTree>> =
        parses.as_deref().map(read_parse_sidecar).transpose()?;
    let sidecar = sidecar.as_deref().map(read_passage_sidecar).transpose()?;
    let req = TransformRequest {
        seed,
        keep,
        parses: parses.as_ref(),
        sidecar: sidecar.as_ref(),
        allow_missing,
    };
    let (out, report) = transform_dataset(&dataset, op, &req)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_canonical(&out, &output, Some(&meta(&out, "transform", Some(seed))))?;
    print(json!({
        "op": op.to_string(),
        "examples": out.len(),
        "passed_through": report.passed_through.len(),
        "warnings": report.warnings.len(),
    }));
    Ok(())
}

fn probe(args: ProbeArgs) -> Result<()> {
    let ProbeArgs {
        dataset,
        attention,
        layer,
        report: report_path,
        csv,
        normalization_tolerance,
        equality_tolerance,
    } = args;
    let layer: Layer = layer.into();
    let dataset = load_dataset(&dataset)?;
    let records = load_attention(&attention)?;
    let opts = ProbeOptions {
        normalization_tolerance,
        equality_tolerance,
        ..ProbeOptions::new(layer)
    };
    let report = run_probe(&dataset, &records, &opts)?;
    for (metric, c) in &report.counts {
        if let Some(n) = c.reasons.get("unnormalized") {
            eprintln!("warning: {n} record(s) excluded from {metric:?}: weights do not sum to 1");
        }
    }
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["_meta"] = serde_json::to_value(meta(&dataset, "probe", None)).expect("meta serializes");
    write_text(
        &report_path,
        &format!("{}\n", serde_json::to_string_pretty(&value).expect("json")),
    )?;
    if let Some(path) = csv.as_deref() {
        let file = fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        report.write_csv(file)?;
    }
    print(json!({ "layer": layer.tag(), "table": report.table }));
    Ok(())
}

fn baseline(dataset: &Path, predictions: Option<&Path>) -> Result<()> {
    let dataset = load_dataset(dataset)?;
    let result = run_baseline(&dataset)?;
    if let Some(path) = predictions {
        let mut out = String::new();
        out.push_str(&json!({ "_meta": meta(&dataset, "baseline", None) }).to_string());
        out.push('\n');
        for ex in &dataset.examples {
            let row = json!({
                "id": ex.id,
                "prediction": result.predictions[&ex.id],
                "scores": result.per_example_scores[&ex.id],
            });
            out.push_str(&row.to_string());
            out.push('\n');
        }
        write_text(path, &out)?;
    }
    let s = stats(&dataset, result.accuracy)?;
    print(json!({
        "examples": dataset.len(),
        "accuracy": s.accuracy,
        "n_options": s.n_options,
        "relative_improvement": s.relative_improvement,
    }));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Transform(args) => transform(args),
        Command::Probe(args) => probe(args),
        Command::Baseline {
            dataset,
            predictions,
        } => baseline(&dataset, predictions.as_deref()),
        Command::Stats {
            accuracy,
            options,
            dataset,
        } => {
            let n = match (options, dataset) {
                (Some(n), _) => n,
                (None, Some(path)) => stats(&load_dataset(&path)?, accuracy)?
                    .n_options
                    .ok_or_else(|| {
                        Error::Invalid(
                            "examples have differing option counts; pass --options".into(),
                        )
                    })?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            println!(
                "relative_improvement {:.4}",
                relative_improvement(accuracy, n)?
            );
            Ok(())
        }
        Command::Tokenize { text } => {
            let t = tokenize(&text);
            let offsets: Vec<[usize; 2]> = t.offsets.iter().map(|r| [r.start, r.end]).collect();
            print(json!({ "tokens": t.tokens, "offsets": offsets }));
            Ok(())
        }
        Command::Serve {
            dataset,
            task,
            store,
            port,
            host,
            ui,
        } => {
            let dataset = load_dataset(&dataset)?;
            let store = AnnotationStore::open(store)?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Error::Invalid(format!("bad address {host}:{port}: {e}")))?;
            let state = narc_service::AppState::new(dataset, task.into(), store);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Io {
                path: "<runtime>".into(),
                source: e,
            })?;
            runtime
                .block_on(narc_service::serve(
                    state,
                    narc_service::ServeConfig { addr, ui_dir: ui },
                ))
                .map_err(|e| Error::Io {
                    path: addr.to_string().into(),
                    source: e,
                })
        }
        Command::ApplyAnnotations {
            dataset,
            store,
            kind,
            output,
            allow_missing,
        } => {
            let dataset = load_dataset(&dataset)?;
            if !store.exists() {
                return Err(Error::Io {
                    path: store,
                    source: std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "annotation store not found",
                    ),
                });
            }
            let annotations = read_annotations(&store)?;
            let (out, report) =
                apply_annotations(&dataset, &annotations, kind.into(), allow_missing)?;
            write_canonical(&out, &output, Some(&meta(&out, "apply-annotations", None)))?;
            print(json!({ "examples": out.len(), "unannotated": report.unannotated.len() }));
            Ok(())
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("NARC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
