//! `pfgram` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 runtime
//! failure. Machine-readable output goes to stdout, logs to stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pfgram::eval::{
    self, baseline_report, fit_threshold, record_distances, EvalReport, HistogramSpec, PairRecord,
};
use pfgram::nn::{self, load_checkpoint, save_checkpoint, CnnConfig};
use pfgram::pairing::Similarity;
use pfgram::{Error, Featurizer, Lexicon, ScriptTag, SymbolDictionary};
use serde::Serialize;
use serde_json::json;

const SCHEMA: &str = "pf/1";

#[derive(Parser)]
#[command(
    name = "pfgram",
    version,
    about = "Phonetic similarity of trademark names"
)]
struct Cli {
    #[command(flatten)]
    tables: Tables,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Tables {
    /// Symbol dictionary TSV (defaults to the bundled one).
    #[arg(long, global = true, env = "PF_DICT")]
    dict: Option<PathBuf>,

    /// Pronunciation lexicon TSV (defaults to the bundled one).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the symbol mapping of a text and optionally write its image.
    Featurize {
        #[arg(long)]
        text: String,
        #[arg(long, default_value = "roman")]
        script: ScriptTag,
        /// Grayscale PNG output.
        #[arg(long)]
        png: Option<PathBuf>,
        /// Raw little-endian f32 dump.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Cosine distance, and CNN probability with --model, for two texts.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "roman")]
        script_a: ScriptTag,
        #[arg(long, default_value = "roman")]
        script_b: ScriptTag,
        #[arg(long)]
        model: Option<PathBuf>,
        /// RGB overlay PNG (a in red, b in green).
        #[arg(long)]
        viz: Option<PathBuf>,
    },
    /// Write the image of one text, or the overlay of two.
    Viz {
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "roman")]
        script_a: ScriptTag,
        #[arg(long)]
        b: Option<String>,
        #[arg(long, default_value = "roman")]
        script_b: ScriptTag,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic labelled pair set as JSONL.
    DatasetGen {
        #[arg(long)]
        similar: usize,
        /// Defaults to the reference class ratio.
        #[arg(long)]
        dissimilar: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the classifier and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        fc1_units: Option<usize>,
        /// Also write the report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Accuracy of a checkpoint or of the cosine baseline.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(
            long,
            conflicts_with = "baseline",
            required_unless_present = "baseline"
        )]
        model: Option<PathBuf>,
        #[arg(long)]
        baseline: Option<Baseline>,
        #[arg(long, value_enum, default_value_t = Split::Val)]
        split: Split,
        /// Seed of the train/validation split. Defaults to the checkpoint's
        /// training seed, or 42 for the baseline.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-class cosine distance histogram as CSV.
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Cosine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Split {
    /// Held-out 10% (baseline threshold fitted on the other 90%).
    Val,
    /// Every record (baseline threshold fitted on all of them).
    All,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::UnknownSymbol { .. }
        | Error::EmptyInput
        | Error::Dictionary { .. }
        | Error::Lexicon { .. }
        | Error::Dataset { .. }
        | Error::InsufficientData(_)
        | Error::ZeroVector
        | Error::DimensionMismatch { .. } => 2,
        _ => 3,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

/// A closed pipe on stdout is not an error.
fn write_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(io_err(Path::new("<stdout>"))(e).into())
        }
        _ => Ok(()),
    }
}

fn print_json(value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string(value).map_err(Error::from)?;
    write_stdout(&(text + "\n"))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p))?,
        None => write_stdout(text)?,
    }
    Ok(())
}

fn featurizer(tables: &Tables) -> CliResult<Featurizer> {
    let dictionary = match &tables.dict {
        Some(p) => SymbolDictionary::load(p)?,
        None => SymbolDictionary::default(),
    };
    let lexicon = match &tables.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::default(),
    };
    Ok(Featurizer::new(dictionary, lexicon, Default::default()))
}

fn non_empty(flag: &str, text: &str) -> CliResult<()> {
    if text.trim().is_empty() {
        return Err(Failure::Usage(format!("--{flag} must not be empty")));
    }
    Ok(())
}

fn subset(records: &[PairRecord], idx: &[usize]) -> Vec<PairRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

fn run(cli: Cli) -> CliResult<()> {
    let f = featurizer(&cli.tables)?;
    match cli.command {
        Command::Featurize {
            text,
            script,
            png,
            raw,
        } => {
            non_empty("text", &text)?;
            let analysis = f.analyze(&text, script)?;
            let feature = f.feature(&text, script)?;
            if let Some(p) = &png {
                feature.write_png(p)?;
            }
            if let Some(p) = &raw {
                let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
                feature
                    .write_raw(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(io_err(p))?;
            }
            print_json(&json!({
                "schema": SCHEMA,
                "text": text,
                "script": script,
                "phonetic": analysis.transcription.phonetic_text,
                "oov_spans": analysis.transcription.oov_spans,
                "symbols": analysis.sequence.symbols(),
                "mapping": analysis.mapping,
                "coordinates": analysis.path.as_pairs(),
                "thickness": feature.thickness,
            }))
        }
        Command::Compare {
            a,
            b,
            script_a,
            script_b,
            model,
            viz,
        } => {
            non_empty("a", &a)?;
            non_empty("b", &b)?;
            let fa = f.feature(&a, script_a)?;
            let fb = f.feature(&b, script_b)?;
            let distance = eval::cosine_distance(&fa, &fb)?;
            let pair = pfgram::pairing::compose_pair(&fa, &fb)?;
            if let Some(p) = &viz {
                pair.export_rgb_png(p)?;
            }
            let mut out = json!({
                "schema": SCHEMA,
                "a": a,
                "b": b,
                "cosine_distance": distance,
                "overlap_pixels": pair.overlap_count(),
            });
            if let Some(p) = &model {
                let ckpt = load_checkpoint(p)?;
                let probs = nn::predict_probs(&ckpt.params, &ckpt.config, pair.data(), 1)?;
                let similar = probs[Similarity::Similar.label()];
                out["cnn"] = json!({
                    "probability_similar": similar,
                    "label": u8::from(nn::argmax(&probs) == Similarity::Similar.label()),
                });
            }
            print_json(&out)
        }
        Command::Viz {
            a,
            script_a,
            b,
            script_b,
            out,
        } => {
            non_empty("a", &a)?;
            let fa = f.feature(&a, script_a)?;
            match b {
                Some(b) => {
                    non_empty("b", &b)?;
                    let fb = f.feature(&b, script_b)?;
                    pfgram::pairing::compose_pair(&fa, &fb)?.export_rgb_png(&out)?;
                }
                None => fa.write_png(&out)?,
            }
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::DatasetGen {
            similar,
            dissimilar,
            seed,
            out,
        } => {
            let dissimilar = dissimilar.unwrap_or_else(|| eval::default_dissimilar_count(similar));
            if similar == 0 || dissimilar == 0 {
                return Err(Failure::Usage("both class counts must be positive".into()));
            }
            let records = eval::generate_synthetic(similar, dissimilar, seed, &f.dictionary);
            let mut buf = Vec::new();
            eval::write_jsonl(&records, &mut buf)?;
            write_text(out.as_deref(), &String::from_utf8_lossy(&buf))?;
            eprintln!("{} similar, {} dissimilar pairs", similar, dissimilar);
            Ok(())
        }
        Command::Train {
            data,
            out,
            seed,
            epochs,
            batch,
            lr,
            fc1_units,
            report,
        } => {
            let records = eval::load_jsonl(&data)?;
            let samples = eval::featurize_records(&records, &f)?;
            let defaults = CnnConfig::default();
            let config = CnnConfig {
                rng_seed: seed,
                epochs: epochs.unwrap_or(defaults.epochs),
                batch_size: batch.unwrap_or(defaults.batch_size),
                learning_rate: lr.unwrap_or(defaults.learning_rate),
                fc1_units: fc1_units.unwrap_or(defaults.fc1_units),
                ..defaults
            };
            config.validate()?;
            eprintln!("training on {} pairs", samples.len());
            let (params, train_report) = nn::train_with_progress(&samples, &config, |s| {
                eprintln!(
                    "epoch {}: loss {:.4}, train acc {:.4}, val acc {}",
                    s.epoch,
                    s.train_loss,
                    s.train_accuracy,
                    s.val_accuracy.map_or("-".into(), |a| format!("{a:.4}"))
                );
            })?;
            save_checkpoint(&out, &params, &config, None)?;
            eprintln!(
                "wrote {} in {:.1}s",
                out.display(),
                train_report.wall_time_secs
            );
            if let Some(p) = &report {
                let text = serde_json::to_string(&train_report).map_err(Error::from)?;
                std::fs::write(p, text + "\n").map_err(io_err(p))?;
            }
            print_json(&train_report)
        }
        Command::Eval {
            data,
            model,
            baseline,
            split,
            seed,
        } => {
            let records = eval::load_jsonl(&data)?;
            let checkpoint = model.as_deref().map(load_checkpoint).transpose()?;
            let seed = seed
                .or(checkpoint.as_ref().map(|c| c.config.rng_seed))
                .unwrap_or(42);
            let (train_idx, val_idx) = eval::split_records(&records, seed);
            let (fit_on, test_on) = match split {
                Split::Val => (subset(&records, &train_idx), subset(&records, &val_idx)),
                Split::All => (records.clone(), records.clone()),
            };
            let report: EvalReport = match (checkpoint, baseline) {
                (Some(ckpt), _) => eval::evaluate_cnn(&ckpt.params, &ckpt.config, &test_on, &f)?,
                (None, Some(Baseline::Cosine)) => {
                    let fitted = fit_threshold(&record_distances(&fit_on, &f)?)?;
                    baseline_report(&record_distances(&test_on, &f)?, fitted.tau)
                }
                (None, None) => return Err(Failure::Usage("give --model or --baseline".into())),
            };
            let mut value = serde_json::to_value(&report).map_err(Error::from)?;
            value["schema"] = json!(SCHEMA);
            print_json(&value)
        }
        Command::Stats { data, bins, out } => {
            if bins < 2 {
                return Err(Failure::Usage("--bins must be at least 2".into()));
            }
            let records = eval::load_jsonl(&data)?;
            let hist = HistogramSpec::from_distances(&record_distances(&records, &f)?, bins)?;
            if let (Some(s), Some(d)) = (hist.mean_similar, hist.mean_dissimilar) {
                eprintln!("mean distance: similar {s:.4}, dissimilar {d:.4}");
            }
            write_text(out.as_deref(), &hist.to_csv())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
