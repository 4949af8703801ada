//! `cetrace`: batch pipeline for complex-event traces.
//!
//! Subcommands cover the full flow: `generate` synthetic traces, `corrupt`
//! them through a noisy-classifier channel, `label` them with the
//! deterministic monitors, `detect` over probabilistic inputs, `build`
//! labeled datasets, compute dataset `stats`, `eval` predictions, and sweep
//! noise levels with `curve`. `catalogue` and `automaton` export the monitor
//! descriptions and flattened automata.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/config error. Every output
//! artifact gets a sibling `<name>.run.json` run record (arguments, seeds,
//! config hash, wall time); all other outputs are byte-deterministic for a
//! fixed seed.

mod record;

use anyhow::{bail, Context, Result};
use cetrace::dataset::{self, DatasetManifest};
use cetrace::eval::{curve_csv, degradation_curve, f1_report, AbsentClassPolicy, EvalReport};
use cetrace::event::{CeLabel, WindowSpec, AE_COUNT};
use cetrace::fsm::{catalogue, label_trace, label_trace_multi, LabelError};
use cetrace::probfsm::{finitize, AutomatonSet};
use cetrace::simulator::{corrupt, generate, mix_seed, GeneratorConfig};
use cetrace::trace::{record_lines, write_record, TraceRecord};
use clap::{Args, Parser, Subcommand, ValueEnum};
use record::RunRecord;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Seed fallback environment variable.
const SEED_ENV: &str = "NAROCE_SEED";

#[derive(Parser)]
#[command(name = "cetrace", version, about = "Complex-event trace pipeline")]
struct Cli {
    /// Worker threads for batch stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnCollision {
    /// Fail the run (exit 2).
    Error,
    /// Drop the offending trace.
    Skip,
    /// Emit the full label sets in `ce_multi`.
    Multi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AbsentPolicyArg {
    Exclude,
    Zero,
    One,
}

impl From<AbsentPolicyArg> for AbsentClassPolicy {
    fn from(p: AbsentPolicyArg) -> Self {
        match p {
            AbsentPolicyArg::Exclude => AbsentClassPolicy::Exclude,
            AbsentPolicyArg::Zero => AbsentClassPolicy::Zero,
            AbsentPolicyArg::One => AbsentClassPolicy::One,
        }
    }
}

#[derive(Args)]
struct SeedArg {
    /// Base seed; falls back to $NAROCE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .parse::<u64>()
                .with_context(|| format!("{SEED_ENV}={v:?} is not a valid u64 seed")),
            Err(_) => Ok(0),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate concept traces from a generator config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        /// Number of traces.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Trace duration in seconds.
        #[arg(long = "duration-s", default_value_t = 300)]
        duration_s: u64,
        /// Override the config's noise rate.
        #[arg(long)]
        noise: Option<f64>,
        /// Stretch factor (>= 1) applied to the config's temporal structure,
        /// for out-of-distribution trace lengths.
        #[arg(long)]
        stretch: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pass traces through the synthetic noisy-classifier channel.
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        /// Classifier accuracy in [0, 1].
        #[arg(long, default_value_t = 0.95)]
        accuracy: f64,
        /// Optional 9x9 row-stochastic confusion matrix (JSON).
        #[arg(long)]
        confusion: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        /// Per-window class distributions (JSONL with "p").
        #[arg(long = "out-probs")]
        out_probs: PathBuf,
        /// Sampled hard predictions (JSONL with "ae").
        #[arg(long = "out-ae")]
        out_ae: PathBuf,
    },
    /// Label traces with the deterministic monitor ensemble.
    Label {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// What to do when two classes complete at the same window.
        #[arg(long = "on-collision", value_enum, default_value_t = OnCollision::Error)]
        on_collision: OnCollision,
    },
    /// Detect complex events from probabilistic traces.
    Detect {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a labeled dataset from a manifest and a generator config.
    Build {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory (traces.jsonl + manifest.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Dataset statistics: occurrence rates, spans, overlap tables.
    Stats {
        /// Dataset directory or labeled JSONL file.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Window-level F1 report of predictions against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Scoring for classes absent from both prediction and truth.
        #[arg(long = "absent-policy", value_enum, default_value_t = AbsentPolicyArg::Exclude)]
        absent_policy: AbsentPolicyArg,
    },
    /// Noise-degradation comparison of the symbolic detectors.
    Curve {
        /// Labeled dataset (directory or JSONL).
        #[arg(long)]
        truth: PathBuf,
        /// Comma-separated noise levels.
        #[arg(long, default_value = "0,0.05,0.1,0.2", value_delimiter = ',')]
        noise: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Machine-readable monitor catalogue (locations, counters, thresholds).
    Catalogue {
        /// Window size in seconds.
        #[arg(long = "window-s", default_value_t = 5)]
        window_s: u32,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump one monitor's flattened automaton as JSON.
    Automaton {
        /// Class label, e.g. e6.
        #[arg(long)]
        ce: String,
        #[arg(long = "window-s", default_value_t = 5)]
        window_s: u32,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn open_in(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(
        fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create_out(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_config(path: &Path) -> Result<GeneratorConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(GeneratorConfig::from_toml(&text)?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            config,
            seed,
            count,
            duration_s,
            noise,
            stretch,
            out,
        } => {
            let record = RunRecord::start("generate");
            let mut cfg = load_config(&config)?;
            if let Some(n) = noise {
                cfg.noise_rate = n;
                cfg.validate()?;
            }
            if let Some(f) = stretch {
                if f < 1.0 {
                    bail!("--stretch must be >= 1");
                }
                cfg = cfg.stretch(f);
            }
            let base = seed.resolve()?;
            let mut w = create_out(&out)?;
            for i in 0..count {
                let trace = generate(&cfg, duration_s, mix_seed(base, i as u64))?;
                write_record(&mut w, &TraceRecord::from_concept(&trace))?;
            }
            w.flush()?;
            record.seed(base).config(&config)?.finish(&out)?;
            Ok(())
        }
        Command::Corrupt {
            input,
            accuracy,
            confusion,
            seed,
            out_probs,
            out_ae,
        } => {
            let record = RunRecord::start("corrupt");
            let matrix = confusion
                .as_deref()
                .map(load_confusion)
                .transpose()?;
            let base = seed.resolve()?;
            let mut probs_w = create_out(&out_probs)?;
            let mut ae_w = create_out(&out_ae)?;
            for (i, rec) in record_lines(open_in(&input)?).enumerate() {
                let rec = rec?;
                let trace = rec.to_concept()?;
                let (prob, noisy) =
                    corrupt(&trace, accuracy, matrix.as_ref(), mix_seed(base, i as u64))?;
                let mut prob_rec = TraceRecord::from_prob(&prob);
                prob_rec.seed = rec.seed;
                prob_rec.gen = rec.gen.clone();
                write_record(&mut probs_w, &prob_rec)?;
                write_record(&mut ae_w, &TraceRecord::from_concept(&noisy))?;
            }
            probs_w.flush()?;
            ae_w.flush()?;
            let record = record.seed(base);
            record.clone().finish(&out_probs)?;
            record.finish(&out_ae)?;
            Ok(())
        }
        Command::Label {
            input,
            out,
            on_collision,
        } => {
            let record = RunRecord::start("label");
            let mut w = create_out(&out)?;
            for rec in record_lines(open_in(&input)?) {
                let rec = rec?;
                let trace = rec.to_concept()?;
                match on_collision {
                    OnCollision::Multi => {
                        let multi = label_trace_multi(&trace)?;
                        let mut out_rec = TraceRecord::from_concept(&trace);
                        out_rec.ce_multi = Some(
                            multi
                                .sets
                                .iter()
                                .map(|s| s.iter().map(|c| c.id()).collect())
                                .collect(),
                        );
                        write_record(&mut w, &out_rec)?;
                    }
                    _ => match label_trace(&trace) {
                        Ok(labeled) => {
                            write_record(&mut w, &TraceRecord::from_labeled(&labeled))?
                        }
                        Err(LabelError::SimultaneousCompletion { window, ces })
                            if on_collision == OnCollision::Skip =>
                        {
                            eprintln!(
                                "skipping {}: classes {ces:?} complete together at window {window}",
                                trace.id
                            );
                        }
                        Err(e) => bail!("trace {}: {e}", trace.id),
                    },
                }
            }
            w.flush()?;
            record.finish(&out)?;
            Ok(())
        }
        Command::Detect {
            input,
            threshold,
            out,
        } => {
            let record = RunRecord::start("detect");
            let mut set: Option<(u32, AutomatonSet)> = None;
            let mut w = create_out(&out)?;
            for rec in record_lines(open_in(&input)?) {
                let rec = rec?;
                let prob = rec.to_prob()?;
                let window_s = prob.window.window_seconds;
                if set.as_ref().map(|(w, _)| *w) != Some(window_s) {
                    set = Some((window_s, AutomatonSet::new(prob.window)?));
                }
                let labels = set.as_ref().unwrap().1.detect(&prob, threshold)?;
                let out_rec = TraceRecord {
                    id: rec.id.clone(),
                    window_s,
                    ce: Some(labels.iter().map(|l| l.id()).collect()),
                    ..TraceRecord::default()
                };
                write_record(&mut w, &out_rec)?;
            }
            w.flush()?;
            record.finish(&out)?;
            Ok(())
        }
        Command::Build {
            manifest,
            config,
            out,
        } => {
            let record = RunRecord::start("build");
            let manifest_text = fs::read_to_string(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let manifest: DatasetManifest = serde_json::from_str(&manifest_text)?;
            let cfg = load_config(&config)?;
            if manifest.config_id != cfg.name {
                bail!(
                    "manifest config_id {:?} does not match config name {:?}",
                    manifest.config_id,
                    cfg.name
                );
            }
            let output = dataset::build(&manifest, &cfg)?;
            dataset::write_dataset(&out, &manifest, &output)?;
            println!(
                "built {} traces ({} attempts, discard rate {:.4})",
                output.samples.len(),
                output.attempts,
                output.discard_rate()
            );
            record
                .seed(manifest.seed_base)
                .config(&config)?
                .finish(&out.join("traces.jsonl"))?;
            Ok(())
        }
        Command::Stats { input, out, format } => {
            let record = RunRecord::start("stats");
            let samples = dataset::read_labeled(&input)?;
            let stats = dataset::stats(&samples);
            match format {
                Format::Json => {
                    let mut w = create_out(&out)?;
                    serde_json::to_writer_pretty(&mut w, &stats)?;
                    w.write_all(b"\n")?;
                    w.flush()?;
                }
                Format::Csv => {
                    fs::write(with_suffix(&out, ".occurrence.csv"), stats.occurrence_csv())?;
                    fs::write(with_suffix(&out, ".overlap.csv"), stats.overlap_csv())?;
                }
            }
            record.finish(&out)?;
            Ok(())
        }
        Command::Eval {
            pred,
            truth,
            out,
            format,
            absent_policy,
        } => {
            let record = RunRecord::start("eval");
            let preds = read_label_sequences(&pred)?;
            let truths = read_label_sequences(&truth)?;
            for ((pid, _), (tid, _)) in preds.iter().zip(&truths) {
                if pid != tid {
                    bail!("prediction trace {pid:?} does not line up with truth trace {tid:?}");
                }
            }
            let pred_labels: Vec<_> = preds.into_iter().map(|(_, l)| l).collect();
            let truth_labels: Vec<_> = truths.into_iter().map(|(_, l)| l).collect();
            let report = f1_report(&pred_labels, &truth_labels, absent_policy.into())?;
            write_report(&report, &out, format)?;
            println!("f1_all {:.4}  f1_pos {:.4}", report.f1_all, report.f1_pos);
            record.finish(&out)?;
            Ok(())
        }
        Command::Curve {
            truth,
            noise,
            threshold,
            seed,
            out,
            format,
        } => {
            let record = RunRecord::start("curve");
            let samples = dataset::read_labeled(&truth)?;
            let base = seed.resolve()?;
            let points = degradation_curve(&samples, &noise, threshold, base)?;
            match format {
                Format::Json => {
                    let mut w = create_out(&out)?;
                    serde_json::to_writer_pretty(&mut w, &points)?;
                    w.write_all(b"\n")?;
                    w.flush()?;
                }
                Format::Csv => fs::write(&out, curve_csv(&points))?,
            }
            record.seed(base).finish(&out)?;
            Ok(())
        }
        Command::Catalogue { window_s, out } => {
            let window = WindowSpec::new(window_s);
            let entries: Vec<serde_json::Value> = catalogue(window)
                .into_iter()
                .map(|d| {
                    let states = finitize(CeLabel::new(d.ce).unwrap(), window)
                        .map(|a| a.n_states())
                        .unwrap_or(0);
                    let mut v = serde_json::to_value(&d).unwrap();
                    v["reachable_states"] = serde_json::json!(states);
                    v
                })
                .collect();
            emit_json(&entries, out.as_deref())
        }
        Command::Automaton { ce, window_s, out } => {
            let label: CeLabel = ce
                .parse()
                .map_err(|e: String| anyhow::anyhow!(e))?;
            if !label.is_event() {
                bail!("e0 has no monitor; pick e1..e10");
            }
            let automaton = finitize(label, WindowSpec::new(window_s))?;
            emit_json(&automaton.dump(), out.as_deref())
        }
    }
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            let mut w = create_out(path)?;
            w.write_all(text.as_bytes())?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_report(report: &EvalReport, out: &Path, format: Format) -> Result<()> {
    match format {
        Format::Json => {
            let mut w = create_out(out)?;
            serde_json::to_writer_pretty(&mut w, report)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        Format::Csv => fs::write(out, report.to_csv())?,
    }
    Ok(())
}

fn read_label_sequences(path: &Path) -> Result<Vec<(String, Vec<CeLabel>)>> {
    let file = if path.is_dir() {
        path.join("traces.jsonl")
    } else {
        path.to_path_buf()
    };
    let mut out = Vec::new();
    for rec in record_lines(open_in(&file)?) {
        let rec = rec?;
        let labels = rec.labels()?;
        out.push((rec.id, labels));
    }
    Ok(out)
}

fn load_confusion(path: &Path) -> Result<[[f64; AE_COUNT]; AE_COUNT]> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
    if rows.len() != AE_COUNT || rows.iter().any(|r| r.len() != AE_COUNT) {
        bail!("confusion matrix must be 9x9");
    }
    let mut m = [[0.0; AE_COUNT]; AE_COUNT];
    for (i, row) in rows.iter().enumerate() {
        m[i].copy_from_slice(row);
    }
    Ok(m)
}

