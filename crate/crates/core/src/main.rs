use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use mge_core::corpus::{load_hypotheses, parse_corpus_str, stats, write_corpus, Corpus, GenderLabel, HypothesisSet, ParseOptions};
use mge_core::evaluate::Evaluation;
use mge_core::iaa::compare_annotations;
use mge_core::ooc::{aggregate_ooc, extract_from, ingest_labels, read_ooc_tsv, write_ooc_tsv, OocKind, OocRecord};
use mge_core::report::{emit_report, parse_word_report_json, Format, Report, RunManifest};
use mge_core::synthgen::{gen_corpus, gen_hypotheses, HypothesisProfile, SynthSpec};
use mge_core::word_metrics::diff_reports;

#[derive(Parser)]
#[command(name = "mge", version, about = "Gender translation evaluation over annotated reference corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus file against the schema
    Validate {
        #[arg(long)]
        corpus: PathBuf,
        /// Skip the check that correct forms occur in the reference
        #[arg(long)]
        no_reference_check: bool,
    },
    /// POS and chain counts of a corpus
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Word-level coverage and accuracy
    EvalWords(EvalArgs),
    /// Agreement chain classification
    EvalChains(EvalArgs),
    /// Export out-of-coverage words or chains for manual labeling
    ExtractOoc {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, value_enum, default_value = "word")]
        kind: KindArg,
    },
    /// Summarize labeled out-of-coverage exports
    AggregateOoc {
        #[command(flatten)]
        eval: EvalArgs,
        /// Labeled export files (TSV)
        #[arg(long, required = true, num_args = 1..)]
        labels: Vec<PathBuf>,
    },
    /// Agreement between two annotations of the same sentences
    Iaa {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a synthetic corpus and optionally hypotheses
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sentence count; term and chain totals scale with it
        #[arg(long, default_value_t = 1000)]
        sentences: usize,
        /// Corpus output path (stdout if absent)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write hypotheses drawn with --profile here
        #[arg(long)]
        hyp_out: Option<PathBuf>,
        /// p_correct,p_wrong,p_drop
        #[arg(long, value_parser = parse_profile, default_value = "1,0,0")]
        profile: HypothesisProfile,
        #[arg(long)]
        hyp_seed: Option<u64>,
        /// Write the reference column as a hypothesis file here
        #[arg(long)]
        refs_out: Option<PathBuf>,
    },
    /// Per-slice percentage-point differences between two word-level JSON reports
    Diff {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the timestamp out of the manifest
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    #[arg(long)]
    filter_category: Option<String>,
    #[arg(long, value_parser = parse_gender)]
    filter_gender: Option<GenderLabel>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    #[value(alias = "md")]
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Word,
    Chain,
}

fn parse_gender(s: &str) -> Result<GenderLabel, String> {
    s.parse().map_err(|_| format!("expected F or M, got {s:?}"))
}

fn parse_profile(s: &str) -> Result<HypothesisProfile, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [c, w, d] => HypothesisProfile::new(c, w, d).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated probabilities".into()),
    }
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Markdown => Format::Markdown,
        }
    }
}

/// A data or metric error; exits with status 1.
struct Failure(String);

impl Failure {
    fn at(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure(format!("{}: {err}", path.display()))
    }
}

type Outcome = Result<(), Failure>;

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::at(path, e))
}

fn load_corpus(path: &Path, options: &ParseOptions) -> Result<(Corpus, Vec<u8>), Failure> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Failure::at(path, format!("line {line}: input is not valid UTF-8"))
    })?;
    let corpus = parse_corpus_str(text, options).map_err(|e| Failure::at(path, e))?;
    Ok((corpus, bytes))
}

fn write_output(out: Option<&Path>, content: &[u8]) -> Outcome {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| Failure::at(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(content).and_then(|_| stdout.flush()).map_err(|e| Failure(format!("stdout: {e}")))
        }
    }
}

fn manifest(command: &str, output: &OutputArgs) -> RunManifest {
    let m = RunManifest::new(command).option("format", format!("{:?}", Format::from(output.format)).to_lowercase());
    if output.no_timestamp {
        m
    } else {
        m.stamped_now()
    }
}

fn emit(report: Report<'_>, manifest: &RunManifest, output: &OutputArgs) -> Outcome {
    write_output(output.out.as_deref(), emit_report(&report, manifest, output.format.into()).as_bytes())
}

struct Loaded {
    corpus: Corpus,
    hyps: HypothesisSet,
    manifest: RunManifest,
}

/// Reads corpus and hypotheses and applies the filters. `--jobs` is left out
/// of the manifest so that reports do not depend on it.
fn load_eval(command: &str, args: &EvalArgs) -> Result<Loaded, Failure> {
    let (corpus, corpus_bytes) = load_corpus(&args.corpus, &ParseOptions::default())?;
    let hyp_bytes = read_bytes(&args.hyp)?;
    let hyps = load_hypotheses(&hyp_bytes[..], &corpus).map_err(|e| Failure::at(&args.hyp, e))?;
    let mut manifest = manifest(command, &args.output)
        .input(&args.corpus.display().to_string(), &corpus_bytes)
        .input(&args.hyp.display().to_string(), &hyp_bytes);
    if let Some(c) = &args.filter_category {
        manifest = manifest.option("filter_category", c);
    }
    if let Some(g) = args.filter_gender {
        manifest = manifest.option("filter_gender", g);
    }
    let (corpus, hyps) = if args.filter_category.is_some() || args.filter_gender.is_some() {
        corpus
            .select(&hyps, |e| {
                args.filter_category.as_deref().is_none_or(|c| e.category == c)
                    && args.filter_gender.is_none_or(|g| e.gender == g)
            })
            .map_err(|e| Failure::at(&args.hyp, e))?
    } else {
        (corpus, hyps)
    };
    Ok(Loaded { corpus, hyps, manifest })
}

fn evaluate<'a>(loaded: &'a Loaded, args: &EvalArgs) -> Result<Evaluation<'a>, Failure> {
    Evaluation::run(&loaded.corpus, &loaded.hyps, args.jobs as usize).map_err(|e| Failure::at(&args.hyp, e))
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { corpus, no_reference_check } => {
            let options = ParseOptions {
                check_reference_forms: !no_reference_check,
            };
            let (c, _) = load_corpus(&corpus, &options)?;
            let s = stats(&c);
            eprintln!("{}: ok ({} sentences, {} terms, {} chains)", corpus.display(), s.sentences, s.terms, s.chains);
            Ok(())
        }
        Command::Stats { corpus, output } => {
            let (c, bytes) = load_corpus(&corpus, &ParseOptions::default())?;
            let m = manifest("stats", &output).input(&corpus.display().to_string(), &bytes);
            emit(Report::Stats(&stats(&c)), &m, &output)
        }
        Command::EvalWords(args) => {
            let loaded = load_eval("eval-words", &args)?;
            let report = evaluate(&loaded, &args)?.words();
            emit(Report::Words(&report), &loaded.manifest, &args.output)
        }
        Command::EvalChains(args) => {
            let loaded = load_eval("eval-chains", &args)?;
            let report = evaluate(&loaded, &args)?.chains();
            emit(Report::Chains(&report), &loaded.manifest, &args.output)
        }
        Command::ExtractOoc { eval, kind } => {
            let loaded = load_eval("extract-ooc", &eval)?;
            let kind = match kind {
                KindArg::Word => OocKind::Word,
                KindArg::Chain => OocKind::Chain,
            };
            let records = extract_from(&evaluate(&loaded, &eval)?, &loaded.hyps, kind);
            let mut buf = Vec::new();
            write_ooc_tsv(&records, &mut buf).map_err(|e| Failure(e.to_string()))?;
            eprintln!("{} {} records", records.len(), kind.as_str());
            write_output(eval.output.out.as_deref(), &buf)
        }
        Command::AggregateOoc { eval, labels } => {
            let mut loaded = load_eval("aggregate-ooc", &eval)?;
            let ev = evaluate(&loaded, &eval)?;
            let mut export: Vec<OocRecord> = extract_from(&ev, &loaded.hyps, OocKind::Word);
            export.extend(extract_from(&ev, &loaded.hyps, OocKind::Chain));
            let mut rows = Vec::new();
            for path in &labels {
                let bytes = read_bytes(path)?;
                let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::at(path, "input is not valid UTF-8"))?;
                let parsed = read_ooc_tsv(&text).map_err(|e| Failure::at(path, e))?;
                // validate per file so errors name the right file and line
                ingest_labels(&parsed, &export).map_err(|e| Failure::at(path, e))?;
                rows.extend(parsed);
                loaded.manifest = loaded.manifest.input(&path.display().to_string(), &bytes);
            }
            let set = ingest_labels(&rows, &export).map_err(|e| Failure(format!("labels: {e}")))?;
            let report = aggregate_ooc(&set).map_err(|e| Failure(format!("labels: {e}")))?;
            emit(Report::Ooc(&report), &loaded.manifest, &eval.output)
        }
        Command::Iaa { a, b, output } => {
            // annotator files carry their own layers; forms are still checked
            let (ca, ba) = load_corpus(&a, &ParseOptions::default())?;
            let (cb, bb) = load_corpus(&b, &ParseOptions::default())?;
            let report = compare_annotations(&ca, &cb).map_err(|e| Failure(format!("{} vs {}: {e}", a.display(), b.display())))?;
            let m = manifest("iaa", &output)
                .input(&a.display().to_string(), &ba)
                .input(&b.display().to_string(), &bb);
            emit(Report::Iaa(&report), &m, &output)
        }
        Command::Gen {
            seed,
            sentences,
            out,
            hyp_out,
            profile,
            hyp_seed,
            refs_out,
        } => {
            let spec = SynthSpec::scaled_en_it(seed, sentences);
            let corpus = gen_corpus(&spec).map_err(|e| Failure(e.to_string()))?;
            let mut buf = Vec::new();
            write_corpus(&corpus, &mut buf).map_err(|e| Failure(e.to_string()))?;
            write_output(out.as_deref(), &buf)?;
            if let Some(path) = hyp_out {
                let hyps = gen_hypotheses(&corpus, &profile, hyp_seed.unwrap_or(seed.wrapping_add(1)));
                write_output(Some(&path), hyps.to_text().as_bytes())?;
            }
            if let Some(path) = refs_out {
                write_output(Some(&path), corpus.references().to_text().as_bytes())?;
            }
            Ok(())
        }
        Command::Diff { a, b, output } => {
            let load = |p: &Path| -> Result<_, Failure> {
                let bytes = read_bytes(p)?;
                let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::at(p, "input is not valid UTF-8"))?;
                let report = parse_word_report_json(&text).map_err(|e| Failure::at(p, e))?;
                Ok((report, bytes))
            };
            let (ra, ba) = load(&a)?;
            let (rb, bb) = load(&b)?;
            let delta = diff_reports(&ra, &rb).map_err(|e| Failure(e.to_string()))?;
            let m = manifest("diff", &output)
                .input(&a.display().to_string(), &ba)
                .input(&b.display().to_string(), &bb);
            emit(Report::Delta(&delta), &m, &output)
        }
    }
}

fn color_enabled() -> bool {
    match std::env::var("MGE_COLOR").as_deref() {
        Ok("1") => true,
        Ok("0") => false,
        _ => io::stderr().is_terminal(),
    }
}

fn main() -> ExitCode {
    let color = color_enabled();
    let cmd = Cli::command().color(if color { ColorChoice::Always } else { ColorChoice::Never });
    let cli = match Cli::from_arg_matches(&cmd.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            if color {
                eprintln!("\x1b[1;31merror\x1b[0m: {msg}");
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(1)
        }
    }
}
