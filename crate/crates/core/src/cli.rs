//! The `gramtok` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Data goes to stdout
//! or `--out`; diagnostics go to stderr.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{build_contingency, chi_square, pair_report, read_pairs, ChiSquare, Contingency, Cut, EdReport};
use crate::codec::{decode, encode, explain, is_valid_prefix, EncodeMode, PrefixStatus, SequenceRecord, TokenSequence};
use crate::corpus::{corpus_stats, export_dataset, filter_corpus, load_records, write_records};
use crate::error::Error;
use crate::syntax::{Language, SourceText, DEFAULT_LANGUAGE};
use crate::vocab::{build_rule_vocab, merge_vocabs, BaseVocab, MergedVocab, SENTINEL_COUNT};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gramtok", version, about = "Grammar-rule code tokenization toolkit")]
pub struct Cli {
    /// Grammar to parse with.
    #[arg(long, global = true, env = "GRAMTOK_LANGUAGE")]
    pub language: Option<String>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge a base vocabulary with the rules found in a corpus.
    BuildVocab {
        #[arg(long)]
        base: PathBuf,
        /// Directory of .py files or JSONL of {"id", "content"}.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode one source file into a sequence JSON object.
    Encode {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: EncodeMode,
        /// Sequence id; defaults to the input path or `stdin`.
        #[arg(long)]
        id: Option<String>,
    },
    /// Decode one exact-mode sequence JSON object back to source bytes.
    Decode {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        vocab: PathBuf,
    },
    /// List the tokens of a sequence JSON object, one per line.
    Explain {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        vocab: PathBuf,
    },
    /// Check whether a sequence JSON object is a valid prefix.
    CheckPrefix {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        vocab: PathBuf,
    },
    /// Deduplicate and syntax-filter a corpus.
    FilterCorpus {
        #[arg(long)]
        corpus: PathBuf,
        /// Filtered records as JSONL.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the filter report (stdout if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Encode a filtered corpus into sequence shards plus a manifest.
    ExportDataset {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value = "canonical")]
        mode: EncodeMode,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1000)]
        shard_size: usize,
    },
    /// Length statistics of a corpus under token and grammar representations.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Edit distances of error/correct pairs under both representations.
    AnalyzePairs {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Base vocabulary for the token side; defaults to the vocab's base.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, default_value_t = crate::analysis::DEFAULT_THRESHOLD)]
        threshold: usize,
        /// Amplification cut for the contingency table: `median` or a number.
        #[arg(long, default_value = "median")]
        cut: CutArg,
        /// Also run the chi-square test (requires outcomes).
        #[arg(long)]
        chisq: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input file (stdin if omitted).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
pub struct CutArg(pub Cut);

impl std::str::FromStr for CutArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "median" {
            return Ok(CutArg(Cut::Median));
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| CutArg(Cut::Value(v)))
            .ok_or_else(|| format!("expected `median` or a number, got `{s}`"))
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error[{}]: {e}", e.name());
            EXIT_DATA
        }
    }
}

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::BuildVocab { base, corpus, out } => {
            let language = Language::from_name(cli.language.as_deref().unwrap_or(DEFAULT_LANGUAGE))?;
            let base = BaseVocab::load(base)?;
            let records = load_records(corpus)?;
            log::info!("{} corpus files", records.len());
            let (rules, stats) = build_rule_vocab(records.into_iter().map(|r| r.source), &language)?;
            if stats.skipped > 0 {
                log::warn!("{} corpus files skipped (parse errors)", stats.skipped);
            }
            let vocab = merge_vocabs(language.name(), base, rules);
            vocab.save(out)?;
            let summary = serde_json::json!({
                "m": vocab.base_len(),
                "s": SENTINEL_COUNT,
                "k": vocab.rule_len(),
                "total": vocab.total(),
                "parsed": stats.parsed,
                "skipped": stats.skipped,
            });
            write_json(None, &summary)
        }
        Command::Encode { io, vocab, mode, id } => {
            let vocab = load_vocab(cli, vocab)?;
            let bytes = read_input(io.input.as_deref())?;
            let id = id.clone().unwrap_or_else(|| match &io.input {
                Some(p) => p.display().to_string(),
                None => "stdin".to_string(),
            });
            let seq = encode(&SourceText::with_origin(bytes, id.clone()), &vocab, *mode)?;
            let rec = SequenceRecord {
                id,
                mode: *mode,
                ids: seq.ids,
            };
            write_json_line(io.out.as_deref(), &rec)
        }
        Command::Decode { io, vocab } => {
            let vocab = load_vocab(cli, vocab)?;
            let seq = read_sequence(io.input.as_deref(), &vocab)?;
            let bytes = decode(&seq, &vocab)?;
            write_output(io.out.as_deref(), &bytes)
        }
        Command::Explain { io, vocab } => {
            let vocab = load_vocab(cli, vocab)?;
            let seq = read_sequence(io.input.as_deref(), &vocab)?;
            write_output(io.out.as_deref(), explain(&seq, &vocab)?.as_bytes())
        }
        Command::CheckPrefix { io, vocab } => {
            let vocab = load_vocab(cli, vocab)?;
            let rec = read_sequence_record(io.input.as_deref())?;
            let state = is_valid_prefix(&rec.ids, &vocab);
            let (status, position, reason) = match &state.status {
                PrefixStatus::Open => ("open", None, None),
                PrefixStatus::Complete => ("complete", None, None),
                PrefixStatus::Invalid { position, reason } => ("invalid", Some(*position), Some(reason.clone())),
            };
            let out = serde_json::json!({
                "status": status,
                "position": position,
                "reason": reason,
                "consumed": state.position,
                "expecting": state.expecting,
            });
            write_json(io.out.as_deref(), &out)
        }
        Command::FilterCorpus { corpus, out, report } => {
            let language = Language::from_name(cli.language.as_deref().unwrap_or(DEFAULT_LANGUAGE))?;
            let records = load_records(corpus)?;
            let (kept, filter_report) = filter_corpus(records, &language);
            write_records(out, &kept)?;
            write_json(report.as_deref(), &filter_report)
        }
        Command::ExportDataset {
            corpus,
            vocab,
            mode,
            out_dir,
            shard_size,
        } => {
            if *shard_size == 0 {
                return Err(Failure::Usage("--shard-size must be at least 1".into()));
            }
            let vocab = load_vocab(cli, vocab)?;
            let records = load_records(corpus)?;
            let manifest = export_dataset(&records, &vocab, *mode, out_dir, *shard_size)?;
            write_json(None, &manifest)
        }
        Command::Stats { corpus, vocab, out } => {
            let vocab = load_vocab(cli, vocab)?;
            let records = load_records(corpus)?;
            write_json(out.as_deref(), &corpus_stats(&records, &vocab)?)
        }
        Command::AnalyzePairs {
            pairs,
            vocab,
            base,
            threshold,
            cut,
            chisq,
            out,
        } => {
            let vocab = load_vocab(cli, vocab)?;
            let base = match base {
                Some(p) => BaseVocab::load(p)?,
                None => vocab.base().clone(),
            };
            let pairs = read_pairs(pairs)?;
            let report = pair_report(&pairs, &vocab, &base, *threshold);
            for f in &report.failures {
                eprintln!("pair {} (`{}`) skipped: {}", f.index, f.problem_id, f.message);
            }
            let chi = if *chisq {
                let contingency = build_contingency(&pairs, &vocab, &base, cut.0)?;
                let test = chi_square(&contingency.table)?;
                Some(ChiSquareOutput { contingency, test })
            } else {
                None
            };
            write_json(out.as_deref(), &AnalyzeOutput { report, chi_square: chi })
        }
    }
}

#[derive(Serialize)]
struct ChiSquareOutput {
    #[serde(flatten)]
    contingency: Contingency,
    #[serde(flatten)]
    test: ChiSquare,
}

#[derive(Serialize)]
struct AnalyzeOutput {
    #[serde(flatten)]
    report: EdReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_square: Option<ChiSquareOutput>,
}

fn load_vocab(cli: &Cli, path: &Path) -> CliResult<MergedVocab> {
    let vocab = MergedVocab::load(path)?;
    if let Some(lang) = &cli.language {
        if lang != vocab.language() {
            return Err(Failure::Usage(format!(
                "--language {lang} does not match the vocabulary's language {}",
                vocab.language()
            )));
        }
    }
    Ok(vocab)
}

fn read_input(path: Option<&Path>) -> CliResult<Vec<u8>> {
    match path {
        Some(p) => std::fs::read(p).map_err(|e| Error::io(p, e).into()),
        None => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Error::io("<stdin>", e))?;
            Ok(buf)
        }
    }
}

fn read_sequence_record(path: Option<&Path>) -> CliResult<SequenceRecord> {
    let bytes = read_input(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::format("sequence input is not UTF-8"))?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::format("no sequence object in input"))?;
    Ok(serde_json::from_str(line).map_err(|e| Error::format(e.to_string()))?)
}

fn read_sequence(path: Option<&Path>, vocab: &MergedVocab) -> CliResult<TokenSequence> {
    let rec = read_sequence_record(path)?;
    Ok(TokenSequence::from_ids(rec.ids, rec.mode, vocab)?)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e).into())
        }
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
    bytes.push(b'\n');
    write_output(path, &bytes)
}

fn write_json_line<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult {
    let mut bytes = serde_json::to_vec(value).expect("output serializes");
    bytes.push(b'\n');
    write_output(path, &bytes)
}
