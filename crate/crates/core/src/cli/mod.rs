//! The `groundeval` command line.
//!
//! Exit codes: 0 on success, 1 when inputs fail validation or cannot be
//! read, 2 on usage errors.

pub mod tables;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::annotations::ParseIndex;
use crate::corpus::{load_corpus, load_responses, Corpus, CorpusPaths, ResponseSet};
use crate::diagnostics::Diagnostics;
use crate::humaneval::{
    aggregate_judgments, aggregate_preferences, aggregate_trust, read_records, JudgmentRecord,
    PreferenceConfig, PreferenceRecord, TrustConfig, TrustRecord, TrustTest,
};
use crate::metrics::{score_model, MetricConfig, QuestionSubtraction};
use crate::phenomena::{
    profile_model, Aggregation, PhenomenaConfig, DEFAULT_ALIGNMENT_THRESHOLD,
};
use crate::report::{merge_tables, render_tables, OutputFormat, ReportTable};
use crate::textnorm::{NormalizeOptions, OverlapMode, TextConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "groundeval", version, about = "Evaluate knowledge-grounded dialogue responses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Profile lexical alignment, syntactic form and pronouns of responses.
    Phenomena(PhenomenaArgs),
    /// Compute automatic metrics (F1, EM, BLEU, ROUGE-L, K-F1, K-F1++).
    Score(ScoreArgs),
    /// Aggregate plausibility, groundedness and faithfulness judgments.
    Judge(JudgeArgs),
    /// Aggregate pairwise preferences with a chi-square test.
    Prefs(PrefsArgs),
    /// Aggregate trust choices per linguistic phenomenon.
    Trust(TrustArgs),
    /// Merge saved JSON summaries and render them again.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Summary table format.
    #[arg(long, default_value = "markdown", value_parser = parse_format)]
    format: OutputFormat,
    /// Directory for per-item JSONL and summary files; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TextArgs {
    /// Keep the articles a/an/the when normalizing.
    #[arg(long)]
    no_article_strip: bool,
    /// Count overlap over token types instead of multisets.
    #[arg(long)]
    set_overlap: bool,
}

impl TextArgs {
    fn config(&self) -> TextConfig {
        TextConfig {
            normalize: NormalizeOptions {
                strip_articles: !self.no_article_strip,
            },
            overlap: if self.set_overlap {
                OverlapMode::Set
            } else {
                OverlapMode::Multiset
            },
        }
    }
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Dialogues JSONL.
    #[arg(long)]
    corpus: PathBuf,
    /// Knowledge snippets JSONL.
    #[arg(long)]
    knowledge: Option<PathBuf>,
    /// Reference responses JSONL.
    #[arg(long)]
    references: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResponseArgs {
    /// Model responses JSONL; repeat for several models.
    #[arg(long, required = true)]
    responses: Vec<PathBuf>,
    /// Model name for the responses file at the same position. Defaults to
    /// `<model>` from `responses.<model>.jsonl`, or the file stem.
    #[arg(long)]
    model: Vec<String>,
}

#[derive(Debug, Args)]
struct PhenomenaArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    responses: ResponseArgs,
    /// Annotation directory for the responses file at the same position.
    #[arg(long)]
    parses: Vec<PathBuf>,
    /// Alignment recall separating high from low alignment.
    #[arg(long, default_value_t = DEFAULT_ALIGNMENT_THRESHOLD, value_parser = parse_threshold)]
    align_threshold: f64,
    /// Treat a score equal to the threshold as low alignment.
    #[arg(long)]
    exclusive_threshold: bool,
    /// Pool overlap counts across items instead of averaging per item.
    #[arg(long)]
    micro_align: bool,
    #[command(flatten)]
    text: TextArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    responses: ResponseArgs,
    /// Remove question tokens once per occurrence instead of by type.
    #[arg(long)]
    occurrence_subtract: bool,
    #[command(flatten)]
    text: TextArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct JudgeArgs {
    /// Judgment records JSONL.
    #[arg(long)]
    judgments: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PrefsArgs {
    /// Preference records JSONL.
    #[arg(long)]
    preferences: PathBuf,
    /// Dialogues JSONL used to reject unknown items.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Maximum annotators per item.
    #[arg(long)]
    annotators_per_item: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TrustArgs {
    /// Trust records JSONL.
    #[arg(long)]
    trust: PathBuf,
    /// Expected pairs per phenomenon.
    #[arg(long, default_value_t = 15)]
    expected_pairs: usize,
    /// Expected annotations per pair.
    #[arg(long, default_value_t = 20)]
    annotations_per_pair: usize,
    /// Test all three choices against an even split.
    #[arg(long)]
    all_choices_test: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// JSON summaries written by other subcommands.
    #[arg(required = true)]
    summaries: Vec<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Failure of a subcommand after argument parsing.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Runs the CLI with process stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with explicit output streams.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{rendered}");
                EXIT_OK
            };
        }
    };
    let mut ctx = Ctx { stdout, stderr };
    let result = match &cli.command {
        Command::Phenomena(a) => ctx.phenomena(a),
        Command::Score(a) => ctx.score(a),
        Command::Judge(a) => ctx.judge(a),
        Command::Prefs(a) => ctx.prefs(a),
        Command::Trust(a) => ctx.trust(a),
        Command::Report(a) => ctx.report(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(msg)) => {
            let _ = writeln!(ctx.stderr, "{msg}");
            EXIT_INVALID
        }
    }
}

struct Ctx<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

/// Model name implied by a responses file name.
pub fn model_name_from_path(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let trimmed = name.strip_suffix(".jsonl").unwrap_or(&name);
    match trimmed.strip_prefix("responses.") {
        Some(m) if !m.is_empty() => m.to_owned(),
        _ => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    }
}

/// File-name safe form of a model name.
fn file_component(model: &str) -> String {
    model
        .chars()
        .map(|c| if c == '/' || c == '\\' || c.is_whitespace() { '_' } else { c })
        .collect()
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r).expect("rows serialize"));
        s.push('\n');
    }
    s
}

impl Ctx<'_> {
    fn report_diagnostics(&mut self, diags: &Diagnostics) {
        for d in diags.iter() {
            let _ = writeln!(self.stderr, "{d}");
        }
    }

    fn load_corpus(&mut self, args: &CorpusArgs) -> Result<Corpus, Failure> {
        let paths = CorpusPaths {
            dialogues: args.corpus.clone(),
            knowledge: args.knowledge.clone(),
            references: args.references.clone(),
        };
        let loaded = load_corpus(&paths)?;
        self.report_diagnostics(&loaded.diagnostics);
        Ok(loaded.value)
    }

    fn load_response_sets(&mut self, args: &ResponseArgs, corpus: &Corpus) -> Result<Vec<ResponseSet>, Failure> {
        if !args.model.is_empty() && args.model.len() != args.responses.len() {
            return Err(Failure(format!(
                "{} --model values for {} --responses files",
                args.model.len(),
                args.responses.len()
            )));
        }
        let mut names = BTreeSet::new();
        let mut sets = Vec::new();
        for (i, path) in args.responses.iter().enumerate() {
            let name = args
                .model
                .get(i)
                .cloned()
                .unwrap_or_else(|| model_name_from_path(path));
            if !names.insert(name.clone()) {
                return Err(Failure(format!("model `{name}` given twice")));
            }
            let loaded = load_responses(path, &name, corpus)?;
            self.report_diagnostics(&loaded.diagnostics);
            sets.push(loaded.value);
        }
        Ok(sets)
    }

    /// Writes per-item files and the summary, or prints the summary.
    fn emit(
        &mut self,
        command: &str,
        output: &OutputArgs,
        per_item: &[(String, String)],
        tables: &[ReportTable],
    ) -> CmdResult {
        let rendered = render_tables(tables, output.format)?;
        match &output.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Failure(format!("cannot create {}: {e}", dir.display())))?;
                let write = |name: &str, body: &str| {
                    let path = dir.join(name);
                    fs::write(&path, body).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
                };
                for (name, body) in per_item {
                    write(name, body)?;
                }
                write(&format!("{command}.summary.{}", output.format.extension()), &rendered)?;
                if output.format != OutputFormat::Json {
                    write(
                        &format!("{command}.summary.json"),
                        &render_tables(tables, OutputFormat::Json)?,
                    )?;
                }
            }
            None => {
                self.stdout.write_all(rendered.as_bytes())?;
            }
        }
        Ok(())
    }

    fn phenomena(&mut self, a: &PhenomenaArgs) -> CmdResult {
        let corpus = self.load_corpus(&a.corpus)?;
        let sets = self.load_response_sets(&a.responses, &corpus)?;
        if !a.parses.is_empty() && a.parses.len() != sets.len() {
            return Err(Failure(format!(
                "{} --parses directories for {} --responses files",
                a.parses.len(),
                sets.len()
            )));
        }
        let config = PhenomenaConfig {
            text: a.text.config(),
            threshold: a.align_threshold,
            inclusive_threshold: !a.exclusive_threshold,
            aggregation: if a.micro_align {
                Aggregation::Micro
            } else {
                Aggregation::Macro
            },
        };
        let mut summaries = Vec::new();
        let mut per_item = Vec::new();
        for (i, set) in sets.iter().enumerate() {
            let index = match a.parses.get(i) {
                Some(dir) => {
                    let (idx, diags) = ParseIndex::load_dir(dir)?;
                    self.report_diagnostics(&diags);
                    Some(idx)
                }
                None => None,
            };
            let report = profile_model(set, &corpus, index.as_ref(), &config)?;
            self.report_diagnostics(&report.diagnostics);
            per_item.push((
                format!("phenomena.{}.jsonl", file_component(&set.model_name)),
                jsonl(&report.profiles),
            ));
            summaries.push(report.summary);
        }
        self.emit("phenomena", &a.output, &per_item, &[tables::phenomena_table(&summaries)])
    }

    fn score(&mut self, a: &ScoreArgs) -> CmdResult {
        let corpus = self.load_corpus(&a.corpus)?;
        let sets = self.load_response_sets(&a.responses, &corpus)?;
        let config = MetricConfig {
            text: a.text.config(),
            subtraction: if a.occurrence_subtract {
                QuestionSubtraction::Occurrence
            } else {
                QuestionSubtraction::Type
            },
        };
        let mut summaries = Vec::new();
        let mut per_item = Vec::new();
        for set in &sets {
            let scores = score_model(set, &corpus, &config)?;
            self.report_diagnostics(&scores.diagnostics);
            per_item.push((
                format!("scores.{}.jsonl", file_component(&set.model_name)),
                jsonl(&scores.rows),
            ));
            summaries.push(scores.summary);
        }
        self.emit("score", &a.output, &per_item, &[tables::scores_table(&summaries)])
    }

    fn judge(&mut self, a: &JudgeArgs) -> CmdResult {
        let records: Vec<JudgmentRecord> = read_records(open(&a.judgments)?)?;
        let (summaries, diags) = aggregate_judgments(&records)?;
        self.report_diagnostics(&diags);
        self.emit("judge", &a.output, &[], &[tables::judgments_table(&summaries)])
    }

    fn prefs(&mut self, a: &PrefsArgs) -> CmdResult {
        let known_items = match &a.corpus {
            Some(path) => {
                let corpus = self.load_corpus(&CorpusArgs {
                    corpus: path.clone(),
                    knowledge: None,
                    references: None,
                })?;
                Some(corpus.items().collect())
            }
            None => None,
        };
        let records: Vec<PreferenceRecord> = read_records(open(&a.preferences)?)?;
        let config = PreferenceConfig {
            known_items,
            annotators_per_item: a.annotators_per_item,
        };
        let blocks = aggregate_preferences(&records, &config)?;
        self.emit("prefs", &a.output, &[], &tables::preferences_tables(&blocks))
    }

    fn trust(&mut self, a: &TrustArgs) -> CmdResult {
        let records: Vec<TrustRecord> = read_records(open(&a.trust)?)?;
        let config = TrustConfig {
            expected_pairs: a.expected_pairs,
            annotations_per_pair: a.annotations_per_pair,
            declared_pairs: None,
            test: if a.all_choices_test {
                TrustTest::AllChoices
            } else {
                TrustTest::Substantive
            },
        };
        let (blocks, diags) = aggregate_trust(&records, &config)?;
        self.report_diagnostics(&diags);
        self.emit("trust", &a.output, &[], &tables::trust_tables(&blocks))
    }

    fn report(&mut self, a: &ReportArgs) -> CmdResult {
        let mut all = Vec::new();
        for path in &a.summaries {
            let text = fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
            let tables = ReportTable::from_json_str(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            all.extend(tables);
        }
        self.emit("report", &a.output, &[], &merge_tables(all))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}
