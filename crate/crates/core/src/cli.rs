//! The `mbsl` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bracketer::bracket_all;
use crate::corpus::{
    parse_line, serialize_sentence, Corpus, CorpusError, RetagRules, SymbolTable, TaggedSentence,
};
use crate::eval::{
    breakeven, cross_validate, evaluate, learning_curve, sweep, threshold_range, write_curve_csv,
    write_sweep_csv, EvalError, FoldSplit, Grid,
};
use crate::memory::{MemoryError, MemoryTrie};
use crate::scoring::{
    evaluate_candidate, ScoreConfig, ScoringError, ScoringMode, SituatedCandidate,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MemoryError> for CliError {
    fn from(e: MemoryError) -> Self {
        match e {
            MemoryError::Io(source) => CliError::Io {
                path: "memory".into(),
                source,
            },
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::TooFewFolds(_) | EvalError::EmptyGrid | EvalError::BadFraction(_) => {
                CliError::Usage(e.to_string())
            }
            EvalError::Scoring(e) => e.into(),
            EvalError::Memory(e) => e.into(),
            EvalError::Io(source) => CliError::Io {
                path: "output".into(),
                source,
            },
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mbsl",
    version,
    about = "Memory-based shallow parsing of POS-tagged text"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a memory snapshot from a bracketed training corpus.
    Train(TrainArgs),
    /// Bracket tag sequences with a memory snapshot.
    Bracket(BracketArgs),
    /// Score predicted bracketings against gold.
    Eval(EvalArgs),
    /// Evaluate a grid of context sizes and tile thresholds.
    Sweep(SweepArgs),
    /// Choose context size and tile threshold by k-fold cross-validation.
    Cv(CvArgs),
    /// Evaluate on growing prefixes of the training corpus.
    Curve(CurveArgs),
    /// Write a synthetic bracketed corpus.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lexicographic,
    Linear,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Tiles match when pos/total is strictly above this.
    #[arg(long = "tile-threshold", default_value_t = 0.6)]
    pub tile_threshold: f64,
    /// Candidates are kept when their score is strictly above this.
    #[arg(long = "candidate-threshold", default_value_t = 0.0)]
    pub candidate_threshold: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Lexicographic)]
    pub scoring: ModeArg,
    /// Linear weights `alpha,beta,gamma,delta`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub weights: Option<Vec<f64>>,
    /// Longest candidate considered.
    #[arg(long = "max-length")]
    pub max_length: Option<usize>,
}

impl ScoreArgs {
    fn config(&self, context: usize) -> Result<ScoreConfig, CliError> {
        let mode = match (self.scoring, &self.weights) {
            (ModeArg::Lexicographic, None) => ScoringMode::Lexicographic,
            (ModeArg::Lexicographic, Some(_)) => {
                return Err(CliError::Usage(
                    "--weights requires --scoring linear".into(),
                ))
            }
            (ModeArg::Linear, Some(w)) => ScoringMode::Linear {
                alpha: w[0],
                beta: w[1],
                gamma: w[2],
                delta: w[3],
            },
            (ModeArg::Linear, None) => {
                return Err(CliError::Usage(
                    "--scoring linear requires --weights".into(),
                ))
            }
        };
        if self.max_length == Some(0) {
            return Err(CliError::Usage("--max-length must be at least 1".into()));
        }
        let cfg = ScoreConfig {
            context,
            tile_threshold: self.tile_threshold,
            candidate_threshold: self.candidate_threshold,
            mode,
            max_candidate_len: self.max_length,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Bracketed training corpus, `-` for stdin.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Snapshot to write, `-` for stdout.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub context: usize,
    /// `word<TAB>tag` retag rules applied to `word/TAG` tokens.
    #[arg(long)]
    pub retag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BracketArgs {
    /// Memory snapshot written by `train`.
    #[arg(long, short)]
    pub memory: PathBuf,
    /// One tag sequence per line; brackets, if present, are ignored.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Context size; defaults to the one the memory was built with.
    #[arg(long)]
    pub context: Option<usize>,
    #[command(flatten)]
    pub score: ScoreArgs,
    /// Worker threads; output order is input order.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write per-candidate tiles and cover statistics here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub retag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, short)]
    pub gold: PathBuf,
    #[arg(long, short)]
    pub predicted: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Context sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    pub contexts: Vec<usize>,
    /// Tile thresholds as `lo:hi:step` (inclusive) or a comma list.
    #[arg(long, default_value = "0.1:0.95:0.05")]
    pub thresholds: String,
}

impl GridArgs {
    fn grid(&self) -> Result<Grid, CliError> {
        let bad = || CliError::Usage(format!("invalid threshold grid `{}`", self.thresholds));
        let thresholds = if self.thresholds.contains(':') {
            let parts: Vec<f64> = self
                .thresholds
                .split(':')
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            let [lo, hi, step] = parts[..] else {
                return Err(bad());
            };
            threshold_range(lo, hi, step)
        } else {
            self.thresholds
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?
        };
        if thresholds.is_empty() || self.contexts.is_empty() {
            return Err(bad());
        }
        if self.contexts.contains(&0) {
            return Err(CliError::Usage("context sizes must be at least 1".into()));
        }
        Ok(Grid {
            contexts: self.contexts.clone(),
            thresholds,
        })
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// CSV destination, `-` for stdout.
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[arg(long)]
    pub retag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Shuffle sentences with this seed before splitting into folds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-fold CSV destination.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub retag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    )]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub context: usize,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[arg(long)]
    pub retag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub sentences: usize,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
}

fn is_std(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn read_text(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    let result = if is_std(path) {
        io::stdin().read_to_string(&mut text)
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut text))
    };
    result.map_err(|e| CliError::io(path, e))?;
    Ok(text)
}

fn open_output(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if is_std(path) {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn load_rules(path: Option<&Path>) -> Result<RetagRules, CliError> {
    match path {
        None => Ok(RetagRules::new()),
        Some(p) => Ok(RetagRules::parse(&read_text(p)?)?),
    }
}

fn load_corpus(path: &Path, table: SymbolTable, rules: &RetagRules) -> Result<Corpus, CliError> {
    let text = read_text(path)?;
    Corpus::parse_with(&text, table, rules)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_nonempty(path: &Path, table: SymbolTable, rules: &RetagRules) -> Result<Corpus, CliError> {
    let corpus = load_corpus(path, table, rules)?;
    if corpus.is_empty() {
        return Err(CliError::Data(format!("{}: empty corpus", path.display())));
    }
    Ok(corpus)
}

fn load_memory(path: &Path) -> Result<MemoryTrie, CliError> {
    let reader: Box<dyn Read> = if is_std(path) {
        Box::new(io::stdin())
    } else {
        Box::new(File::open(path).map_err(|e| CliError::io(path, e))?)
    };
    MemoryTrie::read_snapshot(BufReader::new(reader)).map_err(|e| match e {
        MemoryError::Io(source) => CliError::io(path, source),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn write_out(out: &mut dyn Write, path: &Path, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

fn flush(out: &mut dyn Write, path: &Path) -> Result<(), CliError> {
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Parses argv and runs the command. Help and version requests print and
/// return `Ok`.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Bracket(a) => cmd_bracket(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Curve(a) => cmd_curve(&a),
        Command::Generate(a) => cmd_generate(&a),
    }
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    if a.context == 0 {
        return Err(CliError::Usage("--context must be at least 1".into()));
    }
    let rules = load_rules(a.retag.as_deref())?;
    let corpus = load_nonempty(&a.input, SymbolTable::new(), &rules)?;
    let started = Instant::now();
    let trie = MemoryTrie::build(&corpus, a.context)?;
    let elapsed = started.elapsed();
    let mut out = open_output(&a.output)?;
    trie.write_snapshot(&mut out).map_err(|e| match e {
        MemoryError::Io(source) => CliError::io(&a.output, source),
        other => CliError::Data(other.to_string()),
    })?;
    flush(&mut out, &a.output)?;
    let stats = trie.stats();
    eprintln!(
        "sentences={} instances={} tiles={} tile_occurrences={} nodes={} context={} build_time={:.3}s",
        stats.sentences,
        stats.instances,
        trie.tile_count(),
        stats.tile_occurrences,
        trie.node_count(),
        trie.context(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

pub fn cmd_bracket(a: &BracketArgs) -> Result<(), CliError> {
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let trie = load_memory(&a.memory)?;
    let context = a.context.unwrap_or(trie.context());
    if context > trie.context() {
        return Err(CliError::Usage(format!(
            "--context {context} exceeds the memory's context {}",
            trie.context()
        )));
    }
    let cfg = a.score.config(context)?;
    let rules = load_rules(a.retag.as_deref())?;
    let text = read_text(&a.input)?;

    let mut table = trie.table().clone();
    let known = table.len();
    // `None` marks a blank input line, echoed as a blank output line.
    let mut lines: Vec<Option<TaggedSentence>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let parsed = parse_line(line, i + 1, &mut table, &rules)
            .map_err(|e| CliError::Data(format!("{}: {e}", a.input.display())))?;
        lines.push(parsed.map(|s| s.sentence().clone()));
    }
    if table.len() > known {
        let unknown: BTreeSet<&str> = table.tags()[known..].iter().map(String::as_str).collect();
        eprintln!(
            "warning: {} tag(s) unseen in training: {}",
            unknown.len(),
            unknown.into_iter().collect::<Vec<_>>().join(" ")
        );
    }

    let sentences: Vec<TaggedSentence> = lines.iter().flatten().cloned().collect();
    let bracketed = bracket_all(&sentences, &trie, &cfg, a.jobs);
    let mut out = open_output(&a.output)?;
    let mut results = bracketed.iter();
    for line in &lines {
        let text = match line {
            Some(_) => serialize_sentence(results.next().expect("one result per sentence"), &table),
            None => String::new(),
        };
        write_out(&mut out, &a.output, &text)?;
        write_out(&mut out, &a.output, "\n")?;
    }
    flush(&mut out, &a.output)?;

    if let Some(dump_path) = &a.dump {
        let mut dump = open_output(dump_path)?;
        for (i, s) in sentences.iter().enumerate() {
            write_out(
                &mut dump,
                dump_path,
                &diagnostic_dump(i, s, &trie, &cfg, &table),
            )?;
        }
        flush(&mut dump, dump_path)?;
    }
    Ok(())
}

/// Line-oriented listing of every candidate's matching tiles and cover
/// statistics.
pub fn diagnostic_dump(
    index: usize,
    sentence: &TaggedSentence,
    trie: &MemoryTrie,
    cfg: &ScoreConfig,
    table: &SymbolTable,
) -> String {
    let mut out = format!("sentence {index}: {}\n", table.render(sentence.tags()));
    let spans = crate::bracketer::candidate_spans(sentence.len(), cfg.max_candidate_len);
    for span in spans {
        let Ok(sc) = SituatedCandidate::new(sentence.tags(), span, cfg.context) else {
            continue;
        };
        let ev = evaluate_candidate(sc, trie, cfg);
        out.push_str(&format!(
            "candidate {} {}: {}\n",
            span.start,
            span.end,
            table.render(ev.candidate.symbols())
        ));
        for t in &ev.tiles {
            out.push_str(&format!(
                "  tile {} {} pos={} total={} f_t={:.4}: {}\n",
                t.start,
                t.end,
                t.counts.pos,
                t.counts.total,
                t.score(),
                table.render(&ev.candidate.symbols()[t.start..=t.end])
            ));
        }
        match ev.stats {
            Some(s) => out.push_str(&format!(
                "  covers num={} minsize={} maxcontext={} maxoverlap={} score={:?}\n",
                s.num, s.minsize, s.maxcontext, s.maxoverlap, ev.score
            )),
            None => out.push_str("  covers none\n"),
        }
    }
    out
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let gold = load_corpus(&a.gold, SymbolTable::new(), &RetagRules::new())?;
    let predicted = load_corpus(&a.predicted, gold.table().clone(), &RetagRules::new())?;
    let report = evaluate(gold.sentences(), predicted.sentences(), a.beta)?;
    print!("{}", report.summary());
    Ok(())
}

fn train_test(
    train: &Path,
    test: &Path,
    retag: Option<&Path>,
) -> Result<(Corpus, Corpus), CliError> {
    let rules = load_rules(retag)?;
    let train = load_nonempty(train, SymbolTable::new(), &rules)?;
    let test = load_nonempty(test, train.table().clone(), &rules)?;
    Ok((train, test))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let grid = a.grid.grid()?;
    let base = a.score.config(grid.contexts[0])?;
    let (train, test) = train_test(&a.train, &a.test, a.retag.as_deref())?;
    let points = sweep(&train, &test, &grid, &base, a.beta)?;
    let mut out = open_output(&a.output)?;
    write_sweep_csv(&points, &mut out)?;
    flush(&mut out, &a.output)?;
    let best = points
        .iter()
        .max_by(|x, y| x.report.f_beta.total_cmp(&y.report.f_beta))
        .expect("non-empty grid");
    eprintln!(
        "best: cn={} theta_t={:.4} F={:.4}",
        best.context, best.tile_threshold, best.report.f_beta
    );
    if let Some(b) = breakeven(&points) {
        eprintln!(
            "breakeven: cn={} theta_t={:.4} recall={:.4} precision={:.4}",
            b.context, b.tile_threshold, b.report.recall, b.report.precision
        );
    }
    Ok(())
}

pub fn cmd_cv(a: &CvArgs) -> Result<(), CliError> {
    let grid = a.grid.grid()?;
    let base = a.score.config(grid.contexts[0])?;
    let rules = load_rules(a.retag.as_deref())?;
    let corpus = load_nonempty(&a.input, SymbolTable::new(), &rules)?;
    let split = a.seed.map_or(FoldSplit::Contiguous, FoldSplit::Shuffled);
    let cv = cross_validate(&corpus, a.folds, &grid, &base, a.beta, split)?;
    if let Some(path) = &a.output {
        let mut out = open_output(path)?;
        cv.write_csv(&mut out)?;
        flush(&mut out, path)?;
    }
    println!(
        "best: cn={} theta_t={:.4} mean_f_beta={:.4}",
        cv.best_context, cv.best_threshold, cv.best_mean_f_beta
    );
    Ok(())
}

pub fn cmd_curve(a: &CurveArgs) -> Result<(), CliError> {
    let cfg = a.score.config(a.context)?;
    let (train, test) = train_test(&a.train, &a.test, a.retag.as_deref())?;
    let points = learning_curve(&train, &test, &a.fractions, &cfg, a.beta)?;
    let mut out = open_output(&a.output)?;
    write_curve_csv(&points, &mut out)?;
    flush(&mut out, &a.output)?;
    Ok(())
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let corpus = crate::eval::generate_synthetic(a.seed, a.sentences);
    let mut out = open_output(&a.output)?;
    write_out(&mut out, &a.output, &corpus.to_text())?;
    flush(&mut out, &a.output)
}
