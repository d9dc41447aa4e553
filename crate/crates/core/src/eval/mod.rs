//! Complete-pattern evaluation and experiment harnesses.
//!
//! A predicted instance counts only when both endpoints equal a gold
//! instance; a partial overlap is a recall error and a precision error.

mod synthetic;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::bracketer::bracket_all;
use crate::corpus::{BracketedSentence, Corpus, TaggedSentence};
use crate::memory::{MemoryError, MemoryTrie};
use crate::scoring::{ScoreConfig, ScoringError};

pub use synthetic::{generate_synthetic, SYNTHETIC_TAGS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold has {gold} sentences, predictions have {predicted}")]
    SentenceCount { gold: usize, predicted: usize },
    #[error("sentence {index}: predicted tags differ from gold")]
    TagMismatch { index: usize },
    #[error("test corpus symbol table does not extend the training table")]
    TableMismatch,
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("corpus of {sentences} sentences is smaller than {folds} folds")]
    CorpusTooSmall { sentences: usize, folds: usize },
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `(beta^2 + 1) P R / (beta^2 P + R)`, or 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    if precision == recall {
        return precision;
    }
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (b2 + 1.0) * precision * recall / denom
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LengthCounts {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub true_positives: usize,
    pub gold_count: usize,
    pub predicted_count: usize,
    pub recall: f64,
    pub precision: f64,
    pub f_beta: f64,
    pub beta: f64,
    /// Gold, predicted and correct instance counts by instance length.
    pub by_length: BTreeMap<usize, LengthCounts>,
}

impl EvalReport {
    fn from_counts(
        tp: usize,
        gold: usize,
        predicted: usize,
        beta: f64,
        by_length: BTreeMap<usize, LengthCounts>,
    ) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let recall = ratio(tp, gold);
        let precision = ratio(tp, predicted);
        EvalReport {
            true_positives: tp,
            gold_count: gold,
            predicted_count: predicted,
            recall,
            precision,
            f_beta: f_beta(precision, recall, beta),
            beta,
            by_length,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "recall={:.3} precision={:.3} F{}={:.3} (tp={} gold={} predicted={})\n",
            self.recall,
            self.precision,
            self.beta,
            self.f_beta,
            self.true_positives,
            self.gold_count,
            self.predicted_count
        );
        s.push_str("length\tgold\tpredicted\tcorrect\n");
        for (len, c) in &self.by_length {
            s.push_str(&format!(
                "{len}\t{}\t{}\t{}\n",
                c.gold, c.predicted, c.correct
            ));
        }
        s
    }
}

/// Exact-match evaluation of predicted bracketings against gold.
pub fn evaluate(
    gold: &[BracketedSentence],
    predicted: &[BracketedSentence],
    beta: f64,
) -> Result<EvalReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    let mut tp = 0;
    let mut n_gold = 0;
    let mut n_pred = 0;
    let mut by_length: BTreeMap<usize, LengthCounts> = BTreeMap::new();
    for (index, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.tags() != p.tags() {
            return Err(EvalError::TagMismatch { index });
        }
        n_gold += g.instances().len();
        n_pred += p.instances().len();
        for span in g.instances() {
            by_length.entry(span.len()).or_default().gold += 1;
        }
        for span in p.instances() {
            let entry = by_length.entry(span.len()).or_default();
            entry.predicted += 1;
            // Both lists are sorted and disjoint.
            if g.instances().binary_search(span).is_ok() {
                entry.correct += 1;
                tp += 1;
            }
        }
    }
    Ok(EvalReport::from_counts(tp, n_gold, n_pred, beta, by_length))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub context: usize,
    pub tile_threshold: f64,
    pub report: EvalReport,
}

/// Thresholds from `lo` to `hi` inclusive in steps of `step`.
pub fn threshold_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || hi < lo {
        return Vec::new();
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

/// Default grid: thresholds 0.1 to 0.95 in steps of 0.05, contexts 1 to 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub contexts: Vec<usize>,
    pub thresholds: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            contexts: vec![1, 2, 3],
            thresholds: threshold_range(0.1, 0.95, 0.05),
        }
    }
}

impl Grid {
    pub fn single(context: usize, threshold: f64) -> Self {
        Grid {
            contexts: vec![context],
            thresholds: vec![threshold],
        }
    }

    pub fn len(&self) -> usize {
        self.contexts.len() * self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_tables(train: &Corpus, test: &Corpus) -> Result<(), EvalError> {
    if test.table().tags().starts_with(train.table().tags()) {
        Ok(())
    } else {
        Err(EvalError::TableMismatch)
    }
}

fn test_sentences(test: &Corpus) -> Vec<TaggedSentence> {
    test.sentences()
        .iter()
        .map(|s| s.sentence().clone())
        .collect()
}

/// Brackets `test` with a memory built from `train` and evaluates it.
pub fn train_and_evaluate(
    train: &Corpus,
    test: &Corpus,
    cfg: &ScoreConfig,
    beta: f64,
) -> Result<EvalReport, EvalError> {
    check_tables(train, test)?;
    cfg.validate()?;
    let trie = MemoryTrie::build(train, cfg.context)?;
    let predicted = bracket_all(&test_sentences(test), &trie, cfg, 0);
    evaluate(test.sentences(), &predicted, beta)
}

/// One point per (context, threshold), ordered by context then threshold.
/// The memory is built once per context size.
pub fn sweep(
    train: &Corpus,
    test: &Corpus,
    grid: &Grid,
    base: &ScoreConfig,
    beta: f64,
) -> Result<Vec<SweepPoint>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    check_tables(train, test)?;
    let sentences = test_sentences(test);
    let mut points = Vec::with_capacity(grid.len());
    for &context in &grid.contexts {
        let trie = MemoryTrie::build(train, context)?;
        let configs = grid
            .thresholds
            .iter()
            .map(|&tile_threshold| {
                let cfg = ScoreConfig {
                    context,
                    tile_threshold,
                    ..*base
                };
                cfg.validate().map(|_| cfg)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let reports = configs
            .par_iter()
            .map(|cfg| {
                let predicted = bracket_all(&sentences, &trie, cfg, 0);
                evaluate(test.sentences(), &predicted, beta).map(|report| SweepPoint {
                    context,
                    tile_threshold: cfg.tile_threshold,
                    report,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        points.extend(reports);
    }
    Ok(points)
}

/// Point where recall and precision are closest; earliest wins ties.
pub fn breakeven(points: &[SweepPoint]) -> Option<&SweepPoint> {
    points.iter().min_by(|a, b| {
        let gap = |p: &SweepPoint| (p.report.recall - p.report.precision).abs();
        gap(a).total_cmp(&gap(b))
    })
}

pub const CSV_HEADER: [&str; 8] = [
    "cn",
    "theta_t",
    "recall",
    "precision",
    "f_beta",
    "tp",
    "gold",
    "predicted",
];

fn csv_row(context: usize, threshold: f64, r: &EvalReport) -> [String; 8] {
    [
        context.to_string(),
        format!("{threshold:.4}"),
        format!("{:.6}", r.recall),
        format!("{:.6}", r.precision),
        format!("{:.6}", r.f_beta),
        r.true_positives.to_string(),
        r.gold_count.to_string(),
        r.predicted_count.to_string(),
    ]
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], w: W) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for p in points {
        out.write_record(csv_row(p.context, p.tile_threshold, &p.report))?;
    }
    out.flush()?;
    Ok(())
}

/// How sentences are assigned to folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FoldSplit {
    #[default]
    Contiguous,
    /// Shuffle sentence order with the given seed, then split contiguously.
    Shuffled(u64),
}

/// Sentence index ranges for each fold; the first `n % folds` folds get one
/// extra sentence.
pub fn fold_bounds(n: usize, folds: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / folds;
    let extra = n % folds;
    let mut start = 0;
    (0..folds)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvPoint {
    pub context: usize,
    pub tile_threshold: f64,
    pub mean_f_beta: f64,
    pub folds: Vec<EvalReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub best_context: usize,
    pub best_threshold: f64,
    pub best_mean_f_beta: f64,
    /// Grid order: context, then threshold.
    pub points: Vec<CvPoint>,
}

impl CrossValidation {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["fold"];
        header.extend(CSV_HEADER);
        out.write_record(&header)?;
        for p in &self.points {
            for (i, r) in p.folds.iter().enumerate() {
                let mut row = vec![(i + 1).to_string()];
                row.extend(csv_row(p.context, p.tile_threshold, r));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// k-fold cross-validation over `grid`. The best point maximizes mean F;
/// ties go to the smaller context, then the larger threshold.
pub fn cross_validate(
    corpus: &Corpus,
    folds: usize,
    grid: &Grid,
    base: &ScoreConfig,
    beta: f64,
    split: FoldSplit,
) -> Result<CrossValidation, EvalError> {
    if folds < 2 {
        return Err(EvalError::TooFewFolds(folds));
    }
    if corpus.len() < folds {
        return Err(EvalError::CorpusTooSmall {
            sentences: corpus.len(),
            folds,
        });
    }
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    if let FoldSplit::Shuffled(seed) = split {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    let mut per_fold: Vec<Vec<SweepPoint>> = Vec::with_capacity(folds);
    for range in fold_bounds(corpus.len(), folds) {
        let test = corpus.select(order[range.clone()].iter().copied());
        let train = corpus.select(
            order[..range.start]
                .iter()
                .chain(&order[range.end..])
                .copied(),
        );
        per_fold.push(sweep(&train, &test, grid, base, beta)?);
    }
    let points: Vec<CvPoint> = (0..grid.len())
        .map(|i| {
            let first = &per_fold[0][i];
            let reports: Vec<EvalReport> = per_fold.iter().map(|f| f[i].report.clone()).collect();
            let mean = reports.iter().map(|r| r.f_beta).sum::<f64>() / reports.len() as f64;
            CvPoint {
                context: first.context,
                tile_threshold: first.tile_threshold,
                mean_f_beta: mean,
                folds: reports,
            }
        })
        .collect();
    let best = points
        .iter()
        .max_by(|a, b| {
            a.mean_f_beta
                .total_cmp(&b.mean_f_beta)
                .then(b.context.cmp(&a.context))
                .then(a.tile_threshold.total_cmp(&b.tile_threshold))
        })
        .expect("non-empty grid");
    Ok(CrossValidation {
        best_context: best.context,
        best_threshold: best.tile_threshold,
        best_mean_f_beta: best.mean_f_beta,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub fraction: f64,
    pub sentences: usize,
    /// Target instances in the training prefix.
    pub examples: usize,
    /// Tags in the training prefix.
    pub words: usize,
    pub report: EvalReport,
}

/// Trains on sentence prefixes of `train` and evaluates each on `test`.
/// A fraction `f` uses the first `ceil(f * k)` sentences.
pub fn learning_curve(
    train: &Corpus,
    test: &Corpus,
    fractions: &[f64],
    cfg: &ScoreConfig,
    beta: f64,
) -> Result<Vec<CurvePoint>, EvalError> {
    if let Some(&f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(EvalError::BadFraction(f));
    }
    fractions
        .iter()
        .map(|&fraction| {
            let n = ((fraction * train.len() as f64).ceil() as usize).clamp(1, train.len());
            let prefix = train.slice(0..n);
            let report = train_and_evaluate(&prefix, test, cfg, beta)?;
            Ok(CurvePoint {
                fraction,
                sentences: n,
                examples: prefix.instance_count(),
                words: prefix.word_count(),
                report,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], w: W) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "fraction",
        "sentences",
        "examples",
        "words",
        "recall",
        "precision",
        "f_beta",
    ])?;
    for p in points {
        out.write_record([
            format!("{:.4}", p.fraction),
            p.sentences.to_string(),
            p.examples.to_string(),
            p.words.to_string(),
            format!("{:.6}", p.report.recall),
            format!("{:.6}", p.report.precision),
            format!("{:.6}", p.report.f_beta),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Span, SymbolTable};

    fn sentence(len: usize, spans: &[(usize, usize)]) -> BracketedSentence {
        let mut table = SymbolTable::new();
        let tag = table.intern("X");
        BracketedSentence::new(
            TaggedSentence::new(vec![tag; len]).unwrap(),
            spans.iter().map(|&(s, e)| Span::new(s, e)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn partial_match_is_an_error_both_ways() {
        let r = evaluate(&[sentence(6, &[(0, 5)])], &[sentence(6, &[(0, 4)])], 1.0).unwrap();
        assert_eq!(r.true_positives, 0);
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.f_beta, 0.0);
        assert_eq!(r.by_length[&5].gold, 1);
        assert_eq!(r.by_length[&4].predicted, 1);
    }

    #[test]
    fn identity_is_perfect() {
        let g = [sentence(6, &[(0, 2), (3, 5)]), sentence(3, &[(1, 2)])];
        let r = evaluate(&g, &g, 1.0).unwrap();
        assert_eq!((r.recall, r.precision, r.f_beta), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_counts_give_zero() {
        let r = evaluate(&[sentence(3, &[])], &[sentence(3, &[])], 1.0).unwrap();
        assert_eq!((r.recall, r.precision, r.f_beta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mismatches_rejected() {
        assert!(matches!(
            evaluate(&[sentence(3, &[])], &[], 1.0),
            Err(EvalError::SentenceCount { .. })
        ));
        assert!(matches!(
            evaluate(&[sentence(3, &[])], &[sentence(4, &[])], 1.0),
            Err(EvalError::TagMismatch { index: 0 })
        ));
    }

    #[test]
    fn f_beta_values() {
        assert!((f_beta(0.771, 0.898, 1.0) - 0.830).abs() < 0.0005);
        assert_eq!(f_beta(0.4, 0.4, 1.0), 0.4);
        assert_eq!(f_beta(0.0, 0.0, 1.0), 0.0);
        assert_eq!(f_beta(0.3, 0.9, 1.0), f_beta(0.9, 0.3, 1.0));
        // beta = 0 reduces to precision.
        assert!((f_beta(0.3, 0.9, 0.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn thresholds_inclusive() {
        let t = threshold_range(0.1, 0.95, 0.05);
        assert_eq!(t.len(), 18);
        assert_eq!(t[0], 0.1);
        assert_eq!(*t.last().unwrap(), 0.95);
        assert_eq!(Grid::default().len(), 54);
    }

    #[test]
    fn fold_sizes() {
        let b = fold_bounds(100, 5);
        assert!(b.iter().all(|r| r.len() == 20));
        let b = fold_bounds(7, 3);
        assert_eq!(b, vec![0..3, 3..5, 5..7]);
    }

    #[test]
    fn breakeven_picks_closest() {
        let mk = |t: f64, r: f64, p: f64| SweepPoint {
            context: 1,
            tile_threshold: t,
            report: EvalReport {
                recall: r,
                precision: p,
                ..EvalReport::from_counts(0, 0, 0, 1.0, BTreeMap::new())
            },
        };
        let pts = [mk(0.1, 0.9, 0.5), mk(0.5, 0.8, 0.78), mk(0.9, 0.5, 0.9)];
        assert_eq!(breakeven(&pts).unwrap().tile_threshold, 0.5);
        assert!(breakeven(&[]).is_none());
    }

    #[test]
    fn cv_argument_errors() {
        let c = generate_synthetic(1, 4);
        let base = ScoreConfig::default();
        assert!(matches!(
            cross_validate(&c, 1, &Grid::default(), &base, 1.0, FoldSplit::Contiguous),
            Err(EvalError::TooFewFolds(1))
        ));
        assert!(matches!(
            cross_validate(&c, 5, &Grid::default(), &base, 1.0, FoldSplit::Contiguous),
            Err(EvalError::CorpusTooSmall { .. })
        ));
        let empty = Grid {
            contexts: vec![],
            thresholds: vec![0.5],
        };
        assert!(matches!(
            cross_validate(&c, 2, &empty, &base, 1.0, FoldSplit::Contiguous),
            Err(EvalError::EmptyGrid)
        ));
    }

    #[test]
    fn table_mismatch_detected() {
        let train = Corpus::parse("[ DT NN ] VB").unwrap();
        let test = Corpus::parse("VB [ NN ]").unwrap();
        assert!(matches!(
            train_and_evaluate(&train, &test, &ScoreConfig::default(), 1.0),
            Err(EvalError::TableMismatch)
        ));
    }

    #[test]
    fn bad_fraction_rejected() {
        let c = generate_synthetic(1, 10);
        assert!(matches!(
            learning_curve(&c, &c, &[0.0], &ScoreConfig::default(), 1.0),
            Err(EvalError::BadFraction(_))
        ));
    }

    #[test]
    fn sweep_csv_layout() {
        let train = generate_synthetic(3, 40);
        let test = generate_synthetic(4, 10);
        let test = Corpus::parse_with(&test.to_text(), train.table().clone(), &Default::default())
            .unwrap();
        let grid = Grid {
            contexts: vec![1, 2],
            thresholds: vec![0.5, 0.7],
        };
        let pts = sweep(&train, &test, &grid, &ScoreConfig::default(), 1.0).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "cn,theta_t,recall,precision,f_beta,tp,gold,predicted"
        );
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,0.5000,"));
        assert!(lines[4].starts_with("2,0.7000,"));
    }
}
