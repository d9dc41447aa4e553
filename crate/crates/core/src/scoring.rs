//! Candidate scoring.
//!
//! A candidate span is situated in its sentence (context tags, `[`, the
//! candidate, `]`, context tags). Every slice holding a bracket and a tag is
//! a tile; tiles whose positive ratio in memory exceeds the tile threshold
//! become vertices of the cover graph, and statistics over all START to END
//! paths (covers) give the candidate score.

use std::cmp::Ordering;

use thiserror::Error;

use crate::corpus::{Span, Symbol};
use crate::memory::{MemoryTrie, TileCounts};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("candidate span is empty")]
    EmptySpan,
    #[error("span {span} out of bounds for sentence of length {len}")]
    OutOfBounds { span: Span, len: usize },
    #[error("context size must be at least 1")]
    ZeroContext,
    #[error("tile threshold {0} outside (0, 1)")]
    TileThreshold(f64),
    #[error("linear weights must be finite and non-negative")]
    NegativeWeight,
    #[error("candidate threshold must be finite")]
    CandidateThreshold,
}

/// `left context · [ · candidate · ] · right context`, contexts truncated at
/// the sentence boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SituatedCandidate {
    symbols: Vec<Symbol>,
    open: usize,
    close: usize,
    span: Span,
}

impl SituatedCandidate {
    pub fn new(tags: &[Symbol], span: Span, context: usize) -> Result<Self, ScoringError> {
        if context == 0 {
            return Err(ScoringError::ZeroContext);
        }
        if span.is_empty() {
            return Err(ScoringError::EmptySpan);
        }
        if span.end > tags.len() {
            return Err(ScoringError::OutOfBounds {
                span,
                len: tags.len(),
            });
        }
        let left = span.start.saturating_sub(context);
        let right = (span.end + context).min(tags.len());
        let mut symbols = Vec::with_capacity(right - left + 2);
        symbols.extend_from_slice(&tags[left..span.start]);
        let open = symbols.len();
        symbols.push(Symbol::OPEN);
        symbols.extend_from_slice(&tags[span.start..span.end]);
        let close = symbols.len();
        symbols.push(Symbol::CLOSE);
        symbols.extend_from_slice(&tags[span.end..right]);
        Ok(SituatedCandidate {
            symbols,
            open,
            close,
            span,
        })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Position of the open bracket.
    pub fn open(&self) -> usize {
        self.open
    }

    /// Position of the close bracket.
    pub fn close(&self) -> usize {
        self.close
    }

    /// The candidate span within its sentence.
    pub fn span(&self) -> Span {
        self.span
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Whether the inclusive slice `[start, end]` is a tile. A single symbol
    /// never is; any longer slice holding a bracket also holds a tag because
    /// the brackets are never adjacent.
    pub fn is_tile(&self, start: usize, end: usize) -> bool {
        end > start
            && end < self.symbols.len()
            && ((start <= self.open && self.open <= end)
                || (start <= self.close && self.close <= end))
    }

    /// Inclusive bounds of every tile, ordered by (start, end).
    pub fn tile_bounds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let len = self.symbols.len();
        (0..=self.close).flat_map(move |start| {
            (start + 1..len)
                .filter(move |&end| self.is_tile(start, end))
                .map(move |end| (start, end))
        })
    }

    pub fn is_context(&self, pos: usize) -> bool {
        pos < self.open || pos > self.close
    }
}

/// A tile of a situated candidate with inclusive symbol bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    pub start: usize,
    pub end: usize,
    pub counts: TileCounts,
    pub has_open: bool,
    pub has_close: bool,
}

impl Tile {
    /// Tile over `[start, end]` of `sc`. Panics if the slice is not a tile.
    pub fn new(sc: &SituatedCandidate, start: usize, end: usize, counts: TileCounts) -> Self {
        assert!(sc.is_tile(start, end), "[{start},{end}] is not a tile");
        Tile {
            start,
            end,
            counts,
            has_open: start <= sc.open && sc.open <= end,
            has_close: start <= sc.close && sc.close <= end,
        }
    }

    /// `pos / total`.
    pub fn score(&self) -> f64 {
        self.counts.ratio()
    }
}

/// `t1` connects to `t2`: `t2` starts later, leaves no gap, and ends later.
pub fn connects(t1: &Tile, t2: &Tile) -> bool {
    t2.start > t1.start && t2.start <= t1.end + 1 && t2.end > t1.end
}

/// Positions shared by consecutive tiles, brackets included.
fn overlap(t1: &Tile, t2: &Tile) -> usize {
    (t1.end + 1).saturating_sub(t2.start)
}

/// All tiles of `sc` scoring strictly above `threshold`. Tiles sharing a
/// start position are looked up with one incremental cursor walk.
pub fn matching_tiles(sc: &SituatedCandidate, trie: &MemoryTrie, threshold: f64) -> Vec<Tile> {
    let symbols = sc.symbols();
    let mut tiles = Vec::new();
    for start in 0..=sc.close() {
        let mut cursor = trie.cursor();
        for (end, &sym) in symbols.iter().enumerate().skip(start) {
            cursor = cursor.advance(sym);
            if !cursor.is_present() {
                break;
            }
            if !sc.is_tile(start, end) {
                continue;
            }
            if let Some(counts) = cursor.counts() {
                if counts.pos > 0 && counts.ratio() > threshold {
                    tiles.push(Tile::new(sc, start, end, counts));
                }
            }
        }
    }
    tiles
}

/// DAG over matching tiles; START and END are implicit.
#[derive(Debug, Clone)]
pub struct CoverGraph {
    tiles: Vec<Tile>,
    successors: Vec<Vec<usize>>,
    open: usize,
    close: usize,
}

impl CoverGraph {
    /// Builds the graph for tiles of one situated candidate whose brackets
    /// sit at `open` and `close`. Tiles are ordered by (start, end), which
    /// is a topological order for the connects relation.
    pub fn new(mut tiles: Vec<Tile>, open: usize, close: usize) -> Self {
        tiles.sort_by_key(|t| (t.start, t.end));
        tiles.dedup_by_key(|t| (t.start, t.end));
        let successors = tiles
            .iter()
            .map(|t1| {
                tiles
                    .iter()
                    .enumerate()
                    .filter(|(_, t2)| connects(t1, t2))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        CoverGraph {
            tiles,
            successors,
            open,
            close,
        }
    }

    pub fn for_candidate(sc: &SituatedCandidate, tiles: Vec<Tile>) -> Self {
        Self::new(tiles, sc.open(), sc.close())
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    /// Indices of tiles `i` connects to.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    /// Tiles reachable directly from START.
    pub fn start_arcs(&self) -> impl Iterator<Item = usize> + '_ {
        self.tiles
            .iter()
            .enumerate()
            .filter(|(_, t)| t.has_open)
            .map(|(i, _)| i)
    }

    /// Tiles with an arc to END.
    pub fn end_arcs(&self) -> impl Iterator<Item = usize> + '_ {
        self.tiles
            .iter()
            .enumerate()
            .filter(|(_, t)| t.has_close)
            .map(|(i, _)| i)
    }

    pub fn open(&self) -> usize {
        self.open
    }

    pub fn close(&self) -> usize {
        self.close
    }
}

/// Statistics over every cover of a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoverStats {
    /// Number of covers, saturating.
    pub num: u64,
    /// Fewest tiles in any cover.
    pub minsize: u64,
    /// Most context positions covered by one cover.
    pub maxcontext: u64,
    /// Largest summed overlap between consecutive tiles of one cover.
    pub maxoverlap: u64,
}

#[derive(Clone, Copy)]
struct PathState {
    num: u64,
    minsize: u64,
    left: u64,
    overlap: u64,
}

/// Cover statistics by dynamic programming over the tiles in topological
/// order. `None` when no START to END path exists.
///
/// The tiles of a cover chain without gaps, so a cover spans exactly
/// `[start(first), end(last)]`; its context is the left context of the first
/// tile plus the right context of the last.
pub fn cover_stats(g: &CoverGraph) -> Option<CoverStats> {
    let n = g.tiles.len();
    let mut state: Vec<Option<PathState>> = vec![None; n];
    for (i, t) in g.tiles.iter().enumerate() {
        if t.has_open {
            merge(
                &mut state[i],
                PathState {
                    num: 1,
                    minsize: 1,
                    left: (g.open - t.start) as u64,
                    overlap: 0,
                },
            );
        }
    }
    let mut result: Option<CoverStats> = None;
    for i in 0..n {
        let Some(s) = state[i] else { continue };
        let t = &g.tiles[i];
        for &j in &g.successors[i] {
            let next = PathState {
                num: s.num,
                minsize: s.minsize + 1,
                left: s.left,
                overlap: s.overlap + overlap(t, &g.tiles[j]) as u64,
            };
            merge(&mut state[j], next);
        }
        if t.has_close {
            let right = (t.end - g.close) as u64;
            let here = CoverStats {
                num: s.num,
                minsize: s.minsize,
                maxcontext: s.left + right,
                maxoverlap: s.overlap,
            };
            result = Some(match result {
                None => here,
                Some(r) => CoverStats {
                    num: r.num.saturating_add(here.num),
                    minsize: r.minsize.min(here.minsize),
                    maxcontext: r.maxcontext.max(here.maxcontext),
                    maxoverlap: r.maxoverlap.max(here.maxoverlap),
                },
            });
        }
    }
    result
}

fn merge(slot: &mut Option<PathState>, incoming: PathState) {
    *slot = Some(match *slot {
        None => incoming,
        Some(s) => PathState {
            num: s.num.saturating_add(incoming.num),
            minsize: s.minsize.min(incoming.minsize),
            left: s.left.max(incoming.left),
            overlap: s.overlap.max(incoming.overlap),
        },
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoringMode {
    /// Compare `(num, -minsize, maxcontext, maxoverlap)` lexicographically.
    Lexicographic,
    /// `alpha*num - beta*minsize + gamma*maxcontext + delta*maxoverlap`.
    Linear {
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    /// Maximum context size on each side of a candidate.
    pub context: usize,
    /// Tiles match when their score is strictly above this.
    pub tile_threshold: f64,
    /// Candidates are kept when their score is strictly above this. In
    /// lexicographic mode it is compared against the cover count.
    pub candidate_threshold: f64,
    pub mode: ScoringMode,
    /// Longest candidate considered; `None` scores every subsequence.
    pub max_candidate_len: Option<usize>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            context: 3,
            tile_threshold: 0.6,
            candidate_threshold: 0.0,
            mode: ScoringMode::Lexicographic,
            max_candidate_len: None,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if self.context == 0 {
            return Err(ScoringError::ZeroContext);
        }
        if !(self.tile_threshold > 0.0 && self.tile_threshold < 1.0) {
            return Err(ScoringError::TileThreshold(self.tile_threshold));
        }
        if !self.candidate_threshold.is_finite() {
            return Err(ScoringError::CandidateThreshold);
        }
        if let ScoringMode::Linear {
            alpha,
            beta,
            gamma,
            delta,
        } = self.mode
        {
            if [alpha, beta, gamma, delta]
                .iter()
                .any(|w| !w.is_finite() || *w < 0.0)
            {
                return Err(ScoringError::NegativeWeight);
            }
        }
        Ok(())
    }
}

/// A candidate score. Scores from different modes are not comparable; the
/// ordering between them is arbitrary but total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    /// `None` stands for "no cover" and sorts below every cover.
    Lexicographic(Option<CoverStats>),
    Linear(f64),
}

impl Score {
    pub fn zero(mode: ScoringMode) -> Self {
        match mode {
            ScoringMode::Lexicographic => Score::Lexicographic(None),
            ScoringMode::Linear { .. } => Score::Linear(0.0),
        }
    }

    /// Whether this score passes the candidate threshold.
    pub fn exceeds(&self, threshold: f64) -> bool {
        match *self {
            Score::Lexicographic(stats) => stats.map_or(0, |s| s.num) as f64 > threshold,
            Score::Linear(v) => v > threshold,
        }
    }

    pub fn stats(&self) -> Option<CoverStats> {
        match *self {
            Score::Lexicographic(s) => s,
            Score::Linear(_) => None,
        }
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Score::Lexicographic(a), Score::Lexicographic(b)) => {
                let key = |s: &Option<CoverStats>| {
                    s.map(|s| {
                        (
                            s.num,
                            std::cmp::Reverse(s.minsize),
                            s.maxcontext,
                            s.maxoverlap,
                        )
                    })
                };
                key(a).cmp(&key(b))
            }
            (Score::Linear(a), Score::Linear(b)) => a.total_cmp(b),
            (Score::Lexicographic(_), Score::Linear(_)) => Ordering::Less,
            (Score::Linear(_), Score::Lexicographic(_)) => Ordering::Greater,
        }
    }
}

/// Candidate score from its cover statistics; no cover scores zero.
pub fn candidate_score(stats: Option<CoverStats>, mode: ScoringMode) -> Score {
    match mode {
        ScoringMode::Lexicographic => Score::Lexicographic(stats),
        ScoringMode::Linear {
            alpha,
            beta,
            gamma,
            delta,
        } => Score::Linear(stats.map_or(0.0, |s| {
            alpha * s.num as f64 - beta * s.minsize as f64
                + gamma * s.maxcontext as f64
                + delta * s.maxoverlap as f64
        })),
    }
}

/// Full scoring of one situated candidate, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct CandidateEvaluation {
    pub candidate: SituatedCandidate,
    pub tiles: Vec<Tile>,
    pub stats: Option<CoverStats>,
    pub score: Score,
}

pub fn evaluate_candidate(
    sc: SituatedCandidate,
    trie: &MemoryTrie,
    cfg: &ScoreConfig,
) -> CandidateEvaluation {
    let tiles = matching_tiles(&sc, trie, cfg.tile_threshold);
    let graph = CoverGraph::for_candidate(&sc, tiles);
    let stats = cover_stats(&graph);
    CandidateEvaluation {
        score: candidate_score(stats, cfg.mode),
        tiles: graph.tiles,
        stats,
        candidate: sc,
    }
}

/// Score of `span` within `tags`.
pub fn score_candidate(
    tags: &[Symbol],
    span: Span,
    trie: &MemoryTrie,
    cfg: &ScoreConfig,
) -> Result<Score, ScoringError> {
    let sc = SituatedCandidate::new(tags, span, cfg.context)?;
    Ok(evaluate_candidate(sc, trie, cfg).score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, SymbolTable};

    fn five_tile_candidate() -> SituatedCandidate {
        let mut table = SymbolTable::new();
        let tags: Vec<Symbol> = ["NN", "VB", "ADJ", "NN", "NN", "RB"]
            .iter()
            .map(|t| table.intern(t))
            .collect();
        SituatedCandidate::new(&tags, Span::new(2, 5), 2).unwrap()
    }

    fn five_tiles(sc: &SituatedCandidate) -> Vec<Tile> {
        let c = TileCounts { pos: 1, total: 1 };
        [(1, 6), (1, 3), (2, 4), (4, 6), (5, 7)]
            .iter()
            .map(|&(s, e)| Tile::new(sc, s, e, c))
            .collect()
    }

    #[test]
    fn situates_with_truncated_context() {
        let corpus = Corpus::parse("NN VB ADJ NN NN RB").unwrap();
        let t = corpus.table();
        let tags = corpus.sentences()[0].tags();
        let sc = SituatedCandidate::new(tags, Span::new(2, 5), 1).unwrap();
        assert_eq!(t.render(sc.symbols()), "VB [ ADJ NN NN ] RB");
        let sc = SituatedCandidate::new(tags, Span::new(2, 5), 2).unwrap();
        assert_eq!(t.render(sc.symbols()), "NN VB [ ADJ NN NN ] RB");
        let sc = SituatedCandidate::new(tags, Span::new(0, 6), 3).unwrap();
        assert_eq!(t.render(sc.symbols()), "[ NN VB ADJ NN NN RB ]");
        let sc = SituatedCandidate::new(tags, Span::new(1, 2), 3).unwrap();
        assert_eq!(sc.open(), 1);
        assert_eq!(
            SituatedCandidate::new(tags, Span::new(1, 2), 0),
            Err(ScoringError::ZeroContext)
        );
        assert_eq!(
            SituatedCandidate::new(tags, Span::new(2, 2), 1),
            Err(ScoringError::EmptySpan)
        );
        assert!(SituatedCandidate::new(tags, Span::new(2, 7), 1).is_err());
    }

    #[test]
    fn connects_examples() {
        let sc = five_tile_candidate();
        let t = five_tiles(&sc);
        assert!(connects(&t[1], &t[3]));
        assert!(!connects(&t[1], &t[4]));
        assert!(!connects(&t[0], &t[3]));
        for x in &t {
            assert!(!connects(x, x));
        }
    }

    #[test]
    fn five_tile_graph_arcs() {
        let sc = five_tile_candidate();
        let g = CoverGraph::for_candidate(&sc, five_tiles(&sc));
        // Sorted order: T2=[1,3], T1=[1,6], T3=[2,4], T4=[4,6], T5=[5,7].
        let name = |i: usize| match (g.tiles()[i].start, g.tiles()[i].end) {
            (1, 6) => "T1",
            (1, 3) => "T2",
            (2, 4) => "T3",
            (4, 6) => "T4",
            (5, 7) => "T5",
            _ => unreachable!(),
        };
        let mut starts: Vec<_> = g.start_arcs().map(name).collect();
        starts.sort();
        assert_eq!(starts, ["T1", "T2", "T3"]);
        let mut ends: Vec<_> = g.end_arcs().map(name).collect();
        ends.sort();
        assert_eq!(ends, ["T1", "T4", "T5"]);
        let mut arcs: Vec<String> = (0..g.tiles().len())
            .flat_map(|i| {
                g.successors(i)
                    .iter()
                    .map(move |&j| format!("{}->{}", name(i), name(j)))
                    .collect::<Vec<_>>()
            })
            .collect();
        arcs.sort();
        assert_eq!(
            arcs,
            ["T1->T5", "T2->T3", "T2->T4", "T3->T4", "T3->T5", "T4->T5"]
        );
    }

    #[test]
    fn five_tile_stats() {
        let sc = five_tile_candidate();
        let g = CoverGraph::for_candidate(&sc, five_tiles(&sc));
        assert_eq!(
            cover_stats(&g),
            Some(CoverStats {
                num: 10,
                minsize: 1,
                maxcontext: 2,
                maxoverlap: 5
            })
        );
    }

    #[test]
    fn empty_and_single_tile_graphs() {
        let sc = five_tile_candidate();
        assert_eq!(cover_stats(&CoverGraph::for_candidate(&sc, vec![])), None);
        let c = TileCounts { pos: 1, total: 1 };
        let g = CoverGraph::for_candidate(&sc, vec![Tile::new(&sc, 2, 6, c)]);
        assert_eq!(
            cover_stats(&g),
            Some(CoverStats {
                num: 1,
                minsize: 1,
                maxcontext: 0,
                maxoverlap: 0
            })
        );
        // Open-bracket tiles only: no path reaches END.
        let g = CoverGraph::for_candidate(&sc, vec![Tile::new(&sc, 1, 3, c)]);
        assert_eq!(cover_stats(&g), None);
    }

    #[test]
    fn tile_count_formula_small() {
        let mut table = SymbolTable::new();
        let tags: Vec<Symbol> = (0..12).map(|i| table.intern(&format!("T{i}"))).collect();
        let sc = SituatedCandidate::new(&tags, Span::new(3, 4), 1).unwrap();
        assert_eq!(sc.tile_bounds().count(), 10);
    }

    #[test]
    fn lexicographic_ordering() {
        let a = Score::Lexicographic(Some(CoverStats {
            num: 10,
            minsize: 1,
            maxcontext: 2,
            maxoverlap: 5,
        }));
        let b = Score::Lexicographic(Some(CoverStats {
            num: 10,
            minsize: 2,
            maxcontext: 9,
            maxoverlap: 9,
        }));
        let zero = Score::zero(ScoringMode::Lexicographic);
        assert!(a > b);
        assert!(b > zero);
        assert!(!zero.exceeds(0.0));
        assert!(b.exceeds(0.0));
        assert_eq!(candidate_score(None, ScoringMode::Lexicographic), zero);
    }

    #[test]
    fn linear_scores() {
        let only_num = ScoringMode::Linear {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
        };
        let s = |num, minsize| {
            candidate_score(
                Some(CoverStats {
                    num,
                    minsize,
                    maxcontext: 7,
                    maxoverlap: 3,
                }),
                only_num,
            )
        };
        assert_eq!(s(4, 1), Score::Linear(4.0));
        assert!(s(5, 9) > s(4, 1));
        assert_eq!(candidate_score(None, only_num), Score::Linear(0.0));
        let full = ScoringMode::Linear {
            alpha: 1000.0,
            beta: 100.0,
            gamma: 10.0,
            delta: 1.0,
        };
        let stats = CoverStats {
            num: 10,
            minsize: 1,
            maxcontext: 2,
            maxoverlap: 5,
        };
        assert_eq!(candidate_score(Some(stats), full), Score::Linear(9925.0));
    }

    #[test]
    fn config_validation() {
        assert!(ScoreConfig::default().validate().is_ok());
        let bad = |f: fn(&mut ScoreConfig)| {
            let mut c = ScoreConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.context = 0));
        assert!(bad(|c| c.tile_threshold = 0.0));
        assert!(bad(|c| c.tile_threshold = 1.0));
        assert!(bad(|c| c.candidate_threshold = f64::NAN));
        assert!(bad(|c| {
            c.mode = ScoringMode::Linear {
                alpha: 1.0,
                beta: -1.0,
                gamma: 0.0,
                delta: 0.0,
            }
        }));
    }
}
