//! Memory-based sequence learning for shallow parsing.
//!
//! Training stores every tile (a bracket-containing slice of an instance and
//! its context) of a bracketed POS corpus in a counted trie. Bracketing a
//! new sentence scores every subsequence by the covers its matching tiles
//! form, then greedily keeps the best non-overlapping candidates.
//!
//! ```
//! use mbsl::{bracket_sentence, Corpus, MemoryTrie, ScoreConfig};
//!
//! let train = Corpus::parse("[ DT NN ] VB [ NN ] .\nVB [ DT ADJ NN ] .\n").unwrap();
//! let trie = MemoryTrie::build(&train, 2).unwrap();
//! let cfg = ScoreConfig { context: 2, tile_threshold: 0.5, ..Default::default() };
//! let out = bracket_sentence(train.sentences()[0].sentence(), &trie, &cfg);
//! assert_eq!(mbsl::serialize_sentence(&out, train.table()), "[ DT NN ] VB [ NN ] .");
//! ```

pub mod bracketer;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod memory;
pub mod scoring;

pub use bracketer::{
    bracket_all, bracket_sentence, score_all_candidates, select_candidates, ScoredCandidate,
};
pub use corpus::{
    apply_retag_rules, parse_corpus, parse_line, serialize_sentence, BracketedSentence, Bracketing,
    Corpus, CorpusError, RetagRules, Span, Symbol, SymbolKind, SymbolTable, TaggedSentence,
};
pub use eval::{
    cross_validate, evaluate, f_beta, generate_synthetic, learning_curve, sweep, EvalError,
    EvalReport, FoldSplit, Grid, SweepPoint,
};
pub use memory::{enumerate_instance_tiles, MemoryError, MemoryTrie, TileCounts, TrieCursor};
pub use scoring::{
    candidate_score, connects, cover_stats, matching_tiles, CoverGraph, CoverStats, Score,
    ScoreConfig, ScoringError, ScoringMode, SituatedCandidate, Tile,
};
