//! Sentence bracketing: score every subsequence, then greedily select a
//! non-overlapping set in descending score order.

use std::cmp::Reverse;

use rayon::prelude::*;

use crate::corpus::{BracketedSentence, Bracketing, Span, TaggedSentence};
use crate::memory::MemoryTrie;
use crate::scoring::{evaluate_candidate, Score, ScoreConfig, SituatedCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredCandidate {
    pub span: Span,
    pub score: Score,
}

/// Every span `(i, j)` of the sentence, in (start, end) order.
pub fn candidate_spans(len: usize, max_len: Option<usize>) -> impl Iterator<Item = Span> {
    let cap = max_len.unwrap_or(len).max(1);
    (0..len).flat_map(move |i| (i + 1..=len.min(i + cap)).map(move |j| Span::new(i, j)))
}

/// Scores all candidates and keeps those above the candidate threshold.
pub fn score_all_candidates(
    sentence: &TaggedSentence,
    trie: &MemoryTrie,
    cfg: &ScoreConfig,
) -> Vec<ScoredCandidate> {
    let tags = sentence.tags();
    candidate_spans(tags.len(), cfg.max_candidate_len)
        .filter_map(|span| {
            let sc = SituatedCandidate::new(tags, span, cfg.context).ok()?;
            let score = evaluate_candidate(sc, trie, cfg).score;
            score
                .exceeds(cfg.candidate_threshold)
                .then_some(ScoredCandidate { span, score })
        })
        .collect()
}

/// Greedy selection: highest score first, ties to the longer span and then
/// the leftmost one; each accepted span removes every overlapping candidate.
/// Returns the accepted spans sorted by start.
pub fn select_candidates(mut cands: Vec<ScoredCandidate>) -> Vec<Span> {
    cands.sort_by_key(|c| (Reverse(c.score), Reverse(c.span.len()), c.span.start));
    let mut accepted: Vec<Span> = Vec::new();
    for c in cands {
        if accepted.iter().all(|a| !a.overlaps(&c.span)) {
            accepted.push(c.span);
        }
    }
    accepted.sort();
    accepted
}

pub fn bracket_sentence(
    sentence: &TaggedSentence,
    trie: &MemoryTrie,
    cfg: &ScoreConfig,
) -> Bracketing {
    let spans = select_candidates(score_all_candidates(sentence, trie, cfg));
    BracketedSentence::new(sentence.clone(), spans)
        .expect("greedy selection yields sorted disjoint spans")
}

/// Brackets sentences on a pool of `jobs` workers; 0 runs on the current
/// rayon pool. Output order follows input order.
pub fn bracket_all(
    sentences: &[TaggedSentence],
    trie: &MemoryTrie,
    cfg: &ScoreConfig,
    jobs: usize,
) -> Vec<Bracketing> {
    if jobs == 1 {
        return sentences
            .iter()
            .map(|s| bracket_sentence(s, trie, cfg))
            .collect();
    }
    let run = || {
        sentences
            .par_iter()
            .map(|s| bracket_sentence(s, trie, cfg))
            .collect()
    };
    if jobs == 0 {
        return run();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(run)
}
