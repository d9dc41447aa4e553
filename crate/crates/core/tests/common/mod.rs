//! Reference computations used as oracles. They only use plain vectors and
//! never call into the trie or the cover-graph code they check.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use mbsl::{Corpus, Symbol};

/// `left · [ · instance · ] · right` built directly from the tags, plus the
/// bracket positions.
pub fn situate(
    tags: &[Symbol],
    start: usize,
    end: usize,
    cn: usize,
) -> (Vec<Symbol>, usize, usize) {
    let left = start.saturating_sub(cn);
    let right = usize::min(end + cn, tags.len());
    let mut out = tags[left..start].to_vec();
    let open = out.len();
    out.push(Symbol::OPEN);
    out.extend_from_slice(&tags[start..end]);
    let close = out.len();
    out.push(Symbol::CLOSE);
    out.extend_from_slice(&tags[end..right]);
    (out, open, close)
}

/// Every slice holding at least one bracket and at least one tag, by brute
/// force over all (i, j).
pub fn brute_tiles(situated: &[Symbol]) -> Vec<Vec<Symbol>> {
    let mut out = Vec::new();
    for i in 0..situated.len() {
        for j in i..situated.len() {
            let slice = &situated[i..=j];
            let brackets = slice.iter().filter(|s| s.is_bracket()).count();
            let tags = slice.len() - brackets;
            if brackets >= 1 && tags >= 1 {
                out.push(slice.to_vec());
            }
        }
    }
    out
}

pub fn formula(l: usize, cn: usize) -> usize {
    2 * cn * (l + 2) + 2 * l + cn * cn + 1
}

/// Positive counts of every instance tile, and the set of all prefixes of
/// those tiles (the trie's node set).
pub fn naive_positive(
    corpus: &Corpus,
    cn: usize,
) -> (HashMap<Vec<Symbol>, u64>, BTreeSet<Vec<Symbol>>) {
    let mut pos = HashMap::new();
    let mut prefixes = BTreeSet::new();
    for s in corpus.sentences() {
        for span in s.instances() {
            let (sit, _, _) = situate(s.tags(), span.start, span.end, cn);
            for tile in brute_tiles(&sit) {
                for k in 1..=tile.len() {
                    prefixes.insert(tile[..k].to_vec());
                }
                *pos.entry(tile).or_insert(0) += 1;
            }
        }
    }
    (pos, prefixes)
}

/// Occurrences of `needle` as a contiguous run in any sentence.
pub fn naive_occurrences(corpus: &Corpus, needle: &[Symbol]) -> u64 {
    if needle.is_empty() {
        return 0;
    }
    corpus
        .sentences()
        .iter()
        .map(|s| {
            s.tags()
                .windows(needle.len())
                .filter(|w| *w == needle)
                .count() as u64
        })
        .sum()
}

pub fn strip_brackets(path: &[Symbol]) -> Vec<Symbol> {
    path.iter().copied().filter(|s| s.is_tag()).collect()
}

/// Inclusive tile bounds in a situated candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteStats {
    pub num: u64,
    pub minsize: u64,
    pub maxcontext: u64,
    pub maxoverlap: u64,
}

fn joins(a: &Interval, b: &Interval) -> bool {
    b.start > a.start && b.start <= a.end + 1 && b.end > a.end
}

/// Cover statistics by listing every START to END path explicitly.
pub fn brute_cover_stats(tiles: &[Interval], open: usize, close: usize) -> Option<BruteStats> {
    let contains = |t: &Interval, p: usize| t.start <= p && p <= t.end;
    let mut paths: Vec<Vec<usize>> = Vec::new();
    fn extend(tiles: &[Interval], close: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = &tiles[*path.last().unwrap()];
        if last.start <= close && close <= last.end {
            out.push(path.clone());
        }
        for (j, t) in tiles.iter().enumerate() {
            if joins(last, t) {
                path.push(j);
                extend(tiles, close, path, out);
                path.pop();
            }
        }
    }
    for (i, t) in tiles.iter().enumerate() {
        if contains(t, open) {
            let mut path = vec![i];
            extend(tiles, close, &mut path, &mut paths);
        }
    }
    if paths.is_empty() {
        return None;
    }
    let mut stats = BruteStats {
        num: paths.len() as u64,
        minsize: u64::MAX,
        maxcontext: 0,
        maxoverlap: 0,
    };
    for path in &paths {
        stats.minsize = stats.minsize.min(path.len() as u64);
        let covered: BTreeSet<usize> = path
            .iter()
            .flat_map(|&i| tiles[i].start..=tiles[i].end)
            .collect();
        let context = covered.iter().filter(|&&p| p < open || p > close).count() as u64;
        stats.maxcontext = stats.maxcontext.max(context);
        let overlap: usize = path
            .windows(2)
            .map(|w| {
                let (a, b) = (&tiles[w[0]], &tiles[w[1]]);
                (a.start..=a.end).filter(|p| contains(b, *p)).count()
            })
            .sum();
        stats.maxoverlap = stats.maxoverlap.max(overlap as u64);
    }
    Some(stats)
}

/// Random bracketed corpus text over tags `T0..T{alphabet-1}`.
pub fn random_corpus_text(
    rng: &mut impl rand::Rng,
    max_sentences: usize,
    max_len: usize,
    alphabet: usize,
) -> String {
    let mut text = String::new();
    for _ in 0..rng.gen_range(1..=max_sentences) {
        let n = rng.gen_range(1..=max_len);
        let mut toks: Vec<String> = Vec::new();
        let mut i = 0;
        while i < n {
            if rng.gen_bool(0.3) {
                let len = rng.gen_range(1..=usize::min(4, n - i));
                toks.push("[".into());
                for _ in 0..len {
                    toks.push(format!("T{}", rng.gen_range(0..alphabet)));
                }
                toks.push("]".into());
                i += len;
            } else {
                toks.push(format!("T{}", rng.gen_range(0..alphabet)));
                i += 1;
            }
        }
        text.push_str(&toks.join(" "));
        text.push('\n');
    }
    text
}
