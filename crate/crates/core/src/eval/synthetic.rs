use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BracketedSentence, Corpus, Span, SymbolTable, TaggedSentence};

/// Tag alphabet of the synthetic corpus, in symbol-id order.
pub const SYNTHETIC_TAGS: [&str; 7] = ["DT", "ADJ", "NN", "VB", "PP", "RB", "."];

const FILLER: [&str; 3] = ["VB", "PP", "RB"];

/// Deterministic corpus whose instances are the maximal runs matching
/// `DT? ADJ* NN NN?`, separated by `VB`/`PP`/`RB` filler and ending in `.`.
/// Each sentence holds one to three instances.
pub fn generate_synthetic(seed: u64, sentence_count: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = SymbolTable::new();
    for tag in SYNTHETIC_TAGS {
        table.intern(tag);
    }
    let sym = |t: &str| table.get(t).expect("synthetic tag");
    let mut sentences = Vec::with_capacity(sentence_count);
    for _ in 0..sentence_count {
        let mut tags = Vec::new();
        let mut instances = Vec::new();
        let noun_phrases = rng.gen_range(1..=3);
        let push_filler = |rng: &mut ChaCha8Rng, tags: &mut Vec<_>, min: usize| {
            for _ in 0..rng.gen_range(min..=2) {
                tags.push(sym(FILLER[rng.gen_range(0..FILLER.len())]));
            }
        };
        push_filler(&mut rng, &mut tags, 0);
        for i in 0..noun_phrases {
            if i > 0 {
                push_filler(&mut rng, &mut tags, 1);
            }
            let start = tags.len();
            if rng.gen_bool(0.6) {
                tags.push(sym("DT"));
            }
            while rng.gen_bool(0.35) {
                tags.push(sym("ADJ"));
            }
            tags.push(sym("NN"));
            if rng.gen_bool(0.3) {
                tags.push(sym("NN"));
            }
            instances.push(Span::new(start, tags.len()));
        }
        push_filler(&mut rng, &mut tags, 0);
        tags.push(sym("."));
        let sentence = TaggedSentence::new(tags).expect("non-empty");
        sentences.push(BracketedSentence::new(sentence, instances).expect("disjoint spans"));
    }
    Corpus::new(table, sentences)
}
