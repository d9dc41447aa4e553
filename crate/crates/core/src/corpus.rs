//! Bracketed POS-tagged corpora.
//!
//! One sentence per line, tokens separated by spaces or tabs. A standalone
//! `[` opens a target instance and a standalone `]` closes it:
//!
//! ```text
//! [ NN ] VB [ ADJ NN NN ] RB PP [ NN ] .
//! ```
//!
//! Tokens may also be written as `word/TAG`; the word is only consulted by
//! [`RetagRules`] and is dropped afterwards.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Text used for the open bracket marker.
pub const OPEN_TOKEN: &str = "[";
/// Text used for the close bracket marker.
pub const CLOSE_TOKEN: &str = "]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("line {line}, column {column}: `]` without a matching `[`")]
    UnmatchedClose { line: usize, column: usize },
    #[error("line {line}, column {column}: `[` is never closed")]
    UnclosedOpen { line: usize, column: usize },
    #[error("line {line}, column {column}: nested brackets")]
    NestedBrackets { line: usize, column: usize },
    #[error("line {line}, column {column}: empty instance `[ ]`")]
    EmptyInstance { line: usize, column: usize },
    #[error("line {line}, column {column}: bracket `{token}` used as a tag")]
    BracketAsTag {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}, column {column}: token `{token}` has no `/TAG` part")]
    MissingTag {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}: malformed retag rule `{text}`")]
    BadRule { line: usize, text: String },
    #[error("empty corpus")]
    Empty,
    #[error("invalid sentence: {0}")]
    InvalidSentence(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Tag,
    OpenBracket,
    CloseBracket,
}

/// An interned POS tag or one of the two bracket markers.
///
/// Ids 0 and 1 are reserved for the brackets, so in any ordered child map
/// the bracket arcs come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    pub const OPEN: Symbol = Symbol(0);
    pub const CLOSE: Symbol = Symbol(1);
    const FIRST_TAG: u32 = 2;

    pub fn from_id(id: u32) -> Symbol {
        Symbol(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    pub fn kind(self) -> SymbolKind {
        match self.0 {
            0 => SymbolKind::OpenBracket,
            1 => SymbolKind::CloseBracket,
            _ => SymbolKind::Tag,
        }
    }

    pub fn is_bracket(self) -> bool {
        self.0 < Self::FIRST_TAG
    }

    pub fn is_tag(self) -> bool {
        !self.is_bracket()
    }
}

/// Bijection between tag strings and tag symbols, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    tags: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a table from tag strings in id order.
    pub fn from_tags<I, S>(tags: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = SymbolTable::new();
        for tag in tags {
            let tag = tag.into();
            if tag == OPEN_TOKEN || tag == CLOSE_TOKEN || tag.is_empty() {
                return Err(CorpusError::InvalidSentence(format!("invalid tag `{tag}`")));
            }
            if table.get(&tag).is_some() {
                return Err(CorpusError::InvalidSentence(format!(
                    "duplicate tag `{tag}`"
                )));
            }
            table.intern(&tag);
        }
        Ok(table)
    }

    pub fn intern(&mut self, tag: &str) -> Symbol {
        if let Some(&sym) = self.index.get(tag) {
            return sym;
        }
        let sym = Symbol(Symbol::FIRST_TAG + self.tags.len() as u32);
        self.tags.push(tag.to_owned());
        self.index.insert(tag.to_owned(), sym);
        sym
    }

    pub fn get(&self, tag: &str) -> Option<Symbol> {
        self.index.get(tag).copied()
    }

    /// Text for a symbol; brackets resolve to `[` and `]`.
    pub fn resolve(&self, sym: Symbol) -> Option<&str> {
        match sym.kind() {
            SymbolKind::OpenBracket => Some(OPEN_TOKEN),
            SymbolKind::CloseBracket => Some(CLOSE_TOKEN),
            SymbolKind::Tag => self
                .tags
                .get((sym.0 - Symbol::FIRST_TAG) as usize)
                .map(String::as_str),
        }
    }

    /// Tag strings in id order.
    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Parses whitespace-separated symbols (tags and brackets) against the
    /// table without interning. Returns `None` if a tag is unknown.
    pub fn lookup_sequence(&self, text: &str) -> Option<Vec<Symbol>> {
        text.split_whitespace()
            .map(|tok| match tok {
                OPEN_TOKEN => Some(Symbol::OPEN),
                CLOSE_TOKEN => Some(Symbol::CLOSE),
                tag => self.get(tag),
            })
            .collect()
    }

    /// Renders symbols separated by single spaces.
    pub fn render(&self, symbols: &[Symbol]) -> String {
        let mut out = String::new();
        for (i, &sym) in symbols.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.resolve(sym).unwrap_or("<?>"));
        }
        out
    }
}

/// Half-open span `[start, end)` over tag positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

/// A non-empty sequence of tag symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedSentence {
    tags: Vec<Symbol>,
}

impl TaggedSentence {
    pub fn new(tags: Vec<Symbol>) -> Result<Self, CorpusError> {
        if tags.is_empty() {
            return Err(CorpusError::InvalidSentence("empty sentence".into()));
        }
        if tags.iter().any(|s| s.is_bracket()) {
            return Err(CorpusError::InvalidSentence(
                "bracket symbol inside a tag sequence".into(),
            ));
        }
        Ok(TaggedSentence { tags })
    }

    pub fn tags(&self) -> &[Symbol] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// A tagged sentence plus its target instances: sorted, non-empty,
/// in-bounds and pairwise disjoint spans.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BracketedSentence {
    sentence: TaggedSentence,
    instances: Vec<Span>,
}

/// Output of the bracketer has the same shape as training data.
pub type Bracketing = BracketedSentence;

impl BracketedSentence {
    pub fn new(sentence: TaggedSentence, instances: Vec<Span>) -> Result<Self, CorpusError> {
        let n = sentence.len();
        for (i, span) in instances.iter().enumerate() {
            if span.is_empty() || span.end > n {
                return Err(CorpusError::InvalidSentence(format!(
                    "instance {span} invalid for sentence of length {n}"
                )));
            }
            if i > 0 && instances[i - 1].end > span.start {
                return Err(CorpusError::InvalidSentence(format!(
                    "instance {span} overlaps or precedes {}",
                    instances[i - 1]
                )));
            }
        }
        Ok(BracketedSentence {
            sentence,
            instances,
        })
    }

    pub fn unbracketed(sentence: TaggedSentence) -> Self {
        BracketedSentence {
            sentence,
            instances: Vec::new(),
        }
    }

    pub fn sentence(&self) -> &TaggedSentence {
        &self.sentence
    }

    pub fn tags(&self) -> &[Symbol] {
        self.sentence.tags()
    }

    pub fn instances(&self) -> &[Span] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence.is_empty()
    }
}

/// Word-to-tag replacement rules, matched case-insensitively on the word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetagRules {
    rules: HashMap<String, String>,
}

impl RetagRules {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, tag: &str) {
        self.rules.insert(word.to_lowercase(), tag.to_owned());
    }

    /// Parses `word<TAB>tag` lines. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut rules = RetagRules::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(word), Some(tag), None)
                    if !word.trim().is_empty()
                        && !tag.trim().is_empty()
                        && tag.trim() != OPEN_TOKEN
                        && tag.trim() != CLOSE_TOKEN =>
                {
                    rules.insert(word.trim(), tag.trim());
                }
                _ => {
                    return Err(CorpusError::BadRule {
                        line: i + 1,
                        text: line.to_owned(),
                    })
                }
            }
        }
        Ok(rules)
    }

    /// The be-verb set, retagged as `VBE`.
    pub fn be_verbs() -> Self {
        let mut rules = RetagRules::new();
        for word in ["be", "am", "is", "are", "were", "was", "'m", "'s", "'re"] {
            rules.insert(word, "VBE");
        }
        rules
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.rules.get(&word.to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Splits `word/TAG` at the last slash. Tokens without a usable slash are
/// returned as a bare tag.
fn split_word_tag(token: &str) -> (Option<&str>, &str) {
    match token.rfind('/') {
        Some(i) if i > 0 && i + 1 < token.len() => (Some(&token[..i]), &token[i + 1..]),
        _ => (None, token),
    }
}

/// Rewrites a raw token stream into tag-only tokens. Bracket tokens pass
/// through. When `rules` is non-empty every other token must carry a `/TAG`
/// part.
pub fn apply_retag_rules<'a, I>(tokens: I, rules: &RetagRules) -> Result<Vec<String>, CorpusError>
where
    I: IntoIterator<Item = &'a str>,
{
    tokens
        .into_iter()
        .enumerate()
        .map(|(i, tok)| retag_token(tok, rules, 1, i + 1).map(str::to_owned))
        .collect()
}

fn retag_token<'a>(
    token: &'a str,
    rules: &'a RetagRules,
    line: usize,
    column: usize,
) -> Result<&'a str, CorpusError> {
    if token == OPEN_TOKEN || token == CLOSE_TOKEN {
        return Ok(token);
    }
    let (word, tag) = split_word_tag(token);
    if rules.is_empty() {
        return Ok(tag);
    }
    let Some(word) = word else {
        return Err(CorpusError::MissingTag {
            line,
            column,
            token: token.to_owned(),
        });
    };
    Ok(rules.get(word).unwrap_or(tag))
}

/// Tokens of a line with their 1-based character columns.
fn tokenize(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0usize;
    line.split([' ', '\t'])
        .map(move |tok| {
            let start = offset;
            offset += tok.len() + 1;
            (start, tok)
        })
        .filter(|(_, tok)| !tok.is_empty())
        .map(move |(start, tok)| (line[..start].chars().count() + 1, tok))
}

/// Parses one line. Returns `Ok(None)` for a blank line. `line_no` is only
/// used for error positions.
pub fn parse_line(
    line: &str,
    line_no: usize,
    table: &mut SymbolTable,
    rules: &RetagRules,
) -> Result<Option<BracketedSentence>, CorpusError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut tags = Vec::new();
    let mut instances = Vec::new();
    let mut open: Option<(usize, usize)> = None;

    for (column, raw) in tokenize(line) {
        let tok = retag_token(raw, rules, line_no, column)?;
        match tok {
            OPEN_TOKEN if raw == OPEN_TOKEN => {
                if open.is_some() {
                    return Err(CorpusError::NestedBrackets {
                        line: line_no,
                        column,
                    });
                }
                open = Some((tags.len(), column));
            }
            CLOSE_TOKEN if raw == CLOSE_TOKEN => {
                let Some((start, _)) = open.take() else {
                    return Err(CorpusError::UnmatchedClose {
                        line: line_no,
                        column,
                    });
                };
                if start == tags.len() {
                    return Err(CorpusError::EmptyInstance {
                        line: line_no,
                        column,
                    });
                }
                instances.push(Span::new(start, tags.len()));
            }
            OPEN_TOKEN | CLOSE_TOKEN => {
                return Err(CorpusError::BracketAsTag {
                    line: line_no,
                    column,
                    token: raw.to_owned(),
                })
            }
            tag => tags.push(table.intern(tag)),
        }
    }
    if let Some((_, column)) = open {
        return Err(CorpusError::UnclosedOpen {
            line: line_no,
            column,
        });
    }
    if tags.is_empty() {
        return Ok(None);
    }
    let sentence = TaggedSentence::new(tags)?;
    BracketedSentence::new(sentence, instances).map(Some)
}

/// Parses a whole corpus text, interning tags into `table`. Blank lines are
/// skipped.
pub fn parse_corpus(
    text: &str,
    table: &mut SymbolTable,
    rules: &RetagRules,
) -> Result<Vec<BracketedSentence>, CorpusError> {
    let mut sentences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(s) = parse_line(line, i + 1, table, rules)? {
            sentences.push(s);
        }
    }
    Ok(sentences)
}

/// Inverse of [`parse_line`] for a single sentence.
pub fn serialize_sentence(sentence: &BracketedSentence, table: &SymbolTable) -> String {
    let mut out = String::new();
    let mut push = |tok: &str| {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    };
    let mut spans = sentence.instances().iter().peekable();
    for (i, &sym) in sentence.tags().iter().enumerate() {
        if spans.peek().is_some_and(|s| s.start == i) {
            push(OPEN_TOKEN);
        }
        push(table.resolve(sym).unwrap_or("<?>"));
        if spans.peek().is_some_and(|s| s.end == i + 1) {
            push(CLOSE_TOKEN);
            spans.next();
        }
    }
    out
}

/// A set of bracketed sentences sharing one symbol table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    table: SymbolTable,
    sentences: Vec<BracketedSentence>,
}

impl Corpus {
    pub fn new(table: SymbolTable, sentences: Vec<BracketedSentence>) -> Self {
        Corpus { table, sentences }
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Self::parse_with(text, SymbolTable::new(), &RetagRules::new())
    }

    /// Parses `text`, extending an existing table. Use this for test data so
    /// that ids agree with a training corpus.
    pub fn parse_with(
        text: &str,
        mut table: SymbolTable,
        rules: &RetagRules,
    ) -> Result<Self, CorpusError> {
        let sentences = parse_corpus(text, &mut table, rules)?;
        Ok(Corpus { table, sentences })
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn sentences(&self) -> &[BracketedSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn instance_count(&self) -> usize {
        self.sentences.iter().map(|s| s.instances().len()).sum()
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(BracketedSentence::len).sum()
    }

    /// Sentences in `range`, sharing this corpus' table.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Corpus {
        Corpus {
            table: self.table.clone(),
            sentences: self.sentences[range].to_vec(),
        }
    }

    /// Sentences picked by index, sharing this corpus' table.
    pub fn select(&self, indices: impl IntoIterator<Item = usize>) -> Corpus {
        Corpus {
            table: self.table.clone(),
            sentences: indices
                .into_iter()
                .map(|i| self.sentences[i].clone())
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&serialize_sentence(s, &self.table));
            out.push('\n');
        }
        out
    }
}
