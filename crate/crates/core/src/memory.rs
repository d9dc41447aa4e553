//! Training memory: a trie over symbols holding positive and total counts
//! for every tile of every training instance.
//!
//! The trie is built in two passes. The first inserts each instance tile and
//! bumps the positive count of its terminal node. The second scans every
//! contiguous tag subsequence of every training sentence and bumps the total
//! count of each node whose bracket-free spelling equals that subsequence.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::corpus::{BracketedSentence, Corpus, Span, Symbol, SymbolTable};
use crate::scoring::SituatedCandidate;

pub type NodeId = u32;

const ROOT: NodeId = 0;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("context size must be at least 1")]
    ZeroContext,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Positive and total occurrence counts of a tile. The negative count is
/// `total - pos`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TileCounts {
    pub pos: u64,
    pub total: u64,
}

impl TileCounts {
    pub fn negative(&self) -> u64 {
        self.total.saturating_sub(self.pos)
    }

    /// `pos / total`, or 0 when nothing was counted.
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.pos as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrieNode {
    /// Sorted by symbol id; bracket arcs therefore come first.
    children: Vec<(Symbol, NodeId)>,
    counts: TileCounts,
}

impl TrieNode {
    fn child(&self, sym: Symbol) -> Option<NodeId> {
        self.children
            .binary_search_by_key(&sym, |&(s, _)| s)
            .ok()
            .map(|i| self.children[i].1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub sentences: u64,
    pub instances: u64,
    /// Tile occurrences inserted during the first pass.
    pub tile_occurrences: u64,
}

/// Every tile of `instance` within `sentence`, with up to `context` tags of
/// context on either side.
pub fn enumerate_instance_tiles(
    sentence: &BracketedSentence,
    instance: Span,
    context: usize,
) -> Vec<Vec<Symbol>> {
    let sc = SituatedCandidate::new(sentence.tags(), instance, context.max(1))
        .expect("instance spans are non-empty and in bounds");
    sc.tile_bounds()
        .map(|(start, end)| sc.symbols()[start..=end].to_vec())
        .collect()
}

/// Immutable counted trie of training tiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryTrie {
    nodes: Vec<TrieNode>,
    context: usize,
    table: SymbolTable,
    stats: BuildStats,
}

impl MemoryTrie {
    pub fn build(corpus: &Corpus, context: usize) -> Result<Self, MemoryError> {
        if context < 1 {
            return Err(MemoryError::ZeroContext);
        }
        if corpus.is_empty() {
            return Err(MemoryError::EmptyCorpus);
        }
        let mut trie = MemoryTrie {
            nodes: vec![TrieNode::default()],
            context,
            table: corpus.table().clone(),
            stats: BuildStats {
                sentences: corpus.len() as u64,
                instances: corpus.instance_count() as u64,
                tile_occurrences: 0,
            },
        };
        for sentence in corpus.sentences() {
            for &instance in sentence.instances() {
                trie.insert_instance(sentence, instance);
            }
        }
        for sentence in corpus.sentences() {
            trie.count_totals(sentence.tags());
        }
        trie.renumber_preorder();
        Ok(trie)
    }

    /// Reorders the node arena into preorder, the layout snapshots use.
    fn renumber_preorder(&mut self) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![ROOT];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(
                self.nodes[id as usize]
                    .children
                    .iter()
                    .rev()
                    .map(|&(_, c)| c),
            );
        }
        let mut new_id = vec![0 as NodeId; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_id[old as usize] = new as NodeId;
        }
        let mut old_nodes: Vec<Option<TrieNode>> = std::mem::take(&mut self.nodes)
            .into_iter()
            .map(Some)
            .collect();
        self.nodes = order
            .iter()
            .map(|&old| {
                let mut node = old_nodes[old as usize].take().expect("visited once");
                for (_, child) in &mut node.children {
                    *child = new_id[*child as usize];
                }
                node
            })
            .collect();
    }

    fn child_or_insert(&mut self, node: NodeId, sym: Symbol) -> NodeId {
        let children = &self.nodes[node as usize].children;
        match children.binary_search_by_key(&sym, |&(s, _)| s) {
            Ok(i) => children[i].1,
            Err(i) => {
                let id = self.nodes.len() as NodeId;
                self.nodes.push(TrieNode::default());
                self.nodes[node as usize].children.insert(i, (sym, id));
                id
            }
        }
    }

    fn insert_instance(&mut self, sentence: &BracketedSentence, instance: Span) {
        let sc = SituatedCandidate::new(sentence.tags(), instance, self.context)
            .expect("instance spans are non-empty and in bounds");
        let symbols = sc.symbols();
        // Every tile contains the close bracket or starts at or before the
        // open bracket, so no tile starts after the close bracket.
        for start in 0..=sc.close() {
            let mut node = ROOT;
            for (end, &sym) in symbols.iter().enumerate().skip(start) {
                node = self.child_or_insert(node, sym);
                if sc.is_tile(start, end) {
                    let counts = &mut self.nodes[node as usize].counts;
                    counts.pos = counts.pos.saturating_add(1);
                    self.stats.tile_occurrences += 1;
                }
            }
        }
    }

    /// Adds the node and all nodes reachable from it through bracket arcs.
    fn close_over_brackets(&self, node: NodeId, out: &mut Vec<NodeId>) {
        out.push(node);
        for &(sym, child) in &self.nodes[node as usize].children {
            if !sym.is_bracket() {
                break;
            }
            self.close_over_brackets(child, out);
        }
    }

    fn count_totals(&mut self, tags: &[Symbol]) {
        let mut frontier = Vec::new();
        let mut next = Vec::new();
        for start in 0..tags.len() {
            frontier.clear();
            self.close_over_brackets(ROOT, &mut frontier);
            for &tag in &tags[start..] {
                next.clear();
                for &node in &frontier {
                    if let Some(child) = self.nodes[node as usize].child(tag) {
                        self.close_over_brackets(child, &mut next);
                    }
                }
                if next.is_empty() {
                    break;
                }
                for &node in &next {
                    let counts = &mut self.nodes[node as usize].counts;
                    counts.total = counts.total.saturating_add(1);
                }
                std::mem::swap(&mut frontier, &mut next);
            }
        }
    }

    /// Counts stored for `tile`, or `None` if no node spells it. The empty
    /// sequence is not a tile and is always absent.
    pub fn lookup(&self, tile: &[Symbol]) -> Option<TileCounts> {
        if tile.is_empty() {
            return None;
        }
        tile.iter()
            .try_fold(self.cursor(), |c, &s| {
                Some(c.advance(s)).filter(TrieCursor::is_present)
            })
            .and_then(|c| c.counts())
    }

    /// Positive and total evidence for `tile`, including tiles that were
    /// never inserted. Totals depend only on the bracket-free spelling, so an
    /// absent tile borrows the total of any node spelling the same tags; if
    /// there is none the total is reported as 0.
    pub fn evidence(&self, tile: &[Symbol]) -> TileCounts {
        if let Some(counts) = self.lookup(tile) {
            return counts;
        }
        let mut frontier = Vec::new();
        let mut next = Vec::new();
        self.close_over_brackets(ROOT, &mut frontier);
        let mut consumed = false;
        for &tag in tile.iter().filter(|s| s.is_tag()) {
            consumed = true;
            next.clear();
            for &node in &frontier {
                if let Some(child) = self.nodes[node as usize].child(tag) {
                    self.close_over_brackets(child, &mut next);
                }
            }
            if next.is_empty() {
                return TileCounts::default();
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        let total = match (consumed, frontier.first()) {
            (true, Some(&node)) => self.nodes[node as usize].counts.total,
            _ => 0,
        };
        TileCounts { pos: 0, total }
    }

    pub fn cursor(&self) -> TrieCursor<'_> {
        TrieCursor {
            trie: self,
            node: Some(ROOT),
        }
    }

    /// Maximum context size used when the memory was built.
    pub fn context(&self) -> usize {
        self.context
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    /// Number of trie nodes, excluding the root.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of distinct tiles, i.e. nodes with a positive count.
    pub fn tile_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.counts.pos > 0).count()
    }

    /// Every non-root node as (path from the root, counts), in preorder.
    pub fn entries(&self) -> Vec<(Vec<Symbol>, TileCounts)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut path = Vec::new();
        self.collect_entries(ROOT, &mut path, &mut out);
        out
    }

    fn collect_entries(
        &self,
        node: NodeId,
        path: &mut Vec<Symbol>,
        out: &mut Vec<(Vec<Symbol>, TileCounts)>,
    ) {
        for &(sym, child) in &self.nodes[node as usize].children {
            path.push(sym);
            out.push((path.clone(), self.nodes[child as usize].counts));
            self.collect_entries(child, path, out);
            path.pop();
        }
    }
}

/// Position in a [`MemoryTrie`], or the absent state once a lookup has left
/// the trie.
#[derive(Debug, Clone, Copy)]
pub struct TrieCursor<'a> {
    trie: &'a MemoryTrie,
    node: Option<NodeId>,
}

impl<'a> TrieCursor<'a> {
    #[must_use]
    pub fn advance(self, sym: Symbol) -> Self {
        let node = self
            .node
            .and_then(|n| self.trie.nodes[n as usize].child(sym));
        TrieCursor { node, ..self }
    }

    pub fn is_present(&self) -> bool {
        self.node.is_some()
    }

    pub fn is_root(&self) -> bool {
        self.node == Some(ROOT)
    }

    /// Counts at the current node; `None` when absent or at the root.
    pub fn counts(&self) -> Option<TileCounts> {
        match self.node {
            Some(ROOT) | None => None,
            Some(n) => Some(self.trie.nodes[n as usize].counts),
        }
    }
}

const MAGIC: &[u8; 4] = b"MBSL";
const FORMAT_VERSION: u32 = 1;

impl MemoryTrie {
    /// Writes the binary snapshot: magic `MBSL`, format version, context
    /// size, symbol table, build stats, then a preorder node dump. All
    /// integers are little-endian.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), MemoryError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.context as u32).to_le_bytes())?;
        w.write_all(&(self.table.len() as u32).to_le_bytes())?;
        for tag in self.table.tags() {
            w.write_all(&(tag.len() as u32).to_le_bytes())?;
            w.write_all(tag.as_bytes())?;
        }
        for v in [
            self.stats.sentences,
            self.stats.instances,
            self.stats.tile_occurrences,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.nodes.len() as u32).to_le_bytes())?;
        let mut stack = vec![ROOT];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            w.write_all(&node.counts.pos.to_le_bytes())?;
            w.write_all(&node.counts.total.to_le_bytes())?;
            w.write_all(&(node.children.len() as u32).to_le_bytes())?;
            for &(sym, _) in &node.children {
                w.write_all(&sym.id().to_le_bytes())?;
            }
            stack.extend(node.children.iter().rev().map(|&(_, c)| c));
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: R) -> Result<Self, MemoryError> {
        let mut r = SnapshotReader(r);
        let mut magic = [0u8; 4];
        r.fill(&mut magic)?;
        if &magic != MAGIC {
            return Err(MemoryError::Snapshot("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(MemoryError::Snapshot(format!(
                "unsupported format version {version}"
            )));
        }
        let context = r.u32()? as usize;
        if context == 0 {
            return Err(MemoryError::ZeroContext);
        }
        let tag_count = r.u32()?;
        let mut tags = Vec::with_capacity(tag_count.min(1 << 16) as usize);
        for _ in 0..tag_count {
            let len = r.u32()? as usize;
            if len > 1 << 20 {
                return Err(MemoryError::Snapshot("tag too long".into()));
            }
            let mut buf = vec![0u8; len];
            r.fill(&mut buf)?;
            tags.push(
                String::from_utf8(buf)
                    .map_err(|_| MemoryError::Snapshot("tag is not UTF-8".into()))?,
            );
        }
        let table =
            SymbolTable::from_tags(tags).map_err(|e| MemoryError::Snapshot(e.to_string()))?;
        let stats = BuildStats {
            sentences: r.u64()?,
            instances: r.u64()?,
            tile_occurrences: r.u64()?,
        };
        let node_count = r.u32()? as usize;
        if node_count == 0 {
            return Err(MemoryError::Snapshot("missing root node".into()));
        }
        let max_symbol = 2 + table.len() as u32;
        let mut nodes: Vec<TrieNode> = Vec::with_capacity(node_count.min(1 << 24));
        // Pending child slots in preorder: (parent, index into its children).
        let mut pending: Vec<(NodeId, usize)> = Vec::new();
        loop {
            if nodes.len() == node_count {
                break;
            }
            let id = nodes.len() as NodeId;
            if id != ROOT {
                let Some((parent, slot)) = pending.pop() else {
                    return Err(MemoryError::Snapshot("node count mismatch".into()));
                };
                nodes[parent as usize].children[slot].1 = id;
            }
            let counts = TileCounts {
                pos: r.u64()?,
                total: r.u64()?,
            };
            let n_children = r.u32()? as usize;
            let mut children = Vec::with_capacity(n_children.min(max_symbol as usize));
            for _ in 0..n_children {
                let sym = r.u32()?;
                if sym >= max_symbol {
                    return Err(MemoryError::Snapshot(format!("symbol {sym} out of range")));
                }
                let sym = Symbol::from_id(sym);
                if children.last().is_some_and(|&(prev, _)| prev >= sym) {
                    return Err(MemoryError::Snapshot("children not sorted".into()));
                }
                children.push((sym, ROOT));
            }
            pending.extend((0..n_children).rev().map(|slot| (id, slot)));
            nodes.push(TrieNode { children, counts });
        }
        if !pending.is_empty() {
            return Err(MemoryError::Snapshot("node count mismatch".into()));
        }
        Ok(MemoryTrie {
            nodes,
            context,
            table,
            stats,
        })
    }
}

struct SnapshotReader<R>(R);

impl<R: Read> SnapshotReader<R> {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), MemoryError> {
        self.0.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => MemoryError::Snapshot("truncated".into()),
            _ => MemoryError::Io(e),
        })
    }

    fn u32(&mut self) -> Result<u32, MemoryError> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64, MemoryError> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
}
