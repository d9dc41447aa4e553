//! C ABI for the `mbsl` shallow parser.
//!
//! Fallible functions return an [`MbslStatus`]. On failure a message is kept
//! per thread and can be read with [`mbsl_last_error_message`]. Memories are
//! opaque handles released with [`mbsl_memory_free`]; strings returned by
//! the library are released with [`mbsl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mbsl::{
    bracket_sentence, evaluate, parse_line, serialize_sentence, Corpus, MemoryError, MemoryTrie,
    RetagRules, ScoreConfig, SymbolTable,
};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbslStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Io = 5,
    NotFound = 6,
    Snapshot = 7,
    Panic = 8,
}

/// A trained tile memory.
pub struct MbslMemory {
    trie: MemoryTrie,
}

/// Exact-match evaluation totals.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MbslEvalReport {
    pub true_positives: u64,
    pub gold_count: u64,
    pub predicted_count: u64,
    pub recall: f64,
    pub precision: f64,
    pub f_beta: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (MbslStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MbslStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MbslStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MbslStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((MbslStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (MbslStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn memory<'a>(p: *const MbslMemory) -> Result<&'a MbslMemory, Failure> {
    p.as_ref()
        .ok_or((MbslStatus::NullPointer, "memory handle is null".into()))
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or((MbslStatus::NullPointer, format!("{what} is null")))
}

fn snapshot_error(e: MemoryError) -> Failure {
    match e {
        MemoryError::Io(e) => (MbslStatus::Io, e.to_string()),
        MemoryError::Snapshot(m) => (MbslStatus::Snapshot, m),
        other => (MbslStatus::InvalidArgument, other.to_string()),
    }
}

fn parse_error(e: impl std::fmt::Display) -> Failure {
    (MbslStatus::Parse, e.to_string())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mbsl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn mbsl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a memory from bracketed corpus text with `context` tags of
/// context on each side.
///
/// # Safety
/// `corpus` must be a nul-terminated string; `out_memory` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbsl_memory_train(
    corpus: *const c_char,
    context: usize,
    out_memory: *mut *mut MbslMemory,
) -> MbslStatus {
    guard(|| {
        let slot = out(out_memory, "out_memory")?;
        let corpus = Corpus::parse(text(corpus, "corpus")?).map_err(parse_error)?;
        let trie = MemoryTrie::build(&corpus, context)
            .map_err(|e| (MbslStatus::InvalidArgument, e.to_string()))?;
        *slot = Box::into_raw(Box::new(MbslMemory { trie }));
        Ok(())
    })
}

/// Loads a snapshot written by [`mbsl_memory_save`] or `mbsl train`.
///
/// # Safety
/// `path` must be a nul-terminated string; `out_memory` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbsl_memory_load(
    path: *const c_char,
    out_memory: *mut *mut MbslMemory,
) -> MbslStatus {
    guard(|| {
        let slot = out(out_memory, "out_memory")?;
        let path = text(path, "path")?;
        let file = File::open(path).map_err(|e| (MbslStatus::Io, format!("{path}: {e}")))?;
        let trie = MemoryTrie::read_snapshot(BufReader::new(file)).map_err(snapshot_error)?;
        *slot = Box::into_raw(Box::new(MbslMemory { trie }));
        Ok(())
    })
}

/// # Safety
/// `memory` must come from this library; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn mbsl_memory_save(
    memory: *const MbslMemory,
    path: *const c_char,
) -> MbslStatus {
    guard(|| {
        let m = self::memory(memory)?;
        let path = text(path, "path")?;
        let file = File::create(path).map_err(|e| (MbslStatus::Io, format!("{path}: {e}")))?;
        let mut w = BufWriter::new(file);
        m.trie.write_snapshot(&mut w).map_err(snapshot_error)?;
        w.flush().map_err(|e| (MbslStatus::Io, e.to_string()))
    })
}

/// Releases a memory. Null is ignored.
///
/// # Safety
/// `memory` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mbsl_memory_free(memory: *mut MbslMemory) {
    if !memory.is_null() {
        drop(Box::from_raw(memory));
    }
}

/// Context size the memory was built with, 0 for a null handle.
///
/// # Safety
/// `memory` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn mbsl_memory_context(memory: *const MbslMemory) -> usize {
    memory.as_ref().map_or(0, |m| m.trie.context())
}

/// Counts for a tile written as space-separated tags and brackets, e.g.
/// `"NN ]"`. Returns `NotFound` when the tile was never seen.
///
/// # Safety
/// `memory` must come from this library; `tile` must be nul-terminated;
/// `pos` and `total` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbsl_memory_lookup(
    memory: *const MbslMemory,
    tile: *const c_char,
    pos: *mut u64,
    total: *mut u64,
) -> MbslStatus {
    guard(|| {
        let m = self::memory(memory)?;
        let tile = text(tile, "tile")?;
        let (pos, total) = (out(pos, "pos")?, out(total, "total")?);
        let counts = m
            .trie
            .table()
            .lookup_sequence(tile)
            .and_then(|seq| m.trie.lookup(&seq))
            .ok_or_else(|| (MbslStatus::NotFound, format!("tile `{tile}` not in memory")))?;
        *pos = counts.pos;
        *total = counts.total;
        Ok(())
    })
}

/// Brackets one line of tags (or `word/TAG` tokens). `context` 0 uses the
/// memory's own context size. The result is written to `out_line` and must
/// be released with [`mbsl_string_free`].
///
/// # Safety
/// `memory` must come from this library; `line` must be nul-terminated;
/// `out_line` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbsl_bracket(
    memory: *const MbslMemory,
    line: *const c_char,
    tile_threshold: f64,
    candidate_threshold: f64,
    context: usize,
    out_line: *mut *mut c_char,
) -> MbslStatus {
    guard(|| {
        let m = self::memory(memory)?;
        let line = text(line, "line")?;
        let slot = out(out_line, "out_line")?;
        let context = if context == 0 {
            m.trie.context()
        } else {
            context
        };
        if context > m.trie.context() {
            return Err((
                MbslStatus::InvalidArgument,
                format!(
                    "context {context} exceeds the memory's {}",
                    m.trie.context()
                ),
            ));
        }
        let cfg = ScoreConfig {
            context,
            tile_threshold,
            candidate_threshold,
            ..Default::default()
        };
        cfg.validate()
            .map_err(|e| (MbslStatus::InvalidArgument, e.to_string()))?;
        let mut table = m.trie.table().clone();
        let rendered = match parse_line(line, 1, &mut table, &RetagRules::new())
            .map_err(parse_error)?
        {
            Some(s) => serialize_sentence(&bracket_sentence(s.sentence(), &m.trie, &cfg), &table),
            None => String::new(),
        };
        *slot = CString::new(rendered).expect("tags have no nul").into_raw();
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mbsl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scores predicted bracketed text against gold bracketed text, sentence by
/// sentence.
///
/// # Safety
/// Both texts must be nul-terminated; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mbsl_evaluate(
    gold: *const c_char,
    predicted: *const c_char,
    beta: f64,
    report: *mut MbslEvalReport,
) -> MbslStatus {
    guard(|| {
        let slot = out(report, "report")?;
        let gold = Corpus::parse_with(text(gold, "gold")?, SymbolTable::new(), &RetagRules::new())
            .map_err(parse_error)?;
        let predicted = Corpus::parse_with(
            text(predicted, "predicted")?,
            gold.table().clone(),
            &RetagRules::new(),
        )
        .map_err(parse_error)?;
        let r = evaluate(gold.sentences(), predicted.sentences(), beta)
            .map_err(|e| (MbslStatus::InvalidArgument, e.to_string()))?;
        *slot = MbslEvalReport {
            true_positives: r.true_positives as u64,
            gold_count: r.gold_count as u64,
            predicted_count: r.predicted_count as u64,
            recall: r.recall,
            precision: r.precision,
            f_beta: r.f_beta,
        };
        Ok(())
    })
}
