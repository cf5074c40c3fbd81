//! Model tokenizations: pretokenized JSONL ingestion and byte-level BPE.

use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::OnceLock;

use fancy_regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datefmt::{FormatKind, Language};
use crate::semtok::SemanticSegmentation;

/// GPT-2 pre-split pattern.
pub const GPT2_PATTERN: &str = r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

#[derive(Debug, Error)]
pub enum TokError {
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("pre-split pattern: {0}")]
    Pattern(String),
    #[error("no symbol for byte {0:#04x}")]
    UnknownByte(u8),
    #[error("vocabulary: {0}")]
    Vocab(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// UTF-8 byte offsets into the tokenized string, half-open.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelTokenization {
    pub id: String,
    pub text: String,
    pub tokenizer_id: String,
    pub tokens: Vec<Token>,
    /// Optional cell keys; needed to pick the baseline template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatKind>,
}

impl ModelTokenization {
    /// Tokens given as consecutive pieces of the text.
    pub fn from_pieces(id: &str, tokenizer_id: &str, pieces: &[&str]) -> Self {
        let mut tokens = Vec::with_capacity(pieces.len());
        let mut text = String::new();
        for p in pieces {
            let start = text.len();
            text.push_str(p);
            tokens.push(Token { text: p.to_string(), start, end: text.len() });
        }
        Self { id: id.into(), text, tokenizer_id: tokenizer_id.into(), tokens, language: None, format: None }
    }

    /// Tokens cut at the given byte offsets (interior cuts only).
    pub fn from_cuts(id: &str, tokenizer_id: &str, text: &str, cuts: &[usize]) -> Self {
        let mut bounds = vec![0];
        bounds.extend(cuts.iter().copied().filter(|&c| c > 0 && c < text.len()));
        bounds.push(text.len());
        bounds.sort_unstable();
        bounds.dedup();
        let tokens = bounds
            .windows(2)
            .map(|w| Token {
                text: String::from_utf8_lossy(&text.as_bytes()[w[0]..w[1]]).into_owned(),
                start: w[0],
                end: w[1],
            })
            .collect();
        Self { id: id.into(), text: text.into(), tokenizer_id: tokenizer_id.into(), tokens, language: None, format: None }
    }

    /// The ideal tokenization: one token per semantic unit.
    pub fn from_segmentation(seg: &SemanticSegmentation, id: &str) -> Self {
        let pieces: Vec<&str> = seg.units.iter().map(|u| u.text.as_str()).collect();
        Self { language: Some(seg.language), format: Some(seg.kind), ..Self::from_pieces(id, "baseline", &pieces) }
    }

    /// Spans must tile the text with non-empty tokens; where a span falls on
    /// character boundaries, the token text must equal the slice.
    pub fn validate(&self) -> Result<(), String> {
        let mut at = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.start != at {
                return Err(format!("token {i} starts at {} but the previous token ends at {at}", t.start));
            }
            if t.end <= t.start {
                return Err(format!("token {i} is empty or reversed ({}..{})", t.start, t.end));
            }
            if t.end > self.text.len() {
                return Err(format!("token {i} ends at {} past the text length {}", t.end, self.text.len()));
            }
            if let Some(slice) = self.text.get(t.start..t.end) {
                if slice != t.text {
                    return Err(format!("token {i} text {:?} differs from span text {slice:?}", t.text));
                }
            }
            at = t.end;
        }
        if at != self.text.len() {
            return Err(format!("tokens cover {at} of {} bytes", self.text.len()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

pub fn read_pretokenized(reader: impl BufRead) -> Result<Vec<ModelTokenization>, TokError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |msg: String| TokError::Schema { line: i + 1, msg };
        let rec: ModelTokenization = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        rec.validate().map_err(schema)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_pretokenized(path: &Path) -> Result<Vec<ModelTokenization>, TokError> {
    let file = std::fs::File::open(path)?;
    read_pretokenized(std::io::BufReader::new(file))
}

pub fn write_pretokenized(mut w: impl Write, recs: &[ModelTokenization]) -> std::io::Result<()> {
    for r in recs {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// GPT-2 reversible byte-to-character table.
pub fn byte_to_char() -> &'static [char; 256] {
    static CELL: OnceLock<[char; 256]> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut table = ['\0'; 256];
        let mut extra = 0u32;
        for b in 0..=255u8 {
            let printable = matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
            table[b as usize] = if printable {
                b as char
            } else {
                extra += 1;
                char::from_u32(255 + extra).unwrap()
            };
        }
        table
    })
}

fn char_to_byte() -> &'static HashMap<char, u8> {
    static CELL: OnceLock<HashMap<char, u8>> = OnceLock::new();
    CELL.get_or_init(|| byte_to_char().iter().enumerate().map(|(b, &c)| (c, b as u8)).collect())
}

/// Raw bytes of a byte-mapped symbol string.
pub fn symbol_bytes(sym: &str) -> Option<Vec<u8>> {
    sym.chars().map(|c| char_to_byte().get(&c).copied()).collect()
}

/// Immutable byte-level BPE model.
#[derive(Debug, Clone)]
pub struct BpeModel {
    vocab: HashMap<String, u32>,
    ranks: HashMap<(String, String), usize>,
    pattern: Regex,
}

impl BpeModel {
    /// `pattern` defaults to [`GPT2_PATTERN`].
    pub fn new(vocab: HashMap<String, u32>, merges: Vec<(String, String)>, pattern: Option<&str>) -> Result<Self, TokError> {
        let pattern = Regex::new(pattern.unwrap_or(GPT2_PATTERN)).map_err(|e| TokError::Pattern(e.to_string()))?;
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, pair) in merges.into_iter().enumerate() {
            ranks.entry(pair).or_insert(rank);
        }
        Ok(Self { vocab, ranks, pattern })
    }

    pub fn from_strs(vocab_json: &str, merges: &str, pattern: Option<&str>) -> Result<Self, TokError> {
        let vocab: HashMap<String, u32> =
            serde_json::from_str(vocab_json).map_err(|e| TokError::Vocab(e.to_string()))?;
        Self::new(vocab, parse_merges(merges)?, pattern)
    }

    pub fn load(vocab: &Path, merges: &Path, pattern: Option<&str>) -> Result<Self, TokError> {
        Self::from_strs(&std::fs::read_to_string(vocab)?, &std::fs::read_to_string(merges)?, pattern)
    }

    pub fn token_id(&self, symbol: &str) -> Option<u32> {
        self.vocab.get(symbol).copied()
    }

    pub fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.ranks.get(&(left.to_string(), right.to_string())).copied()
    }

    /// Pre-split pieces as byte ranges; text the pattern skips becomes its own piece.
    fn pieces(&self, s: &str) -> Result<Vec<(usize, usize)>, TokError> {
        let mut out = Vec::new();
        let mut at = 0;
        for m in self.pattern.find_iter(s) {
            let m = m.map_err(|e| TokError::Pattern(e.to_string()))?;
            if m.start() > at {
                out.push((at, m.start()));
            }
            if m.end() > m.start() {
                out.push((m.start(), m.end()));
            }
            at = m.end().max(at);
        }
        if at < s.len() {
            out.push((at, s.len()));
        }
        Ok(out)
    }

    /// Merged symbols of one piece as (symbol, start, end) byte offsets
    /// relative to the piece.
    pub fn merge_piece(&self, bytes: &[u8]) -> Vec<(String, usize, usize)> {
        struct Sym {
            text: String,
            start: usize,
            end: usize,
            prev: Option<usize>,
            next: Option<usize>,
            alive: bool,
        }
        let table = byte_to_char();
        let n = bytes.len();
        let mut syms: Vec<Sym> = bytes
            .iter()
            .enumerate()
            .map(|(i, &b)| Sym {
                text: table[b as usize].to_string(),
                start: i,
                end: i + 1,
                prev: i.checked_sub(1),
                next: (i + 1 < n).then_some(i + 1),
                alive: true,
            })
            .collect();
        // (rank, left start) orders merges: lowest rank first, leftmost among equals
        let mut heap: BinaryHeap<Reverse<(usize, usize, usize, usize)>> = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<_>, syms: &[Sym], l: usize, r: usize| {
            if let Some(rank) = self.rank(&syms[l].text, &syms[r].text) {
                heap.push(Reverse((rank, syms[l].start, l, r)));
            }
        };
        for i in 0..n.saturating_sub(1) {
            push(&mut heap, &syms, i, i + 1);
        }
        while let Some(Reverse((rank, _, l, r))) = heap.pop() {
            let valid = syms[l].alive
                && syms[r].alive
                && syms[l].next == Some(r)
                && self.rank(&syms[l].text, &syms[r].text) == Some(rank);
            if !valid {
                continue;
            }
            let right = std::mem::take(&mut syms[r].text);
            syms[l].text.push_str(&right);
            syms[l].end = syms[r].end;
            syms[l].next = syms[r].next;
            syms[r].alive = false;
            if let Some(nx) = syms[l].next {
                syms[nx].prev = Some(l);
                push(&mut heap, &syms, l, nx);
            }
            if let Some(pv) = syms[l].prev {
                push(&mut heap, &syms, pv, l);
            }
        }
        syms.into_iter().filter(|s| s.alive).map(|s| (s.text, s.start, s.end)).collect()
    }
}

fn parse_merges(text: &str) -> Result<Vec<(String, String)>, TokError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(' ');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => out.push((a.to_string(), b.to_string())),
            _ => return Err(TokError::Schema { line: i + 1, msg: format!("expected `left right`, got {line:?}") }),
        }
    }
    Ok(out)
}

/// Pre-splits `s`, merges each piece, and maps symbols back to input byte spans.
/// Token text is lossy when a span cuts a multi-byte character.
pub fn bpe_tokenize(model: &BpeModel, s: &str, id: &str, tokenizer_id: &str) -> Result<ModelTokenization, TokError> {
    let bytes = s.as_bytes();
    let mut tokens = Vec::new();
    for (ps, pe) in model.pieces(s)? {
        for (sym, a, b) in model.merge_piece(&bytes[ps..pe]) {
            let raw = symbol_bytes(&sym).ok_or(TokError::UnknownByte(bytes[ps + a]))?;
            tokens.push(Token {
                text: String::from_utf8_lossy(&raw).into_owned(),
                start: ps + a,
                end: ps + b,
            });
        }
    }
    Ok(ModelTokenization {
        id: id.into(),
        text: s.into(),
        tokenizer_id: tokenizer_id.into(),
        tokens,
        language: None,
        format: None,
    })
}
