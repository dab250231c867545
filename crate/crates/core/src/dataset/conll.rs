//! CoNLL-2012 coreference columns.
//!
//! Each document section is written as one sentence. Rows carry twelve
//! whitespace-separated columns: document key, part number, token index,
//! word, seven `-` placeholders for the OntoNotes layers not produced here,
//! and the coreference column in `(n`, `n)`, `(n)` bracket notation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::model::Document;
use crate::scoring::{ClusterSet, MentionId};
use crate::text::{conll_tokens, TokenSpan};

const PLACEHOLDER_COLUMNS: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConllRow {
    pub word: String,
    pub coref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConllDocument {
    pub key: String,
    pub part: u32,
    pub sentences: Vec<Vec<ConllRow>>,
}

impl fmt::Display for ConllDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#begin document ({}); part {:03}", self.key, self.part)?;
        for sentence in &self.sentences {
            for (i, row) in sentence.iter().enumerate() {
                write!(f, "{}\t{}\t{}\t{}", self.key, self.part, i, row.word)?;
                for _ in 0..PLACEHOLDER_COLUMNS {
                    f.write_str("\t-")?;
                }
                writeln!(f, "\t{}", row.coref)?;
            }
            writeln!(f)?;
        }
        writeln!(f, "#end document")
    }
}

fn describe(m: &MentionId) -> String {
    format!("({}, {}, {}, {})", m.document_id, m.section_index, m.char_start, m.char_end)
}

fn section_tokens(doc: &Document) -> Vec<(Vec<char>, Vec<TokenSpan>)> {
    doc.sections
        .iter()
        .map(|s| {
            let chars: Vec<char> = s.text.chars().collect();
            let tokens = conll_tokens(&chars);
            (chars, tokens)
        })
        .collect()
}

/// A mention as an inclusive token range inside one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenMention {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

/// Emit a document and its clusters. Cluster numbers are dense and follow
/// the order of each cluster's first mention.
pub fn to_conll(doc: &Document, clusters: &ClusterSet<MentionId>) -> Result<ConllDocument, DatasetError> {
    let tokenized = section_tokens(doc);
    let position: HashMap<usize, usize> =
        doc.sections.iter().enumerate().map(|(pos, s)| (s.index, pos)).collect();

    let mut located: Vec<Vec<(TokenMention, MentionId)>> = Vec::new();
    for (ci, cluster) in clusters.clusters.iter().enumerate() {
        let mut out = Vec::new();
        for m in cluster {
            let pos = position
                .get(&m.section_index)
                .filter(|_| m.document_id == doc.id)
                .ok_or_else(|| DatasetError::OutOfDocument { mention: describe(m) })?;
            let (chars, tokens) = &tokenized[*pos];
            if m.char_start >= m.char_end || m.char_end > chars.len() {
                return Err(DatasetError::OutOfDocument { mention: describe(m) });
            }
            let start = tokens.iter().position(|t| t.start == m.char_start);
            let end = tokens.iter().position(|t| t.end == m.char_end);
            match (start, end) {
                (Some(start), Some(end)) if start <= end => {
                    out.push((TokenMention { sentence: *pos, start, end }, m.clone()))
                }
                _ => return Err(DatasetError::Misaligned { cluster: ci, mention: describe(m) }),
            }
        }
        out.sort();
        located.push(out);
    }

    let all: Vec<&(TokenMention, MentionId)> = located.iter().flatten().collect();
    for (i, (a, ma)) in all.iter().enumerate() {
        for (b, mb) in &all[i + 1..] {
            let crossing = a.sentence == b.sentence
                && ((a.start < b.start && b.start <= a.end && a.end < b.end)
                    || (b.start < a.start && a.start <= b.end && b.end < a.end));
            if crossing {
                return Err(DatasetError::Crossing { first: describe(ma), second: describe(mb) });
            }
        }
    }

    let mut order: Vec<usize> = (0..located.len()).filter(|&i| !located[i].is_empty()).collect();
    order.sort_by_key(|&i| located[i][0].0);

    // Per token: (openers, singles, closers) as (cluster number, other end).
    type Cell = (Vec<(usize, usize)>, Vec<usize>, Vec<(usize, usize)>);
    let mut cells: Vec<Vec<Cell>> =
        tokenized.iter().map(|(_, t)| vec![(Vec::new(), Vec::new(), Vec::new()); t.len()]).collect();
    for (number, &ci) in order.iter().enumerate() {
        for (tm, _) in &located[ci] {
            let row = &mut cells[tm.sentence];
            if tm.start == tm.end {
                row[tm.start].1.push(number);
            } else {
                row[tm.start].0.push((number, tm.end));
                row[tm.end].2.push((number, tm.start));
            }
        }
    }

    let sentences = tokenized
        .iter()
        .zip(cells)
        .map(|((chars, tokens), row_cells)| {
            tokens
                .iter()
                .zip(row_cells)
                .map(|(t, (mut open, single, mut close))| {
                    // Outer mentions open first and close last.
                    open.sort_by_key(|&(n, end)| (std::cmp::Reverse(end), n));
                    close.sort_by_key(|&(n, start)| (std::cmp::Reverse(start), n));
                    let parts: Vec<String> = open
                        .iter()
                        .map(|(n, _)| format!("({n}"))
                        .chain(single.iter().map(|n| format!("({n})")))
                        .chain(close.iter().map(|(n, _)| format!("{n})")))
                        .collect();
                    ConllRow {
                        word: chars[t.start..t.end].iter().collect(),
                        coref: if parts.is_empty() { "-".into() } else { parts.join("|") },
                    }
                })
                .collect()
        })
        .collect();

    Ok(ConllDocument { key: doc.id.clone(), part: 0, sentences })
}

/// One `#begin document` … `#end document` block read back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedConll {
    pub key: String,
    pub part: u32,
    pub sentences: Vec<Vec<String>>,
    pub clusters: ClusterSet<TokenMention>,
}

impl ParsedConll {
    /// Map token mentions back to character mentions of `doc`, whose
    /// sections must tokenize to exactly the words read.
    pub fn to_mentions(&self, doc: &Document) -> Result<ClusterSet<MentionId>, DatasetError> {
        let tokenized = section_tokens(doc);
        if tokenized.len() != self.sentences.len() {
            return Err(DatasetError::Integrity {
                location: format!("document {}", self.key),
                message: format!("{} sentences read, document has {} sections", self.sentences.len(), tokenized.len()),
            });
        }
        for (si, ((chars, tokens), words)) in tokenized.iter().zip(&self.sentences).enumerate() {
            let same = tokens.len() == words.len()
                && tokens.iter().zip(words).all(|(t, w)| chars[t.start..t.end].iter().copied().eq(w.chars()));
            if !same {
                return Err(DatasetError::Integrity {
                    location: format!("document {}, sentence {si}", self.key),
                    message: "words differ from the document tokens".into(),
                });
            }
        }
        let clusters = self
            .clusters
            .clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|tm| {
                        let tokens = &tokenized[tm.sentence].1;
                        MentionId::new(
                            &doc.id,
                            doc.sections[tm.sentence].index,
                            tokens[tm.start].start,
                            tokens[tm.end].end,
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(ClusterSet::new(clusters))
    }
}

enum Bracket {
    Open(u64),
    Close(u64),
    Single(u64),
}

fn parse_cell(cell: &str, line: usize) -> Result<Vec<Bracket>, DatasetError> {
    if cell == "-" {
        return Ok(Vec::new());
    }
    let bad = || DatasetError::Conll { line, message: format!("bad coreference cell {cell:?}") };
    cell.split('|')
        .map(|part| {
            let open = part.starts_with('(');
            let close = part.ends_with(')');
            let digits = part.trim_start_matches('(').trim_end_matches(')');
            let n: u64 = digits.parse().map_err(|_| bad())?;
            if digits.len() + usize::from(open) + usize::from(close) != part.len() {
                return Err(bad());
            }
            Ok(match (open, close) {
                (true, true) => Bracket::Single(n),
                (true, false) => Bracket::Open(n),
                (false, true) => Bracket::Close(n),
                (false, false) => return Err(bad()),
            })
        })
        .collect()
}

#[derive(Default)]
struct PartState {
    key: String,
    part: u32,
    sentences: Vec<Vec<String>>,
    current: Vec<String>,
    open: HashMap<u64, Vec<(usize, usize)>>,
    clusters: BTreeMap<u64, Vec<TokenMention>>,
}

impl PartState {
    fn end_sentence(&mut self) {
        if !self.current.is_empty() {
            self.sentences.push(std::mem::take(&mut self.current));
        }
    }

    fn finish(mut self, line: usize) -> Result<ParsedConll, DatasetError> {
        if let Some((n, _)) = self.open.iter().find(|(_, v)| !v.is_empty()) {
            return Err(DatasetError::Conll { line, message: format!("cluster {n} opened but never closed") });
        }
        self.end_sentence();
        let clusters = ClusterSet::new(self.clusters.into_values().collect());
        clusters.validate().map_err(|_| DatasetError::Conll {
            line,
            message: "the same mention appears twice".into(),
        })?;
        Ok(ParsedConll { key: self.key, part: self.part, sentences: self.sentences, clusters })
    }
}

fn parse_begin(line: &str) -> Option<(String, u32)> {
    let rest = line.strip_prefix("#begin document")?.trim();
    let (key_part, part) = match rest.rsplit_once(';') {
        Some((k, p)) => (k.trim(), p.trim().strip_prefix("part")?.trim().parse().ok()?),
        None => (rest, 0),
    };
    let key = key_part.strip_prefix('(').and_then(|k| k.strip_suffix(')')).unwrap_or(key_part);
    Some((key.to_string(), part))
}

/// Read every document part of a CoNLL file.
pub fn from_conll(text: &str) -> Result<Vec<ParsedConll>, DatasetError> {
    let mut parts = Vec::new();
    let mut state: Option<PartState> = None;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim_end();
        if line.starts_with("#begin document") {
            if state.is_some() {
                return Err(DatasetError::Conll { line: line_no, message: "nested #begin document".into() });
            }
            let (key, part) = parse_begin(line)
                .ok_or_else(|| DatasetError::Conll { line: line_no, message: "malformed #begin line".into() })?;
            state = Some(PartState { key, part, ..Default::default() });
            continue;
        }
        if line.starts_with("#end document") {
            let s = state
                .take()
                .ok_or_else(|| DatasetError::Conll { line: line_no, message: "#end without #begin".into() })?;
            parts.push(s.finish(line_no)?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let Some(s) = state.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(DatasetError::Conll { line: line_no, message: "token row outside a document".into() });
        };
        if line.trim().is_empty() {
            s.end_sentence();
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 5 {
            return Err(DatasetError::Conll { line: line_no, message: "expected at least 5 columns".into() });
        }
        let sentence = s.sentences.len();
        let token = s.current.len();
        s.current.push(cols[3].to_string());
        for bracket in parse_cell(cols[cols.len() - 1], line_no)? {
            match bracket {
                Bracket::Single(n) => {
                    s.clusters.entry(n).or_default().push(TokenMention { sentence, start: token, end: token })
                }
                Bracket::Open(n) => s.open.entry(n).or_default().push((sentence, token)),
                Bracket::Close(n) => {
                    let (sent, start) = s.open.get_mut(&n).and_then(Vec::pop).ok_or_else(|| DatasetError::Conll {
                        line: line_no,
                        message: format!("cluster {n} closed but not open"),
                    })?;
                    if sent != sentence {
                        return Err(DatasetError::Conll {
                            line: line_no,
                            message: format!("cluster {n} mention crosses a sentence boundary"),
                        });
                    }
                    s.clusters.entry(n).or_default().push(TokenMention { sentence, start, end: token });
                }
            }
        }
    }
    if state.is_some() {
        return Err(DatasetError::Conll { line: last_line + 1, message: "missing #end document".into() });
    }
    Ok(parts)
}
