//! Character-offset helpers and the two tokenizers used across the crate.
//!
//! All offsets in this crate count Unicode scalar values (Rust `char`s),
//! never bytes.

/// A token as a half-open character interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice `text` by character offsets. `None` if the interval is empty or
/// out of bounds.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start >= end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = indices.nth(end - start - 1)?;
    Some(&text[from..to])
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Word tokens for markable detection: maximal alphanumeric runs, where an
/// apostrophe between two alphanumerics stays inside the token ("one's").
pub fn word_tokens(chars: &[char]) -> Vec<TokenSpan> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            if is_word_char(chars[i]) {
                i += 1;
            } else if is_apostrophe(chars[i])
                && i + 1 < chars.len()
                && is_word_char(chars[i + 1])
            {
                i += 1;
            } else {
                break;
            }
        }
        out.push(TokenSpan { start, end: i });
    }
    out
}

/// Whitespace/punctuation tokenization used for CoNLL emission.
///
/// Alphanumeric runs form tokens, an apostrophe directly followed by
/// letters forms a clitic token ("'s"), and every other non-space
/// character is a token of its own. Every [`word_tokens`] token, and every
/// prefix of one ending before an apostrophe, is aligned to these
/// boundaries.
pub fn conll_tokens(chars: &[char]) -> Vec<TokenSpan> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if is_word_char(c) {
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
        } else if is_apostrophe(c) && i + 1 < chars.len() && is_word_char(chars[i + 1]) {
            i += 1;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
        } else {
            i += 1;
        }
        out.push(TokenSpan { start, end: i });
    }
    out
}

/// True when `[start, end)` neither starts nor ends inside an alphanumeric run.
pub fn is_token_bounded(chars: &[char], start: usize, end: usize) -> bool {
    let left_ok = start == 0 || !is_word_char(chars[start - 1]) || !is_word_char(chars[start]);
    let right_ok = end >= chars.len() || !is_word_char(chars[end]) || !is_word_char(chars[end - 1]);
    left_ok && right_ok
}
