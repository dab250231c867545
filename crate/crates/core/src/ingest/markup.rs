//! A tolerant lexer for rendered wiki HTML, and markup stripping.

use std::sync::LazyLock;

use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token<'a> {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    End {
        name: String,
    },
    Text(&'a str),
    /// Comments, doctypes and processing instructions.
    Other,
}

impl Token<'_> {
    pub(crate) fn attr(&self, key: &str) -> Option<&str> {
        match self {
            Token::Start { attrs, .. } => attrs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str()),
            _ => None,
        }
    }
}

/// Split markup into tags and text. A `<` that does not begin a complete
/// tag is kept as text.
pub(crate) fn lex(input: &str) -> Vec<Token<'_>> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut text_start = 0;
    let mut i = 0;

    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let Some((token, end)) = lex_tag(input, i) else {
            i += 1;
            continue;
        };
        if text_start < i {
            tokens.push(Token::Text(&input[text_start..i]));
        }
        tokens.push(token);
        i = end;
        text_start = end;
    }
    if text_start < input.len() {
        tokens.push(Token::Text(&input[text_start..]));
    }
    tokens
}

/// Lex a tag starting at `start` (which holds `<`); returns the token and
/// the byte offset just past it.
fn lex_tag(input: &str, start: usize) -> Option<(Token<'_>, usize)> {
    let rest = &input[start..];
    if let Some(body) = rest.strip_prefix("<!--") {
        let end = body.find("-->").map(|p| start + 4 + p + 3).unwrap_or(input.len());
        return Some((Token::Other, end));
    }
    let bytes = rest.as_bytes();
    let next = *bytes.get(1)?;
    if next == b'!' || next == b'?' {
        let close = rest.find('>')?;
        return Some((Token::Other, start + close + 1));
    }
    let (is_end, name_start) = if next == b'/' { (true, 2) } else { (false, 1) };
    if !bytes.get(name_start)?.is_ascii_alphabetic() {
        return None;
    }
    let close = find_tag_close(rest)?;
    let inner = &rest[name_start..close];
    let name_len = inner
        .find(|c: char| c.is_whitespace() || c == '/')
        .unwrap_or(inner.len());
    let name = inner[..name_len].to_ascii_lowercase();
    let end = start + close + 1;
    if is_end {
        return Some((Token::End { name }, end));
    }
    let attr_src = &inner[name_len..];
    let self_closing = attr_src.trim_end().ends_with('/');
    Some((
        Token::Start { name, attrs: parse_attrs(attr_src), self_closing },
        end,
    ))
}

/// Byte offset of the `>` closing the tag, skipping quoted attribute values.
fn find_tag_close(tag: &str) -> Option<usize> {
    let mut quote: Option<u8> = None;
    for (i, b) in tag.bytes().enumerate().skip(1) {
        match (quote, b) {
            (Some(q), _) if b == q => quote = None,
            (Some(_), _) => {}
            (None, b'"' | b'\'') => quote = Some(b),
            (None, b'<') => return None,
            (None, b'>') => return Some(i),
            _ => {}
        }
    }
    None
}

fn parse_attrs(src: &str) -> Vec<(String, String)> {
    let mut attrs = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        while i < chars.len() && (chars[i].is_whitespace() || chars[i] == '/') {
            i += 1;
        }
        let key_start = i;
        while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '=' && chars[i] != '/' {
            i += 1;
        }
        if key_start == i {
            i += 1;
            continue;
        }
        let key: String = chars[key_start..i].iter().collect::<String>().to_ascii_lowercase();
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < chars.len() && chars[i] == '=' {
            i += 1;
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            if i < chars.len() && (chars[i] == '"' || chars[i] == '\'') {
                let q = chars[i];
                i += 1;
                let v_start = i;
                while i < chars.len() && chars[i] != q {
                    i += 1;
                }
                value = chars[v_start..i].iter().collect();
                i += 1;
            } else {
                let v_start = i;
                while i < chars.len() && !chars[i].is_whitespace() {
                    i += 1;
                }
                value = chars[v_start..i].iter().collect();
            }
        }
        attrs.push((key, decode_entities(&value)));
    }
    attrs
}

/// Decode the character references that occur in rendered wiki pages.
pub(crate) fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let decoded = after
            .find(';')
            .filter(|&semi| semi > 0 && semi <= 10)
            .and_then(|semi| decode_reference(&after[..semi]).map(|c| (c, semi)));
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &after[semi + 1..];
            }
            None => {
                out.push('&');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_reference(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        return char::from_u32(code).filter(|c| *c != '\0');
    }
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        "ndash" => '\u{2013}',
        "mdash" => '\u{2014}',
        "hellip" => '\u{2026}',
        "lsquo" => '\u{2018}',
        "rsquo" => '\u{2019}',
        "ldquo" => '\u{201C}',
        "rdquo" => '\u{201D}',
        "middot" => '\u{00B7}',
        _ => return None,
    })
}

/// Elements whose entire content is dropped: lists, tables, references and
/// non-prose containers.
const DROPPED_ELEMENTS: &[&str] = &[
    "ul", "ol", "dl", "li", "dt", "dd", "table", "ref", "references", "style", "script",
    "noscript", "math", "head", "title",
];

/// Any element carrying one of these classes is dropped with its content.
const DROPPED_CLASSES: &[&str] = &["reference", "mw-editsection", "hatnote", "navbox", "noprint"];

/// Elements that separate paragraphs.
const BLOCK_ELEMENTS: &[&str] = &[
    "p", "div", "br", "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "section", "hr", "pre",
    "tr", "center", "figure", "body", "html",
];

const VOID_ELEMENTS: &[&str] = &[
    "br", "hr", "img", "meta", "link", "input", "wbr", "area", "base", "col", "source",
];

/// Elements that are never prose, not even for entity harvesting.
const NON_PROSE_ELEMENTS: &[&str] = &["ref", "references", "style", "script", "noscript", "math", "head", "title"];

fn has_dropped_class(token: &Token<'_>) -> bool {
    token
        .attr("class")
        .is_some_and(|class| class.split_whitespace().any(|c| DROPPED_CLASSES.contains(&c)))
}

/// Start tags whose element is removed by [`strip_markup`].
pub(crate) fn is_dropped(token: &Token<'_>) -> bool {
    match token {
        Token::Start { name, .. } => {
            DROPPED_ELEMENTS.contains(&name.as_str()) || has_dropped_class(token)
        }
        _ => false,
    }
}

/// Start tags of citation and non-prose regions, which are dropped even
/// where lists and tables are kept.
pub(crate) fn is_non_prose(token: &Token<'_>) -> bool {
    match token {
        Token::Start { name, .. } => {
            NON_PROSE_ELEMENTS.contains(&name.as_str()) || has_dropped_class(token)
        }
        _ => false,
    }
}

/// Walks a token stream and reports whether each token sits inside a
/// dropped element.
pub(crate) struct DropTracker {
    opens_region: fn(&Token<'_>) -> bool,
    /// Name of the outermost dropped element and its nesting depth.
    open: Option<(String, usize)>,
}

impl DropTracker {
    pub(crate) fn new(opens_region: fn(&Token<'_>) -> bool) -> Self {
        DropTracker { opens_region, open: None }
    }

    /// Feed the next token; returns true when it must be ignored.
    pub(crate) fn skip(&mut self, token: &Token<'_>) -> bool {
        if let Some((root, depth)) = &mut self.open {
            match token {
                Token::Start { name, self_closing, .. }
                    if name == root && !*self_closing && !VOID_ELEMENTS.contains(&name.as_str()) =>
                {
                    *depth += 1
                }
                Token::End { name } if name == root => {
                    *depth -= 1;
                    if *depth == 0 {
                        self.open = None;
                    }
                }
                _ => {}
            }
            return true;
        }
        if (self.opens_region)(token) {
            if let Token::Start { name, self_closing, .. } = token {
                if !*self_closing && !VOID_ELEMENTS.contains(&name.as_str()) {
                    self.open = Some((name.clone(), 1));
                }
            }
            return true;
        }
        false
    }
}

static REFERENCE_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[(?:\d+|[a-z]{1,2}|(?:note|nb|n) ?\d+|citation needed|clarification needed)\]")
        .unwrap()
});

/// One stripping pass. [`strip_markup`] iterates this to a fixed point.
fn strip_once(markup: &str) -> String {
    let mut raw = String::with_capacity(markup.len());
    let mut tracker = DropTracker::new(is_dropped);
    for token in lex(markup) {
        if tracker.skip(&token) {
            continue;
        }
        match &token {
            Token::Text(t) => raw.push_str(&decode_entities(t)),
            Token::Start { name, .. } | Token::End { name } => {
                if BLOCK_ELEMENTS.contains(&name.as_str()) {
                    raw.push('\n');
                }
            }
            Token::Other => {}
        }
    }

    let mut text = raw;
    loop {
        let next = REFERENCE_MARKER.replace_all(&text, "").into_owned();
        if next == text {
            break;
        }
        text = next;
    }

    text.split('\n')
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Remove tags, reference markers, lists and tables from rendered markup.
///
/// Anchor text stays in place. Whitespace inside a paragraph collapses to
/// single spaces and paragraphs are separated by one newline. The result
/// is a fixed point: stripping it again returns it unchanged.
pub fn strip_markup(markup: &str) -> String {
    let mut current = strip_once(markup);
    // Every pass that changes the text shortens it, so this terminates.
    loop {
        let next = strip_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

static WIKITEXT_HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*==+[^=\n]+==+[ \t]*$").unwrap());

/// Byte offset where the first section heading starts, if any. Headings
/// inside dropped elements do not count.
pub(crate) fn first_heading(markup: &str) -> Option<usize> {
    let mut tracker = DropTracker::new(is_dropped);
    let mut offset = 0;
    let mut html_heading = None;
    for token in lex(markup) {
        let len = token_len(markup, offset, &token);
        if !tracker.skip(&token) {
            if let Token::Start { name, .. } = &token {
                if matches!(name.as_str(), "h1" | "h2" | "h3" | "h4" | "h5" | "h6") {
                    html_heading = Some(offset);
                    break;
                }
            }
        }
        offset += len;
    }
    let wikitext_heading = WIKITEXT_HEADING.find(markup).map(|m| m.start());
    match (html_heading, wikitext_heading) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Length in bytes of the source text a token was lexed from.
fn token_len(markup: &str, offset: usize, token: &Token<'_>) -> usize {
    match token {
        Token::Text(t) => t.len(),
        _ => lex_tag(markup, offset).map(|(_, end)| end - offset).unwrap_or(1),
    }
}
