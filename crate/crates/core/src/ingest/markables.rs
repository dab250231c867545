use crate::model::{Markable, Section};
use crate::text::{word_tokens, TokenSpan};

use super::lexicon::PronounLexicon;

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Find every pronoun token of every section.
///
/// Multi-word lexicon entries match across whitespace-only gaps, longest
/// first. A token with an internal apostrophe that is not itself an entry
/// ("it's") yields a markable for its part before the apostrophe when that
/// part is an entry. Ids are `m0, m1, …` in (section, offset) order.
pub fn detect_markables(sections: &[Section], lexicon: &PronounLexicon) -> Vec<Markable> {
    let mut found: Vec<(usize, usize, usize, String, crate::model::PronounCategory)> = Vec::new();

    for section in sections {
        let chars: Vec<char> = section.text.chars().collect();
        let tokens = word_tokens(&chars);
        let slice = |s: usize, e: usize| chars[s..e].iter().collect::<String>();
        let whitespace_gap = |a: &TokenSpan, b: &TokenSpan| {
            b.start > a.end && chars[a.end..b.start].iter().all(|c| c.is_whitespace())
        };

        let mut i = 0;
        while i < tokens.len() {
            let mut matched = 0;
            for n in (1..=lexicon.max_words().min(tokens.len() - i)).rev() {
                let run = &tokens[i..i + n];
                if !run.windows(2).all(|w| whitespace_gap(&w[0], &w[1])) {
                    continue;
                }
                let surface = slice(run[0].start, run[n - 1].end);
                if let Some(category) = lexicon.lookup(&surface) {
                    found.push((section.index, run[0].start, run[n - 1].end, surface, category));
                    matched = n;
                    break;
                }
            }
            if matched == 0 {
                let tok = tokens[i];
                if let Some(cut) = chars[tok.start..tok.end].iter().position(|c| is_apostrophe(*c)) {
                    let surface = slice(tok.start, tok.start + cut);
                    if let Some(category) = lexicon.lookup(&surface) {
                        found.push((section.index, tok.start, tok.start + cut, surface, category));
                    }
                }
                matched = 1;
            }
            i += matched;
        }
    }

    found.sort_by_key(|f| (f.0, f.1));
    found
        .into_iter()
        .enumerate()
        .map(|(n, (section_index, start, end, surface, category))| Markable {
            id: format!("m{n}"),
            section_index,
            span: (start, end),
            surface,
            category,
        })
        .collect()
}
