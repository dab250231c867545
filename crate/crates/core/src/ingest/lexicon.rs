//! Pronoun lexicon loaded from a versioned tab-separated data file.
//!
//! Format: one `surface<TAB>category` entry per line; `#` starts a comment
//! line and `# version: N` declares the file version. Multi-word surfaces
//! ("each other") separate their words by single spaces.

use std::collections::HashMap;
use std::path::Path;

use crate::model::PronounCategory;

use super::IngestError;

const DEFAULT_LEXICON: &str = include_str!("../../data/pronouns.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub surface: String,
    pub category: PronounCategory,
}

#[derive(Debug, Clone)]
pub struct PronounLexicon {
    version: Option<String>,
    entries: Vec<LexiconEntry>,
    index: HashMap<String, PronounCategory>,
    max_words: usize,
}

/// Lowercase, fold typographic apostrophes, collapse whitespace.
pub fn normalize_surface(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(|w| w.to_lowercase().replace('\u{2019}', "'"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl PronounLexicon {
    pub fn parse(source: &str) -> Result<Self, IngestError> {
        let mut version = None;
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        let mut max_words = 1;

        for (lineno, line) in source.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = Some(v.trim().to_string());
                }
                continue;
            }
            let bad = |reason: String| IngestError::Lexicon { line: lineno + 1, reason };
            let (surface, category) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected surface<TAB>category".into()))?;
            let category: PronounCategory = category.trim().parse().map_err(bad)?;
            let surface = normalize_surface(surface);
            if surface.is_empty() {
                return Err(bad("empty surface".into()));
            }
            if index.insert(surface.clone(), category).is_some() {
                return Err(bad(format!("duplicate surface {surface:?}")));
            }
            max_words = max_words.max(surface.split(' ').count());
            entries.push(LexiconEntry { surface, category });
        }

        Ok(PronounLexicon { version, entries, index, max_words })
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let source = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&source)
    }

    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn lookup(&self, surface: &str) -> Option<PronounCategory> {
        self.index.get(&normalize_surface(surface)).copied()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.lookup(surface).is_some()
    }

    /// Longest entry, in words.
    pub fn max_words(&self) -> usize {
        self.max_words
    }
}

impl Default for PronounLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("shipped lexicon parses")
    }
}
