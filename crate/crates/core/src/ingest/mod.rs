//! Turning raw wiki pages and QuAC-style records into annotation-ready
//! documents.
//!
//! Pages are rendered HTML with anchor links (`href="/wiki/…"` or
//! wikidata.org item URLs). A wiki page yields one summary section (its
//! lead, before the first heading); a QuAC record yields a context section
//! followed by alternating question and answer sections, with entities
//! harvested from the originating wiki page because QuAC text carries no
//! links. Markables are the pronouns of the lexicon. A document is admitted
//! when its summary or context holds at least [`MIN_PRONOUNS`] markables.

pub mod entities;
pub mod lexicon;
pub mod markables;
pub(crate) mod markup;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Document, Entity, Section, SectionKind, Source};

pub use entities::{harvest_entities, LinkSkipReason, SkippedLink};
pub use lexicon::PronounLexicon;
pub use markables::detect_markables;
pub use markup::strip_markup;

/// Admission threshold on summary/context pronouns.
pub const MIN_PRONOUNS: usize = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("page {page_id} has no lead paragraphs")]
    NoSummary { page_id: String },
    #[error("record {record_id}: companion wiki page {page_id:?} not found")]
    MissingCompanion { record_id: String, page_id: String },
    #[error("lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub page_id: String,
    pub title: String,
    pub markup: String,
    pub kind: Source,
    /// For QuAC pages: id of the originating wiki page.
    #[serde(default)]
    pub companion: Option<String>,
}

impl RawPage {
    pub fn wiki(page_id: impl Into<String>, title: impl Into<String>, markup: impl Into<String>) -> Self {
        RawPage {
            page_id: page_id.into(),
            title: title.into(),
            markup: markup.into(),
            kind: Source::Wiki,
            companion: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    pub answer: String,
}

/// One QuAC dialogue: a context paragraph plus ordered QA pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuacRecord {
    pub id: String,
    pub title: String,
    pub wiki_page_id: String,
    pub context: String,
    pub qas: Vec<QaPair>,
}

/// Which sections of a QuAC document receive markables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkableScope {
    #[default]
    AllSections,
    /// Only the context paragraph; questions and answers stay unmarked.
    ContextOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    EmptyMarkup,
    NoSummary,
    TooFewPronouns,
    MissingCompanionPage,
    DuplicateId,
    MalformedLink,
    NonArticleLink,
}

impl SkipReason {
    /// Link problems are reported but never cost the page.
    pub fn is_fatal(self) -> bool {
        !matches!(self, SkipReason::MalformedLink | SkipReason::NonArticleLink)
    }
}

/// One line of the ingest report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub page_id: String,
    pub reason: SkipReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub entries: Vec<ReportEntry>,
}

impl IngestReport {
    fn push(&mut self, page_id: &str, reason: SkipReason, detail: Option<String>) {
        self.entries.push(ReportEntry { page_id: page_id.to_string(), reason, detail });
    }

    pub fn count(&self, reason: SkipReason) -> usize {
        self.entries.iter().filter(|e| e.reason == reason).count()
    }

    fn record_links(&mut self, page_id: &str, skipped: Vec<SkippedLink>) {
        for link in skipped {
            let reason = match link.reason {
                LinkSkipReason::Malformed => SkipReason::MalformedLink,
                LinkSkipReason::NonArticle => SkipReason::NonArticleLink,
            };
            self.push(page_id, reason, Some(link.href));
        }
    }
}

/// The lead of a wiki page (everything before the first heading) as a
/// summary section, or `None` when the page has no lead text.
pub fn extract_summary(page: &RawPage) -> Option<Section> {
    let lead = match markup::first_heading(&page.markup) {
        Some(offset) => &page.markup[..offset],
        None => page.markup.as_str(),
    };
    let text = strip_markup(lead);
    (!text.is_empty()).then_some(Section { index: 0, kind: SectionKind::Summary, text })
}

/// Entities linked from anywhere on the page; see [`harvest_entities`] for
/// the links that are skipped.
pub fn extract_entities(page: &RawPage) -> Vec<Entity> {
    harvest_entities(&page.markup).0
}

/// True when the summary or context sections hold at least five markables.
/// Question and answer pronouns do not count.
pub fn admit_document(doc: &Document) -> bool {
    let primary = doc
        .markables
        .iter()
        .filter(|m| doc.section(m.section_index).is_some_and(|s| s.kind.is_primary()))
        .count();
    primary >= MIN_PRONOUNS
}

/// Build a summary document from a wiki page. Fails when the page has no
/// lead paragraphs.
pub fn build_wiki_document(page: &RawPage, lexicon: &PronounLexicon) -> Result<Document, IngestError> {
    build_wiki_with_report(page, lexicon, &mut IngestReport::default())
}

fn build_wiki_with_report(
    page: &RawPage,
    lexicon: &PronounLexicon,
    report: &mut IngestReport,
) -> Result<Document, IngestError> {
    let summary = extract_summary(page)
        .ok_or_else(|| IngestError::NoSummary { page_id: page.page_id.clone() })?;
    let (entities, skipped) = harvest_entities(&page.markup);
    report.record_links(&page.page_id, skipped);
    let sections = vec![summary];
    let markables = detect_markables(&sections, lexicon);
    Ok(Document {
        id: page.page_id.clone(),
        source: Source::Wiki,
        title: page.title.clone(),
        sections,
        markables,
        entities,
    })
}

/// Build a QuAC document: sections `[context, q1, a1, q2, a2, …]`, entities
/// from the companion wiki page, markables over every section.
pub fn build_quac_document(
    record: &QuacRecord,
    wiki_page: Option<&RawPage>,
    lexicon: &PronounLexicon,
) -> Result<Document, IngestError> {
    build_quac_with_report(record, wiki_page, lexicon, MarkableScope::AllSections, &mut IngestReport::default())
}

pub fn build_quac_document_scoped(
    record: &QuacRecord,
    wiki_page: Option<&RawPage>,
    lexicon: &PronounLexicon,
    scope: MarkableScope,
) -> Result<Document, IngestError> {
    build_quac_with_report(record, wiki_page, lexicon, scope, &mut IngestReport::default())
}

fn build_quac_with_report(
    record: &QuacRecord,
    wiki_page: Option<&RawPage>,
    lexicon: &PronounLexicon,
    scope: MarkableScope,
    report: &mut IngestReport,
) -> Result<Document, IngestError> {
    let page = wiki_page.ok_or_else(|| IngestError::MissingCompanion {
        record_id: record.id.clone(),
        page_id: record.wiki_page_id.clone(),
    })?;

    let mut sections = vec![Section {
        index: 0,
        kind: SectionKind::Context,
        text: strip_markup(&record.context),
    }];
    for qa in &record.qas {
        for (kind, text) in [(SectionKind::Question, &qa.question), (SectionKind::Answer, &qa.answer)] {
            sections.push(Section { index: sections.len(), kind, text: strip_markup(text) });
        }
    }

    let markables = match scope {
        MarkableScope::AllSections => detect_markables(&sections, lexicon),
        MarkableScope::ContextOnly => detect_markables(&sections[..1], lexicon),
    };
    let (entities, skipped) = harvest_entities(&page.markup);
    report.record_links(&record.id, skipped);

    Ok(Document {
        id: record.id.clone(),
        source: Source::Quac,
        title: record.title.clone(),
        sections,
        markables,
        entities,
    })
}

/// Ingest wiki pages, keeping the admitted documents. Every page that is
/// dropped, and every link that was skipped, is listed in the report.
pub fn ingest_wiki(pages: &[RawPage], lexicon: &PronounLexicon) -> (Vec<Document>, IngestReport) {
    let mut report = IngestReport::default();
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for page in pages.iter().filter(|p| p.kind == Source::Wiki) {
        if !seen.insert(page.page_id.as_str()) {
            report.push(&page.page_id, SkipReason::DuplicateId, None);
            continue;
        }
        if page.markup.trim().is_empty() {
            report.push(&page.page_id, SkipReason::EmptyMarkup, None);
            continue;
        }
        match build_wiki_with_report(page, lexicon, &mut report) {
            Ok(doc) if admit_document(&doc) => docs.push(doc),
            Ok(doc) => report.push(
                &page.page_id,
                SkipReason::TooFewPronouns,
                Some(format!("{} pronouns", doc.markables.len())),
            ),
            Err(_) => report.push(&page.page_id, SkipReason::NoSummary, None),
        }
    }
    (docs, report)
}

/// Ingest QuAC records against their companion wiki pages.
pub fn ingest_quac(
    records: &[QuacRecord],
    pages: &[RawPage],
    lexicon: &PronounLexicon,
    scope: MarkableScope,
) -> (Vec<Document>, IngestReport) {
    let by_id: HashMap<&str, &RawPage> = pages.iter().map(|p| (p.page_id.as_str(), p)).collect();
    let mut report = IngestReport::default();
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in records {
        if !seen.insert(record.id.as_str()) {
            report.push(&record.id, SkipReason::DuplicateId, None);
            continue;
        }
        let page = by_id.get(record.wiki_page_id.as_str()).copied();
        match build_quac_with_report(record, page, lexicon, scope, &mut report) {
            Ok(doc) if admit_document(&doc) => docs.push(doc),
            Ok(doc) => {
                let primary = doc.markables.iter().filter(|m| m.section_index == 0).count();
                report.push(&record.id, SkipReason::TooFewPronouns, Some(format!("{primary} pronouns")))
            }
            Err(_) => report.push(
                &record.id,
                SkipReason::MissingCompanionPage,
                Some(record.wiki_page_id.clone()),
            ),
        }
    }
    (docs, report)
}

/// Read every page of a directory, sorted by file name. `*.json` files hold
/// a serialized [`RawPage`]; `*.html` files are wiki pages whose id is the
/// file stem and whose title comes from `<title>` or the stem.
pub fn load_pages(dir: &Path) -> Result<Vec<RawPage>, IngestError> {
    let io_err = |path: &Path, source| IngestError::Io { path: path.display().to_string(), source };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let mut pages = Vec::new();
    for path in paths {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !matches!(ext, "json" | "html" | "htm") {
            continue;
        }
        let content = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        if ext == "json" {
            let page = serde_json::from_str(&content).map_err(|source| IngestError::Json {
                path: path.display().to_string(),
                source,
            })?;
            pages.push(page);
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let title = html_title(&content).unwrap_or_else(|| stem.replace('_', " "));
        pages.push(RawPage::wiki(stem, title, content));
    }
    Ok(pages)
}

fn html_title(markup: &str) -> Option<String> {
    let tokens = markup::lex(markup);
    let start = tokens
        .iter()
        .position(|t| matches!(t, markup::Token::Start { name, .. } if name == "title"))?;
    match tokens.get(start + 1) {
        Some(markup::Token::Text(t)) => {
            let title = strip_markup(t);
            (!title.is_empty()).then_some(title)
        }
        _ => None,
    }
}

/// Read QuAC records from a JSON array or from JSON lines.
pub fn load_quac_records(path: &Path) -> Result<Vec<QuacRecord>, IngestError> {
    let content = std::fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    let json_err = |source| IngestError::Json { path: path.display().to_string(), source };
    if content.trim_start().starts_with('[') {
        return serde_json::from_str(&content).map_err(json_err);
    }
    content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(json_err))
        .collect()
}
