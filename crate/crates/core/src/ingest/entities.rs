//! Entity harvesting from anchor links.

use std::collections::HashMap;
use std::sync::LazyLock;

use percent_encoding::percent_decode_str;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::markup::{decode_entities, is_non_prose, lex, DropTracker, Token};
use crate::model::{Entity, Provenance};

/// Namespaces whose pages are not entities.
const NON_ARTICLE_NAMESPACES: &[&str] = &[
    "file", "image", "media", "category", "help", "special", "wikipedia", "template", "portal",
    "talk", "user", "user talk", "module", "mediawiki", "draft", "timedtext", "book", "project",
];

static WIKIDATA_ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^/(?:wiki|entity)/(Q[1-9][0-9]*)$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSkipReason {
    /// Undecodable or empty target.
    Malformed,
    /// A namespace page (File:, Category:, ...) or a non-item Wikidata page.
    NonArticle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLink {
    pub href: String,
    pub reason: LinkSkipReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum LinkKind {
    Wiki { title: String },
    Wikidata { item: String },
}

#[derive(Debug)]
enum Classified {
    Entity(LinkKind),
    Skip(LinkSkipReason),
    /// Not an entity link at all (external site, in-page anchor, edit link).
    Ignore,
}

fn classify(href: &str) -> Classified {
    let href = href.trim();
    let without_scheme = href
        .strip_prefix("https:")
        .or_else(|| href.strip_prefix("http:"))
        .unwrap_or(href);

    let (host, path) = if let Some(rest) = without_scheme.strip_prefix("//") {
        match rest.find('/') {
            Some(p) => (Some(rest[..p].to_ascii_lowercase()), &rest[p..]),
            None => (Some(rest.to_ascii_lowercase()), ""),
        }
    } else if without_scheme.len() != href.len() {
        return Classified::Ignore;
    } else {
        (None, href)
    };
    let path = path.split(['#', '?']).next().unwrap_or("");

    match host.as_deref() {
        Some(h) if h == "wikidata.org" || h.ends_with(".wikidata.org") => {
            return match WIKIDATA_ITEM.captures(path) {
                Some(c) => Classified::Entity(LinkKind::Wikidata { item: c[1].to_string() }),
                None => Classified::Skip(LinkSkipReason::NonArticle),
            };
        }
        Some(h) if h == "wikipedia.org" || h.ends_with(".wikipedia.org") => {}
        Some(_) => return Classified::Ignore,
        None => {}
    }

    let raw_title = if let Some(t) = path.strip_prefix("/wiki/") {
        t
    } else if let Some(t) = path.strip_prefix("./") {
        if host.is_some() {
            return Classified::Ignore;
        }
        t
    } else if path == "/wiki" || path == "/wiki/" {
        return Classified::Skip(LinkSkipReason::Malformed);
    } else {
        return Classified::Ignore;
    };

    let Ok(decoded) = percent_decode_str(raw_title).decode_utf8() else {
        return Classified::Skip(LinkSkipReason::Malformed);
    };
    let title = decoded.replace('_', " ");
    let title = title.split_whitespace().collect::<Vec<_>>().join(" ");
    if title.is_empty() || title.contains(['<', '>', '[', ']', '{', '}', '|']) {
        return Classified::Skip(LinkSkipReason::Malformed);
    }
    if let Some((ns, _)) = title.split_once(':') {
        if NON_ARTICLE_NAMESPACES.contains(&ns.trim().to_lowercase().as_str()) {
            return Classified::Skip(LinkSkipReason::NonArticle);
        }
    }
    Classified::Entity(LinkKind::Wiki { title })
}

/// Deduplication key: wiki titles compare with the first letter folded.
fn target_key(kind: &LinkKind) -> String {
    match kind {
        LinkKind::Wiki { title } => {
            let mut chars = title.chars();
            let first: String = chars.next().map(|c| c.to_uppercase().collect()).unwrap_or_default();
            format!("wiki:{first}{}", chars.as_str())
        }
        LinkKind::Wikidata { item } => format!("wikidata:{item}"),
    }
}

struct Anchor {
    href: String,
    text: String,
}

fn anchors(markup: &str) -> Vec<Anchor> {
    let mut out = Vec::new();
    let mut tracker = DropTracker::new(is_non_prose);
    // Set while inside an anchor: its href and accumulated text.
    let mut current: Option<(String, String)> = None;
    for token in lex(markup) {
        if tracker.skip(&token) {
            continue;
        }
        match &token {
            Token::Start { name, .. } if name == "a" => {
                if let Some((href, text)) = current.take() {
                    out.push(Anchor { href, text });
                }
                current = token.attr("href").map(|h| (h.to_string(), String::new()));
            }
            Token::End { name } if name == "a" => {
                if let Some((href, text)) = current.take() {
                    out.push(Anchor { href, text });
                }
            }
            Token::Text(t) => {
                if let Some((_, text)) = &mut current {
                    text.push_str(&decode_entities(t));
                }
            }
            _ => {}
        }
    }
    if let Some((href, text)) = current {
        out.push(Anchor { href, text });
    }
    out
}

/// Harvest one entity per distinct link target, with every anchor text
/// observed for that target as an alias. Links that cannot be turned into
/// entities are returned separately.
pub fn harvest_entities(markup: &str) -> (Vec<Entity>, Vec<SkippedLink>) {
    let mut entities: Vec<Entity> = Vec::new();
    let mut by_key: HashMap<String, usize> = HashMap::new();
    let mut skipped = Vec::new();

    for anchor in anchors(markup) {
        let kind = match classify(&anchor.href) {
            Classified::Entity(kind) => kind,
            Classified::Skip(reason) => {
                skipped.push(SkippedLink { href: anchor.href, reason });
                continue;
            }
            Classified::Ignore => continue,
        };
        let text = anchor.text.split_whitespace().collect::<Vec<_>>().join(" ");
        let key = target_key(&kind);
        let idx = *by_key.entry(key).or_insert_with(|| {
            let (canonical_name, provenance) = match &kind {
                LinkKind::Wiki { title } => (title.clone(), Provenance::Wikilink),
                LinkKind::Wikidata { item } => {
                    let name = if text.is_empty() { item.clone() } else { text.clone() };
                    (name, Provenance::Wikidata)
                }
            };
            entities.push(Entity {
                id: format!("e{}", entities.len()),
                aliases: vec![canonical_name.clone()],
                canonical_name,
                provenance,
                target: Some(anchor.href.trim().to_string()),
            });
            entities.len() - 1
        });
        let entity = &mut entities[idx];
        if !text.is_empty() && !entity.aliases.contains(&text) {
            entity.aliases.push(text);
        }
    }
    (entities, skipped)
}
