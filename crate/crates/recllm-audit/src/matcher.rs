//! Parse free-text model output into candidate titles and resolve each to a
//! catalog item via gestalt (Ratcliff/Obershelp) fuzzy matching.
//!
//! Rules-mode parsing extracts, in order of precedence per line: numbered
//! entries (`1.`, `1)`, `Recommendation 1:`), quoted titles, a
//! trailing-`(YYYY)` title heuristic for prose, and `Song by Artist` pairs
//! in the music domain. The LLM-assisted mode first asks a model to
//! restructure the text, then applies the same rules to the reply.
//!
//! Matching normalizes both sides (casefold, punctuation to spaces except
//! parentheses, apostrophes dropped, trailing "(YYYY)" stripped, trailing
//! ", The/A/An" moved to the front) and takes the catalog argmax of the
//! gestalt ratio, ties broken by ascending item id. A candidate is matched
//! only when its best score reaches the threshold.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, DomainTag, ItemId, UserId};
use crate::llmclient::{CompletionParams, LlmClient, LlmError};
use crate::promptgen::{PromptBundle, Provenance};

/// Default acceptance threshold for the combined similarity score.
pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, thiserror::Error)]
pub enum MatcherError {
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("llm-assisted parsing requires a configured client")]
    MissingClient,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// One candidate extracted from raw output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedCandidate {
    pub title: String,
    pub artist: Option<String>,
    pub source_line: String,
    /// 1-based position in the output.
    pub rank: usize,
}

/// Outcome of matching one candidate against the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub candidate: ParsedCandidate,
    pub item_id: Option<ItemId>,
    pub score: f64,
    pub matched: bool,
}

/// Ranked catalog items resolved from one raw output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user_id: UserId,
    /// Matched ids in rank order, first occurrence wins.
    pub item_ids: Vec<ItemId>,
    pub unmatched: Vec<MatchResult>,
    /// Matched candidates dropped because their item was already listed.
    pub duplicates: Vec<MatchResult>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Rules,
    LlmAssisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolveOptions {
    pub domain: DomainTag,
    pub mode: ParseMode,
    pub threshold: f64,
}

// ---------------------------------------------------------------------------
// Gestalt similarity
// ---------------------------------------------------------------------------

/// Ratcliff/Obershelp ratio 2M/T, with M the total length of matched
/// characters found by recursively locating longest common substrings on
/// both sides of each match. Two empty strings are defined as 1.0.
pub fn similarity_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut b2j: HashMap<char, Vec<usize>> = HashMap::new();
    for (j, &c) in b.iter().enumerate() {
        b2j.entry(c).or_default().push(j);
    }
    let m = matched_total(&a, &b2j, 0, a.len(), 0, b.len());
    2.0 * m as f64 / (a.len() + b.len()) as f64
}

fn matched_total(
    a: &[char],
    b2j: &HashMap<char, Vec<usize>>,
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
) -> usize {
    let (i, j, size) = longest_match(a, b2j, alo, ahi, blo, bhi);
    if size == 0 {
        return 0;
    }
    size + matched_total(a, b2j, alo, i, blo, j)
        + matched_total(a, b2j, i + size, ahi, j + size, bhi)
}

/// Leftmost-longest common substring inside the window, the earliest block
/// in (i, j) scan order winning ties.
fn longest_match(
    a: &[char],
    b2j: &HashMap<char, Vec<usize>>,
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
) -> (usize, usize, usize) {
    let (mut besti, mut bestj, mut bestsize) = (alo, blo, 0usize);
    let mut j2len: HashMap<usize, usize> = HashMap::new();
    for (i, &ch) in a.iter().enumerate().take(ahi).skip(alo) {
        let mut new_j2len: HashMap<usize, usize> = HashMap::new();
        if let Some(js) = b2j.get(&ch) {
            for &j in js {
                if j < blo {
                    continue;
                }
                if j >= bhi {
                    break;
                }
                let k = j
                    .checked_sub(1)
                    .and_then(|prev| j2len.get(&prev).copied())
                    .unwrap_or(0)
                    + 1;
                new_j2len.insert(j, k);
                if k > bestsize {
                    besti = i + 1 - k;
                    bestj = j + 1 - k;
                    bestsize = k;
                }
            }
        }
        j2len = new_j2len;
    }
    (besti, bestj, bestsize)
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

fn year_suffix_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\s*\((?:18|19|20)\d{2}\)\s*$").unwrap())
}

fn article_suffix_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // the suffixed article may precede trailing parentheticals (a.k.a. forms)
    RE.get_or_init(|| Regex::new(r"(?i)^(.+),\s+(the|an|a)((?:\s*\([^)]*\))*)$").unwrap())
}

/// Normalize a title for similarity comparison.
pub fn normalize_title(raw: &str) -> String {
    let mut s = raw.trim().to_string();
    s = year_suffix_re().replace(&s, "").to_string();
    if let Some(caps) = article_suffix_re().captures(&s) {
        s = format!("{} {}{}", &caps[2], &caps[1], &caps[3]);
    }
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c == '\'' || c == '\u{2019}' {
            continue;
        }
        if c.is_alphanumeric() || c == '(' || c == ')' {
            out.extend(c.to_lowercase());
        } else {
            out.push(' ');
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn numbered_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^\s*(?:recommendation\s+)?(\d{1,3})\s*[.):-]\s+(.+)$").unwrap()
    })
}

fn quoted_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""([^"]{2,})""#).unwrap())
}

fn year_anywhere_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\((?:18|19|20)\d{2}\)").unwrap())
}

fn genres_paren_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\s*\(genres?:[^)]*\)").unwrap())
}

fn genre_clause_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\s+in genre\(s\).*$").unwrap())
}

fn rating_clause_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\s+with rating.*$").unwrap())
}

fn trailing_by_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*by\s+(.+)$").unwrap())
}

/// Lowercase words allowed inside a title when walking back from "(YYYY)".
const TITLE_STOPWORDS: &[&str] = &[
    "a", "an", "and", "at", "by", "de", "des", "du", "el", "for", "from", "il", "in", "la", "le",
    "les", "of", "on", "the", "to", "vs", "with",
];

/// Extract candidate (title[, artist]) pairs from raw model output.
///
/// An empty result is the empty-parse signal; the caller records the list
/// as fully unmatched rather than failing.
pub fn parse_recommendations(text: &str, domain: DomainTag) -> Vec<ParsedCandidate> {
    let mut out: Vec<ParsedCandidate> = Vec::new();
    for raw_line in text.lines() {
        let line = preclean_line(raw_line);
        if line.is_empty() {
            continue;
        }
        let extracted = if let Some(caps) = numbered_re().captures(&line) {
            extract_from_content(&caps[2], domain)
        } else if quoted_re().is_match(&line) {
            extract_from_content(&line, domain)
        } else if let Some(title) = year_walkback(&line) {
            Some((title, None))
        } else if domain == DomainTag::Music {
            bare_music_pair(&line)
        } else {
            None
        };
        if let Some((title, artist)) = extracted {
            if title.len() >= 2 {
                out.push(ParsedCandidate {
                    title,
                    artist,
                    source_line: raw_line.to_string(),
                    rank: out.len() + 1,
                });
            }
        }
    }
    out
}

fn preclean_line(raw: &str) -> String {
    let mut line = raw.trim().to_string();
    line = line.replace("**", "");
    line = line.replace(['\u{201c}', '\u{201d}'], "\"");
    for bullet in ["- ", "* ", "\u{2022} "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            line = rest.trim_start().to_string();
            break;
        }
    }
    line
}

/// Pull a (title, artist) pair out of the content after a numbering marker,
/// or out of a quote-bearing line.
fn extract_from_content(content: &str, domain: DomainTag) -> Option<(String, Option<String>)> {
    if let Some(caps) = quoted_re().captures(content) {
        let title = cleanup_title(&caps[1]);
        let after = &content[caps.get(0).unwrap().end()..];
        let artist = if domain == DomainTag::Music {
            trailing_by_re()
                .captures(after)
                .map(|c| cleanup_title(&c[1]))
                .filter(|a| !a.is_empty())
        } else {
            None
        };
        if title.is_empty() {
            return None;
        }
        return Some((title, artist));
    }
    let cleaned = strip_annotations(content);
    if domain == DomainTag::Music {
        if let Some((track, artist)) = cleaned.rsplit_once(" by ") {
            let track = cleanup_title(track);
            let artist = cleanup_title(artist);
            if !track.is_empty() && !artist.is_empty() {
                return Some((track, Some(artist)));
            }
        }
    }
    let title = cleanup_title(&cleaned);
    if title.is_empty() {
        None
    } else {
        Some((title, None))
    }
}

/// Prose fallback: locate the first "(YYYY)" and walk back over capitalized
/// or title-stopword tokens to recover the phrase that names the item.
fn year_walkback(line: &str) -> Option<String> {
    let m = year_anywhere_re().find(line)?;
    let before = &line[..m.start()];
    let mut picked: Vec<&str> = Vec::new();
    for word in before.split_whitespace().rev() {
        let clean = word.trim_matches(|c: char| "\"'`,.;:!?*".contains(c));
        if clean.is_empty() {
            break;
        }
        let first = clean.chars().next().unwrap();
        let allowed = first.is_uppercase()
            || first.is_numeric()
            || TITLE_STOPWORDS.contains(&clean.to_lowercase().as_str());
        if !allowed {
            break;
        }
        picked.push(clean);
        if word.starts_with('"') || word.starts_with('\u{201c}') {
            break;
        }
    }
    if picked.is_empty() {
        return None;
    }
    picked.reverse();
    let title = cleanup_title(&format!("{} {}", picked.join(" "), m.as_str()));
    if title.is_empty() {
        None
    } else {
        Some(title)
    }
}

/// A short unquoted `Song by Artist` line in the music domain.
fn bare_music_pair(line: &str) -> Option<(String, Option<String>)> {
    if line.split_whitespace().count() > 12 {
        return None;
    }
    let cleaned = strip_annotations(line);
    let (track, artist) = cleaned.rsplit_once(" by ")?;
    let track = cleanup_title(track);
    let artist = cleanup_title(artist);
    if track.is_empty() || artist.is_empty() {
        None
    } else {
        Some((track, Some(artist)))
    }
}

fn strip_annotations(s: &str) -> String {
    let s = genres_paren_re().replace_all(s, "");
    let s = genre_clause_re().replace(&s, "");
    rating_clause_re().replace(&s, "").to_string()
}

fn cleanup_title(s: &str) -> String {
    let mut t = strip_annotations(s);
    // keep everything through a year group; otherwise cut dash commentary
    if let Some(m) = year_anywhere_re().find(&t) {
        t.truncate(m.end());
    } else if let Some(pos) = t
        .find(" - ")
        .or_else(|| t.find(" \u{2013} "))
        .or_else(|| t.find(" \u{2014} "))
    {
        t.truncate(pos);
    }
    t.trim_matches(|c: char| c.is_whitespace() || "\"'`.,;:!-".contains(c))
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// LLM-assisted parsing
// ---------------------------------------------------------------------------

const PARSE_SYSTEM: &str = "You convert free-form recommendation text into a structured list.";

/// The restructuring prompt sent in llm-assisted mode.
pub fn parsing_bundle(raw_output: &str, domain: DomainTag) -> PromptBundle {
    let user_message = match domain {
        DomainTag::Movies => format!(
            "Extract every movie recommended in the text below. Reply with one \
             recommendation per line, each formatted as \"Title (Year)\" in double quotes, \
             and nothing else.\n\nText:\n{raw_output}"
        ),
        DomainTag::Music => format!(
            "Extract every song recommended in the text below. Reply with one \
             recommendation per line, each formatted as Song Name by Artist, \
             and nothing else.\n\nText:\n{raw_output}"
        ),
    };
    PromptBundle {
        system_message: Some(PARSE_SYSTEM.to_string()),
        user_message,
        provenance: Provenance::Parsing { domain },
    }
}

/// Restructure `text` through the client, then apply rules-mode parsing to
/// the reply.
pub fn parse_with_llm(
    text: &str,
    domain: DomainTag,
    client: &LlmClient,
    params: &CompletionParams,
) -> Result<Vec<ParsedCandidate>, MatcherError> {
    let bundle = parsing_bundle(text, domain);
    let response = client.complete(&bundle, params)?;
    Ok(parse_recommendations(&response.text, domain))
}

// ---------------------------------------------------------------------------
// Catalog matching
// ---------------------------------------------------------------------------

/// Catalog with precomputed normalized titles/artists, entries in ascending
/// item-id order so the strict-argmax scan breaks ties toward the lowest id.
///
/// Matching prunes with two cheap upper bounds on the gestalt ratio before
/// the full recursion: the length bound 2*min(|a|,|b|)/(|a|+|b|) and the
/// character-multiset bound. Both are true upper bounds, so the argmax and
/// the reported best score are identical to a full scan.
pub struct CatalogIndex<'a> {
    catalog: &'a Catalog,
    entries: Vec<IndexEntry>,
    /// Lowest-id entry per normalized title: a hit is a provable argmax,
    /// since a ratio of 1.0 requires identical normalized strings.
    by_norm_title: HashMap<String, usize>,
    /// Lowest-id entry per normalized (title, artist) pair.
    by_norm_pair: HashMap<(String, String), usize>,
}

struct IndexEntry {
    pos: usize,
    id: ItemId,
    norm_title: String,
    title_chars: CharCounts,
    norm_artist: String,
    artist_chars: CharCounts,
}

#[derive(Debug, Clone, Default)]
struct CharCounts {
    len: usize,
    counts: HashMap<char, u32>,
}

impl CharCounts {
    fn of(s: &str) -> Self {
        let mut counts: HashMap<char, u32> = HashMap::new();
        let mut len = 0;
        for c in s.chars() {
            *counts.entry(c).or_insert(0) += 1;
            len += 1;
        }
        CharCounts { len, counts }
    }

    /// 2*min(|a|,|b|) / (|a|+|b|): the ratio can never exceed this.
    fn length_bound(&self, other: &CharCounts) -> f64 {
        if self.len + other.len == 0 {
            return 1.0;
        }
        2.0 * self.len.min(other.len) as f64 / (self.len + other.len) as f64
    }

    /// 2*sum_c min(count_a(c), count_b(c)) / (|a|+|b|): matched characters
    /// cannot exceed the multiset intersection.
    fn multiset_bound(&self, other: &CharCounts) -> f64 {
        if self.len + other.len == 0 {
            return 1.0;
        }
        let overlap: u32 = self
            .counts
            .iter()
            .map(|(c, &n)| n.min(other.counts.get(c).copied().unwrap_or(0)))
            .sum();
        2.0 * overlap as f64 / (self.len + other.len) as f64
    }
}

impl<'a> CatalogIndex<'a> {
    pub fn build(catalog: &'a Catalog) -> Result<Self, MatcherError> {
        if catalog.is_empty() {
            return Err(MatcherError::EmptyCatalog);
        }
        let mut entries: Vec<IndexEntry> = catalog
            .items()
            .iter()
            .enumerate()
            .map(|(pos, item)| {
                let norm_title = normalize_title(&item.title);
                let norm_artist = item
                    .artist
                    .as_deref()
                    .map(normalize_title)
                    .unwrap_or_default();
                IndexEntry {
                    pos,
                    id: item.id.clone(),
                    title_chars: CharCounts::of(&norm_title),
                    artist_chars: CharCounts::of(&norm_artist),
                    norm_title,
                    norm_artist,
                }
            })
            .collect();
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_norm_title = HashMap::new();
        let mut by_norm_pair = HashMap::new();
        for (idx, entry) in entries.iter().enumerate() {
            by_norm_title.entry(entry.norm_title.clone()).or_insert(idx);
            by_norm_pair
                .entry((entry.norm_title.clone(), entry.norm_artist.clone()))
                .or_insert(idx);
        }
        Ok(CatalogIndex {
            catalog,
            entries,
            by_norm_title,
            by_norm_pair,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        self.catalog
    }

    /// Argmax similarity over the catalog; matched iff score >= threshold.
    pub fn find_closest(
        &self,
        candidate: &ParsedCandidate,
        domain: DomainTag,
        threshold: f64,
    ) -> Result<MatchResult, MatcherError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(MatcherError::InvalidThreshold(threshold));
        }
        let cand_title = normalize_title(&candidate.title);
        let title_chars = CharCounts::of(&cand_title);
        let cand_artist = candidate.artist.as_deref().map(normalize_title);
        let artist_chars = cand_artist.as_deref().map(CharCounts::of);

        // exact-key fast path: nothing can beat 1.0, and the map keeps the
        // lowest id among identical normalizations
        let exact = match (&cand_artist, domain) {
            (Some(artist), DomainTag::Music) => {
                self.by_norm_pair.get(&(cand_title.clone(), artist.clone()))
            }
            _ => self.by_norm_title.get(&cand_title),
        };
        if let Some(&idx) = exact {
            return Ok(MatchResult {
                candidate: candidate.clone(),
                item_id: Some(self.catalog.items()[self.entries[idx].pos].id.clone()),
                score: 1.0,
                matched: true,
            });
        }

        let mut best_score = f64::NEG_INFINITY;
        let mut best_pos = 0usize;
        for entry in &self.entries {
            // upper bounds first; only strictly-lower bounds skip, so the
            // argmax and its lowest-id tie-break are unchanged
            let score = match (&cand_artist, &artist_chars) {
                (Some(artist), Some(artist_counts)) if domain == DomainTag::Music => {
                    let bound = 0.5 * title_chars.length_bound(&entry.title_chars)
                        + 0.5 * artist_counts.length_bound(&entry.artist_chars);
                    if bound < best_score {
                        continue;
                    }
                    let bound = 0.5 * title_chars.multiset_bound(&entry.title_chars)
                        + 0.5 * artist_counts.multiset_bound(&entry.artist_chars);
                    if bound < best_score {
                        continue;
                    }
                    0.5 * similarity_ratio(&cand_title, &entry.norm_title)
                        + 0.5 * similarity_ratio(artist, &entry.norm_artist)
                }
                _ => {
                    if title_chars.length_bound(&entry.title_chars) < best_score {
                        continue;
                    }
                    if title_chars.multiset_bound(&entry.title_chars) < best_score {
                        continue;
                    }
                    similarity_ratio(&cand_title, &entry.norm_title)
                }
            };
            if score > best_score {
                best_score = score;
                best_pos = entry.pos;
            }
        }
        let matched = best_score >= threshold;
        Ok(MatchResult {
            candidate: candidate.clone(),
            item_id: matched.then(|| self.catalog.items()[best_pos].id.clone()),
            score: best_score,
            matched,
        })
    }
}

/// One-shot wrapper over [`CatalogIndex::find_closest`].
pub fn find_closest_match(
    candidate: &ParsedCandidate,
    catalog: &Catalog,
    domain: DomainTag,
    threshold: f64,
) -> Result<MatchResult, MatcherError> {
    CatalogIndex::build(catalog)?.find_closest(candidate, domain, threshold)
}

/// Parse raw output and resolve every candidate, keeping matched ids in rank
/// order with duplicates collapsed onto their first occurrence.
pub fn resolve_list(
    text: &str,
    index: &CatalogIndex<'_>,
    opts: &ResolveOptions,
    user_id: UserId,
    provenance: Provenance,
) -> Result<RecommendationList, MatcherError> {
    let candidates = match opts.mode {
        ParseMode::Rules => parse_recommendations(text, opts.domain),
        ParseMode::LlmAssisted => return Err(MatcherError::MissingClient),
    };
    resolve_candidates(&candidates, index, opts, user_id, provenance)
}

/// [`resolve_list`] in llm-assisted parse mode.
pub fn resolve_list_llm(
    text: &str,
    index: &CatalogIndex<'_>,
    opts: &ResolveOptions,
    client: &LlmClient,
    params: &CompletionParams,
    user_id: UserId,
    provenance: Provenance,
) -> Result<RecommendationList, MatcherError> {
    let candidates = match opts.mode {
        ParseMode::Rules => parse_recommendations(text, opts.domain),
        ParseMode::LlmAssisted => parse_with_llm(text, opts.domain, client, params)?,
    };
    resolve_candidates(&candidates, index, opts, user_id, provenance)
}

fn resolve_candidates(
    candidates: &[ParsedCandidate],
    index: &CatalogIndex<'_>,
    opts: &ResolveOptions,
    user_id: UserId,
    provenance: Provenance,
) -> Result<RecommendationList, MatcherError> {
    let mut item_ids: Vec<ItemId> = Vec::new();
    let mut unmatched = Vec::new();
    let mut duplicates = Vec::new();
    for candidate in candidates {
        let result = index.find_closest(candidate, opts.domain, opts.threshold)?;
        match &result.item_id {
            Some(id) if item_ids.contains(id) => duplicates.push(result),
            Some(id) => item_ids.push(id.clone()),
            None => unmatched.push(result),
        }
    }
    Ok(RecommendationList {
        user_id,
        item_ids,
        unmatched,
        duplicates,
        provenance,
    })
}
