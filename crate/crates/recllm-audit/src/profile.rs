//! User-profile pieces consumed by the prompt builders: a context block
//! sampled from full train history, an example block from recent history,
//! and an optional demographic clause.
//!
//! Context and example blocks must stay disjoint and must never contain
//! test-split items; the caller samples context from the history with the
//! example window already removed.

use serde::{Deserialize, Serialize};

use crate::dataset::{DomainTag, Interaction, ItemId, UserId};

/// How the context block is sampled from the full train history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextStrategy {
    /// Most enjoyed items: top-n by rating (movies) or play count (music).
    Frequent,
    /// Preference discounted by recency: preference_norm * exp(-lambda * age_rank).
    RecencyFrequent,
}

/// Default number of context entries.
pub const DEFAULT_CONTEXT_SIZE: usize = 5;
/// Default exponential-decay rate over age rank for [`ContextStrategy::RecencyFrequent`].
pub const DEFAULT_RECENCY_LAMBDA: f64 = 0.1;

/// One context entry: the item, the preference the prompt prints, and the
/// timestamp it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub item_id: ItemId,
    /// Rating (movies) or 1-5 display value mapped from play counts (music).
    pub rating: f64,
    pub timestamp: i64,
}

/// Context block, ordered most-preferred first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextProfile {
    pub user_id: UserId,
    pub entries: Vec<ContextEntry>,
    pub strategy: ContextStrategy,
}

/// One example-part entry (recent stimulus or demonstration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleEntry {
    pub item_id: ItemId,
    pub rating: Option<f64>,
    pub timestamp: i64,
}

/// Recent inputs followed chronologically by the demonstrations the prompt
/// asserts should be recommended (0 for zero-shot, 1 or 2 for ICL).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleBlock {
    pub recent_inputs: Vec<ExampleEntry>,
    pub demonstrations: Vec<ExampleEntry>,
}

impl ExampleBlock {
    pub fn empty() -> Self {
        ExampleBlock {
            recent_inputs: Vec::new(),
            demonstrations: Vec::new(),
        }
    }

    /// Overlay display ratings (e.g. play-count mappings) onto rating-less
    /// entries.
    pub fn fill_ratings(&mut self, ratings: &std::collections::HashMap<ItemId, f64>) {
        for entry in self
            .recent_inputs
            .iter_mut()
            .chain(self.demonstrations.iter_mut())
        {
            if entry.rating.is_none() {
                entry.rating = ratings.get(&entry.item_id).copied();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemographicAttr {
    None,
    Gender,
    AgeGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeGroup {
    Young,
    Old,
}

impl AgeGroup {
    /// Binarize an age against the dataset's median user age: below the
    /// median is young, at or above is old.
    pub fn from_age(age: f64, median_age: f64) -> Self {
        if age < median_age {
            AgeGroup::Young
        } else {
            AgeGroup::Old
        }
    }
}

/// Attribute values available for a user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserDemographics {
    pub gender: Option<Gender>,
    pub age_group: Option<AgeGroup>,
}

/// Rendered demographic fragment, e.g. "is female, and ".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicClause {
    pub attribute: DemographicAttr,
    pub rendered: String,
}

impl DemographicClause {
    pub fn none() -> Self {
        DemographicClause {
            attribute: DemographicAttr::None,
            rendered: String::new(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("empty interaction history")]
    EmptyHistory,
    #[error("context size must be >= 1")]
    InvalidContextSize,
    #[error("history has {available} interactions, {needed} needed for the example block")]
    ExampleShortfall { needed: usize, available: usize },
    #[error("user metadata does not carry the requested demographic attribute")]
    MissingDemographic,
}

struct ScoredCandidate {
    item_id: ItemId,
    raw_preference: f64,
    display_rating: f64,
    timestamp: i64,
}

/// Sample the context block from a user's train history.
///
/// `frequent` ranks by raw preference (rating or play count);
/// `recency_frequent` ranks by min-max-normalized preference discounted by
/// exp(-lambda * age_rank), age rank 0 being the most recent item. Ties
/// break by recency (newer first) then ascending item id. Entries come back
/// most-preferred first.
pub fn sample_context(
    train_history: &[Interaction],
    domain: DomainTag,
    strategy: ContextStrategy,
    n: usize,
    lambda: f64,
) -> Result<ContextProfile, ProfileError> {
    if train_history.is_empty() {
        return Err(ProfileError::EmptyHistory);
    }
    if n == 0 {
        return Err(ProfileError::InvalidContextSize);
    }
    let user_id = train_history[0].user_id.clone();
    let mut candidates = collect_candidates(train_history, domain);

    let (min_pref, max_pref) = candidates.iter().fold((f64::MAX, f64::MIN), |(lo, hi), c| {
        (lo.min(c.raw_preference), hi.max(c.raw_preference))
    });
    let norm = |p: f64| {
        if max_pref > min_pref {
            (p - min_pref) / (max_pref - min_pref)
        } else {
            1.0
        }
    };

    // age rank: 0 for the most recent candidate, incrementing backwards
    candidates.sort_by(|a, b| {
        b.timestamp
            .cmp(&a.timestamp)
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
    let scored: Vec<(f64, &ScoredCandidate)> = candidates
        .iter()
        .enumerate()
        .map(|(age_rank, c)| {
            let score = match strategy {
                ContextStrategy::Frequent => c.raw_preference,
                ContextStrategy::RecencyFrequent => {
                    norm(c.raw_preference) * (-lambda * age_rank as f64).exp()
                }
            };
            (score, c)
        })
        .collect();

    let mut ranked = scored;
    ranked.sort_by(|(sa, a), (sb, b)| {
        sb.partial_cmp(sa)
            .unwrap()
            .then_with(|| b.timestamp.cmp(&a.timestamp))
            .then_with(|| a.item_id.cmp(&b.item_id))
    });

    let entries = ranked
        .into_iter()
        .take(n)
        .map(|(_, c)| ContextEntry {
            item_id: c.item_id.clone(),
            rating: c.display_rating,
            timestamp: c.timestamp,
        })
        .collect();
    Ok(ContextProfile {
        user_id,
        entries,
        strategy,
    })
}

fn collect_candidates(history: &[Interaction], domain: DomainTag) -> Vec<ScoredCandidate> {
    match domain {
        DomainTag::Movies => {
            // one candidate per item; a repeated item keeps its latest event
            let mut latest: std::collections::HashMap<&ItemId, &Interaction> =
                std::collections::HashMap::new();
            for r in history {
                let slot = latest.entry(&r.item_id).or_insert(r);
                if r.timestamp > slot.timestamp {
                    *slot = r;
                }
            }
            latest
                .into_values()
                .map(|r| {
                    let rating = r.rating.unwrap_or(1.0);
                    ScoredCandidate {
                        item_id: r.item_id.clone(),
                        raw_preference: rating,
                        display_rating: rating,
                        timestamp: r.timestamp,
                    }
                })
                .collect()
        }
        DomainTag::Music => {
            let counts = play_counts(history);
            let (min_c, max_c) = counts
                .values()
                .fold((u64::MAX, 0u64), |(lo, hi), &(c, _)| (lo.min(c), hi.max(c)));
            counts
                .into_iter()
                .map(|(item_id, (count, last_ts))| ScoredCandidate {
                    item_id,
                    raw_preference: count as f64,
                    display_rating: display_rating_from_count(count, min_c, max_c),
                    timestamp: last_ts,
                })
                .collect()
        }
    }
}

fn play_counts(history: &[Interaction]) -> std::collections::HashMap<ItemId, (u64, i64)> {
    let mut counts: std::collections::HashMap<ItemId, (u64, i64)> =
        std::collections::HashMap::new();
    for r in history {
        let slot = counts.entry(r.item_id.clone()).or_insert((0, i64::MIN));
        slot.0 += 1;
        slot.1 = slot.1.max(r.timestamp);
    }
    counts
}

fn display_rating_from_count(count: u64, min_c: u64, max_c: u64) -> f64 {
    if max_c == min_c {
        return 5.0;
    }
    let norm = (count - min_c) as f64 / (max_c - min_c) as f64;
    1.0 + (4.0 * norm).round()
}

/// Per-user 1-5 display ratings derived from play counts, for rendering
/// music example blocks.
pub fn music_display_ratings(history: &[Interaction]) -> std::collections::HashMap<ItemId, f64> {
    let counts = play_counts(history);
    let (min_c, max_c) = counts
        .values()
        .fold((u64::MAX, 0u64), |(lo, hi), &(c, _)| (lo.min(c), hi.max(c)));
    counts
        .into_iter()
        .map(|(id, (c, _))| (id, display_rating_from_count(c, min_c, max_c)))
        .collect()
}

/// Take the last `n_recent + n_demos` interactions by timestamp; the
/// earliest `n_recent` of that window become the recent inputs, the final
/// `n_demos` the demonstrations, chronological order preserved.
pub fn take_examples(
    train_history: &[Interaction],
    n_recent: usize,
    n_demos: usize,
) -> Result<ExampleBlock, ProfileError> {
    assert!(n_demos <= 2, "demonstrations are limited to 0, 1, or 2");
    let needed = n_recent + n_demos;
    if train_history.len() < needed {
        return Err(ProfileError::ExampleShortfall {
            needed,
            available: train_history.len(),
        });
    }
    let mut rows: Vec<&Interaction> = train_history.iter().collect();
    rows.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
    let window = &rows[rows.len() - needed..];
    let to_entry = |r: &&Interaction| ExampleEntry {
        item_id: r.item_id.clone(),
        rating: r.rating,
        timestamp: r.timestamp,
    };
    Ok(ExampleBlock {
        recent_inputs: window[..n_recent].iter().map(to_entry).collect(),
        demonstrations: window[n_recent..].iter().map(to_entry).collect(),
    })
}

/// Render the prompt fragment for a demographic attribute.
pub fn render_demographic(
    attribute: DemographicAttr,
    metadata: &UserDemographics,
) -> Result<DemographicClause, ProfileError> {
    let rendered = match attribute {
        DemographicAttr::None => String::new(),
        DemographicAttr::Gender => {
            let gender = metadata.gender.ok_or(ProfileError::MissingDemographic)?;
            match gender {
                Gender::Female => "is female, and ".to_string(),
                Gender::Male => "is male, and ".to_string(),
            }
        }
        DemographicAttr::AgeGroup => {
            let group = metadata.age_group.ok_or(ProfileError::MissingDemographic)?;
            match group {
                AgeGroup::Young => "is young, and ".to_string(),
                AgeGroup::Old => "is old, and ".to_string(),
            }
        }
    };
    Ok(DemographicClause {
        attribute,
        rendered,
    })
}
