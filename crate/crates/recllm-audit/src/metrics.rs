//! Accuracy, fairness, coverage, temporal, and genre metrics over resolved
//! recommendation lists.
//!
//! Fairness metrics (Gini, HHI, entropy) operate on a [`CountVector`] of
//! per-item recommendation counts. Accuracy metrics (NDCG, recall, hit rate,
//! average rank) score one ranked list against one user's ground truth;
//! users with empty ground truth are signaled via
//! [`MetricsError::EmptyGroundTruth`] rather than silently scored zero.
//!
//! Conventions pinned here: binary relevance, natural-log entropy,
//! population standard deviation for release years, and hit rate with the
//! list-length denominator K (the conventional membership indicator is
//! available separately as [`hit_indicator`]).

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, ItemId, UserId};

/// How a count vector was built from recommendation lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportPolicy {
    /// One entry per item recommended at least once.
    NonzeroOnly,
    /// One entry per catalog item, zeros included.
    FullCatalog,
}

/// Per-item recommendation counts plus the support policy that built them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
    support: SupportPolicy,
}

impl CountVector {
    pub fn new(counts: Vec<u64>, support: SupportPolicy) -> Self {
        CountVector { counts, support }
    }

    /// Tally recommendation lists into a count vector under `policy`.
    pub fn from_lists<'a, I, J>(lists: I, catalog: &Catalog, policy: SupportPolicy) -> Self
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = &'a ItemId>,
    {
        let mut tally: BTreeMap<&ItemId, u64> = BTreeMap::new();
        for list in lists {
            for id in list {
                *tally.entry(id).or_insert(0) += 1;
            }
        }
        let counts = match policy {
            SupportPolicy::NonzeroOnly => tally.values().copied().collect(),
            SupportPolicy::FullCatalog => catalog
                .items()
                .iter()
                .map(|it| tally.get(&it.id).copied().unwrap_or(0))
                .collect(),
        };
        CountVector {
            counts,
            support: policy,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn support(&self) -> SupportPolicy {
        self.support
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One user's relevant items (their test-split items).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub user_id: UserId,
    pub relevant: HashSet<ItemId>,
}

impl GroundTruth {
    pub fn new(user_id: UserId, relevant: impl IntoIterator<Item = ItemId>) -> Self {
        GroundTruth {
            user_id,
            relevant: relevant.into_iter().collect(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("ground truth is empty; user must be excluded, not scored zero")]
    EmptyGroundTruth,
    #[error("count vector sums to zero")]
    ZeroCounts,
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("k must be >= 1")]
    InvalidK,
}

/// NDCG@k with binary relevance: DCG over hit positions i (1-based) of
/// 1/log2(i+1), normalized by the ideal DCG over min(|truth|, k) positions.
pub fn ndcg_at_k(recs: &[ItemId], truth: &GroundTruth, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidK);
    }
    if truth.relevant.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let dcg: f64 = recs
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| truth.relevant.contains(id))
        .map(|(pos, _)| 1.0 / ((pos + 2) as f64).log2())
        .sum();
    if dcg == 0.0 {
        return Ok(0.0);
    }
    let ideal = truth.relevant.len().min(k);
    let idcg: f64 = (0..ideal).map(|pos| 1.0 / ((pos + 2) as f64).log2()).sum();
    Ok(dcg / idcg)
}

/// |top-k ∩ truth| / |truth|.
pub fn recall_at_k(recs: &[ItemId], truth: &GroundTruth, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidK);
    }
    if truth.relevant.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let hits = recs
        .iter()
        .take(k)
        .filter(|id| truth.relevant.contains(*id))
        .count();
    Ok(hits as f64 / truth.relevant.len() as f64)
}

/// Hits in the top K divided by K (list-length denominator).
pub fn hit_rate_at_k(recs: &[ItemId], truth: &GroundTruth, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidK);
    }
    if truth.relevant.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let hits = recs
        .iter()
        .take(k)
        .filter(|id| truth.relevant.contains(*id))
        .count();
    Ok(hits as f64 / k as f64)
}

/// Conventional hit indicator: 1.0 if any of the top-k is relevant.
pub fn hit_indicator(recs: &[ItemId], truth: &GroundTruth, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidK);
    }
    if truth.relevant.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let hit = recs.iter().take(k).any(|id| truth.relevant.contains(id));
    Ok(if hit { 1.0 } else { 0.0 })
}

/// Mean 1-based rank of the hits within the top-k; `None` when there are no
/// hits (the mean is undefined there, not zero).
pub fn average_rank_at_k(recs: &[ItemId], truth: &GroundTruth, k: usize) -> Option<f64> {
    let ranks: Vec<f64> = recs
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| truth.relevant.contains(*id))
        .map(|(pos, _)| (pos + 1) as f64)
        .collect();
    if ranks.is_empty() {
        None
    } else {
        Some(ranks.iter().sum::<f64>() / ranks.len() as f64)
    }
}

/// Gini index over recommendation counts, ascending-sorted form:
/// sum_i (2i - n - 1) x_i / (n sum x). 0 for uniform counts, (n-1)/n when a
/// single item takes everything.
pub fn gini(counts: &CountVector) -> Result<f64, MetricsError> {
    let total = counts.total();
    if total == 0 {
        return Err(MetricsError::ZeroCounts);
    }
    let mut sorted = counts.counts().to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(idx, &x)| (2.0 * (idx as f64 + 1.0) - n - 1.0) * x as f64)
        .sum();
    Ok(weighted / (n * total as f64))
}

/// Herfindahl-Hirschman index: sum of squared recommendation shares.
pub fn hhi(counts: &CountVector) -> Result<f64, MetricsError> {
    let total = counts.total();
    if total == 0 {
        return Err(MetricsError::ZeroCounts);
    }
    let total = total as f64;
    Ok(counts
        .counts()
        .iter()
        .map(|&x| {
            let share = x as f64 / total;
            share * share
        })
        .sum())
}

/// Shannon entropy (natural log) of the recommendation-share distribution.
pub fn entropy(counts: &CountVector) -> Result<f64, MetricsError> {
    let total = counts.total();
    if total == 0 {
        return Err(MetricsError::ZeroCounts);
    }
    let total = total as f64;
    Ok(-counts
        .counts()
        .iter()
        .filter(|&&x| x > 0)
        .map(|&x| {
            let p = x as f64 / total;
            p * p.ln()
        })
        .sum::<f64>())
}

/// Fraction of the catalog recommended at least once across all lists.
pub fn coverage<'a, I, J>(all_recs: I, catalog: &Catalog) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = J>,
    J: IntoIterator<Item = &'a ItemId>,
{
    if catalog.is_empty() {
        return Err(MetricsError::EmptyCatalog);
    }
    let distinct: HashSet<&ItemId> = all_recs.into_iter().flatten().collect();
    Ok(distinct.len() as f64 / catalog.len() as f64)
}

/// Median and population standard deviation of release years over all
/// recommendation slots (with multiplicity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalStats {
    pub median_year: f64,
    pub std_year: f64,
    pub dated_slots: usize,
    /// Slots whose item carries no release year.
    pub skipped_slots: usize,
}

/// `None` when no recommended item carries a release year.
pub fn temporal_stats<'a, I, J>(all_recs: I, catalog: &Catalog) -> Option<TemporalStats>
where
    I: IntoIterator<Item = J>,
    J: IntoIterator<Item = &'a ItemId>,
{
    let mut years: Vec<f64> = Vec::new();
    let mut skipped = 0usize;
    for id in all_recs.into_iter().flatten() {
        match catalog.get(id).and_then(|it| it.release_year) {
            Some(y) => years.push(y as f64),
            None => skipped += 1,
        }
    }
    if years.is_empty() {
        return None;
    }
    years.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = years.len();
    let median = if n % 2 == 1 {
        years[n / 2]
    } else {
        (years[n / 2 - 1] + years[n / 2]) / 2.0
    };
    let mean = years.iter().sum::<f64>() / n as f64;
    let var = years.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
    Some(TemporalStats {
        median_year: median,
        std_year: var.sqrt(),
        dated_slots: n,
        skipped_slots: skipped,
    })
}

/// Genre frequency table over all recommendation slots, sorted descending by
/// count with alphabetical tie-break.
pub fn genre_histogram<'a, I, J>(all_recs: I, catalog: &Catalog) -> Vec<(String, u64)>
where
    I: IntoIterator<Item = J>,
    J: IntoIterator<Item = &'a ItemId>,
{
    let mut tally: HashMap<&str, u64> = HashMap::new();
    for id in all_recs.into_iter().flatten() {
        if let Some(item) = catalog.get(id) {
            for genre in &item.genres {
                *tally.entry(genre).or_insert(0) += 1;
            }
        }
    }
    let mut out: Vec<(String, u64)> = tally.into_iter().map(|(g, c)| (g.to_string(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Counts sorted descending with 1-based rank, for long-tail plots/CSV.
pub fn longtail_curve(counts: &CountVector) -> Vec<(usize, u64)> {
    let mut sorted = counts.counts().to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c))
        .collect()
}
