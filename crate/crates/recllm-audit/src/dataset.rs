//! Interaction-log ingestion, k-core filtering, chronological splits, and
//! catalog/dataset statistics.
//!
//! Two input formats are supported: the MovieLens CSV pair
//! (`ratings.csv` + `movies.csv`) and the LastFM-1K play log (single TSV).
//! All operations are pure functions over immutable inputs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::metrics;

/// Opaque item identifier, unique within a catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        ItemId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Opaque user identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A recommendable item: movie or music track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub title: String,
    /// Parsed from a trailing "(YYYY)" in the title when present and inside
    /// [1870, 2100].
    pub release_year: Option<i32>,
    pub genres: Vec<String>,
    /// Music domain only.
    pub artist: Option<String>,
}

impl Item {
    pub fn new(id: ItemId, title: impl Into<String>, genres: Vec<String>) -> Self {
        let title = title.into();
        let release_year = parse_release_year(&title);
        Item {
            id,
            title,
            release_year,
            genres: genres.into_iter().filter(|g| !g.is_empty()).collect(),
            artist: None,
        }
    }

    pub fn with_artist(mut self, artist: impl Into<String>) -> Self {
        self.artist = Some(artist.into());
        self
    }
}

/// Extract the last parenthesized 4-digit group of a title as a release year.
///
/// Years outside [1870, 2100] are treated as part of the title, not a year.
pub fn parse_release_year(title: &str) -> Option<i32> {
    let bytes = title.as_bytes();
    let mut best = None;
    let mut i = 0;
    while i + 5 < bytes.len() {
        if bytes[i] == b'('
            && bytes[i + 5] == b')'
            && bytes[i + 1..i + 5].iter().all(u8::is_ascii_digit)
        {
            let year: i32 = title[i + 1..i + 5].parse().ok()?;
            if (1870..=2100).contains(&year) {
                best = Some(year);
            }
        }
        i += 1;
    }
    best
}

/// The recommendable universe.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Catalog {
    items: Vec<Item>,
    #[serde(skip)]
    by_id: HashMap<ItemId, usize>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    pub fn insert(&mut self, item: Item) -> Result<(), DatasetError> {
        if self.by_id.contains_key(&item.id) {
            return Err(DatasetError::DuplicateItem(item.id.clone()));
        }
        self.by_id.insert(item.id.clone(), self.items.len());
        self.items.push(item);
        Ok(())
    }

    pub fn get(&self, id: &ItemId) -> Option<&Item> {
        self.by_id.get(id).map(|&i| &self.items[i])
    }

    pub fn contains(&self, id: &ItemId) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Rebuild the id index after deserialization.
    pub fn reindex(&mut self) {
        self.by_id = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.id.clone(), i))
            .collect();
    }
}

impl FromIterator<Item> for Catalog {
    fn from_iter<T: IntoIterator<Item = Item>>(iter: T) -> Self {
        let mut c = Catalog::new();
        for item in iter {
            c.insert(item)
                .expect("duplicate item id in catalog literal");
        }
        c
    }
}

/// A timestamped user-item event with an optional rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user_id: UserId,
    pub item_id: ItemId,
    /// On the dataset's rating scale (0.5-5.0 for MovieLens); unset for plays.
    pub rating: Option<f64>,
    /// Seconds since epoch, non-negative.
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Movies,
    Music,
}

/// Input format tag for [`load_interactions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFormat {
    MovielensCsv,
    LastfmTsv,
}

/// A catalog plus its interaction log.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub catalog: Arc<Catalog>,
    pub interactions: Vec<Interaction>,
    pub domain: DomainTag,
}

impl Dataset {
    pub fn new(catalog: Catalog, interactions: Vec<Interaction>, domain: DomainTag) -> Self {
        Dataset {
            catalog: Arc::new(catalog),
            interactions,
            domain,
        }
    }

    /// Distinct users, in ascending id order.
    pub fn user_ids(&self) -> Vec<UserId> {
        let mut ids: Vec<UserId> = self
            .interactions
            .iter()
            .map(|r| r.user_id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Interactions grouped per user, ascending user id.
    pub fn by_user(&self) -> BTreeMap<UserId, Vec<&Interaction>> {
        let mut map: BTreeMap<UserId, Vec<&Interaction>> = BTreeMap::new();
        for r in &self.interactions {
            map.entry(r.user_id.clone()).or_default().push(r);
        }
        map
    }

    /// Restriction of this dataset to the given users (catalog shared).
    pub fn restrict_to_users(&self, users: &[UserId]) -> Dataset {
        let keep: std::collections::HashSet<&UserId> = users.iter().collect();
        Dataset {
            catalog: Arc::clone(&self.catalog),
            interactions: self
                .interactions
                .iter()
                .filter(|r| keep.contains(&r.user_id))
                .cloned()
                .collect(),
            domain: self.domain,
        }
    }
}

/// Ratios plus the per-user chronological flag that produced a split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: Vec<f64>,
    pub per_user_chronological: bool,
}

/// Chronological train/validation/test split of a dataset.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Dataset,
    pub validation: Option<Dataset>,
    pub test: Dataset,
    pub spec: SplitSpec,
    /// Users removed for having fewer interactions than split segments.
    pub dropped_users: Vec<UserId>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("duplicate item id {0}")]
    DuplicateItem(ItemId),
    #[error("empty dataset")]
    Empty,
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("only {eligible} users satisfy the sampling policy, {requested} requested")]
    NotEnoughUsers { eligible: usize, requested: usize },
    #[error("k-core requires k >= 1, got {0}")]
    InvalidKCore(usize),
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Load an interaction log into a [`Dataset`].
///
/// For [`LogFormat::MovielensCsv`], `path` is the directory holding
/// `ratings.csv` and `movies.csv`. For [`LogFormat::LastfmTsv`], `path` is
/// the play-log TSV itself; the catalog is built from the log's
/// (artist, track) columns and plays carry no rating.
pub fn load_interactions(path: &Path, format: LogFormat) -> Result<Dataset, DatasetError> {
    match format {
        LogFormat::MovielensCsv => load_movielens(path),
        LogFormat::LastfmTsv => load_lastfm(path),
    }
}

fn load_movielens(dir: &Path) -> Result<Dataset, DatasetError> {
    let movies_path = dir.join("movies.csv");
    let ratings_path = dir.join("ratings.csv");

    let mut catalog = Catalog::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&movies_path)
        .map_err(|e| parse_err(&movies_path, 0, e.to_string()))?;
    for (idx, record) in reader.records().enumerate() {
        let line = idx as u64 + 2; // 1-based, after the header
        let record = record.map_err(|e| parse_err(&movies_path, line, e.to_string()))?;
        if record.len() < 3 {
            return Err(parse_err(
                &movies_path,
                line,
                "expected movieId,title,genres",
            ));
        }
        let id = ItemId::new(record[0].trim());
        let title = record[1].to_string();
        let genres = parse_genres(&record[2]);
        catalog
            .insert(Item::new(id, title, genres))
            .map_err(|e| parse_err(&movies_path, line, e.to_string()))?;
    }

    let mut interactions = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&ratings_path)
        .map_err(|e| parse_err(&ratings_path, 0, e.to_string()))?;
    for (idx, record) in reader.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| parse_err(&ratings_path, line, e.to_string()))?;
        if record.len() < 4 {
            return Err(parse_err(
                &ratings_path,
                line,
                "expected userId,movieId,rating,timestamp",
            ));
        }
        let user_id = UserId::new(record[0].trim());
        let item_id = ItemId::new(record[1].trim());
        if !catalog.contains(&item_id) {
            return Err(parse_err(
                &ratings_path,
                line,
                format!("movieId {} not present in movies.csv", item_id),
            ));
        }
        let rating: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(&ratings_path, line, format!("bad rating {:?}", &record[2])))?;
        if !(0.5..=5.0).contains(&rating) {
            return Err(parse_err(
                &ratings_path,
                line,
                format!("rating {} outside 0.5-5.0", rating),
            ));
        }
        let timestamp: i64 = record[3].trim().parse().map_err(|_| {
            parse_err(
                &ratings_path,
                line,
                format!("bad timestamp {:?}", &record[3]),
            )
        })?;
        if timestamp < 0 {
            return Err(parse_err(&ratings_path, line, "negative timestamp"));
        }
        interactions.push(Interaction {
            user_id,
            item_id,
            rating: Some(rating),
            timestamp,
        });
    }

    Ok(Dataset::new(catalog, interactions, DomainTag::Movies))
}

fn parse_genres(raw: &str) -> Vec<String> {
    if raw.trim().is_empty() || raw == "(no genres listed)" {
        return Vec::new();
    }
    raw.split('|')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(str::to_string)
        .collect()
}

fn load_lastfm(path: &Path) -> Result<Dataset, DatasetError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);

    let mut catalog = Catalog::new();
    let mut interactions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 6 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 6 tab-separated fields, got {}", fields.len()),
            ));
        }
        let user_id = UserId::new(fields[0].trim());
        let timestamp = chrono::DateTime::parse_from_rfc3339(fields[1].trim())
            .map_err(|e| parse_err(path, line_no, format!("bad ISO-8601 timestamp: {e}")))?
            .timestamp();
        if timestamp < 0 {
            return Err(parse_err(path, line_no, "negative timestamp"));
        }
        let artist_name = fields[3].trim();
        let track_id = fields[4].trim();
        let track_name = fields[5].trim();
        // Track MBIDs are missing for part of the corpus; the (artist, track)
        // pair is the identity fallback.
        let item_id = if track_id.is_empty() {
            ItemId::new(format!("{artist_name}\u{1f}{track_name}"))
        } else {
            ItemId::new(track_id)
        };
        if !catalog.contains(&item_id) {
            catalog
                .insert(Item::new(item_id.clone(), track_name, Vec::new()).with_artist(artist_name))
                .map_err(|e| parse_err(path, line_no, e.to_string()))?;
        }
        interactions.push(Interaction {
            user_id,
            item_id,
            rating: None,
            timestamp,
        });
    }

    Ok(Dataset::new(catalog, interactions, DomainTag::Music))
}

/// Iteratively remove users and items with fewer than `k` interactions until
/// a fixed point. `k = 1` is the identity; the result may be empty.
pub fn kcore_filter(dataset: &Dataset, k: usize) -> Result<Dataset, DatasetError> {
    if k == 0 {
        return Err(DatasetError::InvalidKCore(0));
    }
    let mut kept: Vec<Interaction> = dataset.interactions.clone();
    loop {
        let mut user_counts: HashMap<&UserId, usize> = HashMap::new();
        let mut item_counts: HashMap<&ItemId, usize> = HashMap::new();
        for r in &kept {
            *user_counts.entry(&r.user_id).or_insert(0) += 1;
            *item_counts.entry(&r.item_id).or_insert(0) += 1;
        }
        let before = kept.len();
        let next: Vec<Interaction> = kept
            .iter()
            .filter(|r| user_counts[&r.user_id] >= k && item_counts[&r.item_id] >= k)
            .cloned()
            .collect();
        if next.len() == before {
            return Ok(Dataset {
                catalog: Arc::clone(&dataset.catalog),
                interactions: next,
                domain: dataset.domain,
            });
        }
        kept = next;
    }
}

/// Per-user chronological split at cumulative-ratio boundaries.
///
/// Interactions are ordered by (timestamp, item_id); boundary counts round
/// down for all but the last segment. Users with fewer interactions than
/// segments are dropped and reported, not a fatal error.
pub fn chrono_split(dataset: &Dataset, ratios: &[f64]) -> Result<SplitDataset, DatasetError> {
    if ratios.len() < 2 || ratios.len() > 3 {
        return Err(DatasetError::InvalidRatios(format!(
            "expected 2 or 3 segments, got {}",
            ratios.len()
        )));
    }
    if ratios.iter().any(|&r| r <= 0.0) {
        return Err(DatasetError::InvalidRatios(
            "all ratios must be positive".into(),
        ));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidRatios(format!(
            "ratios sum to {sum}, expected 1"
        )));
    }

    let n_segments = ratios.len();
    let mut segments: Vec<Vec<Interaction>> = vec![Vec::new(); n_segments];
    let mut dropped = Vec::new();

    for (user, mut rows) in dataset.by_user() {
        if rows.len() < n_segments {
            dropped.push(user);
            continue;
        }
        rows.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.item_id.cmp(&b.item_id))
        });
        let n = rows.len();
        let mut cut_prev = 0usize;
        let mut cum = 0.0;
        for (seg, &ratio) in ratios.iter().enumerate() {
            cum += ratio;
            let cut = if seg + 1 == n_segments {
                n
            } else {
                (cum * n as f64).floor() as usize
            };
            segments[seg].extend(rows[cut_prev..cut].iter().map(|r| (*r).clone()));
            cut_prev = cut;
        }
    }

    let make = |rows: Vec<Interaction>| Dataset {
        catalog: Arc::clone(&dataset.catalog),
        interactions: rows,
        domain: dataset.domain,
    };
    let mut it = segments.into_iter();
    let train = make(it.next().unwrap());
    let (validation, test) = if n_segments == 3 {
        (Some(make(it.next().unwrap())), make(it.next().unwrap()))
    } else {
        (None, make(it.next().unwrap()))
    };

    Ok(SplitDataset {
        train,
        validation,
        test,
        spec: SplitSpec {
            ratios: ratios.to_vec(),
            per_user_chronological: true,
        },
        dropped_users: dropped,
    })
}

/// User-sampling policy for experiment subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplePolicy {
    /// Users whose interaction count lies within the [25th, 75th] percentile
    /// of per-user counts (nearest-rank, inclusive).
    ModerateActivity,
}

/// Draw `n` users under `policy` uniformly with the given seed and restrict
/// the dataset to them.
pub fn sample_users(
    dataset: &Dataset,
    n: usize,
    policy: SamplePolicy,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    let SamplePolicy::ModerateActivity = policy;
    let mut counts: BTreeMap<UserId, usize> = BTreeMap::new();
    for r in &dataset.interactions {
        *counts.entry(r.user_id.clone()).or_insert(0) += 1;
    }
    let mut count_values: Vec<usize> = counts.values().copied().collect();
    count_values.sort_unstable();
    let lo = nearest_rank(&count_values, 0.25);
    let hi = nearest_rank(&count_values, 0.75);

    let eligible: Vec<UserId> = counts
        .into_iter()
        .filter(|&(_, c)| c >= lo && c <= hi)
        .map(|(u, _)| u)
        .collect();
    if eligible.len() < n {
        return Err(DatasetError::NotEnoughUsers {
            eligible: eligible.len(),
            requested: n,
        });
    }

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, eligible.len(), n);
    let mut users: Vec<UserId> = picked.iter().map(|i| eligible[i].clone()).collect();
    users.sort();
    Ok(dataset.restrict_to_users(&users))
}

fn nearest_rank(sorted: &[usize], q: f64) -> usize {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Flat dataset statistics, CSV-serializable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub users: usize,
    /// Distinct items appearing in interactions.
    pub items: usize,
    pub interactions: usize,
    pub catalog_items: usize,
    pub interactions_per_user: f64,
    pub interactions_per_item: f64,
    /// |R| / (|U| * |I|).
    pub density: f64,
    /// 1 - density.
    pub sparsity: f64,
    /// Gini over per-item interaction counts (nonzero-count items).
    pub item_gini: f64,
    /// Gini over per-user interaction counts.
    pub user_gini: f64,
}

impl StatsReport {
    /// Flat `key,value` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "key,value")?;
        writeln!(w, "users,{}", self.users)?;
        writeln!(w, "items,{}", self.items)?;
        writeln!(w, "interactions,{}", self.interactions)?;
        writeln!(w, "catalog_items,{}", self.catalog_items)?;
        writeln!(w, "interactions_per_user,{:.6}", self.interactions_per_user)?;
        writeln!(w, "interactions_per_item,{:.6}", self.interactions_per_item)?;
        writeln!(w, "density,{:.6}", self.density)?;
        writeln!(w, "sparsity,{:.6}", self.sparsity)?;
        writeln!(w, "item_gini,{:.6}", self.item_gini)?;
        writeln!(w, "user_gini,{:.6}", self.user_gini)
    }
}

/// Compute |U|, |I|, |R|, ratios, density/sparsity, and item/user Gini.
pub fn dataset_stats(dataset: &Dataset) -> Result<StatsReport, DatasetError> {
    if dataset.interactions.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut user_counts: HashMap<&UserId, u64> = HashMap::new();
    let mut item_counts: HashMap<&ItemId, u64> = HashMap::new();
    for r in &dataset.interactions {
        *user_counts.entry(&r.user_id).or_insert(0) += 1;
        *item_counts.entry(&r.item_id).or_insert(0) += 1;
    }
    let users = user_counts.len();
    let items = item_counts.len();
    let n = dataset.interactions.len();

    fn gini_of<K>(counts: &HashMap<K, u64>) -> f64 {
        let v: Vec<u64> = counts.values().copied().collect();
        metrics::gini(&metrics::CountVector::new(
            v,
            metrics::SupportPolicy::NonzeroOnly,
        ))
        .expect("counts are nonzero by construction")
    }
    let item_gini = gini_of(&item_counts);
    let user_gini = gini_of(&user_counts);

    let density = n as f64 / (users as f64 * items as f64);
    Ok(StatsReport {
        users,
        items,
        interactions: n,
        catalog_items: dataset.catalog.len(),
        interactions_per_user: n as f64 / users as f64,
        interactions_per_item: n as f64 / items as f64,
        density,
        sparsity: 1.0 - density,
        item_gini,
        user_gini,
    })
}
