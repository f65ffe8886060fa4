//! Classical collaborative-filtering baselines on the implicit train split:
//! TopPop, item-based KNN with shrunk cosine similarity, and BPR matrix
//! factorization.
//!
//! Any rating or play binarizes to a positive. Fitting is single-writer;
//! fitted models are immutable and safe to share across threads.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ItemId, UserId};

/// Hyperparameter grid for BPR embedding sizes.
pub const BPR_EMBEDDING_GRID: [usize; 3] = [32, 64, 128];
/// Hyperparameter grid for BPR learning rates.
pub const BPR_LEARNING_RATE_GRID: [f64; 4] = [1e-4, 5e-4, 1e-3, 5e-3];
/// Hyperparameter grid for ItemKNN neighborhood sizes.
pub const ITEMKNN_K_GRID: [usize; 7] = [10, 50, 100, 200, 250, 300, 400];
/// Hyperparameter grid for ItemKNN shrinkage.
pub const ITEMKNN_SHRINK_GRID: [f64; 5] = [0.0, 0.1, 0.5, 1.0, 2.0];

#[derive(Debug, thiserror::Error)]
pub enum BaselinesError {
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("bpr training diverged (non-finite factors) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("checkpoint io on {path}: {message}")]
    Checkpoint { path: String, message: String },
}

/// Binary user-item incidence built from the train split, with index maps
/// in ascending id order.
#[derive(Debug, Clone)]
pub struct InteractionMatrix {
    user_ids: Vec<UserId>,
    item_ids: Vec<ItemId>,
    user_index: HashMap<UserId, usize>,
    item_index: HashMap<ItemId, usize>,
    /// Sorted distinct item indices per user.
    user_items: Vec<Vec<u32>>,
    /// Sorted distinct user indices per item.
    item_users: Vec<Vec<u32>>,
}

impl InteractionMatrix {
    pub fn from_dataset(train: &Dataset) -> Self {
        let mut user_ids: Vec<UserId> = train
            .interactions
            .iter()
            .map(|r| r.user_id.clone())
            .collect();
        user_ids.sort();
        user_ids.dedup();
        let mut item_ids: Vec<ItemId> = train
            .interactions
            .iter()
            .map(|r| r.item_id.clone())
            .collect();
        item_ids.sort();
        item_ids.dedup();

        let user_index: HashMap<UserId, usize> = user_ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, u)| (u, i))
            .collect();
        let item_index: HashMap<ItemId, usize> = item_ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, it)| (it, i))
            .collect();

        let mut user_items = vec![Vec::new(); user_ids.len()];
        let mut item_users = vec![Vec::new(); item_ids.len()];
        for r in &train.interactions {
            let u = user_index[&r.user_id];
            let i = item_index[&r.item_id];
            user_items[u].push(i as u32);
            item_users[i].push(u as u32);
        }
        for list in user_items.iter_mut().chain(item_users.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        InteractionMatrix {
            user_ids,
            item_ids,
            user_index,
            item_index,
            user_items,
            item_users,
        }
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn user_ids(&self) -> &[UserId] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[ItemId] {
        &self.item_ids
    }

    pub fn user_pos(&self, user: &UserId) -> Option<usize> {
        self.user_index.get(user).copied()
    }

    pub fn item_pos(&self, item: &ItemId) -> Option<usize> {
        self.item_index.get(item).copied()
    }

    pub fn items_of(&self, user_pos: usize) -> &[u32] {
        &self.user_items[user_pos]
    }

    pub fn item_count(&self, item_pos: usize) -> usize {
        self.item_users[item_pos].len()
    }
}

/// A ranked list plus whether the popularity fallback produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    pub items: Vec<ItemId>,
    pub fallback: bool,
}

/// Global popularity ranking: train count descending, item id ascending.
pub fn popularity_ranking(matrix: &InteractionMatrix) -> Vec<u32> {
    let mut order: Vec<u32> = (0..matrix.n_items() as u32).collect();
    order.sort_by(|&a, &b| {
        matrix
            .item_count(b as usize)
            .cmp(&matrix.item_count(a as usize))
            .then_with(|| matrix.item_ids[a as usize].cmp(&matrix.item_ids[b as usize]))
    });
    order
}

/// Top-k most popular items per user, optionally excluding each user's own
/// train items. Emits min(k, catalog - seen) items.
pub fn top_pop(matrix: &InteractionMatrix, k: usize, exclude_seen: bool) -> Vec<RankedList> {
    let ranking = popularity_ranking(matrix);
    (0..matrix.n_users())
        .map(|u| {
            let seen: HashSet<u32> = if exclude_seen {
                matrix.items_of(u).iter().copied().collect()
            } else {
                HashSet::new()
            };
            let items = ranking
                .iter()
                .filter(|i| !seen.contains(i))
                .take(k)
                .map(|&i| matrix.item_ids[i as usize].clone())
                .collect();
            RankedList {
                items,
                fallback: false,
            }
        })
        .collect()
}

/// Item-based KNN with shrunk cosine over binary item columns.
#[derive(Debug, Clone)]
pub struct ItemKnnModel {
    pub k_neighbors: usize,
    pub shrink: f64,
    /// Top neighbors per item: (other item, similarity), similarity > 0.
    neighbors: Vec<Vec<(u32, f64)>>,
}

/// sim(i, j) = |users(i) ∩ users(j)| / (sqrt(|users(i)|) * sqrt(|users(j)|) + shrink),
/// keeping the `k_neighbors` strongest per item.
pub fn item_knn_fit(
    matrix: &InteractionMatrix,
    k_neighbors: usize,
    shrink: f64,
) -> Result<ItemKnnModel, BaselinesError> {
    if k_neighbors == 0 {
        return Err(BaselinesError::InvalidHyper(
            "k_neighbors must be >= 1".into(),
        ));
    }
    if shrink < 0.0 {
        return Err(BaselinesError::InvalidHyper("shrink must be >= 0".into()));
    }
    // co-occurrence via per-user item lists
    let mut co: HashMap<(u32, u32), u32> = HashMap::new();
    for u in 0..matrix.n_users() {
        let items = matrix.items_of(u);
        for (a_pos, &a) in items.iter().enumerate() {
            for &b in &items[a_pos + 1..] {
                *co.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let norms: Vec<f64> = (0..matrix.n_items())
        .map(|i| (matrix.item_count(i) as f64).sqrt())
        .collect();
    let mut neighbors: Vec<Vec<(u32, f64)>> = vec![Vec::new(); matrix.n_items()];
    for (&(a, b), &count) in &co {
        let sim = count as f64 / (norms[a as usize] * norms[b as usize] + shrink);
        if sim > 0.0 {
            neighbors[a as usize].push((b, sim));
            neighbors[b as usize].push((a, sim));
        }
    }
    for (i, list) in neighbors.iter_mut().enumerate() {
        list.sort_by(|x, y| {
            y.1.partial_cmp(&x.1)
                .unwrap()
                .then_with(|| matrix.item_ids[x.0 as usize].cmp(&matrix.item_ids[y.0 as usize]))
        });
        list.truncate(k_neighbors);
        debug_assert!(list.iter().all(|&(j, _)| j as usize != i));
    }
    Ok(ItemKnnModel {
        k_neighbors,
        shrink,
        neighbors,
    })
}

impl ItemKnnModel {
    /// Pairwise similarity as fitted (0 when outside the kept neighborhood).
    pub fn similarity(&self, a: usize, b: usize) -> f64 {
        self.neighbors[a]
            .iter()
            .find(|&&(j, _)| j as usize == b)
            .map(|&(_, s)| s)
            .unwrap_or(0.0)
    }

    /// score(u, i) = sum of sim(i, j) over the user's train items j; falls
    /// back to the popularity ranking for empty histories.
    pub fn recommend(
        &self,
        matrix: &InteractionMatrix,
        user: &UserId,
        k: usize,
    ) -> Result<RankedList, BaselinesError> {
        let u = matrix
            .user_pos(user)
            .ok_or_else(|| BaselinesError::UnknownUser(user.clone()))?;
        let history = matrix.items_of(u);
        if history.is_empty() {
            let mut list = top_pop_single(matrix, k);
            list.fallback = true;
            return Ok(list);
        }
        let seen: HashSet<u32> = history.iter().copied().collect();
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for &j in history {
            for &(i, sim) in &self.neighbors[j as usize] {
                if !seen.contains(&i) {
                    *scores.entry(i).or_insert(0.0) += sim;
                }
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| matrix.item_ids[a.0 as usize].cmp(&matrix.item_ids[b.0 as usize]))
        });
        let mut items: Vec<ItemId> = ranked
            .into_iter()
            .take(k)
            .map(|(i, _)| matrix.item_ids[i as usize].clone())
            .collect();
        // pad from popularity if the neighborhood ran dry
        let want = k.min(matrix.n_items() - seen.len());
        if items.len() < want {
            let have: HashSet<ItemId> = items.iter().cloned().collect();
            let pads: Vec<ItemId> = popularity_ranking(matrix)
                .into_iter()
                .filter(|&i| !seen.contains(&i))
                .map(|i| matrix.item_ids[i as usize].clone())
                .filter(|id| !have.contains(id))
                .take(want - items.len())
                .collect();
            items.extend(pads);
        }
        Ok(RankedList {
            items,
            fallback: false,
        })
    }
}

fn top_pop_single(matrix: &InteractionMatrix, k: usize) -> RankedList {
    let ranking = popularity_ranking(matrix);
    RankedList {
        items: ranking
            .iter()
            .take(k)
            .map(|&i| matrix.item_ids[i as usize].clone())
            .collect(),
        fallback: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BprHyperParams {
    pub factors: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub regularization: f64,
    pub seed: u64,
}

impl Default for BprHyperParams {
    fn default() -> Self {
        BprHyperParams {
            factors: 32,
            learning_rate: 5e-3,
            epochs: 200,
            regularization: 1e-4,
            seed: 42,
        }
    }
}

/// Trained BPR factors: score(u, i) is the dot product of the u-th user row
/// with the i-th item row.
#[derive(Debug, Clone, PartialEq)]
pub struct BprModel {
    pub factors: usize,
    pub hyperparams: BprHyperParams,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

/// SGD over sampled (u, i+, i-) triples maximizing ln sigma(x_ui+ - x_ui-)
/// with L2 regularization; one triple per train interaction per epoch,
/// negatives uniform over the user's unseen items.
pub fn bpr_fit(
    matrix: &InteractionMatrix,
    hp: &BprHyperParams,
) -> Result<BprModel, BaselinesError> {
    if hp.factors == 0 {
        return Err(BaselinesError::InvalidHyper("factors must be >= 1".into()));
    }
    let d = hp.factors;
    let n_users = matrix.n_users();
    let n_items = matrix.n_items();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut user_factors: Vec<f64> = (0..n_users * d)
        .map(|_| rng.random_range(-0.05..0.05))
        .collect();
    let mut item_factors: Vec<f64> = (0..n_items * d)
        .map(|_| rng.random_range(-0.05..0.05))
        .collect();

    let positives: Vec<(u32, u32)> = (0..n_users)
        .flat_map(|u| matrix.items_of(u).iter().map(move |&i| (u as u32, i)))
        .collect();

    for epoch in 0..hp.epochs {
        for _ in 0..positives.len() {
            let &(u, pos) = &positives[rng.random_range(0..positives.len())];
            let seen = matrix.items_of(u as usize);
            if seen.len() >= n_items {
                continue; // nothing unseen to contrast against
            }
            let neg = loop {
                let candidate = rng.random_range(0..n_items) as u32;
                if seen.binary_search(&candidate).is_err() {
                    break candidate;
                }
            };
            let u_off = u as usize * d;
            let p_off = pos as usize * d;
            let n_off = neg as usize * d;
            let mut margin = 0.0;
            for f in 0..d {
                margin +=
                    user_factors[u_off + f] * (item_factors[p_off + f] - item_factors[n_off + f]);
            }
            // d/dx ln sigma(x) = sigma(-x)
            let grad = 1.0 / (1.0 + margin.exp());
            for f in 0..d {
                let uf = user_factors[u_off + f];
                let pf = item_factors[p_off + f];
                let nf = item_factors[n_off + f];
                user_factors[u_off + f] +=
                    hp.learning_rate * (grad * (pf - nf) - hp.regularization * uf);
                item_factors[p_off + f] += hp.learning_rate * (grad * uf - hp.regularization * pf);
                item_factors[n_off + f] += hp.learning_rate * (-grad * uf - hp.regularization * nf);
            }
        }
        let finite = user_factors
            .iter()
            .chain(item_factors.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(BaselinesError::Diverged { epoch });
        }
    }

    Ok(BprModel {
        factors: d,
        hyperparams: hp.clone(),
        user_factors,
        item_factors,
    })
}

impl BprModel {
    pub fn score(&self, user_pos: usize, item_pos: usize) -> f64 {
        let d = self.factors;
        let u = &self.user_factors[user_pos * d..(user_pos + 1) * d];
        let i = &self.item_factors[item_pos * d..(item_pos + 1) * d];
        u.iter().zip(i).map(|(a, b)| a * b).sum()
    }

    /// Rank unseen items by predicted score, ties by ascending item id.
    pub fn recommend(
        &self,
        matrix: &InteractionMatrix,
        user: &UserId,
        k: usize,
    ) -> Result<RankedList, BaselinesError> {
        let u = matrix
            .user_pos(user)
            .ok_or_else(|| BaselinesError::UnknownUser(user.clone()))?;
        let seen: HashSet<u32> = matrix.items_of(u).iter().copied().collect();
        let mut scored: Vec<(u32, f64)> = (0..matrix.n_items() as u32)
            .filter(|i| !seen.contains(i))
            .map(|i| (i, self.score(u, i as usize)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| matrix.item_ids[a.0 as usize].cmp(&matrix.item_ids[b.0 as usize]))
        });
        Ok(RankedList {
            items: scored
                .into_iter()
                .take(k)
                .map(|(i, _)| matrix.item_ids[i as usize].clone())
                .collect(),
            fallback: false,
        })
    }

    /// Checkpoint: factor matrices as CSV plus a JSON header sidecar.
    pub fn save(&self, dir: &Path, matrix: &InteractionMatrix) -> Result<(), BaselinesError> {
        let ck = |e: std::io::Error, path: &Path| BaselinesError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| ck(e, dir))?;
        let header_path = dir.join("header.json");
        let header = serde_json::json!({
            "model": "bpr-mf",
            "factors": self.factors,
            "hyperparams": self.hyperparams,
            "users": matrix.n_users(),
            "items": matrix.n_items(),
        });
        std::fs::write(&header_path, serde_json::to_string_pretty(&header).unwrap())
            .map_err(|e| ck(e, &header_path))?;

        let write_factors =
            |path: &Path, ids: Vec<String>, rows: &[f64]| -> Result<(), BaselinesError> {
                let mut f = File::create(path).map_err(|e| ck(e, path))?;
                for (row, id) in ids.iter().enumerate() {
                    let values: Vec<String> = (0..self.factors)
                        .map(|c| format!("{:?}", rows[row * self.factors + c]))
                        .collect();
                    writeln!(f, "{id},{}", values.join(",")).map_err(|e| ck(e, path))?;
                }
                Ok(())
            };
        write_factors(
            &dir.join("user_factors.csv"),
            matrix
                .user_ids()
                .iter()
                .map(|u| u.as_str().to_string())
                .collect(),
            &self.user_factors,
        )?;
        write_factors(
            &dir.join("item_factors.csv"),
            matrix
                .item_ids()
                .iter()
                .map(|i| i.as_str().to_string())
                .collect(),
            &self.item_factors,
        )
    }

    /// Load a checkpoint written by [`BprModel::save`].
    pub fn load(dir: &Path) -> Result<(BprModel, Vec<UserId>, Vec<ItemId>), BaselinesError> {
        let ck = |path: &Path, message: String| BaselinesError::Checkpoint {
            path: path.display().to_string(),
            message,
        };
        let header_path = dir.join("header.json");
        let header: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(&header_path).map_err(|e| ck(&header_path, e.to_string()))?,
        )
        .map_err(|e| ck(&header_path, e.to_string()))?;
        let hyperparams: BprHyperParams = serde_json::from_value(header["hyperparams"].clone())
            .map_err(|e| ck(&header_path, e.to_string()))?;
        let factors = header["factors"]
            .as_u64()
            .ok_or_else(|| ck(&header_path, "missing factors".into()))?
            as usize;

        let read_factors = |path: &Path| -> Result<(Vec<String>, Vec<f64>), BaselinesError> {
            let file = File::open(path).map_err(|e| ck(path, e.to_string()))?;
            let mut ids = Vec::new();
            let mut values = Vec::new();
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| ck(path, e.to_string()))?;
                let mut parts = line.split(',');
                ids.push(parts.next().unwrap_or_default().to_string());
                for v in parts {
                    values.push(v.parse::<f64>().map_err(|e| ck(path, e.to_string()))?);
                }
            }
            Ok((ids, values))
        };
        let (user_ids, user_factors) = read_factors(&dir.join("user_factors.csv"))?;
        let (item_ids, item_factors) = read_factors(&dir.join("item_factors.csv"))?;
        Ok((
            BprModel {
                factors,
                hyperparams,
                user_factors,
                item_factors,
            },
            user_ids.into_iter().map(UserId::new).collect(),
            item_ids.into_iter().map(ItemId::new).collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Catalog, DomainTag, Interaction, Item};

    fn dataset(rows: &[(&str, &str)]) -> Dataset {
        let mut catalog = Catalog::new();
        let mut interactions = Vec::new();
        for (i, &(u, it)) in rows.iter().enumerate() {
            let id = ItemId::new(it);
            if !catalog.contains(&id) {
                catalog
                    .insert(Item::new(id.clone(), format!("Item {it}"), vec![]))
                    .unwrap();
            }
            interactions.push(Interaction {
                user_id: UserId::new(u),
                item_id: id,
                rating: Some(4.0),
                timestamp: i as i64,
            });
        }
        Dataset::new(catalog, interactions, DomainTag::Movies)
    }

    #[test]
    fn top_pop_ranks_by_count_and_excludes_seen() {
        // a: 3 interactions, b: 2, c: 1
        let ds = dataset(&[
            ("u1", "a"),
            ("u2", "a"),
            ("u3", "a"),
            ("u1", "b"),
            ("u2", "b"),
            ("u3", "c"),
        ]);
        let m = InteractionMatrix::from_dataset(&ds);
        let lists = top_pop(&m, 2, false);
        for list in &lists {
            assert_eq!(list.items[0], ItemId::new("a"));
            assert_eq!(list.items[1], ItemId::new("b"));
        }
        let lists = top_pop(&m, 2, true);
        let u1 = m.user_pos(&UserId::new("u1")).unwrap();
        assert_eq!(lists[u1].items, vec![ItemId::new("c")]); // a and b seen, only c left
    }

    #[test]
    fn top_pop_is_identical_for_history_free_users() {
        let ds = dataset(&[("u1", "a"), ("u1", "b"), ("u2", "a")]);
        let m = InteractionMatrix::from_dataset(&ds);
        let lists = top_pop(&m, 2, false);
        assert!(lists.windows(2).all(|w| w[0].items == w[1].items));
    }

    #[test]
    fn knn_similarity_of_identical_and_orthogonal_columns() {
        // a and b consumed by the same two users; c by a third user only
        let ds = dataset(&[
            ("u1", "a"),
            ("u1", "b"),
            ("u2", "a"),
            ("u2", "b"),
            ("u3", "c"),
        ]);
        let m = InteractionMatrix::from_dataset(&ds);
        let model = item_knn_fit(&m, 10, 0.0).unwrap();
        let a = m.item_pos(&ItemId::new("a")).unwrap();
        let b = m.item_pos(&ItemId::new("b")).unwrap();
        let c = m.item_pos(&ItemId::new("c")).unwrap();
        assert!((model.similarity(a, b) - 1.0).abs() < 1e-12);
        assert_eq!(model.similarity(a, c), 0.0);
    }

    #[test]
    fn knn_matches_brute_force_cosine_on_a_hand_dataset() {
        // 4 users x 4 items
        let ds = dataset(&[
            ("u1", "a"),
            ("u1", "b"),
            ("u2", "a"),
            ("u2", "b"),
            ("u2", "c"),
            ("u3", "b"),
            ("u3", "c"),
            ("u4", "c"),
            ("u4", "d"),
        ]);
        let m = InteractionMatrix::from_dataset(&ds);
        let model = item_knn_fit(&m, 10, 0.0).unwrap();

        // oracle: explicit dot products over binary columns
        let columns: HashMap<&str, HashSet<&str>> = [
            ("a", HashSet::from(["u1", "u2"])),
            ("b", HashSet::from(["u1", "u2", "u3"])),
            ("c", HashSet::from(["u2", "u3", "u4"])),
            ("d", HashSet::from(["u4"])),
        ]
        .into_iter()
        .collect();
        for (x, xs) in &columns {
            for (y, ys) in &columns {
                if x == y {
                    continue;
                }
                let dot = xs.intersection(ys).count() as f64;
                let expected = dot / ((xs.len() as f64).sqrt() * (ys.len() as f64).sqrt());
                let xi = m.item_pos(&ItemId::new(*x)).unwrap();
                let yi = m.item_pos(&ItemId::new(*y)).unwrap();
                assert!(
                    (model.similarity(xi, yi) - expected).abs() < 1e-12,
                    "sim({x},{y})"
                );
            }
        }

        // top-1 for u1 (seen a,b): score(c) = sim(c,a)+sim(c,b) > score(d)
        let rec = model.recommend(&m, &UserId::new("u1"), 1).unwrap();
        assert_eq!(rec.items, vec![ItemId::new("c")]);
        assert!(!rec.fallback);
    }

    #[test]
    fn knn_score_is_additive_in_history() {
        let ds = dataset(&[
            ("u1", "a"),
            ("u1", "b"),
            ("u2", "a"),
            ("u2", "c"),
            ("u3", "b"),
            ("u3", "c"),
            ("u4", "a"),
            ("u4", "b"),
            ("u4", "c"),
            ("u4", "d"),
        ]);
        let m = InteractionMatrix::from_dataset(&ds);
        let model = item_knn_fit(&m, 10, 0.5).unwrap();
        let d = m.item_pos(&ItemId::new("d")).unwrap();
        let a = m.item_pos(&ItemId::new("a")).unwrap();
        let b = m.item_pos(&ItemId::new("b")).unwrap();
        let score_ab = model.similarity(d, a) + model.similarity(d, b);
        let score_a = model.similarity(d, a);
        assert!((score_ab - (score_a + model.similarity(d, b))).abs() < 1e-12);
    }

    #[test]
    fn knn_falls_back_to_popularity_for_empty_history() {
        let ds = dataset(&[("u1", "a"), ("u1", "b"), ("u2", "a")]);
        let mut m = InteractionMatrix::from_dataset(&ds);
        // register a cold user manually
        m.user_ids.push(UserId::new("u9"));
        m.user_index.insert(UserId::new("u9"), m.user_ids.len() - 1);
        m.user_items.push(Vec::new());
        let model = item_knn_fit(&m, 10, 0.0).unwrap();
        let rec = model.recommend(&m, &UserId::new("u9"), 2).unwrap();
        assert!(rec.fallback);
        assert_eq!(rec.items[0], ItemId::new("a"));
    }

    fn blocked_dataset() -> Dataset {
        // two disjoint communities, 8 users x 6 items each
        let mut rows = Vec::new();
        for block in 0..2 {
            for u in 0..8 {
                for i in 0..6 {
                    if (u + i) % 5 != 0 {
                        rows.push((format!("u{block}{u}"), format!("i{block}{i}")));
                    }
                }
            }
        }
        let borrowed: Vec<(&str, &str)> =
            rows.iter().map(|(u, i)| (u.as_str(), i.as_str())).collect();
        dataset(&borrowed)
    }

    #[test]
    fn bpr_separates_disjoint_communities() {
        let ds = blocked_dataset();
        let m = InteractionMatrix::from_dataset(&ds);
        let hp = BprHyperParams {
            epochs: 120,
            ..Default::default()
        };
        let model = bpr_fit(&m, &hp).unwrap();
        for user in m.user_ids() {
            let rec = model.recommend(&m, user, 1).unwrap();
            let block = &user.as_str()[1..2];
            assert!(
                rec.items[0].as_str().starts_with(&format!("i{block}")),
                "user {user} got {:?}",
                rec.items[0]
            );
        }
    }

    #[test]
    fn bpr_is_bit_reproducible_under_a_fixed_seed() {
        let ds = blocked_dataset();
        let m = InteractionMatrix::from_dataset(&ds);
        let hp = BprHyperParams {
            epochs: 5,
            ..Default::default()
        };
        let a = bpr_fit(&m, &hp).unwrap();
        let b = bpr_fit(&m, &hp).unwrap();
        assert_eq!(a.user_factors, b.user_factors);
        assert_eq!(a.item_factors, b.item_factors);
    }

    #[test]
    fn zero_epoch_model_is_the_seeded_initialization() {
        let ds = blocked_dataset();
        let m = InteractionMatrix::from_dataset(&ds);
        let hp = BprHyperParams {
            epochs: 0,
            seed: 9,
            ..Default::default()
        };
        let a = bpr_fit(&m, &hp).unwrap();
        let b = bpr_fit(&m, &hp).unwrap();
        assert_eq!(a, b);
        let rec_a = a.recommend(&m, &m.user_ids()[0].clone(), 3).unwrap();
        let rec_b = b.recommend(&m, &m.user_ids()[0].clone(), 3).unwrap();
        assert_eq!(rec_a, rec_b);
    }

    #[test]
    fn bpr_divergence_is_reported_with_the_epoch() {
        let ds = blocked_dataset();
        let m = InteractionMatrix::from_dataset(&ds);
        let hp = BprHyperParams {
            learning_rate: 1e12,
            regularization: 1e12,
            epochs: 3,
            ..Default::default()
        };
        match bpr_fit(&m, &hp) {
            Err(BaselinesError::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn no_baseline_recommends_seen_items_and_lengths_are_exact() {
        let ds = blocked_dataset();
        let m = InteractionMatrix::from_dataset(&ds);
        let knn = item_knn_fit(&m, 50, 0.0).unwrap();
        let bpr = bpr_fit(
            &m,
            &BprHyperParams {
                epochs: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let pop = top_pop(&m, 4, true);
        for (u_pos, user) in m.user_ids().to_vec().iter().enumerate() {
            let seen: HashSet<&ItemId> = m
                .items_of(u_pos)
                .iter()
                .map(|&i| &m.item_ids[i as usize])
                .collect();
            let expected_len = 4.min(m.n_items() - seen.len());
            for list in [
                pop[u_pos].clone(),
                knn.recommend(&m, user, 4).unwrap(),
                bpr.recommend(&m, user, 4).unwrap(),
            ] {
                assert_eq!(list.items.len(), expected_len);
                for it in &list.items {
                    assert!(!seen.contains(it), "user {user} re-served {it}");
                }
            }
        }
    }

    #[test]
    fn bpr_checkpoint_roundtrips() {
        let ds = blocked_dataset();
        let m = InteractionMatrix::from_dataset(&ds);
        let model = bpr_fit(
            &m,
            &BprHyperParams {
                epochs: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path(), &m).unwrap();
        let (loaded, users, items) = BprModel::load(dir.path()).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(users, m.user_ids());
        assert_eq!(items, m.item_ids());
    }
}
