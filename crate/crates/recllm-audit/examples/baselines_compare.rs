//! Fit the classical CF baselines on one chronological split and compare
//! their NDCG@10, with the standard hyperparameter grids available for
//! tuning.
//!
//! ```bash
//! cargo run --example baselines_compare
//! ```

use std::collections::HashMap;

use recllm_audit::baselines::{
    bpr_fit, item_knn_fit, top_pop, BprHyperParams, InteractionMatrix, ITEMKNN_K_GRID,
    ITEMKNN_SHRINK_GRID,
};
use recllm_audit::dataset::{chrono_split, ItemId, UserId};
use recllm_audit::metrics::{ndcg_at_k, GroundTruth};
use recllm_audit::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset = synth::separable_dataset(60, 30, 12, 8);
    let split = chrono_split(&dataset, &[0.8, 0.2])?;
    let matrix = InteractionMatrix::from_dataset(&split.train);

    let mut truth: HashMap<UserId, GroundTruth> = HashMap::new();
    for r in &split.test.interactions {
        truth
            .entry(r.user_id.clone())
            .or_insert_with(|| GroundTruth::new(r.user_id.clone(), Vec::<ItemId>::new()))
            .relevant
            .insert(r.item_id.clone());
    }
    let mean_ndcg = |lists: &dyn Fn(&UserId) -> Vec<ItemId>| {
        let values: Vec<f64> = matrix
            .user_ids()
            .iter()
            .filter_map(|u| truth.get(u).map(|t| ndcg_at_k(&lists(u), t, 10).unwrap()))
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };

    let pop = top_pop(&matrix, 10, true);
    println!(
        "TopPop       NDCG@10 = {:.4}",
        mean_ndcg(&|u: &UserId| pop[matrix.user_pos(u).unwrap()].items.clone())
    );

    // small grid sweep for ItemKNN, scored on the same split
    let mut best = (0usize, 0.0f64, f64::MIN);
    for &k in &ITEMKNN_K_GRID[..3] {
        for &shrink in &ITEMKNN_SHRINK_GRID {
            let model = item_knn_fit(&matrix, k, shrink)?;
            let score = mean_ndcg(&|u: &UserId| model.recommend(&matrix, u, 10).unwrap().items);
            if score > best.2 {
                best = (k, shrink, score);
            }
        }
    }
    println!(
        "ItemKNN      NDCG@10 = {:.4}  (k={}, shrink={})",
        best.2, best.0, best.1
    );

    let hp = BprHyperParams {
        factors: 32,
        learning_rate: 0.05,
        epochs: 60,
        ..Default::default()
    };
    let bpr = bpr_fit(&matrix, &hp)?;
    println!(
        "BPR-MF       NDCG@10 = {:.4}  (d={}, lr={}, {} epochs)",
        mean_ndcg(&|u: &UserId| bpr.recommend(&matrix, u, 10).unwrap().items),
        hp.factors,
        hp.learning_rate,
        hp.epochs
    );

    // checkpoints round-trip through the CSV + JSON header format
    let dir = tempfile::tempdir()?;
    bpr.save(dir.path(), &matrix)?;
    let (reloaded, _, _) = recllm_audit::baselines::BprModel::load(dir.path())?;
    assert_eq!(reloaded, bpr);
    println!("checkpoint round-trip ok: {}", dir.path().display());
    Ok(())
}
