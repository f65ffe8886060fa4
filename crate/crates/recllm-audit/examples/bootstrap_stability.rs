//! Bootstrap confidence intervals over per-user metric values and a
//! cross-run stability summary.
//!
//! ```bash
//! cargo run --example bootstrap_stability
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recllm_audit::stats::{bootstrap_mean_ci, bootstrap_mean_ci_enumerated, stability_summary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // per-user NDCG-like values around 0.01
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let per_user: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..0.03)).collect();

    let result = bootstrap_mean_ci(&per_user, 1000, 42)?;
    println!(
        "bootstrap mean {:.6}, 95% CI ({:.6}, {:.6}) over {} replicates [{}]",
        result.mean_of_means,
        result.ci_low,
        result.ci_high,
        result.replicates,
        result.rng_algorithm,
    );

    // tiny inputs can be enumerated exhaustively instead of sampled
    let exact = bootstrap_mean_ci_enumerated(&[0.2, 0.5, 0.8])?;
    println!(
        "exhaustive 3-element bootstrap: mean {:.6}, CI ({:.6}, {:.6}), {} resamples",
        exact.mean_of_means, exact.ci_low, exact.ci_high, exact.replicates,
    );

    // five repeated runs of one experiment cell
    let runs = [0.0088, 0.0091, 0.0095, 0.0094, 0.0095];
    let stability = stability_summary(&runs)?;
    println!(
        "stability over {:?}: mean {:.5}, std {:.6}, range {:.6}",
        runs, stability.mean, stability.std, stability.range,
    );
    Ok(())
}
