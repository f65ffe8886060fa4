//! Provider-fairness and coverage metrics over recommendation count vectors:
//! Gini, HHI, entropy, catalog coverage, and the long-tail curve.
//!
//! ```bash
//! cargo run --example fairness_metrics
//! ```

use recllm_audit::metrics::{
    coverage, entropy, gini, hhi, longtail_curve, CountVector, SupportPolicy,
};
use recllm_audit::synth;

fn report(label: &str, counts: &CountVector) {
    println!(
        "{label:<22} gini={:.4}  hhi={:.4}  entropy={:.4}",
        gini(counts).unwrap(),
        hhi(counts).unwrap(),
        entropy(counts).unwrap(),
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    report(
        "uniform exposure",
        &CountVector::new(vec![5; 20], SupportPolicy::NonzeroOnly),
    );
    report(
        "one blockbuster",
        &CountVector::new(
            std::iter::once(100)
                .chain(std::iter::repeat_n(0, 19))
                .collect(),
            SupportPolicy::NonzeroOnly,
        ),
    );
    report(
        "long-tail skew",
        &CountVector::new(
            (1..=20).map(|i| i * i).collect(),
            SupportPolicy::NonzeroOnly,
        ),
    );

    // coverage over a synthetic catalog: three users, overlapping lists
    let catalog = synth::movie_catalog(50, 1);
    let lists: Vec<Vec<_>> = (0..3)
        .map(|u| {
            (0..10)
                .map(|i| catalog.items()[(u * 4 + i) % 50].id.clone())
                .collect()
        })
        .collect();
    println!(
        "\ncoverage over 50-item catalog: {:.3}",
        coverage(lists.iter().map(|l| l.iter()), &catalog)?
    );

    let counts = CountVector::from_lists(
        lists.iter().map(|l| l.iter()),
        &catalog,
        SupportPolicy::NonzeroOnly,
    );
    println!(
        "long-tail curve (rank, count): {:?}",
        longtail_curve(&counts)
    );
    Ok(())
}
