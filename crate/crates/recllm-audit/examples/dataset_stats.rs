//! Ingest an interaction log, apply k-core filtering and a chronological
//! split, and print catalog statistics.
//!
//! Run against a real MovieLens-Latest-Small checkout:
//!
//! ```bash
//! cargo run --example dataset_stats -- /path/to/ml-latest-small
//! ```
//!
//! Without an argument it generates the published-marginal twin first.

use recllm_audit::dataset::{
    chrono_split, dataset_stats, kcore_filter, load_interactions, LogFormat,
};
use recllm_audit::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let dir = match std::env::args().nth(1) {
        Some(path) => path.into(),
        None => {
            let dir = tmp.path().join("ml-twin");
            eprintln!("no dataset path given; generating the published-marginal twin...");
            synth::write_table4_twin(&dir, 7)?;
            dir
        }
    };

    let dataset = load_interactions(&dir, LogFormat::MovielensCsv)?;
    let filtered = kcore_filter(&dataset, 1)?; // k=1 keeps everything
    let stats = dataset_stats(&filtered)?;

    let mut out = Vec::new();
    stats.write_csv(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));

    let split = chrono_split(&filtered, &[0.8, 0.1, 0.1])?;
    println!("train_interactions,{}", split.train.interactions.len());
    println!(
        "validation_interactions,{}",
        split
            .validation
            .as_ref()
            .map(|v| v.interactions.len())
            .unwrap_or(0)
    );
    println!("test_interactions,{}", split.test.interactions.len());
    println!("dropped_users,{}", split.dropped_users.len());
    Ok(())
}
