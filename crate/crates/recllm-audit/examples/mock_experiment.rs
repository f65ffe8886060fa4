//! Run a complete experiment matrix end to end against the deterministic
//! mock provider and print the rendered result table.
//!
//! ```bash
//! cargo run --example mock_experiment
//! ```

use recllm_audit::runner::{run_experiment, ExperimentConfig};
use recllm_audit::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = tempfile::tempdir()?;
    let dataset = synth::movie_dataset(synth::movie_catalog(80, 11), 15, 12, 5, 3);
    synth::write_movielens_csv(&dataset, data.path())?;

    let out = tempfile::tempdir()?;
    let config = format!(
        r#"
        [dataset]
        path = "{}"
        format = "movielens_csv"
        split = [0.8, 0.1, 0.1]

        [matrix]
        scenarios = ["s1", "s4", "s7"]
        roles = ["r0", "r2"]
        emphases = ["e0", "e1"]
        k = 10

        [provider]
        kind = "mock"
        concurrency = 4

        [stats]
        bootstrap_samples = 500
        repetitions = 3

        [output]
        dir = "{}"
        "#,
        data.path().display(),
        out.path().join("results").display(),
    );

    let cfg = ExperimentConfig::from_toml_str(&config)?;
    let outcome = run_experiment(&cfg, false)?;
    println!(
        "completed {} cells over {} users with {} calls (${:.4})\n",
        outcome.cells_completed, outcome.users, outcome.ledger.calls, outcome.ledger.total_cost,
    );
    print!(
        "{}",
        std::fs::read_to_string(outcome.results_dir.join("report/tables.md"))?
    );
    Ok(())
}
