//! Write the MovieLens-Latest-Small-shaped twin dataset (610 users, 9,724
//! items, 100,836 interactions with the published Gini marginals) to disk,
//! so the CLI configs have something to point at on machines without the
//! real download.
//!
//! ```bash
//! cargo run --example make_twin_dataset            # writes data/ml-twin
//! cargo run --example make_twin_dataset -- my/dir  # custom location
//! ```

use recllm_audit::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/ml-twin".to_string());
    synth::write_table4_twin(std::path::Path::new(&dir), 7)?;
    println!("twin dataset written to {dir}/{{ratings.csv,movies.csv}}");
    Ok(())
}
