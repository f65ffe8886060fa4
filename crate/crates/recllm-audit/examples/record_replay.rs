//! Record completions into a JSONL store, then replay them with zero network
//! activity and byte-identical text.
//!
//! ```bash
//! cargo run --example record_replay
//! ```

use recllm_audit::dataset::DomainTag;
use recllm_audit::llmclient::{
    CompletionParams, LlmClient, MockConfig, Provider, ReplayConfig, DEFAULT_ALPHA,
};
use recllm_audit::promptgen::{PromptBundle, Provenance};

fn bundle(text: &str) -> PromptBundle {
    PromptBundle {
        system_message: None,
        user_message: text.to_string(),
        provenance: Provenance::Parsing {
            domain: DomainTag::Movies,
        },
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = dir.path().join("replay.jsonl");
    let params = CompletionParams::default();

    // record: here the source is the mock; in a live audit it would be the
    // real endpoint with RECLLM_BASE_URL / RECLLM_API_KEY set
    let titles: Vec<String> = (1..=10)
        .map(|i| format!("Film {i} (199{})", i % 10))
        .collect();
    let recorder = LlmClient::new(Provider::Mock(MockConfig::new(titles, 5, 0)), DEFAULT_ALPHA)?
        .record_to(&store)?;
    let prompts = ["recommend for user A", "recommend for user B"];
    let mut recorded = Vec::new();
    for prompt in prompts {
        recorded.push(recorder.complete(&bundle(prompt), &params)?);
    }
    println!(
        "recorded {} completions into {}",
        recorded.len(),
        store.display()
    );

    // replay: strict mode never touches the network and fails on a miss
    let replayer = LlmClient::new(
        Provider::Replay(ReplayConfig {
            path: store,
            strict: true,
        }),
        DEFAULT_ALPHA,
    )?;
    for (prompt, original) in prompts.iter().zip(&recorded) {
        let replayed = replayer.complete(&bundle(prompt), &params)?;
        assert_eq!(replayed.text, original.text);
        println!(
            "\nreplayed [{prompt}] -> provider={:?}\n{}",
            replayed.provider, replayed.text
        );
    }

    let miss = replayer.complete(&bundle("never recorded"), &params);
    println!(
        "strict replay of an unrecorded prompt: {}",
        miss.unwrap_err()
    );
    Ok(())
}
