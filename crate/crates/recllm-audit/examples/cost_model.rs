//! Token-cost accounting: per-call arithmetic, the audit-scale total, and a
//! latency summary.
//!
//! ```bash
//! cargo run --example cost_model
//! ```

use recllm_audit::llmclient::{
    estimate_cost, ledger_summary, CostLedger, ProviderTag, RawResponse,
};

fn main() {
    // 1500 tokens at $0.02 per 1000
    println!(
        "cost of one 1500-token call: ${}",
        estimate_cost(1500, 0.02)
    );

    // a full audit: 610 users x 7 prompts
    let mut ledger = CostLedger::new(0.02);
    ledger.prompts_per_user = Some(7);
    for call in 0..610 * 7 {
        ledger.record(&RawResponse {
            text: String::new(),
            prompt_tokens: 1100,
            completion_tokens: 400,
            latency_s: 1.5 + (call % 12) as f64 * 0.75,
            provider: ProviderTag::Live,
        });
    }
    let summary = ledger_summary(&ledger);
    println!(
        "{} calls, {} prompts/user, total ${:.2}",
        summary.calls,
        summary.prompts_per_user.unwrap(),
        summary.total_cost,
    );
    let latency = summary.latency.unwrap();
    println!(
        "latency: mean {:.2}s, median {:.2}s, p95 {:.2}s",
        latency.mean_s, latency.median_s, latency.p95_s,
    );
    println!("mean tokens per call: {:.0}", summary.mean_tokens_per_call);
}
