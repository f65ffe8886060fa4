//! Build sequential zero-shot, ICL-1, and ICL-2 prompts from a user's train
//! history, with and without a demographic clause.
//!
//! ```bash
//! cargo run --example sequential_prompts
//! ```

use recllm_audit::dataset::{DomainTag, Interaction, ItemId, UserId};
use recllm_audit::profile::{
    render_demographic, sample_context, take_examples, ContextStrategy, DemographicAttr,
    DemographicClause, Gender, UserDemographics, DEFAULT_RECENCY_LAMBDA,
};
use recllm_audit::promptgen::build_sequential_prompt;
use recllm_audit::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset = synth::movie_dataset(synth::movie_catalog(30, 7), 1, 12, 1, 99);
    let user = UserId::new("u001");
    let history: Vec<Interaction> = dataset
        .interactions
        .iter()
        .filter(|r| r.user_id == user)
        .cloned()
        .collect();

    let demographics = UserDemographics {
        gender: Some(Gender::Female),
        age_group: None,
    };

    for (label, demos, attribute) in [
        ("zero-shot", 0usize, DemographicAttr::None),
        ("ICL-1", 1, DemographicAttr::None),
        ("ICL-2 + gender", 2, DemographicAttr::Gender),
    ] {
        let examples = take_examples(&history, 5, demos)?;
        // the context samples from history outside the example window
        let window: Vec<(ItemId, i64)> = examples
            .recent_inputs
            .iter()
            .chain(examples.demonstrations.iter())
            .map(|e| (e.item_id.clone(), e.timestamp))
            .collect();
        let context_history: Vec<Interaction> = history
            .iter()
            .filter(|r| !window.contains(&(r.item_id.clone(), r.timestamp)))
            .cloned()
            .collect();
        let context = sample_context(
            &context_history,
            DomainTag::Movies,
            ContextStrategy::RecencyFrequent,
            5,
            DEFAULT_RECENCY_LAMBDA,
        )?;
        let clause: DemographicClause = render_demographic(attribute, &demographics)?;
        let bundle = build_sequential_prompt(
            &context,
            &examples,
            &clause,
            DomainTag::Movies,
            &dataset.catalog,
        )?;
        println!("=== {label} ===\n{}\n", bundle.user_message);
    }
    Ok(())
}
