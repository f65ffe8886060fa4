//! Render the full top-k prompt matrix (scenario x role x emphasis) for one
//! user profile and print each cell.
//!
//! ```bash
//! cargo run --example prompt_matrix
//! ```

use recllm_audit::dataset::{Catalog, Item, ItemId, UserId};
use recllm_audit::profile::{ContextEntry, ContextProfile, ContextStrategy};
use recllm_audit::promptgen::{build_topk_prompt, Emphasis, Role, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog: Catalog = [
        Item::new(
            ItemId::new("1"),
            "The Matrix",
            vec!["Action".into(), "Sci-Fi".into()],
        ),
        Item::new(
            ItemId::new("2"),
            "Inception",
            vec!["Action".into(), "Thriller".into()],
        ),
        Item::new(
            ItemId::new("3"),
            "Toy Story",
            vec!["Animation".into(), "Comedy".into()],
        ),
    ]
    .into_iter()
    .collect();
    let profile = ContextProfile {
        user_id: UserId::new("demo"),
        entries: vec![
            ContextEntry {
                item_id: ItemId::new("1"),
                rating: 5.0,
                timestamp: 3,
            },
            ContextEntry {
                item_id: ItemId::new("2"),
                rating: 4.5,
                timestamp: 2,
            },
            ContextEntry {
                item_id: ItemId::new("3"),
                rating: 4.0,
                timestamp: 1,
            },
        ],
        strategy: ContextStrategy::Frequent,
    };

    for scenario in Scenario::ALL {
        for role in Role::ALL {
            for emphasis in Emphasis::ALL {
                let explicit = scenario == Scenario::S3;
                let bundle =
                    build_topk_prompt(&profile, &catalog, scenario, role, emphasis, explicit, 10)?;
                println!(
                    "--- {} ({}) ---",
                    bundle.provenance.cell_tag(),
                    scenario.label()
                );
                if let Some(system) = &bundle.system_message {
                    println!("[system] {system}");
                }
                println!("[user]   {}\n", bundle.user_message);
            }
        }
    }
    Ok(())
}
