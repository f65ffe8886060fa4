//! Parse free-text model output and resolve each candidate to a catalog item
//! via gestalt fuzzy matching.
//!
//! ```bash
//! cargo run --example output_matching
//! ```

use recllm_audit::dataset::{Catalog, DomainTag, Item, ItemId, UserId};
use recllm_audit::matcher::{
    parse_recommendations, resolve_list, similarity_ratio, CatalogIndex, ParseMode, ResolveOptions,
};
use recllm_audit::promptgen::Provenance;

const REPLY: &str = r#"Here are some films you might enjoy:

1. "Moon (2009)" - a lonely, clever chamber piece
2. The Shawshank Redemption
3. Jurrasic Park (1993)
I'd also point you toward Bowfinger (1999) because it is underseen.
4. "Moon (2009)"
5. Some Movie That Does Not Exist
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog: Catalog = [
        ("10", "Shawshank Redemption, The (1994)"),
        ("17", "Bowfinger (1999)"),
        ("22", "Jurassic Park (1993)"),
        ("26", "Moon (2009)"),
    ]
    .into_iter()
    .map(|(id, title)| Item::new(ItemId::new(id), title, vec![]))
    .collect();

    println!(
        "gestalt ratio(\"abcd\", \"bcde\") = {}",
        similarity_ratio("abcd", "bcde")
    );

    let candidates = parse_recommendations(REPLY, DomainTag::Movies);
    println!("\nparsed {} candidates:", candidates.len());
    for c in &candidates {
        println!("  #{} {:?}", c.rank, c.title);
    }

    let index = CatalogIndex::build(&catalog)?;
    let opts = ResolveOptions {
        domain: DomainTag::Movies,
        mode: ParseMode::Rules,
        threshold: 0.6,
    };
    let list = resolve_list(
        REPLY,
        &index,
        &opts,
        UserId::new("demo"),
        Provenance::Parsing {
            domain: DomainTag::Movies,
        },
    )?;
    println!(
        "\nresolved ids (rank order, deduplicated): {:?}",
        list.item_ids
    );
    println!("duplicates dropped: {}", list.duplicates.len());
    for miss in &list.unmatched {
        println!(
            "unmatched {:?} (best score {:.3})",
            miss.candidate.title, miss.score
        );
    }
    Ok(())
}
