//! Shared helpers for the integration suites: golden prompt inputs and the
//! brute-force gestalt-ratio reference.

// each integration-test binary includes this module and uses its own subset
#![allow(dead_code)]

use std::path::PathBuf;

use recllm_audit::dataset::{Catalog, DomainTag, Item, ItemId, UserId};
use recllm_audit::profile::{
    ContextEntry, ContextProfile, ContextStrategy, DemographicAttr, DemographicClause,
    ExampleBlock, ExampleEntry,
};
use recllm_audit::promptgen::{
    build_sequential_prompt, build_topk_prompt, Emphasis, PromptBundle, Role, Scenario,
};

pub fn fixtures_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn prompts_dir() -> PathBuf {
    fixtures_root().join("prompts")
}

pub fn transcripts_dir() -> PathBuf {
    fixtures_root().join("transcripts")
}

/// The worked example pair used across the experiment-matrix fixtures.
pub fn matrix_catalog() -> Catalog {
    [
        Item::new(
            ItemId::new("m1"),
            "The Matrix",
            vec!["Action".into(), "Sci-Fi".into()],
        ),
        Item::new(
            ItemId::new("m2"),
            "Inception",
            vec!["Action".into(), "Thriller".into()],
        ),
    ]
    .into_iter()
    .collect()
}

pub fn matrix_profile() -> ContextProfile {
    ContextProfile {
        user_id: UserId::new("golden-user"),
        entries: vec![
            ContextEntry {
                item_id: ItemId::new("m1"),
                rating: 5.0,
                timestamp: 2,
            },
            ContextEntry {
                item_id: ItemId::new("m2"),
                rating: 4.5,
                timestamp: 1,
            },
        ],
        strategy: ContextStrategy::Frequent,
    }
}

/// Catalog holding the items of the reference sequential walkthroughs.
pub fn sequential_catalog() -> Catalog {
    let movie = |id: &str, title: &str, genres: &[&str]| {
        Item::new(
            ItemId::new(id),
            title,
            genres.iter().map(|g| g.to_string()).collect(),
        )
    };
    [
        movie("c1", "From Russia with Love (1963)", &["Action"]),
        movie(
            "c2",
            "Star Trek IV: The Voyage Home (1986)",
            &["Action", "Adventure", "Sci-Fi"],
        ),
        movie("c3", "Planet of the Apes (1968)", &["Action", "Sci-Fi"]),
        movie(
            "c4",
            "Star Wars: Episode I - The Phantom Menace (1999)",
            &["Action", "Adventure", "Fantasy", "Sci-Fi"],
        ),
        movie(
            "c5",
            "Final Conflict, The (a.k.a. Omen III: The Final Conflict) (1981)",
            &["Horror"],
        ),
        movie("r1", "Strange Days (1995)", &["Action", "Crime", "Sci-Fi"]),
        movie("r2", "Face/Off (1997)", &["Action", "Sci-Fi", "Thriller"]),
        movie("r3", "Bringing Out the Dead (1999)", &["Drama", "Horror"]),
        movie("r4", "Sixth Sense, The (1999)", &["Thriller"]),
        movie(
            "r5",
            "Austin Powers: The Spy Who Shagged Me (1999)",
            &["Comedy"],
        ),
        movie("d1", "Bowfinger (1999)", &["Comedy"]),
        movie("d2", "Arlington Road (1999)", &["Thriller"]),
    ]
    .into_iter()
    .collect()
}

fn context(entries: &[(&str, f64)]) -> ContextProfile {
    ContextProfile {
        user_id: UserId::new("golden-user"),
        entries: entries
            .iter()
            .enumerate()
            .map(|(i, &(id, rating))| ContextEntry {
                item_id: ItemId::new(id),
                rating,
                timestamp: 100 - i as i64,
            })
            .collect(),
        strategy: ContextStrategy::Frequent,
    }
}

fn example_entry(id: &str, rating: f64, ts: i64) -> ExampleEntry {
    ExampleEntry {
        item_id: ItemId::new(id),
        rating: Some(rating),
        timestamp: ts,
    }
}

pub fn gender_clause() -> DemographicClause {
    DemographicClause {
        attribute: DemographicAttr::Gender,
        rendered: "is female, and ".to_string(),
    }
}

pub fn age_clause() -> DemographicClause {
    DemographicClause {
        attribute: DemographicAttr::AgeGroup,
        rendered: "is young, and ".to_string(),
    }
}

pub fn zero_shot_context() -> ContextProfile {
    context(&[
        ("c1", 5.0),
        ("c2", 4.0),
        ("c3", 3.0),
        ("c4", 4.0),
        ("c5", 3.0),
    ])
}

/// The in-context walkthroughs list the same movies with a different second
/// rating.
pub fn icl_context() -> ContextProfile {
    context(&[
        ("c1", 5.0),
        ("c2", 3.0),
        ("c3", 3.0),
        ("c4", 4.0),
        ("c5", 3.0),
    ])
}

pub fn icl1_examples() -> ExampleBlock {
    ExampleBlock {
        recent_inputs: vec![
            example_entry("r2", 4.0, 201),
            example_entry("r3", 5.0, 202),
            example_entry("r4", 5.0, 203),
            example_entry("r5", 4.0, 204),
            example_entry("d2", 4.0, 205),
        ],
        demonstrations: vec![example_entry("d1", 3.0, 206)],
    }
}

pub fn icl2_examples() -> ExampleBlock {
    ExampleBlock {
        recent_inputs: vec![
            example_entry("r1", 3.0, 201),
            example_entry("r2", 4.0, 202),
            example_entry("r3", 5.0, 203),
            example_entry("r4", 5.0, 204),
            example_entry("r5", 4.0, 205),
        ],
        demonstrations: vec![example_entry("d1", 3.0, 206), example_entry("d2", 4.0, 207)],
    }
}

pub fn music_catalog() -> Catalog {
    [
        Item::new(ItemId::new("t1"), "Hey Jude", vec![]).with_artist("The Beatles"),
        Item::new(ItemId::new("t2"), "Paranoid Android", vec![]).with_artist("Radiohead"),
        Item::new(ItemId::new("t3"), "Respect", vec![]).with_artist("Aretha Franklin"),
        Item::new(ItemId::new("t4"), "Hotel California", vec![]).with_artist("Eagles"),
    ]
    .into_iter()
    .collect()
}

pub fn music_profile() -> ContextProfile {
    ContextProfile {
        user_id: UserId::new("golden-user"),
        entries: vec![
            ContextEntry {
                item_id: ItemId::new("t1"),
                rating: 5.0,
                timestamp: 3,
            },
            ContextEntry {
                item_id: ItemId::new("t2"),
                rating: 4.0,
                timestamp: 2,
            },
        ],
        strategy: ContextStrategy::Frequent,
    }
}

/// Every golden prompt case: (fixture name, rendered bundle).
pub fn golden_cases() -> Vec<(String, PromptBundle)> {
    let matrix_catalog = matrix_catalog();
    let profile = matrix_profile();
    let mut cases = Vec::new();

    for scenario in Scenario::ALL {
        for role in Role::ALL {
            for emphasis in Emphasis::ALL {
                let bundle = build_topk_prompt(
                    &profile,
                    &matrix_catalog,
                    scenario,
                    role,
                    emphasis,
                    false,
                    10,
                )
                .unwrap();
                let name = format!("{}_{}_{}", scenario.tag(), role.tag(), emphasis.tag());
                cases.push((name.clone(), bundle));
                if scenario == Scenario::S3 {
                    let bundle = build_topk_prompt(
                        &profile,
                        &matrix_catalog,
                        scenario,
                        role,
                        emphasis,
                        true,
                        10,
                    )
                    .unwrap();
                    cases.push((format!("{name}_explicit"), bundle));
                }
            }
        }
    }

    let seq_catalog = sequential_catalog();
    let seq_cases: Vec<(&str, ContextProfile, ExampleBlock, DemographicClause)> = vec![
        (
            "seq_zeroshot_nodemo",
            zero_shot_context(),
            ExampleBlock::empty(),
            DemographicClause::none(),
        ),
        (
            "seq_zeroshot_gender",
            zero_shot_context(),
            ExampleBlock::empty(),
            gender_clause(),
        ),
        (
            "seq_zeroshot_age",
            zero_shot_context(),
            ExampleBlock::empty(),
            age_clause(),
        ),
        (
            "seq_icl1_nodemo",
            icl_context(),
            icl1_examples(),
            DemographicClause::none(),
        ),
        (
            "seq_icl1_gender",
            icl_context(),
            icl1_examples(),
            gender_clause(),
        ),
        ("seq_icl1_age", icl_context(), icl1_examples(), age_clause()),
        (
            "seq_icl2_nodemo",
            icl_context(),
            icl2_examples(),
            DemographicClause::none(),
        ),
        (
            "seq_icl2_gender",
            icl_context(),
            icl2_examples(),
            gender_clause(),
        ),
        ("seq_icl2_age", icl_context(), icl2_examples(), age_clause()),
    ];
    for (name, profile, examples, clause) in seq_cases {
        let bundle = build_sequential_prompt(
            &profile,
            &examples,
            &clause,
            DomainTag::Movies,
            &seq_catalog,
        )
        .unwrap();
        cases.push((name.to_string(), bundle));
    }

    let music_catalog = music_catalog();
    let music_profile = music_profile();
    let zero_shot = build_sequential_prompt(
        &music_profile,
        &ExampleBlock::empty(),
        &DemographicClause::none(),
        DomainTag::Music,
        &music_catalog,
    )
    .unwrap();
    cases.push(("seq_music_zeroshot_nodemo".to_string(), zero_shot));
    let examples = ExampleBlock {
        recent_inputs: vec![example_entry("t3", 4.0, 10)],
        demonstrations: vec![example_entry("t4", 5.0, 11)],
    };
    let icl1 = build_sequential_prompt(
        &music_profile,
        &examples,
        &DemographicClause::none(),
        DomainTag::Music,
        &music_catalog,
    )
    .unwrap();
    cases.push(("seq_music_icl1_nodemo".to_string(), icl1));

    cases
}

/// Brute-force Ratcliff/Obershelp reference: O(n*m) table per window,
/// earliest (i, j) maximal block, recursing left and right of each match.
/// Kept independent of the library implementation on purpose.
pub fn reference_ratio(a: &str, b: &str) -> f64 {
    fn matched(a: &[char], b: &[char]) -> usize {
        if a.is_empty() || b.is_empty() {
            return 0;
        }
        let (mut bi, mut bj, mut bsize) = (0usize, 0usize, 0usize);
        let mut prev = vec![0usize; b.len() + 1];
        for (i, &ca) in a.iter().enumerate() {
            let mut cur = vec![0usize; b.len() + 1];
            for (j, &cb) in b.iter().enumerate() {
                if ca == cb {
                    let k = prev[j] + 1;
                    cur[j + 1] = k;
                    if k > bsize {
                        bi = i + 1 - k;
                        bj = j + 1 - k;
                        bsize = k;
                    }
                }
            }
            prev = cur;
        }
        if bsize == 0 {
            return 0;
        }
        bsize + matched(&a[..bi], &b[..bj]) + matched(&a[bi + bsize..], &b[bj + bsize..])
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * matched(&a, &b) as f64 / (a.len() + b.len()) as f64
}
