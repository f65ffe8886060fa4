//! Bit-exact prompt rendering for the top-k experiment matrix
//! (scenario x role x emphasis x explicit/implicit) and the sequential
//! zero-shot / ICL-1 / ICL-2 templates.
//!
//! Every template string here is load-bearing: golden-file tests pin the
//! rendered output byte for byte, so edits to any literal are breaking.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, DomainTag, Item, ItemId};
use crate::profile::{
    ContextProfile, ContextStrategy, DemographicAttr, DemographicClause, ExampleBlock,
};

/// Sentence prefixed to the user message under fairness emphasis E1.
pub const FAIRNESS_EMPHASIS: &str =
    "Ensure a fair representation of both popular and less-known movies. ";

/// System message for role R1.
pub const ROLE_RECOMMENDER: &str = "Given a user, act as recommender system.";

/// System message for role R2.
pub const ROLE_FAIR_RECOMMENDER: &str = "Act as a fair recommender system balancing between \
                                         popular and less-known movies to ensure provider fairness.";

/// The seven top-k prompt scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::S1,
        Scenario::S2,
        Scenario::S3,
        Scenario::S4,
        Scenario::S5,
        Scenario::S6,
        Scenario::S7,
    ];

    /// The scenario instruction sentence, verbatim.
    pub fn instruction(self) -> &'static str {
        match self {
            Scenario::S1 => "Recommend 10 movies that the user will likely enjoy.",
            Scenario::S2 => {
                "Recommend 10 movies that the user will likely enjoy, particularly focusing on \
                 genres and themes similar to their past favorites."
            }
            Scenario::S3 => {
                "Recommend 10 movies the user will likely enjoy, taking into account both their \
                 favorite genres and past movie ratings."
            }
            Scenario::S4 => {
                "Suggest 10 high-quality, lesser-known films that diverge from mainstream \
                 blockbusters, yet align with the user's tastes."
            }
            Scenario::S5 => {
                "Offer 10 unique and unexpected movie recommendations aimed at broadening the \
                 user\u{2019}s cinematic horizons beyond their usual preferences."
            }
            Scenario::S6 => {
                "Provide 10 carefully selected movie recommendations, each accompanied by a \
                 rationale explaining its suitability for the user's preferences."
            }
            Scenario::S7 => {
                "Let's think this through: What would be 10 great movie recommendations for this \
                 user and why?"
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::S1 => "Simple",
            Scenario::S2 => "Genre-focused",
            Scenario::S3 => "Rating-focused",
            Scenario::S4 => "Diversify Recommendations",
            Scenario::S5 => "Surprise",
            Scenario::S6 => "Motivate Reasoning",
            Scenario::S7 => "Chain of Thought (COT)",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::S1 => "s1",
            Scenario::S2 => "s2",
            Scenario::S3 => "s3",
            Scenario::S4 => "s4",
            Scenario::S5 => "s5",
            Scenario::S6 => "s6",
            Scenario::S7 => "s7",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Full user-message template for a scenario, with the literal
/// `{user_movies_string}` slot.
pub fn scenario_template(scenario: Scenario) -> String {
    format!(
        "Based on these movies: {{user_movies_string}}, {}",
        decapitalize(scenario.instruction())
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    R0,
    R1,
    R2,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::R0, Role::R1, Role::R2];

    pub fn system_message(self) -> Option<&'static str> {
        match self {
            Role::R0 => None,
            Role::R1 => Some(ROLE_RECOMMENDER),
            Role::R2 => Some(ROLE_FAIR_RECOMMENDER),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Role::R0 => "r0",
            Role::R1 => "r1",
            Role::R2 => "r2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emphasis {
    E0,
    E1,
}

impl Emphasis {
    pub const ALL: [Emphasis; 2] = [Emphasis::E0, Emphasis::E1];

    pub fn tag(self) -> &'static str {
        match self {
            Emphasis::E0 => "e0",
            Emphasis::E1 => "e1",
        }
    }
}

/// Where a prompt came from: every knob that shaped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    TopK {
        scenario: Scenario,
        role: Role,
        emphasis: Emphasis,
        explicit: bool,
        k: usize,
    },
    Sequential {
        demos: usize,
        strategy: ContextStrategy,
        demographic: DemographicAttr,
        domain: DomainTag,
    },
    /// Restructuring prompt used by llm-assisted output parsing.
    Parsing { domain: DomainTag },
}

impl Provenance {
    /// Short cell tag used in directory names and reports.
    pub fn cell_tag(&self) -> String {
        match self {
            Provenance::TopK {
                scenario,
                role,
                emphasis,
                explicit,
                ..
            } => {
                let mut tag = format!("{}_{}_{}", scenario.tag(), role.tag(), emphasis.tag());
                if *explicit {
                    tag.push_str("_explicit");
                }
                tag
            }
            Provenance::Sequential {
                demos,
                strategy,
                demographic,
                ..
            } => {
                let kind = match demos {
                    0 => "zeroshot",
                    1 => "icl1",
                    _ => "icl2",
                };
                let strat = match strategy {
                    ContextStrategy::Frequent => "freq",
                    ContextStrategy::RecencyFrequent => "recfreq",
                };
                let demo = match demographic {
                    DemographicAttr::None => "nodemo",
                    DemographicAttr::Gender => "gender",
                    DemographicAttr::AgeGroup => "age",
                };
                format!("seq_{kind}_{strat}_{demo}")
            }
            Provenance::Parsing { .. } => "parsing".to_string(),
        }
    }
}

/// A fully rendered system+user message pair with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_message: Option<String>,
    pub user_message: String,
    pub provenance: Provenance,
}

impl PromptBundle {
    /// Canonical plain-text form used for golden fixtures: an optional
    /// `=== SYSTEM ===` section followed by the `=== USER ===` section.
    pub fn fixture_text(&self) -> String {
        let mut out = String::new();
        if let Some(system) = &self.system_message {
            out.push_str("=== SYSTEM ===\n");
            out.push_str(system);
            out.push('\n');
        }
        out.push_str("=== USER ===\n");
        out.push_str(&self.user_message);
        out.push('\n');
        out
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("explicit ratings are only valid with scenario S3")]
    ExplicitRequiresS3,
    #[error("cannot render an empty item list")]
    EmptyEntries,
    #[error("item {0} not present in the catalog")]
    UnknownItem(ItemId),
    #[error("k must be >= 1")]
    InvalidK,
}

/// Render the `{user_movies_string}` slot.
///
/// Implicit: `Title (Genres: G1|G2)` joined by ", ". Explicit:
/// `Title (Genres: G1/G2, Rating: r/5)`. Genre-less items render as the
/// bare title rather than empty parentheses.
pub fn render_movies_string(
    entries: &[(&Item, Option<f64>)],
    explicit: bool,
) -> Result<String, PromptError> {
    if entries.is_empty() {
        return Err(PromptError::EmptyEntries);
    }
    let rendered: Vec<String> = entries
        .iter()
        .map(|(item, rating)| {
            let mut parts: Vec<String> = Vec::new();
            if !item.genres.is_empty() {
                let sep = if explicit { "/" } else { "|" };
                parts.push(format!("Genres: {}", item.genres.join(sep)));
            }
            if explicit {
                if let Some(r) = rating {
                    parts.push(format!("Rating: {}/5", format_rating(*r)));
                }
            }
            if parts.is_empty() {
                item.title.clone()
            } else {
                format!("{} ({})", item.title, parts.join(", "))
            }
        })
        .collect();
    Ok(rendered.join(", "))
}

fn format_rating(r: f64) -> String {
    if (r - r.round()).abs() < 1e-9 {
        format!("{}", r.round() as i64)
    } else {
        format!("{r}")
    }
}

fn decapitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Build one cell of the top-k experiment matrix.
///
/// `k` substitutes the literal "10" of the scenario instruction when it
/// differs from 10; explicit rating rendering is only valid for S3.
pub fn build_topk_prompt(
    profile: &ContextProfile,
    catalog: &Catalog,
    scenario: Scenario,
    role: Role,
    emphasis: Emphasis,
    explicit: bool,
    k: usize,
) -> Result<PromptBundle, PromptError> {
    if explicit && scenario != Scenario::S3 {
        return Err(PromptError::ExplicitRequiresS3);
    }
    if k == 0 {
        return Err(PromptError::InvalidK);
    }
    let entries = resolve_entries(profile, catalog)?;
    let movies = render_movies_string(&entries, explicit)?;

    let mut instruction = scenario.instruction().to_string();
    if k != 10 {
        instruction = instruction.replacen("10", &k.to_string(), 1);
    }
    let mut user_message = String::new();
    if emphasis == Emphasis::E1 {
        user_message.push_str(FAIRNESS_EMPHASIS);
    }
    user_message.push_str("Based on these movies: ");
    user_message.push_str(&movies);
    user_message.push_str(", ");
    user_message.push_str(&decapitalize(&instruction));

    Ok(PromptBundle {
        system_message: role.system_message().map(str::to_string),
        user_message,
        provenance: Provenance::TopK {
            scenario,
            role,
            emphasis,
            explicit,
            k,
        },
    })
}

fn resolve_entries<'a>(
    profile: &ContextProfile,
    catalog: &'a Catalog,
) -> Result<Vec<(&'a Item, Option<f64>)>, PromptError> {
    profile
        .entries
        .iter()
        .map(|e| {
            catalog
                .get(&e.item_id)
                .map(|item| (item, Some(e.rating)))
                .ok_or_else(|| PromptError::UnknownItem(e.item_id.clone()))
        })
        .collect()
}

struct SequentialWording {
    header_verb: &'static str,
    noun: &'static str,
    preference_noun: &'static str,
    recent_verb: &'static str,
}

fn wording(domain: DomainTag) -> SequentialWording {
    match domain {
        DomainTag::Movies => SequentialWording {
            header_verb: "watched",
            noun: "movies",
            preference_noun: "movie",
            recent_verb: "watched",
        },
        DomainTag::Music => SequentialWording {
            header_verb: "listened to",
            noun: "songs",
            preference_noun: "music",
            recent_verb: "listened to",
        },
    }
}

/// Build a sequential zero-shot / ICL-1 / ICL-2 prompt.
///
/// Context lines render as `- "Title" in genre(s) G1|G2 with rating r`
/// (movies) or `- "Title" by Artist with rating r` (music). With
/// demonstrations present, the recent-inputs list and the
/// "You should recommend:" block are appended and the closing question
/// becomes "... after the above movies?". ICL-2 separates the recent list
/// from the context sentence with a blank line, matching the printed
/// template exactly; ICL-1 does not.
pub fn build_sequential_prompt(
    context: &ContextProfile,
    examples: &ExampleBlock,
    demographic: &DemographicClause,
    domain: DomainTag,
    catalog: &Catalog,
) -> Result<PromptBundle, PromptError> {
    if context.entries.is_empty() {
        return Err(PromptError::EmptyEntries);
    }
    assert!(examples.demonstrations.len() <= 2);
    let words = wording(domain);

    let mut msg = format!(
        "The user {}has {} the following {}:\n\n",
        demographic.rendered, words.header_verb, words.noun
    );
    for entry in &context.entries {
        let item = catalog
            .get(&entry.item_id)
            .ok_or_else(|| PromptError::UnknownItem(entry.item_id.clone()))?;
        msg.push_str(&format!(
            "- {}\n",
            item_line(item, Some(entry.rating), domain)
        ));
    }
    msg.push_str(&format!(
        "\nThis selection reflects the user's {} preferences.\n",
        words.preference_noun
    ));

    if examples.demonstrations.is_empty() {
        msg.push_str("What would be the top-1 suitable next recommendation?");
    } else {
        if examples.demonstrations.len() >= 2 {
            msg.push('\n');
        }
        msg.push_str(&format!(
            "Given the user has recently {} the following {} in order:\n",
            words.recent_verb, words.noun
        ));
        for (i, entry) in examples.recent_inputs.iter().enumerate() {
            let item = catalog
                .get(&entry.item_id)
                .ok_or_else(|| PromptError::UnknownItem(entry.item_id.clone()))?;
            msg.push_str(&format!(
                "{}. {}\n",
                i + 1,
                item_line(item, entry.rating, domain)
            ));
        }
        msg.push_str("\nYou should recommend:\n");
        for (i, entry) in examples.demonstrations.iter().enumerate() {
            let item = catalog
                .get(&entry.item_id)
                .ok_or_else(|| PromptError::UnknownItem(entry.item_id.clone()))?;
            msg.push_str(&format!(
                "Recommendation {}: {}\n",
                i + 1,
                item_line(item, entry.rating, domain)
            ));
        }
        msg.push_str(&format!(
            "What would be the top-1 suitable next recommendation after the above {}?",
            words.noun
        ));
    }

    Ok(PromptBundle {
        system_message: None,
        user_message: msg,
        provenance: Provenance::Sequential {
            demos: examples.demonstrations.len(),
            strategy: context.strategy,
            demographic: demographic.attribute,
            domain,
        },
    })
}

fn item_line(item: &Item, rating: Option<f64>, domain: DomainTag) -> String {
    let mut line = format!("\"{}\"", item.title);
    match domain {
        DomainTag::Movies => {
            if !item.genres.is_empty() {
                line.push_str(&format!(" in genre(s) {}", item.genres.join("|")));
            }
        }
        DomainTag::Music => {
            if let Some(artist) = &item.artist {
                line.push_str(&format!(" by {artist}"));
            }
        }
    }
    if let Some(r) = rating {
        line.push_str(&format!(" with rating {}", format_rating(r)));
    }
    line
}
