//! The closed set of biases, their categories, and the subreddits that
//! supply each bias's training answers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;

/// Sample count for a bias backed by a single subreddit.
pub const FULL_QUOTA: u32 = 25_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasCategory {
    Geographical,
    Political,
    Gender,
    Age,
}

impl BiasCategory {
    pub const ALL: [BiasCategory; 4] = [
        BiasCategory::Geographical,
        BiasCategory::Political,
        BiasCategory::Gender,
        BiasCategory::Age,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BiasCategory::Geographical => "geographical",
            BiasCategory::Political => "political",
            BiasCategory::Gender => "gender",
            BiasCategory::Age => "age",
        }
    }
}

/// One of the eleven modelled biases.
///
/// Variant order is the canonical order used for sorting corpora and for
/// listing biases; ids are the lowercase snake-case strings used on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bias {
    German,
    American,
    LatinAmerican,
    MiddleEast,
    Liberal,
    Conservative,
    Female,
    Male,
    Teenager,
    #[serde(rename = "people_over_30")]
    PeopleOver30,
    OldPeople,
}

impl Bias {
    pub const ALL: [Bias; 11] = [
        Bias::German,
        Bias::American,
        Bias::LatinAmerican,
        Bias::MiddleEast,
        Bias::Liberal,
        Bias::Conservative,
        Bias::Female,
        Bias::Male,
        Bias::Teenager,
        Bias::PeopleOver30,
        Bias::OldPeople,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Bias::German => "german",
            Bias::American => "american",
            Bias::LatinAmerican => "latin_american",
            Bias::MiddleEast => "middle_east",
            Bias::Liberal => "liberal",
            Bias::Conservative => "conservative",
            Bias::Female => "female",
            Bias::Male => "male",
            Bias::Teenager => "teenager",
            Bias::PeopleOver30 => "people_over_30",
            Bias::OldPeople => "old_people",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Bias::German => "German",
            Bias::American => "American",
            Bias::LatinAmerican => "Latin American",
            Bias::MiddleEast => "Middle East",
            Bias::Liberal => "Liberal",
            Bias::Conservative => "Conservative",
            Bias::Female => "Female",
            Bias::Male => "Male",
            Bias::Teenager => "Teenager",
            Bias::PeopleOver30 => "People Over 30",
            Bias::OldPeople => "Old People",
        }
    }

    pub fn category(self) -> BiasCategory {
        match self {
            Bias::German | Bias::American | Bias::LatinAmerican | Bias::MiddleEast => {
                BiasCategory::Geographical
            }
            Bias::Liberal | Bias::Conservative => BiasCategory::Political,
            Bias::Female | Bias::Male => BiasCategory::Gender,
            Bias::Teenager | Bias::PeopleOver30 | Bias::OldPeople => BiasCategory::Age,
        }
    }

    /// Sources for this bias, in registry order.
    pub fn sources(self) -> impl Iterator<Item = &'static BiasSource> {
        REGISTRY.iter().filter(move |s| s.bias == self)
    }

    /// The subreddit whose name conditions prompts for this bias: the first
    /// source in registry order (`teenager` renders as `AskTeenGirls`).
    pub fn serving_subreddit(self) -> &'static str {
        self.sources()
            .next()
            .map(|s| s.subreddit)
            .expect("every bias has at least one source")
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Bias {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bias::ALL
            .iter()
            .copied()
            .find(|b| b.id() == s)
            .ok_or_else(|| ValidationError::UnknownBias(s.to_string()))
    }
}

/// A subreddit feeding one bias, with the number of responses kept from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BiasSource {
    pub bias: Bias,
    pub subreddit: &'static str,
    pub quota: u32,
}

impl BiasSource {
    const fn new(bias: Bias, subreddit: &'static str, quota: u32) -> Self {
        BiasSource { bias, subreddit, quota }
    }

    /// Quota under a global scale factor: rounded down, never below 1.
    pub fn scaled_quota(&self, scale: f64) -> usize {
        scale_quota(self.quota, scale)
    }
}

// AskMen has no published count; it mirrors AskWomen.
static REGISTRY: [BiasSource; 13] = [
    BiasSource::new(Bias::German, "AskAGerman", FULL_QUOTA),
    BiasSource::new(Bias::American, "AskAnAmerican", FULL_QUOTA),
    BiasSource::new(Bias::LatinAmerican, "AskLatinAmerica", FULL_QUOTA),
    BiasSource::new(Bias::MiddleEast, "AskMiddleEast", FULL_QUOTA),
    BiasSource::new(Bias::Liberal, "AskALiberal", FULL_QUOTA),
    BiasSource::new(Bias::Conservative, "AskConservatives", FULL_QUOTA),
    BiasSource::new(Bias::Female, "AskWomen", FULL_QUOTA),
    BiasSource::new(Bias::Male, "AskMen", FULL_QUOTA),
    BiasSource::new(Bias::Teenager, "AskTeenGirls", FULL_QUOTA / 2),
    BiasSource::new(Bias::Teenager, "AskTeenBoys", FULL_QUOTA / 2),
    BiasSource::new(Bias::PeopleOver30, "AskMenOver30", FULL_QUOTA / 2),
    BiasSource::new(Bias::PeopleOver30, "AskWomenOver30", FULL_QUOTA / 2),
    BiasSource::new(Bias::OldPeople, "AskOldPeople", FULL_QUOTA),
];

/// All thirteen sources in table order.
pub fn registry() -> &'static [BiasSource] {
    &REGISTRY
}

/// Sources for a bias given by its wire id.
pub fn lookup(bias_id: &str) -> Result<Vec<BiasSource>, ValidationError> {
    let bias: Bias = bias_id.parse()?;
    Ok(bias.sources().copied().collect())
}

/// Finds the source that owns a subreddit name (exact, case-sensitive).
pub fn source_for_subreddit(subreddit: &str) -> Option<&'static BiasSource> {
    REGISTRY.iter().find(|s| s.subreddit == subreddit)
}

pub fn scale_quota(quota: u32, scale: f64) -> usize {
    // The epsilon keeps products like 25000 * 0.002 from flooring to 49.
    let scaled = (f64::from(quota) * scale + 1e-9).floor();
    if scaled.is_finite() && scaled >= 1.0 {
        scaled as usize
    } else {
        1
    }
}

/// Machine-readable registry row, as served at `GET /api/biases`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub bias: Bias,
    pub display_name: String,
    pub category: BiasCategory,
    pub subreddit: String,
    pub quota: u32,
}

pub fn registry_entries() -> Vec<RegistryEntry> {
    REGISTRY
        .iter()
        .map(|s| RegistryEntry {
            bias: s.bias,
            display_name: s.bias.display_name().to_string(),
            category: s.bias.category(),
            subreddit: s.subreddit.to_string(),
            quota: s.quota,
        })
        .collect()
}
