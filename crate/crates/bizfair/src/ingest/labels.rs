//! Canonical business-type labels, raw-label merge rules, and the
//! high-level (B2B/B2C/B2BC/PUB) mapping.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// High-level business archetype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HighLevelClass {
    /// Sells to other businesses.
    B2B,
    /// Sells to both businesses and consumers.
    B2BC,
    /// Sells to consumers.
    B2C,
    /// Public-sector, schools, associations.
    Pub,
}

impl HighLevelClass {
    pub const ALL: [HighLevelClass; 4] = [
        HighLevelClass::B2B,
        HighLevelClass::B2BC,
        HighLevelClass::B2C,
        HighLevelClass::Pub,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            HighLevelClass::B2B => "B2B",
            HighLevelClass::B2BC => "B2BC",
            HighLevelClass::B2C => "B2C",
            HighLevelClass::Pub => "PUB",
        }
    }

    pub fn parse(s: &str) -> Result<HighLevelClass> {
        match s {
            "B2B" => Ok(HighLevelClass::B2B),
            "B2BC" => Ok(HighLevelClass::B2BC),
            "B2C" => Ok(HighLevelClass::B2C),
            "PUB" => Ok(HighLevelClass::Pub),
            other => Err(Error::Config(format!("unknown high-level class {other:?}"))),
        }
    }
}

impl std::fmt::Display for HighLevelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of applying the merge rules to one raw label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeOutcome {
    /// Raw label maps to this canonical label (possibly itself).
    Canonical(String),
    /// Raw label is dropped by rule (e.g. the catch-all "Office").
    Drop,
    /// Raw label is not covered by the rule set; dropped with a warning count.
    Unknown,
}

/// The canonical labels known from the sample-count table (descending count order).
const KNOWN_LABELS: &[&str] = &[
    "Residential/Commercial",
    "Contractor",
    "Retail Dealer",
    "Restaurant",
    "Health Services",
    "Computer Services",
    "Electrical Contractor",
    "Wholesale Dealer",
    "Retail Dealer - Food",
    "Health and Beauty",
    "Financial Services",
    "Instruction",
    "Janitorial Services",
    "Plumber & Gas Contractor",
    "Production Company",
    "Community Association",
    "Landscape Gardener",
    "Manufacturer",
    "Personal Services",
    "Repair/ Service/Maintenance",
    "Liquor Establishment",
    "Plumber",
    "Massage Therapist",
    "Electrical-Temporary (Filming)",
    "Cosmetologist",
    "Entertainment Services",
    "Real Estate Dealer",
    "Referral Services",
    "Painter",
    "Exhibitions/Shows/Concerts",
    "Studio",
    "Travel Agent",
    "Wholesale Dealer - Food",
    "Manufacturer - Food",
    "Gas Contractor",
    "Moving/Transfer Service",
    "Auto Repairs",
    "Educational",
    "Homecraft",
    "Caterer",
    "Rentals",
    "Animal Services",
    "Photographer",
    "Electrical-Security Alarm Installation",
    "Fitness Centre",
    "Physical Therapist",
    "Beauty Services",
    "Auto Parking Lot/Parkade",
    "School (Private)",
    "Secondhand Dealer",
    "Therapeutic Touch Technique",
    "Security Services",
    "Employment Agency",
    "Printing Services",
    "Auto Dealer",
    "Roofer",
    "Money Services",
    "Scavenging",
    "Laboratory",
    "Hotel",
    "Sprinkler Contractor",
    "Jeweller",
    "ESL Instruction",
    "Seamstress/Tailor",
    "Auto Detailing",
    "Tattoo Parlour",
];

/// Merge targets that are valid raw labels but are not in `KNOWN_LABELS`
/// (they fall below the sample threshold on the reference dataset).
const EXTRA_CANONICAL: &[&str] = &["Liquor Equipment", "Laundry"];

/// Raw-label rename rules: similar categories collapsed into a broader label.
const MERGE_RULES: &[(&str, &str)] = &[
    // Real-estate sector labels collapse into Residential/Commercial.
    ("Apartment House", "Residential/Commercial"),
    ("Pre-1956 Dwelling", "Residential/Commercial"),
    ("Non-profit Housing", "Residential/Commercial"),
    ("Apartment House Strata", "Residential/Commercial"),
    ("Secondary Suite - Permanent", "Residential/Commercial"),
    ("Multiple Dwelling", "Residential/Commercial"),
    ("Duplex", "Residential/Commercial"),
    ("One-Family Dwelling", "Residential/Commercial"),
    // Liquor licensing labels collapse into Liquor Establishment.
    ("Temp Liquor Licence Amendment", "Liquor Establishment"),
    ("Liquor Establishment Standard", "Liquor Establishment"),
    ("Liquor Establishment Extended", "Liquor Establishment"),
    ("Liquor License Application", "Liquor Establishment"),
    ("Liquor Retail Store", "Liquor Establishment"),
    ("U-Brew/U-Vin", "Liquor Equipment"),
    // Laundry variants.
    ("Laundry-Coin Operated Services", "Laundry"),
    ("Laundry Depot", "Laundry"),
    ("Laundry (w/equipment)", "Laundry"),
    // Restaurant variants.
    ("Ltd Service Food Establishment", "Restaurant"),
    ("Restaurant Class 1", "Restaurant"),
    ("Restaurant Class 2", "Restaurant"),
    // Lodging.
    ("Short-Term Rental", "Hotel"),
    ("Motel", "Hotel"),
    // Trades and schooling.
    ("Contractor - Special Trades", "Contractor"),
    ("School (Business & Trade)", "School (Private)"),
    ("Artist Live/Work Studio", "Studio"),
];

/// Labels dropped outright.
const DROP_RULES: &[&str] = &["Office"];

/// High-level class per canonical label.
const HIGH_LEVEL: &[(&str, HighLevelClass)] = &[
    ("Auto Dealer", HighLevelClass::B2BC),
    ("Caterer", HighLevelClass::B2BC),
    ("Computer Services", HighLevelClass::B2BC),
    ("Contractor", HighLevelClass::B2BC),
    ("Electrical Contractor", HighLevelClass::B2BC),
    (
        "Electrical-Security Alarm Installation",
        HighLevelClass::B2BC,
    ),
    ("Employment Agency", HighLevelClass::B2BC),
    ("Entertainment Services", HighLevelClass::B2BC),
    ("Exhibitions/Shows/Concerts", HighLevelClass::B2BC),
    ("Financial Services", HighLevelClass::B2BC),
    ("Gas Contractor", HighLevelClass::B2BC),
    ("Hotel", HighLevelClass::B2BC),
    ("Instruction", HighLevelClass::B2BC),
    ("Landscape Gardener", HighLevelClass::B2BC),
    ("Money Services", HighLevelClass::B2BC),
    ("Moving/Transfer Service", HighLevelClass::B2BC),
    ("Painter", HighLevelClass::B2BC),
    ("Photographer", HighLevelClass::B2BC),
    ("Plumber", HighLevelClass::B2BC),
    ("Plumber & Gas Contractor", HighLevelClass::B2BC),
    ("Printing Services", HighLevelClass::B2BC),
    ("Production Company", HighLevelClass::B2BC),
    ("Real Estate Dealer", HighLevelClass::B2BC),
    ("Referral Services", HighLevelClass::B2BC),
    ("Rentals", HighLevelClass::B2BC),
    ("Repair/ Service/Maintenance", HighLevelClass::B2BC),
    ("Residential/Commercial", HighLevelClass::B2BC),
    ("Roofer", HighLevelClass::B2BC),
    ("Scavenging", HighLevelClass::B2BC),
    ("Security Services", HighLevelClass::B2BC),
    ("Sprinkler Contractor", HighLevelClass::B2BC),
    ("Studio", HighLevelClass::B2BC),
    ("Travel Agent", HighLevelClass::B2BC),
    ("Animal Services", HighLevelClass::B2C),
    ("Auto Detailing", HighLevelClass::B2C),
    ("Auto Parking Lot/Parkade", HighLevelClass::B2C),
    ("Auto Repairs", HighLevelClass::B2C),
    ("Beauty Services", HighLevelClass::B2C),
    ("Cosmetologist", HighLevelClass::B2C),
    ("ESL Instruction", HighLevelClass::B2C),
    ("Fitness Centre", HighLevelClass::B2C),
    ("Health Services", HighLevelClass::B2C),
    ("Health and Beauty", HighLevelClass::B2C),
    ("Homecraft", HighLevelClass::B2C),
    ("Jeweller", HighLevelClass::B2C),
    ("Liquor Establishment", HighLevelClass::B2C),
    ("Massage Therapist", HighLevelClass::B2C),
    ("Personal Services", HighLevelClass::B2C),
    ("Physical Therapist", HighLevelClass::B2C),
    ("Restaurant", HighLevelClass::B2C),
    ("Retail Dealer", HighLevelClass::B2C),
    ("Retail Dealer - Food", HighLevelClass::B2C),
    ("Seamstress/Tailor", HighLevelClass::B2C),
    ("Secondhand Dealer", HighLevelClass::B2C),
    ("Tattoo Parlour", HighLevelClass::B2C),
    ("Therapeutic Touch Technique", HighLevelClass::B2C),
    ("Janitorial Services", HighLevelClass::B2B),
    ("Laboratory", HighLevelClass::B2B),
    ("Manufacturer", HighLevelClass::B2B),
    ("Manufacturer - Food", HighLevelClass::B2B),
    ("Electrical-Temporary (Filming)", HighLevelClass::B2B),
    ("Wholesale Dealer", HighLevelClass::B2B),
    ("Wholesale Dealer - Food", HighLevelClass::B2B),
    ("Community Association", HighLevelClass::Pub),
    ("Educational", HighLevelClass::Pub),
    ("School (Private)", HighLevelClass::Pub),
];

/// Label vocabulary for a dataset: the canonical label list that survived
/// preprocessing, the raw-label merge map, and the high-level class map.
#[derive(Debug, Clone)]
pub struct LabelSpace {
    labels: Vec<String>,
    merge_map: HashMap<String, MergeOutcome>,
    high_level: HashMap<String, HighLevelClass>,
}

impl LabelSpace {
    /// The built-in space: merge rules and high-level classes for the
    /// municipal licence label set. `labels` starts empty; `build_dataset`
    /// fills it with the labels that survive preprocessing.
    pub fn builtin() -> LabelSpace {
        let mut merge_map = HashMap::new();
        for name in KNOWN_LABELS.iter().chain(EXTRA_CANONICAL) {
            merge_map.insert(name.to_string(), MergeOutcome::Canonical(name.to_string()));
        }
        for (raw, canonical) in MERGE_RULES {
            merge_map.insert(
                raw.to_string(),
                MergeOutcome::Canonical(canonical.to_string()),
            );
        }
        for raw in DROP_RULES {
            merge_map.insert(raw.to_string(), MergeOutcome::Drop);
        }
        let high_level = HIGH_LEVEL
            .iter()
            .map(|(label, class)| (label.to_string(), *class))
            .collect();
        LabelSpace {
            labels: Vec::new(),
            merge_map,
            high_level,
        }
    }

    /// A space over an explicit label list with given high-level classes.
    /// The merge map is identity over these labels; anything else is Unknown.
    pub fn from_label_classes(pairs: Vec<(String, HighLevelClass)>) -> LabelSpace {
        let mut labels = Vec::with_capacity(pairs.len());
        let mut merge_map = HashMap::new();
        let mut high_level = HashMap::new();
        for (label, class) in pairs {
            merge_map.insert(label.clone(), MergeOutcome::Canonical(label.clone()));
            high_level.insert(label.clone(), class);
            labels.push(label);
        }
        LabelSpace {
            labels,
            merge_map,
            high_level,
        }
    }

    /// Canonical labels that survived preprocessing, ordered by descending
    /// sample count (ties by name).
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub(crate) fn set_labels(&mut self, labels: Vec<String>) {
        self.labels = labels;
    }

    /// Map a raw label through the merge rules. Input is trimmed; matching is
    /// exact (labels are fixed strings, no case folding).
    pub fn merge(&self, raw_label: &str) -> MergeOutcome {
        match self.merge_map.get(raw_label.trim()) {
            Some(outcome) => outcome.clone(),
            None => MergeOutcome::Unknown,
        }
    }

    /// High-level class of a canonical label.
    pub fn high_level(&self, label: &str) -> Result<HighLevelClass> {
        self.high_level.get(label).copied().ok_or_else(|| {
            Error::Config(format!("label {label:?} has no high-level class mapping"))
        })
    }
}

/// Map a canonical label to its high-level class.
pub fn map_high_level(label: &str, space: &LabelSpace) -> Result<HighLevelClass> {
    space.high_level(label)
}
