//! Given-name lexicon: case-folded male/female name sets loaded from census
//! name files, plus the fixed evaluation name lists.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gender of a lexicon match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenderMatch {
    Male,
    Female,
    /// Present in both the male and the female set.
    Unisex,
}

/// Identifier of one evaluation name list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NameListId {
    CanadianFemale,
    CanadianMale,
    MexicanFemale,
    MexicanMale,
}

impl NameListId {
    pub const ALL: [NameListId; 4] = [
        NameListId::CanadianFemale,
        NameListId::CanadianMale,
        NameListId::MexicanFemale,
        NameListId::MexicanMale,
    ];

    /// Key used in the TSV override file.
    pub fn key(&self) -> &'static str {
        match self {
            NameListId::CanadianFemale => "canadian_female",
            NameListId::CanadianMale => "canadian_male",
            NameListId::MexicanFemale => "mexican_female",
            NameListId::MexicanMale => "mexican_male",
        }
    }

    pub fn parse(s: &str) -> Result<NameListId> {
        NameListId::ALL
            .iter()
            .copied()
            .find(|id| id.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown name list {s:?}")))
    }

    /// Display name, e.g. "Canadian female".
    pub fn display(&self) -> &'static str {
        match self {
            NameListId::CanadianFemale => "Canadian female",
            NameListId::CanadianMale => "Canadian male",
            NameListId::MexicanFemale => "Mexican female",
            NameListId::MexicanMale => "Mexican male",
        }
    }

    /// Gender half of the display name ("male"/"female").
    pub fn gender_word(&self) -> &'static str {
        match self {
            NameListId::CanadianFemale | NameListId::MexicanFemale => "female",
            NameListId::CanadianMale | NameListId::MexicanMale => "male",
        }
    }

    fn origin(&self) -> &'static str {
        match self {
            NameListId::CanadianFemale | NameListId::CanadianMale => "Canadian",
            NameListId::MexicanFemale | NameListId::MexicanMale => "Mexican",
        }
    }
}

impl fmt::Display for NameListId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display())
    }
}

/// An ordered pair of evaluation name lists to compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListPair {
    pub a: NameListId,
    pub b: NameListId,
}

impl ListPair {
    pub fn new(a: NameListId, b: NameListId) -> ListPair {
        ListPair { a, b }
    }

    /// The six standard comparison rows, in reporting order.
    pub fn standard() -> Vec<ListPair> {
        use NameListId::*;
        vec![
            ListPair::new(CanadianMale, CanadianMale),
            ListPair::new(CanadianFemale, CanadianFemale),
            ListPair::new(CanadianMale, CanadianFemale),
            ListPair::new(CanadianMale, MexicanMale),
            ListPair::new(CanadianFemale, MexicanFemale),
            ListPair::new(CanadianMale, MexicanFemale),
        ]
    }

    /// Row label, e.g. "Canadian male + female" or
    /// "Canadian male + Mexican male". The second half drops the origin when
    /// it matches the first list's origin.
    pub fn label(&self) -> String {
        if self.a.origin() == self.b.origin() {
            format!("{} + {}", self.a.display(), self.b.gender_word())
        } else {
            format!("{} + {}", self.a.display(), self.b.display())
        }
    }
}

const CANADIAN_FEMALE: &[&str] = &[
    "Olivia",
    "Emma",
    "Charlotte",
    "Sophia",
    "Aria",
    "Ava",
    "Chloc",
    "Zoey",
    "Abigail",
    "Amilia",
];
const CANADIAN_MALE: &[&str] = &[
    "Noah", "Liam", "Jackson", "Lucas", "Logan", "Benjamin", "Jacob", "William", "Oliver", "James",
];
// "María José" is kept as one compound given name.
const MEXICAN_FEMALE: &[&str] = &[
    "Ximena",
    "Valentina",
    "María",
    "Fernanda",
    "Sofía",
    "María José",
    "Martina",
    "Emilia",
    "Zoe",
    "Mia",
    "Dulce",
];
const MEXICAN_MALE: &[&str] = &[
    "Santiago",
    "Mateo",
    "Matías",
    "Diego",
    "Sebastián",
    "Nicolás",
    "Miguel",
    "Ángel",
    "Iker",
    "Alejandro",
    "Samuel",
];

/// The four fixed evaluation name lists, with original casing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalLists {
    canadian_female: Vec<String>,
    canadian_male: Vec<String>,
    mexican_female: Vec<String>,
    mexican_male: Vec<String>,
}

impl EvalLists {
    /// The built-in lists.
    pub fn builtin() -> EvalLists {
        let to_vec = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
        EvalLists {
            canadian_female: to_vec(CANADIAN_FEMALE),
            canadian_male: to_vec(CANADIAN_MALE),
            mexican_female: to_vec(MEXICAN_FEMALE),
            mexican_male: to_vec(MEXICAN_MALE),
        }
    }

    /// Load replacement lists from a TSV file of `<list-name>\t<Name>` lines.
    /// All four lists must end up non-empty.
    pub fn from_tsv_file(path: &Path) -> Result<EvalLists> {
        let file = File::open(path)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
        let mut lists = EvalLists {
            canadian_female: Vec::new(),
            canadian_male: Vec::new(),
            mexican_female: Vec::new(),
            mexican_male: Vec::new(),
        };
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (list, name) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected `<list-name>\\t<Name>`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let id = NameListId::parse(list.trim())?;
            lists.list_mut(id).push(name.trim().to_string());
        }
        for id in NameListId::ALL {
            if lists.get(id).is_empty() {
                return Err(Error::Config(format!(
                    "{}: list {} is empty",
                    path.display(),
                    id.key()
                )));
            }
        }
        Ok(lists)
    }

    pub fn get(&self, id: NameListId) -> &[String] {
        match id {
            NameListId::CanadianFemale => &self.canadian_female,
            NameListId::CanadianMale => &self.canadian_male,
            NameListId::MexicanFemale => &self.mexican_female,
            NameListId::MexicanMale => &self.mexican_male,
        }
    }

    fn list_mut(&mut self, id: NameListId) -> &mut Vec<String> {
        match id {
            NameListId::CanadianFemale => &mut self.canadian_female,
            NameListId::CanadianMale => &mut self.canadian_male,
            NameListId::MexicanFemale => &mut self.mexican_female,
            NameListId::MexicanMale => &mut self.mexican_male,
        }
    }
}

impl Default for EvalLists {
    fn default() -> Self {
        EvalLists::builtin()
    }
}

/// Case-folded given-name sets with deterministic draw lists for swapping.
#[derive(Debug, Clone)]
pub struct NameLexicon {
    male: BTreeSet<String>,
    female: BTreeSet<String>,
    /// Sorted, first-letter-capitalized names for replacement draws.
    male_display: Vec<String>,
    female_display: Vec<String>,
    eval_lists: EvalLists,
}

fn display_case(folded: &str) -> String {
    let mut chars = folded.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn fold_into_set(names: impl IntoIterator<Item = String>) -> BTreeSet<String> {
    names
        .into_iter()
        .map(|n| n.trim().to_lowercase())
        .filter(|n| !n.is_empty())
        .collect()
}

impl NameLexicon {
    /// Load a lexicon from two census-format name files (one name per line,
    /// `NAME frequency cumulative_frequency rank`, whitespace-separated).
    pub fn load_census_names(male_file: &Path, female_file: &Path) -> Result<NameLexicon> {
        let male = read_census_file(male_file)?;
        let female = read_census_file(female_file)?;
        Ok(NameLexicon::from_folded(male, female))
    }

    /// Build a lexicon from explicit name collections (folded internally).
    pub fn from_sets<I, J>(male: I, female: J) -> NameLexicon
    where
        I: IntoIterator,
        I::Item: Into<String>,
        J: IntoIterator,
        J::Item: Into<String>,
    {
        let male = fold_into_set(male.into_iter().map(Into::into));
        let female = fold_into_set(female.into_iter().map(Into::into));
        NameLexicon::from_folded(male, female)
    }

    fn from_folded(male: BTreeSet<String>, female: BTreeSet<String>) -> NameLexicon {
        let male_display = male.iter().map(|n| display_case(n)).collect();
        let female_display = female.iter().map(|n| display_case(n)).collect();
        NameLexicon {
            male,
            female,
            male_display,
            female_display,
            eval_lists: EvalLists::builtin(),
        }
    }

    pub fn with_eval_lists(mut self, lists: EvalLists) -> NameLexicon {
        self.eval_lists = lists;
        self
    }

    pub fn male_count(&self) -> usize {
        self.male.len()
    }

    pub fn female_count(&self) -> usize {
        self.female.len()
    }

    /// Whether a folded lookup key is a known given name (either gender).
    pub fn contains_key(&self, key: &str) -> bool {
        !key.is_empty() && (self.male.contains(key) || self.female.contains(key))
    }

    /// Gender of a folded lookup key, if it is a known given name.
    pub fn gender_of(&self, key: &str) -> Option<GenderMatch> {
        if key.is_empty() {
            return None;
        }
        match (self.male.contains(key), self.female.contains(key)) {
            (true, true) => Some(GenderMatch::Unisex),
            (true, false) => Some(GenderMatch::Male),
            (false, true) => Some(GenderMatch::Female),
            (false, false) => None,
        }
    }

    /// Names (display-cased, sorted) available as male replacements.
    pub fn male_names(&self) -> &[String] {
        &self.male_display
    }

    /// Names (display-cased, sorted) available as female replacements.
    pub fn female_names(&self) -> &[String] {
        &self.female_display
    }

    pub fn eval_lists(&self) -> &EvalLists {
        &self.eval_lists
    }
}

fn read_census_file(path: &Path) -> Result<BTreeSet<String>> {
    let file = File::open(path).map_err(|e| {
        Error::Config(format!(
            "cannot open census name file {}: {e}",
            path.display()
        ))
    })?;
    let mut names = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if let Some(name) = line.split_whitespace().next() {
            names.insert(name.to_lowercase());
        }
    }
    if names.is_empty() {
        return Err(Error::Config(format!(
            "census name file {} contains no names",
            path.display()
        )));
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn census_file_parses_first_field() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "JAMES          3.318  3.318      1").unwrap();
        writeln!(file, "JOHN           3.271  6.589      2").unwrap();
        writeln!(file, "DANIEL         1.479 31.275     14").unwrap();
        writeln!(file).unwrap();
        let names = read_census_file(file.path()).unwrap();
        assert!(names.contains("james"));
        assert!(names.contains("daniel"));
        assert_eq!(names.len(), 3);
    }

    #[test]
    fn empty_census_file_is_fatal() {
        let file = tempfile::NamedTempFile::new().unwrap();
        assert!(read_census_file(file.path()).is_err());
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let lex = NameLexicon::from_sets(["DANIEL", "BOB"], ["ALICE"]);
        assert_eq!(lex.gender_of("daniel"), Some(GenderMatch::Male));
        assert_eq!(lex.gender_of("alice"), Some(GenderMatch::Female));
        assert!(lex.contains_key("bob"));
        assert!(!lex.contains_key("carol"));
        assert!(!lex.contains_key(""));
    }

    #[test]
    fn unisex_names_match_both_sets() {
        let lex = NameLexicon::from_sets(["JEAN", "BOB"], ["JEAN", "ALICE"]);
        assert_eq!(lex.gender_of("jean"), Some(GenderMatch::Unisex));
    }

    #[test]
    fn display_names_are_capitalized_and_sorted() {
        let lex = NameLexicon::from_sets(["ZEKE", "ABE"], ["MARÍA"]);
        assert_eq!(lex.male_names(), ["Abe".to_string(), "Zeke".to_string()]);
        assert_eq!(lex.female_names(), ["María".to_string()]);
    }

    #[test]
    fn builtin_eval_lists_are_complete() {
        let lists = EvalLists::builtin();
        assert_eq!(lists.get(NameListId::CanadianFemale).len(), 10);
        assert_eq!(lists.get(NameListId::CanadianMale).len(), 10);
        assert_eq!(lists.get(NameListId::MexicanFemale).len(), 11);
        assert_eq!(lists.get(NameListId::MexicanMale).len(), 11);
        assert!(lists
            .get(NameListId::MexicanFemale)
            .contains(&"María José".to_string()));
    }

    #[test]
    fn pair_labels_match_reporting_style() {
        use NameListId::*;
        assert_eq!(
            ListPair::new(CanadianMale, CanadianMale).label(),
            "Canadian male + male"
        );
        assert_eq!(
            ListPair::new(CanadianMale, CanadianFemale).label(),
            "Canadian male + female"
        );
        assert_eq!(
            ListPair::new(CanadianMale, MexicanFemale).label(),
            "Canadian male + Mexican female"
        );
        assert_eq!(ListPair::standard().len(), 6);
    }

    #[test]
    fn eval_list_tsv_override() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for id in NameListId::ALL {
            writeln!(file, "{}\tTest{}", id.key(), id.key()).unwrap();
        }
        let lists = EvalLists::from_tsv_file(file.path()).unwrap();
        assert_eq!(
            lists.get(NameListId::CanadianMale),
            ["Testcanadian_male".to_string()]
        );

        let mut partial = tempfile::NamedTempFile::new().unwrap();
        writeln!(partial, "canadian_male\tNoah").unwrap();
        assert!(EvalLists::from_tsv_file(partial.path()).is_err());
    }
}
