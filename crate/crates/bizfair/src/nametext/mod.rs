//! Tokenization, given-name masking, and gender-swap augmentation.

mod lexicon;

pub use lexicon::{EvalLists, GenderMatch, ListPair, NameLexicon, NameListId};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::Record;

/// A whitespace-tokenized text. Tokens keep their original casing and
/// punctuation; joining with single spaces round-trips modulo whitespace runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    pub fn from_tokens(tokens: Vec<String>) -> TokenSeq {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        TokenSeq { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Split on Unicode whitespace. Empty input gives an empty sequence.
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq {
        tokens: text.split_whitespace().map(String::from).collect(),
    }
}

/// How given-name tokens are replaced.
#[derive(Debug, Clone)]
pub struct MaskPolicy {
    placeholder: String,
    strip_possessive: bool,
}

impl MaskPolicy {
    pub fn new(placeholder: impl Into<String>, strip_possessive: bool) -> Result<MaskPolicy> {
        let placeholder = placeholder.into();
        if placeholder.is_empty() || placeholder.contains(char::is_whitespace) {
            return Err(Error::Config(
                "mask placeholder must be a single non-empty token without whitespace".into(),
            ));
        }
        Ok(MaskPolicy {
            placeholder,
            strip_possessive,
        })
    }

    pub fn placeholder(&self) -> &str {
        &self.placeholder
    }

    pub fn strip_possessive(&self) -> bool {
        self.strip_possessive
    }
}

impl Default for MaskPolicy {
    fn default() -> Self {
        MaskPolicy {
            placeholder: "_".into(),
            strip_possessive: true,
        }
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// A token decomposed for lexicon lookup: the folded key and the possessive
/// suffix that was stripped (verbatim, possibly empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenKey<'a> {
    pub key: String,
    pub possessive: &'a str,
}

/// Build the lexicon lookup key for one token: strip one trailing "'s" or
/// "'" when `strip_possessive` is set, strip leading/trailing non-letter
/// characters, then case-fold. Matching against the lexicon is whole-token
/// only; keys are never substrings.
pub fn lookup_key(token: &str, strip_possessive: bool) -> TokenKey<'_> {
    let mut core = token;
    let mut possessive = "";
    if strip_possessive {
        let chars: Vec<char> = token.chars().collect();
        let n = chars.len();
        if n >= 2 && is_apostrophe(chars[n - 2]) && (chars[n - 1] == 's' || chars[n - 1] == 'S') {
            let cut = token.len() - chars[n - 2].len_utf8() - chars[n - 1].len_utf8();
            core = &token[..cut];
            possessive = &token[cut..];
        } else if n >= 1 && is_apostrophe(chars[n - 1]) {
            let cut = token.len() - chars[n - 1].len_utf8();
            core = &token[..cut];
            possessive = &token[cut..];
        }
    }
    let trimmed = core.trim_matches(|c: char| !c.is_alphabetic());
    TokenKey {
        key: trimmed.to_lowercase(),
        possessive,
    }
}

/// Replace every token whose lookup key is a known given name with the
/// placeholder. Token count is preserved; output tokens are re-joined with
/// single spaces.
pub fn mask_names(text: &str, lex: &NameLexicon, policy: &MaskPolicy) -> String {
    text.split_whitespace()
        .map(|token| {
            let tk = lookup_key(token, policy.strip_possessive);
            if lex.contains_key(&tk.key) {
                policy.placeholder.as_str()
            } else {
                token
            }
        })
        .collect::<Vec<&str>>()
        .join(" ")
}

/// Append, for every record containing at least one single-gender given
/// name, a copy with each such name swapped for a uniformly drawn name of
/// the opposite gender (possessive suffixes preserved). Unisex names are
/// left alone and do not trigger a copy on their own. Originals are
/// preserved verbatim, in order, ahead of the appended copies.
///
/// Each record draws from its own stream seeded with `seed ^ index`, so
/// per-record work is order-independent.
pub fn gender_swap_augment(records: &[Record], lex: &NameLexicon, seed: u64) -> Vec<Record> {
    let mut out: Vec<Record> = records.to_vec();
    for (index, record) in records.iter().enumerate() {
        if let Some(swapped) = swap_record_names(record, lex, seed ^ index as u64) {
            out.push(swapped);
        }
    }
    out
}

fn swap_record_names(record: &Record, lex: &NameLexicon, seed: u64) -> Option<Record> {
    let tokens: Vec<&str> = record.name.split_whitespace().collect();
    let keys: Vec<TokenKey> = tokens.iter().map(|t| lookup_key(t, true)).collect();
    let gendered = keys.iter().any(|tk| {
        matches!(
            lex.gender_of(&tk.key),
            Some(GenderMatch::Male) | Some(GenderMatch::Female)
        )
    });
    if !gendered {
        return None;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let swapped: Vec<String> = tokens
        .iter()
        .zip(&keys)
        .map(|(token, tk)| match lex.gender_of(&tk.key) {
            Some(GenderMatch::Male) => draw(lex.female_names(), &mut rng) + tk.possessive,
            Some(GenderMatch::Female) => draw(lex.male_names(), &mut rng) + tk.possessive,
            _ => token.to_string(),
        })
        .collect();
    Some(Record {
        name: swapped.join(" "),
        label: record.label.clone(),
    })
}

fn draw(names: &[String], rng: &mut ChaCha8Rng) -> String {
    names[rng.gen_range(0..names.len())].clone()
}
