//! Pronoun extraction from back-translated English text.
//!
//! Text is split on whitespace and each token is trimmed of surrounding
//! punctuation (an internal slash survives, so `he/she,` becomes `he/she`).
//! Combined forms (`he or she`, `she or he`, `he/she`, `s/he`) are searched
//! first, left to right over the whole text; only when none occurs is the
//! text scanned again for single pronouns. The first hit wins.
//!
//! `he`, `she`, `they` and the combined forms only occur as subjects, so they
//! match anywhere. `you`, `it` and `one` double as objects or numerals and only
//! count at the start of a clause (sentence start or after `,` `;` `:`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Closed set of pronoun forms, plus `Other` for unanticipated ones.
///
/// The derived order matches the byte order of the labels, which is also the
/// row order of the count tables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PronounCategory {
    None,
    He,
    HeOrShe,
    HeSlashShe,
    It,
    One,
    She,
    SheOrHe,
    They,
    You,
    /// Matched token kept verbatim; needs manual review.
    Other(String),
}

impl PronounCategory {
    /// Every fixed category in table order.
    pub const FIXED: [PronounCategory; 10] = [
        PronounCategory::None,
        PronounCategory::He,
        PronounCategory::HeOrShe,
        PronounCategory::HeSlashShe,
        PronounCategory::It,
        PronounCategory::One,
        PronounCategory::She,
        PronounCategory::SheOrHe,
        PronounCategory::They,
        PronounCategory::You,
    ];

    pub fn label(&self) -> &str {
        match self {
            PronounCategory::None => "(none)",
            PronounCategory::He => "he",
            PronounCategory::HeOrShe => "he or she",
            PronounCategory::HeSlashShe => "he/she",
            PronounCategory::It => "it",
            PronounCategory::One => "one",
            PronounCategory::She => "she",
            PronounCategory::SheOrHe => "she or he",
            PronounCategory::They => "they",
            PronounCategory::You => "you",
            PronounCategory::Other(token) => token,
        }
    }

    /// Parses a canonical label. Unknown labels are not accepted here; see
    /// [`PronounCategory::from_label_lenient`].
    pub fn from_label(label: &str) -> Option<PronounCategory> {
        Self::FIXED.iter().find(|c| c.label() == label).cloned()
    }

    /// Case- and whitespace-insensitive label parse. Empty strings and `none`
    /// mean no pronoun; anything unrecognised becomes `Other`.
    pub fn from_label_lenient(label: &str) -> (PronounCategory, bool) {
        let norm = label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        if norm.is_empty() || norm == "none" {
            return (PronounCategory::None, true);
        }
        match Self::from_label(&norm) {
            Some(c) => (c, true),
            None => (PronounCategory::Other(label.trim().to_string()), false),
        }
    }

    pub fn is_other(&self) -> bool {
        matches!(self, PronounCategory::Other(_))
    }
}

impl fmt::Display for PronounCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PronounCategory {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self::from_label(s).unwrap_or_else(|| PronounCategory::Other(s.to_string())))
    }
}

impl Serialize for PronounCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for PronounCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(s.parse().unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Position {
    Anywhere,
    ClauseStart,
}

struct Form {
    combined: bool,
    tokens: &'static [&'static str],
    position: Position,
    category: fn(&str) -> PronounCategory,
}

// precedence order: combined forms, then single pronouns
const LEXICON: &[Form] = &[
    Form { combined: true, tokens: &["he", "or", "she"], position: Position::Anywhere, category: |_| PronounCategory::HeOrShe },
    Form { combined: true, tokens: &["she", "or", "he"], position: Position::Anywhere, category: |_| PronounCategory::SheOrHe },
    Form { combined: true, tokens: &["he/she"], position: Position::Anywhere, category: |_| PronounCategory::HeSlashShe },
    Form { combined: true, tokens: &["s/he"], position: Position::Anywhere, category: |t| PronounCategory::Other(t.to_string()) },
    Form { combined: false, tokens: &["he"], position: Position::Anywhere, category: |_| PronounCategory::He },
    Form { combined: false, tokens: &["she"], position: Position::Anywhere, category: |_| PronounCategory::She },
    Form { combined: false, tokens: &["they"], position: Position::Anywhere, category: |_| PronounCategory::They },
    Form { combined: false, tokens: &["you"], position: Position::ClauseStart, category: |_| PronounCategory::You },
    Form { combined: false, tokens: &["one"], position: Position::ClauseStart, category: |_| PronounCategory::One },
    Form { combined: false, tokens: &["it"], position: Position::ClauseStart, category: |_| PronounCategory::It },
];

struct Token<'a> {
    raw: &'a str,
    word: String,
    clause_start: bool,
}

fn is_trim_char(c: char) -> bool {
    !(c.is_alphanumeric() || c == '/')
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut clause_start = true;
    for raw in text.split_whitespace() {
        let core = raw.trim_matches(is_trim_char);
        // a trailing slash is punctuation too ("he/" at a line break)
        let core = core.trim_matches('/');
        let ends_clause = raw.ends_with([',', ';', ':']);
        if !core.is_empty() {
            out.push(Token { raw: core, word: core.to_lowercase(), clause_start });
            clause_start = false;
        }
        if ends_clause {
            clause_start = true;
        }
    }
    out
}

/// Category of the first lexicon form found in `back_text`, or `None`.
pub fn extract_pronoun(back_text: &str) -> PronounCategory {
    let tokens = tokenize(back_text);
    for tier in [true, false] {
        if let Some(found) = scan(&tokens, tier) {
            return found;
        }
    }
    PronounCategory::None
}

fn scan(tokens: &[Token<'_>], combined: bool) -> Option<PronounCategory> {
    for start in 0..tokens.len() {
        for form in LEXICON.iter().filter(|f| f.combined == combined) {
            let end = start + form.tokens.len();
            if end > tokens.len() {
                continue;
            }
            if form.position == Position::ClauseStart && !tokens[start].clause_start {
                continue;
            }
            let hit = form
                .tokens
                .iter()
                .zip(&tokens[start..end])
                .all(|(want, tok)| *want == tok.word);
            if hit {
                return Some((form.category)(tokens[start].raw));
            }
        }
    }
    None
}

/// Text listing of the compiled-in lexicon, in precedence order.
pub fn lexicon_listing() -> String {
    let mut out = String::from("# precedence\tform\tcategory\tposition\n");
    for (i, form) in LEXICON.iter().enumerate() {
        let phrase = form.tokens.join(" ");
        let category = (form.category)(&phrase);
        let category = if category.is_other() { "OTHER".to_string() } else { category.label().to_string() };
        let position = match form.position {
            Position::Anywhere => "anywhere",
            Position::ClauseStart => "clause-start",
        };
        out.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, phrase, category, position));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(extract_pronoun("As a software engineer, he takes care of support tasks."), PronounCategory::He);
        assert_eq!(
            extract_pronoun("As a software engineer, he or she performs user training."),
            PronounCategory::HeOrShe
        );
        assert_eq!(extract_pronoun("Software support tasks are performed."), PronounCategory::None);
        assert_eq!(
            extract_pronoun("As a software engineer, she manages development branches."),
            PronounCategory::She
        );
    }

    #[test]
    fn word_boundaries() {
        assert_eq!(extract_pronoun("The engineer shelved it"), PronounCategory::None);
        assert_eq!(extract_pronoun("Theyre here. Sheer luck, hello."), PronounCategory::None);
        assert_eq!(extract_pronoun("The engineer helps them"), PronounCategory::None);
    }

    #[test]
    fn slash_and_punctuation() {
        assert_eq!(extract_pronoun("As a software engineer, he/she fixes bugs."), PronounCategory::HeSlashShe);
        assert_eq!(extract_pronoun("(He/She) fixes bugs."), PronounCategory::HeSlashShe);
        assert_eq!(extract_pronoun("As an engineer, s/he fixes bugs."), PronounCategory::Other("s/he".into()));
        assert_eq!(extract_pronoun("As an engineer, she or he fixes bugs."), PronounCategory::SheOrHe);
    }

    #[test]
    fn possessives_do_not_count() {
        assert_eq!(extract_pronoun("As a software engineer, his job is testing."), PronounCategory::None);
        assert_eq!(extract_pronoun("Their code is tested by her team."), PronounCategory::None);
    }

    #[test]
    fn clause_start_forms() {
        assert_eq!(extract_pronoun("As a software engineer, you write code."), PronounCategory::You);
        assert_eq!(extract_pronoun("As a software engineer, it performs setup."), PronounCategory::It);
        assert_eq!(extract_pronoun("As a software engineer, one asks coworkers."), PronounCategory::One);
        assert_eq!(extract_pronoun("As one of the engineers, they fix bugs."), PronounCategory::They);
        assert_eq!(extract_pronoun("Helping you is what I do."), PronounCategory::None);
    }

    #[test]
    fn first_match_wins() {
        assert_eq!(extract_pronoun("He said she would test it."), PronounCategory::He);
        assert_eq!(extract_pronoun("She said he or she would test it."), PronounCategory::HeOrShe);
        assert_eq!(extract_pronoun("As a software engineer, they say he tests."), PronounCategory::They);
    }

    #[test]
    fn labels_round_trip() {
        for c in PronounCategory::FIXED {
            assert_eq!(PronounCategory::from_label(c.label()), Some(c.clone()));
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<PronounCategory>(&json).unwrap(), c);
        }
        let mut labels: Vec<&str> = PronounCategory::FIXED.iter().map(|c| c.label()).collect();
        let ordered = labels.clone();
        labels.sort();
        assert_eq!(labels, ordered);
    }

    #[test]
    fn lenient_labels() {
        assert_eq!(PronounCategory::from_label_lenient(" He  or She "), (PronounCategory::HeOrShe, true));
        assert_eq!(PronounCategory::from_label_lenient(""), (PronounCategory::None, true));
        assert_eq!(PronounCategory::from_label_lenient("ze"), (PronounCategory::Other("ze".into()), false));
    }

    #[test]
    fn listing_mentions_every_form() {
        let listing = lexicon_listing();
        assert_eq!(listing.lines().count(), LEXICON.len() + 1);
        assert!(listing.lines().nth(1).unwrap().contains("he or she"));
    }

    fn word() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("he".to_string()),
            Just("she".to_string()),
            Just("or".to_string()),
            Just("he/she".to_string()),
            Just("they,".to_string()),
            Just("you".to_string()),
            Just("it.".to_string()),
            "[a-z]{1,8}",
        ]
    }

    proptest! {
        #[test]
        fn case_insensitive(words in proptest::collection::vec(word(), 0..12)) {
            let text = words.join(" ");
            let lower = extract_pronoun(&text);
            let upper = extract_pronoun(&text.to_uppercase());
            match (&lower, &upper) {
                (PronounCategory::Other(a), PronounCategory::Other(b)) => prop_assert_eq!(a.to_lowercase(), b.to_lowercase()),
                _ => prop_assert_eq!(lower, upper),
            }
        }

        #[test]
        fn he_or_she_never_collapses(before in proptest::collection::vec(word(), 0..5),
                                     after in proptest::collection::vec(word(), 0..5)) {
            let text = format!("{} he or she {}", before.join(" "), after.join(" "));
            let got = extract_pronoun(&text);
            prop_assert!(got != PronounCategory::He && got != PronounCategory::She);
        }
    }
}
