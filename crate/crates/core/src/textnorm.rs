//! Normalization and tokenization shared by references, annotated forms and
//! system outputs.

use std::collections::HashMap;

use unicode_categories::UnicodeCategories;
use unicode_normalization::UnicodeNormalization;

/// NFC-normalizes and lowercases `text`. Idempotent.
pub fn normalize(text: &str) -> String {
    // Lowercasing can produce decomposed sequences (e.g. U+0130), so
    // re-compose afterwards.
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    lowered.nfc().collect()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}')
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !c.is_punctuation() && !is_apostrophe(c)
}

/// Splits normalized text into word tokens.
///
/// Whitespace, apostrophes and Unicode punctuation are boundaries and are
/// dropped. A hyphen survives only between two word characters, so
/// `porte-parole` stays whole while `-- x --` yields `["x"]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let keep = if is_hyphen(c) {
            let prev = i.checked_sub(1).map(|j| chars[j]);
            let next = chars.get(i + 1).copied();
            matches!((prev, next), (Some(p), Some(n)) if is_word_char(p) && is_word_char(n))
        } else {
            is_word_char(c)
        };
        if keep {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// `tokenize(normalize(text))`.
pub fn normalized_tokens(text: &str) -> Vec<String> {
    tokenize(&normalize(text))
}

/// Bag of tokens with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenMultiset {
    counts: HashMap<String, usize>,
    total: usize,
}

impl TokenMultiset {
    pub fn count(&self, token: &str) -> usize {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn insert(&mut self, token: impl Into<String>) {
        *self.counts.entry(token.into()).or_insert(0) += 1;
        self.total += 1;
    }

    /// Removes one occurrence of `token`; returns false if none was present.
    pub fn take(&mut self, token: &str) -> bool {
        match self.counts.get_mut(token) {
            Some(n) => {
                *n -= 1;
                if *n == 0 {
                    self.counts.remove(token);
                }
                self.total -= 1;
                true
            }
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<S: Into<String>> FromIterator<S> for TokenMultiset {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut set = TokenMultiset::default();
        for tok in iter {
            set.insert(tok);
        }
        set
    }
}

pub fn to_multiset<S: AsRef<str>>(tokens: &[S]) -> TokenMultiset {
    tokens.iter().map(|t| t.as_ref().to_owned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(&normalize(s))
    }

    #[test]
    fn normalize_lowercases() {
        assert_eq!(normalize("La"), "la");
        assert_eq!(normalize("É"), "é");
        // decomposed E + combining acute composes to U+00E9
        assert_eq!(normalize("E\u{0301}"), "\u{e9}");
    }

    #[test]
    fn tokenize_drops_punctuation() {
        assert_eq!(
            toks("la ragazza è andata via."),
            ["la", "ragazza", "è", "andata", "via"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.; ").is_empty());
    }

    #[test]
    fn apostrophes_split_elisions() {
        assert_eq!(toks("l'une des premières"), ["l", "une", "des", "premières"]);
        assert_eq!(toks("l\u{2019}une"), ["l", "une"]);
        assert_eq!(toks("un'amica"), ["un", "amica"]);
    }

    #[test]
    fn internal_hyphen_kept() {
        assert_eq!(toks("la porte-parole."), ["la", "porte-parole"]);
        assert_eq!(toks("- a -b c- -- d"), ["a", "b", "c", "d"]);
        assert_eq!(toks("a \u{2014} b"), ["a", "b"]);
    }

    #[test]
    fn multiset_counts() {
        let m = to_multiset(&["la", "il", "la"]);
        assert_eq!(m.count("la"), 2);
        assert_eq!(m.count("il"), 1);
        assert_eq!(m.total(), 3);
        assert!(to_multiset::<&str>(&[]).is_empty());
    }

    #[test]
    fn take_consumes_occurrences() {
        let mut m = to_multiset(&["la", "la"]);
        assert!(m.take("la"));
        assert!(m.take("la"));
        assert!(!m.take("la"));
        assert_eq!(m.total(), 0);
        assert_eq!(m.distinct(), 0);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn tokens_are_clean(s in "\\PC{0,60}") {
            for tok in toks(&s) {
                prop_assert!(!tok.is_empty());
                for (i, c) in tok.chars().enumerate() {
                    prop_assert!(!c.is_whitespace());
                    prop_assert!(!is_apostrophe(c));
                    if c.is_punctuation() {
                        prop_assert!(is_hyphen(c));
                        prop_assert!(i > 0 && i + 1 < tok.chars().count());
                    }
                }
            }
        }

        #[test]
        fn multiset_total_matches_length(v in proptest::collection::vec("[a-d]{1,2}", 0..30)) {
            let m = to_multiset(&v);
            prop_assert_eq!(m.total(), v.len());
            prop_assert_eq!(m.iter().map(|(_, n)| n).sum::<usize>(), v.len());
        }
    }
}
