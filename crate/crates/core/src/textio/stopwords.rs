//! Fixed English stop-word list.
//!
//! The list lives in `stopwords.txt` next to this file, one lowercase word per
//! line: articles, auxiliaries and copulas, common prepositions and
//! conjunctions, personal and demonstrative pronouns, and question words.
//! Punctuation is never a stop word.

use std::collections::HashSet;
use std::sync::OnceLock;

pub const STOP_WORDS_TXT: &str = include_str!("stopwords.txt");

fn set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOP_WORDS_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stop_word(token: &str) -> bool {
    set().contains(token)
}

pub fn stop_words() -> impl Iterator<Item = &'static str> {
    STOP_WORDS_TXT.lines().map(str::trim).filter(|l| !l.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_entries() {
        assert!(is_stop_word("the"));
        assert!(is_stop_word("what"));
        assert!(!is_stop_word("grotto"));
        assert!(!is_stop_word("?"));
    }

    #[test]
    fn list_is_lowercase_and_word_only() {
        let words: Vec<_> = stop_words().collect();
        assert!((50..=70).contains(&words.len()), "{} entries", words.len());
        for w in words {
            assert_eq!(w, w.to_lowercase());
            assert!(w.chars().all(char::is_alphabetic), "{w:?}");
        }
    }
}
