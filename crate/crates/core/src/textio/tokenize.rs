use serde::{Deserialize, Serialize};

/// Lowercased tokens with their `[start, end)` char offsets in the source text.
///
/// Offsets count Unicode scalar values, matching SQuAD's `answer_start`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    pub offsets: Vec<(usize, usize)>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Anything that is neither alphanumeric nor whitespace becomes its own token.
fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

pub fn tokenize(text: &str) -> TokenizedText {
    let mut out = TokenizedText::default();
    let mut word = String::new();
    let mut word_start = 0;

    let flush = |word: &mut String, start: usize, end: usize, out: &mut TokenizedText| {
        if !word.is_empty() {
            out.tokens.push(word.to_lowercase());
            out.offsets.push((start, end));
            word.clear();
        }
    };

    let mut pos = 0;
    for c in text.chars() {
        if c.is_whitespace() {
            flush(&mut word, word_start, pos, &mut out);
        } else if is_punct(c) {
            flush(&mut word, word_start, pos, &mut out);
            out.tokens.push(c.to_lowercase().collect());
            out.offsets.push((pos, pos + 1));
        } else {
            if word.is_empty() {
                word_start = pos;
            }
            word.push(c);
        }
        pos += 1;
    }
    flush(&mut word, word_start, pos, &mut out);
    out
}

pub fn detokenize(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Substring of `text` covering chars `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn question_row() {
        let t = tokenize("What is the Grotto?");
        assert_eq!(t.tokens, ["what", "is", "the", "grotto", "?"]);
        assert_eq!(t.offsets[4], (18, 19));
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn double_space_offsets() {
        let t = tokenize("a  b");
        assert_eq!(t.tokens, ["a", "b"]);
        assert_eq!(t.offsets, [(0, 1), (3, 4)]);
    }

    #[test]
    fn unicode_offsets_count_chars() {
        let t = tokenize("Café, naïve");
        assert_eq!(t.tokens, ["café", ",", "naïve"]);
        assert_eq!(t.offsets, [(0, 4), (4, 5), (6, 11)]);
        assert_eq!(char_slice("Café, naïve", 6, 11), "naïve");
    }

    proptest! {
        #[test]
        fn roundtrip_differs_only_in_whitespace(text in "[ -~\t\n]{0,80}") {
            let t = tokenize(&text);
            let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            prop_assert_eq!(squash(&detokenize(&t.tokens)), squash(&text.to_lowercase()));
        }

        #[test]
        fn token_invariants(text in "\\PC{0,60}") {
            let t = tokenize(&text);
            prop_assert_eq!(t.tokens.len(), t.offsets.len());
            let mut prev_end = 0;
            for (tok, &(s, e)) in t.tokens.iter().zip(&t.offsets) {
                prop_assert!(!tok.is_empty());
                prop_assert!(s >= prev_end && e > s);
                prop_assert_eq!(tok.clone(), tok.to_lowercase());
                prev_end = e;
            }
        }
    }
}
