use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<bos>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const UNK_ID: usize = 2;

/// Token to id map with `<pad>`, `<bos>`, `<unk>` at ids 0, 1, 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let tokens: Vec<String> = [PAD, BOS, UNK].iter().map(|s| s.to_string()).collect();
        let index = tokens.iter().cloned().zip(0..).collect();
        Self { tokens, index }
    }

    /// Vocabulary over tokens in first-appearance order.
    pub fn build<'t>(tokens: impl IntoIterator<Item = &'t str>) -> Self {
        let mut v = Self::new();
        for t in tokens {
            v.add(t);
        }
        v
    }

    pub fn add(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    /// Rebuild from an id-ordered token list, such as a checkpoint's.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 3 || tokens[PAD_ID] != PAD || tokens[BOS_ID] != BOS || tokens[UNK_ID] != UNK {
            return Err(Error::Data("vocabulary must start with <pad>, <bos>, <unk>".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), id).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_fixed() {
        let v = Vocabulary::build(["b", "a", "b"]);
        assert_eq!(v.tokens(), ["<pad>", "<bos>", "<unk>", "b", "a"]);
        assert_eq!(v.id("a"), 4);
        assert_eq!(v.id("never-seen"), UNK_ID);
        assert_eq!(v.id(BOS), BOS_ID);
    }

    #[test]
    fn from_tokens_roundtrip_and_validation() {
        let v = Vocabulary::build(["x", "y"]);
        let back = Vocabulary::from_tokens(v.tokens().to_vec()).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::from_tokens(vec!["x".into()]).is_err());
        let mut dup = v.tokens().to_vec();
        dup.push("x".into());
        assert!(Vocabulary::from_tokens(dup).is_err());
    }
}
