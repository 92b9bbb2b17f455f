use std::collections::HashSet;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, TokenizedText};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::eval::normalize_answer;
use crate::fsutil;

/// One question over one passage with its gold token span (inclusive).
#[derive(Clone, Debug, PartialEq)]
pub struct QAExample {
    pub id: String,
    pub question: TokenizedText,
    pub passage: TokenizedText,
    /// Original passage text; token offsets point into it.
    pub passage_text: String,
    pub gold_span: (usize, usize),
    pub gold_answers: Vec<String>,
}

impl QAExample {
    /// Source text covered by passage tokens `start..=end`.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        let (s, _) = self.passage.offsets[start];
        let (_, e) = self.passage.offsets[end];
        super::char_slice(&self.passage_text, s, e)
    }

    pub fn span_tokens(&self, start: usize, end: usize) -> &[String] {
        &self.passage.tokens[start..=end]
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub examples: Vec<QAExample>,
    pub vocab: Vocabulary,
    /// qa entries dropped because no answer could be aligned.
    pub skipped: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
pub struct SquadFile {
    #[serde(default)]
    pub version: Option<String>,
    pub data: Vec<SquadArticle>,
}

#[derive(Serialize, Deserialize)]
pub struct SquadArticle {
    #[serde(default)]
    pub title: String,
    pub paragraphs: Vec<SquadParagraph>,
}

#[derive(Serialize, Deserialize)]
pub struct SquadParagraph {
    pub context: String,
    pub qas: Vec<SquadQa>,
}

#[derive(Serialize, Deserialize)]
pub struct SquadQa {
    pub id: String,
    pub question: String,
    pub answers: Vec<SquadAnswer>,
}

#[derive(Serialize, Deserialize)]
pub struct SquadAnswer {
    pub text: String,
    pub answer_start: usize,
}

fn squash(s: &str) -> String {
    normalize_answer(s).chars().filter(|c| !c.is_whitespace()).collect()
}

/// Map an answer's char range onto passage tokens.
///
/// The start snaps to the first token ending after `char_start` (so a
/// mid-token start selects the containing token); the end is the last token
/// overlapping `[char_start, char_start + len(answer))`.
pub fn align_answer(passage: &TokenizedText, answer: &str, char_start: usize) -> Result<(usize, usize)> {
    let fail = |reason| Error::Alignment {
        answer: answer.to_owned(),
        char_start,
        reason,
    };
    let char_end = char_start + answer.chars().count();
    let start = passage
        .offsets
        .iter()
        .position(|&(_, e)| e > char_start)
        .ok_or_else(|| fail("start beyond the last token"))?;
    let end = passage
        .offsets
        .iter()
        .rposition(|&(s, _)| s < char_end)
        .ok_or_else(|| fail("empty answer range"))?;
    if end < start {
        return Err(fail("answer range covers no token"));
    }
    let covered = squash(&passage.tokens[start..=end].join(" "));
    let wanted = squash(answer);
    if !covered.contains(&wanted) {
        return Err(fail("span tokens do not contain the answer text"));
    }
    Ok((start, end))
}

pub fn parse_squad(json: &str, source: &Path) -> Result<Dataset> {
    let file: SquadFile = serde_json::from_str(json).map_err(|e| Error::json(source, e))?;
    let mut examples = Vec::new();
    let mut skipped = 0;
    let mut seen = HashSet::new();
    for article in &file.data {
        for para in &article.paragraphs {
            let passage = tokenize(&para.context);
            for qa in &para.qas {
                if !seen.insert(qa.id.clone()) {
                    return Err(Error::Data(format!("duplicate qa id {:?}", qa.id)));
                }
                let question = tokenize(&qa.question);
                let aligned = qa
                    .answers
                    .iter()
                    .find_map(|a| align_answer(&passage, &a.text, a.answer_start).ok());
                match aligned {
                    Some(span) if !question.is_empty() => examples.push(QAExample {
                        id: qa.id.clone(),
                        question,
                        passage: passage.clone(),
                        passage_text: para.context.clone(),
                        gold_span: span,
                        gold_answers: qa.answers.iter().map(|a| a.text.clone()).collect(),
                    }),
                    _ => {
                        warn!("skipping qa {}: no alignable answer", qa.id);
                        skipped += 1;
                    }
                }
            }
        }
    }
    if examples.is_empty() {
        return Err(Error::Data(format!(
            "{}: no alignable examples ({skipped} skipped)",
            source.display()
        )));
    }
    let vocab = Vocabulary::build(examples.iter().flat_map(|ex| {
        ex.question
            .tokens
            .iter()
            .chain(&ex.passage.tokens)
            .map(String::as_str)
    }));
    Ok(Dataset {
        examples,
        vocab,
        skipped,
    })
}

pub fn load_squad(path: &Path) -> Result<Dataset> {
    let text = fsutil::read_to_string(path)?;
    parse_squad(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn passage() -> TokenizedText {
        tokenize("a marian place of prayer")
    }

    #[test]
    fn align_inner_span() {
        assert_eq!(align_answer(&passage(), "marian place", 2).unwrap(), (1, 2));
    }

    #[test]
    fn align_full_span() {
        let p = passage();
        assert_eq!(
            align_answer(&p, "a marian place of prayer", 0).unwrap(),
            (0, p.len() - 1)
        );
    }

    #[test]
    fn align_mid_token_snaps_to_containing_token() {
        // "arian" starts inside "marian"
        assert_eq!(align_answer(&passage(), "arian", 3).unwrap(), (1, 1));
    }

    #[test]
    fn align_beyond_end_fails() {
        assert!(align_answer(&passage(), "x", 100).is_err());
    }

    #[test]
    fn align_wrong_text_fails() {
        assert!(align_answer(&passage(), "grotto", 2).is_err());
    }

    #[test]
    fn align_punctuated_answer() {
        let p = tokenize("born in the U.S. in 1990");
        assert_eq!(align_answer(&p, "U.S.", 12).unwrap(), (3, 6));
    }
}
