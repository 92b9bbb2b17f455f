//! Synthetic fact-lookup QA corpora in SQuAD JSON form.
//!
//! Each passage is a list of facts `The <entity> <relation> <answer words> .`
//! and each question reads `what did the <entity> <relation> ?`. With a
//! distractor, one extra sentence repeats the question's relation under an
//! unseen entity, and its answer slot is corrupted with question tokens the
//! same way negative critic spans are.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::advgen::{generate_negative_span, GenConfig, ReplacementScope};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng64};
use crate::textio::{SquadAnswer, SquadArticle, SquadFile, SquadParagraph, SquadQa};

const ENTITY_ONSETS: [&str; 8] = ["b", "d", "k", "m", "r", "t", "v", "z"];
const ENTITY_TAILS: [&str; 5] = ["aron", "emir", "ulos", "inda", "oval"];
const RELATION_ONSETS: [&str; 8] = ["gr", "pl", "sn", "fl", "st", "cr", "bl", "dr"];
const RELATION_TAILS: [&str; 5] = ["owed", "ipped", "arked", "olled", "unted"];
const ANSWER_HEADS: [&str; 11] = ["ka", "lo", "mi", "nu", "pe", "ri", "so", "tu", "vy", "xe", "ze"];
const ANSWER_MIDS: [&str; 10] = ["b", "g", "l", "n", "s", "t", "z", "f", "h", "w"];

fn lexicon(onsets: &[&str], tails: &[&str], suffix: &str) -> Vec<String> {
    tails
        .iter()
        .flat_map(|t| onsets.iter().map(move |o| format!("{o}{t}{suffix}")))
        .collect()
}

/// The three disjoint content-word classes: entities, relations and answer words.
pub fn lexicons() -> (Vec<String>, Vec<String>, Vec<String>) {
    (
        lexicon(&ENTITY_ONSETS, &ENTITY_TAILS, ""),
        lexicon(&RELATION_ONSETS, &RELATION_TAILS, ""),
        lexicon(&ANSWER_HEADS, &ANSWER_MIDS, "o"),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_passages: usize,
    pub facts_per_passage: usize,
    pub max_answer_len: usize,
    /// When set, each passage asks one question and carries a distractor
    /// whose slot tokens are replaced by question tokens with this probability.
    pub distractor_replacement: Option<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_passages: 100,
            facts_per_passage: 3,
            max_answer_len: 3,
            distractor_replacement: None,
            seed: 0,
        }
    }
}

struct Fact {
    entity: String,
    relation: String,
    answer: Vec<String>,
}

fn sentence(f: &Fact) -> (String, usize) {
    let prefix = format!("The {} {} ", f.entity, f.relation);
    (format!("{prefix}{} .", f.answer.join(" ")), prefix.chars().count())
}

fn question_text(entity: &str, relation: &str) -> (String, Vec<String>) {
    let text = format!("what did the {entity} {relation} ?");
    let tokens = ["what", "did", "the", entity, relation, "?"].iter().map(|s| s.to_string()).collect();
    (text, tokens)
}

fn answer(rng: &mut Rng64, words: &[String], max_len: usize) -> Vec<String> {
    let k = rng.gen_range(1..=max_len);
    (0..k).map(|_| words.choose(rng).expect("non-empty lexicon").clone()).collect()
}

pub fn synth_squad(cfg: &SynthConfig) -> Result<SquadFile> {
    let (entities, relations, words) = lexicons();
    let need = cfg.facts_per_passage + usize::from(cfg.distractor_replacement.is_some());
    if cfg.n_passages == 0 || cfg.facts_per_passage == 0 || cfg.max_answer_len == 0 {
        return Err(Error::Config("synthetic corpus sizes must be positive".into()));
    }
    if need > entities.len() || cfg.facts_per_passage > relations.len() {
        return Err(Error::Config(format!("at most {} facts per passage", entities.len() - 1)));
    }
    let mut rng = seeded(cfg.seed);
    let mut paragraphs = Vec::with_capacity(cfg.n_passages);
    for p in 0..cfg.n_passages {
        let ents: Vec<&String> = entities.choose_multiple(&mut rng, need).collect();
        let rels: Vec<&String> = relations.choose_multiple(&mut rng, cfg.facts_per_passage).collect();
        let mut facts: Vec<Fact> = (0..cfg.facts_per_passage)
            .map(|i| Fact {
                entity: ents[i].clone(),
                relation: rels[i].clone(),
                answer: answer(&mut rng, &words, cfg.max_answer_len),
            })
            .collect();
        let asked: Vec<usize> = match cfg.distractor_replacement {
            None => (0..facts.len()).collect(),
            Some(prob) => {
                let target = rng.gen_range(0..facts.len());
                let (_, q_tokens) = question_text(&facts[target].entity, &facts[target].relation);
                let gen = GenConfig {
                    replacement_prob: prob,
                    scope: ReplacementScope::AllWords,
                    ..GenConfig::default()
                };
                gen.validate()?;
                let slot = answer(&mut rng, &words, cfg.max_answer_len);
                let decoy = Fact {
                    entity: ents[cfg.facts_per_passage].clone(),
                    relation: facts[target].relation.clone(),
                    answer: generate_negative_span(&slot, &q_tokens, &gen, &mut rng)?,
                };
                let at = rng.gen_range(0..=facts.len());
                facts.insert(at, decoy);
                vec![if at <= target { target + 1 } else { target }]
            }
        };

        let mut context = String::new();
        let mut starts = Vec::with_capacity(facts.len());
        for f in &facts {
            if !context.is_empty() {
                context.push(' ');
            }
            let (s, offset) = sentence(f);
            starts.push(context.chars().count() + offset);
            context.push_str(&s);
        }
        let qas = asked
            .iter()
            .map(|&i| {
                let f = &facts[i];
                SquadQa {
                    id: format!("synth-{}-{p}-{i}", cfg.seed),
                    question: question_text(&f.entity, &f.relation).0,
                    answers: vec![SquadAnswer {
                        text: f.answer.join(" "),
                        answer_start: starts[i],
                    }],
                }
            })
            .collect();
        paragraphs.push(SquadParagraph { context, qas });
    }
    Ok(SquadFile {
        version: Some("synthetic".into()),
        data: vec![SquadArticle {
            title: "synthetic".into(),
            paragraphs,
        }],
    })
}

pub fn synth_squad_json(cfg: &SynthConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(&synth_squad(cfg)?).expect("squad file serializes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::{is_stop_word, parse_squad};
    use std::collections::HashSet;
    use std::path::Path;

    #[test]
    fn lexicons_are_disjoint_and_sized() {
        let (e, r, w) = lexicons();
        assert_eq!((e.len(), r.len(), w.len()), (40, 40, 110));
        let all: HashSet<&String> = e.iter().chain(&r).chain(&w).collect();
        assert_eq!(all.len(), 190);
        assert!(all.iter().all(|t| !is_stop_word(t)));
    }

    #[test]
    fn clean_corpus_loads_and_aligns() {
        let cfg = SynthConfig { n_passages: 20, ..SynthConfig::default() };
        let ds = parse_squad(&synth_squad_json(&cfg).unwrap(), Path::new("synth")).unwrap();
        assert_eq!(ds.len(), 60);
        assert_eq!(ds.skipped, 0);
        for ex in &ds.examples {
            let (s, e) = ex.gold_span;
            assert_eq!(ex.span_text(s, e), ex.gold_answers[0]);
            assert_eq!(ex.passage.tokens[s - 1], ex.question.tokens[4]);
        }
    }

    #[test]
    fn distractor_repeats_the_relation() {
        let cfg = SynthConfig {
            n_passages: 30,
            distractor_replacement: Some(1.0),
            ..SynthConfig::default()
        };
        let ds = parse_squad(&synth_squad_json(&cfg).unwrap(), Path::new("synth")).unwrap();
        assert_eq!(ds.len(), 30);
        let (entities, _, _) = lexicons();
        for ex in &ds.examples {
            let t = &ex.passage.tokens;
            let (ent, rel) = (&ex.question.tokens[3], &ex.question.tokens[4]);
            let heads: Vec<usize> = (2..t.len())
                .filter(|&i| &t[i] == rel && t[i - 2] == "the" && entities.contains(&t[i - 1]))
                .collect();
            assert_eq!(heads.len(), 2);
            let decoy = heads.iter().find(|&&i| &t[i - 1] != ent).unwrap();
            assert_ne!(decoy + 1, ex.gold_span.0);
            let q: HashSet<&String> = ex.question.tokens.iter().collect();
            assert!(q.contains(&t[decoy + 1]));
        }
    }

    #[test]
    fn seeded_output_is_stable() {
        let cfg = SynthConfig { seed: 9, ..SynthConfig::default() };
        assert_eq!(synth_squad_json(&cfg).unwrap(), synth_squad_json(&cfg).unwrap());
        let other = SynthConfig { seed: 10, ..cfg.clone() };
        assert_ne!(synth_squad_json(&cfg).unwrap(), synth_squad_json(&other).unwrap());
    }
}
