use super::*;
use crate::textio::{Vocabulary, BOS, BOS_ID};

fn vocab() -> Vocabulary {
    Vocabulary::build(["a", "b", "c", "d", "e", "f"])
}

fn small_actor(seed: u64) -> ActorModel {
    let hyper = ActorHyper {
        embed_dim: 6,
        hidden: 5,
        init_scale: 0.3,
    };
    ActorModel::new(hyper, vocab(), seed).unwrap()
}

fn small_critic(seed: u64) -> CriticModel {
    let hyper = CriticHyper {
        embed_dim: 6,
        hidden: 5,
        head_widths: vec![8, 4],
        init_scale: 0.3,
    };
    CriticModel::new(hyper, vocab(), seed).unwrap()
}

#[test]
fn actor_logits_match_passage_length() {
    let actor = small_actor(0);
    for n in (1..=256).step_by(15).chain([256]) {
        let passage: Vec<usize> = (0..n).map(|i| 3 + i % 6).collect();
        let out = actor.logits_ids(&[3, 4], &passage).unwrap();
        assert_eq!(out.start_logits.len(), n);
        assert_eq!(out.end_logits.len(), n);
    }
}

#[test]
fn actor_depends_on_question_and_is_pure() {
    let actor = small_actor(1);
    let passage = [3, 4, 5, 6, 7];
    let a = actor.logits_ids(&[3, 4], &passage).unwrap();
    let b = actor.logits_ids(&[8, 7, 6], &passage).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, actor.logits_ids(&[3, 4], &passage).unwrap());
}

#[test]
fn actor_rejects_out_of_vocab_ids() {
    let actor = small_actor(2);
    assert!(actor.logits_ids(&[3], &[3, 99]).is_err());
    assert!(actor.logits_ids(&[], &[3]).is_err());
}

#[test]
fn untrained_critic_is_neutral() {
    let critic = small_critic(0);
    let p = critic.probability_ids(&[BOS_ID, 3, 4], &[5, 6]).unwrap();
    assert_eq!(p, 0.5);
}

#[test]
fn critic_output_in_open_unit_interval() {
    let mut critic = small_critic(3);
    // push the final logit far positive, then far negative
    for sign in [1.0f32, -1.0] {
        let b = critic.params.get_mut("head.b2").unwrap();
        b.data_mut()[0] = sign * 1000.0;
        let p = critic.probability_ids(&[BOS_ID], &[3]).unwrap();
        assert!(p > 0.0 && p < 1.0, "{p}");
    }
}

#[test]
fn critic_is_pure_and_validates_inputs() {
    let critic = small_critic(4);
    let q = [BOS.to_string(), "a".into(), "zzz".into()];
    let s = ["b".to_string()];
    assert_eq!(critic.p_genuine(&q, &s).unwrap(), critic.p_genuine(&q, &s).unwrap());
    assert!(critic.probability_ids(&[BOS_ID, 3], &[]).is_err());
    assert!(critic.probability_ids(&[3], &[4]).is_err());
}

#[test]
fn checkpoint_roundtrip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let mut critic = small_critic(5);
    // make the output non-trivial
    for (_, p) in critic.params.iter_mut() {
        for (i, x) in p.value.data_mut().iter_mut().enumerate() {
            *x += (i as f32 * 0.37).sin() * 0.1;
        }
    }
    critic.save(&dir.path().join("critic")).unwrap();
    let loaded = CriticModel::load(&dir.path().join("critic")).unwrap();
    assert_eq!(loaded, critic);
    let q = [BOS_ID, 3, 4];
    assert_eq!(
        loaded.probability_ids(&q, &[5]).unwrap().to_bits(),
        critic.probability_ids(&q, &[5]).unwrap().to_bits()
    );

    let actor = small_actor(6);
    actor.save(&dir.path().join("actor")).unwrap();
    let loaded = ActorModel::load(&dir.path().join("actor")).unwrap();
    assert_eq!(loaded.logits_ids(&[3], &[4, 5]).unwrap(), actor.logits_ids(&[3], &[4, 5]).unwrap());
    assert!(CriticModel::load(&dir.path().join("actor")).is_err());
}

#[test]
fn checkpoint_manifest_layout() {
    let dir = tempfile::tempdir().unwrap();
    let critic = small_critic(7);
    critic.save(dir.path()).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["format_version"], 1);
    assert_eq!(manifest["model_kind"], "critic");
    assert_eq!(manifest["vocab"][1], "<bos>");
    let entries = manifest["entries"].as_array().unwrap();
    let total: u64 = entries.iter().map(|e| e["length"].as_u64().unwrap()).sum();
    let bin = std::fs::metadata(dir.path().join("params.bin")).unwrap().len();
    assert_eq!(bin, total * 4);
    let mut offset = 0;
    for e in entries {
        assert_eq!(e["offset"].as_u64().unwrap(), offset);
        offset += e["length"].as_u64().unwrap();
    }
}
