use std::path::Path;

use acqa::cli::dispatch;
use acqa::eval::PredictionRecord;

fn records(path: &Path) -> Vec<PredictionRecord> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(dispatch(["acqa"]), 1);
    assert_eq!(dispatch(["acqa", "train-critic"]), 1);
    assert_eq!(dispatch(["acqa", "eval", "--rejection-mode", "sideways"]), 1);
}

#[test]
fn grad_check_passes_by_default_seed() {
    assert_eq!(dispatch(["acqa", "grad-check", "--trials", "2"]), 0);
}

#[test]
fn wrong_checkpoint_kind_is_a_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = |p: &str| d.join(p).to_string_lossy().into_owned();
    let small = r#"{"critic": {"embed_dim": 8, "hidden": 8, "head_widths": [8, 4]}}"#;
    std::fs::write(d.join("cfg.json"), small).unwrap();
    assert_eq!(dispatch(["acqa", "synth", "--out", &s("t.json"), "--passages", "5"]), 0);
    assert_eq!(dispatch(["acqa", "gen-adversarial", "--input", &s("t.json"), "--out", &s("p.jsonl")]), 0);
    assert_eq!(
        dispatch(["acqa", "train-critic", "--config", &s("cfg.json"), "--pairs", &s("p.jsonl"), "--out", &s("c.ckpt"), "--epochs", "1"]),
        0
    );
    let code = dispatch(["acqa", "eval", "--squad", &s("t.json"), "--actor", &s("c.ckpt"), "--report", &s("r.json")]);
    assert_eq!(code, 2);
    assert!(!d.join("r.json").exists());
}

#[test]
fn zero_threshold_matches_no_critic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = |p: &str| d.join(p).to_string_lossy().into_owned();
    let small = r#"{"actor": {"embed_dim": 8, "hidden": 8}, "critic": {"embed_dim": 8, "hidden": 8, "head_widths": [8, 4]}}"#;
    std::fs::write(d.join("cfg.json"), small).unwrap();
    let steps: [Vec<String>; 5] = [
        vec!["synth".into(), "--out".into(), s("t.json"), "--passages".into(), "8".into()],
        vec!["synth".into(), "--out".into(), s("d.json"), "--passages".into(), "8".into(), "--seed".into(), "1".into(), "--distractor-prob".into(), "0.75".into()],
        vec!["gen-adversarial".into(), "--input".into(), s("t.json"), "--out".into(), s("p.jsonl")],
        vec!["train-critic".into(), "--config".into(), s("cfg.json"), "--pairs".into(), s("p.jsonl"), "--out".into(), s("c.ckpt"), "--epochs".into(), "1".into()],
        vec!["train-actor".into(), "--config".into(), s("cfg.json"), "--squad".into(), s("t.json"), "--critic".into(), s("c.ckpt"), "--out".into(), s("a.ckpt"), "--epochs".into(), "1".into()],
    ];
    for step in steps {
        let argv = std::iter::once("acqa".to_string()).chain(step);
        assert_eq!(dispatch(argv), 0);
    }
    assert_eq!(dispatch(["acqa", "eval", "--squad", &s("d.json"), "--actor", &s("a.ckpt"), "--report", &s("base.json")]), 0);
    assert_eq!(
        dispatch([
            "acqa", "eval", "--squad", &s("d.json"), "--actor", &s("a.ckpt"), "--critic", &s("c.ckpt"),
            "--threshold", "0", "--report", &s("gated.json"),
        ]),
        0
    );
    let base = records(&d.join("base.records.jsonl"));
    let gated = records(&d.join("gated.records.jsonl"));
    assert_eq!(base.len(), 8);
    for (b, g) in base.iter().zip(&gated) {
        assert_eq!((&b.id, b.start, b.end, &b.text), (&g.id, g.start, g.end, &g.text));
        assert_eq!(g.rejections_used, 0);
    }
    let report = |p: &str| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(d.join(p)).unwrap()).unwrap() };
    assert_eq!(report("base.json"), report("gated.json"));
    let manifest = report("gated.json.run.json");
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 3);
    assert_eq!(manifest["config"]["infer"]["threshold"], 0.0);
}
