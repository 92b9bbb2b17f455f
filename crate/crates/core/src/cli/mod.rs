//! The `acqa` command line.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{digest_input, manifest_path, AppConfig, RunManifest};

use crate::advgen::{build_critic_dataset, CriticDataset, ReplacementScope};
use crate::diagnostics::{grad_check_suite, GRAD_CHECK_TOLERANCE};
use crate::error::{Error, Result};
use crate::eval::{critic_probability_histogram, evaluate_qa};
use crate::fsutil::atomic_write;
use crate::inference::RejectionMode;
use crate::models::{ActorModel, CriticModel, SpanCritic};
use crate::synth::{synth_squad_json, SynthConfig};
use crate::textio::load_squad;
use crate::training::{critic_vocab, log_jsonl, train_actor, train_critic, LossMode};

#[derive(Parser, Debug)]
#[command(name = "acqa", version, about = "Critic-gated extractive question answering", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a balanced genuine/adversarial critic corpus from SQuAD JSON.
    GenAdversarial {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gen: GenFlags,
    },
    /// Train the critic on a pair corpus.
    TrainCritic {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Train the actor with a frozen critic attached.
    TrainActor {
        #[arg(long)]
        squad: PathBuf,
        #[arg(long)]
        critic: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, value_enum)]
        loss_mode: Option<LossModeArg>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Score an actor, optionally gated by a critic, with SQuAD F1/EM.
    Eval {
        #[arg(long)]
        squad: PathBuf,
        #[arg(long)]
        actor: PathBuf,
        #[arg(long)]
        critic: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Per-example predictions; defaults to the report path with a
        /// `.records.jsonl` extension.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        infer: InferFlags,
    },
    /// Per-class histogram of critic probabilities over a pair corpus.
    Histogram {
        #[arg(long)]
        critic: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare backward gradients against central finite differences.
    GradCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic fact-lookup corpus as SQuAD JSON.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        passages: usize,
        #[arg(long, default_value_t = 3)]
        facts: usize,
        #[arg(long, default_value_t = 3)]
        max_answer_len: usize,
        /// Add a distractor sentence with this slot replacement probability.
        #[arg(long)]
        distractor_prob: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON file with any subset of the configuration sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScopeArg {
    #[value(alias = "all_words")]
    All,
    #[value(alias = "non_stop_words")]
    Nonstop,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossModeArg {
    Additive,
    Reweight,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RejectionArg {
    Endpoints,
    Span,
}

#[derive(Args, Debug, Default)]
struct GenFlags {
    #[arg(long)]
    replacement_prob: Option<f64>,
    #[arg(long, value_enum)]
    scope: Option<ScopeArg>,
    #[arg(long)]
    query_window: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    bce_cap: Option<f64>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct ModelFlags {
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct InferFlags {
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    rejection_mode: Option<RejectionArg>,
    #[arg(long)]
    reject_budget: Option<usize>,
    #[arg(long)]
    max_span_len: Option<usize>,
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

impl Common {
    fn apply(&self, cfg: &mut AppConfig) {
        set(&mut cfg.gen.seed, self.seed);
        set(&mut cfg.train.seed, self.seed);
    }
}

impl GenFlags {
    fn apply(&self, cfg: &mut AppConfig) {
        set(&mut cfg.gen.replacement_prob, self.replacement_prob);
        set(
            &mut cfg.gen.scope,
            self.scope.map(|s| match s {
                ScopeArg::All => ReplacementScope::AllWords,
                ScopeArg::Nonstop => ReplacementScope::NonStopWords,
            }),
        );
        set(&mut cfg.gen.query_window, self.query_window);
    }
}

impl TrainFlags {
    fn apply(&self, cfg: &mut AppConfig) {
        let t = &mut cfg.train;
        set(&mut t.epochs, self.epochs);
        set(&mut t.lr, self.lr);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.bce_cap, self.bce_cap);
        set(&mut t.clip_norm, self.clip_norm);
        set(&mut t.holdout_fraction, self.holdout_fraction);
    }
}

impl ModelFlags {
    fn apply_actor(&self, cfg: &mut AppConfig) {
        set(&mut cfg.actor.embed_dim, self.embed_dim);
        set(&mut cfg.actor.hidden, self.hidden);
    }

    fn apply_critic(&self, cfg: &mut AppConfig) {
        set(&mut cfg.critic.embed_dim, self.embed_dim);
        set(&mut cfg.critic.hidden, self.hidden);
    }
}

impl InferFlags {
    fn apply(&self, cfg: &mut AppConfig) {
        let i = &mut cfg.infer;
        set(&mut i.threshold, self.threshold);
        set(
            &mut i.rejection_mode,
            self.rejection_mode.map(|m| match m {
                RejectionArg::Endpoints => RejectionMode::Endpoints,
                RejectionArg::Span => RejectionMode::Span,
            }),
        );
        set(&mut i.reject_budget, self.reject_budget);
        set(&mut i.max_span_len, self.max_span_len);
    }
}

struct Run {
    argv: Vec<String>,
    started: Instant,
    inputs: BTreeMap<String, String>,
}

impl Run {
    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), digest_input(path)?);
        Ok(())
    }

    fn finish(&self, artifact: &Path, cfg: &AppConfig, seed: u64) -> Result<()> {
        RunManifest {
            command: self.argv.clone(),
            config: cfg.clone(),
            seed,
            inputs: self.inputs.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            duration_secs: self.started.elapsed().as_secs_f64(),
        }
        .write(artifact)
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(value).expect("report serializes");
    json.push(b'\n');
    atomic_write(path, &json)
}

fn run(command: Command, mut r: Run) -> Result<i32> {
    match command {
        Command::GenAdversarial { input, out, common, gen } => {
            let cfg = AppConfig::resolve(common.config.as_deref(), |c| {
                common.apply(c);
                gen.apply(c);
            })?;
            r.input(&input)?;
            let ds = load_squad(&input)?;
            let pairs = build_critic_dataset(&ds, &cfg.gen)?;
            pairs.write_jsonl(&out)?;
            r.finish(&out, &cfg, cfg.gen.seed)?;
            println!(
                "wrote {} pairs ({} genuine, {} adversarial) from {} examples to {}",
                pairs.len(),
                pairs.n_genuine(),
                pairs.n_adversarial(),
                ds.len(),
                out.display()
            );
        }
        Command::TrainCritic { pairs, out, log, common, train, model } => {
            let cfg = AppConfig::resolve(common.config.as_deref(), |c| {
                common.apply(c);
                train.apply(c);
                model.apply_critic(c);
            })?;
            r.input(&pairs)?;
            let data = CriticDataset::read_jsonl(&pairs)?;
            let mut critic = CriticModel::new(cfg.critic.clone(), critic_vocab(&data), cfg.train.seed)?;
            let trace = train_critic(&mut critic, &data, &cfg.train)?;
            critic.save(&out)?;
            if let Some(log) = &log {
                atomic_write(log, log_jsonl(&trace).as_bytes())?;
            }
            r.finish(&out, &cfg, cfg.train.seed)?;
            if let Some(last) = trace.last() {
                println!(
                    "critic trained: bce {:.4}, accuracy {:.4}; saved to {}",
                    last.bce,
                    last.critic_acc.or(last.train_acc).unwrap_or(f64::NAN),
                    out.display()
                );
            }
        }
        Command::TrainActor { squad, critic, out, log, loss_mode, common, train, model } => {
            let cfg = AppConfig::resolve(common.config.as_deref(), |c| {
                common.apply(c);
                train.apply(c);
                model.apply_actor(c);
                set(
                    &mut c.train.loss_mode,
                    loss_mode.map(|m| match m {
                        LossModeArg::Additive => LossMode::Additive,
                        LossModeArg::Reweight => LossMode::Reweight,
                    }),
                );
            })?;
            r.input(&squad)?;
            r.input(&critic)?;
            let critic_digest = digest_input(&critic)?;
            let ds = load_squad(&squad)?;
            let frozen = CriticModel::load(&critic)?;
            let mut actor = ActorModel::new(cfg.actor.clone(), ds.vocab.clone(), cfg.train.seed)?;
            let trace = train_actor(&mut actor, &frozen, &ds, &cfg.train)?;
            if digest_input(&critic)? != critic_digest {
                return Err(Error::Invariant("critic checkpoint changed during actor training".into()));
            }
            actor.save(&out)?;
            if let Some(log) = &log {
                atomic_write(log, log_jsonl(&trace).as_bytes())?;
            }
            r.finish(&out, &cfg, cfg.train.seed)?;
            if let Some(last) = trace.last() {
                println!(
                    "actor trained: ce_span {:.4}, bce {:.4}; saved to {}",
                    last.ce_span.unwrap_or(f64::NAN),
                    last.bce,
                    out.display()
                );
            }
        }
        Command::Eval { squad, actor, critic, report, records, workers, common, infer } => {
            let cfg = AppConfig::resolve(common.config.as_deref(), |c| {
                common.apply(c);
                infer.apply(c);
                set(&mut c.workers, workers);
            })?;
            r.input(&squad)?;
            r.input(&actor)?;
            let ds = load_squad(&squad)?;
            let actor = ActorModel::load(&actor)?;
            let critic = match &critic {
                Some(p) => {
                    r.input(p)?;
                    Some(CriticModel::load(p)?)
                }
                None => None,
            };
            let critic_ref = critic.as_ref().map(|c| c as &dyn SpanCritic);
            let metrics = evaluate_qa(&actor, critic_ref, &ds, &cfg.infer, cfg.workers)?;
            write_json(&report, &metrics)?;
            let records = records.unwrap_or_else(|| report.with_extension("records.jsonl"));
            atomic_write(&records, metrics.records_jsonl().as_bytes())?;
            r.finish(&report, &cfg, cfg.train.seed)?;
            println!(
                "f1 {:.2} em {:.2} over {} examples; rejection rate {:.4}, improved after rejection {:.4}",
                metrics.f1, metrics.em, metrics.n_examples, metrics.rejection_rate, metrics.rejected_then_improved_rate
            );
        }
        Command::Histogram { critic, pairs, bins, out, common } => {
            let cfg = AppConfig::resolve(common.config.as_deref(), |c| common.apply(c))?;
            r.input(&critic)?;
            r.input(&pairs)?;
            let model = CriticModel::load(&critic)?;
            let data = CriticDataset::read_jsonl(&pairs)?;
            let hist = critic_probability_histogram(&model, &data, bins)?;
            write_json(&out, &hist)?;
            r.finish(&out, &cfg, cfg.train.seed)?;
            println!("histogram of {} pairs in {bins} bins written to {}", data.len(), out.display());
        }
        Command::GradCheck { seed, trials, out } => {
            if trials == 0 {
                return Err(Error::Config("--trials must be at least 1".into()));
            }
            let checks = grad_check_suite(seed, trials)?;
            let max = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
            for c in &checks {
                println!(
                    "{:<7} seed {:<4} params {:<4} max rel error {:.3e}",
                    c.network, c.seed, c.n_params, c.max_rel_error
                );
            }
            let pass = max < GRAD_CHECK_TOLERANCE;
            println!(
                "max relative error {max:.3e} (tolerance {GRAD_CHECK_TOLERANCE:e}): {}",
                if pass { "PASS" } else { "FAIL" }
            );
            if let Some(out) = &out {
                write_json(out, &serde_json::json!({ "max_rel_error": max, "pass": pass, "checks": checks }))?;
            }
            return Ok(if pass { 0 } else { 2 });
        }
        Command::Synth { out, passages, facts, max_answer_len, distractor_prob, seed } => {
            let cfg = SynthConfig {
                n_passages: passages,
                facts_per_passage: facts,
                max_answer_len,
                distractor_replacement: distractor_prob,
                seed,
            };
            atomic_write(&out, synth_squad_json(&cfg)?.as_bytes())?;
            println!("wrote synthetic corpus with {passages} passages to {}", out.display());
        }
    }
    Ok(0)
}

/// Exit status for an error: 1 for configuration and usage problems, 2 for
/// data, model and I/O failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        _ => 2,
    }
}

/// Parse `argv` (program name first) and run one subcommand.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    let r = Run {
        argv,
        started: Instant::now(),
        inputs: BTreeMap::new(),
    };
    match run(cli.command, r) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
