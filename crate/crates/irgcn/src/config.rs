//! Flat `key = value` run configuration covering every knob of the
//! model, training, evaluation, split, and repurposing modules.
//!
//! The text format is line-oriented: blank lines and lines starting
//! with `#` are ignored, everything else must be `key = value`. Unknown
//! keys are rejected up front so a typo can never silently fall back to
//! a default. [`RunConfig::to_text`] writes every key in a fixed order,
//! and parsing that text reproduces the value exactly — checkpoint
//! files embed this echo so later commands can rebuild the identical
//! model shape without the original file.

use std::str::FromStr;

use crate::eval::{CandidatePolicy, EvalConfig, FilterMode};
use crate::model::{Mode, ModelConfig, ScorerKind};
use crate::training::TrainConfig;
use crate::{Error, Result};

/// Scoring direction for drug repurposing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `score(drug, relation, gene)` — the drug is the head.
    DrugAsHead,
    /// `score(gene, relation, drug)` — the gene is the head.
    GeneAsHead,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::DrugAsHead => "drug-as-head",
            Direction::GeneAsHead => "gene-as-head",
        }
    }

    /// Whether the roles are flipped relative to the default.
    pub fn flip(self) -> bool {
        matches!(self, Direction::GeneAsHead)
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drug-as-head" => Ok(Direction::DrugAsHead),
            "gene-as-head" => Ok(Direction::GeneAsHead),
            other => Err(Error::Config(format!(
                "unknown direction '{other}' (expected drug-as-head or gene-as-head)"
            ))),
        }
    }
}

/// Every run-time knob, with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // Model shape.
    pub mode: Mode,
    pub scorer: ScorerKind,
    /// Hidden layer widths of the graph encoder; empty for no message
    /// passing.
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    pub self_loop: bool,
    pub normalize: bool,
    /// Relations embedded from their support sets in inductive mode;
    /// empty means all of them.
    pub inductive_relations: Vec<String>,
    // Training.
    pub epochs: usize,
    pub lr: f64,
    pub k_neg: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// The single seed every derived random stream flows from.
    pub seed: u64,
    // Evaluation.
    /// `all` ranks against every tail of the right type; `sample` draws
    /// `candidate_sample` distinct non-true tails per query.
    pub candidates: String,
    pub candidate_sample: usize,
    pub filter: FilterMode,
    // Repurposing.
    pub topk: usize,
    pub direction: Direction,
    /// Trials for the uniform-noise control; 0 skips it.
    pub control_trials: usize,
    // Execution.
    /// Worker threads for per-item parallel stages; results are
    /// identical at any count.
    pub threads: usize,
    /// Directory of per-type feature CSVs; empty means every type
    /// learns its embeddings.
    pub features_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Transductive,
            scorer: ScorerKind::DistMult,
            hidden: vec![16],
            embed_dim: 16,
            self_loop: true,
            normalize: true,
            inductive_relations: vec![],
            epochs: 200,
            lr: 1e-2,
            k_neg: 1,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 17,
            candidates: "all".to_string(),
            candidate_sample: 50,
            filter: FilterMode::Filtered,
            topk: 100,
            direction: Direction::DrugAsHead,
            control_trials: 0,
            threads: 1,
            features_dir: String::new(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config(format!(
            "key '{key}': expected true or false, got '{other}'"
        ))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(vec![]);
    }
    value
        .split(',')
        .map(|p| parse_num(key, p.trim()))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Assign one key. Shared by file parsing and command-line
    /// overrides so both accept exactly the same vocabulary.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mode" => self.mode = value.parse()?,
            "scorer" => self.scorer = value.parse()?,
            "hidden" => self.hidden = parse_list(key, value)?,
            "embed_dim" => self.embed_dim = parse_num(key, value)?,
            "self_loop" => self.self_loop = parse_bool(key, value)?,
            "normalize" => self.normalize = parse_bool(key, value)?,
            "inductive_relations" => {
                self.inductive_relations = if value.is_empty() {
                    vec![]
                } else {
                    value.split(',').map(|s| s.trim().to_string()).collect()
                }
            }
            "epochs" => self.epochs = parse_num(key, value)?,
            "lr" => self.lr = parse_num(key, value)?,
            "k_neg" => self.k_neg = parse_num(key, value)?,
            "beta1" => self.beta1 = parse_num(key, value)?,
            "beta2" => self.beta2 = parse_num(key, value)?,
            "adam_eps" => self.adam_eps = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "candidates" => match value {
                "all" | "sample" => self.candidates = value.to_string(),
                other => {
                    return Err(Error::Config(format!(
                        "key 'candidates': expected all or sample, got '{other}'"
                    )))
                }
            },
            "candidate_sample" => self.candidate_sample = parse_num(key, value)?,
            "filter" => {
                self.filter = match value {
                    "filtered" => FilterMode::Filtered,
                    "raw" => FilterMode::Raw,
                    other => {
                        return Err(Error::Config(format!(
                            "key 'filter': expected filtered or raw, got '{other}'"
                        )))
                    }
                }
            }
            "topk" => self.topk = parse_num(key, value)?,
            "direction" => self.direction = value.parse()?,
            "control_trials" => self.control_trials = parse_num(key, value)?,
            "threads" => self.threads = parse_num(key, value)?,
            "features_dir" => self.features_dir = value.to_string(),
            other => {
                return Err(Error::Config(format!(
                    "unknown key '{other}' (run with a documented key)"
                )))
            }
        }
        Ok(())
    }

    /// Apply a config file body on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got '{line}'", i + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Parse a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Parse `key=value` override strings (command-line `--set`).
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (key, value) = o.split_once('=').ok_or_else(|| {
                Error::Config(format!("override '{o}': expected key=value"))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Serialize every key in a fixed order. Parsing the result
    /// reproduces this value exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("mode", self.mode.as_str().to_string());
        kv("scorer", self.scorer.as_str().to_string());
        kv("hidden", join(&self.hidden));
        kv("embed_dim", self.embed_dim.to_string());
        kv("self_loop", self.self_loop.to_string());
        kv("normalize", self.normalize.to_string());
        kv("inductive_relations", self.inductive_relations.join(","));
        kv("epochs", self.epochs.to_string());
        kv("lr", self.lr.to_string());
        kv("k_neg", self.k_neg.to_string());
        kv("beta1", self.beta1.to_string());
        kv("beta2", self.beta2.to_string());
        kv("adam_eps", self.adam_eps.to_string());
        kv("seed", self.seed.to_string());
        kv("candidates", self.candidates.clone());
        kv("candidate_sample", self.candidate_sample.to_string());
        kv("filter", self.filter.describe().to_string());
        kv("topk", self.topk.to_string());
        kv("direction", self.direction.as_str().to_string());
        kv("control_trials", self.control_trials.to_string());
        kv("threads", self.threads.to_string());
        kv("features_dir", self.features_dir.clone());
        s
    }

    /// The model-shape subset.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            mode: self.mode,
            scorer: self.scorer,
            hidden: self.hidden.clone(),
            embed_dim: self.embed_dim,
            self_loop: self.self_loop,
            normalize: self.normalize,
            inductive_relations: if self.inductive_relations.is_empty() {
                None
            } else {
                Some(self.inductive_relations.clone())
            },
        }
    }

    /// The training subset (embeds the model shape).
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            k_neg: self.k_neg,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_eps: self.adam_eps,
            seed: self.seed,
            model: self.model_config(),
        }
    }

    /// The evaluation subset.
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            policy: if self.candidates == "sample" {
                CandidatePolicy::Sample { size: self.candidate_sample }
            } else {
                CandidatePolicy::All
            },
            filter: self.filter,
            seed: self.seed,
        }
    }
}
