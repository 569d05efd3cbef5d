//! Self-check harness: finite-difference verification of every
//! differentiation op in isolation, and of the complete inductive-model
//! training loss (graph encoder → support-set relation embedder →
//! scorer → logistic loss) end to end.
//!
//! The command-line `gradcheck` subcommand and the acceptance suite
//! both drive this module, so the same code paths are exercised in
//! development and in release gating.

use crate::autodiff::Graph;
use crate::graph::{HeteroGraph, Triple};
use crate::model::{FeatureStore, Mode, Model, ModelConfig, ScorerKind, TypeFeatures};
use crate::rng::{streams, Rng};
use crate::tensor::Tensor;
use crate::training::{build_loss, sample_negatives, TripleBatch};
use crate::{Error, Result};

/// Worst finite-difference deviation seen for one op across all trials.
#[derive(Debug, Clone)]
pub struct OpCheck {
    pub op: &'static str,
    pub trials: usize,
    pub max_rel_err: f64,
}

/// Combined outcome of the op sweep and the composite-loss check.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub ops: Vec<OpCheck>,
    /// Worst deviation over every parameter of the composite loss.
    pub loss_max_rel_err: f64,
    pub eps: f64,
    pub tol: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.ops.iter().all(|o| o.max_rel_err < self.tol) && self.loss_max_rel_err < self.tol
    }

    /// One human-readable line per check.
    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .ops
            .iter()
            .map(|o| {
                format!(
                    "op {:<12} trials {:>4}  max rel err {:.3e}  {}",
                    o.op,
                    o.trials,
                    o.max_rel_err,
                    if o.max_rel_err < self.tol { "ok" } else { "FAIL" }
                )
            })
            .collect();
        out.push(format!(
            "composite loss          max rel err {:.3e}  {}",
            self.loss_max_rel_err,
            if self.loss_max_rel_err < self.tol { "ok" } else { "FAIL" }
        ));
        out
    }
}

/// Random tensor with entries kept away from zero so finite differences
/// never straddle a relu kink.
fn away_from_zero(rng: &mut Rng, rows: usize, cols: usize, floor: f64) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| loop {
        let v = rng.uniform(-2.0, 2.0);
        if v.abs() >= floor {
            break v;
        }
    })
}

fn dims(rng: &mut Rng) -> usize {
    1 + rng.below(4) as usize
}

/// Sweep every differentiation op with `trials` random instances each,
/// comparing analytic gradients against central finite differences of
/// step `eps`. Relative errors use the checker's documented measure
/// (`|fd − analytic| / max(|fd|, |analytic|, 1)`).
pub fn check_all_ops(seed: u64, trials: usize, eps: f64, tol: f64) -> Result<Vec<OpCheck>> {
    if trials == 0 {
        return Err(Error::Contract("need at least one trial per op".into()));
    }
    // Entries within 10·eps of zero are resampled for kinked ops.
    let floor = 10.0 * eps;
    let ops: [&'static str; 12] = [
        "input", "matmul", "add", "elem_mul", "relu", "softplus", "tanh", "concat_cols",
        "mean_rows", "sum", "row_lookup", "scale",
    ];
    let mut out = Vec::with_capacity(ops.len());
    for (oi, &op) in ops.iter().enumerate() {
        let mut rng = Rng::derive(seed, streams::CHECK + oi as u64);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let mut g = Graph::new();
            let (r, c) = (dims(&mut rng), dims(&mut rng));
            let (root, leaves) = match op {
                "input" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    (g.sum(a)?, vec![a])
                }
                "matmul" => {
                    let k = dims(&mut rng);
                    let a = g.input(away_from_zero(&mut rng, r, k, floor));
                    let b = g.input(away_from_zero(&mut rng, k, c, floor));
                    let m = g.matmul(a, b)?;
                    (g.sum(m)?, vec![a, b])
                }
                "add" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let b = g.input(away_from_zero(&mut rng, r, c, floor));
                    let m = g.add(a, b)?;
                    (g.sum(m)?, vec![a, b])
                }
                "elem_mul" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let b = g.input(away_from_zero(&mut rng, r, c, floor));
                    let m = g.elem_mul(a, b)?;
                    (g.sum(m)?, vec![a, b])
                }
                "relu" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let m = g.relu(a)?;
                    (g.sum(m)?, vec![a])
                }
                "softplus" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let m = g.softplus(a)?;
                    (g.sum(m)?, vec![a])
                }
                "tanh" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let m = g.tanh(a)?;
                    (g.sum(m)?, vec![a])
                }
                "concat_cols" => {
                    let c2 = dims(&mut rng);
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let b = g.input(away_from_zero(&mut rng, r, c2, floor));
                    let m = g.concat_cols(a, b)?;
                    (g.sum(m)?, vec![a, b])
                }
                "mean_rows" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let m = g.mean_rows(a)?;
                    (g.sum(m)?, vec![a])
                }
                "sum" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    (g.sum(a)?, vec![a])
                }
                "row_lookup" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    // Repeats exercise gradient accumulation into one row.
                    let k = 1 + rng.below(2 * r as u64) as usize;
                    let idx: Vec<usize> = (0..k).map(|_| rng.below(r as u64) as usize).collect();
                    let m = g.row_lookup(a, idx)?;
                    (g.sum(m)?, vec![a])
                }
                "scale" => {
                    let a = g.input(away_from_zero(&mut rng, r, c, floor));
                    let f = rng.uniform(-3.0, 3.0);
                    let m = g.scale(a, f)?;
                    (g.sum(m)?, vec![a])
                }
                other => unreachable!("unlisted op {other}"),
            };
            let report = g.grad_check(root, &leaves, eps, tol)?;
            worst = worst.max(report.max_rel_err());
        }
        out.push(OpCheck { op, trials, max_rel_err: worst });
    }
    Ok(out)
}

/// A small two-type, three-relation graph (20 nodes total) with one
/// given-feature type and one learned-embedding type, plus a training
/// batch of positives and sampled negatives.
fn composite_fixture(seed: u64) -> Result<(HeteroGraph, FeatureStore, Model, TripleBatch)> {
    let mut rng = Rng::derive(seed, streams::CHECK + 100);
    let n = 10;
    let g = HeteroGraph::from_parts(
        vec![
            ("alpha".to_string(), (0..n).map(|i| format!("a{i}")).collect()),
            ("beta".to_string(), (0..n).map(|i| format!("b{i}")).collect()),
        ],
        vec![
            ("binds".to_string(), 0, 1),
            ("feeds".to_string(), 1, 0),
            ("pairs".to_string(), 0, 1),
        ],
        {
            let mut per_rel = Vec::new();
            for _ in 0..3 {
                let picks = rng.sample_distinct(n * n, 12);
                per_rel.push(picks.into_iter().map(|p| (p / n, p % n)).collect());
            }
            per_rel
        },
    )?;
    let feats = FeatureStore {
        per_type: vec![
            TypeFeatures::Given(Tensor::from_fn(n, 5, |_, _| rng.uniform(-1.0, 1.0))),
            TypeFeatures::Learned,
        ],
    };
    let config = ModelConfig {
        mode: Mode::Inductive,
        scorer: ScorerKind::DistMult,
        hidden: vec![6],
        embed_dim: 6,
        ..ModelConfig::default()
    };
    let model = Model::new(&g, &feats, config, seed)?;
    // Two positives per relation plus one sampled negative each.
    let mut positives = Vec::new();
    for r in 0..3 {
        for &(h, t) in g.edges(r).iter().take(2) {
            positives.push(Triple { head: h, relation: r, tail: t });
        }
    }
    let negatives = sample_negatives(&g, &positives, 1, &mut rng)?;
    let batch = TripleBatch::with_negatives(&positives, &negatives);
    Ok((g, feats, model, batch))
}

/// Finite-difference check of the full training loss — message passing
/// over every relation, support-set relation embeddings, scoring, and
/// the logistic objective — with respect to every model parameter.
/// Returns the worst relative error across all parameter entries.
pub fn check_irgcn_loss(seed: u64, eps: f64, tol: f64) -> Result<f64> {
    let (g, feats, model, batch) = composite_fixture(seed)?;
    let mut fg = crate::model::build_forward(&model, &g, &feats)?;
    let root = build_loss(&mut fg, &g, &model, &batch)?;
    let leaves: Vec<_> = fg.param_nodes.iter().flatten().copied().collect();
    assert_eq!(
        leaves.len(),
        model.params().len(),
        "every parameter should appear as a differentiable leaf"
    );
    let report = fg.graph.grad_check(root, &leaves, eps, tol)?;
    Ok(report.max_rel_err())
}

/// Run both checks and collect a single report.
pub fn run(seed: u64, trials: usize, eps: f64, tol: f64) -> Result<VerifyReport> {
    let ops = check_all_ops(seed, trials, eps, tol)?;
    let loss_max_rel_err = check_irgcn_loss(seed, eps, tol)?;
    Ok(VerifyReport { ops, loss_max_rel_err, eps, tol })
}
