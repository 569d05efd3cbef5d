//! Ranking evaluation for link prediction.
//!
//! Each held-out triple `(h, r, t)` becomes a query: the true tail is
//! scored against candidate tails of the same node type and receives the
//! **pessimistic** rank `1 + #{candidates with score ≥ the true score}`
//! — ties count against the model, so a constant scorer earns the worst
//! possible rank, never a flattering one.
//!
//! Candidates default to *every* node of the tail type; a sampling
//! policy instead draws a fixed number of distinct non-true tails per
//! query from a per-query random stream. In filtered mode, candidates
//! that form a known positive (an edge present in the train or test
//! set) with the query's head and relation are removed first, so other
//! correct answers don't crowd out the one being asked about.
//!
//! Node embeddings are computed by message passing over the **training**
//! edges only; held-out edges never influence scores except as the
//! queries themselves.

use std::collections::HashSet;

use crate::exec::Exec;
use crate::graph::{HeteroGraph, Triple};
use crate::model::{embed_all, FeatureStore, Model};
use crate::rng::{streams, Rng};
use crate::{Error, Result};

/// Which tails are scored against the true one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidatePolicy {
    /// Every node of the tail type.
    All,
    /// `size` distinct non-true tails drawn per query.
    Sample { size: usize },
}

impl CandidatePolicy {
    pub fn describe(self) -> String {
        match self {
            CandidatePolicy::All => "all".to_string(),
            CandidatePolicy::Sample { size } => format!("sample:{size}"),
        }
    }
}

/// Whether known positives are removed from the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Drop candidates that form a train- or test-set edge with the
    /// query's head and relation (the true tail always stays).
    Filtered,
    /// Keep every candidate.
    Raw,
}

impl FilterMode {
    pub fn describe(self) -> &'static str {
        match self {
            FilterMode::Filtered => "filtered",
            FilterMode::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub policy: CandidatePolicy,
    pub filter: FilterMode,
    /// Seeds the per-query candidate-sampling streams.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            policy: CandidatePolicy::All,
            filter: FilterMode::Filtered,
            seed: 17,
        }
    }
}

/// One evaluated query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRecord {
    pub triple: Triple,
    /// Pessimistic rank of the true tail (1 = best).
    pub rank: usize,
    /// Candidates scored, including the true tail.
    pub candidates: usize,
}

/// How the evaluation was configured, echoed into reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalMetadata {
    pub policy: String,
    pub filter: String,
    pub seed: u64,
    pub num_queries: usize,
}

/// Aggregated ranking metrics plus every per-query rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    /// Mean reciprocal rank.
    pub mrr: f64,
    /// Mean rank.
    pub mr: f64,
    /// `(k, fraction of queries with rank ≤ k)` for k = 1, 3, 10.
    pub hits_at: [(usize, f64); 3],
    pub queries: Vec<QueryRecord>,
    pub metadata: EvalMetadata,
}

/// Pessimistic rank of a score among competitors: `1 + #{s ≥ s_true}`.
pub fn rank_among(score_true: f64, others: impl IntoIterator<Item = f64>) -> usize {
    1 + others.into_iter().filter(|&s| s >= score_true).count()
}

/// MRR, MR, and Hits@{1,3,10} from raw ranks, aggregated in input order.
pub fn metrics_from_ranks(ranks: &[usize]) -> Result<(f64, f64, [(usize, f64); 3])> {
    if ranks.is_empty() {
        return Err(Error::Contract("cannot aggregate zero ranks".into()));
    }
    if let Some(bad) = ranks.iter().find(|&&r| r == 0) {
        return Err(Error::Contract(format!("ranks start at 1, got {bad}")));
    }
    let n = ranks.len() as f64;
    let mut rr = 0.0;
    let mut sum = 0.0;
    for &r in ranks {
        rr += 1.0 / r as f64;
        sum += r as f64;
    }
    let hits = [1usize, 3, 10].map(|k| {
        let frac = ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        (k, frac)
    });
    Ok((rr / n, sum / n, hits))
}

/// Evaluate `model` on held-out `test` triples.
///
/// `g` fixes the node universe; message passing, inductive support, and
/// embeddings use only the `train` edges. The known-positive filter uses
/// `train ∪ test`. Queries are independent, so they are distributed
/// through `exec`; aggregation is always in query order, making the
/// report identical for any thread count.
pub fn evaluate(
    model: &Model,
    g: &HeteroGraph,
    feats: &FeatureStore,
    train: &[Triple],
    test: &[Triple],
    cfg: &EvalConfig,
    exec: &Exec,
) -> Result<RankingReport> {
    if test.is_empty() {
        return Err(Error::Contract("no test triples to evaluate".into()));
    }
    if let CandidatePolicy::Sample { size: 0 } = cfg.policy {
        return Err(Error::Contract(
            "candidate sampling needs a positive sample size".into(),
        ));
    }
    let gt = g.with_edges(train)?;
    let embs = embed_all(model, &gt, feats)?;

    // Validate all queries and collect known positives up front.
    let mut known: HashSet<(usize, usize, usize)> = HashSet::new();
    for tr in train.iter().chain(test) {
        if tr.relation >= g.num_relations() {
            return Err(Error::Index(format!(
                "triple references relation id {} but the graph has {}",
                tr.relation,
                g.num_relations()
            )));
        }
        let (ht, tt) = g.relation_schema(tr.relation);
        if tr.head >= g.type_count(ht) || tr.tail >= g.type_count(tt) {
            return Err(Error::Index(format!(
                "triple ({}, {}, {}) is out of range for relation '{}'",
                tr.head,
                g.relation_name(tr.relation),
                tr.tail,
                g.relation_name(tr.relation)
            )));
        }
        known.insert((tr.relation, tr.head, tr.tail));
    }
    for (r, emb) in embs.relations.iter().enumerate() {
        if emb.is_none() && test.iter().any(|t| t.relation == r) {
            return Err(Error::Contract(format!(
                "relation '{}' cannot be evaluated: it has no support edges in the training set",
                g.relation_name(r)
            )));
        }
    }

    let kind = model.config.scorer;
    let records: Vec<Result<QueryRecord>> = exec.map(test.len(), |q| {
        let triple = test[q];
        let (ht, tt) = g.relation_schema(triple.relation);
        let n_tail = g.type_count(tt);
        let h_row = embs.types[ht].row(triple.head);
        let rel = embs.relations[triple.relation]
            .as_ref()
            .expect("checked above");
        let s_true = crate::model::score(h_row, rel, embs.types[tt].row(triple.tail), kind)?;

        // Non-true candidate tails under the policy.
        let others: Vec<usize> = match cfg.policy {
            CandidatePolicy::All => (0..n_tail).filter(|&c| c != triple.tail).collect(),
            CandidatePolicy::Sample { size } => {
                let mut rng = Rng::derive(cfg.seed, streams::EVAL + q as u64);
                let k = size.min(n_tail - 1);
                // Draw from the population without the true tail, then
                // shift ids at or above it back up.
                rng.sample_distinct(n_tail - 1, k)
                    .into_iter()
                    .map(|c| if c >= triple.tail { c + 1 } else { c })
                    .collect()
            }
        };
        let mut scored = 0usize;
        let mut at_or_above = 0usize;
        for c in others {
            if cfg.filter == FilterMode::Filtered
                && known.contains(&(triple.relation, triple.head, c))
            {
                continue;
            }
            let s = crate::model::score_unchecked(h_row, rel, embs.types[tt].row(c), kind);
            scored += 1;
            if s >= s_true {
                at_or_above += 1;
            }
        }
        Ok(QueryRecord {
            triple,
            rank: 1 + at_or_above,
            candidates: scored + 1,
        })
    });

    let mut queries = Vec::with_capacity(records.len());
    for r in records {
        queries.push(r?);
    }
    let ranks: Vec<usize> = queries.iter().map(|r| r.rank).collect();
    let (mrr, mr, hits_at) = metrics_from_ranks(&ranks)?;
    Ok(RankingReport {
        mrr,
        mr,
        hits_at,
        metadata: EvalMetadata {
            policy: cfg.policy.describe(),
            filter: cfg.filter.describe().to_string(),
            seed: cfg.seed,
            num_queries: queries.len(),
        },
        queries,
    })
}
