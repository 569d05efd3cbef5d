//! Full-batch training of link-prediction models.
//!
//! Each epoch pairs the positive training triples with freshly sampled
//! corrupted-tail negatives, builds one differentiable graph from
//! parameters to the summed logistic loss `Σ log(1 + exp(−y·score))`,
//! backpropagates, and applies an Adam step. The loss head stays inside
//! the closed operation set of [`crate::autodiff`]: triples are grouped
//! by relation, embeddings are gathered with row lookups, per-triple
//! scores become a column via elementwise products and a ones-vector
//! matmul, and labels enter as a constant `−y` column.
//!
//! The rotate scorer's phases are stored parameters; their cosines and
//! sines enter the tape as leaves and the loss uses the *squared*
//! distance `−‖h∘r − t‖²` (a strictly monotone transform of the
//! evaluation-time distance, so rankings agree). The phase gradient is
//! chained outside the tape: `dL/dθ = cosθ∘g_sin − sinθ∘g_cos`.
//!
//! Everything the loop touches — message passing, support sets, and the
//! negative-sampling filter — is derived from the *training* edges
//! alone, so held-out triples cannot influence the learned parameters.

use crate::graph::{HeteroGraph, Triple};
use crate::model::{
    build_forward, FeatureStore, Model, ModelConfig, ScorerKind,
};
use crate::rng::{streams, Rng};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Maximum rejection-sampling attempts per negative before giving up.
const MAX_NEGATIVE_ATTEMPTS: usize = 100;

/// Labeled triples for one optimization step: `labels[i]` is `+1.0` for
/// observed triples and `-1.0` for corrupted ones.
#[derive(Debug, Clone)]
pub struct TripleBatch {
    pub triples: Vec<Triple>,
    pub labels: Vec<f64>,
}

impl TripleBatch {
    pub fn new(triples: Vec<Triple>, labels: Vec<f64>) -> Result<Self> {
        if triples.len() != labels.len() {
            return Err(Error::Contract(format!(
                "{} triples but {} labels",
                triples.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::Contract(format!(
                "labels must be +1 or -1, got {bad}"
            )));
        }
        Ok(TripleBatch { triples, labels })
    }

    /// Positives (label `+1`) followed by negatives (label `-1`).
    pub fn with_negatives(positives: &[Triple], negatives: &[Triple]) -> Self {
        let mut triples = Vec::with_capacity(positives.len() + negatives.len());
        let mut labels = Vec::with_capacity(triples.capacity());
        triples.extend_from_slice(positives);
        labels.extend(std::iter::repeat(1.0).take(positives.len()));
        triples.extend_from_slice(negatives);
        labels.extend(std::iter::repeat(-1.0).take(negatives.len()));
        TripleBatch { triples, labels }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Check every triple against the graph's schemas and node counts.
    pub fn validate_against(&self, g: &HeteroGraph) -> Result<()> {
        for tr in &self.triples {
            if tr.relation >= g.num_relations() {
                return Err(Error::Index(format!(
                    "batch references relation id {} but the graph has {}",
                    tr.relation,
                    g.num_relations()
                )));
            }
            let (ht, tt) = g.relation_schema(tr.relation);
            if tr.head >= g.type_count(ht) || tr.tail >= g.type_count(tt) {
                return Err(Error::Index(format!(
                    "batch triple ({}, {}, {}) is out of range for relation '{}' ({} heads, {} tails)",
                    tr.head,
                    g.relation_name(tr.relation),
                    tr.tail,
                    g.relation_name(tr.relation),
                    g.type_count(ht),
                    g.type_count(tt)
                )));
            }
        }
        Ok(())
    }
}

/// Draw `k_neg` corrupted-tail negatives per positive: the head and
/// relation stay fixed and a uniform tail of the relation's tail type is
/// accepted unless it recreates the original tail or any edge present
/// in `g` (pass the *training* graph so the filter never peeks at
/// held-out data). Rejection keeps the accepted tails exactly uniform
/// over the allowed set.
pub fn sample_negatives(
    g: &HeteroGraph,
    positives: &[Triple],
    k_neg: usize,
    rng: &mut Rng,
) -> Result<Vec<Triple>> {
    let mut out = Vec::with_capacity(positives.len() * k_neg);
    for p in positives {
        let (_, tt) = g.relation_schema(p.relation);
        let n_tail = g.type_count(tt);
        for _ in 0..k_neg {
            let mut accepted = None;
            for _ in 0..MAX_NEGATIVE_ATTEMPTS {
                let cand = rng.below(n_tail as u64) as usize;
                if cand != p.tail && !g.has_edge(p.relation, p.head, cand) {
                    accepted = Some(cand);
                    break;
                }
            }
            match accepted {
                Some(tail) => out.push(Triple {
                    head: p.head,
                    relation: p.relation,
                    tail,
                }),
                None => {
                    let (ht, tt) = g.relation_schema(p.relation);
                    return Err(Error::SamplingExhausted {
                        triple: format!(
                            "{}::{} -[{}]-> {}::{}",
                            g.type_name(ht),
                            g.node_name(ht, p.head),
                            g.relation_name(p.relation),
                            g.type_name(tt),
                            g.node_name(tt, p.tail)
                        ),
                        attempts: MAX_NEGATIVE_ATTEMPTS,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Direct (out-of-tape) logistic loss `Σ log(1 + exp(−y·score))` over a
/// batch, summed relation-major to mirror the in-tape loss head. Uses
/// the *evaluation-time* score, so for the rotate scorer this is the
/// plain distance form, not the squared training surrogate.
pub fn logistic_loss(
    batch: &TripleBatch,
    embs: &crate::model::Embeddings,
    kind: ScorerKind,
    g: &HeteroGraph,
) -> Result<f64> {
    batch.validate_against(g)?;
    let mut total = 0.0;
    for r in 0..g.num_relations() {
        for (tr, &y) in batch.triples.iter().zip(&batch.labels) {
            if tr.relation != r {
                continue;
            }
            let rel = embs.relations[r].as_ref().ok_or_else(|| {
                Error::Contract(format!(
                    "relation '{}' has no embedding (no support edges)",
                    g.relation_name(r)
                ))
            })?;
            let (ht, tt) = g.relation_schema(r);
            let s = crate::model::score(
                embs.types[ht].row(tr.head),
                rel,
                embs.types[tt].row(tr.tail),
                kind,
            )?;
            total += crate::autodiff::softplus(-y * s);
        }
    }
    Ok(total)
}

/// Append the logistic loss head for `batch` onto an already built
/// forward graph, returning the scalar loss node. Triples are grouped
/// by relation; each group contributes `Σ softplus(−y·score)` and the
/// groups are added in ascending relation order.
pub fn build_loss(
    fg: &mut crate::model::ForwardGraph,
    g: &HeteroGraph,
    model: &Model,
    batch: &TripleBatch,
) -> Result<crate::autodiff::NodeId> {
    if batch.is_empty() {
        return Err(Error::Contract("cannot build a loss over an empty batch".into()));
    }
    batch.validate_against(g)?;
    let d = model.width;
    let graph = &mut fg.graph;

    // Constant column selectors for the interleaved complex layout and
    // the ones column that sums each row into a score.
    let half = d / 2;
    let mut select = None;
    if matches!(model.config.scorer, ScorerKind::Complex | ScorerKind::Rotate) {
        let even = Tensor::from_fn(d, half, |i, j| if i == 2 * j { 1.0 } else { 0.0 });
        let odd = Tensor::from_fn(d, half, |i, j| if i == 2 * j + 1 { 1.0 } else { 0.0 });
        select = Some((graph.input(even), graph.input(odd)));
    }
    let ones_full = graph.input(Tensor::filled(d, 1, 1.0));
    let ones_half = if select.is_some() {
        Some(graph.input(Tensor::filled(half, 1, 1.0)))
    } else {
        None
    };

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); g.num_relations()];
    for (i, tr) in batch.triples.iter().enumerate() {
        groups[tr.relation].push(i);
    }

    let mut total: Option<crate::autodiff::NodeId> = None;
    for r in 0..g.num_relations() {
        let idx = &groups[r];
        if idx.is_empty() {
            continue;
        }
        let b = idx.len();
        let (ht, tt) = g.relation_schema(r);
        let heads: Vec<usize> = idx.iter().map(|&i| batch.triples[i].head).collect();
        let tails: Vec<usize> = idx.iter().map(|&i| batch.triples[i].tail).collect();
        let hrows = graph.row_lookup(fg.type_embeddings[ht], heads)?;
        let trows = graph.row_lookup(fg.type_embeddings[tt], tails)?;

        // Per-triple score column (B×1).
        let scores = if model.config.scorer == ScorerKind::Rotate && !model.is_inductive(r) {
            let trig = fg
                .trig
                .ok_or_else(|| Error::Contract("rotate model lacks phase leaves".into()))?;
            let (sel_e, sel_o) = select.expect("selectors exist for rotate");
            let ones_h = ones_half.expect("half ones exist for rotate");
            let he = graph.matmul(hrows, sel_e)?;
            let ho = graph.matmul(hrows, sel_o)?;
            let te = graph.matmul(trows, sel_e)?;
            let to = graph.matmul(trows, sel_o)?;
            let cos_b = graph.row_lookup(trig.cos, vec![r; b])?;
            let sin_b = graph.row_lookup(trig.sin, vec![r; b])?;
            // (he + i·ho)(cos + i·sin) = (he·cos − ho·sin) + i(he·sin + ho·cos)
            let hc = graph.elem_mul(he, cos_b)?;
            let hs = graph.elem_mul(ho, sin_b)?;
            let neg_hs = graph.scale(hs, -1.0)?;
            let rot_e = graph.add(hc, neg_hs)?;
            let hc2 = graph.elem_mul(he, sin_b)?;
            let hs2 = graph.elem_mul(ho, cos_b)?;
            let rot_o = graph.add(hc2, hs2)?;
            let neg_te = graph.scale(te, -1.0)?;
            let neg_to = graph.scale(to, -1.0)?;
            let de = graph.add(rot_e, neg_te)?;
            let dd = graph.add(rot_o, neg_to)?;
            let de2 = graph.elem_mul(de, de)?;
            let dd2 = graph.elem_mul(dd, dd)?;
            let sq = graph.add(de2, dd2)?;
            let dist2 = graph.matmul(sq, ones_h)?;
            // Squared-distance surrogate of the evaluation score.
            graph.scale(dist2, -1.0)?
        } else {
            let rel = fg.relation_embeddings[r].ok_or_else(|| {
                Error::Contract(format!(
                    "relation '{}' has no embedding (no support edges)",
                    g.relation_name(r)
                ))
            })?;
            let rel_b = graph.row_lookup(rel, vec![0; b])?;
            match model.config.scorer {
                ScorerKind::DistMult => {
                    let ht_prod = graph.elem_mul(hrows, trows)?;
                    let full = graph.elem_mul(ht_prod, rel_b)?;
                    graph.matmul(full, ones_full)?
                }
                ScorerKind::Complex => {
                    let (sel_e, sel_o) = select.expect("selectors exist for complex");
                    let ones_h = ones_half.expect("half ones exist for complex");
                    let he = graph.matmul(hrows, sel_e)?;
                    let ho = graph.matmul(hrows, sel_o)?;
                    let te = graph.matmul(trows, sel_e)?;
                    let to = graph.matmul(trows, sel_o)?;
                    let re = graph.matmul(rel_b, sel_e)?;
                    let ro = graph.matmul(rel_b, sel_o)?;
                    // Re⟨h, r, conj(t)⟩ =
                    //   he·re·te + ho·re·to + he·ro·to − ho·ro·te
                    let t1a = graph.elem_mul(he, re)?;
                    let t1 = graph.elem_mul(t1a, te)?;
                    let t2a = graph.elem_mul(ho, re)?;
                    let t2 = graph.elem_mul(t2a, to)?;
                    let t3a = graph.elem_mul(he, ro)?;
                    let t3 = graph.elem_mul(t3a, to)?;
                    let t4a = graph.elem_mul(ho, ro)?;
                    let t4 = graph.elem_mul(t4a, te)?;
                    let s12 = graph.add(t1, t2)?;
                    let s123 = graph.add(s12, t3)?;
                    let neg_t4 = graph.scale(t4, -1.0)?;
                    let terms = graph.add(s123, neg_t4)?;
                    graph.matmul(terms, ones_h)?
                }
                ScorerKind::Rotate => unreachable!("handled above"),
            }
        };

        // softplus(−y ⊙ score), summed over the group.
        let neg_y = Tensor::from_fn(b, 1, |i, _| -batch.labels[idx[i]]);
        let neg_y_node = graph.input(neg_y);
        let margins = graph.elem_mul(scores, neg_y_node)?;
        let sp = graph.softplus(margins)?;
        let group_sum = graph.sum(sp)?;
        total = Some(match total {
            Some(acc) => graph.add(acc, group_sum)?,
            None => group_sum,
        });
    }
    total.ok_or_else(|| Error::Contract("batch had no triples after grouping".into()))
}

/// Optimization hyperparameters plus the model shape to train.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Negatives sampled per positive per epoch.
    pub k_neg: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: 1e-2,
            k_neg: 1,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 17,
            model: ModelConfig::default(),
        }
    }
}

/// A trained model plus its per-epoch loss trace.
pub struct TrainResult {
    pub model: Model,
    pub trace: Vec<f64>,
}

/// Train a model with full-batch Adam.
///
/// `g` fixes the node universe and relation schemas; **only** the edges
/// in `train` are used — for message passing, for inductive support
/// sets, and for the negative-sampling filter. Passing a graph that
/// still carries held-out edges changes nothing, because the loop
/// rebuilds its working graph from `train` alone.
pub fn fit(
    g: &HeteroGraph,
    feats: &FeatureStore,
    train: &[Triple],
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    if train.is_empty() {
        return Err(Error::Contract("cannot train on an empty triple set".into()));
    }
    if cfg.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    if !(cfg.lr.is_finite() && cfg.lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    if cfg.k_neg == 0 {
        return Err(Error::Config("k_neg must be at least 1".into()));
    }
    let gt = g.with_edges(train)?;
    let mut model = Model::new(&gt, feats, cfg.model.clone(), cfg.seed)?;
    let mut neg_rng = Rng::derive(cfg.seed, streams::NEGATIVE);

    // Adam moment buffers, one pair per parameter tensor.
    let mut m1: Vec<Tensor> = model
        .params()
        .iter()
        .map(|p| Tensor::zeros(p.value.rows(), p.value.cols()))
        .collect();
    let mut m2 = m1.clone();

    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let negatives = sample_negatives(&gt, train, cfg.k_neg, &mut neg_rng)?;
        let batch = TripleBatch::with_negatives(train, &negatives);

        let mut fg = build_forward(&model, &gt, feats)?;
        let root = build_loss(&mut fg, &gt, &model, &batch)?;
        fg.graph.forward(root)?;
        let loss = fg.graph.value(root).item();
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, lr: cfg.lr });
        }
        trace.push(loss);
        fg.graph.backward(root)?;

        // Collect parameter gradients; phases get the chain rule through
        // their cosine/sine leaves.
        let grads: Vec<Tensor> = model
            .params()
            .iter()
            .enumerate()
            .map(|(i, p)| match fg.param_nodes[i] {
                Some(id) => fg.graph.grad(id).clone(),
                None => {
                    let trig = fg.trig.expect("missing leaf must be the phase parameter");
                    debug_assert_eq!(trig.phase_param, i);
                    let gcos = fg.graph.grad(trig.cos);
                    let gsin = fg.graph.grad(trig.sin);
                    let theta = &p.value;
                    Tensor::from_fn(theta.rows(), theta.cols(), |a, b| {
                        let th = theta.get(a, b);
                        th.cos() * gsin.get(a, b) - th.sin() * gcos.get(a, b)
                    })
                }
            })
            .collect();

        // Adam step with bias correction.
        let bc1 = 1.0 - cfg.beta1.powi(epoch as i32);
        let bc2 = 1.0 - cfg.beta2.powi(epoch as i32);
        for (i, p) in model.params_mut().iter_mut().enumerate() {
            let g_i = grads[i].data();
            let m = m1[i].data_mut();
            let v = m2[i].data_mut();
            let w = p.value.data_mut();
            for k in 0..g_i.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g_i[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g_i[k] * g_i[k];
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                w[k] -= cfg.lr * mhat / (vhat.sqrt() + cfg.adam_eps);
            }
        }
    }
    Ok(TrainResult { model, trace })
}
