//! Dataset utilities: few-shot splits, label-driven relation expansion,
//! a synthetic benchmark generator with a planted rule, and feature /
//! label file I/O.
//!
//! File formats, all line-oriented with `#` comments and blank lines
//! ignored:
//!
//! * **features** — one CSV file per node type, each line
//!   `name,v0,v1,…`; every node of the type appears exactly once and
//!   all rows have the same width. A missing file means the type gets a
//!   learned embedding table instead.
//! * **labels** — TSV lines `type<TAB>name<TAB>label`; a node carries at
//!   most one label, and label vocabularies are per type in first-
//!   appearance order.

use std::path::Path;

use crate::graph::{HeteroGraph, Triple};
use crate::rng::{streams, Rng};
use crate::tensor::Tensor;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Few-shot splits
// ---------------------------------------------------------------------------

/// A split that holds out most of one target relation's edges: `k` of
/// them (uniformly chosen) stay for training, the rest become test
/// queries, and every other relation trains in full.
#[derive(Debug, Clone)]
pub struct FewShotSplit {
    /// The held-out relation's id.
    pub relation: usize,
    /// Target-relation edges available at training time (after any
    /// clamping).
    pub k: usize,
    pub rare_train: Vec<Triple>,
    pub test: Vec<Triple>,
    /// All edges of the non-target relations.
    pub other_train: Vec<Triple>,
    /// Human-readable notes, e.g. a clamped `k`.
    pub warnings: Vec<String>,
}

impl FewShotSplit {
    /// Everything trainable: other relations' edges followed by the
    /// target relation's retained edges.
    pub fn train_edges(&self) -> Vec<Triple> {
        let mut out = Vec::with_capacity(self.other_train.len() + self.rare_train.len());
        out.extend_from_slice(&self.other_train);
        out.extend_from_slice(&self.rare_train);
        out
    }
}

fn split_relation_edges(
    g: &HeteroGraph,
    relation: usize,
    keep: usize,
    seed: u64,
) -> (Vec<Triple>, Vec<Triple>, Vec<Triple>) {
    let mut rare: Vec<Triple> = g
        .edges(relation)
        .iter()
        .map(|&(head, tail)| Triple { head, relation, tail })
        .collect();
    let mut rng = Rng::derive(seed, streams::SPLIT);
    rng.shuffle(&mut rare);
    let test = rare.split_off(keep);
    let other_train: Vec<Triple> = g
        .all_triples()
        .into_iter()
        .filter(|t| t.relation != relation)
        .collect();
    (rare, test, other_train)
}

/// Keep exactly `k` uniformly chosen edges of `relation` for training
/// and hold out the rest. A `k` larger than the relation clamps to the
/// edge count, with a warning recorded; `k = 0` holds out everything.
pub fn kshot_split(g: &HeteroGraph, relation: usize, k: usize, seed: u64) -> Result<FewShotSplit> {
    if relation >= g.num_relations() {
        return Err(Error::Index(format!(
            "relation id {relation} out of range ({} relations)",
            g.num_relations()
        )));
    }
    let total = g.edges(relation).len();
    let mut warnings = Vec::new();
    let keep = if k > total {
        warnings.push(format!(
            "requested k={k} but relation '{}' has only {total} edges; keeping all {total}",
            g.relation_name(relation)
        ));
        total
    } else {
        k
    };
    let (rare_train, test, other_train) = split_relation_edges(g, relation, keep, seed);
    Ok(FewShotSplit {
        relation,
        k: keep,
        rare_train,
        test,
        other_train,
        warnings,
    })
}

/// Keep `round(fraction · |E_relation|)` uniformly chosen edges of
/// `relation` for training and hold out the rest.
pub fn percent_split(
    g: &HeteroGraph,
    relation: usize,
    fraction: f64,
    seed: u64,
) -> Result<FewShotSplit> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "train fraction must lie in [0, 1], got {fraction}"
        )));
    }
    if relation >= g.num_relations() {
        return Err(Error::Index(format!(
            "relation id {relation} out of range ({} relations)",
            g.num_relations()
        )));
    }
    let total = g.edges(relation).len();
    let keep = (fraction * total as f64).round() as usize;
    let (rare_train, test, other_train) = split_relation_edges(g, relation, keep, seed);
    Ok(FewShotSplit {
        relation,
        k: keep,
        rare_train,
        test,
        other_train,
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Node labels and the label-relation transform
// ---------------------------------------------------------------------------

/// Per-type node labels with per-type vocabularies.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    /// `vocab[t]` — label strings of type `t` in first-appearance order.
    pub vocab: Vec<Vec<String>>,
    /// `assignment[t][node]` — index into `vocab[t]`, if labeled.
    pub assignment: Vec<Vec<Option<usize>>>,
}

impl LabelMap {
    pub fn empty(g: &HeteroGraph) -> Self {
        LabelMap {
            vocab: vec![Vec::new(); g.num_types()],
            assignment: (0..g.num_types())
                .map(|t| vec![None; g.type_count(t)])
                .collect(),
        }
    }

    /// Does type `t` carry any labels?
    pub fn labeled(&self, t: usize) -> bool {
        !self.vocab[t].is_empty()
    }

    /// Assign `label` to a node, interning it into the type's vocabulary.
    pub fn assign(&mut self, t: usize, node: usize, label: &str) -> Result<()> {
        if let Some(idx) = self.assignment[t][node] {
            if self.vocab[t][idx] != label {
                return Err(Error::Schema(format!(
                    "node {node} of type {t} labeled both '{}' and '{label}'",
                    self.vocab[t][idx]
                )));
            }
            return Ok(());
        }
        let idx = match self.vocab[t].iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                self.vocab[t].push(label.to_string());
                self.vocab[t].len() - 1
            }
        };
        self.assignment[t][node] = Some(idx);
        Ok(())
    }
}

/// Parse `type<TAB>name<TAB>label` lines against a graph's universe.
pub fn parse_labels(g: &HeteroGraph, text: &str) -> Result<LabelMap> {
    let mut labels = LabelMap::empty(g);
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let t = g.type_id(fields[0]).ok_or_else(|| {
            Error::Resolution(format!(
                "label line {line_no}: unknown node type '{}'",
                fields[0]
            ))
        })?;
        let node = g.node_id(t, fields[1]).ok_or_else(|| {
            Error::Resolution(format!(
                "label line {line_no}: unknown node '{}' of type '{}'",
                fields[1], fields[0]
            ))
        })?;
        if fields[2].is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "empty label".into(),
            });
        }
        labels.assign(t, node, fields[2])?;
    }
    Ok(labels)
}

pub fn load_labels(g: &HeteroGraph, path: &Path) -> Result<LabelMap> {
    parse_labels(g, &std::fs::read_to_string(path)?)
}

/// Serialize labels as `type<TAB>name<TAB>label` lines (types in id
/// order, nodes in id order).
pub fn labels_text(g: &HeteroGraph, labels: &LabelMap) -> String {
    let mut out = String::new();
    for t in 0..g.num_types() {
        for node in 0..g.type_count(t) {
            if let Some(idx) = labels.assignment[t][node] {
                out.push_str(&format!(
                    "{}\t{}\t{}\n",
                    g.type_name(t),
                    g.node_name(t, node),
                    labels.vocab[t][idx]
                ));
            }
        }
    }
    out
}

/// Split every relation by the label of its uniquely labeled endpoint
/// type: a relation `r` whose (say) tail type carries labels
/// `l0 … l{L-1}` becomes `L` relations `r_l0 … r_l{L-1}`, each edge
/// moving to the relation of its tail's label. Every `(relation,
/// label)` pair exists in the result even when no edge lands in it, so
/// a graph with `R` relations and `L` labels always yields `R·L`
/// relations. Edge counts are preserved exactly.
///
/// Errors if a relation has labels on both endpoint types or neither,
/// or if an edge touches an unlabeled node of the labeled type.
pub fn transform_label_relations(g: &HeteroGraph, labels: &LabelMap) -> Result<HeteroGraph> {
    if labels.vocab.len() != g.num_types() {
        return Err(Error::Contract(format!(
            "label map covers {} types but the graph has {}",
            labels.vocab.len(),
            g.num_types()
        )));
    }
    let types: Vec<(String, Vec<String>)> = (0..g.num_types())
        .map(|t| {
            (
                g.type_name(t).to_string(),
                (0..g.type_count(t))
                    .map(|i| g.node_name(t, i).to_string())
                    .collect(),
            )
        })
        .collect();
    let mut relations: Vec<(String, usize, usize)> = Vec::new();
    let mut edge_lists: Vec<Vec<(usize, usize)>> = Vec::new();
    for r in 0..g.num_relations() {
        let (ht, tt) = g.relation_schema(r);
        let side = match (labels.labeled(ht), labels.labeled(tt)) {
            (true, false) => ht,
            (false, true) => tt,
            (true, true) => {
                return Err(Error::Transform(format!(
                    "relation '{}' has labels on both endpoint types ('{}' and '{}'); exactly one must be labeled",
                    g.relation_name(r),
                    g.type_name(ht),
                    g.type_name(tt)
                )));
            }
            (false, false) => {
                return Err(Error::Transform(format!(
                    "relation '{}' has labels on neither endpoint type ('{}' nor '{}'); exactly one must be labeled",
                    g.relation_name(r),
                    g.type_name(ht),
                    g.type_name(tt)
                )));
            }
        };
        let vocab = &labels.vocab[side];
        let base = relations.len();
        for label in vocab {
            relations.push((format!("{}_{}", g.relation_name(r), label), ht, tt));
            edge_lists.push(Vec::new());
        }
        for &(h, t) in g.edges(r) {
            let node = if side == ht { h } else { t };
            let idx = labels.assignment[side][node].ok_or_else(|| {
                Error::Transform(format!(
                    "edge of relation '{}' touches unlabeled node '{}' of type '{}'",
                    g.relation_name(r),
                    g.node_name(side, node),
                    g.type_name(side)
                ))
            })?;
            edge_lists[base + idx].push((h, t));
        }
    }
    HeteroGraph::from_parts(types, relations, edge_lists)
}

// ---------------------------------------------------------------------------
// Synthetic benchmark generator
// ---------------------------------------------------------------------------

/// Shape of a generated benchmark. The last relation, named `rare`, is
/// the planted few-shot target.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    /// Node types `t0 … t{T-1}`; at least 2 (the planted relation links
    /// `t0` to `t1`).
    pub num_types: usize,
    /// Nodes per type, named `n0 … n{N-1}`.
    pub nodes_per_type: usize,
    /// Latent factor and feature width.
    pub feature_dim: usize,
    /// Total relations including the final `rare` one.
    pub num_relations: usize,
    /// Edges drawn for each common relation.
    pub edges_per_relation: usize,
    /// Edges of the planted `rare` relation.
    pub rare_edges: usize,
    /// Observation noise: features are `latent + noise · η`.
    pub noise: f64,
    /// Quantile label buckets carved on type `t0` (`l0 … l{L-1}`).
    pub num_labels: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            num_types: 3,
            nodes_per_type: 100,
            feature_dim: 8,
            num_relations: 8,
            edges_per_relation: 300,
            rare_edges: 60,
            noise: 0.25,
            num_labels: 3,
            seed: 17,
        }
    }
}

/// A generated benchmark: the graph, observed features, node labels,
/// and the latent factors that generated everything (for diagnostics —
/// models must never see them).
#[derive(Debug, Clone)]
pub struct SynthData {
    pub graph: HeteroGraph,
    /// One `N × F` observed feature matrix per type.
    pub features: Vec<Tensor>,
    pub labels: LabelMap,
    /// One `N × F` latent factor matrix per type.
    pub latent: Vec<Tensor>,
    /// One ±1 pattern per relation (`rare` last): the relation's
    /// semantics, i.e. which latent coordinates attract and which repel.
    pub relation_signs: Vec<Vec<f64>>,
}

/// Signed affinity of a candidate pair: each relation carries its own
/// ±1 pattern over latent coordinates, and a pair's affinity under that
/// relation is `Σ_i signs[i] · z_head[a,i] · z_tail[b,i]`.
pub fn signed_affinity(z_head: &Tensor, a: usize, z_tail: &Tensor, b: usize, signs: &[f64]) -> f64 {
    z_head
        .row(a)
        .iter()
        .zip(z_tail.row(b))
        .zip(signs)
        .map(|((x, y), s)| s * x * y)
        .sum()
}

/// The planted rule behind every relation: exactly the top `count`
/// pairs by signed affinity (ties broken by ascending pair index
/// `a·N + b`) are edges. Exposed so oracles can re-derive any
/// relation's edge set from the latent factors and its sign pattern.
pub fn planted_pairs(
    z_head: &Tensor,
    z_tail: &Tensor,
    signs: &[f64],
    count: usize,
) -> Vec<(usize, usize)> {
    let n_head = z_head.rows();
    let n_tail = z_tail.rows();
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n_head * n_tail);
    for a in 0..n_head {
        for b in 0..n_tail {
            scored.push((signed_affinity(z_head, a, z_tail, b, signs), a * n_tail + b));
        }
    }
    scored.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
    let mut pairs: Vec<(usize, usize)> = scored[..count]
        .iter()
        .map(|&(_, idx)| (idx / n_tail, idx % n_tail))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Generate a benchmark with a planted rare relation.
///
/// All randomness flows from one stream in a fixed draw order, so equal
/// specs generate byte-identical datasets. Common relations `rel{i}`
/// link type `i mod T` to type `(i+1) mod T` with edges chosen by
/// latent affinity plus Gumbel noise; the `rare` relation (`t0 → t1`)
/// follows the noiseless planted rule, so it is exactly predictable
/// from the latent factors. Labels bucket type-`t0` nodes into
/// `num_labels` quantiles of their first latent coordinate.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthData> {
    let SynthSpec {
        num_types: t_count,
        nodes_per_type: n,
        feature_dim: f,
        num_relations: r_count,
        edges_per_relation,
        rare_edges,
        noise,
        num_labels,
        seed,
    } = *spec;
    if t_count < 2 {
        return Err(Error::Synth(format!(
            "need at least 2 node types for the rare relation, got {t_count}"
        )));
    }
    if n == 0 || f == 0 || r_count == 0 {
        return Err(Error::Synth(
            "nodes per type, feature dim, and relation count must be positive".into(),
        ));
    }
    let pair_budget = n * n;
    if edges_per_relation == 0 || edges_per_relation > pair_budget {
        return Err(Error::Synth(format!(
            "edges_per_relation must lie in 1..={pair_budget}, got {edges_per_relation}"
        )));
    }
    if rare_edges == 0 || rare_edges > pair_budget {
        return Err(Error::Synth(format!(
            "rare_edges must lie in 1..={pair_budget}, got {rare_edges}"
        )));
    }
    if num_labels == 0 || num_labels > n {
        return Err(Error::Synth(format!(
            "num_labels must lie in 1..={n}, got {num_labels}"
        )));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Synth(format!("noise must be finite and ≥ 0, got {noise}")));
    }

    let mut rng = Rng::derive(seed, streams::SYNTH);

    // Latent factors, then observed features (η is always drawn so the
    // downstream stream position does not depend on the noise level).
    let latent: Vec<Tensor> = (0..t_count)
        .map(|_| Tensor::from_fn(n, f, |_, _| rng.normal()))
        .collect();
    let features: Vec<Tensor> = latent
        .iter()
        .map(|z| {
            let eta = Tensor::from_fn(n, f, |_, _| rng.normal());
            Tensor::from_fn(n, f, |i, j| z.get(i, j) + noise * eta.get(i, j))
        })
        .collect();

    let types: Vec<(String, Vec<String>)> = (0..t_count)
        .map(|t| {
            (
                format!("t{t}"),
                (0..n).map(|i| format!("n{i}")).collect(),
            )
        })
        .collect();

    // Each relation carries its own ±1 semantic pattern over the latent
    // coordinates. The rare pattern is resampled (bounded, so tiny
    // feature widths cannot loop forever) until it differs from every
    // common relation that shares its t0 → t1 schema: its semantics must
    // be its own, not a copy of a well-observed relation's.
    let draw_signs = |rng: &mut Rng| -> Vec<f64> {
        (0..f).map(|_| if rng.below(2) == 0 { 1.0 } else { -1.0 }).collect()
    };
    let mut relation_signs: Vec<Vec<f64>> = (0..r_count).map(|_| draw_signs(&mut rng)).collect();
    for _ in 0..64 {
        let rare_signs = &relation_signs[r_count - 1];
        let clash = (0..r_count - 1)
            .any(|r| r % t_count == 0 && (r + 1) % t_count == 1 && relation_signs[r] == *rare_signs);
        if !clash {
            break;
        }
        relation_signs[r_count - 1] = draw_signs(&mut rng);
    }

    // Every relation is planted by the same pure rule — the top pairs
    // under its own signed affinity — so the map from participating
    // pairs to relation semantics is consistent across relations.
    // Randomness across seeds enters through the latent factors and the
    // sign patterns, not through edge-level noise.
    let mut relations: Vec<(String, usize, usize)> = Vec::new();
    let mut edge_lists: Vec<Vec<(usize, usize)>> = Vec::new();
    for r in 0..r_count - 1 {
        let ht = r % t_count;
        let tt = (r + 1) % t_count;
        relations.push((format!("rel{r}"), ht, tt));
        edge_lists.push(planted_pairs(
            &latent[ht],
            &latent[tt],
            &relation_signs[r],
            edges_per_relation,
        ));
    }
    relations.push(("rare".to_string(), 0, 1));
    edge_lists.push(planted_pairs(
        &latent[0],
        &latent[1],
        &relation_signs[r_count - 1],
        rare_edges,
    ));

    let graph = HeteroGraph::from_parts(types, relations, edge_lists)?;

    // Quantile labels on t0's first latent coordinate.
    let mut labels = LabelMap::empty(&graph);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        latent[0]
            .get(a, 0)
            .partial_cmp(&latent[0].get(b, 0))
            .unwrap()
            .then(a.cmp(&b))
    });
    for (rank, &node) in order.iter().enumerate() {
        let bucket = (rank * num_labels) / n;
        labels.assign(0, node, &format!("l{bucket}"))?;
    }

    Ok(SynthData {
        graph,
        features,
        labels,
        latent,
        relation_signs,
    })
}

// ---------------------------------------------------------------------------
// Feature file I/O
// ---------------------------------------------------------------------------

/// Parse one type's feature CSV (`name,v0,v1,…` per line) against the
/// graph's node universe. Every node of the type must appear exactly
/// once and all rows must share one width.
pub fn parse_features_csv(g: &HeteroGraph, t: usize, text: &str) -> Result<Tensor> {
    let count = g.type_count(t);
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; count];
    let mut width: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split(',');
        let name = fields.next().unwrap_or("");
        let node = g.node_id(t, name).ok_or_else(|| {
            Error::Resolution(format!(
                "feature line {line_no}: unknown node '{name}' of type '{}'",
                g.type_name(t)
            ))
        })?;
        let values: Vec<f64> = fields
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("'{}' is not a number", s.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "a feature row needs at least one value".into(),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("row has {} values but earlier rows have {w}", values.len()),
                });
            }
            _ => {}
        }
        if rows[node].is_some() {
            return Err(Error::Schema(format!(
                "feature file for type '{}' repeats node '{name}'",
                g.type_name(t)
            )));
        }
        rows[node] = Some(values);
    }
    let width = width.ok_or_else(|| {
        Error::Schema(format!("feature file for type '{}' is empty", g.type_name(t)))
    })?;
    let mut data = Vec::with_capacity(count * width);
    for (node, row) in rows.into_iter().enumerate() {
        match row {
            Some(v) => data.extend(v),
            None => {
                return Err(Error::Schema(format!(
                    "feature file for type '{}' is missing node '{}'",
                    g.type_name(t),
                    g.node_name(t, node)
                )));
            }
        }
    }
    Tensor::from_vec(count, width, data)
}

/// Serialize one type's features as `name,v0,v1,…` lines.
pub fn features_csv_text(g: &HeteroGraph, t: usize, features: &Tensor) -> String {
    let mut out = String::new();
    for i in 0..features.rows() {
        out.push_str(g.node_name(t, i));
        for j in 0..features.cols() {
            out.push(',');
            // Round-trippable shortest representation.
            out.push_str(&format!("{}", features.get(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Load a [`crate::model::FeatureStore`] from a directory holding
/// `{type}.csv` files; types without a file fall back to learned
/// embeddings.
pub fn load_features(g: &HeteroGraph, dir: &Path) -> Result<crate::model::FeatureStore> {
    let mut per_type = Vec::with_capacity(g.num_types());
    for t in 0..g.num_types() {
        let path = dir.join(format!("{}.csv", g.type_name(t)));
        if path.is_file() {
            let text = std::fs::read_to_string(&path)?;
            per_type.push(crate::model::TypeFeatures::Given(parse_features_csv(
                g, t, &text,
            )?));
        } else {
            per_type.push(crate::model::TypeFeatures::Learned);
        }
    }
    Ok(crate::model::FeatureStore { per_type })
}
