//! Drug-repurposing ranking: for each target gene, rank every candidate
//! drug by its triple score under a chosen relation, keep the top-k, and
//! count how often each validation drug appears across the per-gene
//! lists.
//!
//! Scoring direction is explicit: by default the drug is the head and
//! the gene the tail — `score(drug, relation, gene)` — matching edge
//! stores whose compound→gene edges point from the chemical to the
//! target; a flip flag swaps the roles. Reports name the direction so
//! numbers are never ambiguous.
//!
//! Ties are broken by ascending drug id, making every list reproducible
//! across platforms. The analytic chance baseline for hits-per-drug,
//! `genes · k / candidates`, ships inside every report next to the
//! measured counts, and [`random_control`] estimates the same quantity
//! empirically by replacing model scores with seeded uniform noise.

use std::collections::HashSet;

use crate::exec::Exec;
use crate::graph::{HeteroGraph, Triple};
use crate::model::{embed_all, FeatureStore, Model};
use crate::rng::{streams, Rng};
use crate::{Error, Result};

/// What to rank: the relation, the query genes, the candidate drugs,
/// the cutoff, and the validation list to score against.
#[derive(Debug, Clone)]
pub struct RepurposeSpec {
    /// Relation id whose triples are scored.
    pub relation: usize,
    /// Gene node ids (queries), one ranking each.
    pub genes: Vec<usize>,
    /// Candidate drug node ids; every ranking chooses among these.
    pub drugs: Vec<usize>,
    /// Validation drug ids whose hits are counted.
    pub validation: Vec<usize>,
    /// Per-gene list length.
    pub top_k: usize,
    /// `false`: drug is head, gene is tail. `true`: gene is head.
    pub flip: bool,
}

/// One gene's ranked candidates, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneRanking {
    pub gene: usize,
    /// `(drug id, score)`, descending score, ties by ascending id.
    pub top: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepurposeReport {
    /// Per-gene rankings in the spec's gene order.
    pub per_gene: Vec<GeneRanking>,
    /// `(validation drug id, #genes whose top-k contains it)`,
    /// descending hits, ties by ascending id.
    pub hits: Vec<(usize, usize)>,
    /// Analytic chance level: `genes · k / candidates`.
    pub baseline: f64,
    /// `"drug-as-head"` or `"gene-as-head"`.
    pub direction: String,
    pub top_k: usize,
    pub num_candidates: usize,
    /// Non-fatal spec problems, e.g. validation drugs outside the
    /// candidate list.
    pub warnings: Vec<String>,
}

/// Expected hits per drug when rankings are uniformly random.
pub fn analytic_baseline(genes: usize, top_k: usize, candidates: usize) -> f64 {
    if candidates == 0 {
        return 0.0;
    }
    genes as f64 * top_k as f64 / candidates as f64
}

/// Indices of the `k` best entries of `scores` under (score descending,
/// id ascending), where `ids[i]` labels `scores[i]`. Uses a partial
/// selection, then sorts only the selected prefix.
pub fn top_k_with_ids(scores: &[f64], ids: &[usize], k: usize) -> Vec<usize> {
    assert_eq!(scores.len(), ids.len(), "every score needs an id");
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let cmp = |&a: &usize, &b: &usize| {
        scores[b]
            .total_cmp(&scores[a])
            .then(ids[a].cmp(&ids[b]))
    };
    if k == 0 {
        return Vec::new();
    }
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    order.sort_by(cmp);
    order
}

/// Per validation drug, the number of lists containing it; sorted by
/// descending hits, ties by ascending drug id.
pub fn count_hits(top_lists: &[Vec<usize>], validation: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = validation
        .iter()
        .map(|&d| {
            let hits = top_lists.iter().filter(|l| l.contains(&d)).count();
            (d, hits)
        })
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

fn check_distinct(what: &str, ids: &[usize]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for &id in ids {
        if !seen.insert(id) {
            return Err(Error::Contract(format!("duplicate {what} id {id}")));
        }
    }
    Ok(())
}

/// Rank every candidate drug for every target gene and count validation
/// hits. Node embeddings come from message passing over the `train`
/// edges only.
pub fn rank_drugs(
    model: &Model,
    g: &HeteroGraph,
    feats: &FeatureStore,
    train: &[Triple],
    spec: &RepurposeSpec,
    exec: &Exec,
) -> Result<RepurposeReport> {
    if spec.relation >= g.num_relations() {
        return Err(Error::Index(format!(
            "relation id {} out of range ({} relations)",
            spec.relation,
            g.num_relations()
        )));
    }
    let (ht, tt) = g.relation_schema(spec.relation);
    let (drug_type, gene_type) = if spec.flip { (tt, ht) } else { (ht, tt) };
    let direction = if spec.flip { "gene-as-head" } else { "drug-as-head" };

    // Fatal: ids that don't exist in the graph. All offenders listed.
    let bad_genes: Vec<usize> = spec
        .genes
        .iter()
        .copied()
        .filter(|&i| i >= g.type_count(gene_type))
        .collect();
    let bad_drugs: Vec<usize> = spec
        .drugs
        .iter()
        .chain(&spec.validation)
        .copied()
        .filter(|&i| i >= g.type_count(drug_type))
        .collect();
    if !bad_genes.is_empty() || !bad_drugs.is_empty() {
        let mut parts = Vec::new();
        if !bad_genes.is_empty() {
            parts.push(format!(
                "unknown gene ids for type '{}': {bad_genes:?}",
                g.type_name(gene_type)
            ));
        }
        if !bad_drugs.is_empty() {
            parts.push(format!(
                "unknown drug ids for type '{}': {bad_drugs:?}",
                g.type_name(drug_type)
            ));
        }
        return Err(Error::Resolution(parts.join("; ")));
    }
    if spec.genes.is_empty() || spec.drugs.is_empty() {
        return Err(Error::Contract(
            "need at least one gene and one candidate drug".into(),
        ));
    }
    check_distinct("gene", &spec.genes)?;
    check_distinct("drug", &spec.drugs)?;
    check_distinct("validation drug", &spec.validation)?;
    if spec.top_k > spec.drugs.len() {
        return Err(Error::Contract(format!(
            "top-k {} exceeds the {} candidates",
            spec.top_k,
            spec.drugs.len()
        )));
    }

    // Non-fatal: validation drugs outside the candidate list can never
    // hit; they are reported, kept in the hit table, and warned about.
    let candidate_set: HashSet<usize> = spec.drugs.iter().copied().collect();
    let mut warnings = Vec::new();
    for &v in &spec.validation {
        if !candidate_set.contains(&v) {
            warnings.push(format!(
                "validation drug '{}' (id {v}) is not among the candidates and can never hit",
                g.node_name(drug_type, v)
            ));
        }
    }

    let gt = g.with_edges(train)?;
    let embs = embed_all(model, &gt, feats)?;
    let rel = embs.relations[spec.relation].as_ref().ok_or_else(|| {
        Error::Contract(format!(
            "relation '{}' has no embedding (no support edges in the training set)",
            g.relation_name(spec.relation)
        ))
    })?;
    let kind = model.config.scorer;

    let per_gene: Vec<GeneRanking> = exec.map(spec.genes.len(), |gi| {
        let gene = spec.genes[gi];
        let gene_row = embs.types[gene_type].row(gene);
        let scores: Vec<f64> = spec
            .drugs
            .iter()
            .map(|&d| {
                let drug_row = embs.types[drug_type].row(d);
                if spec.flip {
                    crate::model::score_unchecked(gene_row, rel, drug_row, kind)
                } else {
                    crate::model::score_unchecked(drug_row, rel, gene_row, kind)
                }
            })
            .collect();
        let top = top_k_with_ids(&scores, &spec.drugs, spec.top_k)
            .into_iter()
            .map(|pos| (spec.drugs[pos], scores[pos]))
            .collect();
        GeneRanking { gene, top }
    });

    let id_lists: Vec<Vec<usize>> = per_gene
        .iter()
        .map(|r| r.top.iter().map(|&(d, _)| d).collect())
        .collect();
    let hits = count_hits(&id_lists, &spec.validation);

    Ok(RepurposeReport {
        per_gene,
        hits,
        baseline: analytic_baseline(spec.genes.len(), spec.top_k, spec.drugs.len()),
        direction: direction.to_string(),
        top_k: spec.top_k,
        num_candidates: spec.drugs.len(),
        warnings,
    })
}

/// Outcome of the uniform-noise control experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutcome {
    /// Mean (over trials) of the per-trial mean hits per validation
    /// drug.
    pub mean_hits: f64,
    /// Standard error of that mean across trials (0 for one trial).
    pub se: f64,
    pub trials: usize,
    /// The analytic expectation `genes · k / candidates`.
    pub baseline: f64,
}

/// Replace model scores with seeded uniform noise and measure hits per
/// validation drug, averaged over `trials` independent experiments.
/// Each trial draws its own random stream, so trial results do not
/// depend on execution order or thread count.
pub fn random_control(
    spec: &RepurposeSpec,
    seed: u64,
    trials: usize,
    exec: &Exec,
) -> Result<ControlOutcome> {
    if trials == 0 {
        return Err(Error::Contract("need at least one control trial".into()));
    }
    if spec.genes.is_empty() || spec.drugs.is_empty() || spec.validation.is_empty() {
        return Err(Error::Contract(
            "the control experiment needs genes, candidates, and validation drugs".into(),
        ));
    }
    if spec.top_k > spec.drugs.len() {
        return Err(Error::Contract(format!(
            "top-k {} exceeds the {} candidates",
            spec.top_k,
            spec.drugs.len()
        )));
    }
    check_distinct("drug", &spec.drugs)?;
    check_distinct("validation drug", &spec.validation)?;
    let n_genes = spec.genes.len();
    let n_drugs = spec.drugs.len();

    let per_trial: Vec<f64> = exec.map(trials, |t| {
        let mut rng = Rng::derive(seed, streams::CONTROL + t as u64);
        let lists: Vec<Vec<usize>> = (0..n_genes)
            .map(|_| {
                let scores: Vec<f64> = (0..n_drugs).map(|_| rng.next_f64()).collect();
                top_k_with_ids(&scores, &spec.drugs, spec.top_k)
                    .into_iter()
                    .map(|pos| spec.drugs[pos])
                    .collect()
            })
            .collect();
        let hits = count_hits(&lists, &spec.validation);
        hits.iter().map(|&(_, h)| h as f64).sum::<f64>() / spec.validation.len() as f64
    });

    let mean = per_trial.iter().sum::<f64>() / trials as f64;
    let se = if trials > 1 {
        let var = per_trial.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (trials as f64 - 1.0);
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(ControlOutcome {
        mean_hits: mean,
        se,
        trials,
        baseline: analytic_baseline(n_genes, spec.top_k, n_drugs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, Param, TypeFeatures};
    use crate::tensor::Tensor;

    /// Brute-force reference: full sort of every candidate, then a
    /// membership scan. Must agree with the partial-selection route
    /// exactly.
    fn top_k_oracle(scores: &[f64], ids: &[usize], k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(ids[a].cmp(&ids[b])));
        order.truncate(k);
        order
    }

    #[test]
    fn selection_matches_full_sort_oracle_with_ties() {
        let mut rng = Rng::new(90);
        for _ in 0..200 {
            let n = 1 + rng.below(60) as usize;
            let k = rng.below(n as u64 + 1) as usize;
            // Coarse grid forces ties; ids are a shuffled permutation so
            // tie-breaking by id differs from tie-breaking by position.
            let scores: Vec<f64> = (0..n).map(|_| rng.below(6) as f64).collect();
            let mut ids: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut ids);
            assert_eq!(
                top_k_with_ids(&scores, &ids, k),
                top_k_oracle(&scores, &ids, k)
            );
        }
    }

    #[test]
    fn hit_counting_matches_the_worked_example() {
        // 2 genes, 5 drugs, k=2; drug 3 appears in both top-2 lists.
        let lists = vec![vec![3, 0], vec![1, 3]];
        let hits = count_hits(&lists, &[3, 0, 4]);
        assert_eq!(hits, vec![(3, 2), (0, 1), (4, 0)]);
    }

    #[test]
    fn hit_counting_matches_brute_force_on_random_matrices() {
        let mut rng = Rng::new(91);
        for _ in 0..20 {
            let genes = 1 + rng.below(20) as usize;
            let drugs = 2 + rng.below(80) as usize;
            let k = 1 + rng.below(drugs as u64) as usize;
            let ids: Vec<usize> = (0..drugs).collect();
            let mut lists = Vec::new();
            let mut oracle_lists = Vec::new();
            for _ in 0..genes {
                let scores: Vec<f64> = (0..drugs).map(|_| rng.below(10) as f64 * 0.5).collect();
                lists.push(top_k_with_ids(&scores, &ids, k));
                oracle_lists.push(top_k_oracle(&scores, &ids, k));
            }
            let validation: Vec<usize> = rng.sample_distinct(drugs, (drugs / 4).max(1));
            assert_eq!(count_hits(&lists, &validation), count_hits(&oracle_lists, &validation));
        }
    }

    #[test]
    fn per_gene_lists_are_invariant_under_increasing_transforms() {
        let mut rng = Rng::new(92);
        let ids: Vec<usize> = (0..50).collect();
        for _ in 0..50 {
            let scores: Vec<f64> = (0..50).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let base = top_k_with_ids(&scores, &ids, 10);
            // Exact strictly increasing transforms: powers of two scale
            // and the order-preserving identity-plus-double.
            for factor in [0.5, 2.0, 8.0] {
                let mapped: Vec<f64> = scores.iter().map(|&s| s * factor).collect();
                assert_eq!(top_k_with_ids(&mapped, &ids, 10), base, "scale by {factor}");
            }
        }
    }

    /// A model whose scores are fully controlled: no message passing
    /// (L=0), given features, and an injected relation table.
    fn scripted_model(
        g: &HeteroGraph,
        feats: &FeatureStore,
        rel_rows: Vec<f64>,
        d: usize,
    ) -> Model {
        let cfg = ModelConfig {
            hidden: vec![],
            embed_dim: d,
            ..ModelConfig::default()
        };
        let params = vec![Param {
            name: "rel.table".to_string(),
            value: Tensor::from_vec(g.num_relations(), d, rel_rows).unwrap(),
        }];
        Model::from_params(g, feats, cfg, params).unwrap()
    }

    /// Drugs are heads with feature `[v, 0]`; genes are tails `[1, 0]`;
    /// relation `[1, 1]` → score(drug, gene) = v for every gene.
    fn drug_gene_setup(values: &[f64]) -> (HeteroGraph, FeatureStore, Model) {
        let n = values.len();
        let g = HeteroGraph::from_parts(
            vec![
                ("drug".to_string(), (0..n).map(|i| format!("d{i}")).collect()),
                ("gene".to_string(), vec!["g0".into(), "g1".into()]),
            ],
            vec![("inhibits".to_string(), 0, 1)],
            vec![vec![(0, 0), (1, 1)]],
        )
        .unwrap();
        let feats = FeatureStore {
            per_type: vec![
                TypeFeatures::Given(Tensor::from_fn(n, 2, |i, j| {
                    if j == 0 {
                        values[i]
                    } else {
                        0.0
                    }
                })),
                TypeFeatures::Given(Tensor::from_fn(2, 2, |_, j| if j == 0 { 1.0 } else { 0.0 })),
            ],
        };
        let model = scripted_model(&g, &feats, vec![1.0, 1.0], 2);
        (g, feats, model)
    }

    #[test]
    fn rank_drugs_orders_by_score_and_counts_hits() {
        // Scores per drug: d0=0.9, d1=0.1, d2=0.7, d3=0.8, d4=0.3.
        let (g, feats, model) = drug_gene_setup(&[0.9, 0.1, 0.7, 0.8, 0.3]);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0, 1],
            drugs: vec![0, 1, 2, 3, 4],
            validation: vec![0, 1, 2],
            top_k: 2,
            flip: false,
        };
        let train = g.all_triples();
        let report = rank_drugs(&model, &g, &feats, &train, &spec, &Exec::sequential()).unwrap();
        assert_eq!(report.direction, "drug-as-head");
        assert_eq!(report.num_candidates, 5);
        assert!(report.warnings.is_empty());
        for ranking in &report.per_gene {
            let idx: Vec<usize> = ranking.top.iter().map(|&(d, _)| d).collect();
            assert_eq!(idx, vec![0, 3], "top-2 drugs by score");
            assert!(ranking.top[0].1 > ranking.top[1].1);
        }
        // Drug 0 hits both genes; 1 and 2 never appear.
        assert_eq!(report.hits, vec![(0, 2), (1, 0), (2, 0)]);
        assert!((report.baseline - 2.0 * 2.0 / 5.0).abs() < 1e-15);

        // Σ hits ≤ genes × k.
        let total: usize = report.hits.iter().map(|&(_, h)| h).sum();
        assert!(total <= spec.genes.len() * spec.top_k);
    }

    #[test]
    fn saturated_top_k_hits_every_gene() {
        let (g, feats, model) = drug_gene_setup(&[0.9, 0.1, 0.7]);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0, 1],
            drugs: vec![0, 1, 2],
            validation: vec![1, 2],
            top_k: 3,
            flip: false,
        };
        let report =
            rank_drugs(&model, &g, &feats, &g.all_triples(), &spec, &Exec::sequential()).unwrap();
        assert_eq!(report.hits, vec![(1, 2), (2, 2)], "k = candidates → everything hits");
    }

    #[test]
    fn ties_break_by_ascending_drug_id() {
        let (g, feats, model) = drug_gene_setup(&[0.5, 0.5, 0.5, 0.9]);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0],
            drugs: vec![2, 0, 3, 1], // deliberately unsorted candidates
            validation: vec![0],
            top_k: 3,
            flip: false,
        };
        let report =
            rank_drugs(&model, &g, &feats, &g.all_triples(), &spec, &Exec::sequential()).unwrap();
        let idx: Vec<usize> = report.per_gene[0].top.iter().map(|&(d, _)| d).collect();
        assert_eq!(idx, vec![3, 0, 1], "0.9 first, then the 0.5 ties by id");
    }

    #[test]
    fn flipped_direction_scores_gene_as_head() {
        // Flip: genes are heads (type drug in schema terms). Rebuild a
        // graph whose relation runs gene → drug so flipping makes drugs
        // the tail candidates.
        let g = HeteroGraph::from_parts(
            vec![
                ("gene".to_string(), vec!["g0".into()]),
                ("drug".to_string(), vec!["d0".into(), "d1".into()]),
            ],
            vec![("targeted_by".to_string(), 0, 1)],
            vec![vec![(0, 0)]],
        )
        .unwrap();
        let feats = FeatureStore {
            per_type: vec![
                TypeFeatures::Given(Tensor::from_vec(1, 2, vec![1.0, 0.0]).unwrap()),
                TypeFeatures::Given(Tensor::from_vec(2, 2, vec![0.3, 0.0, 0.8, 0.0]).unwrap()),
            ],
        };
        let model = scripted_model(&g, &feats, vec![1.0, 1.0], 2);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0],
            drugs: vec![0, 1],
            validation: vec![1],
            top_k: 1,
            flip: true,
        };
        let report =
            rank_drugs(&model, &g, &feats, &g.all_triples(), &spec, &Exec::sequential()).unwrap();
        assert_eq!(report.direction, "gene-as-head");
        assert_eq!(report.per_gene[0].top[0].0, 1, "d1 scores 0.8 > 0.3");
        assert_eq!(report.hits, vec![(1, 1)]);
    }

    #[test]
    fn unknown_ids_are_fatal_and_all_listed() {
        let (g, feats, model) = drug_gene_setup(&[0.9, 0.1]);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0, 7],
            drugs: vec![0, 1, 9],
            validation: vec![0],
            top_k: 1,
            flip: false,
        };
        let err = rank_drugs(&model, &g, &feats, &g.all_triples(), &spec, &Exec::sequential())
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('7'), "should list the bad gene: {msg}");
        assert!(msg.contains('9'), "should list the bad drug: {msg}");
    }

    #[test]
    fn validation_outside_candidates_warns_but_proceeds() {
        let (g, feats, model) = drug_gene_setup(&[0.9, 0.1, 0.7]);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0],
            drugs: vec![0, 1], // drug 2 exists but is not a candidate
            validation: vec![0, 2],
            top_k: 1,
            flip: false,
        };
        let report =
            rank_drugs(&model, &g, &feats, &g.all_triples(), &spec, &Exec::sequential()).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("d2"));
        assert_eq!(report.hits, vec![(0, 1), (2, 0)], "the outsider stays with 0 hits");
    }

    #[test]
    fn oversized_top_k_is_rejected() {
        let (g, feats, model) = drug_gene_setup(&[0.9, 0.1]);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0],
            drugs: vec![0, 1],
            validation: vec![0],
            top_k: 3,
            flip: false,
        };
        assert!(
            rank_drugs(&model, &g, &feats, &g.all_triples(), &spec, &Exec::sequential()).is_err()
        );
    }

    fn control_spec(genes: usize, drugs: usize, validation: usize, top_k: usize) -> RepurposeSpec {
        RepurposeSpec {
            relation: 0,
            genes: (0..genes).collect(),
            drugs: (0..drugs).collect(),
            validation: (0..validation).collect(),
            top_k,
            flip: false,
        }
    }

    #[test]
    fn control_trivial_cases() {
        // k=0 → nothing can hit.
        let zero = random_control(&control_spec(5, 10, 3, 0), 1, 20, &Exec::sequential()).unwrap();
        assert_eq!(zero.mean_hits, 0.0);
        assert_eq!(zero.se, 0.0);

        // 1 gene, 1 candidate, k=1 → the single drug always hits.
        let forced = random_control(&control_spec(1, 1, 1, 1), 1, 25, &Exec::sequential()).unwrap();
        assert_eq!(forced.mean_hits, 1.0);
        assert_eq!(forced.se, 0.0);
    }

    #[test]
    fn control_mean_approaches_the_analytic_baseline() {
        // G=30, C=40, k=10 → baseline 7.5 hits per drug.
        let spec = control_spec(30, 40, 5, 10);
        let out = random_control(&spec, 7, 300, &Exec::sequential()).unwrap();
        assert!((out.baseline - 7.5).abs() < 1e-12);
        assert!(out.se > 0.0);
        assert!(
            (out.mean_hits - out.baseline).abs() < 4.0 * out.se,
            "mean {} vs baseline {} (se {})",
            out.mean_hits,
            out.baseline,
            out.se
        );
    }

    #[test]
    fn control_is_deterministic_and_seed_sensitive() {
        let spec = control_spec(10, 20, 4, 5);
        let a = random_control(&spec, 7, 50, &Exec::sequential()).unwrap();
        let b = random_control(&spec, 7, 50, &Exec::sequential()).unwrap();
        assert_eq!(a, b);
        let c = random_control(&spec, 8, 50, &Exec::sequential()).unwrap();
        assert_ne!(a.mean_hits, c.mean_hits);
        assert!(random_control(&spec, 7, 0, &Exec::sequential()).is_err());
    }

    #[test]
    fn parallel_and_sequential_reports_are_identical() {
        let (g, feats, model) = drug_gene_setup(&[0.9, 0.1, 0.7, 0.8, 0.3, 0.55, 0.2]);
        let spec = RepurposeSpec {
            relation: 0,
            genes: vec![0, 1],
            drugs: (0..7).collect(),
            validation: vec![0, 3, 5],
            top_k: 3,
            flip: false,
        };
        let train = g.all_triples();
        let seq = rank_drugs(&model, &g, &feats, &train, &spec, &Exec::sequential()).unwrap();
        let par = rank_drugs(&model, &g, &feats, &train, &spec, &Exec::new(4)).unwrap();
        assert_eq!(seq, par);

        let cspec = control_spec(12, 30, 6, 8);
        let cs = random_control(&cspec, 7, 40, &Exec::sequential()).unwrap();
        let cp = random_control(&cspec, 7, 40, &Exec::new(4)).unwrap();
        assert_eq!(cs, cp);
        assert_eq!(cs.mean_hits.to_bits(), cp.mean_hits.to_bits());
    }
}
