//! `irgcn` — one binary tying the library's modules into reproducible
//! runs: dataset splitting, training, ranking evaluation, drug
//! repurposing, synthetic-data generation, the label-refinement
//! transform, and gradient self-checks.
//!
//! Every subcommand is deterministic: the input files, the
//! configuration, and the seed fully determine every output byte.
//! Exit codes: 0 on success, 1 for data or runtime errors, 2 for usage
//! errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irgcn::checkpoint::Checkpoint;
use irgcn::config::RunConfig;
use irgcn::datasets::{
    kshot_split, load_labels, percent_split, synth_generate, transform_label_relations,
    FewShotSplit, SynthSpec,
};
use irgcn::eval::evaluate;
use irgcn::exec::Exec;
use irgcn::graph::{HeteroGraph, Triple};
use irgcn::model::{FeatureStore, Model};
use irgcn::repurpose::{random_control, rank_drugs, RepurposeSpec};
use irgcn::training::fit;
use irgcn::{Error, Result, CHECKPOINT_FORMAT_VERSION};

fn version_string() -> &'static str {
    Box::leak(
        format!(
            "{} (checkpoint format {})",
            env!("CARGO_PKG_VERSION"),
            CHECKPOINT_FORMAT_VERSION
        )
        .into_boxed_str(),
    )
}

#[derive(Parser)]
#[command(
    name = "irgcn",
    about = "Link prediction on heterogeneous graphs",
    version = version_string()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the model-driven subcommands.
#[derive(Args)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. `--set seed=7 --set epochs=50`; applied
    /// after the config file, in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads for parallel stages (overrides the config key).
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    /// Layer: `base` → config file → `--set` overrides → `--threads`.
    fn layered(&self, mut base: RunConfig) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            base.apply_text(&fs::read_to_string(path)?)?;
        }
        base.apply_overrides(&self.set)?;
        if let Some(t) = self.threads {
            base.threads = t;
        }
        Ok(base)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Hold out edges of one relation as a test set.
    Split {
        /// Graph edges (`type::name<TAB>relation<TAB>type::name` lines).
        #[arg(long)]
        graph: PathBuf,
        /// Node map pinning the node universe (`type<TAB>name<TAB>id`).
        #[arg(long)]
        nodemap: PathBuf,
        /// Relation to split, by name.
        #[arg(long)]
        relation: String,
        /// `kshot` keeps k edges for training; `percent` keeps a
        /// fraction.
        #[arg(long)]
        mode: String,
        /// Edges kept for training (kshot mode).
        #[arg(long)]
        k: Option<usize>,
        /// Fraction kept for training (percent mode).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        /// Output directory for train.tsv, test.tsv, manifest.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a training edge file.
    Train {
        #[arg(long)]
        nodemap: PathBuf,
        /// Training edges; the only edges the optimizer ever sees.
        #[arg(long, value_name = "FILE")]
        train: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for checkpoint.bin and loss.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank held-out edges with a trained model.
    Evaluate {
        #[arg(long)]
        nodemap: PathBuf,
        #[arg(long, value_name = "FILE")]
        train: PathBuf,
        #[arg(long, value_name = "FILE")]
        test: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for metrics.csv, ranks.tsv, metadata.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank candidate drugs per target gene and count validation hits.
    Repurpose {
        #[arg(long)]
        nodemap: PathBuf,
        #[arg(long, value_name = "FILE")]
        train: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Relation to score, by name.
        #[arg(long)]
        relation: String,
        /// Target genes, one name per line.
        #[arg(long)]
        genes: PathBuf,
        /// Candidate drugs, one name per line.
        #[arg(long)]
        drugs: PathBuf,
        /// Validation drugs, one name per line.
        #[arg(long)]
        validation: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for hits.tsv, per_gene.tsv, metadata.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic labeled multi-relational graph.
    Synth {
        #[arg(long, default_value_t = 3)]
        types: usize,
        #[arg(long, default_value_t = 100)]
        nodes: usize,
        #[arg(long = "feature-dim", default_value_t = 8)]
        feature_dim: usize,
        #[arg(long, default_value_t = 8)]
        relations: usize,
        /// Edges per common relation.
        #[arg(long, default_value_t = 300)]
        edges: usize,
        /// Edges of the planted rare relation.
        #[arg(long = "rare-edges", default_value_t = 60)]
        rare_edges: usize,
        #[arg(long, default_value_t = 0.25)]
        noise: f64,
        #[arg(long, default_value_t = 3)]
        labels: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        /// Output directory for graph.tsv, nodemap.tsv, labels.tsv,
        /// features/, manifest.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Specialize relations by endpoint labels.
    Transform {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        nodemap: PathBuf,
        /// Label file (`type<TAB>name<TAB>label` lines).
        #[arg(long)]
        labels: PathBuf,
        /// Output directory for graph.tsv, nodemap.tsv, manifest.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference check of every gradient in the build.
    Gradcheck {
        #[arg(long, default_value_t = 17)]
        seed: u64,
        /// Random instances per op.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Maximum allowed relative error.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)?;
    Ok(())
}

/// Serialize triples and sort the lines, so the same edge set always
/// produces the same bytes no matter how it was ordered in memory.
fn sorted_triples_text(g: &HeteroGraph, triples: &[Triple]) -> String {
    let text = g.triples_subset_text(triples);
    let mut lines: Vec<&str> = text.lines().collect();
    lines.sort_unstable();
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

fn triple_display(g: &HeteroGraph, t: &Triple) -> String {
    g.triples_subset_text(std::slice::from_ref(t))
        .trim_end()
        .to_string()
}

/// Features referenced by the config: a directory of per-type CSVs, or
/// learned embeddings for every type when the key is empty.
fn features_for(g: &HeteroGraph, cfg: &RunConfig) -> Result<FeatureStore> {
    if cfg.features_dir.is_empty() {
        Ok(FeatureStore::all_learned(g.num_types()))
    } else {
        irgcn::datasets::load_features(g, Path::new(&cfg.features_dir))
    }
}

/// One name per line; blank lines and `#` comments are skipped.
fn read_name_list(path: &Path) -> Result<Vec<String>> {
    Ok(read(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Resolve node names of one type to ids, reporting every unknown name
/// at once.
fn resolve_names(g: &HeteroGraph, type_id: usize, names: &[String], what: &str) -> Result<Vec<usize>> {
    let mut ids = Vec::with_capacity(names.len());
    let mut unknown = Vec::new();
    for n in names {
        match g.node_id(type_id, n) {
            Some(i) => ids.push(i),
            None => unknown.push(n.clone()),
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Resolution(format!(
            "unknown {what} names for type '{}': {}",
            g.type_name(type_id),
            unknown.join(", ")
        )));
    }
    Ok(ids)
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("usage error: {msg}");
    ExitCode::from(2)
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Split { graph, nodemap, relation, mode, k, p, seed, out } => {
            let g = HeteroGraph::parse_with_node_map(&read(&nodemap)?, &read(&graph)?)?;
            let rel = g
                .relation_id(&relation)
                .ok_or_else(|| Error::Resolution(format!("unknown relation '{relation}'")))?;
            let (split, manifest_param): (FewShotSplit, String) = match mode.as_str() {
                "kshot" => {
                    let Some(k) = k else {
                        return Ok(usage_error("--mode kshot requires --k"));
                    };
                    (kshot_split(&g, rel, k, seed)?, format!("k = {k}"))
                }
                "percent" => {
                    let Some(p) = p else {
                        return Ok(usage_error("--mode percent requires --p"));
                    };
                    (percent_split(&g, rel, p, seed)?, format!("p = {p}"))
                }
                other => {
                    return Ok(usage_error(&format!(
                        "unknown split mode '{other}' (expected kshot or percent)"
                    )));
                }
            };
            for w in &split.warnings {
                eprintln!("warning: {w}");
            }
            let train = split.train_edges();
            write_out(&out, "train.tsv", &sorted_triples_text(&g, &train))?;
            write_out(&out, "test.tsv", &sorted_triples_text(&g, &split.test))?;
            let mut manifest = String::new();
            manifest.push_str(&format!("mode = {mode}\n"));
            manifest.push_str(&format!("relation = {relation}\n"));
            manifest.push_str(&format!("{manifest_param}\n"));
            manifest.push_str(&format!("seed = {seed}\n"));
            manifest.push_str(&format!("train_edges = {}\n", train.len()));
            manifest.push_str(&format!("test_edges = {}\n", split.test.len()));
            for w in &split.warnings {
                manifest.push_str(&format!("warning = {w}\n"));
            }
            write_out(&out, "manifest.txt", &manifest)?;
            println!(
                "split '{relation}': {} train edges, {} test edges",
                train.len(),
                split.test.len()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Train { nodemap, train, config, out } => {
            let cfg = config.layered(RunConfig::default())?;
            let train_text = read(&train)?;
            let g = HeteroGraph::parse_with_node_map(&read(&nodemap)?, &train_text)?;
            let train_triples = g.resolve_triples(&train_text)?;
            let feats = features_for(&g, &cfg)?;
            let result = fit(&g, &feats, &train_triples, &cfg.train_config())?;
            let mut loss_csv = String::from("epoch,loss\n");
            for (i, l) in result.trace.iter().enumerate() {
                loss_csv.push_str(&format!("{},{}\n", i + 1, l));
            }
            write_out(&out, "loss.csv", &loss_csv)?;
            let ck = Checkpoint {
                config_text: cfg.to_text(),
                seed: cfg.seed,
                epochs: result.trace.len() as u32,
                params: result.model.params().to_vec(),
            };
            fs::create_dir_all(&out)?;
            ck.save(out.join("checkpoint.bin"))?;
            println!(
                "trained {} epochs; final loss {}",
                result.trace.len(),
                result.trace.last().unwrap()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Evaluate { nodemap, train, test, checkpoint, config, out } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let cfg = config.layered(RunConfig::from_text(&ck.config_text)?)?;
            let train_text = read(&train)?;
            let test_text = read(&test)?;
            // One universe holding train and test edges; train lines
            // come first so relation ids match the training run.
            let combined = format!("{train_text}{test_text}");
            let g = HeteroGraph::parse_with_node_map(&read(&nodemap)?, &combined)?;
            let train_triples = g.resolve_triples(&train_text)?;
            let test_triples = g.resolve_triples(&test_text)?;
            let train_rels: std::collections::HashSet<usize> =
                train_triples.iter().map(|t| t.relation).collect();
            for t in &test_triples {
                if !train_rels.contains(&t.relation) {
                    return Err(Error::Contract(format!(
                        "relation '{}' appears in the test set but has no training edges; \
                         the checkpoint carries no parameters for it",
                        g.relation_name(t.relation)
                    )));
                }
            }
            let feats = features_for(&g, &cfg)?;
            let model = Model::from_params(&g, &feats, cfg.model_config(), ck.params.clone())?;
            let exec = Exec::new(cfg.threads);
            let report = evaluate(
                &model,
                &g,
                &feats,
                &train_triples,
                &test_triples,
                &cfg.eval_config(),
                &exec,
            )?;
            let mut metrics = String::from("metric,value\n");
            metrics.push_str(&format!("mrr,{}\n", report.mrr));
            metrics.push_str(&format!("mr,{}\n", report.mr));
            for (k, v) in report.hits_at {
                metrics.push_str(&format!("hits{k},{v}\n"));
            }
            write_out(&out, "metrics.csv", &metrics)?;
            let mut ranks = String::new();
            for q in &report.queries {
                ranks.push_str(&format!(
                    "{}\t{}\t{}\n",
                    triple_display(&g, &q.triple),
                    q.rank,
                    q.candidates
                ));
            }
            write_out(&out, "ranks.tsv", &ranks)?;
            let meta = format!(
                "mode = {}\nscorer = {}\npolicy = {}\nfilter = {}\nseed = {}\nqueries = {}\n",
                cfg.mode.as_str(),
                cfg.scorer.as_str(),
                report.metadata.policy,
                report.metadata.filter,
                report.metadata.seed,
                report.metadata.num_queries
            );
            write_out(&out, "metadata.txt", &meta)?;
            println!(
                "mrr {:.4}  mr {:.2}  hits@1 {:.4}  hits@3 {:.4}  hits@10 {:.4}  ({} queries)",
                report.mrr,
                report.mr,
                report.hits_at[0].1,
                report.hits_at[1].1,
                report.hits_at[2].1,
                report.metadata.num_queries
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Repurpose {
            nodemap,
            train,
            checkpoint,
            relation,
            genes,
            drugs,
            validation,
            config,
            out,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let cfg = config.layered(RunConfig::from_text(&ck.config_text)?)?;
            let train_text = read(&train)?;
            let g = HeteroGraph::parse_with_node_map(&read(&nodemap)?, &train_text)?;
            let train_triples = g.resolve_triples(&train_text)?;
            let rel = g
                .relation_id(&relation)
                .ok_or_else(|| Error::Resolution(format!("unknown relation '{relation}'")))?;
            let (ht, tt) = g.relation_schema(rel);
            let flip = cfg.direction.flip();
            let (drug_type, gene_type) = if flip { (tt, ht) } else { (ht, tt) };
            let spec = RepurposeSpec {
                relation: rel,
                genes: resolve_names(&g, gene_type, &read_name_list(&genes)?, "gene")?,
                drugs: resolve_names(&g, drug_type, &read_name_list(&drugs)?, "drug")?,
                validation: resolve_names(&g, drug_type, &read_name_list(&validation)?, "validation drug")?,
                top_k: cfg.topk,
                flip,
            };
            let feats = features_for(&g, &cfg)?;
            let model = Model::from_params(&g, &feats, cfg.model_config(), ck.params.clone())?;
            let exec = Exec::new(cfg.threads);
            let report = rank_drugs(&model, &g, &feats, &train_triples, &spec, &exec)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let mut hits = String::from("drug\thits\n");
            for &(d, h) in &report.hits {
                hits.push_str(&format!("{}\t{}\n", g.node_name(drug_type, d), h));
            }
            write_out(&out, "hits.tsv", &hits)?;
            let mut per_gene = String::from("gene\trank\tdrug\tscore\n");
            for r in &report.per_gene {
                for (i, &(d, s)) in r.top.iter().enumerate() {
                    per_gene.push_str(&format!(
                        "{}\t{}\t{}\t{}\n",
                        g.node_name(gene_type, r.gene),
                        i + 1,
                        g.node_name(drug_type, d),
                        s
                    ));
                }
            }
            write_out(&out, "per_gene.tsv", &per_gene)?;
            let mut meta = String::new();
            meta.push_str(&format!("relation = {relation}\n"));
            meta.push_str(&format!("direction = {}\n", report.direction));
            meta.push_str(&format!("top_k = {}\n", report.top_k));
            meta.push_str(&format!("genes = {}\n", report.per_gene.len()));
            meta.push_str(&format!("candidates = {}\n", report.num_candidates));
            meta.push_str(&format!("baseline_hits_per_drug = {}\n", report.baseline));
            for w in &report.warnings {
                meta.push_str(&format!("warning = {w}\n"));
            }
            if cfg.control_trials > 0 {
                let control = random_control(&spec, cfg.seed, cfg.control_trials, &exec)?;
                meta.push_str(&format!("control_trials = {}\n", control.trials));
                meta.push_str(&format!("control_mean_hits = {}\n", control.mean_hits));
                meta.push_str(&format!("control_se = {}\n", control.se));
            }
            write_out(&out, "metadata.txt", &meta)?;
            println!(
                "ranked {} genes over {} candidates (top {}); baseline {:.3} hits per drug",
                report.per_gene.len(),
                report.num_candidates,
                report.top_k,
                report.baseline
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Synth {
            types,
            nodes,
            feature_dim,
            relations,
            edges,
            rare_edges,
            noise,
            labels,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                num_types: types,
                nodes_per_type: nodes,
                feature_dim,
                num_relations: relations,
                edges_per_relation: edges,
                rare_edges,
                noise,
                num_labels: labels,
                seed,
            };
            let data = synth_generate(&spec)?;
            let g = &data.graph;
            write_out(&out, "graph.tsv", &g.triples_text())?;
            write_out(&out, "nodemap.tsv", &g.node_map_text())?;
            write_out(&out, "labels.tsv", &irgcn::datasets::labels_text(g, &data.labels))?;
            let fdir = out.join("features");
            fs::create_dir_all(&fdir)?;
            for t in 0..g.num_types() {
                fs::write(
                    fdir.join(format!("{}.csv", g.type_name(t))),
                    irgcn::datasets::features_csv_text(g, t, &data.features[t]),
                )?;
            }
            let manifest = format!(
                "types = {types}\nnodes_per_type = {nodes}\nfeature_dim = {feature_dim}\n\
                 relations = {relations}\nedges_per_relation = {edges}\nrare_edges = {rare_edges}\n\
                 noise = {noise}\nlabels = {labels}\nseed = {seed}\ntotal_edges = {}\n",
                g.edge_count()
            );
            write_out(&out, "manifest.txt", &manifest)?;
            println!(
                "generated {} types x {} nodes, {} relations, {} edges",
                types,
                nodes,
                relations,
                g.edge_count()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Transform { graph, nodemap, labels, out } => {
            let g = HeteroGraph::parse_with_node_map(&read(&nodemap)?, &read(&graph)?)?;
            let label_map = load_labels(&g, &labels)?;
            let refined = transform_label_relations(&g, &label_map)?;
            write_out(&out, "graph.tsv", &refined.triples_text())?;
            write_out(&out, "nodemap.tsv", &refined.node_map_text())?;
            let manifest = format!(
                "relations_before = {}\nrelations_after = {}\nedges = {}\n",
                g.num_relations(),
                refined.num_relations(),
                refined.edge_count()
            );
            write_out(&out, "manifest.txt", &manifest)?;
            println!(
                "{} relations became {}; {} edges preserved",
                g.num_relations(),
                refined.num_relations(),
                refined.edge_count()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Gradcheck { seed, trials, eps, tol } => {
            let report = irgcn::verify::run(seed, trials, eps, tol)?;
            for line in report.lines() {
                println!("{line}");
            }
            if report.passed() {
                println!("all gradients verified (eps {eps}, tol {tol})");
                Ok(ExitCode::SUCCESS)
            } else {
                Err(Error::Contract(format!(
                    "gradient check failed (eps {eps}, tol {tol})"
                )))
            }
        }
    }
}
