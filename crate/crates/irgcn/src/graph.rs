//! Typed, multi-relational graphs and their on-disk text formats.
//!
//! A [`HeteroGraph`] holds disjoint node sets partitioned by *node type*
//! (each node addressed by a dense `usize` id within its type) and a set
//! of named *relations*, each with a fixed head type, a fixed tail type,
//! and a duplicate-free directed edge set.
//!
//! # Triple format
//!
//! One edge per line, tab-separated:
//!
//! ```text
//! head_type::head_name<TAB>relation<TAB>tail_type::tail_name
//! ```
//!
//! Lines starting with `#` and blank lines are skipped. Names are UTF-8;
//! the first `::` separates type from name. When loading a bare triple
//! file, types, relations, and node ids are assigned in order of first
//! appearance.
//!
//! # Node maps
//!
//! A bare triple file cannot represent isolated nodes, and its id
//! assignment depends on edge order. A *node map* sidecar
//! (`type<TAB>name<TAB>id` per line) pins the full node universe and the
//! exact id assignment, so that two triple files over the same universe
//! (for example a training split that omits held-out edges) resolve to
//! identical node ids. Load one with [`HeteroGraph::load_with_node_map`].

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::{Error, Result};

/// One directed, typed edge: `head --relation--> tail`. Endpoint node
/// types are implied by the relation's schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

/// Edge-traversal direction for neighbor queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Follow edges head → tail.
    Out,
    /// Follow edges tail → head.
    In,
}

#[derive(Debug, Clone)]
pub(crate) struct NodeType {
    pub(crate) name: String,
    pub(crate) node_names: Vec<String>,
    pub(crate) index: HashMap<String, usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Relation {
    pub(crate) name: String,
    pub(crate) head_type: usize,
    pub(crate) tail_type: usize,
    pub(crate) edges: Vec<(usize, usize)>,
    pub(crate) edge_set: HashSet<(usize, usize)>,
}

/// A heterogeneous multi-relational graph.
#[derive(Debug, Clone)]
pub struct HeteroGraph {
    pub(crate) types: Vec<NodeType>,
    pub(crate) type_index: HashMap<String, usize>,
    pub(crate) relations: Vec<Relation>,
    pub(crate) relation_index: HashMap<String, usize>,
}

fn split_endpoint(field: &str, line: usize) -> Result<(&str, &str)> {
    match field.split_once("::") {
        Some((t, n)) if !t.is_empty() && !n.is_empty() => Ok((t, n)),
        _ => Err(Error::Parse {
            line,
            msg: format!("endpoint '{field}' is not of the form type::name"),
        }),
    }
}

impl HeteroGraph {
    fn empty() -> Self {
        HeteroGraph {
            types: Vec::new(),
            type_index: HashMap::new(),
            relations: Vec::new(),
            relation_index: HashMap::new(),
        }
    }

    fn intern_type(&mut self, name: &str) -> usize {
        if let Some(&t) = self.type_index.get(name) {
            return t;
        }
        let t = self.types.len();
        self.types.push(NodeType {
            name: name.to_string(),
            node_names: Vec::new(),
            index: HashMap::new(),
        });
        self.type_index.insert(name.to_string(), t);
        t
    }

    fn intern_node(&mut self, type_id: usize, name: &str) -> usize {
        let ty = &mut self.types[type_id];
        if let Some(&i) = ty.index.get(name) {
            return i;
        }
        let i = ty.node_names.len();
        ty.node_names.push(name.to_string());
        ty.index.insert(name.to_string(), i);
        i
    }

    /// Parse triples from text, creating types, relations, and node ids
    /// in order of first appearance.
    pub fn parse_triples(text: &str) -> Result<Self> {
        let mut g = HeteroGraph::empty();
        g.ingest_triples(text, false)?;
        Ok(g)
    }

    /// Load triples from a file; see [`HeteroGraph::parse_triples`].
    pub fn load_triples(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        HeteroGraph::parse_triples(&text)
    }

    /// Parse a node-map sidecar plus a triple file. The node map fixes
    /// the complete node universe and id assignment; triple endpoints
    /// must resolve against it (unknown names are resolution errors, not
    /// new nodes). Relations are still created in order of first
    /// appearance in the triple text.
    pub fn parse_with_node_map(map_text: &str, triples_text: &str) -> Result<Self> {
        let mut g = HeteroGraph::empty();
        // First pass: collect (type, name, id) records.
        let mut records: Vec<(usize, String, usize, usize)> = Vec::new(); // (type, name, id, line)
        for (lineno, raw) in map_text.lines().enumerate() {
            let line = lineno + 1;
            let s = raw.trim_end_matches('\r');
            if s.trim().is_empty() || s.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = s.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 3 tab-separated fields in node map, got {}", fields.len()),
                });
            }
            if fields[0].is_empty() || fields[1].is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: "empty type or node name in node map".into(),
                });
            }
            let id: usize = fields[2].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("node id '{}' is not a non-negative integer", fields[2]),
            })?;
            let t = g.intern_type(fields[0]);
            records.push((t, fields[1].to_string(), id, line));
        }
        // Second pass: place nodes at their declared ids.
        let mut per_type: Vec<Vec<Option<String>>> = vec![Vec::new(); g.types.len()];
        for (t, name, id, line) in records {
            let slots = &mut per_type[t];
            if slots.len() <= id {
                slots.resize(id + 1, None);
            }
            if slots[id].is_some() {
                return Err(Error::Schema(format!(
                    "node map line {line}: duplicate id {id} for type '{}'",
                    g.types[t].name
                )));
            }
            slots[id] = Some(name);
        }
        for (t, slots) in per_type.into_iter().enumerate() {
            if slots.is_empty() {
                return Err(Error::Schema(format!(
                    "node map declares type '{}' with no nodes",
                    g.types[t].name
                )));
            }
            let mut names = Vec::with_capacity(slots.len());
            for (id, slot) in slots.into_iter().enumerate() {
                match slot {
                    Some(name) => names.push(name),
                    None => {
                        return Err(Error::Schema(format!(
                            "node map for type '{}' is missing id {id}: ids must cover 0..count",
                            g.types[t].name
                        )))
                    }
                }
            }
            let mut index = HashMap::with_capacity(names.len());
            for (id, name) in names.iter().enumerate() {
                if index.insert(name.clone(), id).is_some() {
                    return Err(Error::Schema(format!(
                        "node map for type '{}' repeats node name '{}'",
                        g.types[t].name, name
                    )));
                }
            }
            g.types[t].node_names = names;
            g.types[t].index = index;
        }
        g.ingest_triples(triples_text, true)?;
        Ok(g)
    }

    /// Load a node map plus triple file; see
    /// [`HeteroGraph::parse_with_node_map`].
    pub fn load_with_node_map(
        map_path: impl AsRef<Path>,
        triples_path: impl AsRef<Path>,
    ) -> Result<Self> {
        let map_text = std::fs::read_to_string(map_path)?;
        let triples_text = std::fs::read_to_string(triples_path)?;
        HeteroGraph::parse_with_node_map(&map_text, &triples_text)
    }

    /// Shared triple-ingestion: `fixed_universe` decides whether unknown
    /// nodes are interned (bare load) or rejected (node-map load).
    fn ingest_triples(&mut self, text: &str, fixed_universe: bool) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let s = raw.trim_end_matches('\r');
            if s.trim().is_empty() || s.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = s.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let (ht_name, h_name) = split_endpoint(fields[0], line)?;
            let rel_name = fields[1];
            if rel_name.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: "empty relation name".into(),
                });
            }
            let (tt_name, t_name) = split_endpoint(fields[2], line)?;

            let (ht, h, tt, t) = if fixed_universe {
                let ht = *self.type_index.get(ht_name).ok_or_else(|| {
                    Error::Resolution(format!(
                        "line {line}: node type '{ht_name}' is not in the node map"
                    ))
                })?;
                let tt = *self.type_index.get(tt_name).ok_or_else(|| {
                    Error::Resolution(format!(
                        "line {line}: node type '{tt_name}' is not in the node map"
                    ))
                })?;
                let h = *self.types[ht].index.get(h_name).ok_or_else(|| {
                    Error::Resolution(format!(
                        "line {line}: node '{ht_name}::{h_name}' is not in the node map"
                    ))
                })?;
                let t = *self.types[tt].index.get(t_name).ok_or_else(|| {
                    Error::Resolution(format!(
                        "line {line}: node '{tt_name}::{t_name}' is not in the node map"
                    ))
                })?;
                (ht, h, tt, t)
            } else {
                let ht = self.intern_type(ht_name);
                let tt = self.intern_type(tt_name);
                let h = self.intern_node(ht, h_name);
                let t = self.intern_node(tt, t_name);
                (ht, h, tt, t)
            };

            let r = match self.relation_index.get(rel_name) {
                Some(&r) => {
                    let rel = &self.relations[r];
                    if rel.head_type != ht || rel.tail_type != tt {
                        return Err(Error::Schema(format!(
                            "line {line}: relation '{rel_name}' connects '{}'→'{}' but this edge uses '{}'→'{}'",
                            self.types[rel.head_type].name,
                            self.types[rel.tail_type].name,
                            ht_name,
                            tt_name
                        )));
                    }
                    r
                }
                None => {
                    let r = self.relations.len();
                    self.relations.push(Relation {
                        name: rel_name.to_string(),
                        head_type: ht,
                        tail_type: tt,
                        edges: Vec::new(),
                        edge_set: HashSet::new(),
                    });
                    self.relation_index.insert(rel_name.to_string(), r);
                    r
                }
            };
            let rel = &mut self.relations[r];
            if !rel.edge_set.insert((h, t)) {
                return Err(Error::Schema(format!(
                    "line {line}: duplicate edge '{}'",
                    s
                )));
            }
            rel.edges.push((h, t));
        }
        Ok(())
    }

    /// Resolve triples in `text` against this graph's existing universe
    /// and relation set, without modifying the graph. Unknown types,
    /// nodes, or relations are resolution errors; endpoint types must
    /// match the relation schema; duplicates within `text` are schema
    /// errors.
    pub fn resolve_triples(&self, text: &str) -> Result<Vec<Triple>> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let s = raw.trim_end_matches('\r');
            if s.trim().is_empty() || s.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = s.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let (ht_name, h_name) = split_endpoint(fields[0], line)?;
            let (tt_name, t_name) = split_endpoint(fields[2], line)?;
            let r = self.relation_id(fields[1]).ok_or_else(|| {
                Error::Resolution(format!(
                    "line {line}: relation '{}' is not in the graph",
                    fields[1]
                ))
            })?;
            let schema = &self.relations[r];
            let ht = self.type_id(ht_name).ok_or_else(|| {
                Error::Resolution(format!("line {line}: unknown node type '{ht_name}'"))
            })?;
            let tt = self.type_id(tt_name).ok_or_else(|| {
                Error::Resolution(format!("line {line}: unknown node type '{tt_name}'"))
            })?;
            if ht != schema.head_type || tt != schema.tail_type {
                return Err(Error::Schema(format!(
                    "line {line}: relation '{}' connects '{}'→'{}' but this edge uses '{ht_name}'→'{tt_name}'",
                    schema.name,
                    self.types[schema.head_type].name,
                    self.types[schema.tail_type].name
                )));
            }
            let h = self.node_id(ht, h_name).ok_or_else(|| {
                Error::Resolution(format!(
                    "line {line}: node '{ht_name}::{h_name}' is not in the graph"
                ))
            })?;
            let t = self.node_id(tt, t_name).ok_or_else(|| {
                Error::Resolution(format!(
                    "line {line}: node '{tt_name}::{t_name}' is not in the graph"
                ))
            })?;
            let triple = Triple {
                head: h,
                relation: r,
                tail: t,
            };
            if !seen.insert(triple) {
                return Err(Error::Schema(format!("line {line}: duplicate edge '{s}'")));
            }
            out.push(triple);
        }
        Ok(out)
    }

    /// Build a graph directly from parts: named types with their node
    /// names, relation schemas `(name, head_type, tail_type)`, and one
    /// edge list per relation.
    pub fn from_parts(
        types: Vec<(String, Vec<String>)>,
        relations: Vec<(String, usize, usize)>,
        edges: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if relations.len() != edges.len() {
            return Err(Error::Contract(format!(
                "{} relations but {} edge lists",
                relations.len(),
                edges.len()
            )));
        }
        let mut g = HeteroGraph::empty();
        for (name, node_names) in types {
            if g.type_index.contains_key(&name) {
                return Err(Error::Schema(format!("duplicate node type '{name}'")));
            }
            if node_names.is_empty() {
                return Err(Error::Schema(format!("node type '{name}' has no nodes")));
            }
            let t = g.intern_type(&name);
            let mut index = HashMap::with_capacity(node_names.len());
            for (id, n) in node_names.iter().enumerate() {
                if index.insert(n.clone(), id).is_some() {
                    return Err(Error::Schema(format!(
                        "duplicate node name '{n}' in type '{name}'"
                    )));
                }
            }
            g.types[t].node_names = node_names;
            g.types[t].index = index;
        }
        for ((name, ht, tt), rel_edges) in relations.into_iter().zip(edges) {
            if g.relation_index.contains_key(&name) {
                return Err(Error::Schema(format!("duplicate relation '{name}'")));
            }
            if ht >= g.types.len() || tt >= g.types.len() {
                return Err(Error::Index(format!(
                    "relation '{name}' references type {} but only {} types exist",
                    ht.max(tt),
                    g.types.len()
                )));
            }
            let r = g.relations.len();
            g.relation_index.insert(name.clone(), r);
            let mut rel = Relation {
                name,
                head_type: ht,
                tail_type: tt,
                edges: Vec::new(),
                edge_set: HashSet::new(),
            };
            for (h, t) in rel_edges {
                if h >= g.types[ht].node_names.len() || t >= g.types[tt].node_names.len() {
                    return Err(Error::Index(format!(
                        "edge ({h}, {t}) of relation '{}' is out of range",
                        rel.name
                    )));
                }
                if !rel.edge_set.insert((h, t)) {
                    return Err(Error::Schema(format!(
                        "duplicate edge ({h}, {t}) in relation '{}'",
                        rel.name
                    )));
                }
                rel.edges.push((h, t));
            }
            g.relations.push(rel);
        }
        Ok(g)
    }

    /// Same universe and relation schemas, different edge content. Edges
    /// must be in range and duplicate-free.
    pub fn with_edges(&self, triples: &[Triple]) -> Result<Self> {
        let mut g = self.clone();
        for rel in &mut g.relations {
            rel.edges.clear();
            rel.edge_set.clear();
        }
        for tr in triples {
            if tr.relation >= g.relations.len() {
                return Err(Error::Index(format!(
                    "relation id {} out of range ({} relations)",
                    tr.relation,
                    g.relations.len()
                )));
            }
            let (ht, tt) = (g.relations[tr.relation].head_type, g.relations[tr.relation].tail_type);
            if tr.head >= g.types[ht].node_names.len() || tr.tail >= g.types[tt].node_names.len() {
                return Err(Error::Index(format!(
                    "edge ({}, {}) of relation '{}' is out of range",
                    tr.head, tr.tail, g.relations[tr.relation].name
                )));
            }
            let rel = &mut g.relations[tr.relation];
            if !rel.edge_set.insert((tr.head, tr.tail)) {
                return Err(Error::Schema(format!(
                    "duplicate edge ({}, {}) in relation '{}'",
                    tr.head, tr.tail, rel.name
                )));
            }
            rel.edges.push((tr.head, tr.tail));
        }
        Ok(g)
    }

    // ---- accessors -----------------------------------------------------

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn type_name(&self, t: usize) -> &str {
        &self.types[t].name
    }

    pub fn type_id(&self, name: &str) -> Option<usize> {
        self.type_index.get(name).copied()
    }

    /// Number of nodes of a type.
    pub fn type_count(&self, t: usize) -> usize {
        self.types[t].node_names.len()
    }

    pub fn node_name(&self, t: usize, i: usize) -> &str {
        &self.types[t].node_names[i]
    }

    pub fn node_id(&self, t: usize, name: &str) -> Option<usize> {
        self.types[t].index.get(name).copied()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn relation_name(&self, r: usize) -> &str {
        &self.relations[r].name
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_index.get(name).copied()
    }

    /// `(head_type, tail_type)` of a relation.
    pub fn relation_schema(&self, r: usize) -> (usize, usize) {
        (self.relations[r].head_type, self.relations[r].tail_type)
    }

    /// Edges of a relation in insertion order.
    pub fn edges(&self, r: usize) -> &[(usize, usize)] {
        &self.relations[r].edges
    }

    /// All edges as [`Triple`]s, relation-major, insertion order within
    /// each relation.
    pub fn all_triples(&self) -> Vec<Triple> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (r, rel) in self.relations.iter().enumerate() {
            for &(h, t) in &rel.edges {
                out.push(Triple {
                    head: h,
                    relation: r,
                    tail: t,
                });
            }
        }
        out
    }

    /// Total edge count over all relations.
    pub fn edge_count(&self) -> usize {
        self.relations.iter().map(|r| r.edges.len()).sum()
    }

    pub fn has_edge(&self, r: usize, head: usize, tail: usize) -> bool {
        self.relations[r].edge_set.contains(&(head, tail))
    }

    /// Neighbors of node `(node_type, node)` under `relation` in the
    /// given direction, in edge insertion order. A node whose type does
    /// not participate on the queried side has no neighbors. Out-of-range
    /// ids are index errors.
    pub fn neighbors(
        &self,
        node_type: usize,
        node: usize,
        relation: usize,
        dir: Direction,
    ) -> Result<Vec<usize>> {
        if node_type >= self.types.len() {
            return Err(Error::Index(format!(
                "node type {node_type} out of range ({} types)",
                self.types.len()
            )));
        }
        if node >= self.types[node_type].node_names.len() {
            return Err(Error::Index(format!(
                "node {node} out of range for type '{}' ({} nodes)",
                self.types[node_type].name,
                self.types[node_type].node_names.len()
            )));
        }
        if relation >= self.relations.len() {
            return Err(Error::Index(format!(
                "relation {relation} out of range ({} relations)",
                self.relations.len()
            )));
        }
        let rel = &self.relations[relation];
        let out = match dir {
            Direction::Out if rel.head_type == node_type => rel
                .edges
                .iter()
                .filter(|&&(h, _)| h == node)
                .map(|&(_, t)| t)
                .collect(),
            Direction::In if rel.tail_type == node_type => rel
                .edges
                .iter()
                .filter(|&&(_, t)| t == node)
                .map(|&(h, _)| h)
                .collect(),
            _ => Vec::new(),
        };
        Ok(out)
    }

    /// Structural self-check. Returns human-readable violations (empty
    /// for a healthy graph) instead of failing fast, so callers can
    /// report everything at once.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (t, ty) in self.types.iter().enumerate() {
            if ty.node_names.len() != ty.index.len() {
                v.push(format!(
                    "type '{}' has {} names but {} index entries",
                    ty.name,
                    ty.node_names.len(),
                    ty.index.len()
                ));
            }
            for (id, name) in ty.node_names.iter().enumerate() {
                if ty.index.get(name) != Some(&id) {
                    v.push(format!(
                        "type '{}': node '{}' (id {id}) disagrees with its index entry",
                        ty.name, name
                    ));
                }
            }
            if self.type_index.get(&ty.name) != Some(&t) {
                v.push(format!("type '{}' disagrees with the type index", ty.name));
            }
        }
        for (r, rel) in self.relations.iter().enumerate() {
            if rel.head_type >= self.types.len() || rel.tail_type >= self.types.len() {
                v.push(format!(
                    "relation '{}' references a nonexistent node type",
                    rel.name
                ));
                continue;
            }
            let (nh, nt) = (
                self.types[rel.head_type].node_names.len(),
                self.types[rel.tail_type].node_names.len(),
            );
            let mut seen = HashSet::new();
            for &(h, t) in &rel.edges {
                if h >= nh || t >= nt {
                    v.push(format!(
                        "relation '{}': edge ({h}, {t}) endpoint out of range",
                        rel.name
                    ));
                }
                if !seen.insert((h, t)) {
                    v.push(format!("relation '{}': duplicate edge ({h}, {t})", rel.name));
                }
            }
            if rel.edge_set != seen {
                v.push(format!(
                    "relation '{}': edge list and edge set disagree",
                    rel.name
                ));
            }
            if self.relation_index.get(&rel.name) != Some(&r) {
                v.push(format!(
                    "relation '{}' disagrees with the relation index",
                    rel.name
                ));
            }
        }
        v
    }

    // ---- serialization -------------------------------------------------

    /// Render all edges in the triple format, relation-major, insertion
    /// order within each relation. Isolated nodes and empty relations do
    /// not appear (that is what node maps are for).
    pub fn triples_text(&self) -> String {
        let mut out = String::new();
        for rel in &self.relations {
            let ht = &self.types[rel.head_type];
            let tt = &self.types[rel.tail_type];
            for &(h, t) in &rel.edges {
                out.push_str(&ht.name);
                out.push_str("::");
                out.push_str(&ht.node_names[h]);
                out.push('\t');
                out.push_str(&rel.name);
                out.push('\t');
                out.push_str(&tt.name);
                out.push_str("::");
                out.push_str(&tt.node_names[t]);
                out.push('\n');
            }
        }
        out
    }

    pub fn write_triples(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.triples_text())?;
        Ok(())
    }

    /// Render the node map: every node of every type as
    /// `type<TAB>name<TAB>id`, types in index order, ids ascending.
    pub fn node_map_text(&self) -> String {
        let mut out = String::new();
        for ty in &self.types {
            for (id, name) in ty.node_names.iter().enumerate() {
                out.push_str(&ty.name);
                out.push('\t');
                out.push_str(name);
                out.push('\t');
                out.push_str(&id.to_string());
                out.push('\n');
            }
        }
        out
    }

    pub fn write_node_map(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.node_map_text())?;
        Ok(())
    }

    /// Render a subset of edges in the triple format (relation-major
    /// grouping is the caller's choice of ordering within `triples`).
    pub fn triples_subset_text(&self, triples: &[Triple]) -> String {
        let mut out = String::new();
        for tr in triples {
            let rel = &self.relations[tr.relation];
            let ht = &self.types[rel.head_type];
            let tt = &self.types[rel.tail_type];
            out.push_str(&ht.name);
            out.push_str("::");
            out.push_str(&ht.node_names[tr.head]);
            out.push('\t');
            out.push_str(&rel.name);
            out.push('\t');
            out.push_str(&tt.name);
            out.push_str("::");
            out.push_str(&tt.node_names[tr.tail]);
            out.push('\n');
        }
        out
    }
}
