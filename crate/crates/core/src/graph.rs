//! Entity connection graph: one node per ranked entity, one edge per pair of
//! entities that share a document, with the shared documents kept as evidence.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Source};
use crate::extract::{EntityKey, EntityLabel};
use crate::rank::RankedEntities;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub key: EntityKey,
    pub display: String,
    pub label: EntityLabel,
    pub score: f64,
    pub doc_ids: BTreeSet<String>,
    pub origin_queries: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub doc_id: String,
    pub source: Source,
    pub url: String,
    pub title: String,
}

impl Evidence {
    fn of(doc: &Document) -> Self {
        Evidence {
            doc_id: doc.id.clone(),
            source: doc.source,
            url: doc.url.clone(),
            title: doc.title.clone(),
        }
    }
}

/// Unordered pair of distinct keys, stored smallest first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey(EntityKey, EntityKey);

impl EdgeKey {
    pub fn new(a: EntityKey, b: EntityKey) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(EdgeKey(a, b)),
            std::cmp::Ordering::Greater => Some(EdgeKey(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> &EntityKey {
        &self.0
    }

    pub fn second(&self) -> &EntityKey {
        &self.1
    }

    pub fn other(&self, key: &EntityKey) -> Option<&EntityKey> {
        if *key == self.0 {
            Some(&self.1)
        } else if *key == self.1 {
            Some(&self.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub endpoints: EdgeKey,
    /// Number of distinct documents in `evidence`.
    pub weight: usize,
    /// Sorted by doc id, one entry per document.
    pub evidence: Vec<Evidence>,
    /// Kinds of record the connection was seen in, e.g. "news story".
    pub relation_hint: Option<String>,
}

impl GraphEdge {
    fn from_evidence(endpoints: EdgeKey, mut evidence: Vec<Evidence>) -> Self {
        evidence.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        evidence.dedup_by(|a, b| a.doc_id == b.doc_id);
        let kinds: BTreeSet<Source> = evidence.iter().map(|e| e.source).collect();
        let relation_hint = (!kinds.is_empty()).then(|| {
            kinds
                .iter()
                .map(|s| s.evidence_kind())
                .collect::<Vec<_>>()
                .join(" / ")
        });
        GraphEdge {
            endpoints,
            weight: evidence.len(),
            evidence,
            relation_hint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConnectionGraph {
    pub nodes: BTreeMap<EntityKey, GraphNode>,
    pub edges: BTreeMap<EdgeKey, GraphEdge>,
    pub generation: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("entity {entity} refers to unknown document `{doc_id}`")]
    DanglingDoc { entity: String, doc_id: String },
    #[error("unknown entity `{0}`")]
    UnknownKey(String),
    #[error("malformed graph JSON: {0}")]
    Malformed(String),
}

/// Nodes for every ranked entity and an edge for each pair sharing at least
/// one document.
pub fn build_graph(ranked: &RankedEntities, docs: &[Document], query: &str) -> Result<ConnectionGraph, GraphError> {
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut graph = ConnectionGraph::default();
    // doc id -> entities mentioned in it, in ranked order
    let mut members: BTreeMap<&str, Vec<&EntityKey>> = BTreeMap::new();
    for e in &ranked.entries {
        for doc_id in &e.doc_ids {
            if !by_id.contains_key(doc_id.as_str()) {
                return Err(GraphError::DanglingDoc {
                    entity: e.key.to_string(),
                    doc_id: doc_id.clone(),
                });
            }
            members.entry(doc_id).or_default().push(&e.key);
        }
        graph.nodes.insert(
            e.key.clone(),
            GraphNode {
                key: e.key.clone(),
                display: e.display.clone(),
                label: e.label,
                score: e.score,
                doc_ids: e.doc_ids.clone(),
                origin_queries: BTreeSet::from([query.to_string()]),
            },
        );
    }

    let mut evidence: BTreeMap<EdgeKey, Vec<Evidence>> = BTreeMap::new();
    for (doc_id, keys) in members {
        let doc = by_id[doc_id];
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                if let Some(pair) = EdgeKey::new((*a).clone(), (*b).clone()) {
                    evidence.entry(pair).or_default().push(Evidence::of(doc));
                }
            }
        }
    }
    graph.edges = evidence
        .into_iter()
        .map(|(pair, ev)| (pair.clone(), GraphEdge::from_evidence(pair, ev)))
        .collect();
    Ok(graph)
}

/// Union of two graphs. Doc ids and queries are unioned, the larger score is
/// kept, `base` wins display conflicts, and edge evidence is unioned by doc
/// id. The generation is `base.generation + 1`.
pub fn merge(base: &ConnectionGraph, delta: &ConnectionGraph) -> ConnectionGraph {
    let mut out = base.clone();
    out.generation = base.generation + 1;
    for (key, node) in &delta.nodes {
        match out.nodes.get_mut(key) {
            Some(existing) => {
                // same key implies same label: the label is part of the key
                debug_assert_eq!(existing.label, node.label);
                existing.doc_ids.extend(node.doc_ids.iter().cloned());
                existing.origin_queries.extend(node.origin_queries.iter().cloned());
                existing.score = existing.score.max(node.score);
            }
            None => {
                out.nodes.insert(key.clone(), node.clone());
            }
        }
    }
    for (pair, edge) in &delta.edges {
        let merged = match out.edges.remove(pair) {
            Some(existing) => {
                let mut ev = existing.evidence;
                ev.extend(edge.evidence.iter().cloned());
                GraphEdge::from_evidence(pair.clone(), ev)
            }
            None => edge.clone(),
        };
        out.edges.insert(pair.clone(), merged);
    }
    out
}

impl ConnectionGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adjacent nodes with their edges, by weight descending then key.
    pub fn neighbors(&self, key: &EntityKey) -> Result<Vec<(&GraphNode, &GraphEdge)>, GraphError> {
        if !self.nodes.contains_key(key) {
            return Err(GraphError::UnknownKey(key.to_string()));
        }
        let mut out: Vec<(&GraphNode, &GraphEdge)> = self
            .edges
            .iter()
            .filter_map(|(pair, edge)| pair.other(key).map(|other| (&self.nodes[other], edge)))
            .collect();
        out.sort_by(|a, b| b.1.weight.cmp(&a.1.weight).then_with(|| a.0.key.cmp(&b.0.key)));
        Ok(out)
    }

    /// Checks that edges reference existing nodes and carry consistent
    /// evidence.
    pub fn check(&self) -> Result<(), String> {
        for (pair, edge) in &self.edges {
            if pair != &edge.endpoints {
                return Err(format!("edge stored under the wrong pair: {pair:?}"));
            }
            for end in [pair.first(), pair.second()] {
                let node = self.nodes.get(end).ok_or_else(|| format!("edge endpoint {end} missing"))?;
                if let Some(ev) = edge.evidence.iter().find(|ev| !node.doc_ids.contains(&ev.doc_id)) {
                    return Err(format!("evidence {} not among docs of {end}", ev.doc_id));
                }
            }
            let distinct: BTreeSet<&str> = edge.evidence.iter().map(|e| e.doc_id.as_str()).collect();
            if edge.weight == 0 || edge.weight != distinct.len() {
                return Err(format!("edge {pair:?} has weight {} for {} documents", edge.weight, distinct.len()));
            }
        }
        Ok(())
    }

    pub fn to_node_link(&self) -> NodeLink {
        NodeLink {
            nodes: self
                .nodes
                .values()
                .map(|n| NodeLinkNode {
                    id: n.key.clone(),
                    display: n.display.clone(),
                    label: n.label,
                    score: n.score,
                    docs: n.doc_ids.iter().cloned().collect(),
                    queries: n.origin_queries.iter().cloned().collect(),
                })
                .collect(),
            links: self
                .edges
                .values()
                .map(|e| NodeLinkLink {
                    source: e.endpoints.first().clone(),
                    target: e.endpoints.second().clone(),
                    weight: e.weight,
                    evidence: e
                        .evidence
                        .iter()
                        .map(|ev| NodeLinkEvidence {
                            doc: ev.doc_id.clone(),
                            src: ev.source,
                            url: ev.url.clone(),
                            title: ev.title.clone(),
                        })
                        .collect(),
                    hint: e.relation_hint.clone(),
                })
                .collect(),
            generation: self.generation,
        }
    }

    pub fn from_node_link(nl: &NodeLink) -> Result<Self, GraphError> {
        let mut g = ConnectionGraph {
            generation: nl.generation,
            ..ConnectionGraph::default()
        };
        for n in &nl.nodes {
            if n.id.label != n.label {
                return Err(GraphError::Malformed(format!("node {} has label {}", n.id, n.label)));
            }
            g.nodes.insert(
                n.id.clone(),
                GraphNode {
                    key: n.id.clone(),
                    display: n.display.clone(),
                    label: n.label,
                    score: n.score,
                    doc_ids: n.docs.iter().cloned().collect(),
                    origin_queries: n.queries.iter().cloned().collect(),
                },
            );
        }
        for l in &nl.links {
            let pair = EdgeKey::new(l.source.clone(), l.target.clone())
                .ok_or_else(|| GraphError::Malformed(format!("self-loop on {}", l.source)))?;
            let edge = GraphEdge {
                endpoints: pair.clone(),
                weight: l.weight,
                evidence: l
                    .evidence
                    .iter()
                    .map(|e| Evidence {
                        doc_id: e.doc.clone(),
                        source: e.src,
                        url: e.url.clone(),
                        title: e.title.clone(),
                    })
                    .collect(),
                relation_hint: l.hint.clone(),
            };
            g.edges.insert(pair, edge);
        }
        g.check().map_err(GraphError::Malformed)?;
        Ok(g)
    }
}

/// Node-link JSON consumed by the front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLink {
    pub nodes: Vec<NodeLinkNode>,
    pub links: Vec<NodeLinkLink>,
    /// Number of merges the graph has been through.
    #[serde(default)]
    pub generation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLinkNode {
    pub id: EntityKey,
    pub display: String,
    pub label: EntityLabel,
    pub score: f64,
    pub docs: Vec<String>,
    pub queries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLinkLink {
    pub source: EntityKey,
    pub target: EntityKey,
    pub weight: usize,
    pub evidence: Vec<NodeLinkEvidence>,
    pub hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLinkEvidence {
    pub doc: String,
    pub src: Source,
    pub url: String,
    pub title: String,
}

/// Compact node-link JSON; nodes sorted by key, links by endpoint pair.
pub fn export_graph(graph: &ConnectionGraph) -> String {
    serde_json::to_string(&graph.to_node_link()).expect("graph serializes")
}

pub fn import_graph(json: &str) -> Result<ConnectionGraph, GraphError> {
    let nl: NodeLink = serde_json::from_str(json).map_err(|e| GraphError::Malformed(e.to_string()))?;
    ConnectionGraph::from_node_link(&nl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Entity;
    use EntityLabel::*;

    fn entity(surface: &str, label: EntityLabel, docs: &[&str], score: f64) -> Entity {
        Entity {
            key: EntityKey::from_surface(surface, label),
            display: surface.into(),
            label,
            mentions: vec![],
            doc_ids: docs.iter().map(|d| d.to_string()).collect(),
            score,
        }
    }

    fn docs() -> Vec<Document> {
        vec![
            Document::new("d1", Source::Articles, "x").with_title("Acme hires Jane").with_url("https://news.example/1"),
            Document::new("d2", Source::Companies, "y").with_title("ACME CORP LTD"),
            Document::new("d3", Source::Web, "z"),
            Document::new("d4", Source::Articles, "w"),
        ]
    }

    fn three() -> ConnectionGraph {
        let ranked = RankedEntities {
            entries: vec![
                entity("Acme", Org, &["d1", "d2"], 2.0),
                entity("Jane", Per, &["d1"], 1.0),
                entity("London", Loc, &["d2"], 0.5),
            ],
            k: 15,
        };
        build_graph(&ranked, &docs(), "acme").unwrap()
    }

    fn key(s: &str) -> EntityKey {
        s.parse().unwrap()
    }

    #[test]
    fn three_entity_fixture() {
        let g = three();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);
        let aj = &g.edges[&EdgeKey::new(key("ORG:acme"), key("PER:jane")).unwrap()];
        assert_eq!(aj.weight, 1);
        assert_eq!(aj.evidence[0].doc_id, "d1");
        assert_eq!(aj.evidence[0].url, "https://news.example/1");
        assert_eq!(aj.relation_hint.as_deref(), Some("news story"));
        let al = &g.edges[&EdgeKey::new(key("ORG:acme"), key("LOC:london")).unwrap()];
        assert_eq!(al.evidence[0].doc_id, "d2");
        assert_eq!(al.relation_hint.as_deref(), Some("companies-house record"));
        assert!(EdgeKey::new(key("PER:jane"), key("LOC:london")).map_or(true, |p| !g.edges.contains_key(&p)));
        g.check().unwrap();
    }

    #[test]
    fn single_entity_and_full_overlap() {
        let one = RankedEntities { entries: vec![entity("Acme", Org, &["d1"], 1.0)], k: 15 };
        let g = build_graph(&one, &docs(), "q").unwrap();
        assert_eq!((g.nodes.len(), g.edges.len()), (1, 0));

        let two = RankedEntities {
            entries: vec![entity("Acme", Org, &["d1", "d2", "d3"], 1.0), entity("Jane", Per, &["d1", "d2", "d3"], 1.0)],
            k: 15,
        };
        let g = build_graph(&two, &docs(), "q").unwrap();
        assert_eq!(g.edges.len(), 1);
        let e = g.edges.values().next().unwrap();
        assert_eq!(e.weight, 3);
        assert_eq!(e.relation_hint.as_deref(), Some("news story / companies-house record / web result"));
    }

    #[test]
    fn dangling_document() {
        let r = RankedEntities { entries: vec![entity("Acme", Org, &["d9"], 1.0)], k: 1 };
        assert!(matches!(build_graph(&r, &docs(), "q"), Err(GraphError::DanglingDoc { .. })));
    }

    #[test]
    fn merge_identity_and_idempotence() {
        let g = three();
        let m = merge(&g, &ConnectionGraph::default());
        assert_eq!((&m.nodes, &m.edges, m.generation), (&g.nodes, &g.edges, g.generation + 1));
        let m = merge(&g, &g);
        assert_eq!((&m.nodes, &m.edges), (&g.nodes, &g.edges));
    }

    #[test]
    fn merge_unions_evidence() {
        let d = docs();
        let g1 = build_graph(
            &RankedEntities { entries: vec![entity("Acme", Org, &["d1"], 1.0), entity("Jane", Per, &["d1"], 1.0)], k: 15 },
            &d,
            "acme",
        )
        .unwrap();
        let g2 = build_graph(
            &RankedEntities {
                entries: vec![entity("Acme", Org, &["d1", "d4"], 3.0), entity("Jane", Per, &["d1", "d4"], 0.5)],
                k: 15,
            },
            &d,
            "jane",
        )
        .unwrap();
        let m = merge(&g1, &g2);
        let e = m.edges.values().next().unwrap();
        assert_eq!(e.weight, 2);
        let ids: Vec<_> = e.evidence.iter().map(|e| e.doc_id.as_str()).collect();
        assert_eq!(ids, ["d1", "d4"]);
        let acme = &m.nodes[&key("ORG:acme")];
        assert_eq!(acme.score, 3.0);
        assert_eq!(acme.origin_queries.len(), 2);
        assert_eq!(m.nodes[&key("PER:jane")].score, 1.0);
        m.check().unwrap();
    }

    #[test]
    fn neighbors_order() {
        let g = three();
        let n = g.neighbors(&key("ORG:acme")).unwrap();
        let names: Vec<_> = n.iter().map(|(node, _)| node.display.as_str()).collect();
        // equal weights fall back to key order
        assert_eq!(names, ["Jane", "London"]);
        assert_eq!(g.neighbors(&key("PER:jane")).unwrap().len(), 1);
        assert!(g.neighbors(&key("PER:nobody")).is_err());
        let one = build_graph(&RankedEntities { entries: vec![entity("Solo", Per, &["d3"], 1.0)], k: 1 }, &docs(), "q").unwrap();
        assert!(one.neighbors(&key("PER:solo")).unwrap().is_empty());
    }

    #[test]
    fn export_shape() {
        assert_eq!(export_graph(&ConnectionGraph::default()), r#"{"nodes":[],"links":[],"generation":0}"#);
        let g = three();
        let a = export_graph(&g);
        assert_eq!(a, export_graph(&g));
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
        assert_eq!(v["links"].as_array().unwrap().len(), 2);
        assert_eq!(v["nodes"][0]["id"], "ORG:acme");
        let link = &v["links"][0];
        assert_eq!(link["evidence"][0]["src"], "articles");
        for field in ["source", "target", "weight", "evidence", "hint"] {
            assert!(link.get(field).is_some(), "{field}");
        }
        let back = import_graph(&a).unwrap();
        assert_eq!((&back.nodes, &back.edges), (&g.nodes, &g.edges));
    }
}
