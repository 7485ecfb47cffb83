//! Query-graph covering score.
//!
//! A document covers a node when the node's token occurs in any of its
//! fields, and covers an edge when it covers both endpoints. Each covered
//! node `t` contributes
//!
//! ```text
//! w(t) · (1 + Σ_{covered edges <t,t'>} λ(t,t') · √p(t'|d)) · √p(t|d)
//! ```
//!
//! where `w` is `λ_E` for entities and `1 − λ_E` for words, and `λ(t,t')`
//! is 1 for word pairs and the type-distance weight for entity pairs. Every
//! covered edge is therefore counted once from each endpoint.

use serde::Serialize;

use super::view::{node_probs, Background, DocView, Smoothing};
use super::{ParameterSetting, Variant};
use crate::corpus::CorpusIndex;
use crate::error::Result;
use crate::query::{EdgeKind, QueryGraph};

/// Nodes and edges of a query graph covered by one document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CoveredSubgraph {
    /// Indices into [`QueryGraph::nodes`].
    pub nodes: Vec<usize>,
    /// Indices into [`QueryGraph::edges`].
    pub edges: Vec<usize>,
}

impl CoveredSubgraph {
    pub fn from_mask(graph: &QueryGraph, covered: &[bool]) -> Self {
        CoveredSubgraph {
            nodes: (0..graph.node_count()).filter(|&i| covered[i]).collect(),
            edges: graph
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| covered[e.a] && covered[e.b])
                .map(|(i, _)| i)
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn covered_subgraph(graph: &QueryGraph, index: &CorpusIndex, doc_id: &str) -> Result<CoveredSubgraph> {
    let ordinal = index.ordinal(doc_id)?;
    let view = DocView::new(index, graph, ordinal);
    Ok(CoveredSubgraph::from_mask(graph, &view.coverage()))
}

/// Scores a coverage mask against fixed token probabilities.
pub fn combine(
    graph: &QueryGraph,
    covered: &[bool],
    probs: &[f64],
    lambda_e: f64,
    variant: Variant,
) -> f64 {
    let activation: Vec<f64> = probs.iter().map(|p| p.sqrt()).collect();
    let edges = graph.edges();
    let mut score = 0.0;
    for (node, token) in graph.nodes().iter().enumerate() {
        if !covered[node] {
            continue;
        }
        let mut bracket = 1.0;
        if variant != Variant::NoSet {
            for &e in graph.incident_edges(node) {
                let edge = &edges[e];
                let other = if edge.a == node { edge.b } else { edge.a };
                if !covered[other] {
                    continue;
                }
                let weight = match (edge.kind, variant) {
                    (EdgeKind::EntityEntity, Variant::Full) => edge.weight,
                    _ => 1.0,
                };
                bracket += weight * activation[other];
            }
        }
        let node_weight = if token.is_entity() {
            lambda_e
        } else {
            1.0 - lambda_e
        };
        score += node_weight * bracket * activation[node];
    }
    score
}

pub(crate) fn score_view(
    graph: &QueryGraph,
    background: &Background,
    view: &DocView,
    setting: &ParameterSetting,
    variant: Variant,
) -> Result<f64> {
    let covered = view.coverage();
    if !covered.iter().any(|&c| c) {
        return Ok(0.0);
    }
    let probs = node_probs(
        background,
        view,
        Smoothing::Dirichlet {
            mu: setting.mu(),
        },
        setting.field_weights(),
        setting.kind_weights(),
    )?;
    Ok(combine(graph, &covered, &probs, setting.lambda_e, variant))
}

/// Score of one document for one query graph.
pub fn setrank_score(
    graph: &QueryGraph,
    index: &CorpusIndex,
    doc_id: &str,
    setting: &ParameterSetting,
    variant: Variant,
) -> Result<f64> {
    setting.validate()?;
    let ordinal = index.ordinal(doc_id)?;
    let background = Background::new(index, graph);
    let view = DocView::new(index, graph, ordinal);
    score_view(graph, &background, &view, setting, variant)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::corpus::{ingest_reader, Token};
    use crate::query::Edge;

    fn mixed_graph() -> QueryGraph {
        let nodes = vec![
            Token::word("w1"),
            Token::word("w2"),
            Token::entity("e1", None),
            Token::entity("e2", None),
        ];
        let edges = vec![
            Edge { a: 0, b: 1, kind: EdgeKind::WordWord, weight: 1.0 },
            Edge { a: 2, b: 3, kind: EdgeKind::EntityEntity, weight: 2.0 },
        ];
        QueryGraph::from_parts("q", nodes, edges).unwrap()
    }

    #[test]
    fn hand_evaluated_combination() {
        let g = mixed_graph();
        let covered = [true, false, true, true];
        let probs = [0.01, 0.5, 0.04, 0.01];
        let s = combine(&g, &covered, &probs, 0.5, Variant::Full);
        assert_relative_eq!(s, 0.24, max_relative = 1e-12);
        // no-type drops the factor 2 on the entity edge
        let s = combine(&g, &covered, &probs, 0.5, Variant::NoType);
        assert_relative_eq!(s, 0.05 + 0.5 * (0.2 * 1.1 + 0.1 * 1.2), max_relative = 1e-12);
        let s = combine(&g, &covered, &probs, 0.5, Variant::NoSet);
        assert_relative_eq!(s, 0.05 + 0.5 * 0.3, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_weights_and_coverage() {
        let g = mixed_graph();
        let probs = [0.01, 0.02, 0.04, 0.01];
        assert_eq!(combine(&g, &[false; 4], &probs, 0.5, Variant::Full), 0.0);
        assert_eq!(combine(&g, &[true, true, false, false], &probs, 1.0, Variant::Full), 0.0);
        let entities_only = combine(&g, &[false, false, true, true], &probs, 0.0, Variant::Full);
        assert_eq!(entities_only, 0.0);
    }

    #[test]
    fn coverage_requires_raw_occurrence() {
        let data = r#"{"doc_id":"d","fields":{"title":{"words":["w1"]},"abstract":{"entities":[{"id":"e1"}]}}}
{"doc_id":"z","fields":{"title":{"words":["w2"],"entities":[{"id":"e2"}]}}}
{"doc_id":"full","fields":{"abstract":{"words":["w1","w2"],"entities":[{"id":"e1"},{"id":"e2"}]}}}"#;
        let index = ingest_reader(data.as_bytes()).unwrap();
        let g = mixed_graph();
        let c = covered_subgraph(&g, &index, "d").unwrap();
        assert_eq!(c.nodes, [0, 2]);
        assert!(c.edges.is_empty());
        let c = covered_subgraph(&g, &index, "full").unwrap();
        assert_eq!(c.nodes, [0, 1, 2, 3]);
        assert_eq!(c.edges, [0, 1]);
        assert!(covered_subgraph(&g, &index, "nope").is_err());
    }

    #[test]
    fn uncovered_document_scores_zero() {
        let data = r#"{"doc_id":"a","fields":{"title":{"words":["w1"],"entities":[{"id":"e1"}]},"abstract":{"words":["x"],"entities":[{"id":"e9"}]}}}
{"doc_id":"b","fields":{"title":{"words":["other"]},"abstract":{"words":["y"],"entities":[{"id":"e8"}]}}}"#;
        let index = ingest_reader(data.as_bytes()).unwrap();
        let g = mixed_graph();
        let s = ParameterSetting::default();
        assert_eq!(setrank_score(&g, &index, "b", &s, Variant::Full).unwrap(), 0.0);
        assert!(setrank_score(&g, &index, "a", &s, Variant::Full).unwrap() > 0.0);
    }
}
