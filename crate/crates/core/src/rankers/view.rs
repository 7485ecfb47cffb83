//! Raw statistics of the query graph's tokens, gathered once per query and
//! per document so that many parameter settings can be scored cheaply.

use crate::corpus::{CorpusIndex, Field, TokenKind};
use crate::error::{Error, Result};
use crate::lm;
use crate::query::QueryGraph;

/// Collection statistics for every node of a graph.
#[derive(Clone, Debug)]
pub(crate) struct Background {
    /// `[node][field]`
    pub collection_count: Vec<[u64; 2]>,
    pub doc_freq: Vec<[u32; 2]>,
    /// `[field][kind]`
    pub collection_length: [[u64; 2]; 2],
    pub average_length: [[f64; 2]; 2],
    pub doc_count: f64,
    pub kinds: Vec<TokenKind>,
}

impl Background {
    pub fn new(index: &CorpusIndex, graph: &QueryGraph) -> Self {
        let mut collection_length = [[0; 2]; 2];
        let mut average_length = [[0.0; 2]; 2];
        for field in Field::ALL {
            for kind in TokenKind::ALL {
                collection_length[field.index()][kind.index()] =
                    index.collection_stats(field, kind).length;
                average_length[field.index()][kind.index()] = index.average_length(field, kind);
            }
        }
        let mut collection_count = Vec::with_capacity(graph.node_count());
        let mut doc_freq = Vec::with_capacity(graph.node_count());
        for token in graph.nodes() {
            let mut cc = [0; 2];
            let mut df = [0; 2];
            for field in Field::ALL {
                let stats = index.collection_stats(field, token.kind);
                cc[field.index()] = stats.count(&token.key);
                df[field.index()] = stats.doc_freq(&token.key);
            }
            collection_count.push(cc);
            doc_freq.push(df);
        }
        Background {
            collection_count,
            doc_freq,
            collection_length,
            average_length,
            doc_count: index.doc_count() as f64,
            kinds: graph.nodes().iter().map(|t| t.kind).collect(),
        }
    }

    pub fn check_background(&self, node: usize, field: Field) -> Result<f64> {
        let kind = self.kinds[node];
        let length = self.collection_length[field.index()][kind.index()];
        if length == 0 {
            return Err(Error::NoBackgroundModel { field, kind });
        }
        Ok(length as f64)
    }
}

/// Counts of every graph node in one document.
#[derive(Clone, Debug)]
pub(crate) struct DocView {
    pub ordinal: u32,
    /// `[node][field]`
    pub counts: Vec<[u32; 2]>,
    /// `[field][kind]`
    pub lengths: [[u64; 2]; 2],
}

impl DocView {
    pub fn new(index: &CorpusIndex, graph: &QueryGraph, ordinal: u32) -> Self {
        let doc = index.document_at(ordinal);
        let mut lengths = [[0; 2]; 2];
        for field in Field::ALL {
            for kind in TokenKind::ALL {
                lengths[field.index()][kind.index()] = doc.field(field).length(kind);
            }
        }
        let counts = graph
            .nodes()
            .iter()
            .map(|t| [doc.field(Field::Title).count(t), doc.field(Field::Abstract).count(t)])
            .collect();
        DocView {
            ordinal,
            counts,
            lengths,
        }
    }

    pub fn covers(&self, node: usize) -> bool {
        self.counts[node].iter().any(|&c| c > 0)
    }

    pub fn coverage(&self) -> Vec<bool> {
        (0..self.counts.len()).map(|i| self.covers(i)).collect()
    }
}

/// Which per-field estimator to mix.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Smoothing {
    Dirichlet { mu: [f64; 2] },
    JelinekMercer { lambda: f64 },
}

/// `p(t|d)` for each node whose kind weight is non-zero; other nodes get 0
/// since their terms are multiplied away anyway.
pub(crate) fn node_probs(
    background: &Background,
    view: &DocView,
    smoothing: Smoothing,
    field_weights: [f64; 2],
    kind_weights: [f64; 2],
) -> Result<Vec<f64>> {
    let mut probs = vec![0.0; view.counts.len()];
    for (node, p) in probs.iter_mut().enumerate() {
        let kind = background.kinds[node];
        if kind_weights[kind.index()] == 0.0 {
            continue;
        }
        let mut field_probs = [0.0; 2];
        for field in Field::ALL {
            let f = field.index();
            if field_weights[f] == 0.0 {
                continue;
            }
            let collection_length = background.check_background(node, field)?;
            let doc_count = f64::from(view.counts[node][f]);
            let doc_length = view.lengths[f][kind.index()] as f64;
            let collection_count = background.collection_count[node][f] as f64;
            field_probs[f] = match smoothing {
                Smoothing::Dirichlet { mu } => lm::dirichlet(
                    doc_count,
                    doc_length,
                    collection_count,
                    collection_length,
                    mu[f],
                ),
                Smoothing::JelinekMercer { lambda } => lm::jelinek_mercer(
                    doc_count,
                    doc_length,
                    collection_count,
                    collection_length,
                    lambda,
                ),
            };
        }
        *p = lm::mixture(field_probs, field_weights);
    }
    Ok(probs)
}
