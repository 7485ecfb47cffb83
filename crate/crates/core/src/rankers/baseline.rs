//! Bag-of-tokens baselines: BM25 and query likelihood with Dirichlet or
//! Jelinek-Mercer smoothing.
//!
//! Each model scores the word part and the entity part of the query
//! separately and mixes them as `(1 − λ_E)·word + λ_E·entity`; `λ_E = 0`
//! gives the word-only model and `λ_E = 1` the entity-only model. Repeated
//! query tokens are weighted by their query frequency.

use serde::{Deserialize, Serialize};

use super::view::{node_probs, Background, DocView, Smoothing};
use super::ParameterSetting;
use crate::corpus::{CorpusIndex, Field, TokenKind};
use crate::error::{Error, Result};
use crate::query::QueryGraph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParameters(format!(
                "bm25 needs k1 > 0 and b in [0, 1], got k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

/// `ln(1 + (N − df + 0.5) / (df + 0.5))`, never negative.
pub fn bm25_idf(doc_count: f64, doc_freq: f64) -> f64 {
    (1.0 + (doc_count - doc_freq + 0.5) / (doc_freq + 0.5)).ln()
}

pub fn bm25_term(tf: f64, doc_length: f64, average_length: f64, k1: f64, b: f64) -> f64 {
    tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_length / average_length))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineModel {
    Bm25,
    LmDir,
    LmJm,
}

fn mix_kinds(parts: [f64; 2], lambda_e: f64) -> f64 {
    (1.0 - lambda_e) * parts[TokenKind::Word.index()] + lambda_e * parts[TokenKind::Entity.index()]
}

pub(crate) fn bm25_view(
    graph: &QueryGraph,
    background: &Background,
    view: &DocView,
    setting: &ParameterSetting,
    params: Bm25Params,
) -> f64 {
    let weights = setting.field_weights();
    let mut parts = [0.0; 2];
    for (node, token) in graph.nodes().iter().enumerate() {
        let qtf = f64::from(graph.multiplicity()[node]);
        let kind = token.kind.index();
        for field in Field::ALL {
            let f = field.index();
            let tf = view.counts[node][f];
            if tf == 0 || weights[f] == 0.0 {
                continue;
            }
            let idf = bm25_idf(background.doc_count, f64::from(background.doc_freq[node][f]));
            let tf_part = bm25_term(
                f64::from(tf),
                view.lengths[f][kind] as f64,
                background.average_length[f][kind],
                params.k1,
                params.b,
            );
            parts[kind] += weights[f] * qtf * idf * tf_part;
        }
    }
    mix_kinds(parts, setting.lambda_e)
}

pub(crate) fn likelihood_view(
    graph: &QueryGraph,
    background: &Background,
    view: &DocView,
    setting: &ParameterSetting,
    smoothing: Smoothing,
) -> Result<f64> {
    let probs = node_probs(
        background,
        view,
        smoothing,
        setting.field_weights(),
        setting.kind_weights(),
    )?;
    let mut parts = [0.0; 2];
    for (node, token) in graph.nodes().iter().enumerate() {
        // tokens unseen in every weighted field add the same -inf to all documents
        if probs[node] > 0.0 {
            parts[token.kind.index()] += f64::from(graph.multiplicity()[node]) * probs[node].ln();
        }
    }
    Ok(mix_kinds(parts, setting.lambda_e))
}

pub(crate) fn score_view(
    model: BaselineModel,
    graph: &QueryGraph,
    background: &Background,
    view: &DocView,
    setting: &ParameterSetting,
    bm25: Bm25Params,
) -> Result<f64> {
    match model {
        BaselineModel::Bm25 => Ok(bm25_view(graph, background, view, setting, bm25)),
        BaselineModel::LmDir => likelihood_view(
            graph,
            background,
            view,
            setting,
            Smoothing::Dirichlet { mu: setting.mu() },
        ),
        BaselineModel::LmJm => {
            let lambda = setting.jm_lambda.ok_or_else(|| {
                Error::InvalidParameters("lm-jm needs jm_lambda in the parameter setting".into())
            })?;
            likelihood_view(
                graph,
                background,
                view,
                setting,
                Smoothing::JelinekMercer { lambda },
            )
        }
    }
}

/// Score of one document under a baseline model.
pub fn baseline_score(
    model: BaselineModel,
    index: &CorpusIndex,
    doc_id: &str,
    graph: &QueryGraph,
    setting: &ParameterSetting,
    bm25: Bm25Params,
) -> Result<f64> {
    setting.validate()?;
    bm25.validate()?;
    let ordinal = index.ordinal(doc_id)?;
    let background = Background::new(index, graph);
    let view = DocView::new(index, graph, ordinal);
    score_view(model, graph, &background, &view, setting, bm25)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::corpus::{ingest_reader, Token};
    use crate::hierarchy::biomedical;
    use crate::query::{build_query_graph, Query};

    #[test]
    fn bm25_single_term_hand_value() {
        let idf = bm25_idf(100.0, 10.0);
        assert_relative_eq!(idf, (1.0_f64 + 90.5 / 10.5).ln(), max_relative = 1e-15);
        assert_relative_eq!(idf, 2.263_75, epsilon = 1e-5);
        let tf = bm25_term(2.0, 50.0, 50.0, 1.2, 0.75);
        assert_relative_eq!(tf, 1.375, max_relative = 1e-15);
        assert_relative_eq!(idf * tf, 3.112_65, epsilon = 1e-5);
    }

    fn corpus() -> CorpusIndex {
        let data = r#"{"doc_id":"a","fields":{"title":{"words":["gene","therapy"],"entities":[{"id":"G"}]},"abstract":{"words":["gene","gene","cancer"],"entities":[{"id":"D"}]}}}
{"doc_id":"b","fields":{"title":{"words":["protein","folding"]},"abstract":{"words":["therapy"],"entities":[{"id":"G"},{"id":"X"}]}}}
{"doc_id":"c","fields":{"title":{"words":["cancer"]},"abstract":{"words":["screening"],"entities":[{"id":"D"}]}}}"#;
        ingest_reader(data.as_bytes()).unwrap()
    }

    fn graph(text: &str, entities: &[&str]) -> QueryGraph {
        let ents = entities.iter().map(|e| Token::entity(*e, None)).collect();
        build_query_graph(&Query::from_text("q", text, ents), &biomedical()).unwrap()
    }

    #[test]
    fn bm25_absent_terms_contribute_nothing() {
        let index = corpus();
        let s = ParameterSetting { lambda_e: 0.0, ..ParameterSetting::default() };
        let with = baseline_score(BaselineModel::Bm25, &index, "a", &graph("gene zzz", &[]), &s, Bm25Params::default()).unwrap();
        let without = baseline_score(BaselineModel::Bm25, &index, "a", &graph("gene", &[]), &s, Bm25Params::default()).unwrap();
        assert_eq!(with, without);
        assert!(with > 0.0);
    }

    #[test]
    fn bm25_matches_manual_field_sum() {
        let index = corpus();
        let s = ParameterSetting { delta_title: 3.0, delta_abs: 1.0, lambda_e: 0.0, ..ParameterSetting::default() };
        let got = baseline_score(BaselineModel::Bm25, &index, "a", &graph("gene", &[]), &s, Bm25Params::default()).unwrap();
        // title: tf 1, dl 2, avgdl 5/3, df 1; abstract: tf 2, dl 3, avgdl 5/3, df 1
        let idf = bm25_idf(3.0, 1.0);
        let title = idf * bm25_term(1.0, 2.0, 5.0 / 3.0, 1.2, 0.75);
        let abs = idf * bm25_term(2.0, 3.0, 5.0 / 3.0, 1.2, 0.75);
        assert_relative_eq!(got, 0.75 * title + 0.25 * abs, max_relative = 1e-14);
    }

    #[test]
    fn query_frequency_scales_term() {
        let index = corpus();
        let s = ParameterSetting { lambda_e: 0.0, ..ParameterSetting::default() };
        let once = baseline_score(BaselineModel::LmDir, &index, "a", &graph("gene", &[]), &s, Bm25Params::default()).unwrap();
        let twice = baseline_score(BaselineModel::LmDir, &index, "a", &graph("gene gene", &[]), &s, Bm25Params::default()).unwrap();
        assert_relative_eq!(twice, 2.0 * once, max_relative = 1e-15);
        assert!(once < 0.0);
    }

    #[test]
    fn jm_near_one_is_document_independent() {
        let index = corpus();
        let s = ParameterSetting { lambda_e: 0.3, jm_lambda: Some(1.0 - 1e-12), ..ParameterSetting::default() };
        let g = graph("gene therapy", &["G", "D"]);
        let scores: Vec<f64> = ["a", "b", "c"]
            .iter()
            .map(|d| baseline_score(BaselineModel::LmJm, &index, d, &g, &s, Bm25Params::default()).unwrap())
            .collect();
        assert!((scores[0] - scores[1]).abs() < 1e-9 && (scores[1] - scores[2]).abs() < 1e-9);
        let missing = ParameterSetting { jm_lambda: None, ..s };
        assert!(baseline_score(BaselineModel::LmJm, &index, "a", &g, &missing, Bm25Params::default()).is_err());
    }

    #[test]
    fn entity_only_and_word_only_mixing() {
        let index = corpus();
        let g = graph("gene", &["G"]);
        let p = Bm25Params::default();
        let at = |l: f64| {
            let s = ParameterSetting { lambda_e: l, ..ParameterSetting::default() };
            baseline_score(BaselineModel::Bm25, &index, "b", &g, &s, p).unwrap()
        };
        // doc b has entity G but not the word gene
        assert_eq!(at(0.0), 0.0);
        assert!(at(1.0) > 0.0);
        assert_relative_eq!(at(0.25), 0.25 * at(1.0), max_relative = 1e-14);
        assert!(Bm25Params { k1: 0.0, b: 0.5 }.validate().is_err());
    }
}
