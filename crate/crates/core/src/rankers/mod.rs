//! Ranking models behind one interface.

mod baseline;
mod setrank;
mod view;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use baseline::{baseline_score, bm25_idf, bm25_term, BaselineModel, Bm25Params};
pub use setrank::{combine, covered_subgraph, setrank_score, CoveredSubgraph};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::lm::{self, SmoothingParams};
use crate::query::QueryGraph;
use view::{Background, DocView};

/// One candidate configuration of field weights, Dirichlet scales and the
/// entity weight `λ_E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSetting {
    pub delta_title: f64,
    pub delta_abs: f64,
    pub mu_title: f64,
    pub mu_abs: f64,
    pub lambda_e: f64,
    /// Only read by the Jelinek-Mercer baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jm_lambda: Option<f64>,
}

impl Default for ParameterSetting {
    fn default() -> Self {
        ParameterSetting {
            delta_title: 20.0,
            delta_abs: 5.0,
            mu_title: 1000.0,
            mu_abs: 1000.0,
            lambda_e: 0.7,
            jm_lambda: None,
        }
    }
}

impl ParameterSetting {
    pub fn validate(&self) -> Result<()> {
        self.smoothing().validate()?;
        if !(0.0..=1.0).contains(&self.lambda_e) {
            return Err(Error::InvalidParameters(format!(
                "lambda_e must lie in [0, 1], got {}",
                self.lambda_e
            )));
        }
        Ok(())
    }

    pub fn smoothing(&self) -> SmoothingParams {
        SmoothingParams {
            mu: self.mu(),
            delta: [self.delta_title, self.delta_abs],
            jm_lambda: self.jm_lambda,
        }
    }

    pub fn mu(&self) -> [f64; 2] {
        [self.mu_title, self.mu_abs]
    }

    pub fn field_weights(&self) -> [f64; 2] {
        lm::normalized_weights([self.delta_title, self.delta_abs])
    }

    /// `[word, entity]` node weights.
    pub fn kind_weights(&self) -> [f64; 2] {
        [1.0 - self.lambda_e, self.lambda_e]
    }
}

/// SetRank ablations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Type-weighted entity edges.
    #[default]
    Full,
    /// Every entity edge weight forced to 1.
    NoType,
    /// Node potentials only.
    NoSet,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoType, Variant::NoSet];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoType => "no-type",
            Variant::NoSet => "no-set",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown variant {s:?} (expected full, no-type or no-set)")))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Model {
    #[serde(rename = "setrank")]
    SetRank { variant: Variant },
    Bm25 { k1: f64, b: f64 },
    LmDir,
    LmJm,
}

impl Model {
    pub const NAMES: [&'static str; 4] = ["setrank", "bm25", "lm-dir", "lm-jm"];

    pub fn name(&self) -> &'static str {
        match self {
            Model::SetRank { .. } => "setrank",
            Model::Bm25 { .. } => "bm25",
            Model::LmDir => "lm-dir",
            Model::LmJm => "lm-jm",
        }
    }

    /// Resolves a model by name, filling in the SetRank variant and the
    /// BM25 constants.
    pub fn from_name(name: &str, variant: Variant, bm25: Bm25Params) -> Result<Self> {
        match name {
            "setrank" => Ok(Model::SetRank { variant }),
            "bm25" => Ok(Model::Bm25 {
                k1: bm25.k1,
                b: bm25.b,
            }),
            "lm-dir" => Ok(Model::LmDir),
            "lm-jm" => Ok(Model::LmJm),
            other => Err(Error::InvalidParameters(format!(
                "unknown model {other:?}; valid models: {}",
                Model::NAMES.join(", ")
            ))),
        }
    }

    /// Query-likelihood scores are log probabilities and may be negative, so
    /// they keep every candidate. The other models drop zero scores.
    fn keeps_zero_scores(&self) -> bool {
        matches!(self, Model::LmDir | Model::LmJm)
    }
}

/// A model plus one parameter setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranker {
    #[serde(flatten)]
    pub model: Model,
    pub setting: ParameterSetting,
}

impl Ranker {
    pub fn new(model: Model, setting: ParameterSetting) -> Result<Self> {
        let r = Ranker { model, setting };
        r.validate()?;
        Ok(r)
    }

    pub fn setrank(setting: ParameterSetting, variant: Variant) -> Self {
        Ranker {
            model: Model::SetRank { variant },
            setting,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.setting.validate()?;
        match self.model {
            Model::Bm25 { k1, b } => Bm25Params { k1, b }.validate(),
            Model::LmJm if self.setting.jm_lambda.is_none() => Err(Error::InvalidParameters(
                "lm-jm needs jm_lambda in the parameter setting".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Run tag: model name plus a short hash of the full configuration.
    pub fn tag(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("ranker serializes");
        let digest = Sha256::digest(&canonical);
        format!("{}-{}", self.model.name(), &hex::encode(digest)[..8])
    }

    fn score_view(&self, graph: &QueryGraph, background: &Background, view: &DocView) -> Result<f64> {
        match self.model {
            Model::SetRank { variant } => setrank::score_view(graph, background, view, &self.setting, variant),
            Model::Bm25 { k1, b } => baseline::score_view(
                BaselineModel::Bm25,
                graph,
                background,
                view,
                &self.setting,
                Bm25Params { k1, b },
            ),
            Model::LmDir => baseline::score_view(
                BaselineModel::LmDir,
                graph,
                background,
                view,
                &self.setting,
                Bm25Params::default(),
            ),
            Model::LmJm => baseline::score_view(
                BaselineModel::LmJm,
                graph,
                background,
                view,
                &self.setting,
                Bm25Params::default(),
            ),
        }
    }

    /// Score of a single document.
    pub fn score(&self, graph: &QueryGraph, index: &CorpusIndex, doc_id: &str) -> Result<f64> {
        self.validate()?;
        let ordinal = index.ordinal(doc_id)?;
        let background = Background::new(index, graph);
        self.score_view(graph, &background, &DocView::new(index, graph, ordinal))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
}

/// Documents in descending score order; equal scores are ordered by
/// ascending `doc_id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Sorts `(doc_id, score)` pairs into ranking order and keeps the first
    /// `k`. Fails on repeated doc ids or NaN scores.
    pub fn from_scores(query_id: impl Into<String>, mut scores: Vec<(String, f64)>, k: usize) -> Result<Self> {
        if scores.iter().any(|(_, s)| s.is_nan()) {
            return Err(Error::InvalidRanking("NaN score".into()));
        }
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(w) = {
            let mut ids: Vec<&str> = scores.iter().map(|(d, _)| d.as_str()).collect();
            ids.sort_unstable();
            ids.windows(2).find(|w| w[0] == w[1]).map(|w| w[0].to_string())
        } {
            return Err(Error::InvalidRanking(format!("document {w:?} appears twice")));
        }
        scores.truncate(k);
        Ok(RankedList {
            query_id: query_id.into(),
            entries: scores
                .into_iter()
                .map(|(doc_id, score)| RankedEntry { doc_id, score })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }
}

/// Per-query statistics for every candidate document, i.e. every document
/// containing at least one query token. Build once, then score any number
/// of rankers.
pub struct QueryTable<'a> {
    index: &'a CorpusIndex,
    graph: &'a QueryGraph,
    background: Background,
    views: Vec<DocView>,
}

impl<'a> QueryTable<'a> {
    pub fn new(index: &'a CorpusIndex, graph: &'a QueryGraph) -> Self {
        let mut candidates: Vec<u32> = graph
            .nodes()
            .iter()
            .flat_map(|t| index.postings(t).iter().copied())
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let views = candidates
            .into_iter()
            .map(|o| DocView::new(index, graph, o))
            .collect();
        QueryTable {
            index,
            graph,
            background: Background::new(index, graph),
            views,
        }
    }

    pub fn candidate_count(&self) -> usize {
        self.views.len()
    }

    /// Scores of all candidates, in ascending `doc_id` order.
    pub fn scores(&self, ranker: &Ranker) -> Result<Vec<(&'a str, f64)>> {
        ranker.validate()?;
        self.views
            .iter()
            .map(|v| {
                let s = ranker.score_view(self.graph, &self.background, v)?;
                Ok((self.index.document_at(v.ordinal).doc_id.as_str(), s))
            })
            .collect()
    }

    pub fn rank(&self, ranker: &Ranker, k: usize) -> Result<RankedList> {
        let keep_zero = ranker.model.keeps_zero_scores();
        let scores = self
            .scores(ranker)?
            .into_iter()
            .filter(|&(_, s)| keep_zero || s > 0.0)
            .map(|(d, s)| (d.to_string(), s))
            .collect();
        RankedList::from_scores(self.graph.query_id.clone(), scores, k)
    }
}

/// Top-`k` documents for one query.
pub fn rank(ranker: &Ranker, graph: &QueryGraph, index: &CorpusIndex, k: usize) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::InvalidParameters("cutoff k must be at least 1".into()));
    }
    QueryTable::new(index, graph).rank(ranker, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_reader, Token};
    use crate::hierarchy::biomedical;
    use crate::query::{build_query_graph, Query};

    fn corpus() -> CorpusIndex {
        let data = r#"{"doc_id":"full","fields":{"title":{"words":["gene","therapy"],"entities":[{"id":"G","type":"Gene"},{"id":"D","type":"Disease"}]},"abstract":{"words":["cancer"]}}}
{"doc_id":"partial","fields":{"title":{"words":["gene","screening"]},"abstract":{"words":["cells"],"entities":[{"id":"X","type":"Gene"}]}}}
{"doc_id":"disjoint","fields":{"title":{"words":["protein","folding"]},"abstract":{"words":["structure"],"entities":[{"id":"Y","type":"Chemical"}]}}}"#;
        ingest_reader(data.as_bytes()).unwrap()
    }

    fn graph() -> QueryGraph {
        let q = Query::from_text(
            "q1",
            "gene therapy",
            vec![Token::entity("G", Some("Gene".into())), Token::entity("D", Some("Disease".into()))],
        );
        build_query_graph(&q, &biomedical()).unwrap()
    }

    #[test]
    fn full_coverage_ranks_first_and_disjoint_is_dropped() {
        let index = corpus();
        let r = Ranker::setrank(ParameterSetting::default(), Variant::Full);
        let list = rank(&r, &graph(), &index, 10).unwrap();
        assert_eq!(list.doc_ids().collect::<Vec<_>>(), ["full", "partial"]);
        let list = rank(&r, &graph(), &index, 1).unwrap();
        assert_eq!(list.len(), 1);
        assert!(rank(&r, &graph(), &index, 0).is_err());
    }

    #[test]
    fn table_scores_equal_single_document_scores() {
        let index = corpus();
        let g = graph();
        let table = QueryTable::new(&index, &g);
        let setting = ParameterSetting { jm_lambda: Some(0.4), ..ParameterSetting::default() };
        for model in [
            Model::SetRank { variant: Variant::NoType },
            Model::Bm25 { k1: 1.2, b: 0.75 },
            Model::LmDir,
            Model::LmJm,
        ] {
            let r = Ranker::new(model, setting.clone()).unwrap();
            for (doc, s) in table.scores(&r).unwrap() {
                assert_eq!(s.to_bits(), r.score(&g, &index, doc).unwrap().to_bits());
            }
        }
        let r = Ranker::setrank(setting.clone(), Variant::Full);
        for doc in ["full", "partial", "disjoint"] {
            assert_eq!(
                r.score(&g, &index, doc).unwrap(),
                setrank_score(&g, &index, doc, &setting, Variant::Full).unwrap()
            );
        }
    }

    #[test]
    fn ties_break_by_doc_id() {
        let list = RankedList::from_scores(
            "q",
            vec![("b".into(), 1.0), ("a".into(), 1.0), ("c".into(), 2.0)],
            10,
        )
        .unwrap();
        assert_eq!(list.doc_ids().collect::<Vec<_>>(), ["c", "a", "b"]);
        assert!(RankedList::from_scores("q", vec![("a".into(), 1.0), ("a".into(), 2.0)], 5).is_err());
        assert!(RankedList::from_scores("q", vec![("a".into(), f64::NAN)], 5).is_err());
    }

    #[test]
    fn lm_rankings_keep_negative_scores() {
        let index = corpus();
        let r = Ranker::new(Model::LmDir, ParameterSetting::default()).unwrap();
        let list = rank(&r, &graph(), &index, 10).unwrap();
        assert_eq!(list.len(), 2);
        assert!(list.entries.iter().all(|e| e.score < 0.0));
    }

    #[test]
    fn model_names_and_tags() {
        let bm = Bm25Params::default();
        assert!(Model::from_name("ib", Variant::Full, bm).unwrap_err().to_string().contains("lm-jm"));
        let a = Ranker::setrank(ParameterSetting::default(), Variant::Full);
        let b = Ranker::setrank(ParameterSetting { lambda_e: 0.5, ..ParameterSetting::default() }, Variant::Full);
        assert!(a.tag().starts_with("setrank-"));
        assert_eq!(a.tag().len(), "setrank-".len() + 8);
        assert_ne!(a.tag(), b.tag());
        assert_eq!(a.tag(), a.clone().tag());
        assert!("no-type".parse::<Variant>().is_ok());
        assert!("other".parse::<Variant>().is_err());
    }

    #[test]
    fn invalid_settings_rejected() {
        let bad = ParameterSetting { lambda_e: 1.5, ..ParameterSetting::default() };
        assert!(Ranker::new(Model::LmDir, bad).is_err());
        assert!(Ranker::new(Model::LmJm, ParameterSetting::default()).is_err());
        let json = r#"{"delta_title":1,"delta_abs":2,"mu_title":3,"mu_abs":4,"lambda_e":0.5}"#;
        let s: ParameterSetting = serde_json::from_str(json).unwrap();
        assert_eq!(s.jm_lambda, None);
        assert_eq!(s.mu(), [3.0, 4.0]);
    }
}
