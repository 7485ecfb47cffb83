//! Python bindings for the `setrank` crate.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use setrank::autoselect::{self, CompleteRanking, Distance, IncompleteRanking};
use setrank::evaluation::{self, Gain};
use setrank::query::{build_query_graph, EdgeKind};
use setrank::rankers::{self, Bm25Params};
use setrank::{Error, Model, Token, Variant};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn parse_gain(s: &str) -> PyResult<Gain> {
    s.parse::<Gain>().map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Immutable corpus statistics.
#[pyclass(module = "setrank_py", frozen, skip_from_py_object)]
struct CorpusIndex {
    inner: setrank::CorpusIndex,
    hierarchy: Option<setrank::TypeHierarchy>,
}

#[pymethods]
impl CorpusIndex {
    /// Builds an index from a JSON-lines corpus file.
    #[staticmethod]
    fn from_jsonl(path: &str) -> PyResult<Self> {
        Ok(CorpusIndex {
            inner: setrank::corpus::ingest_corpus(path).map_err(py_err)?,
            hierarchy: None,
        })
    }

    /// Builds an index from JSON corpus records, one string per document.
    #[staticmethod]
    fn from_records(records: Vec<String>) -> PyResult<Self> {
        Ok(CorpusIndex {
            inner: setrank::corpus::ingest_reader(records.join("\n").as_bytes()).map_err(py_err)?,
            hierarchy: None,
        })
    }

    /// Loads an index written by `save` or the `setrank index` command.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (inner, hierarchy) = setrank::store::load_index(path).map_err(py_err)?;
        Ok(CorpusIndex { inner, hierarchy })
    }

    #[pyo3(signature = (path, hierarchy=None))]
    fn save(&self, path: &str, hierarchy: Option<&TypeHierarchy>) -> PyResult<()> {
        let h = hierarchy.map(|h| &h.inner).or(self.hierarchy.as_ref());
        setrank::store::save_index(path, &self.inner, h).map_err(py_err)
    }

    /// Hierarchy stored with the index, if any.
    fn hierarchy(&self) -> Option<TypeHierarchy> {
        self.hierarchy.clone().map(|inner| TypeHierarchy { inner })
    }

    #[getter]
    fn doc_count(&self) -> usize {
        self.inner.doc_count()
    }

    fn doc_ids(&self) -> Vec<String> {
        self.inner.documents().iter().map(|d| d.doc_id.clone()).collect()
    }

    /// Occurrences of a word (`kind="word"`) or entity in one field.
    #[pyo3(signature = (doc_id, field, key, kind="word"))]
    fn raw_count(&self, doc_id: &str, field: &str, key: &str, kind: &str) -> PyResult<u32> {
        let token = token(kind, key, None)?;
        self.inner.raw_count(doc_id, parse(field)?, &token).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.doc_count()
    }
}

fn token(kind: &str, key: &str, type_id: Option<String>) -> PyResult<Token> {
    match kind {
        "word" => Ok(Token::word(key)),
        "entity" => Ok(Token::entity(key, type_id)),
        other => Err(PyValueError::new_err(format!("kind must be word or entity, got {other:?}"))),
    }
}

/// Rooted tree of entity types.
#[pyclass(module = "setrank_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct TypeHierarchy {
    inner: setrank::TypeHierarchy,
}

#[pymethods]
impl TypeHierarchy {
    /// Five biomedical types directly below `Thing`.
    #[staticmethod]
    fn biomedical() -> Self {
        TypeHierarchy {
            inner: setrank::hierarchy::biomedical(),
        }
    }

    /// Parses `child<TAB>parent` lines; the root line is `root<TAB>-`.
    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        Ok(TypeHierarchy {
            inner: setrank::TypeHierarchy::parse_tsv(text).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(TypeHierarchy {
            inner: setrank::TypeHierarchy::load(path).map_err(py_err)?,
        })
    }

    #[getter]
    fn root(&self) -> String {
        self.inner.root().to_string()
    }

    fn lca(&self, a: &str, b: &str) -> PyResult<String> {
        self.inner.lca(a, b).map(str::to_string).map_err(py_err)
    }

    fn depth(&self, type_id: &str) -> Option<u32> {
        self.inner.depth(type_id)
    }

    /// Entity edge weight for two (possibly missing) types.
    #[pyo3(signature = (a=None, b=None))]
    fn edge_weight(&self, a: Option<&str>, b: Option<&str>) -> u32 {
        self.inner.entity_edge_weight(a, b)
    }

    fn to_tsv(&self) -> String {
        self.inner.to_tsv()
    }
}

/// Word and entity nodes of one query with their edges.
#[pyclass(module = "setrank_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct QueryGraph {
    inner: setrank::QueryGraph,
}

#[pymethods]
impl QueryGraph {
    /// `entities` holds `(id, type)` pairs; the type may be None. An explicit
    /// `words` list takes precedence over `text`.
    #[new]
    #[pyo3(signature = (query_id, text="", entities=Vec::new(), hierarchy=None, words=None))]
    fn new(
        query_id: &str,
        text: &str,
        entities: Vec<(String, Option<String>)>,
        hierarchy: Option<&TypeHierarchy>,
        words: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let entities = entities.into_iter().map(|(id, t)| Token::entity(id, t)).collect();
        let mut query = setrank::Query::from_text(query_id, text, entities);
        if let Some(w) = words {
            query.words = setrank::text::normalize_words(&w);
        }
        let fallback;
        let h = match hierarchy {
            Some(h) => &h.inner,
            None => {
                fallback = setrank::hierarchy::biomedical();
                &fallback
            }
        };
        Ok(QueryGraph {
            inner: build_query_graph(&query, h).map_err(py_err)?,
        })
    }

    /// Reads every query of a JSON-lines file.
    #[staticmethod]
    #[pyo3(signature = (path, hierarchy=None))]
    fn load_all(path: &str, hierarchy: Option<&TypeHierarchy>) -> PyResult<Vec<QueryGraph>> {
        let h = hierarchy.map(|h| h.inner.clone()).unwrap_or_else(setrank::hierarchy::biomedical);
        setrank::query::load_queries(path)
            .map_err(py_err)?
            .iter()
            .map(|q| {
                Ok(QueryGraph {
                    inner: build_query_graph(q, &h).map_err(py_err)?,
                })
            })
            .collect()
    }

    #[getter]
    fn query_id(&self) -> String {
        self.inner.query_id.clone()
    }

    /// `(kind, key)` per node.
    fn nodes(&self) -> Vec<(&'static str, String)> {
        self.inner
            .nodes()
            .iter()
            .map(|t| (if t.is_entity() { "entity" } else { "word" }, t.key.clone()))
            .collect()
    }

    /// `(a, b, kind, weight)` per edge, with node indices `a < b`.
    fn edges(&self) -> Vec<(usize, usize, &'static str, f64)> {
        self.inner
            .edges()
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    EdgeKind::WordWord => "word-word",
                    EdgeKind::EntityEntity => "entity-entity",
                };
                (e.a, e.b, kind, e.weight)
            })
            .collect()
    }
}

/// Field weights, Dirichlet scales and entity weight for one ranker.
#[pyclass(module = "setrank_py", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct ParameterSetting {
    delta_title: f64,
    delta_abs: f64,
    mu_title: f64,
    mu_abs: f64,
    lambda_e: f64,
    jm_lambda: Option<f64>,
}

#[pymethods]
impl ParameterSetting {
    #[new]
    #[pyo3(signature = (delta_title=20.0, delta_abs=5.0, mu_title=1000.0, mu_abs=1000.0, lambda_e=0.7, jm_lambda=None))]
    fn new(delta_title: f64, delta_abs: f64, mu_title: f64, mu_abs: f64, lambda_e: f64, jm_lambda: Option<f64>) -> Self {
        ParameterSetting {
            delta_title,
            delta_abs,
            mu_title,
            mu_abs,
            lambda_e,
            jm_lambda,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "ParameterSetting(delta_title={}, delta_abs={}, mu_title={}, mu_abs={}, lambda_e={}, jm_lambda={:?})",
            self.delta_title, self.delta_abs, self.mu_title, self.mu_abs, self.lambda_e, self.jm_lambda
        )
    }
}

impl From<&ParameterSetting> for setrank::ParameterSetting {
    fn from(p: &ParameterSetting) -> Self {
        setrank::ParameterSetting {
            delta_title: p.delta_title,
            delta_abs: p.delta_abs,
            mu_title: p.mu_title,
            mu_abs: p.mu_abs,
            lambda_e: p.lambda_e,
            jm_lambda: p.jm_lambda,
        }
    }
}

fn settings(grid: &[PyRef<'_, ParameterSetting>]) -> Vec<setrank::ParameterSetting> {
    grid.iter().map(|p| setrank::ParameterSetting::from(&**p)).collect()
}

#[pyfunction]
#[pyo3(signature = (graph, index, doc_id, setting, variant="full"))]
fn setrank_score(
    graph: &QueryGraph,
    index: &CorpusIndex,
    doc_id: &str,
    setting: &ParameterSetting,
    variant: &str,
) -> PyResult<f64> {
    rankers::setrank_score(&graph.inner, &index.inner, doc_id, &setting.into(), parse(variant)?).map_err(py_err)
}

/// Top-`k` `(doc_id, score)` pairs for one query.
#[pyfunction]
#[pyo3(signature = (graph, index, setting, model="setrank", variant="full", k=20, k1=1.2, b=0.75))]
#[allow(clippy::too_many_arguments)]
fn rank(
    graph: &QueryGraph,
    index: &CorpusIndex,
    setting: &ParameterSetting,
    model: &str,
    variant: &str,
    k: usize,
    k1: f64,
    b: f64,
) -> PyResult<Vec<(String, f64)>> {
    let model = Model::from_name(model, parse(variant)?, Bm25Params { k1, b }).map_err(py_err)?;
    let ranker = setrank::Ranker::new(model, setting.into()).map_err(py_err)?;
    let list = rankers::rank(&ranker, &graph.inner, &index.inner, k).map_err(py_err)?;
    Ok(list.entries.into_iter().map(|e| (e.doc_id, e.score)).collect())
}

#[pyfunction]
#[pyo3(signature = (ranked, judgments, k, gain="exp"))]
fn ndcg_at_k(ranked: Vec<String>, judgments: BTreeMap<String, u32>, k: usize, gain: &str) -> PyResult<f64> {
    Ok(evaluation::ndcg_at_k(&ranked, Some(&judgments), k, parse_gain(gain)?))
}

fn rankings(lists: Vec<Vec<String>>) -> PyResult<Vec<IncompleteRanking>> {
    lists
        .into_iter()
        .map(|l| IncompleteRanking::new(l).map_err(py_err))
        .collect()
}

/// Weighted Borda merge; returns `(doc_id, score)` in aggregated order.
#[pyfunction]
fn borda_aggregate(lists: Vec<Vec<String>>, alphas: Vec<f64>) -> PyResult<Vec<(String, f64)>> {
    let pi = autoselect::borda_aggregate(&rankings(lists)?, &alphas).map_err(py_err)?;
    Ok(pi.order().iter().cloned().zip(pi.scores().iter().copied()).collect())
}

#[pyfunction]
fn kt_distance(tau: Vec<String>, pi: Vec<String>) -> PyResult<u64> {
    let tau = IncompleteRanking::new(tau).map_err(py_err)?;
    let pi = CompleteRanking::from_order(pi).map_err(py_err)?;
    autoselect::kt_distance(&tau, &pi).map_err(py_err)
}

#[pyfunction]
fn pos_kt_distance(tau: Vec<String>, pi: Vec<String>) -> PyResult<f64> {
    let tau = IncompleteRanking::new(tau).map_err(py_err)?;
    let pi = CompleteRanking::from_order(pi).map_err(py_err)?;
    autoselect::pos_kt_distance(&tau, &pi).map_err(py_err)
}

#[pyfunction]
fn adjust_confidence(distances: Vec<f64>) -> Vec<f64> {
    autoselect::adjust_confidence(&distances)
}

fn distance(name: &str) -> PyResult<Distance> {
    parse(name)
}

fn report_dict<'py>(py: Python<'py>, r: &autoselect::SelectionReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("winner", r.winner)?;
    d.set_item("scores", r.scores.clone())?;
    d.set_item("distance", r.distance.to_string())?;
    let traces: Vec<(String, usize, bool, bool)> = r
        .per_query
        .iter()
        .map(|t| (t.query_id.clone(), t.iterations, t.converged, t.skipped))
        .collect();
    d.set_item("per_query", traces)?;
    Ok(d)
}

/// Runs selection over precomputed lists: one entry per query, each a list
/// of top-k doc id lists in candidate order.
#[pyfunction]
#[pyo3(signature = (queries, distance="kt", max_iter=20))]
fn select_from_rankings<'py>(
    py: Python<'py>,
    queries: Vec<Vec<Vec<String>>>,
    distance: &str,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let data = queries
        .into_iter()
        .enumerate()
        .map(|(i, lists)| Ok((format!("q{i}"), rankings(lists)?)))
        .collect::<PyResult<Vec<_>>>()?;
    let dist = self::distance(distance)?;
    let report = py
        .detach(|| autoselect::select_from_rankings(&data, dist, max_iter))
        .map_err(py_err)?;
    report_dict(py, &report)
}

/// Picks a SetRank setting from `grid` without relevance labels.
#[pyfunction]
#[pyo3(signature = (index, graphs, grid, variant="full", distance="kt", pool_k=20, max_iter=20))]
#[allow(clippy::too_many_arguments)]
fn select_model<'py>(
    py: Python<'py>,
    index: &CorpusIndex,
    graphs: Vec<PyRef<'py, QueryGraph>>,
    grid: Vec<PyRef<'py, ParameterSetting>>,
    variant: &str,
    distance: &str,
    pool_k: usize,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let graphs: Vec<setrank::QueryGraph> = graphs.iter().map(|g| g.inner.clone()).collect();
    let grid = settings(&grid);
    let variant: Variant = parse(variant)?;
    let dist = self::distance(distance)?;
    let report = py
        .detach(|| autoselect::select_model(&index.inner, &graphs, &grid, variant, dist, pool_k, max_iter))
        .map_err(py_err)?;
    report_dict(py, &report)
}

#[pymodule]
fn setrank_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CorpusIndex>()?;
    m.add_class::<TypeHierarchy>()?;
    m.add_class::<QueryGraph>()?;
    m.add_class::<ParameterSetting>()?;
    m.add_function(wrap_pyfunction!(setrank_score, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(ndcg_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(borda_aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(kt_distance, m)?)?;
    m.add_function(wrap_pyfunction!(pos_kt_distance, m)?)?;
    m.add_function(wrap_pyfunction!(adjust_confidence, m)?)?;
    m.add_function(wrap_pyfunction!(select_from_rankings, m)?)?;
    m.add_function(wrap_pyfunction!(select_model, m)?)?;
    Ok(())
}
