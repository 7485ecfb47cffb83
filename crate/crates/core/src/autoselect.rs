//! Unsupervised model selection by weighted rank aggregation.
//!
//! For each query every candidate setting produces a top-k list. The lists
//! are merged with a confidence-weighted Borda count, each list's
//! confidence is reset to a softmax of its negative distance to the merged
//! ranking, and the two steps repeat until the merged ranking stops
//! changing. Converged confidences are summed over queries and the setting
//! with the largest total wins.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::query::QueryGraph;
use crate::rankers::{ParameterSetting, QueryTable, RankedList, Ranker, Variant};

pub const DEFAULT_POOL_K: usize = 20;
pub const DEFAULT_MAX_ITER: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    /// Count of discordant pairs.
    #[default]
    Kt,
    /// Discordant pairs weighted by the gap in inverse-log position.
    PosKt,
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kt" => Ok(Distance::Kt),
            "poskt" => Ok(Distance::PosKt),
            other => Err(Error::InvalidParameters(format!(
                "unknown distance {other:?} (expected kt or poskt)"
            ))),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distance::Kt => "kt",
            Distance::PosKt => "poskt",
        })
    }
}

/// A top-k list over part of a document pool. Ranks are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncompleteRanking {
    docs: Vec<String>,
    positions: HashMap<String, usize>,
}

impl IncompleteRanking {
    pub fn new<S: Into<String>>(docs: impl IntoIterator<Item = S>) -> Result<Self> {
        let docs: Vec<String> = docs.into_iter().map(Into::into).collect();
        let mut positions = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if positions.insert(d.clone(), i + 1).is_some() {
                return Err(Error::InvalidRanking(format!("document {d:?} appears twice")));
            }
        }
        Ok(IncompleteRanking { docs, positions })
    }

    pub fn empty() -> Self {
        IncompleteRanking {
            docs: Vec::new(),
            positions: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Rank of `doc`, or `None` when it is not in the list.
    pub fn rank(&self, doc: &str) -> Option<usize> {
        self.positions.get(doc).copied()
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }
}

impl From<&RankedList> for IncompleteRanking {
    fn from(list: &RankedList) -> Self {
        IncompleteRanking::new(list.doc_ids().map(str::to_string)).expect("ranked lists have distinct docs")
    }
}

/// A strict total order over a whole pool, with the Borda scores behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct CompleteRanking {
    order: Vec<String>,
    scores: Vec<f64>,
    positions: HashMap<String, usize>,
}

impl CompleteRanking {
    fn new(order: Vec<String>, scores: Vec<f64>) -> Self {
        let positions = order.iter().enumerate().map(|(i, d)| (d.clone(), i + 1)).collect();
        CompleteRanking {
            order,
            scores,
            positions,
        }
    }

    /// Builds a ranking from an explicit order; scores are left at zero.
    pub fn from_order<S: Into<String>>(order: impl IntoIterator<Item = S>) -> Result<Self> {
        let tau = IncompleteRanking::new(order)?;
        let n = tau.len();
        Ok(CompleteRanking::new(tau.docs, vec![0.0; n]))
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    /// Scores aligned with [`CompleteRanking::order`].
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn position(&self, doc: &str) -> Option<usize> {
        self.positions.get(doc).copied()
    }

    pub fn score_of(&self, doc: &str) -> Option<f64> {
        self.position(doc).map(|p| self.scores[p - 1])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Lists re-expressed as indices into a pool sorted by doc id, so index
/// order doubles as the tie-break order.
struct Pool {
    ids: Vec<String>,
    lists: Vec<Vec<u32>>,
}

impl Pool {
    fn new(lists: &[IncompleteRanking]) -> Self {
        let ids: Vec<String> = lists
            .iter()
            .flat_map(|l| l.docs.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let slot: HashMap<&str, u32> = ids.iter().enumerate().map(|(i, d)| (d.as_str(), i as u32)).collect();
        let lists = lists
            .iter()
            .map(|l| l.docs.iter().map(|d| slot[d.as_str()]).collect())
            .collect();
        Pool { ids, lists }
    }
}

/// Weighted Borda scores and the descending order they induce.
fn borda_indexed(pool_len: usize, lists: &[Vec<u32>], alphas: &[f64]) -> (Vec<u32>, Vec<f64>) {
    let mut scores = vec![0.0; pool_len];
    for (list, &alpha) in lists.iter().zip(alphas) {
        let len = list.len();
        for (i, &d) in list.iter().enumerate() {
            scores[d as usize] += alpha * (len - i) as f64;
        }
    }
    let mut order: Vec<u32> = (0..pool_len as u32).collect();
    order.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    (order, scores)
}

fn positions_of(order: &[u32]) -> Vec<u32> {
    let mut pos = vec![0; order.len()];
    for (i, &d) in order.iter().enumerate() {
        pos[d as usize] = i as u32 + 1;
    }
    pos
}

fn kt_indexed(list: &[u32], pos: &[u32]) -> u64 {
    let mut count = 0;
    for (i, &a) in list.iter().enumerate() {
        for &b in &list[i + 1..] {
            if pos[a as usize] > pos[b as usize] {
                count += 1;
            }
        }
    }
    count
}

fn discount(position: u32) -> f64 {
    1.0 / (1.0 + f64::from(position)).log2()
}

fn pos_kt_indexed(list: &[u32], pos: &[u32]) -> f64 {
    let mut total = 0.0;
    for (i, &a) in list.iter().enumerate() {
        for &b in &list[i + 1..] {
            let (pa, pb) = (pos[a as usize], pos[b as usize]);
            if pa > pb {
                total += discount(pb) - discount(pa);
            }
        }
    }
    total
}

fn distance_indexed(distance: Distance, list: &[u32], pos: &[u32]) -> f64 {
    match distance {
        Distance::Kt => kt_indexed(list, pos) as f64,
        Distance::PosKt => pos_kt_indexed(list, pos),
    }
}

/// Merges `lists` with confidence weights `alphas` (positive, summing to 1).
/// Each list gives `|τ| + 1 − rank` points to each of its documents, scaled
/// by its weight. Equal scores are ordered by ascending doc id.
pub fn borda_aggregate(lists: &[IncompleteRanking], alphas: &[f64]) -> Result<CompleteRanking> {
    if lists.len() != alphas.len() {
        return Err(Error::InvalidParameters(format!(
            "{} lists but {} weights",
            lists.len(),
            alphas.len()
        )));
    }
    if alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameters("weights must be positive".into()));
    }
    let total: f64 = alphas.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameters(format!("weights sum to {total}, not 1")));
    }
    let pool = Pool::new(lists);
    if pool.ids.is_empty() {
        return Err(Error::EmptyPool);
    }
    let (order, scores) = borda_indexed(pool.ids.len(), &pool.lists, alphas);
    let ordered_scores = order.iter().map(|&d| scores[d as usize]).collect();
    let order = order.into_iter().map(|d| pool.ids[d as usize].clone()).collect();
    Ok(CompleteRanking::new(order, ordered_scores))
}

fn reference_positions(tau: &IncompleteRanking, pi: &CompleteRanking) -> Result<Vec<u32>> {
    tau.docs
        .iter()
        .map(|d| {
            pi.position(d)
                .map(|p| p as u32)
                .ok_or_else(|| Error::MissingFromReference(d.clone()))
        })
        .collect()
}

/// Number of pairs ordered one way by `tau` and the other way by `pi`.
pub fn kt_distance(tau: &IncompleteRanking, pi: &CompleteRanking) -> Result<u64> {
    let pos = reference_positions(tau, pi)?;
    // pos is already in tau order, so compare it against itself
    let list: Vec<u32> = (0..pos.len() as u32).collect();
    Ok(kt_indexed(&list, &pos))
}

/// Position-aware variant: each discordant pair `(a, b)` with
/// `pi(a) > pi(b)` costs `1/log2(1 + pi(b)) − 1/log2(1 + pi(a))`.
pub fn pos_kt_distance(tau: &IncompleteRanking, pi: &CompleteRanking) -> Result<f64> {
    let pos = reference_positions(tau, pi)?;
    let list: Vec<u32> = (0..pos.len() as u32).collect();
    Ok(pos_kt_indexed(&list, &pos))
}

/// Softmax of negative distances, shifted by the minimum so large distances
/// cannot overflow. Weights that would underflow to zero are floored at the
/// smallest positive normal `f64` to keep every confidence positive.
pub fn adjust_confidence(distances: &[f64]) -> Vec<f64> {
    let Some(min) = distances.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let weights: Vec<f64> = distances
        .iter()
        .map(|&d| (-(d - min)).exp().max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Converged state for one query.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryOutcome {
    pub alphas: Vec<f64>,
    pub ranking: CompleteRanking,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternates aggregation and confidence adjustment until the aggregated
/// order repeats, or `max_iter` rounds have run. An empty list has
/// distance 0.
pub fn aggregate_query(lists: &[IncompleteRanking], distance: Distance, max_iter: usize) -> Result<QueryOutcome> {
    if lists.is_empty() {
        return Err(Error::InvalidParameters("no rankings to aggregate".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameters("max_iter must be at least 1".into()));
    }
    let pool = Pool::new(lists);
    if pool.ids.is_empty() {
        return Err(Error::EmptyPool);
    }
    let p = lists.len();
    let mut alphas = vec![1.0 / p as f64; p];
    let mut previous: Option<Vec<u32>> = None;
    let mut iterations = 0;
    let (order, scores, converged) = loop {
        iterations += 1;
        let (order, scores) = borda_indexed(pool.ids.len(), &pool.lists, &alphas);
        let pos = positions_of(&order);
        let distances: Vec<f64> = pool
            .lists
            .iter()
            .map(|l| distance_indexed(distance, l, &pos))
            .collect();
        alphas = adjust_confidence(&distances);
        if previous.as_ref() == Some(&order) {
            break (order, scores, true);
        }
        if iterations >= max_iter {
            break (order, scores, false);
        }
        previous = Some(order);
    };
    let ordered_scores = order.iter().map(|&d| scores[d as usize]).collect();
    let order = order.into_iter().map(|d| pool.ids[d as usize].clone()).collect();
    Ok(QueryOutcome {
        alphas,
        ranking: CompleteRanking::new(order, ordered_scores),
        iterations,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub query_id: String,
    pub iterations: usize,
    pub converged: bool,
    /// Settings whose list was empty for this query.
    pub empty_lists: Vec<usize>,
    /// True when every list was empty and the query was left out.
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub distance: Distance,
    pub max_iter: usize,
    /// Accumulated confidence per candidate, in input order.
    pub scores: Vec<f64>,
    /// Candidate with the largest accumulated confidence; ties go to the
    /// earlier one.
    pub winner: usize,
    pub per_query: Vec<QueryTrace>,
}

impl SelectionReport {
    /// Candidate indices from best to worst accumulated confidence.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx
    }
}

/// Runs the selection loop over precomputed lists: `queries[q]` holds one
/// list per candidate, in the same candidate order for every query.
pub fn select_from_rankings(
    queries: &[(String, Vec<IncompleteRanking>)],
    distance: Distance,
    max_iter: usize,
) -> Result<SelectionReport> {
    let p = queries.first().map(|(_, l)| l.len()).unwrap_or(0);
    if p == 0 {
        return Err(Error::InvalidParameters("no candidates to select from".into()));
    }
    if let Some((q, _)) = queries.iter().find(|(_, l)| l.len() != p) {
        return Err(Error::InvalidParameters(format!("query {q:?} has a different number of lists")));
    }
    let outcomes: Vec<Result<Option<QueryOutcome>>> = queries
        .par_iter()
        .map(|(_, lists)| match aggregate_query(lists, distance, max_iter) {
            Ok(o) => Ok(Some(o)),
            Err(Error::EmptyPool) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();

    let mut scores = vec![0.0; p];
    let mut per_query = Vec::with_capacity(queries.len());
    for ((query_id, lists), outcome) in queries.iter().zip(outcomes) {
        let outcome = outcome?;
        let empty_lists = (0..p).filter(|&i| lists[i].is_empty()).collect();
        match outcome {
            Some(o) => {
                for (s, a) in scores.iter_mut().zip(&o.alphas) {
                    *s += a;
                }
                per_query.push(QueryTrace {
                    query_id: query_id.clone(),
                    iterations: o.iterations,
                    converged: o.converged,
                    empty_lists,
                    skipped: false,
                });
            }
            None => per_query.push(QueryTrace {
                query_id: query_id.clone(),
                iterations: 0,
                converged: false,
                empty_lists,
                skipped: true,
            }),
        }
    }
    let mut winner = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[winner] {
            winner = i;
        }
    }
    Ok(SelectionReport {
        distance,
        max_iter,
        scores,
        winner,
        per_query,
    })
}

/// Top-`pool_k` SetRank lists of every setting for every query.
pub fn candidate_rankings(
    index: &CorpusIndex,
    graphs: &[QueryGraph],
    grid: &[ParameterSetting],
    variant: Variant,
    pool_k: usize,
) -> Result<Vec<(String, Vec<IncompleteRanking>)>> {
    if pool_k == 0 {
        return Err(Error::InvalidParameters("pool_k must be at least 1".into()));
    }
    let rankers: Vec<Ranker> = grid.iter().map(|s| Ranker::setrank(s.clone(), variant)).collect();
    for r in &rankers {
        r.validate()?;
    }
    graphs
        .iter()
        .map(|g| {
            let table = QueryTable::new(index, g);
            let lists = rankers
                .par_iter()
                .map(|r| table.rank(r, pool_k).map(|l| IncompleteRanking::from(&l)))
                .collect::<Result<Vec<_>>>()?;
            Ok((g.query_id.clone(), lists))
        })
        .collect()
}

/// Picks the SetRank setting from `grid` that agrees best with the
/// consensus of all settings, without relevance labels.
pub fn select_model(
    index: &CorpusIndex,
    graphs: &[QueryGraph],
    grid: &[ParameterSetting],
    variant: Variant,
    distance: Distance,
    pool_k: usize,
    max_iter: usize,
) -> Result<SelectionReport> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameters("model selection needs at least two settings".into()));
    }
    let lists = candidate_rankings(index, graphs, grid, variant, pool_k)?;
    select_from_rankings(&lists, distance, max_iter)
}
