//! K-fold cross-validated grid search over parameter settings.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ndcg::{ndcg_at_k, Gain};
use super::trec::Qrels;
use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::query::QueryGraph;
use crate::rankers::{Model, ParameterSetting, QueryTable, Ranker};

/// Deterministic assignment of queries to folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_count: usize,
    pub seed: u64,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    /// Shuffles the sorted query ids with a seeded generator and deals them
    /// round-robin, so fold sizes differ by at most one.
    pub fn new<S: AsRef<str>>(query_ids: &[S], fold_count: usize, seed: u64) -> Result<Self> {
        let mut ids: Vec<String> = query_ids.iter().map(|q| q.as_ref().to_string()).collect();
        ids.sort();
        ids.dedup();
        if fold_count < 2 || fold_count > ids.len() {
            return Err(Error::InvalidParameters(format!(
                "need 2 <= folds <= {} queries, got {fold_count}",
                ids.len()
            )));
        }
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let assignment = ids
            .into_iter()
            .enumerate()
            .map(|(i, q)| (q, i % fold_count))
            .collect();
        Ok(FoldPlan {
            fold_count,
            seed,
            assignment,
        })
    }

    pub fn fold_of(&self, query_id: &str) -> Option<usize> {
        self.assignment.get(query_id).copied()
    }

    pub fn fold_queries(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(q, _)| q.as_str())
            .collect()
    }
}

/// NDCG of every grid point on every query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridScores {
    pub query_ids: Vec<String>,
    pub cutoffs: Vec<usize>,
    /// `[setting][query][cutoff]`
    pub values: Vec<Vec<Vec<f64>>>,
}

impl GridScores {
    fn mean(&self, setting: usize, queries: &[usize], cutoff: usize) -> f64 {
        if queries.is_empty() {
            return 0.0;
        }
        queries
            .iter()
            .map(|&q| self.values[setting][q][cutoff])
            .sum::<f64>()
            / queries.len() as f64
    }

    /// Index of the best setting on `queries`; ties go to the earlier one.
    fn best(&self, queries: &[usize], cutoff: usize) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for s in 0..self.values.len() {
            let m = self.mean(s, queries, cutoff);
            if m > best.1 {
                best = (s, m);
            }
        }
        best
    }
}

/// Scores every grid point on every query.
pub fn score_grid(
    index: &CorpusIndex,
    graphs: &[QueryGraph],
    qrels: &Qrels,
    model: Model,
    grid: &[ParameterSetting],
    cutoffs: &[usize],
    gain: Gain,
) -> Result<GridScores> {
    if grid.is_empty() {
        return Err(Error::InvalidParameters("empty parameter grid".into()));
    }
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(Error::InvalidParameters("cutoffs must be non-empty and at least 1".into()));
    }
    let depth = *cutoffs.iter().max().expect("non-empty");
    let rankers = grid
        .iter()
        .map(|s| Ranker::new(model, s.clone()))
        .collect::<Result<Vec<_>>>()?;
    let tables: Vec<QueryTable<'_>> = graphs.iter().map(|g| QueryTable::new(index, g)).collect();
    let values = rankers
        .par_iter()
        .map(|ranker| {
            tables
                .iter()
                .zip(graphs)
                .map(|(table, g)| {
                    let list = table.rank(ranker, depth)?;
                    let docs: Vec<&str> = list.doc_ids().collect();
                    Ok(cutoffs
                        .iter()
                        .map(|&k| ndcg_at_k(&docs, qrels.judgments(&g.query_id), k, gain))
                        .collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridScores {
        query_ids: graphs.iter().map(|g| g.query_id.clone()).collect(),
        cutoffs: cutoffs.to_vec(),
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_queries: Vec<String>,
    pub selected: usize,
    pub setting: ParameterSetting,
    /// Mean objective NDCG of the selected setting on the training folds.
    pub validation_ndcg: f64,
    /// Mean NDCG per cutoff on the held-out fold.
    pub test_mean: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: Model,
    pub cutoffs: Vec<usize>,
    pub objective_cutoff: usize,
    pub gain: Gain,
    pub plan: FoldPlan,
    pub folds: Vec<FoldResult>,
    /// Every query scored by the setting chosen without it.
    pub holdout_per_query: BTreeMap<String, Vec<f64>>,
    pub holdout_mean: Vec<f64>,
    /// Best setting when all queries are used for selection.
    pub full_data_winner: usize,
    pub full_data_setting: ParameterSetting,
    pub full_data_ndcg: f64,
}

/// For each fold, picks the grid point with the highest mean NDCG at
/// `objective_cutoff` over the other folds and reports it on the held-out
/// fold. Only queries in `plan` take part.
#[allow(clippy::too_many_arguments)]
pub fn grid_search_cv(
    index: &CorpusIndex,
    graphs: &[QueryGraph],
    qrels: &Qrels,
    model: Model,
    grid: &[ParameterSetting],
    plan: &FoldPlan,
    objective_cutoff: usize,
    cutoffs: &[usize],
    gain: Gain,
) -> Result<CvReport> {
    let by_id: BTreeMap<&str, &QueryGraph> = graphs.iter().map(|g| (g.query_id.as_str(), g)).collect();
    let selected: Vec<QueryGraph> = plan
        .assignment
        .keys()
        .map(|q| {
            by_id
                .get(q.as_str())
                .map(|g| (*g).clone())
                .ok_or_else(|| Error::InvalidParameters(format!("fold plan names unknown query {q:?}")))
        })
        .collect::<Result<_>>()?;

    let mut all_cutoffs = cutoffs.to_vec();
    if !all_cutoffs.contains(&objective_cutoff) {
        all_cutoffs.push(objective_cutoff);
    }
    let objective = all_cutoffs.iter().position(|&k| k == objective_cutoff).expect("present");
    let scores = score_grid(index, &selected, qrels, model, grid, &all_cutoffs, gain)?;

    let fold_of: Vec<usize> = scores
        .query_ids
        .iter()
        .map(|q| plan.fold_of(q).expect("plan query"))
        .collect();
    let mut folds = Vec::with_capacity(plan.fold_count);
    let mut holdout_per_query = BTreeMap::new();
    for fold in 0..plan.fold_count {
        let train: Vec<usize> = (0..fold_of.len()).filter(|&q| fold_of[q] != fold).collect();
        let test: Vec<usize> = (0..fold_of.len()).filter(|&q| fold_of[q] == fold).collect();
        let (best, validation_ndcg) = scores.best(&train, objective);
        for &q in &test {
            let vals = scores.values[best][q][..cutoffs.len()].to_vec();
            holdout_per_query.insert(scores.query_ids[q].clone(), vals);
        }
        folds.push(FoldResult {
            fold,
            test_queries: test.iter().map(|&q| scores.query_ids[q].clone()).collect(),
            selected: best,
            setting: grid[best].clone(),
            validation_ndcg,
            test_mean: (0..cutoffs.len()).map(|c| scores.mean(best, &test, c)).collect(),
        });
    }
    let n = holdout_per_query.len().max(1) as f64;
    let holdout_mean = (0..cutoffs.len())
        .map(|c| holdout_per_query.values().map(|v: &Vec<f64>| v[c]).sum::<f64>() / n)
        .collect();
    let everyone: Vec<usize> = (0..fold_of.len()).collect();
    let (full_data_winner, full_data_ndcg) = scores.best(&everyone, objective);

    Ok(CvReport {
        model,
        cutoffs: cutoffs.to_vec(),
        objective_cutoff,
        gain,
        plan: plan.clone(),
        folds,
        holdout_per_query,
        holdout_mean,
        full_data_winner,
        full_data_setting: grid[full_data_winner].clone(),
        full_data_ndcg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_and_balance() {
        let ids: Vec<String> = (0..23).map(|i| format!("q{i}")).collect();
        let plan = FoldPlan::new(&ids, 5, 42).unwrap();
        assert_eq!(plan.assignment.len(), 23);
        let sizes: Vec<usize> = (0..5).map(|f| plan.fold_queries(f).len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 23);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn folds_are_deterministic_and_order_free() {
        let ids: Vec<String> = (0..12).map(|i| format!("q{i}")).collect();
        let mut rev = ids.clone();
        rev.reverse();
        assert_eq!(FoldPlan::new(&ids, 3, 7).unwrap(), FoldPlan::new(&rev, 3, 7).unwrap());
        assert_ne!(FoldPlan::new(&ids, 3, 7).unwrap(), FoldPlan::new(&ids, 3, 8).unwrap());
        assert!(FoldPlan::new(&ids, 1, 7).is_err());
        assert!(FoldPlan::new(&ids[..2], 3, 7).is_err());
    }

    #[test]
    fn best_prefers_first_on_ties() {
        let scores = GridScores {
            query_ids: vec!["a".into(), "b".into()],
            cutoffs: vec![20],
            values: vec![vec![vec![0.5], vec![0.5]], vec![vec![1.0], vec![0.0]], vec![vec![0.8], vec![0.2]]],
        };
        assert_eq!(scores.best(&[0, 1], 0).0, 0);
        assert_eq!(scores.best(&[0], 0).0, 1);
        assert_eq!(scores.best(&[1], 0).0, 0);
    }
}
