//! Graded-relevance evaluation and supervised parameter tuning.

mod cv;
mod ndcg;
mod trec;

pub use cv::{grid_search_cv, score_grid, CvReport, FoldPlan, FoldResult, GridScores};
pub use ndcg::{dcg, ndcg_at_k, Gain};
pub use trec::{
    evaluate_run, load_qrels, load_run, parse_qrels, parse_run, write_run, EvalReport, Qrels, Run,
};
