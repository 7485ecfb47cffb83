use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ndcg::{ndcg_at_k, Gain};
use crate::error::{Error, Result};
use crate::rankers::RankedList;

/// Graded judgments keyed by query, then document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels(pub BTreeMap<String, BTreeMap<String, u32>>);

impl Qrels {
    pub fn judgments(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.0.get(query_id)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgments(query_id)
            .and_then(|j| j.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) {
        self.0
            .entry(query_id.to_string())
            .or_default()
            .insert(doc_id.to_string(), grade);
    }
}

/// Ranked lists keyed by query id.
pub type Run = BTreeMap<String, RankedList>;

/// Parses `query_id 0 doc_id grade` lines.
pub fn parse_qrels(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        let [qid, _, doc, grade] = cols[..] else {
            return Err(Error::parse(line_no, "expected `query_id 0 doc_id grade`"));
        };
        let grade: i64 = grade
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad grade {grade:?}")))?;
        if grade < 0 {
            return Err(Error::parse(line_no, format!("negative grade {grade}")));
        }
        qrels.insert(qid, doc, grade as u32);
    }
    Ok(qrels)
}

pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    parse_qrels(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Parses `query_id Q0 doc_id rank score tag` lines. Documents are ordered
/// by descending score with ties by ascending doc id; the rank column is
/// checked for syntax only.
pub fn parse_run(text: &str) -> Result<Run> {
    let mut grouped: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        let [qid, _, doc, rank, score, _tag] = cols[..] else {
            return Err(Error::parse(line_no, "expected `query_id Q0 doc_id rank score tag`"));
        };
        rank.parse::<u64>()
            .map_err(|_| Error::parse(line_no, format!("bad rank {rank:?}")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| !s.is_nan())
            .ok_or_else(|| Error::parse(line_no, format!("bad score {score:?}")))?;
        if !seen.insert((qid.to_string(), doc.to_string())) {
            return Err(Error::parse(line_no, format!("document {doc:?} repeated for query {qid:?}")));
        }
        grouped
            .entry(qid.to_string())
            .or_default()
            .push((doc.to_string(), score));
    }
    grouped
        .into_iter()
        .map(|(qid, scores)| {
            let list = RankedList::from_scores(qid.clone(), scores, usize::MAX)?;
            Ok((qid, list))
        })
        .collect()
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Run> {
    let path = path.as_ref();
    parse_run(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Writes lists in TREC run format with 1-based ranks. Scores use the
/// shortest representation that parses back to the same `f64`.
pub fn write_run<'a, W: Write>(
    out: &mut W,
    lists: impl IntoIterator<Item = &'a RankedList>,
    tag: &str,
) -> std::io::Result<()> {
    for list in lists {
        for (rank, e) in list.entries.iter().enumerate() {
            writeln!(out, "{} Q0 {} {} {} {}", list.query_id, e.doc_id, rank + 1, e.score, tag)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cutoffs: Vec<usize>,
    pub gain: Gain,
    /// NDCG per cutoff for every judged query.
    pub per_query: BTreeMap<String, Vec<f64>>,
    /// Arithmetic mean over judged queries per cutoff.
    pub mean: Vec<f64>,
}

impl EvalReport {
    pub fn table(&self) -> String {
        let mut out = String::from("query");
        for k in &self.cutoffs {
            out.push_str(&format!("\tndcg@{k}"));
        }
        out.push('\n');
        let mut row = |name: &str, vals: &[f64]| {
            out.push_str(name);
            for v in vals {
                out.push_str(&format!("\t{v:.4}"));
            }
            out.push('\n');
        };
        for (q, vals) in &self.per_query {
            row(q, vals);
        }
        row("all", &self.mean);
        out
    }
}

/// NDCG at each cutoff for every query in `qrels`; queries missing from the
/// run score 0.
pub fn evaluate_run(run: &Run, qrels: &Qrels, cutoffs: &[usize], gain: Gain) -> Result<EvalReport> {
    if cutoffs.contains(&0) {
        return Err(Error::InvalidParameters("cutoffs must be at least 1".into()));
    }
    let mut per_query = BTreeMap::new();
    for qid in qrels.query_ids() {
        let docs: Vec<&str> = run.get(qid).map(|l| l.doc_ids().collect()).unwrap_or_default();
        let vals = cutoffs
            .iter()
            .map(|&k| ndcg_at_k(&docs, qrels.judgments(qid), k, gain))
            .collect();
        per_query.insert(qid.to_string(), vals);
    }
    let n = per_query.len().max(1) as f64;
    let mean = (0..cutoffs.len())
        .map(|c| per_query.values().map(|v: &Vec<f64>| v[c]).sum::<f64>() / n)
        .collect();
    Ok(EvalReport {
        cutoffs: cutoffs.to_vec(),
        gain,
        per_query,
        mean,
    })
}
