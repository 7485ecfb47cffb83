use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a relevance grade turns into gain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `2^g − 1`
    #[default]
    Exp,
    /// `g`
    Linear,
}

impl Gain {
    pub fn of(self, grade: u32) -> f64 {
        match self {
            Gain::Exp => 2f64.powi(grade as i32) - 1.0,
            Gain::Linear => f64::from(grade),
        }
    }
}

impl FromStr for Gain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Gain::Exp),
            "linear" => Ok(Gain::Linear),
            other => Err(Error::InvalidParameters(format!(
                "unknown gain {other:?} (expected exp or linear)"
            ))),
        }
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gain::Exp => "exp",
            Gain::Linear => "linear",
        })
    }
}

/// DCG of the first `k` grades, rank `r` discounted by `log2(1 + r)`.
pub fn dcg(grades: &[u32], k: usize, gain: Gain) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain.of(g) / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG@k of a ranked list of doc ids against one query's judgments.
/// Unjudged documents have grade 0; a query without any positive grade
/// scores 0.
pub fn ndcg_at_k<S: AsRef<str>>(
    ranked: &[S],
    judgments: Option<&BTreeMap<String, u32>>,
    k: usize,
    gain: Gain,
) -> f64 {
    let Some(judgments) = judgments else {
        return 0.0;
    };
    let mut ideal: Vec<u32> = judgments.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal, k, gain);
    if idcg <= 0.0 {
        return 0.0;
    }
    let grades: Vec<u32> = ranked
        .iter()
        .take(k)
        .map(|d| judgments.get(d.as_ref()).copied().unwrap_or(0))
        .collect();
    dcg(&grades, k, gain) / idcg
}
