//! Smoothed token probabilities.
//!
//! Each field gets its own Dirichlet-smoothed estimate against that field's
//! collection model; the document model is the field mixture weighted by
//! normalized field weights. Words and entities share this code path, with
//! statistics drawn from the token kind's own namespace.

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, Document, Field, Token};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    /// Dirichlet scale per field, indexed by [`Field::index`].
    pub mu: [f64; 2],
    /// Field weights, indexed by [`Field::index`].
    pub delta: [f64; 2],
    /// Jelinek-Mercer coefficient, only used by the LM-JM baseline.
    pub jm_lambda: Option<f64>,
}

impl SmoothingParams {
    pub fn new(mu: [f64; 2], delta: [f64; 2]) -> Result<Self> {
        let params = SmoothingParams {
            mu,
            delta,
            jm_lambda: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.iter().all(|&m| m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "dirichlet mu must be positive, got {:?}",
                self.mu
            )));
        }
        validate_field_weights(self.delta)?;
        if let Some(l) = self.jm_lambda {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::InvalidParameters(format!(
                    "jelinek-mercer lambda must lie in (0, 1), got {l}"
                )));
            }
        }
        Ok(())
    }

    pub fn field_weights(&self) -> [f64; 2] {
        normalized_weights(self.delta)
    }
}

pub(crate) fn validate_field_weights(delta: [f64; 2]) -> Result<()> {
    if delta.iter().any(|&d| !d.is_finite() || d < 0.0) || delta.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameters(format!(
            "field weights must be non-negative with a positive sum, got {delta:?}"
        )));
    }
    Ok(())
}

/// `δ_j / Σδ` for each field.
pub fn normalized_weights(delta: [f64; 2]) -> [f64; 2] {
    let total = delta[0] + delta[1];
    [delta[0] / total, delta[1] / total]
}

/// Dirichlet-smoothed estimate from raw counts.
pub fn dirichlet(
    doc_count: f64,
    doc_length: f64,
    collection_count: f64,
    collection_length: f64,
    mu: f64,
) -> f64 {
    (doc_count + mu * collection_count / collection_length) / (doc_length + mu)
}

/// Jelinek-Mercer estimate; an empty field contributes only the background.
pub fn jelinek_mercer(
    doc_count: f64,
    doc_length: f64,
    collection_count: f64,
    collection_length: f64,
    lambda: f64,
) -> f64 {
    let document = if doc_length > 0.0 {
        doc_count / doc_length
    } else {
        0.0
    };
    (1.0 - lambda) * document + lambda * collection_count / collection_length
}

/// Weighted field mixture. Fields with zero weight are skipped entirely so
/// a degenerate mixture returns the other field's value exactly.
pub fn mixture(field_probs: [f64; 2], weights: [f64; 2]) -> f64 {
    let mut p = 0.0;
    for (prob, w) in field_probs.into_iter().zip(weights) {
        if w > 0.0 {
            p += w * prob;
        }
    }
    p
}

pub(crate) fn field_prob_in(
    index: &CorpusIndex,
    doc: &Document,
    field: Field,
    token: &Token,
    mu: f64,
) -> Result<f64> {
    let stats = index.collection_stats(field, token.kind);
    if stats.length == 0 {
        return Err(Error::NoBackgroundModel {
            field,
            kind: token.kind,
        });
    }
    let bag = doc.field(field);
    Ok(dirichlet(
        f64::from(bag.count(token)),
        bag.length(token.kind) as f64,
        stats.count(&token.key) as f64,
        stats.length as f64,
        mu,
    ))
}

/// `p(t | d_{i,j})` for a single field.
pub fn field_token_prob(
    index: &CorpusIndex,
    doc_id: &str,
    field: Field,
    token: &Token,
    mu: f64,
) -> Result<f64> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::InvalidParameters(format!("mu must be positive, got {mu}")));
    }
    let doc = index.document(doc_id)?;
    field_prob_in(index, doc, field, token, mu)
}

/// `p(t | d_i)`, the field mixture of Dirichlet estimates.
pub fn doc_token_prob(
    index: &CorpusIndex,
    doc_id: &str,
    token: &Token,
    params: &SmoothingParams,
) -> Result<f64> {
    params.validate()?;
    let doc = index.document(doc_id)?;
    let weights = params.field_weights();
    let mut probs = [0.0; 2];
    for field in Field::ALL {
        if weights[field.index()] > 0.0 {
            probs[field.index()] =
                field_prob_in(index, doc, field, token, params.mu[field.index()])?;
        }
    }
    Ok(mixture(probs, weights))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::corpus::{ingest_reader, TokenKind};

    fn corpus() -> CorpusIndex {
        let data = r#"{"doc_id":"a","fields":{"title":{"words":["deep","learning","deep"],"entities":[{"id":"E1"}]},"abstract":{"words":["gene","deep"],"entities":[{"id":"E2"},{"id":"E1"}]}}}
{"doc_id":"b","fields":{"title":{"words":["gene","expression"],"entities":[{"id":"E2"}]},"abstract":{"words":["learning"],"entities":[{"id":"E3"}]}}}
{"doc_id":"c","fields":{"title":{"words":["protein"]},"abstract":{"words":["gene","gene","protein"],"entities":[{"id":"E3"}]}}}"#;
        ingest_reader(data.as_bytes()).unwrap()
    }

    #[test]
    fn dirichlet_hand_value() {
        let p = dirichlet(1.0, 5.0, 10.0, 10_000.0, 1000.0);
        assert_relative_eq!(p, 2.0 / 1005.0, max_relative = 1e-15);
        assert_relative_eq!(p, 0.001_990_05, epsilon = 1e-8);
    }

    #[test]
    fn absent_everywhere_is_zero() {
        let index = corpus();
        let p = field_token_prob(&index, "a", Field::Title, &Token::word("zebra"), 1000.0).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn large_mu_tends_to_collection_mle() {
        let data = r#"{"doc_id":"only","fields":{"title":{"words":["x","y","y","z"]}}}"#;
        let index = ingest_reader(data.as_bytes()).unwrap();
        let p = field_token_prob(&index, "only", Field::Title, &Token::word("y"), 1e9).unwrap();
        assert!((p - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mixture_hand_value() {
        let w = normalized_weights([20.0, 5.0]);
        assert_relative_eq!(w[0], 0.8);
        assert_relative_eq!(mixture([0.002, 0.01], w), 0.0036, max_relative = 1e-12);
        // equal field values are a fixed point of the mixture
        assert_relative_eq!(mixture([0.3, 0.3], normalized_weights([7.0, 2.0])), 0.3, max_relative = 1e-15);
    }

    #[test]
    fn zero_abstract_weight_is_title_only() {
        let index = corpus();
        let params = SmoothingParams::new([500.0, 800.0], [3.0, 0.0]).unwrap();
        for token in [Token::word("gene"), Token::entity("E2", None)] {
            for doc in ["a", "b", "c"] {
                let mixed = doc_token_prob(&index, doc, &token, &params).unwrap();
                let title = field_token_prob(&index, doc, Field::Title, &token, 500.0).unwrap();
                assert_eq!(mixed, title);
            }
        }
    }

    #[test]
    fn missing_background_is_an_error() {
        let data = r#"{"doc_id":"d","fields":{"title":{"words":["x"]}}}"#;
        let index = ingest_reader(data.as_bytes()).unwrap();
        let err = field_token_prob(&index, "d", Field::Title, &Token::entity("E", None), 10.0);
        assert!(matches!(
            err,
            Err(Error::NoBackgroundModel { field: Field::Title, kind: TokenKind::Entity })
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SmoothingParams::new([0.0, 1.0], [1.0, 1.0]).is_err());
        assert!(SmoothingParams::new([1.0, 1.0], [0.0, 0.0]).is_err());
        assert!(SmoothingParams::new([1.0, 1.0], [-1.0, 2.0]).is_err());
        let mut p = SmoothingParams::new([1.0, 1.0], [1.0, 0.0]).unwrap();
        p.jm_lambda = Some(1.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn distributions_sum_to_one() {
        let index = corpus();
        let params = SmoothingParams::new([3.0, 7.0], [2.0, 1.0]).unwrap();
        for doc in index.documents() {
            for kind in TokenKind::ALL {
                let mut vocab = std::collections::BTreeSet::new();
                for field in Field::ALL {
                    let stats = index.collection_stats(field, kind);
                    let mut total = 0.0;
                    for key in stats.counts.keys() {
                        let t = Token { kind, key: key.clone(), type_id: None };
                        total += field_token_prob(&index, &doc.doc_id, field, &t, params.mu[field.index()]).unwrap();
                        vocab.insert(key.clone());
                    }
                    assert!((total - 1.0).abs() < 1e-12, "{field} {kind}: {total}");
                }
                let total: f64 = vocab
                    .into_iter()
                    .map(|key| Token { kind, key, type_id: None })
                    .map(|t| doc_token_prob(&index, &doc.doc_id, &t, &params).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolates_between_document_and_collection() {
        let index = corpus();
        for doc in index.documents() {
            for field in Field::ALL {
                let bag = doc.field(field);
                for (key, &n) in &bag.words {
                    let stats = index.collection_stats(field, TokenKind::Word);
                    let doc_mle = f64::from(n) / bag.word_length as f64;
                    let coll_mle = stats.count(key) as f64 / stats.length as f64;
                    let p = field_token_prob(&index, &doc.doc_id, field, &Token::word(key.clone()), 2.5).unwrap();
                    let (lo, hi) = if doc_mle < coll_mle { (doc_mle, coll_mle) } else { (coll_mle, doc_mle) };
                    assert!(p >= lo - 1e-15 && p <= hi + 1e-15);
                }
            }
        }
    }

    #[test]
    fn jelinek_mercer_limits() {
        assert_relative_eq!(jelinek_mercer(2.0, 4.0, 10.0, 100.0, 0.5), 0.5 * 0.5 + 0.5 * 0.1);
        assert_relative_eq!(jelinek_mercer(0.0, 0.0, 10.0, 100.0, 0.3), 0.03);
    }
}
