//! Word normalization shared by documents and queries.

/// Stopwords removed from word tokens at ingest and query time.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have", "if",
    "in", "into", "is", "it", "its", "no", "not", "of", "on", "or", "such", "that", "the",
    "their", "then", "there", "these", "they", "this", "to", "was", "were", "will", "with",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word).is_ok()
}

/// Lowercases `text`, splits on every non-alphanumeric character and drops
/// empty pieces and stopwords. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    tokenize_into(text, &mut out);
    out
}

pub(crate) fn tokenize_into(text: &str, out: &mut Vec<String>) {
    for piece in text.split(|c: char| !c.is_alphanumeric()) {
        if piece.is_empty() {
            continue;
        }
        let word = piece.to_lowercase();
        if !is_stopword(&word) {
            out.push(word);
        }
    }
}

/// Normalizes a list of pre-split words; each entry may still expand into
/// several tokens (`"state-of-the-art"` gives `state`, `art`).
pub fn normalize_words<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    let mut out = Vec::with_capacity(words.len());
    for w in words {
        tokenize_into(w.as_ref(), &mut out);
    }
    out
}
