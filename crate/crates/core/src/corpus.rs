//! Pre-annotated documents and the immutable corpus index.
//!
//! Every document has a `title` and an `abstract` field, each holding a bag
//! of words and a bag of entities. Word and entity counts live in separate
//! namespaces, so a word `svm` and an entity with id `svm` never collide.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Abstract,
}

impl Field {
    pub const ALL: [Field; 2] = [Field::Title, Field::Abstract];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Title => "title",
            Field::Abstract => "abstract",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "title" => Ok(Field::Title),
            "abstract" => Ok(Field::Abstract),
            other => Err(Error::UnknownField(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Entity,
}

impl TokenKind {
    pub const ALL: [TokenKind; 2] = [TokenKind::Word, TokenKind::Entity];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::Word => "word",
            TokenKind::Entity => "entity",
        })
    }
}

/// A word or a linked entity.
///
/// Identity is `(kind, key)`: two entity tokens with the same knowledge-base
/// id are the same token whatever their recorded type.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    /// Lowercased surface form for words, knowledge-base id for entities.
    pub key: String,
    /// Entity type; always `None` for words.
    pub type_id: Option<String>,
}

impl Token {
    pub fn word(surface: impl Into<String>) -> Self {
        Token {
            kind: TokenKind::Word,
            key: surface.into(),
            type_id: None,
        }
    }

    pub fn entity(id: impl Into<String>, type_id: Option<String>) -> Self {
        Token {
            kind: TokenKind::Entity,
            key: id.into(),
            type_id,
        }
    }

    pub fn is_entity(&self) -> bool {
        self.kind == TokenKind::Entity
    }
}

impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.key == other.key
    }
}

impl Eq for Token {}

impl std::hash::Hash for Token {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.key.hash(state);
    }
}

impl PartialOrd for Token {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Token {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.kind, &self.key).cmp(&(other.kind, &other.key))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Word => write!(f, "{}", self.key),
            TokenKind::Entity => write!(f, "<{}>", self.key),
        }
    }
}

/// Bag-of-words plus bag-of-entities for one field of one document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldBag {
    pub words: BTreeMap<String, u32>,
    pub entities: BTreeMap<String, u32>,
    pub word_length: u64,
    pub entity_length: u64,
}

impl FieldBag {
    pub fn add(&mut self, kind: TokenKind, key: &str) {
        let (counts, length) = match kind {
            TokenKind::Word => (&mut self.words, &mut self.word_length),
            TokenKind::Entity => (&mut self.entities, &mut self.entity_length),
        };
        *counts.entry(key.to_string()).or_insert(0) += 1;
        *length += 1;
    }

    pub fn counts(&self, kind: TokenKind) -> &BTreeMap<String, u32> {
        match kind {
            TokenKind::Word => &self.words,
            TokenKind::Entity => &self.entities,
        }
    }

    pub fn length(&self, kind: TokenKind) -> u64 {
        match kind {
            TokenKind::Word => self.word_length,
            TokenKind::Entity => self.entity_length,
        }
    }

    pub fn count(&self, token: &Token) -> u32 {
        self.counts(token.kind).get(&token.key).copied().unwrap_or(0)
    }

    fn check_lengths(&self) -> bool {
        self.words.values().map(|&c| u64::from(c)).sum::<u64>() == self.word_length
            && self.entities.values().map(|&c| u64::from(c)).sum::<u64>() == self.entity_length
            && self.words.values().chain(self.entities.values()).all(|&c| c > 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    /// Indexed by [`Field::index`].
    pub fields: [FieldBag; 2],
}

impl Document {
    pub fn new(doc_id: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            fields: Default::default(),
        }
    }

    pub fn field(&self, field: Field) -> &FieldBag {
        &self.fields[field.index()]
    }

    pub fn field_mut(&mut self, field: Field) -> &mut FieldBag {
        &mut self.fields[field.index()]
    }

    /// Total count of `token` across all fields.
    pub fn total_count(&self, token: &Token) -> u32 {
        self.fields.iter().map(|bag| bag.count(token)).sum()
    }
}

/// Collection-level statistics for one (field, token kind) pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CollectionStats {
    /// Sum of the bag lengths over all documents.
    pub length: u64,
    /// Total occurrences of each token.
    pub counts: BTreeMap<String, u64>,
    /// Number of documents whose bag contains each token.
    pub doc_freq: BTreeMap<String, u32>,
}

impl CollectionStats {
    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn doc_freq(&self, key: &str) -> u32 {
        self.doc_freq.get(key).copied().unwrap_or(0)
    }
}

/// Immutable index over a set of documents.
///
/// Documents are stored in ascending `doc_id` order, which makes every
/// statistic independent of the order records were ingested in.
#[derive(Clone, Debug)]
pub struct CorpusIndex {
    documents: Vec<Document>,
    lookup: HashMap<String, u32>,
    /// `[field][kind]`
    collections: [[CollectionStats; 2]; 2],
    /// Per kind: token key to ascending document ordinals containing it in any field.
    postings: [HashMap<String, Vec<u32>>; 2],
}

impl CorpusIndex {
    pub fn from_documents(mut documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = documents.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(Error::DuplicateDocument(w[0].doc_id.clone()));
        }
        for doc in &documents {
            if !doc.fields.iter().all(FieldBag::check_lengths) {
                return Err(Error::Format(format!(
                    "document {:?} has inconsistent bag lengths",
                    doc.doc_id
                )));
            }
        }

        let mut lookup = HashMap::with_capacity(documents.len());
        let mut collections: [[CollectionStats; 2]; 2] = Default::default();
        let mut postings: [HashMap<String, Vec<u32>>; 2] = Default::default();
        for (ordinal, doc) in documents.iter().enumerate() {
            let ordinal = ordinal as u32;
            lookup.insert(doc.doc_id.clone(), ordinal);
            for field in Field::ALL {
                let bag = doc.field(field);
                for kind in TokenKind::ALL {
                    let stats = &mut collections[field.index()][kind.index()];
                    stats.length += bag.length(kind);
                    for (key, &count) in bag.counts(kind) {
                        *stats.counts.entry(key.clone()).or_insert(0) += u64::from(count);
                        *stats.doc_freq.entry(key.clone()).or_insert(0) += 1;
                        let list = postings[kind.index()].entry(key.clone()).or_default();
                        if list.last() != Some(&ordinal) {
                            list.push(ordinal);
                        }
                    }
                }
            }
        }

        Ok(CorpusIndex {
            documents,
            lookup,
            collections,
            postings,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn ordinal(&self, doc_id: &str) -> Result<u32> {
        self.lookup
            .get(doc_id)
            .copied()
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    pub fn document(&self, doc_id: &str) -> Result<&Document> {
        let ordinal = self.ordinal(doc_id)?;
        Ok(&self.documents[ordinal as usize])
    }

    pub fn document_at(&self, ordinal: u32) -> &Document {
        &self.documents[ordinal as usize]
    }

    /// Exact occurrence count of `token` in one field of one document.
    pub fn raw_count(&self, doc_id: &str, field: Field, token: &Token) -> Result<u32> {
        Ok(self.document(doc_id)?.field(field).count(token))
    }

    pub fn collection_stats(&self, field: Field, kind: TokenKind) -> &CollectionStats {
        &self.collections[field.index()][kind.index()]
    }

    /// Mean bag length of `(field, kind)` over all documents.
    pub fn average_length(&self, field: Field, kind: TokenKind) -> f64 {
        self.collection_stats(field, kind).length as f64 / self.doc_count() as f64
    }

    /// Ordinals of documents containing `token` in any field, ascending.
    pub fn postings(&self, token: &Token) -> &[u32] {
        self.postings[token.kind.index()]
            .get(&token.key)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    #[serde(default)]
    fields: BTreeMap<String, RawField>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawField {
    #[serde(default)]
    words: Vec<String>,
    #[serde(default)]
    entities: Vec<RawEntity>,
}

#[derive(Deserialize)]
pub(crate) struct RawEntity {
    pub id: String,
    #[serde(rename = "type", default)]
    pub type_id: Option<String>,
}

/// Parses one JSON-lines corpus record. `line` is 1-based and only used for
/// error messages.
pub fn parse_document(record: &str, line: usize) -> Result<Document> {
    let raw: RawDocument = serde_json::from_str(record).map_err(|e| Error::parse(line, e))?;
    if raw.doc_id.is_empty() {
        return Err(Error::parse(line, "empty doc_id"));
    }
    let mut doc = Document::new(raw.doc_id);
    for (name, raw_field) in raw.fields {
        let field: Field = name
            .parse()
            .map_err(|_| Error::parse(line, format!("unknown field {name:?}")))?;
        let bag = doc.field_mut(field);
        for word in text::normalize_words(&raw_field.words) {
            bag.add(TokenKind::Word, &word);
        }
        for entity in raw_field.entities {
            if entity.id.is_empty() {
                return Err(Error::parse(line, "entity with empty id"));
            }
            bag.add(TokenKind::Entity, &entity.id);
        }
    }
    Ok(doc)
}

/// Builds an index from JSON-lines records. Blank lines are skipped.
pub fn ingest_reader<R: BufRead>(reader: R) -> Result<CorpusIndex> {
    let lines = reader
        .lines()
        .enumerate()
        .map(|(i, line)| line.map(|l| (i + 1, l)))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::Format(format!("read error: {e}")))?;

    let parsed: Vec<Result<Document>> = lines
        .par_iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| parse_document(l, *n))
        .collect();
    // sequential pass so the reported error is always the first bad line
    let documents = parsed.into_iter().collect::<Result<Vec<_>>>()?;
    CorpusIndex::from_documents(documents)
}

pub fn ingest_corpus(path: impl AsRef<Path>) -> Result<CorpusIndex> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file))
}
