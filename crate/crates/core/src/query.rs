//! Queries and the heterogeneous query graph.
//!
//! Nodes are the distinct query tokens. Word nodes are linked when the
//! words are adjacent in the query (after stopword removal), with weight 1.
//! Every pair of distinct entity nodes is linked with a weight derived from
//! the distance of their types in the type hierarchy.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{RawEntity, Token, TokenKind};
use crate::error::{Error, Result};
use crate::hierarchy::TypeHierarchy;
use crate::text;

/// A parsed query: the surviving word sequence and the linked entities in
/// order of mention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub words: Vec<String>,
    pub entities: Vec<Token>,
}

#[derive(Deserialize)]
struct QueryRecord {
    query_id: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    words: Option<Vec<String>>,
    #[serde(default)]
    entities: Vec<RawEntity>,
}

impl Query {
    /// Builds a query from free text; words are tokenized and stopwords dropped.
    pub fn from_text(id: impl Into<String>, text: &str, entities: Vec<Token>) -> Self {
        Query {
            id: id.into(),
            words: text::tokenize(text),
            entities,
        }
    }

    /// Parses one JSON-lines query record. An explicit `words` list takes
    /// precedence over `text`.
    pub fn parse(record: &str, line: usize) -> Result<Self> {
        let raw: QueryRecord = serde_json::from_str(record).map_err(|e| Error::parse(line, e))?;
        if raw.query_id.is_empty() {
            return Err(Error::parse(line, "empty query_id"));
        }
        let words = match raw.words {
            Some(words) => text::normalize_words(&words),
            None => text::tokenize(&raw.text),
        };
        let mut entities = Vec::with_capacity(raw.entities.len());
        for e in raw.entities {
            if e.id.is_empty() {
                return Err(Error::parse(line, "entity with empty id"));
            }
            entities.push(Token::entity(e.id, e.type_id));
        }
        Ok(Query {
            id: raw.query_id,
            words,
            entities,
        })
    }

    /// Total number of token occurrences in the query.
    pub fn len(&self) -> usize {
        self.words.len() + self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn read_queries<R: BufRead>(reader: R) -> Result<Vec<Query>> {
    let mut seen = HashSet::new();
    let mut queries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let q = Query::parse(&line, i + 1)?;
        if !seen.insert(q.id.clone()) {
            return Err(Error::parse(i + 1, format!("duplicate query_id {:?}", q.id)));
        }
        queries.push(q);
    }
    Ok(queries)
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_queries(BufReader::new(file))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    WordWord,
    EntityEntity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Node indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryGraph {
    pub query_id: String,
    nodes: Vec<Token>,
    multiplicity: Vec<u32>,
    edges: Vec<Edge>,
    #[serde(skip)]
    incident: Vec<Vec<usize>>,
}

impl QueryGraph {
    /// Assembles a graph from explicit parts. Node multiplicities default to 1.
    pub fn from_parts(query_id: impl Into<String>, nodes: Vec<Token>, edges: Vec<Edge>) -> Result<Self> {
        let n = nodes.len();
        if nodes.iter().collect::<HashSet<_>>().len() != n {
            return Err(Error::InvalidParameters("duplicate graph nodes".into()));
        }
        let mut seen = HashSet::new();
        let mut incident = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= e.b || e.b >= n {
                return Err(Error::InvalidParameters(format!(
                    "edge ({}, {}) must join two distinct nodes with a < b",
                    e.a, e.b
                )));
            }
            let (ka, kb) = (nodes[e.a].kind, nodes[e.b].kind);
            let ok = match e.kind {
                EdgeKind::WordWord => ka == TokenKind::Word && kb == TokenKind::Word && e.weight == 1.0,
                EdgeKind::EntityEntity => {
                    ka == TokenKind::Entity && kb == TokenKind::Entity && e.weight >= 1.0
                }
            };
            if !ok || !seen.insert((e.a, e.b)) {
                return Err(Error::InvalidParameters(format!("invalid edge {e:?}")));
            }
            incident[e.a].push(i);
            incident[e.b].push(i);
        }
        Ok(QueryGraph {
            query_id: query_id.into(),
            multiplicity: vec![1; n],
            nodes,
            edges,
            incident,
        })
    }

    pub fn nodes(&self) -> &[Token] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Occurrences of each node's token in the original query.
    pub fn multiplicity(&self) -> &[u32] {
        &self.multiplicity
    }

    /// Indices into [`QueryGraph::edges`] of the edges touching `node`.
    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn entity_count(&self) -> usize {
        self.nodes.iter().filter(|t| t.is_entity()).count()
    }

    pub fn word_count(&self) -> usize {
        self.node_count() - self.entity_count()
    }

    pub fn has_entities(&self) -> bool {
        self.nodes.iter().any(Token::is_entity)
    }
}

/// Builds the query graph. Repeated tokens collapse into one node; a word
/// adjacent to itself adds no edge.
pub fn build_query_graph(query: &Query, hierarchy: &TypeHierarchy) -> Result<QueryGraph> {
    if query.is_empty() {
        return Err(Error::EmptyQuery(query.id.clone()));
    }
    let mut nodes: Vec<Token> = Vec::new();
    let mut multiplicity: Vec<u32> = Vec::new();
    let mut slot: HashMap<Token, usize> = HashMap::new();
    let mut intern = |token: Token| -> usize {
        if let Some(&i) = slot.get(&token) {
            multiplicity[i] += 1;
            return i;
        }
        let i = nodes.len();
        slot.insert(token.clone(), i);
        nodes.push(token);
        multiplicity.push(1);
        i
    };

    let word_ids: Vec<usize> = query.words.iter().map(|w| intern(Token::word(w.clone()))).collect();
    for e in &query.entities {
        intern(e.clone());
    }

    let mut edges = Vec::new();
    let mut word_pairs = BTreeSet::new();
    for pair in word_ids.windows(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a != b && word_pairs.insert((a, b)) {
            edges.push(Edge {
                a,
                b,
                kind: EdgeKind::WordWord,
                weight: 1.0,
            });
        }
    }
    let entity_ids: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].is_entity()).collect();
    for (x, &a) in entity_ids.iter().enumerate() {
        for &b in &entity_ids[x + 1..] {
            let weight = hierarchy
                .entity_edge_weight(nodes[a].type_id.as_deref(), nodes[b].type_id.as_deref());
            edges.push(Edge {
                a,
                b,
                kind: EdgeKind::EntityEntity,
                weight: f64::from(weight),
            });
        }
    }

    let mut graph = QueryGraph::from_parts(query.id.clone(), nodes, edges)?;
    graph.multiplicity = multiplicity;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::biomedical;

    fn count(graph: &QueryGraph, kind: EdgeKind) -> usize {
        graph.edges().iter().filter(|e| e.kind == kind).count()
    }

    #[test]
    fn figure_style_query() {
        let h = TypeHierarchy::parse_tsv(
            "Thing\t-\neducation\tThing\ncomputer\tThing\n\
             education.field_of_study\teducation\ncomputer.game\tcomputer\n",
        )
        .unwrap();
        let q = Query::from_text(
            "q1",
            "reinforcement learning for video game",
            vec![
                Token::entity("/m/0hjlw", Some("education.field_of_study".into())),
                Token::entity("/m/0xwj", Some("computer.game".into())),
            ],
        );
        let g = build_query_graph(&q, &h).unwrap();
        assert_eq!(g.word_count(), 4);
        assert_eq!(g.entity_count(), 2);
        assert_eq!(count(&g, EdgeKind::WordWord), 3);
        assert_eq!(count(&g, EdgeKind::EntityEntity), 1);
        let ee = g.edges().iter().find(|e| e.kind == EdgeKind::EntityEntity).unwrap();
        assert_eq!(ee.weight, 3.0);
        // "for" is gone so learning-video are adjacent
        let names: Vec<_> = g.nodes().iter().map(|t| t.key.as_str()).collect();
        assert!(g.edges().iter().any(|e| names[e.a] == "learning" && names[e.b] == "video"));
    }

    #[test]
    fn single_entity_query() {
        let q = Query::from_text("q", "", vec![Token::entity("E", Some("Gene".into()))]);
        let g = build_query_graph(&q, &biomedical()).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn repeated_words_collapse() {
        let q = Query::from_text("q", "deep deep learning", vec![]);
        let g = build_query_graph(&q, &biomedical()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.multiplicity(), &[2, 1]);

        let q = Query::from_text("q", "a b a b", vec![]);
        let g = build_query_graph(&q, &biomedical());
        // "a" is a stopword
        assert_eq!(g.unwrap().node_count(), 1);

        let q = Query::from_text("q", "x y x y z", vec![]);
        let g = build_query_graph(&q, &biomedical()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(count(&g, EdgeKind::WordWord), 2);
    }

    #[test]
    fn repeated_entities_collapse() {
        let e = |id: &str, t: &str| Token::entity(id, Some(t.into()));
        let q = Query::from_text("q", "", vec![e("A", "Gene"), e("B", "Gene"), e("A", "Gene"), e("C", "Disease")]);
        let g = build_query_graph(&q, &biomedical()).unwrap();
        assert_eq!(g.entity_count(), 3);
        assert_eq!(count(&g, EdgeKind::EntityEntity), 3);
        let weights: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
        assert_eq!(weights, [1.0, 2.0, 2.0]);
    }

    #[test]
    fn empty_query_is_an_error() {
        let q = Query::from_text("q9", "the of and", vec![]);
        assert!(matches!(build_query_graph(&q, &biomedical()), Err(Error::EmptyQuery(id)) if id == "q9"));
    }

    #[test]
    fn parse_records() {
        let line = r#"{"query_id":"q1","text":"Gene Expression in cancer","entities":[{"id":"G1","type":"Gene"}]}"#;
        let q = Query::parse(line, 1).unwrap();
        assert_eq!(q.words, ["gene", "expression", "cancer"]);
        assert_eq!(q.entities.len(), 1);

        let line = r#"{"query_id":"q2","text":"ignored","words":["Alpha","of","beta"]}"#;
        assert_eq!(Query::parse(line, 1).unwrap().words, ["alpha", "beta"]);

        let dup = "{\"query_id\":\"q\",\"text\":\"x\"}\n{\"query_id\":\"q\",\"text\":\"y\"}\n";
        assert!(matches!(read_queries(dup.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn from_parts_rejects_bad_edges() {
        let nodes = vec![Token::word("a"), Token::entity("e", None)];
        let ww = |a, b| Edge { a, b, kind: EdgeKind::WordWord, weight: 1.0 };
        assert!(QueryGraph::from_parts("q", nodes.clone(), vec![ww(0, 1)]).is_err());
        assert!(QueryGraph::from_parts("q", nodes.clone(), vec![ww(0, 0)]).is_err());
        assert!(QueryGraph::from_parts("q", vec![Token::word("a"), Token::word("a")], vec![]).is_err());
    }
}
