//! Entity-set aware document ranking.
//!
//! Documents carry a bag of words and a bag of linked knowledge-base
//! entities per field. A query becomes a heterogeneous graph of word and
//! entity nodes, and documents are scored by how much of that graph they
//! cover. Parameters for the ranker can be chosen either by supervised
//! cross-validation ([`evaluation::grid_search_cv`]) or without labels by
//! weighted rank aggregation ([`autoselect::select_model`]).

pub mod autoselect;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod grids;
pub mod hierarchy;
pub mod lm;
pub mod query;
pub mod rankers;
pub mod store;
pub mod text;

pub use corpus::{CorpusIndex, Document, Field, FieldBag, Token, TokenKind};
pub use error::{Error, Result};
pub use hierarchy::TypeHierarchy;
pub use query::{Query, QueryGraph};
pub use rankers::{Model, ParameterSetting, RankedList, Ranker, Variant};
