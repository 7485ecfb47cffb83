//! On-disk form of a built index.
//!
//! Documents and the optional type hierarchy are written as one JSON
//! object; collection statistics and postings are rebuilt on load, so a
//! reloaded index ranks exactly like the one that was saved.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, Document};
use crate::error::{Error, Result};
use crate::hierarchy::TypeHierarchy;

pub const FORMAT: &str = "setrank-index";
pub const VERSION: u32 = 1;

#[derive(Serialize)]
struct StoredRef<'a> {
    format: &'a str,
    version: u32,
    hierarchy: Option<&'a TypeHierarchy>,
    documents: &'a [Document],
}

#[derive(Deserialize)]
struct Stored {
    format: String,
    version: u32,
    hierarchy: Option<TypeHierarchy>,
    documents: Vec<Document>,
}

pub fn write_index<W: Write>(out: W, index: &CorpusIndex, hierarchy: Option<&TypeHierarchy>) -> Result<()> {
    let stored = StoredRef {
        format: FORMAT,
        version: VERSION,
        hierarchy,
        documents: index.documents(),
    };
    serde_json::to_writer(out, &stored).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_index(path: impl AsRef<Path>, index: &CorpusIndex, hierarchy: Option<&TypeHierarchy>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_index(&mut out, index, hierarchy)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_index<R: std::io::Read>(input: R) -> Result<(CorpusIndex, Option<TypeHierarchy>)> {
    let stored: Stored = serde_json::from_reader(input).map_err(|e| Error::Format(e.to_string()))?;
    if stored.format != FORMAT {
        return Err(Error::Format(format!("not an index file (format {:?})", stored.format)));
    }
    if stored.version != VERSION {
        return Err(Error::Format(format!(
            "index version {} is not supported (expected {VERSION})",
            stored.version
        )));
    }
    Ok((CorpusIndex::from_documents(stored.documents)?, stored.hierarchy))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<(CorpusIndex, Option<TypeHierarchy>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_index(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest_reader;
    use crate::hierarchy::biomedical;

    #[test]
    fn round_trip_keeps_documents_and_hierarchy() {
        let data = r#"{"doc_id":"b","fields":{"title":{"words":["x"],"entities":[{"id":"E","type":"Gene"}]}}}
{"doc_id":"a","fields":{"abstract":{"words":["y","y"]}}}"#;
        let index = ingest_reader(data.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_index(&mut buf, &index, Some(&biomedical())).unwrap();
        let (back, h) = read_index(buf.as_slice()).unwrap();
        assert_eq!(back.documents(), index.documents());
        assert_eq!(h, Some(biomedical()));
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(matches!(read_index(&b"{\"format\":\"other\",\"version\":1,\"hierarchy\":null,\"documents\":[]}"[..]), Err(Error::Format(_))));
        assert!(matches!(read_index(&b"{\"format\":\"setrank-index\",\"version\":9,\"hierarchy\":null,\"documents\":[]}"[..]), Err(Error::Format(_))));
        assert!(matches!(read_index(&b"not json"[..]), Err(Error::Format(_))));
    }
}
