//! Entity type hierarchy and type-distance edge weights.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rooted tree of entity types.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HierarchyRepr", into = "HierarchyRepr")]
pub struct TypeHierarchy {
    root: String,
    parent: BTreeMap<String, String>,
    depth: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct HierarchyRepr {
    root: String,
    parent: BTreeMap<String, String>,
}

impl TryFrom<HierarchyRepr> for TypeHierarchy {
    type Error = Error;

    fn try_from(repr: HierarchyRepr) -> Result<Self> {
        TypeHierarchy::new(repr.root, repr.parent)
    }
}

impl From<TypeHierarchy> for HierarchyRepr {
    fn from(h: TypeHierarchy) -> Self {
        HierarchyRepr {
            root: h.root,
            parent: h.parent,
        }
    }
}

impl TypeHierarchy {
    /// Builds a hierarchy from `child -> parent` links, checking that every
    /// type reaches `root` without a cycle.
    pub fn new(root: impl Into<String>, parent: BTreeMap<String, String>) -> Result<Self> {
        let root = root.into();
        if root.is_empty() {
            return Err(Error::InvalidHierarchy("empty root name".into()));
        }
        if parent.contains_key(&root) {
            return Err(Error::InvalidHierarchy(format!("root {root:?} has a parent")));
        }
        let mut depth: HashMap<String, u32> = HashMap::with_capacity(parent.len() + 1);
        depth.insert(root.clone(), 0);
        for start in parent.keys() {
            let mut chain = Vec::new();
            let mut node = start.as_str();
            let base = loop {
                if let Some(&d) = depth.get(node) {
                    break d;
                }
                if chain.len() > parent.len() {
                    return Err(Error::InvalidHierarchy(format!("cycle through {start:?}")));
                }
                chain.push(node);
                node = match parent.get(node) {
                    Some(p) => p.as_str(),
                    None => {
                        return Err(Error::InvalidHierarchy(format!(
                            "{node:?} does not reach the root {root:?}"
                        )))
                    }
                };
            };
            for (i, n) in chain.iter().rev().enumerate() {
                depth.insert((*n).to_string(), base + i as u32 + 1);
            }
        }
        Ok(TypeHierarchy {
            root,
            parent,
            depth,
        })
    }

    /// Root with the given types as its direct children.
    pub fn flat<S: AsRef<str>>(root: &str, children: &[S]) -> Result<Self> {
        let parent = children
            .iter()
            .map(|c| (c.as_ref().to_string(), root.to_string()))
            .collect();
        TypeHierarchy::new(root, parent)
    }

    /// Parses `child<TAB>parent` lines; the root is declared as `name<TAB>-`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut root: Option<String> = None;
        let mut parent = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (child, par) = match (parts.next(), parts.next(), parts.next()) {
                (Some(c), Some(p), None) if !c.is_empty() && !p.is_empty() => (c, p),
                _ => return Err(Error::parse(line_no, "expected `child<TAB>parent`")),
            };
            if par == "-" {
                if let Some(prev) = root.replace(child.to_string()) {
                    return Err(Error::parse(
                        line_no,
                        format!("second root {child:?} (already have {prev:?})"),
                    ));
                }
            } else if let Some(prev) = parent.insert(child.to_string(), par.to_string()) {
                if prev != par {
                    return Err(Error::parse(
                        line_no,
                        format!("{child:?} has two parents {prev:?} and {par:?}"),
                    ));
                }
            }
        }
        let root = root.ok_or_else(|| Error::InvalidHierarchy("no root line".into()))?;
        TypeHierarchy::new(root, parent)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TypeHierarchy::parse_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{}\t-\n", self.root);
        for (child, parent) in &self.parent {
            out.push_str(&format!("{child}\t{parent}\n"));
        }
        out
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn contains(&self, type_id: &str) -> bool {
        self.depth.contains_key(type_id)
    }

    pub fn depth(&self, type_id: &str) -> Option<u32> {
        self.depth.get(type_id).copied()
    }

    pub fn parent(&self, type_id: &str) -> Option<&str> {
        self.parent.get(type_id).map(String::as_str)
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.root.as_str()).chain(self.parent.keys().map(String::as_str))
    }

    fn known(&self, type_id: &str) -> Result<(&str, u32)> {
        self.depth
            .get_key_value(type_id)
            .map(|(k, &d)| (k.as_str(), d))
            .ok_or_else(|| Error::UnknownType(type_id.to_string()))
    }

    /// Lowest common ancestor of two types.
    pub fn lca(&self, a: &str, b: &str) -> Result<&str> {
        let (mut a, mut da) = self.known(a)?;
        let (mut b, mut db) = self.known(b)?;
        while da > db {
            a = &self.parent[a];
            da -= 1;
        }
        while db > da {
            b = &self.parent[b];
            db -= 1;
        }
        while a != b {
            a = &self.parent[a];
            b = &self.parent[b];
        }
        Ok(a)
    }

    /// Relation strength between two entities from their types:
    /// `1 + max(dist(a, lca), dist(b, lca))`.
    ///
    /// Identical type names always give 1. A missing or unknown type is
    /// placed as a direct child of the root, so against a known type `t` the
    /// weight is `1 + max(1, depth(t))`.
    pub fn entity_edge_weight(&self, a: Option<&str>, b: Option<&str>) -> u32 {
        if let (Some(x), Some(y)) = (a, b) {
            if x == y {
                return 1;
            }
        }
        let a = a.and_then(|t| self.known(t).ok());
        let b = b.and_then(|t| self.known(t).ok());
        match (a, b) {
            (Some((ta, da)), Some((tb, db))) => {
                let (_, dl) = self.known(self.lca(ta, tb).expect("known types")).expect("lca is known");
                1 + (da - dl).max(db - dl)
            }
            (Some((_, d)), None) | (None, Some((_, d))) => 1 + d.max(1),
            (None, None) => 2,
        }
    }
}

/// Bundled hierarchy for biomedical corpora: five entity types directly
/// below `Thing`.
pub fn biomedical() -> TypeHierarchy {
    TypeHierarchy::flat("Thing", &["Chemical", "Disease", "Gene", "Mutation", "Species"])
        .expect("static hierarchy is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freebase_like() -> TypeHierarchy {
        TypeHierarchy::parse_tsv(
            "Thing\t-\n\
             education\tThing\n\
             computer\tThing\n\
             education.field_of_study\teducation\n\
             computer.game\tcomputer\n\
             computer.algorithm\tcomputer\n",
        )
        .unwrap()
    }

    #[test]
    fn lca_cases() {
        let bio = biomedical();
        assert_eq!(bio.lca("Gene", "Disease").unwrap(), "Thing");
        assert_eq!(bio.lca("Gene", "Gene").unwrap(), "Gene");
        let fb = freebase_like();
        assert_eq!(fb.lca("education.field_of_study", "computer.game").unwrap(), "Thing");
        assert_eq!(fb.lca("computer.algorithm", "computer.game").unwrap(), "computer");
        assert_eq!(fb.lca("computer", "computer.game").unwrap(), "computer");
        assert!(matches!(fb.lca("nope", "computer"), Err(Error::UnknownType(_))));
    }

    #[test]
    fn edge_weights() {
        let bio = biomedical();
        assert_eq!(bio.entity_edge_weight(Some("Gene"), Some("Gene")), 1);
        assert_eq!(bio.entity_edge_weight(Some("Gene"), Some("Disease")), 2);
        let fb = freebase_like();
        assert_eq!(
            fb.entity_edge_weight(Some("education.field_of_study"), Some("computer.game")),
            3
        );
        assert_eq!(fb.entity_edge_weight(Some("computer.algorithm"), Some("computer.game")), 2);
        assert_eq!(fb.entity_edge_weight(Some("computer"), Some("computer.game")), 2);
        assert_eq!(fb.entity_edge_weight(Some("Thing"), Some("computer.game")), 3);
    }

    #[test]
    fn unknown_types_hang_off_root() {
        let fb = freebase_like();
        assert_eq!(fb.entity_edge_weight(None, Some("computer.game")), 3);
        assert_eq!(fb.entity_edge_weight(Some("mystery"), Some("computer")), 2);
        assert_eq!(fb.entity_edge_weight(Some("mystery"), Some("Thing")), 2);
        assert_eq!(fb.entity_edge_weight(Some("mystery"), Some("mystery")), 1);
        assert_eq!(fb.entity_edge_weight(Some("mystery"), Some("other")), 2);
        assert_eq!(fb.entity_edge_weight(None, None), 2);
    }

    #[test]
    fn weights_are_symmetric_and_one_only_on_shared_type() {
        let fb = freebase_like();
        let types: Vec<_> = fb.types().map(str::to_string).collect();
        for a in &types {
            for b in &types {
                let w = fb.entity_edge_weight(Some(a), Some(b));
                assert_eq!(w, fb.entity_edge_weight(Some(b), Some(a)));
                assert!(w >= 1);
                assert_eq!(w == 1, a == b);
            }
        }
    }

    #[test]
    fn rejects_bad_trees() {
        assert!(TypeHierarchy::parse_tsv("a\tb\n").is_err());
        assert!(TypeHierarchy::parse_tsv("T\t-\nU\t-\n").is_err());
        assert!(TypeHierarchy::parse_tsv("T\t-\na\tb\nb\ta\n").is_err());
        assert!(TypeHierarchy::parse_tsv("T\t-\na\tT\na\tb\n").is_err());
        assert!(TypeHierarchy::parse_tsv("T\t-\na\tmissing\n").is_err());
        assert!(TypeHierarchy::parse_tsv("T\t-\nbad line\n").is_err());
    }

    #[test]
    fn tsv_and_serde_round_trip() {
        let fb = freebase_like();
        assert_eq!(TypeHierarchy::parse_tsv(&fb.to_tsv()).unwrap(), fb);
        let json = serde_json::to_string(&fb).unwrap();
        let back: TypeHierarchy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fb);
        assert_eq!(back.depth("computer.game"), Some(2));
    }
}
