//! Root registry and bookmark store.
//!
//! A resolver may know several independent trees ("roots"), each with its
//! own apex. Root 36 meaning one operator and 46 another is exactly the
//! extension-tag scheme: `5551212#36` routes to root 36. The registry
//! file and the bookmark store are plain TSV so they diff cleanly.
//!
//! Config file: `<root-id><TAB><apex><TAB><local|host:port>` per line.
//! Bookmark store: `<digits><TAB><root-id><TAB><iso-timestamp>` per line.

use std::collections::BTreeMap;
use std::time::Duration;

use crate::clock::Timestamp;
use crate::e164::E164Number;
use crate::registry::EnumTree;

/// Where a root's data lives.
#[derive(Debug, Clone)]
pub enum Backend {
    /// An in-process simulated tree.
    Local(EnumTree),
    /// A live DNS endpoint queried over UDP.
    Remote {
        endpoint: String,
        timeout: Duration,
        retries: u32,
    },
}

impl Backend {
    pub fn remote(endpoint: &str) -> Self {
        Backend::Remote {
            endpoint: endpoint.to_string(),
            timeout: Duration::from_millis(2000),
            retries: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Root {
    pub apex: String,
    pub backend: Backend,
}

#[derive(Debug, Clone)]
pub struct RootConfig {
    roots: BTreeMap<u32, Root>,
    pub default_root: u32,
}

impl RootConfig {
    pub fn new(default_root: u32) -> Self {
        RootConfig {
            roots: BTreeMap::new(),
            default_root,
        }
    }

    pub fn insert(&mut self, id: u32, root: Root) {
        self.roots.insert(id, root);
    }

    pub fn get(&self, id: u32) -> Option<&Root> {
        self.roots.get(&id)
    }

    /// Roots in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &Root)> {
        self.roots.iter().map(|(id, root)| (*id, root))
    }

    pub fn ids(&self) -> Vec<u32> {
        self.roots.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn local_tree(&self, id: u32) -> Option<&EnumTree> {
        match &self.get(id)?.backend {
            Backend::Local(tree) => Some(tree),
            Backend::Remote { .. } => None,
        }
    }

    pub fn local_tree_mut(&mut self, id: u32) -> Option<&mut EnumTree> {
        match &mut self.roots.get_mut(&id)?.backend {
            Backend::Local(tree) => Some(tree),
            Backend::Remote { .. } => None,
        }
    }
}

/// One line of the root-registry file, before any local tree state is
/// attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootSpec {
    pub id: u32,
    pub apex: String,
    pub backend: BackendSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Local,
    Remote(String),
}

pub fn parse_roots_file(text: &str) -> Result<Vec<RootSpec>, String> {
    let mut specs = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(format!(
                "roots line {}: expected <root-id>\\t<apex>\\t<local|host:port>",
                index + 1
            ));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|_| format!("roots line {}: bad root id {:?}", index + 1, fields[0]))?;
        let backend = if fields[2] == "local" {
            BackendSpec::Local
        } else {
            BackendSpec::Remote(fields[2].to_string())
        };
        specs.push(RootSpec {
            id,
            apex: fields[1].to_string(),
            backend,
        });
    }
    Ok(specs)
}

pub fn serialize_roots_file(specs: &[RootSpec]) -> String {
    let mut out = String::new();
    for spec in specs {
        let backend = match &spec.backend {
            BackendSpec::Local => "local",
            BackendSpec::Remote(endpoint) => endpoint,
        };
        out.push_str(&format!("{}\t{}\t{}\n", spec.id, spec.apex, backend));
    }
    out
}

/// A remembered root for a number, so the multi-root search need not be
/// repeated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bookmark {
    pub number: E164Number,
    pub root_id: u32,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BookmarkStore {
    bookmarks: BTreeMap<E164Number, Bookmark>,
}

impl BookmarkStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, number: &E164Number) -> Option<&Bookmark> {
        self.bookmarks.get(number)
    }

    pub fn put(&mut self, bookmark: Bookmark) {
        self.bookmarks.insert(bookmark.number.clone(), bookmark);
    }

    pub fn remove(&mut self, number: &E164Number) -> Option<Bookmark> {
        self.bookmarks.remove(number)
    }

    pub fn len(&self) -> usize {
        self.bookmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bookmarks.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut store = BookmarkStore::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(format!(
                    "bookmark line {}: expected <digits>\\t<root-id>\\t<iso-timestamp>",
                    index + 1
                ));
            }
            let number = E164Number::new(fields[0])
                .map_err(|e| format!("bookmark line {}: {e}", index + 1))?;
            let root_id: u32 = fields[1]
                .parse()
                .map_err(|_| format!("bookmark line {}: bad root id", index + 1))?;
            let created_at = Timestamp::parse_iso8601(fields[2])
                .map_err(|e| format!("bookmark line {}: {e}", index + 1))?;
            store.put(Bookmark {
                number,
                root_id,
                created_at,
            });
        }
        Ok(store)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for bookmark in self.bookmarks.values() {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                bookmark.number.digits(),
                bookmark.root_id,
                bookmark.created_at.to_iso8601()
            ));
        }
        out
    }
}
