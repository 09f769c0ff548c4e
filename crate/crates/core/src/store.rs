//! Object storage standing in for the cloud provider.
//!
//! Ids are `/`-separated relative paths. An id may not also be the parent
//! of another id (`a` and `a/b` cannot coexist), which keeps the in-memory
//! and filesystem backends observationally equivalent.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::RwLock;

use crate::error::{Error, Result};

pub trait ObjectStore: Send + Sync {
    fn put(&self, id: &str, bytes: &[u8]) -> Result<()>;

    fn get(&self, id: &str) -> Result<Vec<u8>>;

    /// Ids starting with `prefix`, in lexicographic order.
    fn list(&self, prefix: &str) -> Result<Vec<String>>;

    /// Removing an absent id succeeds.
    fn delete(&self, id: &str) -> Result<()>;
}

/// Every stored object, for inspecting what an honest-but-curious provider sees.
pub fn dump(store: &dyn ObjectStore) -> Result<Vec<(String, Vec<u8>)>> {
    store
        .list("")?
        .into_iter()
        .map(|id| {
            let bytes = store.get(&id)?;
            Ok((id, bytes))
        })
        .collect()
}

pub fn validate_id(id: &str) -> Result<()> {
    let bad = id.is_empty()
        || id.split('/').any(|seg| {
            seg.is_empty() || seg.starts_with('.') || seg.contains(['\\', '\0'])
        });
    if bad {
        return Err(Error::InvalidId(id.to_string()));
    }
    Ok(())
}

fn ancestors(id: &str) -> impl Iterator<Item = &str> {
    id.match_indices('/').map(move |(i, _)| &id[..i])
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    objects: RwLock<BTreeMap<String, Vec<u8>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.objects.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.read().is_empty()
    }

    /// Total stored payload bytes.
    pub fn total_bytes(&self) -> usize {
        self.objects.read().values().map(Vec::len).sum()
    }
}

impl ObjectStore for MemoryStore {
    fn put(&self, id: &str, bytes: &[u8]) -> Result<()> {
        validate_id(id)?;
        let mut objects = self.objects.write();
        let as_dir = format!("{id}/");
        let conflict = ancestors(id).any(|a| objects.contains_key(a))
            || objects
                .range(as_dir.clone()..)
                .next()
                .is_some_and(|(k, _)| k.starts_with(&as_dir));
        if conflict {
            return Err(Error::InvalidId(id.to_string()));
        }
        objects.insert(id.to_string(), bytes.to_vec());
        Ok(())
    }

    fn get(&self, id: &str) -> Result<Vec<u8>> {
        validate_id(id)?;
        self.objects
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(id.to_string()))
    }

    fn list(&self, prefix: &str) -> Result<Vec<String>> {
        Ok(self
            .objects
            .read()
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.clone())
            .collect())
    }

    fn delete(&self, id: &str) -> Result<()> {
        validate_id(id)?;
        self.objects.write().remove(id);
        Ok(())
    }
}

/// One file per object below `root`. Writes go to a temporary file that is
/// renamed into place.
#[derive(Debug)]
pub struct FsStore {
    root: PathBuf,
    tmp_counter: AtomicU64,
}

impl FsStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(FsStore {
            root,
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_of(&self, id: &str) -> PathBuf {
        id.split('/').fold(self.root.clone(), |p, seg| p.join(seg))
    }

    fn collect(&self, dir: &Path, rel: &str, out: &mut Vec<String>) -> io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.starts_with('.') {
                continue;
            }
            let id = if rel.is_empty() {
                name.to_string()
            } else {
                format!("{rel}/{name}")
            };
            if entry.file_type()?.is_dir() {
                self.collect(&entry.path(), &id, out)?;
            } else {
                out.push(id);
            }
        }
        Ok(())
    }
}

impl ObjectStore for FsStore {
    fn put(&self, id: &str, bytes: &[u8]) -> Result<()> {
        validate_id(id)?;
        let path = self.path_of(id);
        if path.is_dir() || ancestors(id).any(|a| self.path_of(a).is_file()) {
            return Err(Error::InvalidId(id.to_string()));
        }
        let parent = path.parent().expect("object path has a parent");
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            self.tmp_counter.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        drop(f);
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn get(&self, id: &str) -> Result<Vec<u8>> {
        validate_id(id)?;
        let path = self.path_of(id);
        if !path.is_file() {
            return Err(Error::NotFound(id.to_string()));
        }
        Ok(fs::read(path)?)
    }

    fn list(&self, prefix: &str) -> Result<Vec<String>> {
        let mut out = Vec::new();
        self.collect(&self.root, "", &mut out)?;
        out.retain(|id| id.starts_with(prefix));
        out.sort();
        Ok(out)
    }

    fn delete(&self, id: &str) -> Result<()> {
        validate_id(id)?;
        let path = self.path_of(id);
        if path.is_file() {
            fs::remove_file(&path)?;
            // prune directories left empty so the id tree matches the memory backend
            let mut dir = path.parent();
            while let Some(d) = dir {
                if d == self.root || fs::remove_dir(d).is_err() {
                    break;
                }
                dir = d.parent();
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backends() -> (tempfile::TempDir, Vec<Box<dyn ObjectStore>>) {
        let dir = tempfile::tempdir().unwrap();
        let fs = FsStore::open(dir.path().join("root")).unwrap();
        (dir, vec![Box::new(MemoryStore::new()), Box::new(fs)])
    }

    #[test]
    fn put_get_list_delete() {
        let (_dir, stores) = backends();
        for s in &stores {
            s.put("g1/00000001", b"p1").unwrap();
            s.put("g1/00000000", b"p0").unwrap();
            s.put("g2/00000000", b"q").unwrap();
            assert_eq!(s.get("g1/00000000").unwrap(), b"p0");
            assert_eq!(s.list("g1/").unwrap(), vec!["g1/00000000", "g1/00000001"]);
            assert!(matches!(s.get("nope"), Err(Error::NotFound(_))));
            s.delete("g1/00000000").unwrap();
            s.delete("g1/00000000").unwrap();
            assert_eq!(s.list("").unwrap(), vec!["g1/00000001", "g2/00000000"]);
            s.put("g2/00000000", b"overwritten").unwrap();
            assert_eq!(s.get("g2/00000000").unwrap(), b"overwritten");
        }
    }

    #[test]
    fn rejects_traversal_and_malformed_ids() {
        let (_dir, stores) = backends();
        for s in &stores {
            for id in ["", "/a", "a/", "a//b", "../x", "a/../b", ".hidden", "a\\b"] {
                assert!(matches!(s.put(id, b"x"), Err(Error::InvalidId(_))), "{id:?}");
            }
        }
    }

    #[test]
    fn file_and_directory_ids_conflict() {
        let (_dir, stores) = backends();
        for s in &stores {
            s.put("a", b"1").unwrap();
            assert!(s.put("a/b", b"2").is_err());
            s.put("c/d", b"3").unwrap();
            assert!(s.put("c", b"4").is_err());
        }
    }
}
