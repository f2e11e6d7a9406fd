//! Named folder nodes and path nodes, optionally persisted to a directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::{text, NodeId};
use crate::path::PathNode;
use crate::summarize::{FolderDefinition, FolderNode, Membership};
use crate::SnapshotId;

use super::fsutil::{encode_name, write_atomic};
use super::CatalogError;

/// Folder manifest as written to `<name>.json`; members live next to it.
#[derive(Debug, Serialize, Deserialize)]
struct FolderManifest {
    name: String,
    query: Option<String>,
    definition: FolderDefinition,
    timed: bool,
    snapshot: SnapshotId,
    attributes: BTreeMap<String, String>,
}

#[derive(Debug, Default)]
pub struct Catalog {
    folders: BTreeMap<String, FolderNode>,
    paths: BTreeMap<String, PathNode>,
    dir: Option<PathBuf>,
}

impl Catalog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads (or starts) a catalog persisted under `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, CatalogError> {
        let dir = dir.into();
        let mut catalog = Self {
            dir: Some(dir.clone()),
            ..Self::default()
        };
        for sub in ["folders", "paths"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        for item in fs::read_dir(dir.join("folders"))? {
            let path = item?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let folder = read_folder(&path)?;
                catalog.folders.insert(folder.name.clone(), folder);
            }
        }
        for item in fs::read_dir(dir.join("paths"))? {
            let path = item?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let node: PathNode = serde_json::from_slice(&fs::read(&path)?)
                    .map_err(|e| CatalogError::Corrupt(format!("{}: {e}", path.display())))?;
                catalog.paths.insert(node.name.clone(), node);
            }
        }
        Ok(catalog)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.folders.contains_key(name) || self.paths.contains_key(name)
    }

    fn ensure_free(&self, name: &str) -> Result<(), CatalogError> {
        if self.contains(name) {
            Err(CatalogError::DuplicateName(name.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn folder(&self, name: &str) -> Option<&FolderNode> {
        self.folders.get(name)
    }

    pub fn folders(&self) -> impl Iterator<Item = &FolderNode> {
        self.folders.values()
    }

    pub fn path_node(&self, name: &str) -> Option<&PathNode> {
        self.paths.get(name)
    }

    pub fn path_nodes(&self) -> impl Iterator<Item = &PathNode> {
        self.paths.values()
    }

    /// Adds a group of folders; nothing is added when any name is taken.
    pub fn insert_folders(&mut self, folders: Vec<FolderNode>) -> Result<(), CatalogError> {
        let mut names = BTreeSet::new();
        for f in &folders {
            self.ensure_free(&f.name)?;
            if !names.insert(f.name.as_str()) {
                return Err(CatalogError::DuplicateName(f.name.clone()));
            }
        }
        for f in folders {
            self.persist_folder(&f)?;
            self.folders.insert(f.name.clone(), f);
        }
        Ok(())
    }

    pub fn insert_folder(&mut self, folder: FolderNode) -> Result<(), CatalogError> {
        self.insert_folders(vec![folder])
    }

    /// Replaces an existing folder, e.g. after a refresh.
    pub fn update_folder(&mut self, folder: FolderNode) -> Result<(), CatalogError> {
        if !self.folders.contains_key(&folder.name) {
            return Err(CatalogError::UnknownName(folder.name.clone()));
        }
        self.persist_folder(&folder)?;
        self.folders.insert(folder.name.clone(), folder);
        Ok(())
    }

    pub fn insert_path_node(&mut self, node: PathNode) -> Result<(), CatalogError> {
        self.ensure_free(&node.name)?;
        self.persist_path_node(&node)?;
        self.paths.insert(node.name.clone(), node);
        Ok(())
    }

    pub fn update_path_node(&mut self, node: PathNode) -> Result<(), CatalogError> {
        if !self.paths.contains_key(&node.name) {
            return Err(CatalogError::UnknownName(node.name.clone()));
        }
        self.persist_path_node(&node)?;
        self.paths.insert(node.name.clone(), node);
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> Result<(), CatalogError> {
        let found = self.folders.remove(name).is_some() || self.paths.remove(name).is_some();
        if !found {
            return Err(CatalogError::UnknownName(name.to_string()));
        }
        if let Some(dir) = &self.dir {
            let stem = encode_name(name);
            for p in [
                dir.join("folders").join(format!("{stem}.json")),
                dir.join("folders").join(format!("{stem}.members")),
                dir.join("paths").join(format!("{stem}.json")),
            ] {
                if p.exists() {
                    fs::remove_file(p)?;
                }
            }
        }
        Ok(())
    }

    /// Snapshots some folder or path node was computed from.
    pub fn referenced_snapshots(&self) -> BTreeSet<SnapshotId> {
        self.folders
            .values()
            .map(|f| f.snapshot)
            .chain(self.paths.values().map(|p| p.snapshot))
            .collect()
    }

    fn persist_folder(&self, folder: &FolderNode) -> Result<(), CatalogError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let stem = encode_name(&folder.name);
        let base = dir.join("folders");
        let mut members = String::new();
        if folder.timed {
            for m in &folder.log {
                let removed = m.removed_at.map(|s| s.to_string()).unwrap_or_default();
                members.push_str(&format!("{}\t{}\t{}\n", text::format_term(&m.id), m.added_at, removed));
            }
        } else {
            for id in &folder.members {
                members.push_str(&text::format_term(id));
                members.push('\n');
            }
        }
        write_atomic(&base.join(format!("{stem}.members")), members.as_bytes())?;
        let manifest = FolderManifest {
            name: folder.name.clone(),
            query: folder.query.clone(),
            definition: folder.definition.clone(),
            timed: folder.timed,
            snapshot: folder.snapshot,
            attributes: folder.attributes.clone(),
        };
        let json = serde_json::to_vec_pretty(&manifest).map_err(|e| CatalogError::Corrupt(e.to_string()))?;
        write_atomic(&base.join(format!("{stem}.json")), &json)?;
        Ok(())
    }

    fn persist_path_node(&self, node: &PathNode) -> Result<(), CatalogError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let json = serde_json::to_vec_pretty(node).map_err(|e| CatalogError::Corrupt(e.to_string()))?;
        write_atomic(
            &dir.join("paths").join(format!("{}.json", encode_name(&node.name))),
            &json,
        )?;
        Ok(())
    }
}

fn read_folder(manifest_path: &Path) -> Result<FolderNode, CatalogError> {
    let corrupt = |what: String| CatalogError::Corrupt(format!("{}: {what}", manifest_path.display()));
    let manifest: FolderManifest =
        serde_json::from_slice(&fs::read(manifest_path)?).map_err(|e| corrupt(e.to_string()))?;
    let members_path = manifest_path.with_extension("members");
    let body = fs::read_to_string(&members_path)?;
    let mut members = BTreeSet::new();
    let mut log = Vec::new();
    for line in body.lines().filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split('\t').collect();
        let id: NodeId = text::parse_term(fields[0]).map_err(&corrupt)?;
        if manifest.timed {
            let stamp = |i: usize| -> Result<Option<SnapshotId>, CatalogError> {
                match fields.get(i).copied().unwrap_or("") {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|_| corrupt(format!("bad stamp '{s}'"))),
                }
            };
            let added_at = stamp(1)?.ok_or_else(|| corrupt(format!("no added_at for {id}")))?;
            let removed_at = stamp(2)?;
            if removed_at.is_none() {
                members.insert(id.clone());
            }
            log.push(Membership {
                id,
                added_at,
                removed_at,
            });
        } else {
            members.insert(id);
        }
    }
    Ok(FolderNode {
        name: manifest.name,
        members,
        definition: manifest.definition,
        query: manifest.query,
        attributes: manifest.attributes,
        timed: manifest.timed,
        log,
        snapshot: manifest.snapshot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::path::{PathNodeSpec, PathRegex};
    use crate::registry::AlgorithmRegistry;
    use crate::summarize::{partition_by_correlation, CorrelationCondition};

    fn type_folders() -> Vec<FolderNode> {
        partition_by_correlation(
            &fixtures::banking(),
            &CorrelationCondition::attr_eq("type", "type"),
            None,
            &AlgorithmRegistry::with_builtins(),
            1,
        )
        .unwrap()
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut c = Catalog::in_memory();
        c.insert_folders(type_folders()).unwrap();
        assert!(matches!(
            c.insert_folders(type_folders()),
            Err(CatalogError::DuplicateName(_))
        ));
        let spec = PathNodeSpec::new("type=artifact", PathRegex::compile("Adam edge node").unwrap());
        let node = PathNode::evaluate(&spec, &fixtures::banking(), 1).unwrap();
        assert!(matches!(
            c.insert_path_node(node),
            Err(CatalogError::DuplicateName(_))
        ));
    }

    #[test]
    fn persisted_catalog_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Catalog::open(dir.path()).unwrap();
        let mut folders = type_folders();
        folders[0] = folders[0].clone().timed().with_query("correlation x.type = y.type");
        c.insert_folders(folders).unwrap();
        let spec = PathNodeSpec::new("staff-paths", PathRegex::compile("Adam (edge node)* assigned-to Staff").unwrap());
        c.insert_path_node(PathNode::evaluate(&spec, &fixtures::banking(), 1).unwrap())
            .unwrap();

        let reloaded = Catalog::open(dir.path()).unwrap();
        let a: Vec<&FolderNode> = c.folders().collect();
        let b: Vec<&FolderNode> = reloaded.folders().collect();
        assert_eq!(a, b);
        assert_eq!(reloaded.path_node("staff-paths"), c.path_node("staff-paths"));
        assert!(dir.path().join("folders/type%3Dartifact.members").exists());

        let mut reloaded = reloaded;
        reloaded.remove("type=artifact").unwrap();
        assert!(!dir.path().join("folders/type%3Dartifact.members").exists());
        assert_eq!(reloaded.referenced_snapshots(), BTreeSet::from([1]));
    }
}
