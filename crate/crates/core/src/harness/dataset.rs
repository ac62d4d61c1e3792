use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_json, read_to_string, write_json, HarnessError, Result};
use crate::ingest::parse_canonical;
use crate::table::NormalizedTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<PathBuf>,
    pub truth_path: PathBuf,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// A benchmark listing. Relative paths in the file are relative to the file's directory;
/// [`DatasetIndex::load`] resolves them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub entries: Vec<IndexEntry>,
}

impl DatasetIndex {
    pub fn load(path: &Path) -> Result<Self> {
        let mut index: Self = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut index.entries {
            e.truth_path = base.join(&e.truth_path);
            if let Some(img) = &e.image_path {
                e.image_path = Some(base.join(img));
            }
        }
        index.validate()?;
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Ids must be unique and usable as directory names.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            let bad = e.id.is_empty()
                || e.id == "."
                || e.id == ".."
                || e.id.contains(['/', '\\'])
                || e.id.chars().any(char::is_control);
            if bad {
                return Err(HarnessError::InvalidId(e.id.clone()));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(HarnessError::DuplicateId(e.id.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

impl IndexEntry {
    pub fn load_truth(&self) -> Result<NormalizedTable> {
        let text = read_to_string(&self.truth_path).map_err(|e| {
            log::warn!("{}: {e}", self.id);
            HarnessError::MissingTruth(self.id.clone())
        })?;
        parse_canonical(&text, 0).map_err(|e| HarnessError::Format {
            path: self.truth_path.clone(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_resolve_against_index_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("truth")).unwrap();
        std::fs::write(dir.path().join("truth/a.tsv"), "\tx\n2020\t1\n").unwrap();
        std::fs::write(
            dir.path().join("index.json"),
            r#"{"entries": [{"id": "a", "truth_path": "truth/a.tsv", "image_path": "img/a.png", "metadata": {"chart_type": "line"}}]}"#,
        )
        .unwrap();
        let idx = DatasetIndex::load(&dir.path().join("index.json")).unwrap();
        let e = idx.get("a").unwrap();
        assert_eq!(e.image_path.as_deref(), Some(dir.path().join("img/a.png").as_path()));
        assert_eq!(e.load_truth().unwrap().get(0, 0), Some(1.0));
        assert_eq!(e.metadata["chart_type"], "line");
    }

    #[test]
    fn rejects_bad_ids() {
        let entry = |id: &str| IndexEntry {
            id: id.into(),
            image_path: None,
            truth_path: "t.tsv".into(),
            metadata: BTreeMap::new(),
        };
        let dup = DatasetIndex { entries: vec![entry("a"), entry("a")] };
        assert!(matches!(dup.validate(), Err(HarnessError::DuplicateId(_))));
        let slash = DatasetIndex { entries: vec![entry("../x")] };
        assert!(matches!(slash.validate(), Err(HarnessError::InvalidId(_))));
        let missing = entry("m");
        assert!(matches!(missing.load_truth(), Err(HarnessError::MissingTruth(_))));
    }
}
