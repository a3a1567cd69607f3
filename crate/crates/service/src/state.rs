use std::path::{Path, PathBuf};
use std::sync::Arc;

use aos_core::io::{parse_poses, read_stack, POSES_FILE};
use aos_core::{ScanStack, Scene};
use axum::body::Bytes;
use indexmap::IndexMap;
use parking_lot::Mutex;

/// A scan stack published by the service. Never mutated after loading.
#[derive(Debug)]
pub struct LoadedStack {
    pub id: String,
    pub dir: PathBuf,
    pub stack: ScanStack,
    pub scene: Option<Scene>,
}

/// Stacks by id plus the render cache.
#[derive(Debug)]
pub struct AppState {
    pub stacks: IndexMap<String, Arc<LoadedStack>>,
    pub cache: RenderCache,
}

impl AppState {
    pub fn new(stacks: Vec<LoadedStack>, cache_entries: usize) -> Self {
        Self {
            stacks: stacks.into_iter().map(|s| (s.id.clone(), Arc::new(s))).collect(),
            cache: RenderCache::new(cache_entries),
        }
    }

    /// Loads every stack under `data_dir`: the directory itself when it holds
    /// a poses file, and each immediate subdirectory that does. Ids are
    /// directory names; directories that fail to load are reported in the
    /// returned warnings and skipped.
    pub fn load(data_dir: &Path, cache_entries: usize) -> std::io::Result<(Self, Vec<String>)> {
        let mut dirs = Vec::new();
        if data_dir.join(POSES_FILE).is_file() {
            dirs.push(data_dir.to_path_buf());
        }
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(data_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.join(POSES_FILE).is_file())
            .collect();
        subdirs.sort();
        dirs.extend(subdirs);

        let mut stacks = Vec::new();
        let mut warnings = Vec::new();
        for dir in dirs {
            let Some(id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
                warnings.push(format!("{}: directory name is not valid UTF-8", dir.display()));
                continue;
            };
            if !valid_id(&id) {
                warnings.push(format!("{}: id '{id}' must use only letters, digits, '.', '_' or '-'", dir.display()));
                continue;
            }
            match read_stack(&dir) {
                Ok((stack, scene)) => stacks.push(LoadedStack { id, dir, stack, scene }),
                Err(e) => warnings.push(format!("{}: {e}", dir.display())),
            }
        }
        Ok((Self::new(stacks, cache_entries), warnings))
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

/// Pose x values exactly as written in a stack's sidecar.
pub fn sidecar_xs(dir: &Path) -> aos_core::Result<Vec<f64>> {
    let path = dir.join(POSES_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| aos_core::Error::Io { path: path.clone(), source: e })?;
    Ok(parse_poses(&path, &text)?.into_iter().map(|r| r.pose.x).collect())
}

/// Bounded least-recently-used map from request keys to encoded images.
#[derive(Debug)]
pub struct RenderCache {
    capacity: usize,
    entries: Mutex<IndexMap<String, Bytes>>,
}

impl RenderCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Mutex::new(IndexMap::new()),
        }
    }

    pub fn get(&self, key: &str) -> Option<Bytes> {
        let mut map = self.entries.lock();
        let value = map.shift_remove(key)?;
        map.insert(key.to_owned(), value.clone());
        Some(value)
    }

    pub fn insert(&self, key: String, value: Bytes) {
        if self.capacity == 0 {
            return;
        }
        let mut map = self.entries.lock();
        map.shift_remove(&key);
        map.insert(key, value);
        while map.len() > self.capacity {
            map.shift_remove_index(0);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
