use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FieldlabError, Result};
use crate::nonlinearity::Nonlinearity;
use crate::shooter::{RadialProfile, ShootingOptions};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const LOCK_NAME: &str = "fieldlab.lock";

/// Cache directory, overridden by `FIELDLAB_CACHE` when set.
pub fn resolve_cache_dir(configured: &Path) -> PathBuf {
    match std::env::var_os("FIELDLAB_CACHE") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

/// Hex sha256 of `(f descriptor, N, nodes, tolerances)`.
pub fn cache_key(f: &Nonlinearity, dimension: usize, nodes: usize, opts: &ShootingOptions) -> String {
    let io = &opts.integrator;
    let doc = serde_json::json!({
        "f": f.descriptor(),
        "dimension": dimension,
        "nodes": nodes,
        "atol": io.atol,
        "rtol": io.rtol,
        "max_step": io.max_step,
        "max_radius": io.max_radius,
        "bisection_tol": opts.bisection_tol,
        "tail_rel": opts.tail_rel,
    });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub tool_version: String,
    pub f_descriptor: serde_json::Value,
    pub nodes: usize,
    pub profile: RadialProfile,
}

/// Exclusive handle on a cache directory; the lock file is removed on drop.
#[derive(Debug)]
pub struct ProfileCache {
    dir: PathBuf,
    lock: PathBuf,
}

impl ProfileCache {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let lock = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(FieldlabError::Config(format!(
                    "cache {} is locked by another run (remove {} if stale)",
                    dir.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(e.into()),
        }
        Ok(Self { dir: dir.to_path_buf(), lock })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("profile-{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<RadialProfile>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let entry: CacheEntry = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        Ok((entry.key == key).then_some(entry.profile))
    }

    pub fn put(&self, key: &str, nodes: usize, profile: &RadialProfile) -> Result<()> {
        let entry = CacheEntry {
            key: key.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            f_descriptor: profile.nonlinearity.descriptor(),
            nodes,
            profile: profile.clone(),
        };
        let tmp = self.dir.join(format!(".profile-{key}.tmp"));
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer(&mut w, &entry)?;
            w.flush()?;
        }
        fs::rename(tmp, self.path(key))?;
        Ok(())
    }

    /// All cache entries in file-name order.
    pub fn entries(&self) -> Result<Vec<(PathBuf, CacheEntry)>> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("profile-") && n.ends_with(".json"))
            })
            .collect();
        paths.sort();
        paths
            .into_iter()
            .map(|p| {
                let entry: CacheEntry = serde_json::from_reader(BufReader::new(File::open(&p)?))?;
                Ok((p, entry))
            })
            .collect()
    }
}

impl Drop for ProfileCache {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
