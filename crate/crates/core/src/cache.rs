//! On-disk cache of built abstractions.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abstraction::{build_abstraction, AbstractionError, CellLayout, GridAbstraction, InputSet};
use crate::system::{BoxReachSpec, ContinuousSystem};

pub const CACHE_ENV: &str = "REACH_ENTROPY_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry {
    abstraction: GridAbstraction,
    transition_count: usize,
}

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV).map_or_else(|| std::env::temp_dir().join("reach-entropy-cache"), PathBuf::from)
}

pub fn cache_key(sys: &ContinuousSystem, spec: &BoxReachSpec, layout: &CellLayout, inputs: &InputSet) -> String {
    let json = serde_json::to_vec(&(env!("CARGO_PKG_VERSION"), sys, spec, layout, inputs)).expect("serializable");
    Sha256::digest(json).iter().map(|b| format!("{b:02x}")).collect()
}

/// Abstraction with its transition count, and whether it came from disk.
pub struct Loaded {
    pub abstraction: GridAbstraction,
    pub transition_count: usize,
    pub from_cache: bool,
}

/// Reads the cached abstraction or builds and stores it. Unreadable or
/// stale entries are rebuilt; write failures are ignored.
pub fn load_or_build(
    sys: &ContinuousSystem,
    spec: &BoxReachSpec,
    layout: CellLayout,
    inputs: InputSet,
    use_cache: bool,
) -> Result<Loaded, AbstractionError> {
    let path = cache_dir().join(format!("{}.bin", cache_key(sys, spec, &layout, &inputs)));
    if use_cache {
        if let Some(entry) = std::fs::read(&path).ok().and_then(|b| bincode::deserialize::<Entry>(&b).ok()) {
            return Ok(Loaded {
                abstraction: entry.abstraction,
                transition_count: entry.transition_count,
                from_cache: true,
            });
        }
    }
    let abstraction = build_abstraction(sys, spec, layout, inputs)?;
    let transition_count = abstraction.transition_count();
    let entry = Entry { abstraction, transition_count };
    if use_cache {
        if let Ok(bytes) = bincode::serialize(&entry) {
            let _ = std::fs::create_dir_all(cache_dir());
            let tmp = path.with_extension("tmp");
            if std::fs::write(&tmp, bytes).is_ok() {
                let _ = std::fs::rename(&tmp, &path);
            }
        }
    }
    Ok(Loaded { abstraction: entry.abstraction, transition_count: entry.transition_count, from_cache: false })
}
