//! Content-addressed table cache (memory LRU plus optional snapshot directory).

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use lru::LruCache;
use sha2::{Digest, Sha256};

use super::{build_table_with, load_table, save_table, BuildOptions, Complexity, ComplexityTable, TableView};
use crate::bits::Bits;
use crate::pvm::{Budgets, ISA_VERSION};
use crate::Error;

/// Environment variable naming the snapshot directory.
pub const CACHE_DIR_ENV: &str = "SOPHLAB_CACHE_DIR";

/// `$SOPHLAB_CACHE_DIR`, else `$XDG_CACHE_HOME/sophlab`, else `$HOME/.cache/sophlab`,
/// else `./.sophlab-cache`.
pub fn default_cache_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME").filter(|d| !d.is_empty()) {
        return PathBuf::from(d).join("sophlab");
    }
    if let Some(h) = std::env::var_os("HOME").filter(|d| !d.is_empty()) {
        return PathBuf::from(h).join(".cache").join("sophlab");
    }
    PathBuf::from(".sophlab-cache")
}

/// Content address of the table for `(ISA version, budgets, aux)`.
pub fn table_address(b: &Budgets, aux: &Bits) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(ISA_VERSION.as_bytes());
    h.update(b.max_pair_bits.to_le_bytes());
    h.update(b.max_program_bits.to_le_bytes());
    h.update(b.max_data_bits.to_le_bytes());
    h.update(b.max_steps.to_le_bytes());
    h.update(b.max_string_len.to_le_bytes());
    h.update((aux.len() as u32).to_le_bytes());
    h.update(aux.to_bytes());
    h.finalize().into()
}

/// Snapshot file for `(budgets, aux)` inside `dir`.
pub fn snapshot_path(dir: &Path, b: &Budgets, aux: &Bits) -> PathBuf {
    dir.join(format!("{}.pvmt", hex::encode(table_address(b, aux))))
}

fn approx_bytes(t: &ComplexityTable) -> usize {
    let per_entry = std::mem::size_of::<Bits>() + std::mem::size_of::<super::Entry>() + 64;
    t.entries
        .values()
        .map(|e| per_entry + e.pareto.len() * std::mem::size_of::<super::ParetoPoint>())
        .sum::<usize>()
        + 256
}

struct Slots {
    lru: LruCache<[u8; 32], Arc<ComplexityTable>>,
    bytes: usize,
}

/// Tables keyed by content address, evicted least-recently-used past a memory cap.
pub struct TableCache {
    slots: Mutex<Slots>,
    memory_cap: usize,
    options: BuildOptions,
    dir: Option<PathBuf>,
}

impl TableCache {
    pub fn new(memory_cap: usize, options: BuildOptions) -> Self {
        TableCache {
            slots: Mutex::new(Slots {
                lru: LruCache::new(NonZeroUsize::new(4096).expect("nonzero")),
                bytes: 0,
            }),
            memory_cap,
            options,
            dir: None,
        }
    }

    /// Also persist and reuse snapshots under `dir`.
    pub fn with_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dir = Some(dir.into());
        self
    }

    pub fn cached_tables(&self) -> usize {
        self.slots.lock().expect("cache lock").lru.len()
    }

    /// The table for `(b, aux)`: from memory, then disk, else built.
    pub fn table(&self, b: &Budgets, aux: &Bits) -> Result<Arc<ComplexityTable>, Error> {
        let key = table_address(b, aux);
        if let Some(t) = self.slots.lock().expect("cache lock").lru.get(&key) {
            return Ok(Arc::clone(t));
        }
        let path = self.dir.as_ref().map(|d| snapshot_path(d, b, aux));
        let loaded = path.as_ref().filter(|p| p.exists()).and_then(|p| load_table(p).ok());
        let table = match loaded {
            Some(t) if t.budgets == *b && t.aux == *aux => t,
            _ => {
                let t = build_table_with(b, aux, self.options)?;
                if let Some(p) = &path {
                    save_table(&t, p)?;
                }
                t
            }
        };
        let table = Arc::new(table);
        let size = approx_bytes(&table);
        let mut slots = self.slots.lock().expect("cache lock");
        if let Some(old) = slots.lru.put(key, Arc::clone(&table)) {
            slots.bytes -= approx_bytes(&old);
        }
        slots.bytes += size;
        while slots.bytes > self.memory_cap && slots.lru.len() > 1 {
            match slots.lru.pop_lru() {
                Some((_, t)) => slots.bytes -= approx_bytes(&t),
                None => break,
            }
        }
        Ok(table)
    }

    /// `K_T(x | y)`: complexity of `x` in the table with auxiliary tape `y`.
    pub fn k_cond(&self, x: &Bits, y: &Bits, b: &Budgets) -> Result<Complexity, Error> {
        Ok(self.table(b, y)?.k(x))
    }
}

fn global_cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(|| TableCache::new(1 << 30, BuildOptions::default()))
}

/// `K_T(x | y)` using a process-wide in-memory cache.
pub fn k_cond(x: &Bits, y: &Bits, b: &Budgets) -> Result<Complexity, Error> {
    global_cache().k_cond(x, y, b)
}
