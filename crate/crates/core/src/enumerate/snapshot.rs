//! Binary snapshot format for complexity tables.
//!
//! ```text
//! magic      "PVMT"
//! version    u8                    (SNAPSHOT_VERSION)
//! isa        u8 length + ASCII     ("PVM-1")
//! budgets    u32 pair, u32 program, u32 data, u64 steps, u32 string_len
//! aux digest 32 bytes              SHA-256 of the aux bit block
//! aux        bit block
//! halting    u32 count + count × u64
//! entries    u64 count + count × (u32 byte length + entry payload)
//! digest     32 bytes              SHA-256 of every preceding byte
//! ```
//!
//! A bit block is a u32 bit length followed by the packed bytes. An entry
//! payload is: key block, u32 k, u64 optimal count, witness program block,
//! witness data block, u32 point count, then per point u32 program bits,
//! u32 data bits, program block, data block. All integers are little-endian.
//! Entries are written in canonical key order, so equal tables produce equal
//! bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{ComplexityTable, Entry, ParetoPoint};
use crate::bits::Bits;
use crate::pvm::{Budgets, ISA_VERSION};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"PVMT";
pub const SNAPSHOT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("snapshot version mismatch: file has {found}, reader expects {expected}")]
    VersionMismatch { found: String, expected: String },
}

fn corrupt(msg: impl Into<String>) -> SnapshotError {
    SnapshotError::CorruptSnapshot(msg.into())
}

fn put_bits(out: &mut Vec<u8>, b: &Bits) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(&b.to_bytes());
}

fn aux_digest(aux: &Bits) -> [u8; 32] {
    let mut block = Vec::new();
    put_bits(&mut block, aux);
    Sha256::digest(&block).into()
}

fn put_entry(out: &mut Vec<u8>, x: &Bits, e: &Entry) {
    let mut p = Vec::new();
    put_bits(&mut p, x);
    p.extend_from_slice(&e.k.to_le_bytes());
    p.extend_from_slice(&e.optimal_count.to_le_bytes());
    put_bits(&mut p, &e.witness_program);
    put_bits(&mut p, &e.witness_data);
    p.extend_from_slice(&(e.pareto.len() as u32).to_le_bytes());
    for pt in &e.pareto {
        p.extend_from_slice(&pt.program_bits.to_le_bytes());
        p.extend_from_slice(&pt.data_bits.to_le_bytes());
        put_bits(&mut p, &pt.program);
        put_bits(&mut p, &pt.data);
    }
    out.extend_from_slice(&(p.len() as u32).to_le_bytes());
    out.extend_from_slice(&p);
}

/// Serializes `t` with the current format version.
pub fn encode_snapshot(t: &ComplexityTable) -> Vec<u8> {
    encode_snapshot_version(t, SNAPSHOT_VERSION)
}

pub(crate) fn encode_snapshot_version(t: &ComplexityTable, version: u8) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.push(version);
    out.push(ISA_VERSION.len() as u8);
    out.extend_from_slice(ISA_VERSION.as_bytes());
    let b = &t.budgets;
    out.extend_from_slice(&b.max_pair_bits.to_le_bytes());
    out.extend_from_slice(&b.max_program_bits.to_le_bytes());
    out.extend_from_slice(&b.max_data_bits.to_le_bytes());
    out.extend_from_slice(&b.max_steps.to_le_bytes());
    out.extend_from_slice(&b.max_string_len.to_le_bytes());
    out.extend_from_slice(&aux_digest(&t.aux));
    put_bits(&mut out, &t.aux);
    out.extend_from_slice(&(t.halting_by_length.len() as u32).to_le_bytes());
    for c in &t.halting_by_length {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&(t.entries.len() as u64).to_le_bytes());
    for (x, e) in &t.entries {
        put_entry(&mut out, x, e);
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// SHA-256 of the snapshot bytes of `t`.
pub fn snapshot_digest(t: &ComplexityTable) -> [u8; 32] {
    Sha256::digest(encode_snapshot(t)).into()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.buf.len() - self.pos < n {
            return Err(corrupt("truncated"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bits(&mut self) -> Result<Bits, SnapshotError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len.div_ceil(8))?;
        Bits::from_bytes(bytes, len).ok_or_else(|| corrupt("nonzero padding in bit block"))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Parses snapshot bytes.
pub fn decode_snapshot(bytes: &[u8]) -> Result<ComplexityTable, SnapshotError> {
    decode_snapshot_as(bytes, SNAPSHOT_VERSION)
}

/// Parses snapshot bytes as a reader that understands only `reader_version`.
pub fn decode_snapshot_as(bytes: &[u8], reader_version: u8) -> Result<ComplexityTable, SnapshotError> {
    if bytes.len() < 4 + 1 + 32 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = bytes[4];
    if version != reader_version {
        return Err(SnapshotError::VersionMismatch {
            found: format!("v{version}"),
            expected: format!("v{reader_version}"),
        });
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("integrity digest does not match"));
    }
    let mut r = Reader { buf: body, pos: 5 };
    let isa_len = r.u8()? as usize;
    let isa = r.take(isa_len)?;
    if isa != ISA_VERSION.as_bytes() {
        return Err(SnapshotError::VersionMismatch {
            found: String::from_utf8_lossy(isa).into_owned(),
            expected: ISA_VERSION.to_string(),
        });
    }
    let budgets = Budgets {
        max_pair_bits: r.u32()?,
        max_program_bits: r.u32()?,
        max_data_bits: r.u32()?,
        max_steps: r.u64()?,
        max_string_len: r.u32()?,
    };
    budgets.validate().map_err(|e| corrupt(e.to_string()))?;
    let stored_aux_digest: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let aux = r.bits()?;
    if aux_digest(&aux) != stored_aux_digest {
        return Err(corrupt("aux digest does not match"));
    }
    let n_counts = r.u32()? as usize;
    let mut halting_by_length = Vec::with_capacity(n_counts);
    for _ in 0..n_counts {
        halting_by_length.push(r.u64()?);
    }
    let n_entries = r.u64()?;
    let mut entries = BTreeMap::new();
    let mut prev: Option<Bits> = None;
    for _ in 0..n_entries {
        let len = r.u32()? as usize;
        let mut er = Reader {
            buf: r.take(len)?,
            pos: 0,
        };
        let x = er.bits()?;
        let k = er.u32()?;
        let optimal_count = er.u64()?;
        let witness_program = er.bits()?;
        let witness_data = er.bits()?;
        let n_points = er.u32()?;
        let mut pareto = Vec::with_capacity(n_points as usize);
        for _ in 0..n_points {
            pareto.push(ParetoPoint {
                program_bits: er.u32()?,
                data_bits: er.u32()?,
                program: er.bits()?,
                data: er.bits()?,
            });
        }
        if !er.done() {
            return Err(corrupt("entry length mismatch"));
        }
        if prev.as_ref().is_some_and(|p| *p >= x) {
            return Err(corrupt("entries out of canonical order"));
        }
        prev = Some(x.clone());
        entries.insert(
            x,
            Entry {
                k,
                witness_program,
                witness_data,
                pareto,
                optimal_count,
            },
        );
    }
    if !r.done() {
        return Err(corrupt("trailing bytes before digest"));
    }
    Ok(ComplexityTable {
        budgets,
        aux,
        entries,
        halting_by_length,
    })
}

/// Writes `t` to `path` atomically (temp file, then rename). Returns the file digest.
pub fn save_table(t: &ComplexityTable, path: &Path) -> Result<[u8; 32], SnapshotError> {
    let bytes = encode_snapshot(t);
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("snapshot"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(Sha256::digest(&bytes).into())
}

pub fn load_table(path: &Path) -> Result<ComplexityTable, SnapshotError> {
    decode_snapshot(&fs::read(path)?)
}

/// Loads `path` as a reader of format version `reader_version`.
pub fn load_table_as(path: &Path, reader_version: u8) -> Result<ComplexityTable, SnapshotError> {
    decode_snapshot_as(&fs::read(path)?, reader_version)
}
