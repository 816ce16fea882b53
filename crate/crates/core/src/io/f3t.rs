//! F3T tensor container: a minimal binary format for named float32
//! tensors.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "F3TK"
//! version u32      1
//! count   u32      number of entries
//! entry   key_len u16, key (UTF-8), rank u8, dims rank*u32,
//!         payload product(dims)*f32
//! ```
//!
//! Payload bytes are raw IEEE-754 bit patterns, so a write/read round trip
//! preserves every float exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"F3TK";
pub const VERSION: u32 = 1;

/// Refuse to allocate more than this many floats per entry.
const MAX_ELEMENTS: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq)]
pub struct F3tEntry {
    pub key: String,
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl F3tEntry {
    pub fn new(key: impl Into<String>, dims: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        let key = key.into();
        if key.len() > u16::MAX as usize {
            return Err(Error::invalid("entry key longer than 65535 bytes"));
        }
        if dims.len() > u8::MAX as usize {
            return Err(Error::invalid("entry rank exceeds 255"));
        }
        let expected = dims
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
        match expected {
            Some(n) if n == data.len() as u64 => Ok(F3tEntry { key, dims, data }),
            _ => Err(Error::invalid("entry payload does not match its dims")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct F3tContainer {
    entries: Vec<F3tEntry>,
}

impl F3tContainer {
    pub fn new() -> Self {
        F3tContainer::default()
    }

    pub fn push(&mut self, entry: F3tEntry) -> Result<()> {
        if self.entries.iter().any(|e| e.key == entry.key) {
            return Err(Error::invalid(format!("duplicate key {:?}", entry.key)));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[F3tEntry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&F3tEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        for entry in &self.entries {
            w.write_all(&(entry.key.len() as u16).to_le_bytes())?;
            w.write_all(entry.key.as_bytes())?;
            w.write_all(&(entry.dims.len() as u8).to_le_bytes())?;
            for &d in &entry.dims {
                w.write_all(&d.to_le_bytes())?;
            }
            for &v in &entry.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "magic")?;
        if magic != MAGIC {
            return Err(Error::malformed("bad magic bytes, not an F3T container"));
        }
        let version = read_u32(&mut r, "version")?;
        if version != VERSION {
            return Err(Error::malformed(format!(
                "unsupported container version {version}"
            )));
        }
        let count = read_u32(&mut r, "entry count")?;
        let mut container = F3tContainer::new();
        for idx in 0..count {
            let key_len = read_u16(&mut r, "key length")? as usize;
            let mut key_bytes = vec![0u8; key_len];
            read_exact(&mut r, &mut key_bytes, "key")?;
            let key = String::from_utf8(key_bytes)
                .map_err(|_| Error::malformed(format!("entry {idx}: key is not UTF-8")))?;
            let mut rank = [0u8; 1];
            read_exact(&mut r, &mut rank, "rank")?;
            let mut dims = Vec::with_capacity(rank[0] as usize);
            for _ in 0..rank[0] {
                dims.push(read_u32(&mut r, "dim")?);
            }
            let elements = dims
                .iter()
                .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
                .filter(|&n| n <= MAX_ELEMENTS)
                .ok_or_else(|| Error::malformed(format!("entry {key:?}: dims overflow")))?;
            let mut data = Vec::with_capacity(elements as usize);
            let mut buf = [0u8; 4];
            for _ in 0..elements {
                read_exact(&mut r, &mut buf, "payload")?;
                data.push(f32::from_le_bytes(buf));
            }
            container
                .push(F3tEntry { key, dims, data })
                .map_err(|e| Error::malformed(e.to_string()))?;
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::malformed(
                "trailing bytes after the declared entries",
            ));
        }
        Ok(container)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::malformed(format!("truncated container while reading {what}")))
}

fn read_u16(r: &mut impl Read, what: &str) -> Result<u16> {
    let mut buf = [0u8; 2];
    read_exact(r, &mut buf, what)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}
