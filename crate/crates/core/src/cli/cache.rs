//! On-disk sieve tables.
//!
//! Layout, all integers little-endian `u64`:
//! `"TRIREP1"`, coefficient count `k`, `k` coefficients, bound `N`, word
//! count, the packed words (bit `n` is bit `n % 64` of word `n / 64`), and
//! the wrapping sum of the words.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::triangular::{self, RepTable, TriangularForm};

pub const MAGIC: &[u8; 7] = b"TRIREP1";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache corrupt: {0}")]
    Corrupt(&'static str),
    #[error("cache checksum mismatch: stored {stored:#x}, computed {computed:#x}")]
    Checksum { stored: u64, computed: u64 },
    #[error("cache holds form {found}, wanted {wanted}")]
    FormMismatch { found: TriangularForm, wanted: TriangularForm },
    #[error("cache bound {have} is below the requested {want}")]
    BoundTooSmall { have: u64, want: u64 },
    #[error(transparent)]
    Sieve(#[from] triangular::Error),
}

fn checksum(words: &[u64]) -> u64 {
    words.iter().fold(0u64, |acc, &w| acc.wrapping_add(w))
}

pub fn encode(table: &RepTable) -> Vec<u64> {
    let form = table.form().coeffs();
    let words = table.words();
    let mut out = Vec::with_capacity(form.len() + words.len() + 4);
    out.push(form.len() as u64);
    out.extend_from_slice(form);
    out.push(table.bound());
    out.push(words.len() as u64);
    out.extend_from_slice(words);
    out.push(checksum(words));
    out
}

pub fn to_bytes(table: &RepTable) -> Vec<u8> {
    let fields = encode(table);
    let mut bytes = Vec::with_capacity(MAGIC.len() + 8 * fields.len());
    bytes.extend_from_slice(MAGIC);
    fields.iter().for_each(|v| bytes.extend_from_slice(&v.to_le_bytes()));
    bytes
}

pub fn from_bytes(bytes: &[u8]) -> Result<RepTable, CacheError> {
    let body = bytes.strip_prefix(&MAGIC[..]).ok_or(CacheError::Corrupt("bad magic"))?;
    if body.len() % 8 != 0 {
        return Err(CacheError::Corrupt("length is not a whole number of words"));
    }
    let mut fields = body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap()));
    let mut next = || fields.next().ok_or(CacheError::Corrupt("truncated"));
    let k = next()?;
    if k > (body.len() / 8) as u64 {
        return Err(CacheError::Corrupt("truncated"));
    }
    let coeffs = (0..k).map(|_| next()).collect::<Result<Vec<_>, _>>()?;
    let form = TriangularForm::new(coeffs).map_err(|_| CacheError::Corrupt("invalid form"))?;
    let bound = next()?;
    let count = next()?;
    if count != triangular::word_count(bound) as u64 {
        return Err(CacheError::Corrupt("word count does not match bound"));
    }
    let words = (0..count).map(|_| next()).collect::<Result<Vec<_>, _>>()?;
    let stored = next()?;
    if next().is_ok() {
        return Err(CacheError::Corrupt("trailing data"));
    }
    let computed = checksum(&words);
    if stored != computed {
        return Err(CacheError::Checksum { stored, computed });
    }
    RepTable::from_words(form, bound, words).ok_or(CacheError::Corrupt("bits set beyond bound"))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn cache_store(path: &Path, table: &RepTable) -> Result<(), CacheError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&to_bytes(table))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn cache_load(path: &Path) -> Result<RepTable, CacheError> {
    from_bytes(&fs::read(path)?)
}

/// Loads a cached table for `form` and cuts it down to `bound`.
pub fn cache_load_for(path: &Path, form: &TriangularForm, bound: u64) -> Result<RepTable, CacheError> {
    let table = cache_load(path)?;
    if table.form() != form {
        return Err(CacheError::FormMismatch { found: table.form().clone(), wanted: form.clone() });
    }
    if table.bound() < bound {
        return Err(CacheError::BoundTooSmall { have: table.bound(), want: bound });
    }
    Ok(table.truncated(bound))
}

/// File name for a form inside a cache directory.
pub fn cache_path(dir: &Path, form: &TriangularForm) -> PathBuf {
    let key = form.coeffs().iter().map(u64::to_string).collect::<Vec<_>>().join("_");
    dir.join(format!("trirep-{key}.bin"))
}

/// Where a table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Computed,
    Cache,
}

/// The table for `form` up to `bound`, served from `dir` when a large enough
/// file exists there and stored back otherwise. Unreadable cache files are
/// replaced.
pub fn cached_table(
    dir: Option<&Path>,
    form: &TriangularForm,
    bound: u64,
) -> Result<(RepTable, Source), CacheError> {
    let Some(dir) = dir else {
        return Ok((triangular::represented_up_to(form, bound)?, Source::Computed));
    };
    let path = cache_path(dir, form);
    if let Ok(table) = cache_load_for(&path, form, bound) {
        return Ok((table, Source::Cache));
    }
    let table = triangular::represented_up_to(form, bound)?;
    fs::create_dir_all(dir)?;
    cache_store(&path, &table)?;
    Ok((table, Source::Computed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> RepTable {
        triangular::represented_up_to(&"1,1,3".parse().unwrap(), 10_000).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        cache_store(&path, &table()).unwrap();
        assert_eq!(cache_load(&path).unwrap(), table());
    }

    #[test]
    fn header_layout() {
        let bytes = to_bytes(&table());
        assert_eq!(&bytes[..7], b"TRIREP1");
        assert_eq!(u64::from_le_bytes(bytes[7..15].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[39..47].try_into().unwrap()), 10_000);
        assert_eq!(bytes.len(), 7 + 8 * (1 + 3 + 2 + 157 + 1));
    }

    #[test]
    fn flipped_bit_is_rejected() {
        let mut bytes = to_bytes(&table());
        bytes[7 + 8 * 6 + 3] ^= 0x10;
        assert!(matches!(from_bytes(&bytes), Err(CacheError::Checksum { .. })));
        let mut bytes = to_bytes(&table());
        bytes[0] = b'X';
        assert!(matches!(from_bytes(&bytes), Err(CacheError::Corrupt("bad magic"))));
        let bytes = to_bytes(&table());
        assert!(from_bytes(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn larger_file_serves_smaller_query() {
        let dir = tempfile::tempdir().unwrap();
        let form: TriangularForm = "1,1,3".parse().unwrap();
        let (_, src) = cached_table(Some(dir.path()), &form, 100_000).unwrap();
        assert_eq!(src, Source::Computed);
        let (t, src) = cached_table(Some(dir.path()), &form, 10_000).unwrap();
        assert_eq!(src, Source::Cache);
        assert_eq!(t, table());
        let (_, src) = cached_table(Some(dir.path()), &form, 200_000).unwrap();
        assert_eq!(src, Source::Computed);
    }
}
