//! RQAV vector files.
//!
//! Layout, all little-endian: `b"RQAV"`, `u32` version (1), `u64` rows,
//! `u32` dim, then `rows * dim` `f32` values row-major. Row ids live in a
//! companion manifest next to the vector file (same stem, `.ids` extension),
//! UTF-8 with one id per line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use reqa_core::EmbeddingMatrix;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"RQAV";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum VectorFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad magic {found:?}, expected \"RQAV\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported RQAV version {0}")]
    Version(u32),
    #[error("truncated vector file: need {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("{extra} trailing bytes after {rows}x{dim} payload")]
    TrailingBytes { rows: u64, dim: u32, extra: u64 },
    #[error("zero dimension with {rows} rows")]
    ZeroDim { rows: u64 },
    #[error("manifest lists {ids} ids for {rows} rows")]
    ManifestMismatch { ids: usize, rows: u64 },
    #[error("manifest is not UTF-8")]
    ManifestEncoding,
    #[error("id {0:?} cannot be written to a line-based manifest")]
    BadId(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
}

impl VectorFileError {
    pub fn code(&self) -> &'static str {
        match self {
            VectorFileError::Io { .. } => "io",
            VectorFileError::BadMagic { .. } => "vector_bad_magic",
            VectorFileError::Version(_) => "vector_version",
            VectorFileError::Truncated { .. } => "vector_truncated",
            VectorFileError::TrailingBytes { .. } => "vector_trailing_bytes",
            VectorFileError::ZeroDim { .. } => "vector_zero_dim",
            VectorFileError::ManifestMismatch { .. } | VectorFileError::ManifestEncoding | VectorFileError::BadId(_) => "vector_manifest",
            VectorFileError::NonFinite { .. } => "vector_non_finite",
        }
    }
}

type Result<T> = std::result::Result<T, VectorFileError>;

pub fn manifest_path(vectors: &Path) -> PathBuf {
    vectors.with_extension("ids")
}

/// Encodes the header and payload.
pub fn encode_vectors(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.data().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes header and payload, returning `(dim, values)`.
pub fn decode_vectors(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(VectorFileError::BadMagic { found: bytes[..bytes.len().min(4)].to_vec() });
    }
    if bytes.len() < HEADER_LEN {
        return Err(VectorFileError::Truncated { expected: HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(VectorFileError::Version(version));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    if dim == 0 {
        return Err(VectorFileError::ZeroDim { rows });
    }
    let payload = (bytes.len() - HEADER_LEN) as u64;
    let expected = rows.saturating_mul(u64::from(dim) * 4);
    if payload < expected {
        return Err(VectorFileError::Truncated { expected: expected.saturating_add(HEADER_LEN as u64), found: bytes.len() as u64 });
    }
    if payload > expected {
        return Err(VectorFileError::TrailingBytes { rows, dim, extra: payload - expected });
    }
    let dim = dim as usize;
    let data: Vec<f32> = bytes[HEADER_LEN..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(VectorFileError::NonFinite { row: i / dim, col: i % dim });
    }
    Ok((rows as usize, dim, data))
}

pub fn encode_manifest(ids: &[String]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for id in ids {
        if id.is_empty() || id.contains(['\n', '\r']) {
            return Err(VectorFileError::BadId(id.clone()));
        }
        out.extend_from_slice(id.as_bytes());
        out.push(b'\n');
    }
    Ok(out)
}

pub fn decode_manifest(bytes: &[u8]) -> Result<Vec<String>> {
    let text = std::str::from_utf8(bytes).map_err(|_| VectorFileError::ManifestEncoding)?;
    let text = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Ok(Vec::new());
    }
    Ok(text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l).to_string()).collect())
}

pub fn write_matrix(path: &Path, m: &EmbeddingMatrix) -> Result<()> {
    let manifest = encode_manifest(m.ids())?;
    write_file(path, &encode_vectors(m))?;
    write_file(&manifest_path(path), &manifest)
}

pub fn read_matrix(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).map_err(|source| VectorFileError::Io { path: path.to_path_buf(), source })?;
    let (rows, dim, data) = decode_vectors(&bytes)?;
    let mpath = manifest_path(path);
    let ids = decode_manifest(&fs::read(&mpath).map_err(|source| VectorFileError::Io { path: mpath, source })?)?;
    if ids.len() != rows {
        return Err(VectorFileError::ManifestMismatch { ids: ids.len(), rows: rows as u64 });
    }
    Ok(EmbeddingMatrix::new(dim, data, ids).expect("shape checked"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| VectorFileError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    w.write_all(bytes).map_err(io)?;
    w.flush().map_err(io)
}
