//! Little-endian binary readers/writers shared by all on-disk formats.
//!
//! Every binary artifact starts with a 4-byte magic and a `u32` version.
//! Strings are `u32` length-prefixed UTF-8. Readers track the byte offset so
//! truncation errors can name the position at which decoding failed. Writers
//! go through [`atomic_write`] (write to a temp file, then rename) so partial
//! files never appear under the final name.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Shared container version for all `plir` binary formats.
pub const FORMAT_VERSION: u32 = 1;

pub struct ByteReader<R: Read> {
    inner: R,
    offset: u64,
    path: PathBuf,
}

impl ByteReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(ByteReader {
            inner: BufReader::new(file),
            offset: 0,
            path: path.to_path_buf(),
        })
    }
}

impl<R: Read> ByteReader<R> {
    pub fn new(inner: R, path: impl Into<PathBuf>) -> Self {
        ByteReader {
            inner,
            offset: 0,
            path: path.into(),
        }
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::format(
                    format!("truncated file {}", self.path.display()),
                    self.offset,
                )
            } else {
                Error::io(&self.path, e)
            }
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        if &buf != expected {
            return Err(Error::format(
                format!(
                    "bad magic in {}: expected {:?}, found {:?}",
                    self.path.display(),
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(&buf)
                ),
                self.offset - 4,
            ));
        }
        Ok(())
    }

    pub fn version(&mut self, expected: u32) -> Result<()> {
        let v = self.u32()?;
        if v != expected {
            return Err(Error::format(
                format!(
                    "unsupported format version {v} in {} (expected {expected})",
                    self.path.display()
                ),
                self.offset - 4,
            ));
        }
        Ok(())
    }

    pub fn u16(&mut self) -> Result<u16> {
        let mut buf = [0u8; 2];
        self.fill(&mut buf)?;
        Ok(u16::from_le_bytes(buf))
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(u64::from_le_bytes(buf))
    }

    pub fn i64(&mut self) -> Result<i64> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(i64::from_le_bytes(buf))
    }

    pub fn f32(&mut self) -> Result<f32> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        Ok(f32::from_le_bytes(buf))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    }

    pub fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let start = self.offset;
        let mut buf = vec![0u8; len];
        self.fill(&mut buf)?;
        String::from_utf8(buf).map_err(|_| Error::format("invalid UTF-8 in string field", start))
    }

    pub fn f32_vec(&mut self, len: usize) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.f32()?);
        }
        Ok(out)
    }

    pub fn f64_vec(&mut self, len: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    /// Fails unless the stream is exhausted. Guards against trailing garbage.
    pub fn expect_eof(&mut self) -> Result<()> {
        let mut buf = [0u8; 1];
        match self.inner.read(&mut buf) {
            Ok(0) => Ok(()),
            Ok(_) => Err(Error::format(
                format!("trailing bytes in {}", self.path.display()),
                self.offset,
            )),
            Err(e) => Err(Error::io(&self.path, e)),
        }
    }
}

pub struct ByteWriter<W: Write> {
    inner: W,
    path: PathBuf,
}

impl<W: Write> ByteWriter<W> {
    pub fn new(inner: W, path: impl Into<PathBuf>) -> Self {
        ByteWriter {
            inner,
            path: path.into(),
        }
    }

    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.inner
            .write_all(bytes)
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        self.put(magic)
    }

    pub fn u16(&mut self, v: u16) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn i64(&mut self, v: i64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn string(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.put(s.as_bytes())
    }
}

/// Writes `path` atomically: the content goes to `path.tmp` first and is
/// renamed over the target only after a successful flush.
pub fn atomic_write(
    path: &Path,
    write: impl FnOnce(&mut ByteWriter<BufWriter<File>>) -> Result<()>,
) -> Result<()> {
    let tmp = tmp_path(path);
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut writer = ByteWriter::new(BufWriter::new(file), path.to_path_buf());
    write(&mut writer)?;
    writer
        .inner
        .flush()
        .map_err(|e| Error::io(path, e))?;
    drop(writer);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Text-file variant of [`atomic_write`].
pub fn atomic_write_text(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let tmp = tmp_path(path);
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut writer = BufWriter::new(file);
    write(&mut writer).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))?;
    drop(writer);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

// ============================================================================
// Checkpoint container: named f64 tensors plus integer metadata
// ============================================================================

const CHECKPOINT_MAGIC: &[u8; 4] = b"PLIC";

/// A serialized model: a kind tag, integer metadata (dimensions, seeds,
/// enum discriminants), and named parameter tensors with shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: Vec<(String, i64)>,
    pub tensors: Vec<CheckpointTensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Checkpoint {
    pub fn meta(&self, name: &str) -> Result<i64> {
        self.meta
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Data(format!("checkpoint is missing metadata field `{name}`")))
    }

    pub fn tensor(&self, name: &str) -> Result<&CheckpointTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Data(format!("checkpoint is missing tensor `{name}`")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            w.magic(CHECKPOINT_MAGIC)?;
            w.u32(FORMAT_VERSION)?;
            w.string(&self.kind)?;
            w.u32(self.meta.len() as u32)?;
            for (name, value) in &self.meta {
                w.string(name)?;
                w.i64(*value)?;
            }
            w.u32(self.tensors.len() as u32)?;
            for t in &self.tensors {
                w.string(&t.name)?;
                w.u32(t.shape.len() as u32)?;
                for &d in &t.shape {
                    w.u64(d as u64)?;
                }
                debug_assert_eq!(t.data.len(), t.shape.iter().product::<usize>());
                for &v in &t.data {
                    w.f64(v)?;
                }
            }
            Ok(())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = ByteReader::open(path)?;
        r.magic(CHECKPOINT_MAGIC)?;
        r.version(FORMAT_VERSION)?;
        let kind = r.string()?;
        let n_meta = r.u32()? as usize;
        let mut meta = Vec::with_capacity(n_meta);
        for _ in 0..n_meta {
            let name = r.string()?;
            let value = r.i64()?;
            meta.push((name, value));
        }
        let n_tensors = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(n_tensors);
        for _ in 0..n_tensors {
            let name = r.string()?;
            let ndim = r.u32()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u64()? as usize);
            }
            let len: usize = shape.iter().product();
            let data = r.f64_vec(len)?;
            tensors.push(CheckpointTensor { name, shape, data });
        }
        r.expect_eof()?;
        Ok(Checkpoint {
            kind,
            meta,
            tensors,
        })
    }
}
