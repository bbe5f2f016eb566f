//! External pair-vector store.
//!
//! Lets an externally computed encoder (a real language model run elsewhere)
//! drive stage 2: vectors are keyed by
//! `(query_id, cand_id, query_para_index, cand_para_index)`.
//!
//! Format `PLIV` v1:
//!
//! ```text
//! magic "PLIV" | u32 version | u32 d_repr | u64 count
//! count × { str query_id | str cand_id | u16 i | u16 j | d_repr × f32 }
//! ```
//!
//! Strings are u32 length-prefixed UTF-8; floats little-endian.

use std::collections::BTreeMap;
use std::path::Path;

use crate::binio::{atomic_write, ByteReader, FORMAT_VERSION};
use crate::error::{Error, Result};

const VECTOR_MAGIC: &[u8; 4] = b"PLIV";

type Key = (String, String, u16, u16);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalVectorStore {
    d_repr: usize,
    map: BTreeMap<Key, Vec<f32>>,
}

impl ExternalVectorStore {
    pub fn new(d_repr: usize) -> Self {
        ExternalVectorStore {
            d_repr,
            map: BTreeMap::new(),
        }
    }

    pub fn d_repr(&self) -> usize {
        self.d_repr
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn insert(
        &mut self,
        query_id: impl Into<String>,
        cand_id: impl Into<String>,
        i: u16,
        j: u16,
        vector: Vec<f32>,
    ) -> Result<()> {
        if vector.len() != self.d_repr {
            return Err(Error::Data(format!(
                "vector has dimension {}, store expects {}",
                vector.len(),
                self.d_repr
            )));
        }
        self.map.insert((query_id.into(), cand_id.into(), i, j), vector);
        Ok(())
    }

    pub fn get(&self, query_id: &str, cand_id: &str, i: u16, j: u16) -> Option<&[f32]> {
        self.map
            .get(&(query_id.to_string(), cand_id.to_string(), i, j))
            .map(|v| v.as_slice())
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            w.magic(VECTOR_MAGIC)?;
            w.u32(FORMAT_VERSION)?;
            w.u32(self.d_repr as u32)?;
            w.u64(self.map.len() as u64)?;
            for ((query_id, cand_id, i, j), vector) in &self.map {
                w.string(query_id)?;
                w.string(cand_id)?;
                w.u16(*i)?;
                w.u16(*j)?;
                for &v in vector {
                    w.f32(v)?;
                }
            }
            Ok(())
        })
    }

    pub fn import(path: &Path) -> Result<Self> {
        let mut r = ByteReader::open(path)?;
        r.magic(VECTOR_MAGIC)?;
        r.version(FORMAT_VERSION)?;
        let d_repr = r.u32()? as usize;
        if d_repr == 0 {
            return Err(Error::format("vector store declares dimension 0", r.offset() - 4));
        }
        let count = r.u64()?;
        let mut store = ExternalVectorStore::new(d_repr);
        for _ in 0..count {
            let query_id = r.string()?;
            let cand_id = r.string()?;
            let i = r.u16()?;
            let j = r.u16()?;
            let vector = r.f32_vec(d_repr)?;
            store.map.insert((query_id, cand_id, i, j), vector);
        }
        r.expect_eof()?;
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.bin");
        let store = ExternalVectorStore::new(8);
        store.export(&path).unwrap();
        assert_eq!(ExternalVectorStore::import(&path).unwrap(), store);
    }

    #[test]
    fn single_vector_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.bin");
        let mut store = ExternalVectorStore::new(3);
        store
            .insert("q1", "d1", 0, 2, vec![1.5, -0.0, f32::MIN_POSITIVE])
            .unwrap();
        store.export(&path).unwrap();
        let loaded = ExternalVectorStore::import(&path).unwrap();
        let v = loaded.get("q1", "d1", 0, 2).unwrap();
        assert_eq!(v[0].to_bits(), 1.5f32.to_bits());
        assert_eq!(v[1].to_bits(), (-0.0f32).to_bits());
        assert_eq!(v[2].to_bits(), f32::MIN_POSITIVE.to_bits());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut store = ExternalVectorStore::new(4);
        assert!(store.insert("q", "d", 0, 0, vec![1.0]).is_err());
    }

    #[test]
    fn truncated_file_reports_byte_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.bin");
        let mut store = ExternalVectorStore::new(2);
        store.insert("q1", "d1", 1, 1, vec![0.5, 0.25]).unwrap();
        store.export(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        match ExternalVectorStore::import(&path).unwrap_err() {
            Error::Format { offset, .. } => assert!(offset > 16),
            other => panic!("expected Format error, got {other:?}"),
        }
    }
}
