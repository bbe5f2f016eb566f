//! Interaction-matrix cache.
//!
//! The matrices are the pipeline's expensive intermediate; caching them
//! decouples pair encoding from aggregator training. Format `PLIM` v1:
//!
//! ```text
//! magic "PLIM" | u32 version | u32 d_repr | u64 count
//! count × { str query_id | str cand_id | u16 n | u16 m | n·m·d_repr × f32 }
//! ```
//!
//! Files are written atomically; round-trips are bit-exact.

use std::path::Path;

use super::InteractionMatrix;
use crate::binio::{atomic_write, ByteReader, FORMAT_VERSION};
use crate::error::{Error, Result};

const CACHE_MAGIC: &[u8; 4] = b"PLIM";

pub fn write_cache(matrices: &[InteractionMatrix], path: &Path) -> Result<()> {
    let d_repr = matrices.first().map(|m| m.d_repr).unwrap_or(0);
    for m in matrices {
        if m.d_repr != d_repr {
            return Err(Error::Data(format!(
                "matrix ({}, {}) has dimension {}, cache expects {d_repr}",
                m.query_id, m.cand_id, m.d_repr
            )));
        }
        if m.n > u16::MAX as usize || m.m > u16::MAX as usize {
            return Err(Error::Data(format!(
                "matrix ({}, {}) exceeds the u16 size limit",
                m.query_id, m.cand_id
            )));
        }
    }
    atomic_write(path, |w| {
        w.magic(CACHE_MAGIC)?;
        w.u32(FORMAT_VERSION)?;
        w.u32(d_repr as u32)?;
        w.u64(matrices.len() as u64)?;
        for m in matrices {
            w.string(&m.query_id)?;
            w.string(&m.cand_id)?;
            w.u16(m.n as u16)?;
            w.u16(m.m as u16)?;
            debug_assert_eq!(m.values.len(), m.n * m.m * m.d_repr);
            for &v in &m.values {
                w.f32(v)?;
            }
        }
        Ok(())
    })
}

pub fn read_cache(path: &Path) -> Result<Vec<InteractionMatrix>> {
    let mut r = ByteReader::open(path)?;
    r.magic(CACHE_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let d_repr = r.u32()? as usize;
    let count = r.u64()? as usize;
    let mut matrices = Vec::with_capacity(count);
    for _ in 0..count {
        let query_id = r.string()?;
        let cand_id = r.string()?;
        let n = r.u16()? as usize;
        let m = r.u16()? as usize;
        if n == 0 || m == 0 {
            return Err(Error::format(
                format!("matrix ({query_id}, {cand_id}) has empty shape {n}x{m}"),
                r.offset(),
            ));
        }
        let values = r.f32_vec(n * m * d_repr)?;
        matrices.push(InteractionMatrix {
            query_id,
            cand_id,
            n,
            m,
            d_repr,
            values,
        });
    }
    r.expect_eof()?;
    Ok(matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, id: usize, d: usize) -> InteractionMatrix {
        let n = rng.gen_range(1..6);
        let m = rng.gen_range(1..6);
        InteractionMatrix {
            query_id: format!("q{id}"),
            cand_id: format!("c{id}"),
            n,
            m,
            d_repr: d,
            values: (0..n * m * d).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        }
    }

    #[test]
    fn empty_cache_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        write_cache(&[], &path).unwrap();
        assert!(read_cache(&path).unwrap().is_empty());
    }

    #[test]
    fn single_matrix_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        let m = InteractionMatrix {
            query_id: "q".into(),
            cand_id: "c".into(),
            n: 2,
            m: 2,
            d_repr: 4,
            values: (0..16).map(|i| (i as f32 - 8.0) / 3.0).collect(),
        };
        write_cache(std::slice::from_ref(&m), &path).unwrap();
        let loaded = read_cache(&path).unwrap();
        assert_eq!(loaded, vec![m]);
    }

    #[test]
    fn many_random_matrices_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let matrices: Vec<InteractionMatrix> =
            (0..50).map(|i| random_matrix(&mut rng, i, 8)).collect();
        write_cache(&matrices, &path).unwrap();
        assert_eq!(read_cache(&path).unwrap(), matrices);

        // Re-serialization is byte-identical.
        let path2 = dir.path().join("cache2.bin");
        write_cache(&matrices, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn mixed_dimension_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 0, 4);
        let b = random_matrix(&mut rng, 1, 8);
        assert!(write_cache(&[a, b], &path).is_err());
    }

    #[test]
    fn truncated_cache_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_matrix(&mut rng, 0, 4);
        write_cache(&[m], &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_cache(&path), Err(Error::Format { .. })));
    }
}
