//! Inverted index construction and its binary file format.
//!
//! Format `PLII` v1 (all integers little-endian):
//!
//! ```text
//! magic "PLII" | u32 version
//! f64 k1 | f64 b | u64 doc_prefix_len          (build parameters echo)
//! u64 n_docs
//! n_docs × { str doc_id | u64 indexed_len }    (doc ids in ascending order)
//! u64 n_terms
//! n_terms × { u32 term_id | u64 df | df × { u32 doc_gap | u32 tf } }
//! ```
//!
//! Postings are delta-encoded: `doc_gap` is the difference to the previous
//! document ordinal in the postings list (the first entry stores the ordinal
//! itself). Strings are u32 length-prefixed UTF-8.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::Bm25Params;
use crate::binio::{atomic_write, ByteReader, FORMAT_VERSION};
use crate::corpus::Document;
use crate::error::{Error, Result};

const INDEX_MAGIC: &[u8; 4] = b"PLII";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    /// Document ordinal in ascending doc-id order.
    pub doc: u32,
    pub tf: u32,
}

/// Immutable BM25 index over prefix-truncated documents.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    ordinals: HashMap<String, u32>,
    doc_len: Vec<u32>,
    avgdl: f64,
    postings: BTreeMap<u32, Vec<Posting>>,
    doc_prefix_len: usize,
    /// k1/b the index was built with; informational echo for run manifests.
    pub build_params: (f64, f64),
}

impl InvertedIndex {
    pub fn n_docs(&self) -> u64 {
        self.doc_ids.len() as u64
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<u32> {
        self.ordinals.get(doc_id).copied()
    }

    pub fn doc_len(&self, ordinal: u32) -> u32 {
        self.doc_len[ordinal as usize]
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_prefix_len(&self) -> usize {
        self.doc_prefix_len
    }

    pub fn postings(&self, term: u32) -> Option<&[Posting]> {
        self.postings.get(&term).map(|v| v.as_slice())
    }

    pub fn terms(&self) -> impl Iterator<Item = u32> + '_ {
        self.postings.keys().copied()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            w.magic(INDEX_MAGIC)?;
            w.u32(FORMAT_VERSION)?;
            w.f64(self.build_params.0)?;
            w.f64(self.build_params.1)?;
            w.u64(self.doc_prefix_len as u64)?;
            w.u64(self.doc_ids.len() as u64)?;
            for (id, len) in self.doc_ids.iter().zip(&self.doc_len) {
                w.string(id)?;
                w.u64(*len as u64)?;
            }
            w.u64(self.postings.len() as u64)?;
            for (term, postings) in &self.postings {
                w.u32(*term)?;
                w.u64(postings.len() as u64)?;
                let mut prev = 0u32;
                for (i, p) in postings.iter().enumerate() {
                    let gap = if i == 0 { p.doc } else { p.doc - prev };
                    w.u32(gap)?;
                    w.u32(p.tf)?;
                    prev = p.doc;
                }
            }
            Ok(())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = ByteReader::open(path)?;
        r.magic(INDEX_MAGIC)?;
        r.version(FORMAT_VERSION)?;
        let k1 = r.f64()?;
        let b = r.f64()?;
        let doc_prefix_len = r.u64()? as usize;
        let n_docs = r.u64()? as usize;
        let mut doc_ids = Vec::with_capacity(n_docs);
        let mut doc_len = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            doc_ids.push(r.string()?);
            doc_len.push(r.u64()? as u32);
        }
        let n_terms = r.u64()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = r.u32()?;
            let df = r.u64()? as usize;
            let mut list = Vec::with_capacity(df);
            let mut prev = 0u32;
            for i in 0..df {
                let gap = r.u32()?;
                let tf = r.u32()?;
                let doc = if i == 0 { gap } else { prev + gap };
                if doc as usize >= n_docs {
                    return Err(Error::format(
                        format!("posting references document ordinal {doc} out of {n_docs}"),
                        r.offset(),
                    ));
                }
                list.push(Posting { doc, tf });
                prev = doc;
            }
            postings.insert(term, list);
        }
        r.expect_eof()?;
        let ordinals = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let avgdl = mean_length(&doc_len);
        Ok(InvertedIndex {
            doc_ids,
            ordinals,
            doc_len,
            avgdl,
            postings,
            doc_prefix_len,
            build_params: (k1, b),
        })
    }
}

fn mean_length(lengths: &[u32]) -> f64 {
    let sum: u64 = lengths.iter().map(|&l| l as u64).sum();
    sum as f64 / lengths.len() as f64
}

/// Build an index over the corpus, truncating every document to its first
/// `doc_prefix_len` tokens.
pub fn build_index(docs: &[Document], params: &Bm25Params) -> Result<InvertedIndex> {
    params.validate()?;
    if docs.is_empty() {
        return Err(Error::Data("cannot index an empty corpus".into()));
    }
    let mut by_id: BTreeMap<&str, &Document> = BTreeMap::new();
    for doc in docs {
        if by_id.insert(&doc.id, doc).is_some() {
            return Err(Error::Data(format!("duplicate document id `{}`", doc.id)));
        }
    }
    let doc_ids: Vec<String> = by_id.keys().map(|s| s.to_string()).collect();
    let mut doc_len = Vec::with_capacity(doc_ids.len());
    let mut postings: BTreeMap<u32, Vec<Posting>> = BTreeMap::new();
    for (ordinal, doc) in by_id.values().enumerate() {
        let indexed = &doc.tokens[..doc.tokens.len().min(params.doc_prefix_len)];
        doc_len.push(indexed.len() as u32);
        let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
        for &t in indexed {
            *tf.entry(t).or_insert(0) += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push(Posting {
                doc: ordinal as u32,
                tf: count,
            });
        }
    }
    let ordinals = doc_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i as u32))
        .collect();
    let avgdl = mean_length(&doc_len);
    Ok(InvertedIndex {
        doc_ids,
        ordinals,
        doc_len,
        avgdl,
        postings,
        doc_prefix_len: params.doc_prefix_len,
        build_params: (params.k1, params.b),
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::make_docs;
    use super::*;

    #[test]
    fn long_documents_are_truncated_to_prefix() {
        let text = vec!["tok"; 300].join(" ");
        let (docs, _) = make_docs(&[("d1", &text)]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        assert_eq!(index.doc_len(0), 250);
        assert_eq!(index.avgdl(), 250.0);
    }

    #[test]
    fn avgdl_matches_hand_computed_mean() {
        // 2 + 3 + 4 tokens → avgdl = 3.
        let (docs, _) = make_docs(&[("a", "x y"), ("b", "x y z"), ("c", "p q r s")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        assert_eq!(index.avgdl(), 3.0);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(build_index(&[], &Bm25Params::default()).is_err());
    }

    #[test]
    fn postings_are_sorted_by_ordinal() {
        let (docs, _) = make_docs(&[("c", "x"), ("a", "x"), ("b", "x")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        assert_eq!(index.doc_id(0), "a");
        assert_eq!(index.doc_id(2), "c");
        for term in index.terms() {
            let postings = index.postings(term).unwrap();
            assert!(postings.windows(2).all(|w| w[0].doc < w[1].doc));
        }
    }

    #[test]
    fn index_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        let (docs, _) = make_docs(&[
            ("d1", "alpha beta alpha gamma"),
            ("d2", "beta beta delta"),
            ("d3", "epsilon"),
        ]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        index.save(&path).unwrap();
        let loaded = InvertedIndex::load(&path).unwrap();
        assert_eq!(index, loaded);

        // Byte-identical on rewrite.
        let path2 = dir.path().join("index2.bin");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_index_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        let (docs, _) = make_docs(&[("d1", "alpha beta")]);
        build_index(&docs, &Bm25Params::default()).unwrap().save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            InvertedIndex::load(&path),
            Err(Error::Format { .. })
        ));
    }
}
