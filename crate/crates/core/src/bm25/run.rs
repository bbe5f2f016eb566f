//! Ranked retrieval runs and the TREC run file format:
//! `query_id Q0 doc_id rank score tag`, rank 1-based, score printed with six
//! decimal digits.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::binio::atomic_write_text;
use crate::error::{Error, Result};

/// Per-query ranked (doc id, score) lists with non-increasing scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetrievalRun {
    map: BTreeMap<String, Vec<(String, f64)>>,
}

impl RetrievalRun {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a query's ranking; validates score order and id uniqueness.
    pub fn insert_ranking(
        &mut self,
        query_id: impl Into<String>,
        ranking: Vec<(String, f64)>,
    ) -> Result<()> {
        let query_id = query_id.into();
        let mut seen = std::collections::BTreeSet::new();
        for window in ranking.windows(2) {
            if window[1].1 > window[0].1 {
                return Err(Error::Data(format!(
                    "ranking for query `{query_id}` has increasing scores"
                )));
            }
        }
        for (doc, score) in &ranking {
            if !score.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite score for ({query_id}, {doc})"
                )));
            }
            if !seen.insert(doc) {
                return Err(Error::Data(format!(
                    "duplicate document `{doc}` in ranking for query `{query_id}`"
                )));
            }
        }
        if self.map.insert(query_id.clone(), ranking).is_some() {
            return Err(Error::Data(format!("duplicate ranking for query `{query_id}`")));
        }
        Ok(())
    }

    pub fn ranking(&self, query_id: &str) -> Option<&[(String, f64)]> {
        self.map.get(query_id).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<(String, f64)>)> {
        self.map.iter()
    }

    pub fn queries(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn write_trec(&self, path: &Path, tag: &str) -> Result<()> {
        atomic_write_text(path, |w| {
            for (query_id, ranking) in &self.map {
                for (rank0, (doc_id, score)) in ranking.iter().enumerate() {
                    writeln!(w, "{query_id} Q0 {doc_id} {} {score:.6} {tag}", rank0 + 1)?;
                }
            }
            Ok(())
        })
    }

    pub fn read_trec(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut per_query: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected 6 run-file fields, got {}", fields.len()),
                ));
            }
            if fields[1] != "Q0" {
                return Err(Error::parse(path, i + 1, "second field must be Q0"));
            }
            let rank: usize = fields[3]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "invalid rank"))?;
            let score: f64 = fields[4]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "invalid score"))?;
            per_query
                .entry(fields[0].to_string())
                .or_default()
                .push((rank, fields[2].to_string(), score));
        }
        let mut run = RetrievalRun::new();
        for (query_id, mut entries) in per_query {
            entries.sort_by_key(|(rank, _, _)| *rank);
            for (expected, (rank, _, _)) in entries.iter().enumerate() {
                if *rank != expected + 1 {
                    return Err(Error::Data(format!(
                        "ranks for query `{query_id}` are not dense 1-based (found {rank})"
                    )));
                }
            }
            run.insert_ranking(
                query_id,
                entries.into_iter().map(|(_, doc, score)| (doc, score)).collect(),
            )?;
        }
        Ok(run)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trec_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.trec");
        let mut run = RetrievalRun::new();
        run.insert_ranking("q1", vec![("d2".into(), 1.5), ("d1".into(), 0.25)]).unwrap();
        run.insert_ranking("q2", vec![("d9".into(), 12.125)]).unwrap();
        run.write_trec(&path, "plir").unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("q1 Q0 d2 1 1.500000 plir"));
        let loaded = RetrievalRun::read_trec(&path).unwrap();
        assert_eq!(loaded.ranking("q1").unwrap().len(), 2);
        assert_eq!(loaded.ranking("q2").unwrap()[0].0, "d9");
    }

    #[test]
    fn increasing_scores_are_rejected() {
        let mut run = RetrievalRun::new();
        assert!(run
            .insert_ranking("q1", vec![("d1".into(), 1.0), ("d2".into(), 2.0)])
            .is_err());
    }

    #[test]
    fn duplicate_docs_are_rejected() {
        let mut run = RetrievalRun::new();
        assert!(run
            .insert_ranking("q1", vec![("d1".into(), 2.0), ("d1".into(), 1.0)])
            .is_err());
    }

    #[test]
    fn non_dense_ranks_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.trec");
        std::fs::write(&path, "q1 Q0 d1 1 2.000000 t\nq1 Q0 d2 3 1.000000 t\n").unwrap();
        assert!(RetrievalRun::read_trec(&path).is_err());
    }
}
