//! Text-file readers and writers for corpus data.
//!
//! Formats:
//! - corpus: newline-delimited JSON, one `{"id": ..., "text": ...}` per line
//! - qrels: TREC style `query_id 0 doc_id relevance`, relevance in {0, 1}
//! - pools: `query_id doc_id` per line
//! - query lists: one query id per line
//!
//! Paragraph-level tasks reuse the qrels and pool formats with composite ids
//! of the form `doc_id#para_index` (the query side names the query paragraph
//! the same way). Document ids therefore must not contain `#`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, ParaRef, ParagraphTask, QrelSet};
use crate::binio::atomic_write_text;
use crate::error::{Error, Result};

/// One raw corpus record before tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, i + 1, format!("invalid corpus record: {e}")))?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate document id `{}`", record.id),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_corpus(records: &[CorpusRecord], path: &Path) -> Result<()> {
    atomic_write_text(path, |w| {
        for r in records {
            // serde_json cannot fail on these plain string fields
            let line = serde_json::to_string(r).expect("corpus record serializes");
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

pub fn read_qrels(path: &Path) -> Result<QrelSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut qrels = QrelSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected `query_id 0 doc_id relevance`, got {} fields", fields.len()),
            ));
        }
        let relevance: u8 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "relevance must be 0 or 1"))?;
        match relevance {
            0 => {}
            1 => {
                if !qrels.insert(fields[0], fields[2]) {
                    return Err(Error::parse(
                        path,
                        i + 1,
                        format!("duplicate qrel entry ({}, {})", fields[0], fields[2]),
                    ));
                }
            }
            _ => return Err(Error::parse(path, i + 1, "relevance must be 0 or 1")),
        }
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &QrelSet, path: &Path) -> Result<()> {
    atomic_write_text(path, |w| {
        for (query_id, docs) in qrels.iter() {
            for doc_id in docs {
                writeln!(w, "{query_id} 0 {doc_id} 1")?;
            }
        }
        Ok(())
    })
}

pub fn read_pools(path: &Path) -> Result<CandidatePool> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pool = CandidatePool::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected `query_id doc_id`, got {} fields", fields.len()),
            ));
        }
        pool.push(fields[0], fields[1])
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
    }
    Ok(pool)
}

pub fn write_pools(pool: &CandidatePool, path: &Path) -> Result<()> {
    atomic_write_text(path, |w| {
        for (query_id, docs) in pool.iter() {
            for doc_id in docs {
                writeln!(w, "{query_id} {doc_id}")?;
            }
        }
        Ok(())
    })
}

pub fn read_query_list(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
    }
    Ok(out)
}

pub fn write_query_list(queries: &[String], path: &Path) -> Result<()> {
    atomic_write_text(path, |w| {
        for q in queries {
            writeln!(w, "{q}")?;
        }
        Ok(())
    })
}

fn parse_para_ref(s: &str, path: &Path, line: usize) -> Result<ParaRef> {
    let (doc_id, idx) = s
        .rsplit_once('#')
        .ok_or_else(|| Error::parse(path, line, format!("`{s}` is not of the form doc_id#index")))?;
    let para_index: usize = idx
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid paragraph index in `{s}`")))?;
    Ok(ParaRef::new(doc_id, para_index))
}

/// Read paragraph tasks from a qrels file and pool file that use composite
/// `doc_id#para_index` ids. The query id of each task is the composite id of
/// its query paragraph.
pub fn read_paragraph_tasks(qrels_path: &Path, pools_path: &Path) -> Result<Vec<ParagraphTask>> {
    let file = std::fs::File::open(pools_path).map_err(|e| Error::io(pools_path, e))?;
    let mut tasks: BTreeMap<String, ParagraphTask> = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(pools_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(pools_path, i + 1, "expected `query_para cand_para`"));
        }
        let query = parse_para_ref(fields[0], pools_path, i + 1)?;
        let cand = parse_para_ref(fields[1], pools_path, i + 1)?;
        let task = tasks.entry(fields[0].to_string()).or_insert_with(|| ParagraphTask {
            query_id: fields[0].to_string(),
            query,
            pool: Vec::new(),
            relevant: Default::default(),
        });
        if task.pool.contains(&cand) {
            return Err(Error::parse(
                pools_path,
                i + 1,
                format!("duplicate pool paragraph `{}`", fields[1]),
            ));
        }
        task.pool.push(cand);
    }

    let file = std::fs::File::open(qrels_path).map_err(|e| Error::io(qrels_path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(qrels_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(qrels_path, i + 1, "expected `query_para 0 cand_para rel`"));
        }
        if fields[3] == "0" {
            continue;
        }
        let cand = parse_para_ref(fields[2], qrels_path, i + 1)?;
        let task = tasks.get_mut(fields[0]).ok_or_else(|| {
            Error::parse(
                qrels_path,
                i + 1,
                format!("qrel for `{}` has no pool entry", fields[0]),
            )
        })?;
        if !task.pool.contains(&cand) {
            return Err(Error::parse(
                qrels_path,
                i + 1,
                format!("relevant paragraph `{}` is not in the task pool", fields[2]),
            ));
        }
        task.relevant.insert(cand);
    }
    Ok(tasks.into_values().collect())
}

pub fn write_paragraph_tasks(
    tasks: &[ParagraphTask],
    qrels_path: &Path,
    pools_path: &Path,
) -> Result<()> {
    atomic_write_text(pools_path, |w| {
        for task in tasks {
            for cand in &task.pool {
                writeln!(w, "{} {}", task.query_id, cand)?;
            }
        }
        Ok(())
    })?;
    atomic_write_text(qrels_path, |w| {
        for task in tasks {
            for cand in &task.relevant {
                writeln!(w, "{} 0 {} 1", task.query_id, cand)?;
            }
        }
        Ok(())
    })
}
