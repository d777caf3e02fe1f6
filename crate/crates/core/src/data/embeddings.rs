use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{data_lines, parse_field, write_text, IdMap};
use crate::error::{Error, Result};

/// Externally produced content vectors (e.g. encoded synopses).
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalEmbeddingTable {
    dim: usize,
    vectors: BTreeMap<usize, Vec<f64>>,
}

impl ExternalEmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, content: usize, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite component in embedding of content {content}"
            )));
        }
        self.vectors.insert(content, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, content: usize) -> Option<&[f64]> {
        self.vectors.get(&content).map(Vec::as_slice)
    }

    pub fn coverage(&self) -> BTreeSet<usize> {
        self.vectors.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.vectors.iter().map(|(&c, v)| (c, v.as_slice()))
    }

    /// Re-keys external content ids to dense ids, dropping ids the map does
    /// not know. Returns the table and the number of dropped rows.
    pub fn to_dense(&self, contents: &IdMap) -> (Self, usize) {
        let mut out = Self {
            dim: self.dim,
            vectors: BTreeMap::new(),
        };
        let mut dropped = 0;
        for (&ext, v) in &self.vectors {
            match contents.dense(ext) {
                Some(d) => {
                    out.vectors.insert(d, v.clone());
                }
                None => dropped += 1,
            }
        }
        (out, dropped)
    }
}

/// Reads `dim <D>` followed by `content_id v1 ... vD` rows.
pub fn load_embeddings(path: &Path) -> Result<ExternalEmbeddingTable> {
    let lines = data_lines(path)?;
    let mut iter = lines.into_iter();
    let (hline, header) = iter
        .next()
        .ok_or_else(|| Error::parse(path, 0, "missing `dim <D>` header"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("dim") {
        return Err(Error::parse(path, hline, "expected `dim <D>` header"));
    }
    let dim: usize = match (parts.next(), parts.next()) {
        (Some(d), None) => parse_field(path, hline, d, "dimension")?,
        _ => return Err(Error::parse(path, hline, "expected `dim <D>` header")),
    };
    let mut table = ExternalEmbeddingTable::new(dim).map_err(|e| Error::parse(path, hline, e.to_string()))?;
    for (line, text) in iter {
        let mut fields = text.split_whitespace();
        let id: usize = parse_field(path, line, fields.next().unwrap_or(""), "content id")?;
        let values = fields
            .map(|f| parse_field::<f64>(path, line, f, "component"))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                line,
                format!("row has {} components, header declares {dim}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, line, "NaN or infinite component"));
        }
        if table.vectors.insert(id, values).is_some() {
            return Err(Error::parse(path, line, format!("content {id} listed twice")));
        }
    }
    Ok(table)
}

pub fn write_embeddings(path: &Path, table: &ExternalEmbeddingTable) -> Result<()> {
    let mut out = format!("dim {}\n", table.dim);
    for (id, v) in table.iter() {
        write!(out, "{id}").unwrap();
        for x in v {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, body).unwrap();
        (dir, path)
    }

    #[test]
    fn single_row() {
        let (_d, path) = file("dim 4\n0 0.1 0.2 0.3 0.4\n");
        let t = load_embeddings(&path).unwrap();
        assert_eq!(t.coverage(), BTreeSet::from([0]));
        assert_eq!(t.get(0).unwrap().len(), 4);
    }

    #[test]
    fn short_row_is_rejected() {
        let (_d, path) = file("dim 4\n0 0.1 0.2 0.3\n");
        assert!(matches!(load_embeddings(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn nan_is_rejected() {
        let (_d, path) = file("dim 2\n0 0.1 NaN\n");
        assert!(load_embeddings(&path).is_err());
    }

    #[test]
    fn identical_files_give_identical_tables() {
        let body = "dim 3\n5 1 2 3\n2 -1 0.5 1e-3\n";
        let (_a, pa) = file(body);
        let (_b, pb) = file(body);
        assert_eq!(load_embeddings(&pa).unwrap(), load_embeddings(&pb).unwrap());
    }

    #[test]
    fn write_then_load_is_exact() {
        let mut t = ExternalEmbeddingTable::new(3).unwrap();
        t.insert(4, vec![0.1, -2.5e-7, 1.0 / 3.0]).unwrap();
        t.insert(1, vec![1e300, 0.0, -0.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        write_embeddings(&path, &t).unwrap();
        assert_eq!(load_embeddings(&path).unwrap(), t);
    }

    #[test]
    fn dense_rekeying_drops_unknown() {
        let mut t = ExternalEmbeddingTable::new(1).unwrap();
        t.insert(100, vec![1.0]).unwrap();
        t.insert(200, vec![2.0]).unwrap();
        let mut map = IdMap::new();
        map.get_or_insert(200);
        let (dense, dropped) = t.to_dense(&map);
        assert_eq!(dropped, 1);
        assert_eq!(dense.get(0), Some(&[2.0][..]));
    }
}
