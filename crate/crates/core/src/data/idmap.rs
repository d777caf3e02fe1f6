use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{data_lines, parse_field, write_text};
use crate::error::{Error, Result};

/// Bijection between external integer ids and dense ids `0..len`.
///
/// Dense ids are handed out in order of first insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    to_dense: HashMap<usize, usize>,
    to_external: Vec<usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_insert(&mut self, external: usize) -> usize {
        let next = self.to_external.len();
        let dense = *self.to_dense.entry(external).or_insert(next);
        if dense == next {
            self.to_external.push(external);
        }
        dense
    }

    pub fn dense(&self, external: usize) -> Option<usize> {
        self.to_dense.get(&external).copied()
    }

    pub fn external(&self, dense: usize) -> Option<usize> {
        self.to_external.get(dense).copied()
    }

    pub fn len(&self) -> usize {
        self.to_external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_external.is_empty()
    }

    /// `(external, dense)` pairs in dense order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.to_external.iter().enumerate().map(|(d, &e)| (e, d))
    }

    /// Writes `external \t dense` lines in dense order.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (external, dense) in self.iter() {
            writeln!(out, "{external}\t{dense}").unwrap();
        }
        write_text(path, &out)
    }

    /// Reads an id-map file. Dense ids must form the contiguous range
    /// `0..n` (in any line order) and both columns must be unique.
    pub fn read(path: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (line, text) in data_lines(path)? {
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() != 2 {
                return Err(Error::parse(path, line, "expected `external \\t dense`"));
            }
            let external: usize = parse_field(path, line, fields[0], "external id")?;
            let dense: usize = parse_field(path, line, fields[1], "dense id")?;
            pairs.push((line, external, dense));
        }
        let n = pairs.len();
        let mut to_external = vec![None; n];
        let mut to_dense = HashMap::with_capacity(n);
        for (line, external, dense) in pairs {
            if dense >= n || to_external[dense].is_some() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("dense id {dense} out of range or repeated"),
                ));
            }
            if to_dense.insert(external, dense).is_some() {
                return Err(Error::parse(path, line, format!("external id {external} repeated")));
            }
            to_external[dense] = Some(external);
        }
        Ok(Self {
            to_dense,
            to_external: to_external.into_iter().map(Option::unwrap).collect(),
        })
    }
}
