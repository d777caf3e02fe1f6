use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{PairMode, PairSets, ScoreTable};
use crate::data::{data_lines, parse_field, write_text};
use crate::error::{Error, Result};

/// Writes `anchor \t pos|neg \t partner` lines, anchors ascending, each
/// anchor's positives before its negatives in list order.
pub fn write_pairs(path: &Path, pairs: &PairSets) -> Result<()> {
    let mut out = String::new();
    for (&anchor, pos) in &pairs.positives {
        for p in pos {
            writeln!(out, "{anchor}\tpos\t{p}").unwrap();
        }
        for n in pairs.negatives.get(&anchor).into_iter().flatten() {
            writeln!(out, "{anchor}\tneg\t{n}").unwrap();
        }
    }
    write_text(path, &out)
}

/// Reads a pair file. Every anchor must list the same number of positives
/// and negatives; that number becomes `n`.
pub fn read_pairs(path: &Path, mode: PairMode) -> Result<PairSets> {
    let mut positives: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut negatives: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (line, text) in data_lines(path)? {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, line, "expected `anchor \\t pos|neg \\t partner`"));
        }
        let anchor: usize = parse_field(path, line, fields[0], "anchor id")?;
        let partner: usize = parse_field(path, line, fields[2], "partner id")?;
        match fields[1].trim() {
            "pos" => positives.entry(anchor).or_default().push(partner),
            "neg" => negatives.entry(anchor).or_default().push(partner),
            other => return Err(Error::parse(path, line, format!("unknown pair kind `{other}`"))),
        }
    }
    let n = positives
        .values()
        .next()
        .map(Vec::len)
        .ok_or_else(|| Error::parse(path, 0, "pair file has no positive pair"))?;
    for anchor in positives.keys().chain(negatives.keys()) {
        let p = positives.get(anchor).map_or(0, Vec::len);
        let q = negatives.get(anchor).map_or(0, Vec::len);
        if p != n || q != n {
            return Err(Error::parse(
                path,
                0,
                format!("anchor {anchor} has {p} positives and {q} negatives, expected {n} of each"),
            ));
        }
    }
    Ok(PairSets {
        mode,
        n,
        positives,
        negatives,
    })
}

/// Reads `anchor \t candidate \t score` lines.
pub fn load_scores(path: &Path) -> Result<ScoreTable> {
    let mut table = ScoreTable::new();
    for (line, text) in data_lines(path)? {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, line, "expected `anchor \\t candidate \\t score`"));
        }
        let score: f64 = parse_field(path, line, fields[2], "score")?;
        if !score.is_finite() {
            return Err(Error::parse(path, line, "non-finite score"));
        }
        table.insert(
            parse_field(path, line, fields[0], "anchor id")?,
            parse_field(path, line, fields[1], "candidate id")?,
            score,
        );
    }
    Ok(table)
}

pub fn write_scores(path: &Path, table: &ScoreTable) -> Result<()> {
    let mut entries: Vec<_> = table.iter().collect();
    entries.sort_by_key(|&(k, _)| k);
    let mut out = String::new();
    for ((a, c), s) in entries {
        writeln!(out, "{a}\t{c}\t{s}").unwrap();
    }
    write_text(path, &out)
}
