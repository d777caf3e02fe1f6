use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{data_lines, parse_field, write_text, IdMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interaction {
    pub user: usize,
    pub content: usize,
    pub label: bool,
}

impl Interaction {
    pub fn new(user: usize, content: usize, label: bool) -> Self {
        Self { user, content, label }
    }

    pub fn target(&self) -> f64 {
        if self.label {
            1.0
        } else {
            0.0
        }
    }
}

/// Binarized user-content preferences.
///
/// Each `(user, content)` pair occurs at most once. `user_index` lists, per
/// user, the contents labelled positive in record order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionSet {
    records: Vec<Interaction>,
    user_index: BTreeMap<usize, Vec<usize>>,
}

impl InteractionSet {
    pub fn from_records(records: Vec<Interaction>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        let mut user_index: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for r in &records {
            if !seen.insert((r.user, r.content)) {
                return Err(Error::Data(format!(
                    "duplicate interaction (user {}, content {})",
                    r.user, r.content
                )));
            }
            if r.label {
                user_index.entry(r.user).or_default().push(r.content);
            }
        }
        Ok(Self { records, user_index })
    }

    pub fn records(&self) -> &[Interaction] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn user_index(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.user_index
    }

    /// Positively labelled contents of `user` (empty if none).
    pub fn positives(&self, user: usize) -> &[usize] {
        self.user_index.get(&user).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `S^u`: the number of negatives drawn for `user` per pass.
    pub fn negative_budget(&self, user: usize) -> usize {
        self.positives(user).len()
    }

    pub fn positive_sets(&self) -> HashMap<usize, HashSet<usize>> {
        self.user_index
            .iter()
            .map(|(&u, items)| (u, items.iter().copied().collect()))
            .collect()
    }

    /// Users that have at least one positive, ascending.
    pub fn users(&self) -> impl Iterator<Item = usize> + '_ {
        self.user_index.keys().copied()
    }
}

/// Interactions together with the id maps built while loading them.
#[derive(Debug, Clone)]
pub struct LoadedInteractions {
    pub set: InteractionSet,
    pub users: IdMap,
    pub contents: IdMap,
}

/// Loads `user_id \t content_id \t rating` lines.
///
/// With a threshold, only rows rated at or above it become (positive)
/// records; rows below it are dropped but their ids are still registered so
/// the content stays in the universe. Without a threshold every row is a
/// positive. Ids are re-indexed densely in order of first appearance.
pub fn load_interactions(path: &Path, rating_threshold: Option<f64>) -> Result<LoadedInteractions> {
    let mut users = IdMap::new();
    let mut contents = IdMap::new();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, text) in data_lines(path)? {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let user_ext: usize = parse_field(path, line, fields[0], "user id")?;
        let content_ext: usize = parse_field(path, line, fields[1], "content id")?;
        let rating: f64 = parse_field(path, line, fields[2], "rating")?;
        if !rating.is_finite() {
            return Err(Error::parse(path, line, "non-finite rating"));
        }
        if !seen.insert((user_ext, content_ext)) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate interaction (user {user_ext}, content {content_ext})"),
            ));
        }
        let user = users.get_or_insert(user_ext);
        let content = contents.get_or_insert(content_ext);
        if rating_threshold.is_none_or(|t| rating >= t) {
            records.push(Interaction::new(user, content, true));
        }
    }
    Ok(LoadedInteractions {
        set: InteractionSet::from_records(records)?,
        users,
        contents,
    })
}

/// Writes dense `user \t content \t label` lines.
pub fn write_split_file(path: &Path, set: &InteractionSet) -> Result<()> {
    let mut out = String::new();
    for r in set.records() {
        writeln!(out, "{}\t{}\t{}", r.user, r.content, u8::from(r.label)).unwrap();
    }
    write_text(path, &out)
}

pub fn read_split_file(path: &Path) -> Result<InteractionSet> {
    let mut records = Vec::new();
    for (line, text) in data_lines(path)? {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, line, "expected `user \\t content \\t label`"));
        }
        let label: u8 = parse_field(path, line, fields[2], "label")?;
        if label > 1 {
            return Err(Error::parse(path, line, format!("label {label} is not 0 or 1")));
        }
        records.push(Interaction::new(
            parse_field(path, line, fields[0], "user id")?,
            parse_field(path, line, fields[1], "content id")?,
            label == 1,
        ));
    }
    InteractionSet::from_records(records).map_err(|e| match e {
        Error::Data(msg) => Error::parse(path, 0, msg),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let path = dir.path().join("ratings.tsv");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn threshold_keeps_high_ratings() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "7\t42\t5.0\n7\t43\t3.0\n");
        let loaded = load_interactions(&path, Some(4.0)).unwrap();
        let u7 = loaded.users.dense(7).unwrap();
        let c42 = loaded.contents.dense(42).unwrap();
        assert_eq!(loaded.set.records(), &[Interaction::new(u7, c42, true)]);
        // the low-rated content is still known
        assert!(loaded.contents.dense(43).is_some());
    }

    #[test]
    fn below_threshold_emits_no_positive() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "7\t42\t3.0\n");
        let loaded = load_interactions(&path, Some(4.0)).unwrap();
        assert!(loaded.set.is_empty());
    }

    #[test]
    fn three_users_two_ratings_each() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "# fixture\n1\t10\t4\n1\t11\t5\n2\t10\t4.5\n2\t12\t4\n3\t11\t5\n3\t12\t4\n",
        );
        let loaded = load_interactions(&path, Some(4.0)).unwrap();
        assert_eq!(loaded.set.len(), 6);
        assert_eq!(loaded.set.user_index().len(), 3);
        assert!(loaded.set.user_index().values().all(|v| v.len() == 2));
    }

    #[test]
    fn no_threshold_means_all_positive() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "1\t10\t0\n1\t11\t1\n");
        let loaded = load_interactions(&path, None).unwrap();
        assert_eq!(loaded.set.len(), 2);
        assert!(loaded.set.records().iter().all(|r| r.label));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "1\t10\t4\n1\tx\t4\n");
        match load_interactions(&path, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "1\t10\t4\n1\t10\t2\n");
        assert!(matches!(
            load_interactions(&path, None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn budget_matches_label_one_count() {
        let set = InteractionSet::from_records(vec![
            Interaction::new(0, 1, true),
            Interaction::new(0, 2, false),
            Interaction::new(0, 3, true),
            Interaction::new(1, 1, true),
        ])
        .unwrap();
        for u in [0, 1] {
            let labelled = set.records().iter().filter(|r| r.user == u && r.label).count();
            assert_eq!(set.negative_budget(u), labelled);
        }
    }

    #[test]
    fn split_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.tsv");
        let set =
            InteractionSet::from_records(vec![Interaction::new(0, 1, true), Interaction::new(2, 0, false)]).unwrap();
        write_split_file(&path, &set).unwrap();
        assert_eq!(read_split_file(&path).unwrap(), set);
    }
}
