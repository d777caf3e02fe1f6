//! Metadata verbalization and positive/negative pair mining for the
//! content-content contrastive objective.
//!
//! Each content's metadata is rendered into a sentence, every other content
//! is ranked by similarity to it, and the top-`n` / bottom-`n` become its
//! positive and negative partners.

mod io;
mod similarity;
mod template;

pub use io::{load_scores, read_pairs, write_pairs, write_scores};
pub use similarity::{rank_candidates, EmbeddingDotProvider, ScoreTable, SimilarityProvider};
pub use template::{render_template, ContentMetadata, DomainKind, PairMode};

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Per-anchor positive and negative partner lists, each of length `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSets {
    pub mode: PairMode,
    pub n: usize,
    pub positives: BTreeMap<usize, Vec<usize>>,
    pub negatives: BTreeMap<usize, Vec<usize>>,
}

impl PairSets {
    pub fn anchors(&self) -> impl Iterator<Item = usize> + '_ {
        self.positives.keys().copied()
    }

    pub fn num_anchors(&self) -> usize {
        self.positives.len()
    }

    /// Total content-content positive links (`|universe| * n` when built by
    /// [`build_pair_sets`]).
    pub fn num_positive_links(&self) -> usize {
        self.positives.values().map(Vec::len).sum()
    }

    pub fn num_negative_links(&self) -> usize {
        self.negatives.values().map(Vec::len).sum()
    }

    /// All `(anchor, positive)` pairs in anchor order.
    pub fn positive_pairs(&self) -> Vec<(usize, usize)> {
        self.positives
            .iter()
            .flat_map(|(&a, ps)| ps.iter().map(move |&p| (a, p)))
            .collect()
    }

    /// Checks every structural invariant against a content universe.
    pub fn validate(&self, universe: &[usize]) -> Result<()> {
        let known: HashSet<usize> = universe.iter().copied().collect();
        if self.positives.len() != self.negatives.len() || self.positives.keys().ne(self.negatives.keys()) {
            return Err(Error::Data("positive and negative maps cover different anchors".into()));
        }
        for (&anchor, pos) in &self.positives {
            let neg = &self.negatives[&anchor];
            if pos.len() != self.n || neg.len() != self.n {
                return Err(Error::Data(format!(
                    "anchor {anchor} has {} positives and {} negatives, expected {}",
                    pos.len(),
                    neg.len(),
                    self.n
                )));
            }
            if !known.contains(&anchor) {
                return Err(Error::Data(format!("anchor {anchor} is not in the content universe")));
            }
            let pos_set: HashSet<usize> = pos.iter().copied().collect();
            for &p in pos.iter().chain(neg) {
                if p == anchor {
                    return Err(Error::Data(format!("anchor {anchor} is paired with itself")));
                }
                if !known.contains(&p) {
                    return Err(Error::Data(format!("partner {p} of anchor {anchor} is unknown")));
                }
            }
            if neg.iter().any(|c| pos_set.contains(c)) {
                return Err(Error::Data(format!(
                    "anchor {anchor} has a content both positive and negative"
                )));
            }
        }
        Ok(())
    }

    /// Rewrites every id through `map`; unknown ids are an error.
    pub fn map_ids(&self, map: impl Fn(usize) -> Option<usize>) -> Result<Self> {
        let lookup =
            |id: usize| map(id).ok_or_else(|| Error::Data(format!("pair file references unknown content {id}")));
        let remap = |side: &BTreeMap<usize, Vec<usize>>| -> Result<BTreeMap<usize, Vec<usize>>> {
            side.iter()
                .map(|(&a, list)| Ok((lookup(a)?, list.iter().map(|&c| lookup(c)).collect::<Result<Vec<_>>>()?)))
                .collect()
        };
        Ok(Self {
            mode: self.mode,
            n: self.n,
            positives: remap(&self.positives)?,
            negatives: remap(&self.negatives)?,
        })
    }
}

/// For every anchor in `universe`, takes the first `n` of its similarity
/// ranking as positives and the last `n` as negatives.
pub fn build_pair_sets<P: SimilarityProvider + ?Sized>(
    universe: &[usize],
    provider: &P,
    n: usize,
    mode: PairMode,
) -> Result<PairSets> {
    if n == 0 {
        return Err(Error::Config("pair count n must be at least 1".into()));
    }
    if universe.len() < 2 * n + 1 {
        return Err(Error::Data(format!(
            "universe of {} contents is too small for n = {n} (need at least {})",
            universe.len(),
            2 * n + 1
        )));
    }
    let ranked: Vec<(usize, Vec<usize>)> = universe
        .par_iter()
        .map(|&anchor| rank_candidates(anchor, provider, universe).map(|r| (anchor, r)))
        .collect::<Result<_>>()?;
    let mut positives = BTreeMap::new();
    let mut negatives = BTreeMap::new();
    for (anchor, order) in ranked {
        positives.insert(anchor, order[..n].to_vec());
        negatives.insert(anchor, order[order.len() - n..].to_vec());
    }
    Ok(PairSets {
        mode,
        n,
        positives,
        negatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scores by closeness on a line: similarity = -|a - b|.
    struct Line;
    impl SimilarityProvider for Line {
        fn score(&self, a: usize, b: usize) -> Result<f64> {
            Ok(-(a as f64 - b as f64).abs())
        }
    }

    #[test]
    fn five_contents_n_one() {
        let universe: Vec<usize> = (0..5).collect();
        let pairs = build_pair_sets(&universe, &Line, 1, PairMode::Genre).unwrap();
        assert_eq!(pairs.positives[&0], vec![1]);
        assert_eq!(pairs.negatives[&0], vec![4]);
        // 2 is equidistant from 1 and 3, tie goes to the lower id
        assert_eq!(pairs.positives[&2], vec![1]);
        assert_eq!(pairs.negatives[&2], vec![4]);
        assert_eq!(pairs.num_positive_links(), 5);
        pairs.validate(&universe).unwrap();
    }

    #[test]
    fn maximal_n_covers_everything() {
        let universe: Vec<usize> = (0..7).collect();
        let pairs = build_pair_sets(&universe, &Line, 3, PairMode::Genre).unwrap();
        for &a in &universe {
            let mut all: Vec<usize> = pairs.positives[&a]
                .iter()
                .chain(&pairs.negatives[&a])
                .copied()
                .collect();
            all.sort_unstable();
            let expected: Vec<usize> = universe.iter().copied().filter(|&c| c != a).collect();
            assert_eq!(all, expected);
        }
        pairs.validate(&universe).unwrap();
    }

    #[test]
    fn universe_too_small() {
        let universe: Vec<usize> = (0..4).collect();
        assert!(build_pair_sets(&universe, &Line, 2, PairMode::Genre).is_err());
    }

    #[test]
    fn identical_metadata_are_positives() {
        let meta = |id: usize, genres: &[&str]| ContentMetadata {
            content_id: id,
            title: format!("t{id}"),
            year: None,
            genres: genres.iter().map(|s| s.to_string()).collect(),
            synopsis: None,
        };
        let items = vec![
            meta(0, &["Horror"]),
            meta(1, &["Drama", "Romance"]),
            meta(2, &["Action", "Comedy"]),
            meta(3, &["Documentary"]),
            meta(4, &["Action", "Comedy"]),
            meta(5, &["Animation", "Children"]),
        ];
        let sentences: Vec<(usize, String)> = items
            .iter()
            .map(|m| {
                (
                    m.content_id,
                    render_template(m, PairMode::Genre, DomainKind::Movie).unwrap(),
                )
            })
            .collect();
        let provider = EmbeddingDotProvider::from_sentences(&sentences);
        let universe: Vec<usize> = (0..6).collect();
        let pairs = build_pair_sets(&universe, &provider, 2, PairMode::Genre).unwrap();
        assert_eq!(pairs.positives[&2][0], 4);
        assert_eq!(pairs.positives[&4][0], 2);
        pairs.validate(&universe).unwrap();
    }

    #[test]
    fn validate_catches_overlap_and_self() {
        let mut pairs = build_pair_sets(&[0, 1, 2, 3, 4], &Line, 1, PairMode::Genre).unwrap();
        pairs.negatives.insert(0, vec![1]);
        assert!(pairs.validate(&[0, 1, 2, 3, 4]).is_err());
        pairs.negatives.insert(0, vec![0]);
        assert!(pairs.validate(&[0, 1, 2, 3, 4]).is_err());
    }
}
