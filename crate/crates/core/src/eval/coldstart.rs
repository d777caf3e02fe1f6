use std::collections::{HashMap, HashSet};

use super::ranking::{ndcg_at_k, recall_at_k};
use super::RankedRecommendations;
use crate::data::InteractionSet;
use crate::error::{Error, Result};

/// Cumulative percentile cut points over per-user training-interaction
/// counts, e.g. `[1, 5, 10, 100]` for "bottom 1%", "bottom 5%", ...
#[derive(Debug, Clone, PartialEq)]
pub struct StrataSpec {
    cuts: Vec<f64>,
}

impl StrataSpec {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::Config("strata need at least one cut point".into()));
        }
        if cuts.iter().any(|&c| !(c > 0.0 && c <= 100.0)) {
            return Err(Error::Config("strata cut points must lie in (0, 100]".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("strata cut points must be strictly increasing".into()));
        }
        Ok(Self { cuts })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }
}

impl Default for StrataSpec {
    fn default() -> Self {
        Self {
            cuts: vec![1.0, 5.0, 10.0, 20.0, 50.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumRow {
    /// Percentile cut, e.g. `10.0` for the bottom decile.
    pub percentile: f64,
    /// Largest training-interaction count inside the stratum.
    pub max_interactions: usize,
    pub users: usize,
    /// `None` when the stratum is empty.
    pub ndcg: Option<f64>,
    pub recall: Option<f64>,
}

/// Buckets the users that have test positives by the nearest-rank
/// percentile of their training-interaction count: stratum `p` holds every
/// user whose count is at most the value at rank `ceil(p/100 * N)`.
pub fn cold_start_report(
    test: &InteractionSet,
    train: &InteractionSet,
    recs: &[RankedRecommendations],
    strata: &StrataSpec,
    k: usize,
) -> Vec<StratumRow> {
    let relevant: HashMap<usize, HashSet<usize>> = test.positive_sets();
    let scored: Vec<(usize, &RankedRecommendations, &HashSet<usize>)> = recs
        .iter()
        .filter_map(|r| {
            relevant
                .get(&r.user)
                .filter(|s| !s.is_empty())
                .map(|rel| (train.positives(r.user).len(), r, rel))
        })
        .collect();
    let mut counts: Vec<usize> = scored.iter().map(|s| s.0).collect();
    counts.sort_unstable();

    strata
        .cuts()
        .iter()
        .map(|&p| {
            if counts.is_empty() {
                return StratumRow {
                    percentile: p,
                    max_interactions: 0,
                    users: 0,
                    ndcg: None,
                    recall: None,
                };
            }
            let rank = ((p / 100.0 * counts.len() as f64).ceil() as usize).clamp(1, counts.len());
            let threshold = counts[rank - 1];
            let members: Vec<_> = scored.iter().filter(|s| s.0 <= threshold).collect();
            let n = members.len() as f64;
            StratumRow {
                percentile: p,
                max_interactions: threshold,
                users: members.len(),
                ndcg: Some(members.iter().map(|(_, r, rel)| ndcg_at_k(r, rel, k)).sum::<f64>() / n),
                recall: Some(members.iter().map(|(_, r, rel)| recall_at_k(r, rel, k)).sum::<f64>() / n),
            }
        })
        .collect()
}
