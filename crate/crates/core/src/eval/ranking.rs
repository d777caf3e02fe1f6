use std::collections::{HashMap, HashSet};

use super::RankedRecommendations;

/// `|top-K ∩ relevant| / |relevant|`. Zero for an empty relevant set.
pub fn recall_at_k(recs: &RankedRecommendations, relevant: &HashSet<usize>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let hits = recs.top(k).iter().filter(|c| relevant.contains(c)).count();
    hits as f64 / relevant.len() as f64
}

/// Binary-gain NDCG: `Σ rel_i / log2(i + 1)` over the top K, normalized by
/// the DCG of `min(K, |relevant|)` leading hits.
pub fn ndcg_at_k(recs: &RankedRecommendations, relevant: &HashSet<usize>, k: usize) -> f64 {
    if relevant.is_empty() || k == 0 {
        return 0.0;
    }
    let dcg: f64 = recs
        .top(k)
        .iter()
        .enumerate()
        .filter(|(_, c)| relevant.contains(c))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..k.min(relevant.len())).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    dcg / ideal
}

/// Mean Recall@K and NDCG@K over the users of `recs` that have at least
/// one relevant item. Returns `(recall, ndcg, users)`.
pub fn mean_ranking_metrics(
    recs: &[RankedRecommendations],
    relevant: &HashMap<usize, HashSet<usize>>,
    k: usize,
) -> (f64, f64, usize) {
    let mut recall = 0.0;
    let mut ndcg = 0.0;
    let mut n = 0;
    for r in recs {
        if let Some(rel) = relevant.get(&r.user).filter(|s| !s.is_empty()) {
            recall += recall_at_k(r, rel, k);
            ndcg += ndcg_at_k(r, rel, k);
            n += 1;
        }
    }
    if n == 0 {
        (0.0, 0.0, 0)
    } else {
        (recall / n as f64, ndcg / n as f64, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(items: &[usize]) -> RankedRecommendations {
        let scores = (0..items.len()).rev().map(|s| s as f64).collect();
        RankedRecommendations::new(0, items.to_vec(), scores)
    }

    fn set(items: &[usize]) -> HashSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn recall_cases() {
        assert_eq!(recall_at_k(&recs(&[1, 2, 3]), &set(&[1, 3]), 3), 1.0);
        assert_eq!(recall_at_k(&recs(&[1, 2, 3]), &set(&[7]), 3), 0.0);
        assert_eq!(recall_at_k(&recs(&[1, 2, 3, 4, 5]), &set(&[2, 3, 8, 9]), 3), 0.5);
    }

    #[test]
    fn ndcg_cases() {
        assert!((ndcg_at_k(&recs(&[4, 5, 1]), &set(&[4, 5]), 3) - 1.0).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&recs(&[1, 2, 3]), &set(&[9]), 3), 0.0);
        let expected = 1.0 / 3f64.log2();
        assert!((ndcg_at_k(&recs(&[1, 2]), &set(&[2]), 2) - expected).abs() < 1e-15);
        assert!((expected - 0.6309).abs() < 1e-4);
    }

    #[test]
    fn promoting_a_hit_never_hurts() {
        let rel = set(&[3, 6]);
        let before = ndcg_at_k(&recs(&[1, 2, 3, 4, 6]), &rel, 5);
        let after = ndcg_at_k(&recs(&[1, 3, 2, 4, 6]), &rel, 5);
        assert!(after >= before);
    }
}
