use crate::error::{Error, Result};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from average ranks in `O(n log n)`.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64> {
    let n_pos = scores.iter().filter(|s| s.1).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("AUC needs at least one positive and one negative".into()));
    }
    if scores.iter().any(|s| s.0.is_nan()) {
        return Err(Error::Numeric("NaN score passed to AUC".into()));
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * sorted[i..=j].iter().filter(|s| s.1).count() as f64;
        i = j + 1;
    }
    let p = n_pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

/// F1 of the rule `score >= threshold`; 0 when nothing is predicted
/// positive.
pub fn f1(scores: &[(f64, bool)], threshold: f64) -> Result<f64> {
    let n_pos = scores.iter().filter(|s| s.1).count();
    if n_pos == 0 || n_pos == scores.len() {
        return Err(Error::Data("F1 needs at least one positive and one negative".into()));
    }
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for &(s, y) in scores {
        match (s >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fnn += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fnn) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}
