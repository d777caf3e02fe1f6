use std::collections::{HashMap, HashSet};

use super::RankedRecommendations;
use crate::error::{Error, Result};

/// `1 - cos(a, b)`; errors on a zero vector.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Data("cosine distance of a zero vector".into()));
    }
    let cos = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    Ok(1.0 - cos.clamp(-1.0, 1.0))
}

/// Mean cosine distance between the binary top-K indicator vectors of all
/// unordered user pairs.
///
/// For indicator sets `A`, `B` the cosine is `|A ∩ B| / sqrt(|A| |B|)`.
/// When every list has the same length `m`, the pairwise sum collapses to
/// `Σ_items C(count, 2) / m`, which avoids the quadratic pass.
pub fn inter_list_diversity(recs: &[RankedRecommendations], k: usize) -> Result<f64> {
    if recs.len() < 2 {
        return Err(Error::Data("inter-list diversity needs at least two users".into()));
    }
    let tops: Vec<&[usize]> = recs.iter().map(|r| r.top(k)).collect();
    if tops.iter().any(|t| t.is_empty()) {
        return Err(Error::Data("empty recommendation list".into()));
    }
    let n = tops.len() as f64;
    let pairs = n * (n - 1.0) / 2.0;
    let m = tops[0].len();
    if tops.iter().all(|t| t.len() == m) {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for t in &tops {
            for &c in *t {
                *counts.entry(c).or_default() += 1;
            }
        }
        let overlap: f64 = counts.values().map(|&c| (c * (c.saturating_sub(1))) as f64 / 2.0).sum();
        return Ok(1.0 - overlap / (m as f64 * pairs));
    }
    let sets: Vec<HashSet<usize>> = tops.iter().map(|t| t.iter().copied().collect()).collect();
    let mut total = 0.0;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let inter = sets[i].intersection(&sets[j]).count() as f64;
            total += 1.0 - inter / ((sets[i].len() * sets[j].len()) as f64).sqrt();
        }
    }
    Ok(total / pairs)
}

/// Per user, the mean cosine distance over unordered pairs of the top-K
/// contents' vectors; averaged over users. `vectors[c]` is content `c`'s
/// embedding.
pub fn intra_list_diversity(recs: &[RankedRecommendations], vectors: &[Vec<f64>], k: usize) -> Result<f64> {
    if recs.is_empty() {
        return Err(Error::Data("intra-list diversity needs at least one user".into()));
    }
    let mut total = 0.0;
    for r in recs {
        let top = r.top(k);
        if top.len() < 2 {
            return Err(Error::Data(format!(
                "user {} has fewer than two recommendations",
                r.user
            )));
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for p in 0..top.len() {
            for q in p + 1..top.len() {
                let a = vectors
                    .get(top[p])
                    .ok_or_else(|| Error::Data(format!("no vector for content {}", top[p])))?;
                let b = vectors
                    .get(top[q])
                    .ok_or_else(|| Error::Data(format!("no vector for content {}", top[q])))?;
                sum += cosine_distance(a, b)?;
                pairs += 1;
            }
        }
        total += sum / pairs as f64;
    }
    Ok(total / recs.len() as f64)
}
