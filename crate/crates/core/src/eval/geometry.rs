use crate::error::{Error, Result};

fn normalized(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Data("cannot normalize a zero or non-finite vector".into()));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean `||â - b̂||²` over positive pairs of L2-normalized vectors.
pub fn alignment_loss(pairs: &[(&[f64], &[f64])]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("alignment needs at least one pair".into()));
    }
    let mut total = 0.0;
    for (a, b) in pairs {
        total += squared_distance(&normalized(a)?, &normalized(b)?);
    }
    Ok(total / pairs.len() as f64)
}

/// `log` of the mean over unordered pairs of `exp(-2 ||x̂ - ŷ||²)`.
pub fn uniformity_loss(vectors: &[&[f64]]) -> Result<f64> {
    if vectors.len() < 2 {
        return Err(Error::Data("uniformity needs at least two vectors".into()));
    }
    let unit = vectors.iter().map(|v| normalized(v)).collect::<Result<Vec<_>>>()?;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..unit.len() {
        for j in i + 1..unit.len() {
            sum += (-2.0 * squared_distance(&unit[i], &unit[j])).exp();
            pairs += 1;
        }
    }
    Ok((sum / pairs as f64).ln())
}
