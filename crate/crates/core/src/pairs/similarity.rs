use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

/// Scores how similar `candidate` is to `anchor`; larger is more similar.
pub trait SimilarityProvider: Sync {
    fn score(&self, anchor: usize, candidate: usize) -> Result<f64>;
}

/// Dot product over a per-content vector table.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingDotProvider {
    vectors: HashMap<usize, Vec<f64>>,
}

impl EmbeddingDotProvider {
    pub fn new(vectors: HashMap<usize, Vec<f64>>) -> Self {
        Self { vectors }
    }

    /// Lexical sentence encoder: L2-normalized bag-of-words counts over
    /// lower-cased alphanumeric tokens, so the dot product is a cosine and
    /// identical sentences score exactly 1.
    pub fn from_sentences(sentences: &[(usize, String)]) -> Self {
        let tokenized: Vec<(usize, Vec<String>)> = sentences
            .iter()
            .map(|(id, s)| {
                let tokens = s
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|t| !t.is_empty())
                    .map(str::to_lowercase)
                    .collect();
                (*id, tokens)
            })
            .collect();
        let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, tokens) in &tokenized {
            for t in tokens {
                vocab.entry(t.as_str()).or_insert(0);
            }
        }
        for (i, slot) in vocab.values_mut().enumerate() {
            *slot = i;
        }
        let vectors = tokenized
            .iter()
            .map(|(id, tokens)| {
                let mut v = vec![0.0; vocab.len()];
                for t in tokens {
                    v[vocab[t.as_str()]] += 1.0;
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                (*id, v)
            })
            .collect();
        Self { vectors }
    }

    fn vector(&self, id: usize) -> Result<&[f64]> {
        self.vectors
            .get(&id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Data(format!("no similarity vector for content {id}")))
    }
}

impl SimilarityProvider for EmbeddingDotProvider {
    fn score(&self, anchor: usize, candidate: usize) -> Result<f64> {
        let a = self.vector(anchor)?;
        let b = self.vector(candidate)?;
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                found: b.len(),
            });
        }
        Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
    }
}

/// Precomputed `(anchor, candidate) -> score` table, e.g. cross-encoder
/// output. Scores are directional; a missing entry is an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    scores: HashMap<(usize, usize), f64>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, anchor: usize, candidate: usize, score: f64) {
        self.scores.insert((anchor, candidate), score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.scores.iter().map(|(&k, &v)| (k, v))
    }
}

impl SimilarityProvider for ScoreTable {
    fn score(&self, anchor: usize, candidate: usize) -> Result<f64> {
        self.scores
            .get(&(anchor, candidate))
            .copied()
            .ok_or_else(|| Error::Data(format!("no score for anchor {anchor}, candidate {candidate}")))
    }
}

/// Every content of `universe` except `anchor`, by descending score; ties
/// go to the smaller id.
pub fn rank_candidates<P: SimilarityProvider + ?Sized>(
    anchor: usize,
    provider: &P,
    universe: &[usize],
) -> Result<Vec<usize>> {
    if universe.len() < 2 {
        return Err(Error::Data("ranking needs at least two contents".into()));
    }
    if !universe.contains(&anchor) {
        return Err(Error::Data(format!("anchor {anchor} is not in the universe")));
    }
    let mut scored = Vec::with_capacity(universe.len() - 1);
    for &c in universe.iter().filter(|&&c| c != anchor) {
        let s = provider.score(anchor, c)?;
        if !s.is_finite() {
            return Err(Error::Numeric(format!("score({anchor}, {c}) = {s}")));
        }
        scored.push((c, s));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().map(|(c, _)| c).collect())
}
