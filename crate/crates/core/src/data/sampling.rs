use rand::seq::index;
use rand::Rng;

use super::{InteractionSet, KnowledgeGraph};
use crate::error::{Error, Result};

/// Draws `S^u` negatives for `user` uniformly without replacement from the
/// contents in `all_contents` the user has not positively interacted with.
///
/// If fewer than `S^u` such contents exist, all of them are returned (in
/// random order). A user left with no candidate at all is an error.
pub fn sample_user_negatives<R: Rng + ?Sized>(
    user: usize,
    interactions: &InteractionSet,
    all_contents: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let positives = interactions.positives(user);
    if positives.is_empty() {
        return Err(Error::Data(format!("user {user} has no positive interaction")));
    }
    let candidates: Vec<usize> = all_contents
        .iter()
        .copied()
        .filter(|c| !positives.contains(c))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Data(format!(
            "user {user} interacted with every content; no negative can be drawn"
        )));
    }
    let amount = positives.len().min(candidates.len());
    Ok(index::sample(rng, candidates.len(), amount)
        .into_iter()
        .map(|i| candidates[i])
        .collect())
}

/// Samples exactly `k` `(relation, neighbor)` entries around `entity`:
/// without replacement when the degree allows it, with replacement otherwise.
pub fn neighbor_sample<R: Rng + ?Sized>(
    graph: &KnowledgeGraph,
    entity: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if entity >= graph.num_entities() {
        return Err(Error::Data(format!("entity {entity} out of range")));
    }
    let neighbors = graph.neighbors(entity);
    if neighbors.is_empty() {
        return Err(Error::Data(format!("entity {entity} is isolated")));
    }
    if neighbors.len() >= k {
        Ok(index::sample(rng, neighbors.len(), k)
            .into_iter()
            .map(|i| neighbors[i])
            .collect())
    } else {
        Ok((0..k).map(|_| neighbors[rng.gen_range(0..neighbors.len())]).collect())
    }
}
