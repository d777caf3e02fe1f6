use std::collections::{HashMap, HashSet};

use log::warn;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    alignment_loss, auc, cold_start_report, f1, inter_list_diversity, intra_list_diversity, mean_ranking_metrics,
    uniformity_loss, RankedRecommendations, StrataSpec, StratumRow,
};
use crate::data::{Interaction, InteractionSet};
use crate::error::{Error, Result};
use crate::model::{Kgcn, ParameterSet};
use crate::pairs::PairSets;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Cut-offs for Recall@K / NDCG@K, ascending.
    pub ks: Vec<usize>,
    pub diversity_k: usize,
    pub cold_start_k: usize,
    pub strata: StrataSpec,
    pub f1_threshold: f64,
    pub ctr: bool,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ks: vec![5, 10, 20, 50, 100],
            diversity_k: 20,
            cold_start_k: 20,
            strata: StrataSpec::default(),
            f1_threshold: 0.5,
            ctr: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    /// `(K, recall, ndcg)` per configured cut-off.
    pub ranking: Vec<(usize, f64, f64)>,
    pub ranked_users: usize,
    pub inter_list: Option<f64>,
    pub intra_list: Option<f64>,
    pub alignment: Option<f64>,
    pub uniformity: Option<f64>,
    pub cold_start: Vec<StratumRow>,
}

impl EvalReport {
    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.ranking.iter().find(|r| r.0 == k).map(|r| r.1)
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.ranking.iter().find(|r| r.0 == k).map(|r| r.2)
    }
}

/// Held-out positives of every test user plus as many fresh negatives,
/// drawn uniformly from contents outside `known_positives[user]`.
pub fn ctr_examples<R: Rng + ?Sized>(
    test: &InteractionSet,
    known_positives: &HashMap<usize, HashSet<usize>>,
    contents: &[usize],
    rng: &mut R,
) -> Vec<Interaction> {
    let empty = HashSet::new();
    let mut out = Vec::new();
    for (&user, positives) in test.user_index() {
        let known = known_positives.get(&user).unwrap_or(&empty);
        let candidates: Vec<usize> = contents
            .iter()
            .copied()
            .filter(|c| !known.contains(c) && !positives.contains(c))
            .collect();
        out.extend(positives.iter().map(|&c| Interaction::new(user, c, true)));
        let amount = positives.len().min(candidates.len());
        out.extend(
            index::sample(rng, candidates.len(), amount)
                .into_iter()
                .map(|i| Interaction::new(user, candidates[i], false)),
        );
    }
    out
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Predicted probability per example, each drawn on its own rng stream so
/// the result does not depend on thread scheduling.
pub fn score_examples(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    examples: &[Interaction],
    seed: u64,
) -> Result<Vec<(f64, bool)>> {
    examples
        .par_iter()
        .enumerate()
        .map(|(i, ex)| {
            let mut rng = stream_rng(seed, i as u64);
            model
                .predict(params, ex.user, ex.content, &mut rng)
                .map(|p| (p, ex.label))
        })
        .collect()
}

/// Ranks, for each user, every content except the user's positives in
/// `exclude`. One rng stream per user.
pub fn rank_users(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    users: &[usize],
    exclude: &InteractionSet,
    contents: &[usize],
    seed: u64,
) -> Result<Vec<RankedRecommendations>> {
    users
        .par_iter()
        .map(|&user| {
            let seen: HashSet<usize> = exclude.positives(user).iter().copied().collect();
            let candidates: Vec<usize> = contents.iter().copied().filter(|c| !seen.contains(c)).collect();
            let mut rng = stream_rng(seed, user as u64);
            model.rank_all(params, user, &candidates, &mut rng)
        })
        .collect()
}

/// Initial feature of every entity (projected external vector for covered
/// contents, entity-table row otherwise), indexed by entity id.
pub fn content_embeddings(model: &Kgcn<'_>, params: &ParameterSet) -> Result<Vec<Vec<f64>>> {
    (0..model.graph.num_entities())
        .map(|e| model.initial_feature(params, e))
        .collect()
}

fn optional(metric: &str, value: Result<f64>) -> Option<f64> {
    match value {
        Ok(v) => Some(v),
        Err(e) => {
            warn!("{metric} unavailable: {e}");
            None
        }
    }
}

/// Runs the full protocol: CTR on held-out positives plus sampled
/// negatives, top-K ranking over contents unseen in training, diversity,
/// embedding geometry over `pairs` positives, and the cold-start table.
pub fn evaluate_model(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    train: &InteractionSet,
    test: &InteractionSet,
    known_positives: &HashMap<usize, HashSet<usize>>,
    pairs: Option<&PairSets>,
    config: &EvalConfig,
) -> Result<EvalReport> {
    if config.ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("evaluation K list must be strictly ascending".into()));
    }
    let contents = model.graph.contents();

    let (auc_value, f1_value) = if config.ctr {
        let examples = ctr_examples(test, known_positives, &contents, &mut stream_rng(config.seed, u64::MAX));
        let scored = score_examples(model, params, &examples, config.seed)?;
        (
            optional("AUC", auc(&scored)),
            optional("F1", f1(&scored, config.f1_threshold)),
        )
    } else {
        (None, None)
    };

    let users: Vec<usize> = test.users().collect();
    let recs = rank_users(model, params, &users, train, &contents, config.seed)?;
    let relevant = test.positive_sets();
    let ranking = config
        .ks
        .iter()
        .map(|&k| {
            let (recall, ndcg, _) = mean_ranking_metrics(&recs, &relevant, k);
            (k, recall, ndcg)
        })
        .collect();

    let vectors = content_embeddings(model, params)?;
    let inter_list = optional("inter-list diversity", inter_list_diversity(&recs, config.diversity_k));
    let intra_list = optional(
        "intra-list diversity",
        intra_list_diversity(&recs, &vectors, config.diversity_k),
    );
    let alignment = pairs.and_then(|p| {
        let pos: Vec<(&[f64], &[f64])> = p
            .positive_pairs()
            .into_iter()
            .map(|(a, b)| (vectors[a].as_slice(), vectors[b].as_slice()))
            .collect();
        optional("alignment", alignment_loss(&pos))
    });
    let content_vecs: Vec<&[f64]> = contents.iter().map(|&c| vectors[c].as_slice()).collect();
    let uniformity = optional("uniformity", uniformity_loss(&content_vecs));
    let cold_start = cold_start_report(test, train, &recs, &config.strata, config.cold_start_k);

    Ok(EvalReport {
        auc: auc_value,
        f1: f1_value,
        ranking,
        ranked_users: recs.len(),
        inter_list,
        intra_list,
        alignment,
        uniformity,
        cold_start,
    })
}
