//! Evaluation metrics: CTR (AUC, F1), top-K ranking (Recall, NDCG),
//! inter-/intra-list diversity, alignment/uniformity, cold-start
//! stratification and Welch's t-test, plus the protocol that runs them
//! against a trained model.

mod coldstart;
mod ctr;
mod diversity;
mod geometry;
mod protocol;
mod ranking;
mod stats;

pub use coldstart::{cold_start_report, StrataSpec, StratumRow};
pub use ctr::{auc, f1};
pub use diversity::{cosine_distance, inter_list_diversity, intra_list_diversity};
pub use geometry::{alignment_loss, uniformity_loss};
pub use protocol::{
    content_embeddings, ctr_examples, evaluate_model, rank_users, score_examples, EvalConfig, EvalReport,
};
pub use ranking::{mean_ranking_metrics, ndcg_at_k, recall_at_k};
pub use stats::{ln_gamma, regularized_incomplete_beta, student_t_two_sided_p, two_sample_ttest, TTest};

use crate::error::{Error, Result};

/// One user's ranked list with aligned, non-increasing scores.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedRecommendations {
    pub user: usize,
    pub items: Vec<usize>,
    pub scores: Vec<f64>,
}

impl RankedRecommendations {
    /// Trusts the caller on ordering; see [`RankedRecommendations::validate`].
    pub fn new(user: usize, items: Vec<usize>, scores: Vec<f64>) -> Self {
        Self { user, items, scores }
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.len() != self.scores.len() {
            return Err(Error::Data(format!(
                "user {}: ids and scores differ in length",
                self.user
            )));
        }
        if self.scores.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Data(format!(
                "user {}: scores are not non-increasing",
                self.user
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.items.iter().all(|i| seen.insert(*i)) {
            return Err(Error::Data(format!("user {}: duplicate content in list", self.user)));
        }
        Ok(())
    }

    /// The first `min(k, len)` items.
    pub fn top(&self, k: usize) -> &[usize] {
        &self.items[..k.min(self.items.len())]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
