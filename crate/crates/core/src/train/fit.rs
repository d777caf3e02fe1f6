use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::loss::{compute_gradients, ContrastiveBatch, LossBreakdown};
use crate::data::{sample_user_negatives, Interaction, InteractionSet};
use crate::error::{Error, Result};
use crate::model::{init_parameters, Kgcn, ParameterSet};
use crate::pairs::PairSets;

/// Stream of the seed used for initialization, shuffling and sampling.
const MAIN_STREAM: u64 = 0;
/// Anchor shuffling has its own stream, so pairs never perturb the main one.
const CONTRASTIVE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub auc: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ParameterSet,
    pub log: Vec<EpochLog>,
}

/// Hook called after every epoch; may return `(auc, f1)` on a held-out set.
pub trait TrainObserver {
    fn on_epoch(&mut self, epoch: usize, params: &ParameterSet, loss: &LossBreakdown) -> Result<Option<(f64, f64)>>;
}

pub struct NoObserver;

impl TrainObserver for NoObserver {
    fn on_epoch(&mut self, _: usize, _: &ParameterSet, _: &LossBreakdown) -> Result<Option<(f64, f64)>> {
        Ok(None)
    }
}

fn epoch_examples(train: &InteractionSet, contents: &[usize], rng: &mut ChaCha8Rng) -> Vec<Interaction> {
    let mut users: Vec<usize> = train.users().collect();
    users.shuffle(rng);
    let mut examples = Vec::new();
    for u in users {
        examples.extend(train.positives(u).iter().map(|&c| Interaction::new(u, c, true)));
        match sample_user_negatives(u, train, contents, rng) {
            Ok(negs) => examples.extend(negs.into_iter().map(|c| Interaction::new(u, c, false))),
            Err(e) => warn!("skipping negatives: {e}"),
        }
    }
    examples
}

/// Trains from a fresh initialization. Passing `pairs` enables the
/// contrastive term (weighted by `1 - γ`). Zero epochs returns the
/// initial parameters.
pub fn fit(
    model: &Kgcn<'_>,
    train: &InteractionSet,
    pairs: Option<&PairSets>,
    num_users: usize,
    observer: &mut dyn TrainObserver,
) -> Result<FitResult> {
    let hp = model.hp;
    hp.validate()?;
    let graph = model.graph;
    if train.users().next().is_none() {
        return Err(Error::Data("training set has no positive interaction".into()));
    }
    if let Some(u) = train.users().find(|&u| u >= num_users) {
        return Err(Error::Data(format!(
            "training user {u} out of range ({num_users} users)"
        )));
    }
    let contents = graph.contents();
    if let Some(r) = train.records().iter().find(|r| !graph.is_content(r.content)) {
        return Err(Error::Data(format!(
            "training content {} is not a content of the graph",
            r.content
        )));
    }
    if let Some(p) = pairs {
        p.validate(&contents)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(MAIN_STREAM);
    let mut cl_rng = ChaCha8Rng::seed_from_u64(hp.seed);
    cl_rng.set_stream(CONTRASTIVE_STREAM);

    let ext_dim = model.external.map(|t| t.dim());
    let mut params = init_parameters(
        hp,
        num_users,
        graph.num_entities(),
        graph.num_relations(),
        ext_dim,
        &mut rng,
    )?;
    let mut adam = AdamState::new(&params);
    let mut log = Vec::with_capacity(hp.epochs);

    for epoch in 1..=hp.epochs {
        let examples = epoch_examples(train, &contents, &mut rng);
        let num_batches = examples.len().div_ceil(hp.batch_size);
        let anchors: Vec<usize> = match pairs {
            Some(p) => {
                let mut a: Vec<usize> = p.anchors().collect();
                a.shuffle(&mut cl_rng);
                a
            }
            None => Vec::new(),
        };
        let anchor_chunk = anchors.len().div_ceil(num_batches).max(1);

        let mut sum = LossBreakdown::default();
        for (b, batch) in examples.chunks(hp.batch_size).enumerate() {
            let lo = (b * anchor_chunk).min(anchors.len());
            let hi = ((b + 1) * anchor_chunk).min(anchors.len());
            let contrastive = pairs.map(|p| ContrastiveBatch {
                pairs: p,
                anchors: &anchors[lo..hi],
            });
            let (loss, grads) =
                compute_gradients(model, &params, batch, contrastive, &mut rng).map_err(|e| match e {
                    Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}, batch {b}: {m}")),
                    other => other,
                })?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}, batch {b}")));
            }
            adam_step(&mut params, &grads, &mut adam, hp.learning_rate)?;
            sum.base += loss.base;
            sum.contrastive += loss.contrastive;
            sum.l2 += loss.l2;
            sum.total += loss.total;
        }
        params.check_finite()?;
        let n = num_batches as f64;
        let mean = LossBreakdown {
            base: sum.base / n,
            contrastive: sum.contrastive / n,
            l2: sum.l2 / n,
            total: sum.total / n,
        };
        let held_out = observer.on_epoch(epoch, &params, &mean)?;
        info!(
            "epoch {epoch}: loss {:.5} (base {:.5}, contrastive {:.5}){}",
            mean.total,
            mean.base,
            mean.contrastive,
            held_out
                .map(|(a, f)| format!(", auc {a:.4}, f1 {f:.4}"))
                .unwrap_or_default()
        );
        debug!("epoch {epoch}: {} examples in {num_batches} batches", examples.len());
        log.push(EpochLog {
            epoch,
            loss: mean,
            auc: held_out.map(|h| h.0),
            f1: held_out.map(|h| h.1),
        });
    }
    Ok(FitResult { params, log })
}
