//! The training objective
//! `L = γ · L_base + (1 - γ) · CL + λ · ||Θ||²` and its exact gradient.
//!
//! `L_base` is the mean binary cross-entropy of `sigmoid(U[u] · h_c(u))`
//! over a batch of labelled (user, content) examples; sampled negatives
//! enter as label-0 terms. `CL` is, per anchor, the mean BCE of
//! `sigmoid(h_a · h_p)` against 1 over its positives plus the mean BCE
//! against 0 over its negatives, averaged over anchors, where `h` is a
//! content's initial feature.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::data::Interaction;
use crate::error::{Error, Result};
use crate::model::{axpy, dot, sigmoid, Kgcn, ParameterSet};
use crate::pairs::PairSets;

/// Predictions are clamped to `[ε, 1 - ε]` before the log.
pub const PREDICTION_EPS: f64 = 1e-12;

/// One gradient tensor per parameter tensor.
pub type GradientSet = ParameterSet;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub base: f64,
    pub contrastive: f64,
    pub l2: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn combine(gamma: f64, base: f64, contrastive: f64, l2: f64) -> Self {
        Self {
            base,
            contrastive,
            l2,
            total: gamma * base + (1.0 - gamma) * contrastive + l2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.base.is_finite() && self.contrastive.is_finite() && self.l2.is_finite() && self.total.is_finite()
    }
}

/// Binary cross-entropy `-[y ln p + (1 - y) ln(1 - p)]` with `p` clamped.
pub fn bce(label: f64, p: f64) -> f64 {
    let p = p.clamp(PREDICTION_EPS, 1.0 - PREDICTION_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// `d bce(y, sigmoid(z)) / dz`; zero where the clamp is active.
fn bce_logit_grad(label: f64, p: f64) -> f64 {
    if !(PREDICTION_EPS..=1.0 - PREDICTION_EPS).contains(&p) {
        0.0
    } else {
        p - label
    }
}

/// Anchors of one contrastive mini-batch and the pair sets they index.
#[derive(Debug, Clone, Copy)]
pub struct ContrastiveBatch<'a> {
    pub pairs: &'a PairSets,
    pub anchors: &'a [usize],
}

/// Contrastive loss over `anchors`, computed from explicit content vectors.
pub fn contrastive_loss(pairs: &PairSets, vectors: &HashMap<usize, Vec<f64>>, anchors: &[usize]) -> Result<f64> {
    contrastive_gradients(pairs, vectors, anchors, 0.0).map(|(loss, _)| loss)
}

/// Contrastive loss plus `scale · dCL/dh` for every content it touches.
/// With `scale == 0` no gradient is accumulated.
pub fn contrastive_gradients(
    pairs: &PairSets,
    vectors: &HashMap<usize, Vec<f64>>,
    anchors: &[usize],
    scale: f64,
) -> Result<(f64, BTreeMap<usize, Vec<f64>>)> {
    if anchors.is_empty() {
        return Err(Error::Data("contrastive batch has no anchor".into()));
    }
    let lookup = |c: usize| {
        vectors
            .get(&c)
            .ok_or_else(|| Error::Data(format!("no vector for content {c}")))
    };
    let per_anchor = 1.0 / anchors.len() as f64;
    let mut loss = 0.0;
    let mut grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &anchor in anchors {
        let h_a = lookup(anchor)?;
        for (label, side) in [(1.0, &pairs.positives), (0.0, &pairs.negatives)] {
            let partners = side.get(&anchor).filter(|p| !p.is_empty()).ok_or_else(|| {
                Error::Data(format!(
                    "anchor {anchor} has no {} partner",
                    if label > 0.5 { "positive" } else { "negative" }
                ))
            })?;
            let weight = per_anchor / partners.len() as f64;
            for &partner in partners {
                let h_p = lookup(partner)?;
                let p = sigmoid(dot(h_a, h_p));
                loss += weight * bce(label, p);
                if scale != 0.0 {
                    let g = scale * weight * bce_logit_grad(label, p);
                    if g != 0.0 {
                        let d = h_a.len();
                        axpy(grads.entry(anchor).or_insert_with(|| vec![0.0; d]), h_p, g);
                        axpy(grads.entry(partner).or_insert_with(|| vec![0.0; d]), h_a, g);
                    }
                }
            }
        }
    }
    Ok((loss, grads))
}

fn contrastive_vectors(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    batch: &ContrastiveBatch<'_>,
) -> Result<HashMap<usize, Vec<f64>>> {
    let mut vectors = HashMap::new();
    for &anchor in batch.anchors {
        let partners = batch
            .pairs
            .positives
            .get(&anchor)
            .into_iter()
            .chain(batch.pairs.negatives.get(&anchor));
        for c in std::iter::once(anchor).chain(partners.flatten().copied()) {
            if let std::collections::hash_map::Entry::Vacant(slot) = vectors.entry(c) {
                if c >= model.graph.num_entities() {
                    return Err(Error::Data(format!("pair references unknown content {c}")));
                }
                slot.insert(model.initial_feature(params, c)?);
            }
        }
    }
    Ok(vectors)
}

/// Shared forward (and optional backward) pass. Neighbor samples are drawn
/// from `rng` in example order, identically with or without gradients.
fn objective<R: Rng + ?Sized>(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    examples: &[Interaction],
    contrastive: Option<ContrastiveBatch<'_>>,
    rng: &mut R,
    mut grads: Option<&mut GradientSet>,
) -> Result<LossBreakdown> {
    if examples.is_empty() {
        return Err(Error::Data("empty training batch".into()));
    }
    let hp = model.hp;
    let base_scale = hp.gamma / examples.len() as f64;
    let mut base = 0.0;
    for ex in examples {
        let field = model.sample_field(ex.content, rng)?;
        let trace = model.forward(params, ex.user, field);
        let user_vec = params.user.row(ex.user);
        let p = sigmoid(dot(user_vec, trace.output()));
        base += bce(ex.target(), p);
        if let Some(g) = grads.as_deref_mut() {
            let g_logit = base_scale * bce_logit_grad(ex.target(), p);
            if g_logit != 0.0 {
                g.user.add_to_row(ex.user, trace.output(), g_logit);
                let g_out: Vec<f64> = user_vec.iter().map(|u| u * g_logit).collect();
                model.backward(params, &trace, &g_out, g);
            }
        }
    }
    base /= examples.len() as f64;

    let mut cl = 0.0;
    if let Some(batch) = contrastive.filter(|b| !b.anchors.is_empty()) {
        let vectors = contrastive_vectors(model, params, &batch)?;
        let scale = if grads.is_some() { 1.0 - hp.gamma } else { 0.0 };
        let (loss, content_grads) = contrastive_gradients(batch.pairs, &vectors, batch.anchors, scale)?;
        cl = loss;
        if let Some(g) = grads.as_deref_mut() {
            for (c, grad) in content_grads {
                model.backprop_initial(params, c, &grad, g);
            }
        }
    }

    let l2 = hp.l2 * params.sum_squares();
    if let Some(g) = grads {
        if hp.l2 != 0.0 {
            let mut targets = g.tensors_mut();
            for ((_, theta), grad) in params.named_tensors().into_iter().zip(targets.iter_mut()) {
                axpy(grad.data_mut(), theta.data(), 2.0 * hp.l2);
            }
        }
    }
    Ok(LossBreakdown::combine(hp.gamma, base, cl, l2))
}

/// Mean BCE of predictions against labels over `batch`.
pub fn base_loss<R: Rng + ?Sized>(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    batch: &[Interaction],
    rng: &mut R,
) -> Result<f64> {
    objective(model, params, batch, None, rng, None).map(|l| l.base)
}

/// Value of the joint objective on one batch.
pub fn total_loss<R: Rng + ?Sized>(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    batch: &[Interaction],
    contrastive: Option<ContrastiveBatch<'_>>,
    rng: &mut R,
) -> Result<LossBreakdown> {
    objective(model, params, batch, contrastive, rng, None)
}

/// Exact gradient of [`total_loss`] for the neighbor samples drawn from
/// `rng`; replaying the same rng state reproduces the same samples.
pub fn compute_gradients<R: Rng + ?Sized>(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    batch: &[Interaction],
    contrastive: Option<ContrastiveBatch<'_>>,
    rng: &mut R,
) -> Result<(LossBreakdown, GradientSet)> {
    let mut grads = params.zeros_like();
    let loss = objective(model, params, batch, contrastive, rng, Some(&mut grads))?;
    for (name, t) in grads.named_tensors() {
        if !t.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient in `{name}`")));
        }
    }
    Ok((loss, grads))
}
