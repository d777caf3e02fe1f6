//! Relation-weighted neighbor aggregation and its backward pass.
//!
//! A content's representation for a user is computed over a sampled
//! receptive field: hop 0 is the content, hop `h + 1` holds `K` sampled
//! neighbors for every node of hop `h`. Round `i` (1-based) replaces every
//! node of hops `0..=L-i` by the aggregation of itself with its weighted
//! children using layer `i - 1`; after `L` rounds hop 0 holds the output.

use rand::Rng;

use super::params::{Aggregator, HyperParams, ParameterSet};
use super::tensor::{axpy, dot, sigmoid};
use crate::data::{neighbor_sample, ExternalEmbeddingTable, KnowledgeGraph};
use crate::error::{Error, Result};
use crate::eval::RankedRecommendations;

/// Softmax over `user · r_k`. Sums to 1.
pub fn relation_weights(user: &[f64], relations: &[&[f64]]) -> Vec<f64> {
    let scores: Vec<f64> = relations.iter().map(|r| dot(user, r)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `Σ_k w_k n_k`.
pub fn weighted_neighborhood(neighbors: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; neighbors.first().map_or(0, |n| n.len())];
    for (n, &w) in neighbors.iter().zip(weights) {
        axpy(&mut out, n, w);
    }
    out
}

fn aggregator_input(aggregator: Aggregator, self_vec: &[f64], neighborhood: &[f64]) -> Vec<f64> {
    match aggregator {
        Aggregator::Concat => self_vec.iter().chain(neighborhood).copied().collect(),
        Aggregator::Sum => self_vec.iter().zip(neighborhood).map(|(a, b)| a + b).collect(),
    }
}

fn activate(pre: &[f64], final_layer: bool) -> Vec<f64> {
    if final_layer {
        pre.iter().map(|x| x.tanh()).collect()
    } else {
        pre.iter().map(|x| x.max(0.0)).collect()
    }
}

/// One aggregation: `σ(W_i · combine(self, Σ w_k n_k) + b_i)` with ReLU on
/// inner layers and tanh on the last one.
pub fn aggregate(
    self_vec: &[f64],
    neighbor_vecs: &[&[f64]],
    weights: &[f64],
    layer_index: usize,
    params: &ParameterSet,
    hp: &HyperParams,
) -> Vec<f64> {
    let neighborhood = weighted_neighborhood(neighbor_vecs, weights);
    let pre = params.layers[layer_index].affine(&aggregator_input(hp.aggregator, self_vec, &neighborhood));
    activate(&pre, layer_index + 1 == hp.layers)
}

/// `ReLU(W_α · x + b_α)`: maps an external content vector into the entity
/// space.
pub fn project_content(ext_vec: &[f64], params: &ParameterSet) -> Result<Vec<f64>> {
    let proj = params
        .projection
        .as_ref()
        .ok_or_else(|| Error::Config("model has no content projection layer".into()))?;
    if ext_vec.len() != proj.input_dim() {
        return Err(Error::Dimension {
            expected: proj.input_dim(),
            found: ext_vec.len(),
        });
    }
    Ok(proj.affine(ext_vec).into_iter().map(|x| x.max(0.0)).collect())
}

/// Sampled neighborhood tree of one content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceptiveField {
    /// `entities[h]` has `K^h` nodes.
    pub entities: Vec<Vec<usize>>,
    /// `relations[h][j]` links `entities[h][j / K]` to `entities[h + 1][j]`.
    pub relations: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
struct StepCache {
    weights: Vec<f64>,
    neighborhood: Vec<f64>,
    pre: Vec<f64>,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    user: usize,
    field: ReceptiveField,
    /// Pre-activation of the projection for nodes fed by external vectors.
    projected_pre: Vec<Vec<Option<Vec<f64>>>>,
    /// `vectors[round][hop][node]`; round 0 holds the initial features.
    vectors: Vec<Vec<Vec<Vec<f64>>>>,
    /// `steps[round - 1][hop][node]`.
    steps: Vec<Vec<Vec<StepCache>>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        &self.vectors[self.vectors.len() - 1][0][0]
    }

    pub fn field(&self) -> &ReceptiveField {
        &self.field
    }

    pub fn user(&self) -> usize {
        self.user
    }
}

/// Forward model bound to its graph, optional external content vectors and
/// hyper-parameters. Parameters are passed per call.
#[derive(Debug, Clone, Copy)]
pub struct Kgcn<'a> {
    pub graph: &'a KnowledgeGraph,
    pub external: Option<&'a ExternalEmbeddingTable>,
    pub hp: &'a HyperParams,
}

impl<'a> Kgcn<'a> {
    pub fn new(graph: &'a KnowledgeGraph, external: Option<&'a ExternalEmbeddingTable>, hp: &'a HyperParams) -> Self {
        Self { graph, external, hp }
    }

    /// Checks that `params` fits this graph and configuration.
    pub fn check_compatible(&self, params: &ParameterSet) -> Result<()> {
        let d = self.hp.dim;
        let dim_err = |expected, found| Err(Error::Dimension { expected, found });
        if params.dim() != d || params.entity.cols() != d || params.relation.cols() != d {
            return dim_err(d, params.dim());
        }
        if params.num_entities() < self.graph.num_entities() {
            return dim_err(self.graph.num_entities(), params.num_entities());
        }
        if params.num_relations() < self.graph.num_relations() {
            return dim_err(self.graph.num_relations(), params.num_relations());
        }
        if params.layers.len() != self.hp.layers {
            return dim_err(self.hp.layers, params.layers.len());
        }
        for l in &params.layers {
            if l.input_dim() != self.hp.layer_input_dim() || l.output_dim() != d {
                return dim_err(self.hp.layer_input_dim(), l.input_dim());
            }
        }
        match (self.external, params.external_dim()) {
            (Some(ext), Some(e)) if ext.dim() != e => dim_err(e, ext.dim()),
            (Some(ext), None) if !ext.is_empty() => Err(Error::Config(
                "external embeddings given but the model has no projection layer".into(),
            )),
            _ => Ok(()),
        }
    }

    fn external_vector(&self, entity: usize) -> Option<&'a [f64]> {
        if !self.graph.is_content(entity) {
            return None;
        }
        self.external.and_then(|t| t.get(entity))
    }

    /// Initial feature of an entity: the projected external vector for
    /// covered contents, the entity-table row otherwise.
    pub fn initial_feature(&self, params: &ParameterSet, entity: usize) -> Result<Vec<f64>> {
        match self.external_vector(entity) {
            Some(x) if params.projection.is_some() => project_content(x, params),
            _ => Ok(params.entity.row(entity).to_vec()),
        }
    }

    fn initial_with_pre(&self, params: &ParameterSet, entity: usize) -> (Vec<f64>, Option<Vec<f64>>) {
        match (self.external_vector(entity), &params.projection) {
            (Some(x), Some(proj)) => {
                let pre = proj.affine(x);
                (pre.iter().map(|v| v.max(0.0)).collect(), Some(pre))
            }
            _ => (params.entity.row(entity).to_vec(), None),
        }
    }

    /// Accumulates `grad` on an entity's initial feature into `grads`.
    pub fn backprop_initial(&self, params: &ParameterSet, entity: usize, grad: &[f64], grads: &mut ParameterSet) {
        match (self.external_vector(entity), &params.projection) {
            (Some(x), Some(proj)) => {
                let pre = proj.affine(x);
                self.backprop_projection(x, &pre, grad, grads);
            }
            _ => grads.entity.add_to_row(entity, grad, 1.0),
        }
    }

    fn backprop_projection(&self, x: &[f64], pre: &[f64], grad: &[f64], grads: &mut ParameterSet) {
        let g_pre: Vec<f64> = grad
            .iter()
            .zip(pre)
            .map(|(g, p)| if *p > 0.0 { *g } else { 0.0 })
            .collect();
        let proj = grads
            .projection
            .as_mut()
            .expect("gradient set mirrors the projection layer");
        proj.weight.add_outer(x, &g_pre, 1.0);
        axpy(proj.bias.data_mut(), &g_pre, 1.0);
    }

    pub fn sample_field<R: Rng + ?Sized>(&self, content: usize, rng: &mut R) -> Result<ReceptiveField> {
        let k = self.hp.neighbor_samples;
        let mut entities = vec![vec![content]];
        let mut relations = Vec::with_capacity(self.hp.layers);
        for h in 0..self.hp.layers {
            let mut next_e = Vec::with_capacity(entities[h].len() * k);
            let mut next_r = Vec::with_capacity(entities[h].len() * k);
            for &e in &entities[h] {
                for (r, t) in neighbor_sample(self.graph, e, k, rng)? {
                    next_r.push(r);
                    next_e.push(t);
                }
            }
            entities.push(next_e);
            relations.push(next_r);
        }
        Ok(ReceptiveField { entities, relations })
    }

    /// Runs the aggregation rounds for `user` over a sampled field.
    pub fn forward(&self, params: &ParameterSet, user: usize, field: ReceptiveField) -> ForwardTrace {
        let k = self.hp.neighbor_samples;
        let depth = self.hp.layers;
        let user_vec = params.user.row(user);

        let mut initial = Vec::with_capacity(depth + 1);
        let mut projected_pre = Vec::with_capacity(depth + 1);
        for hop in &field.entities {
            let (vecs, pres): (Vec<_>, Vec<_>) = hop.iter().map(|&e| self.initial_with_pre(params, e)).unzip();
            initial.push(vecs);
            projected_pre.push(pres);
        }

        let mut vectors = vec![initial];
        let mut steps = Vec::with_capacity(depth);
        for round in 1..=depth {
            let layer = &params.layers[round - 1];
            let final_layer = round == depth;
            let prev = &vectors[round - 1];
            let mut round_vecs = Vec::with_capacity(depth - round + 1);
            let mut round_steps = Vec::with_capacity(depth - round + 1);
            for hop in 0..=depth - round {
                let mut hop_vecs = Vec::with_capacity(prev[hop].len());
                let mut hop_steps = Vec::with_capacity(prev[hop].len());
                for (node, self_vec) in prev[hop].iter().enumerate() {
                    let span = node * k..(node + 1) * k;
                    let rels: Vec<&[f64]> = field.relations[hop][span.clone()]
                        .iter()
                        .map(|&r| params.relation.row(r))
                        .collect();
                    let neighbors: Vec<&[f64]> = prev[hop + 1][span].iter().map(Vec::as_slice).collect();
                    let weights = relation_weights(user_vec, &rels);
                    let neighborhood = weighted_neighborhood(&neighbors, &weights);
                    let pre = layer.affine(&aggregator_input(self.hp.aggregator, self_vec, &neighborhood));
                    hop_vecs.push(activate(&pre, final_layer));
                    hop_steps.push(StepCache {
                        weights,
                        neighborhood,
                        pre,
                    });
                }
                round_vecs.push(hop_vecs);
                round_steps.push(hop_steps);
            }
            vectors.push(round_vecs);
            steps.push(round_steps);
        }
        ForwardTrace {
            user,
            field,
            projected_pre,
            vectors,
            steps,
        }
    }

    /// Accumulates into `grads` the gradient of a scalar whose derivative
    /// with respect to the trace output is `grad_output`. The same sampled
    /// field is reused, so the result is exact for this forward value.
    pub fn backward(&self, params: &ParameterSet, trace: &ForwardTrace, grad_output: &[f64], grads: &mut ParameterSet) {
        let k = self.hp.neighbor_samples;
        let depth = self.hp.layers;
        let d = self.hp.dim;
        let user_vec = params.user.row(trace.user);
        let mut user_grad = vec![0.0; d];

        // gvec[round][hop][node] mirrors trace.vectors
        let mut gvec: Vec<Vec<Vec<Vec<f64>>>> = trace
            .vectors
            .iter()
            .map(|round| round.iter().map(|hop| vec![vec![0.0; d]; hop.len()]).collect())
            .collect();
        gvec[depth][0][0].copy_from_slice(grad_output);

        for round in (1..=depth).rev() {
            let layer = &params.layers[round - 1];
            let final_layer = round == depth;
            for hop in 0..=depth - round {
                for node in 0..trace.vectors[round][hop].len() {
                    let step = &trace.steps[round - 1][hop][node];
                    let out = &trace.vectors[round][hop][node];
                    let g_out = &gvec[round][hop][node];
                    let g_pre: Vec<f64> = if final_layer {
                        g_out.iter().zip(out).map(|(g, y)| g * (1.0 - y * y)).collect()
                    } else {
                        g_out
                            .iter()
                            .zip(&step.pre)
                            .map(|(g, p)| if *p > 0.0 { *g } else { 0.0 })
                            .collect()
                    };
                    let self_vec = &trace.vectors[round - 1][hop][node];
                    let input = aggregator_input(self.hp.aggregator, self_vec, &step.neighborhood);
                    let grad_layer = &mut grads.layers[round - 1];
                    grad_layer.weight.add_outer(&input, &g_pre, 1.0);
                    axpy(grad_layer.bias.data_mut(), &g_pre, 1.0);

                    let g_input = layer.weight.matvec(&g_pre);
                    let (g_self, g_nb): (&[f64], &[f64]) = match self.hp.aggregator {
                        Aggregator::Concat => g_input.split_at(d),
                        Aggregator::Sum => (&g_input, &g_input),
                    };
                    axpy(&mut gvec[round - 1][hop][node], g_self, 1.0);

                    // through the weighted sum and the softmax
                    let span = node * k..(node + 1) * k;
                    let mut g_weights = Vec::with_capacity(k);
                    for (slot, child) in span.clone().enumerate() {
                        let n_vec = &trace.vectors[round - 1][hop + 1][child];
                        g_weights.push(dot(g_nb, n_vec));
                        axpy(&mut gvec[round - 1][hop + 1][child], g_nb, step.weights[slot]);
                    }
                    let mean: f64 = step.weights.iter().zip(&g_weights).map(|(w, g)| w * g).sum();
                    for (slot, child) in span.enumerate() {
                        let g_score = step.weights[slot] * (g_weights[slot] - mean);
                        if g_score == 0.0 {
                            continue;
                        }
                        let r = trace.field.relations[hop][child];
                        axpy(&mut user_grad, params.relation.row(r), g_score);
                        grads.relation.add_to_row(r, user_vec, g_score);
                    }
                }
            }
        }

        for (hop, entities) in trace.field.entities.iter().enumerate() {
            for (node, &e) in entities.iter().enumerate() {
                let g = &gvec[0][hop][node];
                match (&trace.projected_pre[hop][node], self.external_vector(e)) {
                    (Some(pre), Some(x)) => self.backprop_projection(x, pre, g, grads),
                    _ => grads.entity.add_to_row(e, g, 1.0),
                }
            }
        }
        grads.user.add_to_row(trace.user, &user_grad, 1.0);
    }

    /// User-conditioned content vector over a freshly sampled field.
    pub fn content_representation<R: Rng + ?Sized>(
        &self,
        params: &ParameterSet,
        user: usize,
        content: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let field = self.sample_field(content, rng)?;
        Ok(self.forward(params, user, field).output().to_vec())
    }

    /// `U[user] · representation`, before the sigmoid.
    pub fn logit<R: Rng + ?Sized>(
        &self,
        params: &ParameterSet,
        user: usize,
        content: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let rep = self.content_representation(params, user, content, rng)?;
        Ok(dot(params.user.row(user), &rep))
    }

    /// Click probability `sigmoid(U[user] · representation)`.
    pub fn predict<R: Rng + ?Sized>(
        &self,
        params: &ParameterSet,
        user: usize,
        content: usize,
        rng: &mut R,
    ) -> Result<f64> {
        self.logit(params, user, content, rng).map(sigmoid)
    }

    /// Scores every candidate (in the given order, one field sample each)
    /// and sorts by descending probability, ties by ascending id.
    pub fn rank_all<R: Rng + ?Sized>(
        &self,
        params: &ParameterSet,
        user: usize,
        candidates: &[usize],
        rng: &mut R,
    ) -> Result<RankedRecommendations> {
        if candidates.is_empty() {
            return Err(Error::Data(format!("no candidate to rank for user {user}")));
        }
        let mut scored = candidates
            .iter()
            .map(|&c| self.predict(params, user, c, rng).map(|s| (c, s)))
            .collect::<Result<Vec<_>>>()?;
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(RankedRecommendations::new(
            user,
            scored.iter().map(|p| p.0).collect(),
            scored.iter().map(|p| p.1).collect(),
        ))
    }
}
