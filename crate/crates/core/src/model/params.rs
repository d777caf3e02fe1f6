use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    /// `W (self + neighborhood) + b`, `W: d -> d`.
    Sum,
    /// `W [self ; neighborhood] + b`, `W: 2d -> d`.
    Concat,
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::Sum => "sum",
            Aggregator::Concat => "concat",
        })
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Aggregator::Sum),
            "concat" => Ok(Aggregator::Concat),
            other => Err(Error::Config(format!("unknown aggregator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// `K`, neighbors sampled per node.
    pub neighbor_samples: usize,
    /// `L`, aggregation depth.
    pub layers: usize,
    /// `d`.
    pub dim: usize,
    pub aggregator: Aggregator,
    /// Weight of the collaborative loss; the contrastive loss gets `1 - gamma`.
    pub gamma: f64,
    /// L2 coefficient on every parameter.
    pub l2: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            neighbor_samples: 4,
            layers: 1,
            dim: 32,
            aggregator: Aggregator::Concat,
            gamma: 0.8,
            l2: 1e-7,
            learning_rate: 2e-2,
            batch_size: 256,
            epochs: 10,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.neighbor_samples == 0 {
            return fail("neighbor_samples must be at least 1".into());
        }
        if !(1..=2).contains(&self.layers) {
            return fail(format!("layers must be 1 or 2, got {}", self.layers));
        }
        if self.dim == 0 {
            return fail("dim must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return fail(format!("l2 must be a finite non-negative number, got {}", self.l2));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 10] = [
        "neighbor_samples",
        "layers",
        "dim",
        "aggregator",
        "gamma",
        "l2",
        "learning_rate",
        "batch_size",
        "epochs",
        "seed",
    ];

    /// Sets one field from its textual form. Does not validate ranges.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
        }
        match key {
            "neighbor_samples" => self.neighbor_samples = parse(key, value)?,
            "layers" => self.layers = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "aggregator" => self.aggregator = value.trim().parse()?,
            "gamma" => self.gamma = parse(key, value)?,
            "l2" => self.l2 = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown hyper-parameter `{other}`"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs that [`HyperParams::set`] reads back exactly.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("neighbor_samples", self.neighbor_samples.to_string()),
            ("layers", self.layers.to_string()),
            ("dim", self.dim.to_string()),
            ("aggregator", self.aggregator.to_string()),
            ("gamma", self.gamma.to_string()),
            ("l2", self.l2.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// Input width of the aggregation layers.
    pub fn layer_input_dim(&self) -> usize {
        match self.aggregator {
            Aggregator::Sum => self.dim,
            Aggregator::Concat => 2 * self.dim,
        }
    }
}

/// Affine map `x -> x^T W + b` with `W: in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Layer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor::zeros(input, output),
            bias: Tensor::zeros(1, output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.weight.vecmat(x);
        for (o, b) in out.iter_mut().zip(self.bias.data()) {
            *o += b;
        }
        out
    }
}

/// Every trainable tensor: user, entity and relation tables, one affine
/// layer per aggregation round, and the optional content projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub user: Tensor,
    pub entity: Tensor,
    pub relation: Tensor,
    pub layers: Vec<Layer>,
    pub projection: Option<Layer>,
}

impl ParameterSet {
    /// Same shapes, all zeros. Used as the gradient container.
    pub fn zeros_like(&self) -> Self {
        let z = |t: &Tensor| Tensor::zeros(t.rows(), t.cols());
        let zl = |l: &Layer| Layer {
            weight: z(&l.weight),
            bias: z(&l.bias),
        };
        Self {
            user: z(&self.user),
            entity: z(&self.entity),
            relation: z(&self.relation),
            layers: self.layers.iter().map(zl).collect(),
            projection: self.projection.as_ref().map(zl),
        }
    }

    pub fn dim(&self) -> usize {
        self.user.cols()
    }

    pub fn num_users(&self) -> usize {
        self.user.rows()
    }

    pub fn num_entities(&self) -> usize {
        self.entity.rows()
    }

    pub fn num_relations(&self) -> usize {
        self.relation.rows()
    }

    pub fn external_dim(&self) -> Option<usize> {
        self.projection.as_ref().map(Layer::input_dim)
    }

    /// Tensors in canonical order with stable names.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("user".to_string(), &self.user),
            ("entity".to_string(), &self.entity),
            ("relation".to_string(), &self.relation),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("layer{i}.weight"), &l.weight));
            out.push((format!("layer{i}.bias"), &l.bias));
        }
        if let Some(p) = &self.projection {
            out.push(("projection.weight".to_string(), &p.weight));
            out.push(("projection.bias".to_string(), &p.bias));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.user, &mut self.entity, &mut self.relation];
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        if let Some(p) = &mut self.projection {
            out.push(&mut p.weight);
            out.push(&mut p.bias);
        }
        out
    }

    /// `||Θ||²` over every tensor.
    pub fn sum_squares(&self) -> f64 {
        self.named_tensors().iter().map(|(_, t)| t.sum_squares()).sum()
    }

    pub fn num_scalars(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.data().len()).sum()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, t) in self.named_tensors() {
            if !t.is_finite() {
                return Err(Error::Numeric(format!("non-finite value in `{name}`")));
            }
        }
        Ok(())
    }
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect())
}

/// Draws every tensor from a Glorot uniform distribution, in the order
/// user, entity, relation, layers, projection. The projection exists only
/// when `external_dim` is given.
pub fn init_parameters<R: Rng + ?Sized>(
    hp: &HyperParams,
    num_users: usize,
    num_entities: usize,
    num_relations: usize,
    external_dim: Option<usize>,
    rng: &mut R,
) -> Result<ParameterSet> {
    hp.validate()?;
    if num_users == 0 || num_entities == 0 || num_relations == 0 {
        return Err(Error::Data(format!(
            "parameter counts must be positive (users {num_users}, entities {num_entities}, relations {num_relations})"
        )));
    }
    if external_dim == Some(0) {
        return Err(Error::Data("external embedding dimension must be positive".into()));
    }
    let d = hp.dim;
    let user = glorot(num_users, d, rng);
    let entity = glorot(num_entities, d, rng);
    let relation = glorot(num_relations, d, rng);
    let layers = (0..hp.layers)
        .map(|_| Layer {
            weight: glorot(hp.layer_input_dim(), d, rng),
            bias: glorot(1, d, rng),
        })
        .collect();
    let projection = external_dim.map(|e| Layer {
        weight: glorot(e, d, rng),
        bias: glorot(1, d, rng),
    });
    Ok(ParameterSet {
        user,
        entity,
        relation,
        layers,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hp(dim: usize, aggregator: Aggregator) -> HyperParams {
        HyperParams {
            dim,
            aggregator,
            ..HyperParams::default()
        }
    }

    #[test]
    fn seeded_init_is_bitwise_identical() {
        let h = hp(8, Aggregator::Concat);
        let a = init_parameters(&h, 5, 9, 3, Some(6), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = init_parameters(&h, 5, 9, 3, Some(6), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let bits = |p: &ParameterSet| -> Vec<u64> {
            p.named_tensors()
                .iter()
                .flat_map(|(_, t)| t.data().iter().map(|x| x.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn no_external_table_no_projection() {
        let p = init_parameters(
            &hp(4, Aggregator::Sum),
            2,
            3,
            1,
            None,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert!(p.projection.is_none());
        assert_eq!(p.named_tensors().len(), 5);
    }

    #[test]
    fn concat_weight_shape() {
        let p = init_parameters(
            &hp(4, Aggregator::Concat),
            2,
            3,
            1,
            None,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(p.layers[0].weight.shape(), (8, 4));
        let p = init_parameters(
            &hp(4, Aggregator::Sum),
            2,
            3,
            1,
            None,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(p.layers[0].weight.shape(), (4, 4));
    }

    #[test]
    fn projection_maps_external_dim_to_d() {
        let p = init_parameters(
            &hp(4, Aggregator::Concat),
            2,
            3,
            1,
            Some(10),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(p.projection.as_ref().unwrap().weight.shape(), (10, 4));
        assert_eq!(p.external_dim(), Some(10));
    }

    #[test]
    fn glorot_bounds() {
        let p = init_parameters(
            &hp(16, Aggregator::Concat),
            100,
            50,
            4,
            None,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let a = (6.0f64 / 116.0).sqrt();
        assert!(p.user.data().iter().all(|x| x.abs() < a));
        p.check_finite().unwrap();
    }

    #[test]
    fn validation() {
        let mut h = HyperParams::default();
        h.gamma = 1.5;
        assert!(h.validate().is_err());
        h.gamma = 0.5;
        h.layers = 3;
        assert!(h.validate().is_err());
        h.layers = 2;
        h.learning_rate = 0.0;
        assert!(h.validate().is_err());
    }

    #[test]
    fn set_reads_back_to_pairs() {
        let mut h = HyperParams::default();
        h.gamma = 0.3;
        h.l2 = 2e-5;
        h.aggregator = Aggregator::Sum;
        let mut g = HyperParams::default();
        for (k, v) in h.to_pairs() {
            g.set(k, &v).unwrap();
        }
        assert_eq!(g, h);
        assert!(g.set("nope", "1").is_err());
    }
}
