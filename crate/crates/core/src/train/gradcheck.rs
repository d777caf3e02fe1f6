use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{compute_gradients, total_loss, ContrastiveBatch};
use crate::data::Interaction;
use crate::error::Result;
use crate::model::{Kgcn, ParameterSet};

/// One probed coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradProbe {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradProbe {
    /// `|analytic - numeric| / max(1, |analytic|)`.
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.numeric).abs() / self.analytic.abs().max(1.0)
    }
}

/// Compares analytic gradients against central differences with step `h`
/// on `probes` coordinates (at least one in every tensor). Every
/// loss evaluation replays the neighbor samples of `sample_seed`.
#[allow(clippy::too_many_arguments)]
pub fn check_gradients(
    model: &Kgcn<'_>,
    params: &ParameterSet,
    batch: &[Interaction],
    contrastive: Option<ContrastiveBatch<'_>>,
    sample_seed: u64,
    probes: usize,
    h: f64,
    coord_rng: &mut impl Rng,
) -> Result<Vec<GradProbe>> {
    let replay = || ChaCha8Rng::seed_from_u64(sample_seed);
    let (_, grads) = compute_gradients(model, params, batch, contrastive, &mut replay())?;
    let named = grads.named_tensors();
    let tensors = named.len();

    // one coordinate per tensor first, the rest uniformly over all entries
    let offsets: Vec<usize> = named
        .iter()
        .scan(0, |acc, (_, t)| {
            let start = *acc;
            *acc += t.data().len();
            Some(start)
        })
        .collect();
    let total: usize = named.iter().map(|(_, t)| t.data().len()).sum();
    let mut flat: Vec<usize> = (0..tensors)
        .map(|t| offsets[t] + coord_rng.gen_range(0..named[t].1.data().len()))
        .collect();
    let rest: Vec<usize> = (0..total).filter(|i| !flat.contains(i)).collect();
    let extra = probes.saturating_sub(flat.len()).min(rest.len());
    flat.extend(index::sample(coord_rng, rest.len(), extra).into_iter().map(|i| rest[i]));
    flat.sort_unstable();
    let locate = |f: usize| {
        let t = offsets.partition_point(|&o| o <= f) - 1;
        (t, f - offsets[t])
    };

    let mut out = Vec::with_capacity(probes);
    let mut probe = params.clone();
    for (t, i) in flat.into_iter().map(locate) {
        let original = params.named_tensors()[t].1.data()[i];
        let mut eval = |x: f64| -> Result<f64> {
            probe.tensors_mut()[t].data_mut()[i] = x;
            total_loss(model, &probe, batch, contrastive, &mut replay()).map(|l| l.total)
        };
        let up = eval(original + h)?;
        let down = eval(original - h)?;
        probe.tensors_mut()[t].data_mut()[i] = original;
        out.push(GradProbe {
            tensor: named[t].0.clone(),
            index: i,
            analytic: named[t].1.data()[i],
            numeric: (up - down) / (2.0 * h),
        });
    }
    Ok(out)
}
