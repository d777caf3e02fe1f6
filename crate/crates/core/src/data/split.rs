use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::InteractionSet;
use crate::error::{Error, Result};

/// Train/eval/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub eval_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            eval_frac: 0.2,
            test_frac: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn new(train_frac: f64, eval_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train_frac,
            eval_frac,
            test_frac,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train", self.train_frac),
            ("eval", self.eval_frac),
            ("test", self.test_frac),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("{name} fraction {f} must lie in (0, 1)")));
            }
        }
        let sum = self.train_frac + self.eval_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Uniformly shuffles the records under `spec.seed` and cuts them into
/// train/eval/test. Each part keeps the input's relative record order.
pub fn split_dataset(
    interactions: &InteractionSet,
    spec: &SplitSpec,
) -> Result<(InteractionSet, InteractionSet, InteractionSet)> {
    spec.validate()?;
    let n = interactions.len();
    if n == 0 {
        return Err(Error::Data("cannot split an empty interaction set".into()));
    }
    let n_train = (n as f64 * spec.train_frac).round() as usize;
    let n_eval = (n as f64 * spec.eval_frac).round() as usize;
    let n_test = n.saturating_sub(n_train + n_eval);
    if n_train == 0 || n_eval == 0 || n_test == 0 || n_train + n_eval >= n {
        return Err(Error::Data(format!(
            "{n} records cannot be split {}/{}/{} without an empty part",
            spec.train_frac, spec.eval_frac, spec.test_frac
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut part = vec![0u8; n];
    for &i in &order[n_train..n_train + n_eval] {
        part[i] = 1;
    }
    for &i in &order[n_train + n_eval..] {
        part[i] = 2;
    }
    let mut buckets = [Vec::new(), Vec::new(), Vec::new()];
    for (i, r) in interactions.records().iter().enumerate() {
        buckets[part[i] as usize].push(*r);
    }
    let [train, eval, test] = buckets;
    Ok((
        InteractionSet::from_records(train)?,
        InteractionSet::from_records(eval)?,
        InteractionSet::from_records(test)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Interaction;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn records(n: usize) -> InteractionSet {
        InteractionSet::from_records((0..n).map(|i| Interaction::new(i % 37, i, true)).collect()).unwrap()
    }

    #[test]
    fn ten_records_six_two_two() {
        let spec = SplitSpec::new(0.6, 0.2, 0.2, 1).unwrap();
        let (a, b, c) = split_dataset(&records(10), &spec).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (6, 2, 2));
    }

    #[test]
    fn same_seed_same_split() {
        let spec = SplitSpec::new(0.6, 0.2, 0.2, 1).unwrap();
        let set = records(50);
        assert_eq!(split_dataset(&set, &spec).unwrap(), split_dataset(&set, &spec).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        let set = records(1000);
        let (a, _, _) = split_dataset(&set, &SplitSpec::new(0.6, 0.2, 0.2, 1).unwrap()).unwrap();
        let (b, _, _) = split_dataset(&set, &SplitSpec::new(0.6, 0.2, 0.2, 2).unwrap()).unwrap();
        let sa: HashSet<_> = a.records().iter().collect();
        let sb: HashSet<_> = b.records().iter().collect();
        assert_ne!(sa, sb);
    }

    #[test]
    fn zero_sized_part_is_an_error() {
        let spec = SplitSpec::new(0.8, 0.1, 0.1, 0).unwrap();
        assert!(split_dataset(&records(3), &spec).is_err());
    }

    #[test]
    fn invalid_fractions() {
        assert!(SplitSpec::new(0.6, 0.2, 0.3, 0).is_err());
        assert!(SplitSpec::new(1.0, 0.0, 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 5usize..300, seed in any::<u64>()) {
            let set = records(n);
            let (a, b, c) = split_dataset(&set, &SplitSpec::new(0.6, 0.2, 0.2, seed).unwrap()).unwrap();
            let all: HashSet<_> = set.records().iter().copied().collect();
            let mut union = HashSet::new();
            for part in [&a, &b, &c] {
                for r in part.records() {
                    prop_assert!(union.insert(*r), "record in two parts");
                }
            }
            prop_assert_eq!(union, all);
        }
    }
}
