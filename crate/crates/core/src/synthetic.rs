//! Small generated datasets with known structure, used by tests, the
//! acceptance checks and `kgcl synth`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{ExternalEmbeddingTable, Interaction, InteractionSet, KnowledgeGraph, Triple};
use crate::error::{Error, Result};
use crate::model::{Aggregator, HyperParams};
use crate::pairs::{
    build_pair_sets, render_template, ContentMetadata, DomainKind, EmbeddingDotProvider, PairMode, PairSets,
};

const GENRE_NAMES: [&str; 4] = ["Drama", "Comedy", "Horror", "Western"];

/// Planted two-block layout.
///
/// Contents of each cluster sit on a ring and are linked to their cluster's
/// genre entity and to one of consecutive-window subgenre entities. Each
/// user belongs to one cluster and likes the contents nearest a random
/// point of that cluster's ring.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub num_users: usize,
    pub clusters: usize,
    pub contents_per_cluster: usize,
    /// Consecutive ring positions sharing a subgenre.
    pub subgenre_width: usize,
    pub positives_per_user: usize,
    /// Held-out share of every user's positives.
    pub test_fraction: f64,
    /// Share of users whose training positives are cut down.
    pub cold_fraction: f64,
    pub cold_train_positives: usize,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            num_users: 200,
            clusters: 2,
            contents_per_cluster: 50,
            subgenre_width: 5,
            positives_per_user: 20,
            test_fraction: 0.2,
            cold_fraction: 0.0,
            cold_train_positives: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedDataset {
    pub graph: KnowledgeGraph,
    pub num_users: usize,
    pub train: InteractionSet,
    pub test: InteractionSet,
    /// Indexed by content id.
    pub metadata: Vec<ContentMetadata>,
    pub user_cluster: Vec<usize>,
    /// Users whose training positives were cut, ascending.
    pub cold_users: Vec<usize>,
}

impl PlantedSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("planted spec: {m}")));
        if self.num_users == 0 || self.clusters == 0 || self.clusters > GENRE_NAMES.len() {
            return bad("users must be positive and clusters within 1..=4");
        }
        if self.subgenre_width == 0 || !self.contents_per_cluster.is_multiple_of(self.subgenre_width) {
            return bad("subgenre width must divide the cluster size");
        }
        if self.positives_per_user < 2 || self.positives_per_user >= self.contents_per_cluster {
            return bad("positives per user must lie in 2..cluster size");
        }
        if !(0.0..1.0).contains(&self.test_fraction) || !(0.0..=1.0).contains(&self.cold_fraction) {
            return bad("fractions out of range");
        }
        if self.cold_train_positives == 0 {
            return bad("cold users need at least one training positive");
        }
        Ok(())
    }

    pub fn num_contents(&self) -> usize {
        self.clusters * self.contents_per_cluster
    }

    pub fn generate(&self) -> Result<PlantedDataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let per = self.contents_per_cluster;
        let subgenres_per_cluster = per / self.subgenre_width;
        let num_contents = self.num_contents();
        let genre_entity = |g: usize| num_contents + g;
        let subgenre_entity = |g: usize, s: usize| num_contents + self.clusters + g * subgenres_per_cluster + s;
        let num_entities = num_contents + self.clusters * (1 + subgenres_per_cluster);

        let mut triples = Vec::with_capacity(2 * num_contents);
        let mut metadata = Vec::with_capacity(num_contents);
        for c in 0..num_contents {
            let (g, pos) = (c / per, c % per);
            let s = pos / self.subgenre_width;
            triples.push(Triple::new(c, 0, genre_entity(g)));
            triples.push(Triple::new(c, 1, subgenre_entity(g, s)));
            metadata.push(ContentMetadata {
                content_id: c,
                title: format!("Film {c}"),
                year: Some(1980 + (c % 40) as i32),
                genres: vec![
                    GENRE_NAMES[g].to_string(),
                    format!("{}{s}", GENRE_NAMES[g].to_lowercase()),
                ],
                synopsis: None,
            });
        }
        let contents: BTreeSet<usize> = (0..num_contents).collect();
        let graph = KnowledgeGraph::from_triples(triples, num_entities, 2, Some(contents))?;

        let user_cluster: Vec<usize> = (0..self.num_users).map(|u| u % self.clusters).collect();
        let mut order: Vec<usize> = (0..self.num_users).collect();
        order.shuffle(&mut rng);
        let num_cold = (self.cold_fraction * self.num_users as f64).round() as usize;
        let cold_users: BTreeSet<usize> = order[..num_cold].iter().copied().collect();

        let n_pos = self.positives_per_user;
        let n_test = ((self.test_fraction * n_pos as f64).round() as usize).clamp(1, n_pos - 1);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (u, &g) in user_cluster.iter().enumerate() {
            let center = rng.gen_range(0..per);
            let start = center + per - n_pos / 2;
            let mut liked: Vec<usize> = (0..n_pos).map(|j| g * per + (start + j) % per).collect();
            liked.shuffle(&mut rng);
            let (held, kept) = liked.split_at(n_test);
            let kept = if cold_users.contains(&u) {
                &kept[..self.cold_train_positives.min(kept.len())]
            } else {
                kept
            };
            let mut kept = kept.to_vec();
            let mut held = held.to_vec();
            kept.sort_unstable();
            held.sort_unstable();
            train.extend(kept.into_iter().map(|c| Interaction::new(u, c, true)));
            test.extend(held.into_iter().map(|c| Interaction::new(u, c, true)));
        }

        Ok(PlantedDataset {
            graph,
            num_users: self.num_users,
            train: InteractionSet::from_records(train)?,
            test: InteractionSet::from_records(test)?,
            metadata,
            user_cluster,
            cold_users: cold_users.into_iter().collect(),
        })
    }
}

impl PlantedDataset {
    /// Pair sets from the genre template, scored with the built-in
    /// bag-of-words encoder.
    pub fn genre_pairs(&self, n: usize) -> Result<PairSets> {
        let sentences = self
            .metadata
            .iter()
            .map(|m| render_template(m, PairMode::Genre, DomainKind::Movie).map(|s| (m.content_id, s)))
            .collect::<Result<Vec<_>>>()?;
        let provider = EmbeddingDotProvider::from_sentences(&sentences);
        build_pair_sets(&self.graph.contents(), &provider, n, PairMode::Genre)
    }
}

/// A model small enough for finite-difference checks: 3 users, 4 contents,
/// 6 attribute entities, 3 relations.
#[derive(Debug, Clone)]
pub struct MicroFixture {
    pub graph: KnowledgeGraph,
    pub hp: HyperParams,
    pub num_users: usize,
    pub batch: Vec<Interaction>,
    pub pairs: PairSets,
    /// Vectors for contents 0 and 2 when built with external embeddings.
    pub external: Option<ExternalEmbeddingTable>,
}

impl MicroFixture {
    pub fn new(with_external: bool) -> Result<Self> {
        // contents 0..4, attributes 4..10
        let edges = [
            (0, 0, 4),
            (0, 1, 6),
            (0, 2, 8),
            (1, 0, 4),
            (1, 1, 7),
            (2, 0, 5),
            (2, 1, 6),
            (2, 2, 9),
            (3, 0, 5),
            (3, 2, 8),
            (3, 1, 7),
        ];
        let triples = edges.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
        let graph = KnowledgeGraph::from_triples(triples, 10, 3, Some((0..4).collect()))?;
        let hp = HyperParams {
            neighbor_samples: 2,
            layers: 1,
            dim: 4,
            aggregator: Aggregator::Concat,
            gamma: 0.8,
            l2: 1e-4,
            ..HyperParams::default()
        };
        let labelled = [
            (0, 0, true),
            (0, 2, false),
            (1, 1, true),
            (1, 3, false),
            (2, 2, true),
            (2, 3, true),
            (2, 0, false),
        ];
        let batch = labelled.iter().map(|&(u, c, l)| Interaction::new(u, c, l)).collect();
        let mut positives = BTreeMap::new();
        let mut negatives = BTreeMap::new();
        for (a, p, n) in [(0, 2, 1), (1, 3, 0), (2, 0, 3), (3, 1, 2)] {
            positives.insert(a, vec![p]);
            negatives.insert(a, vec![n]);
        }
        let pairs = PairSets {
            mode: PairMode::Genre,
            n: 1,
            positives,
            negatives,
        };
        let external = if with_external {
            let mut t = ExternalEmbeddingTable::new(3)?;
            t.insert(0, vec![0.9, -0.4, 0.3])?;
            t.insert(2, vec![0.2, 0.8, -0.6])?;
            Some(t)
        } else {
            None
        };
        Ok(Self {
            graph,
            hp,
            num_users: 3,
            batch,
            pairs,
            external,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_layout() {
        let d = PlantedSpec::default().generate().unwrap();
        assert_eq!(d.graph.contents().len(), 100);
        assert_eq!(d.graph.num_entities(), 100 + 2 + 20);
        assert_eq!(d.train.len(), 200 * 16);
        assert_eq!(d.test.len(), 200 * 4);
        for u in 0..200 {
            let g = d.user_cluster[u];
            let all: Vec<usize> = d
                .train
                .positives(u)
                .iter()
                .chain(d.test.positives(u))
                .copied()
                .collect();
            assert_eq!(all.len(), 20);
            assert!(all.iter().all(|&c| c / 50 == g));
            // the positives form one contiguous arc of the ring
            let mut pos: Vec<usize> = all.iter().map(|c| c % 50).collect();
            pos.sort_unstable();
            let gaps = (0..20).filter(|&i| (pos[(i + 1) % 20] + 50 - pos[i]) % 50 != 1).count();
            assert_eq!(gaps, 1);
        }
        assert!(d.cold_users.is_empty());
    }

    #[test]
    fn cold_users_keep_two_training_positives() {
        let spec = PlantedSpec {
            cold_fraction: 0.1,
            seed: 4,
            ..PlantedSpec::default()
        };
        let d = spec.generate().unwrap();
        assert_eq!(d.cold_users.len(), 20);
        for u in 0..200 {
            let expected = if d.cold_users.contains(&u) { 2 } else { 16 };
            assert_eq!(d.train.positives(u).len(), expected);
            assert_eq!(d.test.positives(u).len(), 4);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = PlantedSpec::default().generate().unwrap();
        let b = PlantedSpec::default().generate().unwrap();
        let c = PlantedSpec {
            seed: 1,
            ..PlantedSpec::default()
        }
        .generate()
        .unwrap();
        assert_eq!(a.train, b.train);
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn genre_pairs_stay_in_cluster() {
        let d = PlantedSpec::default().generate().unwrap();
        let pairs = d.genre_pairs(5).unwrap();
        pairs.validate(&d.graph.contents()).unwrap();
        for (a, ps) in &pairs.positives {
            assert!(ps.iter().all(|p| p / 50 == a / 50));
            let same_sub = ps.iter().filter(|p| (*p % 50) / 5 == (a % 50) / 5).count();
            assert_eq!(same_sub, 4);
        }
        for (a, ns) in &pairs.negatives {
            assert!(ns.iter().all(|n| n / 50 != a / 50));
        }
    }

    #[test]
    fn micro_fixture_is_consistent() {
        let f = MicroFixture::new(true).unwrap();
        f.pairs.validate(&f.graph.contents()).unwrap();
        assert_eq!(f.graph.num_entities() - f.graph.contents().len(), 6);
        assert!(f
            .batch
            .iter()
            .all(|e| e.user < f.num_users && f.graph.is_content(e.content)));
    }
}
