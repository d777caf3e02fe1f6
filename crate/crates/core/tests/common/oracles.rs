//! Brute-force reference implementations of the evaluation metrics and a
//! driver comparing them with the library on random instances.

use std::collections::HashSet;

use kgcl_core::eval::{
    auc, f1, inter_list_diversity, intra_list_diversity, ndcg_at_k, recall_at_k, RankedRecommendations,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn auc_oracle(scores: &[(f64, bool)]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for &(sp, lp) in scores {
        for &(sn, ln) in scores {
            if lp && !ln {
                total += 1.0;
                if sp > sn {
                    wins += 1.0;
                } else if sp == sn {
                    wins += 0.5;
                }
            }
        }
    }
    wins / total
}

pub fn f1_oracle(scores: &[(f64, bool)], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for &(s, l) in scores {
        match (s >= threshold, l) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fneg += 1.0,
            _ => {}
        }
    }
    if tp + fp == 0.0 || tp == 0.0 {
        return 0.0;
    }
    let p = tp / (tp + fp);
    let r = tp / (tp + fneg);
    2.0 * p * r / (p + r)
}

pub fn recall_oracle(list: &[usize], relevant: &HashSet<usize>, k: usize) -> f64 {
    let mut hits = 0;
    for (rank, c) in list.iter().enumerate() {
        if rank < k && relevant.contains(c) {
            hits += 1;
        }
    }
    hits as f64 / relevant.len() as f64
}

pub fn ndcg_oracle(list: &[usize], relevant: &HashSet<usize>, k: usize) -> f64 {
    let gains: Vec<f64> = list
        .iter()
        .take(k)
        .map(|c| if relevant.contains(c) { 1.0 } else { 0.0 })
        .collect();
    let dcg: f64 = gains.iter().enumerate().map(|(i, g)| g / (i as f64 + 2.0).log2()).sum();
    let mut ideal = vec![0.0; k];
    for slot in ideal.iter_mut().take(relevant.len()) {
        *slot = 1.0;
    }
    let idcg: f64 = ideal.iter().enumerate().map(|(i, g)| g / (i as f64 + 2.0).log2()).sum();
    dcg / idcg
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

pub fn inter_oracle(lists: &[Vec<usize>], k: usize, universe: usize) -> f64 {
    let indicators: Vec<Vec<f64>> = lists
        .iter()
        .map(|l| {
            let mut v = vec![0.0; universe];
            for &c in l.iter().take(k) {
                v[c] = 1.0;
            }
            v
        })
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0.0;
    for i in 0..indicators.len() {
        for j in 0..indicators.len() {
            if i < j {
                sum += 1.0 - cosine(&indicators[i], &indicators[j]);
                pairs += 1.0;
            }
        }
    }
    sum / pairs
}

pub fn intra_oracle(lists: &[Vec<usize>], vectors: &[Vec<f64>], k: usize) -> f64 {
    let mut per_user = Vec::new();
    for l in lists {
        let top = &l[..k.min(l.len())];
        let mut s = 0.0;
        let mut n = 0.0;
        for p in 0..top.len() {
            for q in 0..top.len() {
                if p < q {
                    s += 1.0 - cosine(&vectors[top[p]], &vectors[top[q]]);
                    n += 1.0;
                }
            }
        }
        per_user.push(s / n);
    }
    per_user.iter().sum::<f64>() / per_user.len() as f64
}

/// Largest absolute library-vs-oracle gap per metric.
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleGaps {
    pub auc: f64,
    pub f1: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub inter: f64,
    pub intra: f64,
}

impl OracleGaps {
    pub fn max(&self) -> f64 {
        [self.auc, self.f1, self.recall, self.ndcg, self.inter, self.intra]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn gap(slot: &mut f64, a: f64, b: f64) {
    let d = if a.is_finite() && b.is_finite() {
        (a - b).abs()
    } else {
        f64::INFINITY
    };
    *slot = slot.max(d);
}

/// Random instances with at most 10 users, 20 items and K <= 5.
pub fn compare_on_random_instances(instances: usize, seed: u64) -> OracleGaps {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaps = OracleGaps::default();
    for _ in 0..instances {
        let items = rng.gen_range(6..=20);
        let users = rng.gen_range(2..=10);
        let k = rng.gen_range(2..=5);
        // coarse scores so ties occur
        let n = rng.gen_range(2..=40);
        let mut scored: Vec<(f64, bool)> = (0..n)
            .map(|_| ((rng.gen_range(0..10) as f64) / 10.0, rng.gen_bool(0.5)))
            .collect();
        scored[0].1 = true;
        scored[1].1 = false;
        gap(&mut gaps.auc, auc(&scored).unwrap(), auc_oracle(&scored));
        gap(&mut gaps.f1, f1(&scored, 0.5).unwrap(), f1_oracle(&scored, 0.5));

        let dim = rng.gen_range(2..=6);
        let vectors: Vec<Vec<f64>> = (0..items)
            .map(|_| {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                v[0] += 1e-3;
                v
            })
            .collect();
        let mut lists = Vec::new();
        let mut recs = Vec::new();
        for u in 0..users {
            let mut order: Vec<usize> = (0..items).collect();
            order.shuffle(&mut rng);
            let len = rng.gen_range(k..=items);
            order.truncate(len);
            let scores: Vec<f64> = (0..len).map(|i| 1.0 - i as f64 / len as f64).collect();
            let r = RankedRecommendations::new(u, order.clone(), scores);
            let relevant: HashSet<usize> = (0..items).filter(|_| rng.gen_bool(0.3)).collect();
            if !relevant.is_empty() {
                gap(
                    &mut gaps.recall,
                    recall_at_k(&r, &relevant, k),
                    recall_oracle(&order, &relevant, k),
                );
                gap(
                    &mut gaps.ndcg,
                    ndcg_at_k(&r, &relevant, k),
                    ndcg_oracle(&order, &relevant, k),
                );
            }
            lists.push(order);
            recs.push(r);
        }
        gap(
            &mut gaps.inter,
            inter_list_diversity(&recs, k).unwrap(),
            inter_oracle(&lists, k, items),
        );
        gap(
            &mut gaps.intra,
            intra_list_diversity(&recs, &vectors, k).unwrap(),
            intra_oracle(&lists, &vectors, k),
        );

        // unequal list lengths exercise the quadratic inter-list path
        let mut short = recs.clone();
        let mut short_lists = lists.clone();
        short[0] = RankedRecommendations::new(0, lists[0][..k - 1].to_vec(), vec![1.0; k - 1]);
        short_lists[0].truncate(k - 1);
        gap(
            &mut gaps.inter,
            inter_list_diversity(&short, k).unwrap(),
            inter_oracle(&short_lists, k, items),
        );
    }
    gaps
}
