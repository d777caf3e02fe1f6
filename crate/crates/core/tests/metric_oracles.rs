mod common {
    pub mod oracles;
}

use common::oracles::*;
use std::collections::HashSet;

#[test]
fn library_matches_brute_force_on_random_instances() {
    let gaps = compare_on_random_instances(1000, 2024);
    assert!(gaps.max() < 1e-9, "{gaps:?}");
}

#[test]
fn oracles_reproduce_hand_examples() {
    let s = [(0.8, true), (0.4, true), (0.6, false), (0.2, false)];
    assert_eq!(auc_oracle(&s), 0.75);
    let s = [(0.9, true), (0.7, false), (0.1, true)];
    assert_eq!(f1_oracle(&s, 0.5), 0.5);
    let rel: HashSet<usize> = [7].into();
    assert!((ndcg_oracle(&[3, 7], &rel, 2) - 1.0 / 3f64.log2()).abs() < 1e-15);
    assert!((inter_oracle(&[vec![0, 1], vec![0, 2]], 2, 3) - 0.5).abs() < 1e-15);
    assert_eq!(intra_oracle(&[vec![0, 1]], &[vec![1.0, 0.0], vec![-1.0, 0.0]], 2), 2.0);
}
