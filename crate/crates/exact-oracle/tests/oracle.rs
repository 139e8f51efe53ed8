//! Cross-checks the memoized solver against plain exhaustive enumeration.

use exact_oracle::solve_exact;
use pack_core::{generate_sliced_instance, h_star, PackState};
use std::sync::Arc;

/// Reference enumeration: every legal (item, x) sequence, no memo, no
/// symmetry reduction. Only usable for very small instances.
fn enumerate_min_height(state: &PackState) -> Option<usize> {
    if state.all_packed() {
        return Some(state.h_tilde());
    }
    let mut best: Option<usize> = None;
    for action in state.legal_actions() {
        let mut child = state.clone();
        child.apply(action).unwrap();
        if let Some(h) = enumerate_min_height(&child) {
            best = Some(best.map_or(h, |b| b.min(h)));
        }
    }
    best
}

#[test]
fn oracle_matches_exhaustive_enumeration() {
    for seed in 0..25 {
        let inst = generate_sliced_instance(4, 4, 3, seed).unwrap();
        let root = PackState::new(Arc::new(inst.clone()), 6, false).unwrap();
        let expected = enumerate_min_height(&root).unwrap();
        let result = solve_exact(&inst, 6, 10_000_000).unwrap();
        assert_eq!(result.min_height, expected, "seed {seed}");
    }
}

#[test]
fn witness_replay_reproduces_min_height() {
    for seed in 0..25 {
        let inst = generate_sliced_instance(5, 4, 4, seed).unwrap();
        let result = solve_exact(&inst, 7, 10_000_000).unwrap();
        let mut state = PackState::new(Arc::new(inst.clone()), 7, false).unwrap();
        let mut last = None;
        for &action in &result.witness {
            last = Some(state.apply(action).unwrap());
        }
        assert!(state.all_packed());
        assert_eq!(state.h_tilde(), result.min_height);
        let hs = h_star(&inst);
        let expected_reward =
            (*hs.numer() as f64 / *hs.denom() as f64) / result.min_height as f64;
        assert!((last.unwrap().reward - expected_reward).abs() < 1e-12);
    }
}

#[test]
fn oracle_respects_lower_bounds() {
    for seed in 100..140 {
        let inst = generate_sliced_instance(6, 5, 5, seed).unwrap();
        let result = solve_exact(&inst, 10, 10_000_000).unwrap();
        let hs = h_star(&inst);
        let ceil_h_star = (*hs.numer() + *hs.denom() - 1) / *hs.denom();
        assert!(result.min_height >= ceil_h_star as usize);
        assert!(result.min_height >= inst.max_height());
        // Sliced instances always admit a perfect pack.
        assert_eq!(result.min_height, ceil_h_star as usize);
    }
}

/// Frozen regression values computed by this oracle (seeds 0..5 of the
/// (4, 4, 3) family at cap 6).
#[test]
fn frozen_min_heights() {
    let expected: Vec<usize> = (0..5)
        .map(|seed| {
            let inst = generate_sliced_instance(4, 4, 3, seed).unwrap();
            solve_exact(&inst, 6, 10_000_000).unwrap().min_height
        })
        .collect();
    assert_eq!(expected, vec![4, 4, 4, 4, 4]);
}
