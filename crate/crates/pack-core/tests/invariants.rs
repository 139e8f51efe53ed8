//! Property tests for the packing environment.

use pack_core::{generate_sliced_instance, Action, Instance, OccupancyGrid, PackState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Brute-force reference for row allocation: every row whose full span is
/// free, bottom-up, truncated to `h`.
fn brute_force_rows(grid: &OccupancyGrid, x: usize, w: usize, h: usize) -> Option<Vec<usize>> {
    let rows: Vec<usize> = (0..grid.height())
        .filter(|&row| (x..x + w).all(|col| !grid.is_occupied(row, col)))
        .collect();
    if rows.len() >= h {
        Some(rows[..h].to_vec())
    } else {
        None
    }
}

fn random_grid(rng: &mut ChaCha8Rng, width: usize, height: usize) -> OccupancyGrid {
    let mut grid = OccupancyGrid::new(width, height);
    let blocks = rng.gen_range(0..6);
    for item in 0..blocks {
        let w = rng.gen_range(1..=width);
        let x = rng.gen_range(0..=width - w);
        let h = rng.gen_range(1..=2.min(height));
        if let Some(rows) = grid.allocate_rows(x, w, h) {
            grid.place(item, x, w, &rows);
        }
    }
    grid
}

#[test]
fn allocate_rows_matches_brute_force_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let grid = random_grid(&mut rng, 8, 8);
        let w = rng.gen_range(1..=8);
        let x = rng.gen_range(0..=8 - w);
        let h = rng.gen_range(1..=8);
        assert_eq!(grid.allocate_rows(x, w, h), brute_force_rows(&grid, x, w, h));
    }
}

fn play_random_episode(seed: u64) -> (PackState, Vec<Action>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_star = rng.gen_range(3..=8usize);
    let h_star = rng.gen_range(2..=8usize);
    let n = rng.gen_range(1..=6usize).min(w_star * h_star);
    let inst = Arc::new(generate_sliced_instance(w_star, h_star, n, seed).unwrap());
    let mut state = PackState::new(inst, 8, false).unwrap();
    let mut taken = Vec::new();
    loop {
        let legal = state.legal_actions();
        if legal.is_empty() {
            break;
        }
        let action = legal[rng.gen_range(0..legal.len())];
        taken.push(action);
        if state.apply(action).unwrap().done {
            break;
        }
    }
    (state, taken)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn area_conservation_and_no_overlap(seed in 0u64..10_000) {
        let (state, _) = play_random_episode(seed);
        let packed_area: usize = state
            .instance()
            .items
            .iter()
            .filter(|it| state.packed()[it.id])
            .map(|it| it.w * it.h)
            .sum();
        prop_assert_eq!(state.grid().occupied_cells(), packed_area);

        // Placement bookkeeping matches the grid exactly.
        let mut recount = 0usize;
        for (&item, p) in state.grid().placements() {
            let it = &state.instance().items[item];
            prop_assert_eq!(p.rows.len(), it.h);
            prop_assert!(p.rows.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(p.x + it.w <= state.width());
            for &row in &p.rows {
                for col in p.x..p.x + it.w {
                    prop_assert!(state.grid().is_occupied(row, col));
                    recount += 1;
                }
            }
        }
        prop_assert_eq!(recount, packed_area);
    }

    #[test]
    fn replay_determinism(seed in 0u64..10_000) {
        let (state, actions) = play_random_episode(seed);
        let mut replay = PackState::new(state.instance().clone(), 8, false).unwrap();
        for &a in &actions {
            replay.apply(a).unwrap();
        }
        prop_assert_eq!(replay.grid(), state.grid());
        prop_assert_eq!(replay.h_tilde(), state.h_tilde());
    }

    #[test]
    fn terminal_reward_bounds(seed in 0u64..10_000) {
        let (state, _) = play_random_episode(seed);
        if state.all_packed() {
            let r = state.terminal_reward();
            prop_assert!(r > 0.0 && r <= 1.0 + 1e-12);
            let u = state.utilization().unwrap();
            prop_assert!(u > 0.0 && u <= 1.0 + 1e-12);
        } else {
            prop_assert_eq!(state.terminal_reward(), 0.0);
        }
    }
}

#[test]
fn sliced_instances_are_valid() {
    for seed in 0..200 {
        let inst = generate_sliced_instance(15, 7, 10, seed).unwrap();
        inst.validate().unwrap();
        assert_eq!(inst.total_area(), 105);
    }
}

#[test]
fn instance_equality_is_structural() {
    let a = Instance::new(&[(2, 3)], 5, 1).unwrap();
    let b = Instance::new(&[(2, 3)], 5, 1).unwrap();
    assert_eq!(a, b);
}
