use exact_oracle::solve_exact;
use heuristics::{hvraa_solve, lego_solve, random_solve};
use pack_core::generate_sliced_instance;

#[test]
fn oracle_dominates_heuristics() {
    for seed in 0..30 {
        let inst = generate_sliced_instance(5, 4, 4, seed).unwrap();
        let oracle = solve_exact(&inst, 10, 10_000_000).unwrap();
        for (state, _) in [
            hvraa_solve(&inst, 10).unwrap(),
            lego_solve(&inst, 10).unwrap(),
            random_solve(&inst, 10, seed).unwrap(),
        ] {
            if state.all_packed() {
                assert!(state.h_tilde() >= oracle.min_height, "seed {seed}");
            }
        }
    }
}
