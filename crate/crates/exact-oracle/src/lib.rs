//! Exhaustive minimal-height solver for small packing instances.
//!
//! Depth-first search over legal (item, x) sequences with memoization on the
//! raw grid bits plus the packed set, pruned against the fixed height cap.
//! Intended as a desk-scale ground truth, not a scalable solver.

use pack_core::{Action, Instance, PackState};
use serde::Serialize;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no complete packing fits under the height cap {h_cap}")]
    Infeasible { h_cap: usize },

    #[error("node budget exceeded ({limit} nodes)")]
    BudgetExceeded { limit: u64 },

    #[error(transparent)]
    Pack(#[from] pack_core::PackError),
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub min_height: usize,
    pub witness: Vec<Action>,
    pub nodes_expanded: u64,
}

#[derive(Hash, PartialEq, Eq)]
struct StateKey {
    grid: Vec<u64>,
    packed: u64,
}

fn key_of(state: &PackState) -> StateKey {
    let grid = state.grid();
    let (h, w) = (grid.height(), grid.width());
    let mut bits = vec![0u64; (h * w + 63) / 64];
    for row in 0..h {
        for col in 0..w {
            if grid.is_occupied(row, col) {
                let idx = row * w + col;
                bits[idx / 64] |= 1 << (idx % 64);
            }
        }
    }
    let mut packed = 0u64;
    for (i, &p) in state.packed().iter().enumerate() {
        if p {
            packed |= 1 << i;
        }
    }
    StateKey { grid: bits, packed }
}

struct Search {
    h_cap: usize,
    area_bound: usize,
    node_limit: u64,
    nodes: u64,
    // Exact min completion height under the cap, or None if infeasible,
    // together with the action achieving it.
    memo: HashMap<StateKey, Option<(usize, Action)>>,
}

impl Search {
    fn lower_bound(&self, state: &PackState) -> usize {
        let max_unpacked = state
            .instance()
            .items
            .iter()
            .filter(|it| !state.packed()[it.id])
            .map(|it| it.h)
            .max()
            .unwrap_or(0);
        self.area_bound.max(max_unpacked).max(state.h_tilde())
    }

    /// Among unpacked items, identical shapes are interchangeable; branch
    /// only on the lowest id of each (w, h) class.
    fn branch_items(&self, state: &PackState) -> Vec<usize> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for it in &state.instance().items {
            if state.packed()[it.id] {
                continue;
            }
            if !seen.contains(&(it.w, it.h)) {
                seen.push((it.w, it.h));
                out.push(it.id);
            }
        }
        out
    }

    fn solve(&mut self, state: &PackState) -> Result<Option<(usize, Option<Action>)>, OracleError> {
        if state.all_packed() {
            return Ok(Some((state.h_tilde(), None)));
        }
        if self.lower_bound(state) > self.h_cap {
            return Ok(None);
        }
        let key = key_of(state);
        if let Some(&entry) = self.memo.get(&key) {
            return Ok(entry.map(|(h, a)| (h, Some(a))));
        }
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(OracleError::BudgetExceeded {
                limit: self.node_limit,
            });
        }

        let mut best: Option<(usize, Action)> = None;
        for item in self.branch_items(state) {
            let w = state.instance().items[item].w;
            for x in 0..=state.width() - w {
                let action = Action { item, x };
                let mut child = state.clone();
                if child.apply(action).is_err() {
                    continue;
                }
                if let Some((height, _)) = self.solve(&child)? {
                    if best.map_or(true, |(b, _)| height < b) {
                        best = Some((height, action));
                    }
                }
            }
        }
        self.memo.insert(key, best);
        Ok(best.map(|(h, a)| (h, Some(a))))
    }
}

/// Exact minimal final height over all legal placement sequences (adjacency
/// mask off), at most `h_cap` rows tall.
pub fn solve_exact(
    instance: &Instance,
    h_cap: usize,
    node_limit: u64,
) -> Result<OracleResult, OracleError> {
    let root = PackState::new(Arc::new(instance.clone()), h_cap, false)
        .map_err(|_| OracleError::Infeasible { h_cap })?;
    let mut search = Search {
        h_cap,
        area_bound: (instance.total_area() + instance.w_star - 1) / instance.w_star,
        node_limit,
        nodes: 0,
        memo: HashMap::new(),
    };
    let solved = search.solve(&root)?;
    let Some((min_height, _)) = solved else {
        return Err(OracleError::Infeasible { h_cap });
    };

    // Rebuild the witness by replaying best actions through the memo.
    let mut witness = Vec::new();
    let mut state = root;
    while !state.all_packed() {
        let entry = search
            .memo
            .get(&key_of(&state))
            .copied()
            .flatten()
            .expect("memo holds every state on the optimal path");
        witness.push(entry.1);
        state.apply(entry.1)?;
    }
    debug_assert_eq!(state.h_tilde(), min_height);

    Ok(OracleResult {
        min_height,
        witness,
        nodes_expanded: search.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_item() {
        let inst = Instance::new(&[(3, 5)], 15, 0).unwrap();
        let res = solve_exact(&inst, 8, 1_000_000).unwrap();
        assert_eq!(res.min_height, 5);
        assert_eq!(res.witness.len(), 1);
    }

    #[test]
    fn two_unit_items_side_by_side() {
        let inst = Instance::new(&[(1, 1), (1, 1)], 2, 0).unwrap();
        let res = solve_exact(&inst, 8, 1_000_000).unwrap();
        assert_eq!(res.min_height, 1);
    }

    #[test]
    fn infeasible_under_cap() {
        let inst = Instance::new(&[(2, 2), (2, 2)], 2, 0).unwrap();
        assert!(matches!(
            solve_exact(&inst, 3, 1_000_000),
            Err(OracleError::Infeasible { .. })
        ));
    }

    #[test]
    fn budget_exceeded_reported() {
        let inst = pack_core::generate_sliced_instance(8, 8, 6, 5).unwrap();
        assert!(matches!(
            solve_exact(&inst, 8, 3),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }
}
