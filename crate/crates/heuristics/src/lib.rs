//! Deterministic baseline solvers: a tallest-first height-minimizing rule
//! (HVRAA-style), a width-matching stacking rule (Lego-style), and a
//! uniform-random floor. All run with the adjacency mask off.

use pack_core::{Action, Instance, PackState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// One solver step: the action taken and the partial height after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub action: Action,
    pub h_tilde: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeuristicTrace {
    pub steps: Vec<TraceStep>,
}

fn resulting_height(state: &PackState, item: usize, x: usize) -> Option<usize> {
    let it = &state.instance().items[item];
    let rows = state.grid().allocate_rows(x, it.w, it.h)?;
    Some(state.h_tilde().max(rows[rows.len() - 1] + 1))
}

/// The legal x minimizing the resulting height for `item`, leftmost on ties.
fn best_x_for(state: &PackState, item: usize) -> Option<(usize, usize)> {
    let w = state.instance().items[item].w;
    let mut best: Option<(usize, usize)> = None;
    for x in 0..=state.width() - w {
        if let Some(height) = resulting_height(state, item, x) {
            if best.map_or(true, |(_, bh)| height < bh) {
                best = Some((x, height));
            }
        }
    }
    best
}

fn run_order(
    state: &mut PackState,
    order: &[usize],
    pick_x: impl Fn(&PackState, usize) -> Option<usize>,
) -> HeuristicTrace {
    let mut trace = HeuristicTrace::default();
    for &item in order {
        let Some(x) = pick_x(state, item) else {
            break; // dead under the virtual height cap
        };
        let action = Action { item, x };
        if state.apply(action).is_err() {
            break;
        }
        trace.steps.push(TraceStep {
            action,
            h_tilde: state.h_tilde(),
        });
    }
    trace
}

/// Tallest-first placement, each item at the x that minimizes the resulting
/// height. Sort key: h desc, then w desc, then id asc.
pub fn hvraa_solve(
    instance: &Instance,
    h_prime: usize,
) -> Result<(PackState, HeuristicTrace), pack_core::PackError> {
    let mut state = PackState::new(Arc::new(instance.clone()), h_prime, false)?;
    let mut order: Vec<usize> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&instance.items[a], &instance.items[b]);
        ib.h.cmp(&ia.h).then(ib.w.cmp(&ia.w)).then(a.cmp(&b))
    });
    let trace = run_order(&mut state, &order, |s, item| {
        best_x_for(s, item).map(|(x, _)| x)
    });
    Ok((state, trace))
}

/// Widest-first placement that prefers stacking on a previously placed item
/// of equal width (lowest stack top wins), falling back to the
/// height-minimizing rule.
pub fn lego_solve(
    instance: &Instance,
    h_prime: usize,
) -> Result<(PackState, HeuristicTrace), pack_core::PackError> {
    let mut state = PackState::new(Arc::new(instance.clone()), h_prime, false)?;
    let mut order: Vec<usize> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&instance.items[a], &instance.items[b]);
        ib.w.cmp(&ia.w).then(ib.h.cmp(&ia.h)).then(a.cmp(&b))
    });
    let trace = run_order(&mut state, &order, |s, item| {
        let w = s.instance().items[item].w;
        // Candidate stacks: placed items of the same width, lowest top first.
        let mut stacks: Vec<(usize, usize)> = s
            .grid()
            .placements()
            .iter()
            .filter(|(&placed, _)| s.instance().items[placed].w == w)
            .map(|(_, p)| (p.rows[p.rows.len() - 1] + 1, p.x))
            .collect();
        stacks.sort();
        for (_, x) in stacks {
            if resulting_height(s, item, x).is_some() {
                return Some(x);
            }
        }
        best_x_for(s, item).map(|(x, _)| x)
    });
    Ok((state, trace))
}

/// Uniform-random legal action each step.
pub fn random_solve(
    instance: &Instance,
    h_prime: usize,
    seed: u64,
) -> Result<(PackState, HeuristicTrace), pack_core::PackError> {
    let mut state = PackState::new(Arc::new(instance.clone()), h_prime, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = HeuristicTrace::default();
    loop {
        let legal = state.legal_actions();
        if legal.is_empty() {
            break;
        }
        let action = legal[rng.gen_range(0..legal.len())];
        let out = state.apply(action)?;
        trace.steps.push(TraceStep {
            action,
            h_tilde: state.h_tilde(),
        });
        if out.done {
            break;
        }
    }
    Ok((state, trace))
}
