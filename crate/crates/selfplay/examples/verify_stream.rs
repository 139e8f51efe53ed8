use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn desk_instances(seed: u64, count: usize) -> Vec<pack_core::Instance> {
    let config = selfplay::TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let h = rng.gen_range(config.h_star_min..=config.h_star_max);
            pack_core::generate_sliced_instance(config.w_prime, h, config.n_items, rng.gen()).unwrap()
        })
        .collect()
}

fn rollout_eval(tests: &[pack_core::Instance], c: f64) -> f64 {
    let mut total = 0.0;
    for (i, inst) in tests.iter().enumerate() {
        let inst = Arc::new(inst.clone());
        let mut state = pack_core::PackState::new(inst.clone(), 8, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0xE7A1 ^ (i as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let config = mcts::SearchConfig { c_puct: c, ..mcts::SearchConfig::default() };
        let mut best: Option<(f64, Vec<pack_core::Action>)> = None;
        let mut prefix: Vec<pack_core::Action> = Vec::new();
        while !state.is_terminal() {
            let res = mcts::rollout_search(&state, 64, &config, &mut rng).unwrap();
            if let Some((r, tail)) = &res.best_terminal {
                if best.as_ref().map_or(true, |(br, _)| r > br) {
                    let mut acts = prefix.clone();
                    acts.extend(tail.iter().cloned());
                    best = Some((*r, acts));
                }
            }
            let a = res.best_action(state.width());
            prefix.push(a);
            state.apply(a).unwrap();
        }
        let mut reward = state.terminal_reward();
        if let Some((br, acts)) = best {
            if br > reward {
                let mut s = pack_core::PackState::new(inst, 8, false).unwrap();
                for a in acts { s.apply(a).unwrap(); }
                reward = reward.max(s.terminal_reward());
                let _ = br;
            }
        }
        total += reward;
    }
    total / tests.len() as f64
}

fn main() {
    let t770 = desk_instances(770_770, 100);
    let t660 = desk_instances(660_660, 50);
    for c in [2.5, 3.0, 4.0, 5.0, 7.0, 10.0] {
        println!("c={c}: 770={:.3} 660={:.3}", rollout_eval(&t770, c), rollout_eval(&t660, c));
    }
}
