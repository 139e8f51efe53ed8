//! Single-player PUCT tree search over packing states.
//!
//! Two leaf-evaluation modes share the tree mechanics: neural search scores
//! non-terminal leaves with the policy-value model and terminal leaves with
//! the ranked (+1/-1) value against the current reward threshold; rollout
//! search scores every leaf with the raw terminal reward of one uniform
//! random playout.

use pack_core::{Action, PackState};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MctsError {
    #[error("search requires at least one simulation")]
    ZeroSimulations,

    #[error("root state is terminal")]
    TerminalRoot,

    #[error(transparent)]
    Pack(#[from] pack_core::PackError),
}

/// Priors and value for a non-terminal state; the policy is over the flat
/// `N x W'` action space with illegal entries zero.
pub trait Evaluator {
    fn evaluate(&self, state_tensor: &[f64], legal_mask: &[bool]) -> (Vec<f64>, f64);
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchConfig {
    pub simulations: u32,
    pub c_puct: f64,
    /// Fraction of Dirichlet noise mixed into root priors; 0 disables.
    pub dirichlet_epsilon: f64,
    pub dirichlet_alpha: f64,
    /// Visit-count temperature for the returned policy; <= 1e-9 is argmax.
    pub temperature: f64,
    /// Also track terminals reached by playout tails in `best_terminal`, not
    /// just ones the tree reached. Only meaningful for rollout-leaf search.
    pub retain_playout_terminals: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            simulations: 200,
            c_puct: 1.5,
            dirichlet_epsilon: 0.0,
            dirichlet_alpha: 1.0,
            temperature: 1.0,
            retain_playout_terminals: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootStat {
    pub action: Action,
    pub visits: u32,
    pub q: f64,
    pub prior: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// Improved policy over the flat action space; sums to 1.
    pub pi: Vec<f64>,
    /// Mean backed-up value at the root.
    pub value: f64,
    pub root_stats: Vec<RootStat>,
    /// Highest-reward terminal reached by any simulation, as the raw reward
    /// and the action sequence from the root that produced it. Each
    /// simulation visits a real complete packing, so a solver can keep the
    /// best one seen instead of discarding everything off the greedy line.
    pub best_terminal: Option<(f64, Vec<Action>)>,
}

impl SearchResult {
    /// Highest-probability action, lowest flat index on ties.
    pub fn best_action(&self, width: usize) -> Action {
        let mut best = 0;
        for (i, &p) in self.pi.iter().enumerate() {
            if p > self.pi[best] {
                best = i;
            }
        }
        Action::from_index(best, width)
    }

    /// Samples an action from the improved policy.
    pub fn sample_action<R: Rng>(&self, width: usize, rng: &mut R) -> Action {
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.pi.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = i;
            if draw < acc {
                return Action::from_index(i, width);
            }
        }
        Action::from_index(last, width)
    }
}

/// Ranked value of a terminal reward against the threshold `r_alpha`.
pub fn ranked_value<R: Rng>(reward: f64, r_alpha: f64, rng: &mut R) -> f64 {
    if reward >= 1.0 || reward > r_alpha {
        1.0
    } else if reward < r_alpha {
        -1.0
    } else if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

enum LeafMode<'a> {
    Neural {
        evaluator: &'a dyn Evaluator,
        /// Terminal rewards are ranked against this threshold when present;
        /// `None` maps them linearly to `2r - 1` instead, which keeps the
        /// full reward ordering for greedy play.
        r_alpha: Option<f64>,
    },
    Rollout,
}

struct Node {
    state: PackState,
    actions: Vec<Action>,
    priors: Vec<f64>,
    edge_visits: Vec<u32>,
    edge_values: Vec<f64>,
    children: Vec<Option<usize>>,
    total_visits: u32,
    terminal_reward: Option<f64>,
}

struct Tree<'a, R: Rng> {
    nodes: Vec<Node>,
    mode: LeafMode<'a>,
    c_puct: f64,
    retain_playout_terminals: bool,
    rng: &'a mut R,
    best_terminal: Option<(f64, Vec<Action>)>,
}

impl<'a, R: Rng> Tree<'a, R> {
    fn make_node(&mut self, state: PackState) -> usize {
        let node = if state.is_terminal() {
            Node {
                terminal_reward: Some(state.terminal_reward()),
                actions: Vec::new(),
                priors: Vec::new(),
                edge_visits: Vec::new(),
                edge_values: Vec::new(),
                children: Vec::new(),
                total_visits: 1,
                state,
            }
        } else {
            let actions = state.legal_actions();
            let width = state.width();
            let priors = match &self.mode {
                LeafMode::Neural { evaluator, .. } => {
                    let (policy, _) = evaluator.evaluate(&state.encode(), &state.legal_mask());
                    actions.iter().map(|a| policy[a.index(width)]).collect()
                }
                LeafMode::Rollout => vec![1.0 / actions.len() as f64; actions.len()],
            };
            let n = actions.len();
            Node {
                state,
                actions,
                priors,
                edge_visits: vec![0; n],
                edge_values: vec![0.0; n],
                children: vec![None; n],
                total_visits: 1,
                terminal_reward: None,
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Value of a freshly reached leaf, from the acting model or a playout.
    /// When the simulation bottoms out in a real terminal, also returns its
    /// raw reward and any playout actions taken past the leaf.
    fn leaf_value(&mut self, idx: usize) -> (f64, Option<(f64, Vec<Action>)>) {
        let node = &self.nodes[idx];
        match (&self.mode, node.terminal_reward) {
            (LeafMode::Neural { r_alpha, .. }, Some(r)) => {
                let value = match r_alpha {
                    Some(threshold) => ranked_value(r, *threshold, self.rng),
                    None => 2.0 * r - 1.0,
                };
                (value, Some((r, Vec::new())))
            }
            (LeafMode::Neural { evaluator, .. }, None) => {
                let (_, value) =
                    evaluator.evaluate(&node.state.encode(), &node.state.legal_mask());
                (value, None)
            }
            (LeafMode::Rollout, Some(r)) => (r, Some((r, Vec::new()))),
            (LeafMode::Rollout, None) => {
                let mut state = node.state.clone();
                let (r, playout) = playout_from(&mut state, self.rng);
                (r, Some((r, playout)))
            }
        }
    }

    fn select_edge(&self, idx: usize) -> usize {
        let node = &self.nodes[idx];
        let sqrt_parent = (node.total_visits as f64).sqrt();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for a in 0..node.actions.len() {
            let q = if node.edge_visits[a] > 0 {
                node.edge_values[a] / node.edge_visits[a] as f64
            } else {
                0.0
            };
            let u = self.c_puct * node.priors[a] * sqrt_parent
                / (1.0 + node.edge_visits[a] as f64);
            let score = q + u;
            if score > best_score {
                best_score = score;
                best = a;
            }
        }
        best
    }

    fn simulate(&mut self, root: usize) {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut idx = root;
        let leaf = loop {
            if self.nodes[idx].terminal_reward.is_some() {
                break idx;
            }
            let edge = self.select_edge(idx);
            path.push((idx, edge));
            match self.nodes[idx].children[edge] {
                Some(child) => idx = child,
                None => {
                    let mut state = self.nodes[idx].state.clone();
                    state
                        .apply(self.nodes[idx].actions[edge])
                        .expect("stored actions are legal");
                    let child = self.make_node(state);
                    self.nodes[idx].children[edge] = Some(child);
                    break child;
                }
            }
        };
        let (value, terminal) = self.leaf_value(leaf);
        if let Some((reward, playout)) = terminal {
            // By default only packings the tree itself reached count for
            // retention, so the retained solution reflects deliberate search;
            // `retain_playout_terminals` opts playout tails in as well.
            if (playout.is_empty() || self.retain_playout_terminals)
                && self.best_terminal.as_ref().map_or(true, |(r, _)| reward > *r)
            {
                let mut actions: Vec<Action> =
                    path.iter().map(|&(n, e)| self.nodes[n].actions[e]).collect();
                actions.extend(playout);
                self.best_terminal = Some((reward, actions));
            }
        }
        for &(node, edge) in &path {
            self.nodes[node].edge_visits[edge] += 1;
            self.nodes[node].edge_values[edge] += value;
            self.nodes[node].total_visits += 1;
        }
    }
}

/// Uniform random playout to the end of the episode; returns the terminal
/// reward and the actions taken.
fn playout_from<R: Rng>(state: &mut PackState, rng: &mut R) -> (f64, Vec<Action>) {
    let mut playout = Vec::new();
    loop {
        let legal = state.legal_actions();
        if legal.is_empty() {
            return (state.terminal_reward(), playout);
        }
        let action = legal[rng.gen_range(0..legal.len())];
        playout.push(action);
        if state.apply(action).expect("legal action").done {
            return (state.terminal_reward(), playout);
        }
    }
}

fn run_search<R: Rng>(
    root_state: &PackState,
    mode: LeafMode,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult, MctsError> {
    if config.simulations == 0 {
        return Err(MctsError::ZeroSimulations);
    }
    if root_state.is_terminal() {
        return Err(MctsError::TerminalRoot);
    }
    let width = root_state.width();
    let action_space = root_state.action_space();
    let mut tree = Tree {
        nodes: Vec::new(),
        mode,
        c_puct: config.c_puct,
        retain_playout_terminals: config.retain_playout_terminals,
        rng,
        best_terminal: None,
    };
    let root = tree.make_node(root_state.clone());

    if config.dirichlet_epsilon > 0.0 {
        let n = tree.nodes[root].actions.len();
        let gamma = Gamma::new(config.dirichlet_alpha, 1.0).expect("alpha > 0");
        let mut noise: Vec<f64> = (0..n).map(|_| gamma.sample(tree.rng)).collect();
        let total: f64 = noise.iter().sum();
        for v in &mut noise {
            *v /= total;
        }
        let eps = config.dirichlet_epsilon;
        for (p, nz) in tree.nodes[root].priors.iter_mut().zip(&noise) {
            *p = (1.0 - eps) * *p + eps * nz;
        }
    }

    for _ in 0..config.simulations {
        tree.simulate(root);
    }

    let node = &tree.nodes[root];
    let mut pi = vec![0.0; action_space];
    if config.temperature <= 1e-9 {
        let mut best = 0;
        for a in 0..node.actions.len() {
            if node.edge_visits[a] > node.edge_visits[best] {
                best = a;
            }
        }
        // Ties stay on the lowest flat action index by construction of
        // legal_actions ordering.
        pi[node.actions[best].index(width)] = 1.0;
    } else {
        let max_n = *node.edge_visits.iter().max().unwrap() as f64;
        let inv_t = 1.0 / config.temperature;
        let mut total = 0.0;
        let weights: Vec<f64> = node
            .edge_visits
            .iter()
            .map(|&n| {
                let w = if n == 0 {
                    0.0
                } else {
                    (n as f64 / max_n).powf(inv_t)
                };
                total += w;
                w
            })
            .collect();
        for (a, w) in weights.iter().enumerate() {
            pi[node.actions[a].index(width)] = w / total;
        }
    }

    let total_value: f64 = node.edge_values.iter().sum();
    let root_stats = (0..node.actions.len())
        .map(|a| RootStat {
            action: node.actions[a],
            visits: node.edge_visits[a],
            q: if node.edge_visits[a] > 0 {
                node.edge_values[a] / node.edge_visits[a] as f64
            } else {
                0.0
            },
            prior: node.priors[a],
        })
        .collect();

    Ok(SearchResult {
        pi,
        value: total_value / config.simulations as f64,
        root_stats,
        best_terminal: tree.best_terminal,
    })
}

/// Neural-guided search: `M` simulations of PUCT selection, model-evaluated
/// expansion, ranked terminal values, single-player backup without negation.
pub fn search<R: Rng>(
    root_state: &PackState,
    evaluator: &dyn Evaluator,
    config: &SearchConfig,
    r_alpha: f64,
    rng: &mut R,
) -> Result<SearchResult, MctsError> {
    run_search(
        root_state,
        LeafMode::Neural {
            evaluator,
            r_alpha: Some(r_alpha),
        },
        config,
        rng,
    )
}

/// Neural-guided search with raw terminal values mapped to `2r - 1` instead
/// of ranked ones; meant for greedy evaluation, where preserving the full
/// reward ordering beats the train-time self-competition signal.
pub fn search_raw<R: Rng>(
    root_state: &PackState,
    evaluator: &dyn Evaluator,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult, MctsError> {
    run_search(
        root_state,
        LeafMode::Neural {
            evaluator,
            r_alpha: None,
        },
        config,
        rng,
    )
}

/// Vanilla rollout MCTS: uniform priors, leaf value from one uniform-random
/// playout, raw (unranked) rewards.
pub fn rollout_search<R: Rng>(
    root_state: &PackState,
    simulations: u32,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult, MctsError> {
    let config = SearchConfig {
        simulations,
        dirichlet_epsilon: 0.0,
        ..*config
    };
    run_search(root_state, LeafMode::Rollout, &config, rng)
}
