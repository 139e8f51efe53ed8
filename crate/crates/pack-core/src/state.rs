use crate::{h_star_f64, Instance, OccupancyGrid, PackError};
use std::sync::Arc;

/// Placing item `item` with its left edge at column `x`. Rows are not part
/// of the action; they are always the lowest feasible rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Action {
    pub item: usize,
    pub x: usize,
}

impl Action {
    /// Flat index into the fixed `N x W'` action space.
    pub fn index(&self, width: usize) -> usize {
        self.item * width + self.x
    }

    pub fn from_index(index: usize, width: usize) -> Action {
        Action {
            item: index / width,
            x: index % width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
}

/// Episode state: the grid, the instance, and which items are already placed.
#[derive(Debug, Clone)]
pub struct PackState {
    grid: OccupancyGrid,
    instance: Arc<Instance>,
    packed: Vec<bool>,
    step: usize,
    adjacency_mask: bool,
}

impl PackState {
    /// Fresh episode over a virtual bin `W* x h_prime`. With the adjacency
    /// mask on, an x offset is legal only against the bin edge or touching
    /// an occupied column.
    pub fn new(
        instance: Arc<Instance>,
        h_prime: usize,
        adjacency_mask: bool,
    ) -> Result<Self, PackError> {
        instance.validate()?;
        if instance.max_height() > h_prime {
            return Err(PackError::InvalidInstance(format!(
                "tallest item ({}) exceeds the virtual height {}",
                instance.max_height(),
                h_prime
            )));
        }
        let n = instance.len();
        Ok(PackState {
            grid: OccupancyGrid::new(instance.w_star, h_prime),
            instance,
            packed: vec![false; n],
            step: 0,
            adjacency_mask,
        })
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn packed(&self) -> &[bool] {
        &self.packed
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn action_space(&self) -> usize {
        self.instance.len() * self.grid.width()
    }

    pub fn h_tilde(&self) -> usize {
        self.grid.h_tilde()
    }

    pub fn all_packed(&self) -> bool {
        self.packed.iter().all(|&p| p)
    }

    fn x_adjacent(&self, x: usize, w: usize) -> bool {
        x == 0
            || x + w == self.grid.width()
            || self.grid.column_occupied(x - 1)
            || self.grid.column_occupied(x + w)
    }

    fn action_legal(&self, item: usize, x: usize) -> bool {
        if item >= self.packed.len() || self.packed[item] {
            return false;
        }
        let it = &self.instance.items[item];
        if x + it.w > self.grid.width() {
            return false;
        }
        if self.adjacency_mask && !self.x_adjacent(x, it.w) {
            return false;
        }
        self.grid.allocate_rows(x, it.w, it.h).is_some()
    }

    /// All legal `(item, x)` pairs. Empty at dead states.
    pub fn legal_actions(&self) -> Vec<Action> {
        let mut actions = Vec::new();
        for item in &self.instance.items {
            if self.packed[item.id] {
                continue;
            }
            for x in 0..=self.grid.width() - item.w {
                if self.action_legal(item.id, x) {
                    actions.push(Action { item: item.id, x });
                }
            }
        }
        actions
    }

    /// Legality mask over the flat `N x W'` action space.
    pub fn legal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.action_space()];
        for action in self.legal_actions() {
            mask[action.index(self.grid.width())] = true;
        }
        mask
    }

    pub fn is_terminal(&self) -> bool {
        self.all_packed() || self.legal_actions().is_empty()
    }

    /// Terminal reward of the current state: `H*/H~` when everything is
    /// packed, 0 otherwise (including dead states).
    pub fn terminal_reward(&self) -> f64 {
        if self.all_packed() {
            h_star_f64(&self.instance) / self.h_tilde() as f64
        } else {
            0.0
        }
    }

    /// Applies an action. Rejects illegal actions without mutating.
    pub fn apply(&mut self, action: Action) -> Result<StepOutcome, PackError> {
        if !self.action_legal(action.item, action.x) {
            return Err(PackError::IllegalAction {
                item: action.item,
                x: action.x,
                reason: "not in the legal action set".into(),
            });
        }
        let it = self.instance.items[action.item];
        let rows = self
            .grid
            .allocate_rows(action.x, it.w, it.h)
            .expect("legality already checked");
        self.grid.place(it.id, action.x, it.w, &rows);
        self.packed[it.id] = true;
        self.step += 1;

        if self.all_packed() {
            Ok(StepOutcome {
                reward: self.terminal_reward(),
                done: true,
            })
        } else if self.legal_actions().is_empty() {
            // Dead state: unpacked items remain but nothing fits.
            Ok(StepOutcome {
                reward: 0.0,
                done: true,
            })
        } else {
            Ok(StepOutcome {
                reward: 0.0,
                done: false,
            })
        }
    }

    /// State tensor of shape `(N+1, H', W')`, plane-major. Plane 0 is the
    /// bin occupancy; plane i+1 shows unpacked item i as a block of ones
    /// anchored at the bottom left, or all zeros once packed.
    pub fn encode(&self) -> Vec<f64> {
        let (h, w) = (self.grid.height(), self.grid.width());
        let plane = h * w;
        let mut tensor = vec![0.0; (self.instance.len() + 1) * plane];
        for row in 0..h {
            for col in 0..w {
                if self.grid.is_occupied(row, col) {
                    tensor[row * w + col] = 1.0;
                }
            }
        }
        for item in &self.instance.items {
            if self.packed[item.id] {
                continue;
            }
            let base = (item.id + 1) * plane;
            for row in 0..item.h {
                for col in 0..item.w {
                    tensor[base + row * w + col] = 1.0;
                }
            }
        }
        tensor
    }

    /// Rightmost occupied column + 1; 0 for an empty grid.
    pub fn w_tilde(&self) -> usize {
        self.grid
            .placements()
            .iter()
            .map(|(&item, p)| p.x + self.instance.items[item].w)
            .max()
            .unwrap_or(0)
    }

    /// Packed-area over the occupied `W~ x H~` envelope; only defined for
    /// completed packings.
    pub fn utilization(&self) -> Result<f64, PackError> {
        if !self.all_packed() {
            return Err(PackError::NotPacked);
        }
        let envelope = (self.w_tilde() * self.h_tilde()) as f64;
        Ok(self.instance.total_area() as f64 / envelope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(shapes: &[(usize, usize)], w_star: usize, h_prime: usize) -> PackState {
        let inst = Arc::new(Instance::new(shapes, w_star, 0).unwrap());
        PackState::new(inst, h_prime, false).unwrap()
    }

    #[test]
    fn legal_actions_enumeration() {
        let s = state(&[(3, 2), (2, 1)], 5, 5);
        let actions = s.legal_actions();
        assert_eq!(actions.len(), 7);
        assert_eq!(
            actions,
            vec![
                Action { item: 0, x: 0 },
                Action { item: 0, x: 1 },
                Action { item: 0, x: 2 },
                Action { item: 1, x: 0 },
                Action { item: 1, x: 1 },
                Action { item: 1, x: 2 },
                Action { item: 1, x: 3 },
            ]
        );
    }

    #[test]
    fn packed_item_has_no_actions() {
        let mut s = state(&[(2, 1), (2, 1)], 4, 4);
        s.apply(Action { item: 0, x: 0 }).unwrap();
        assert!(s.legal_actions().iter().all(|a| a.item == 1));
    }

    #[test]
    fn item_too_tall_for_remaining_rows_is_excluded() {
        let mut s = state(&[(2, 1), (1, 2)], 2, 2);
        s.apply(Action { item: 0, x: 0 }).unwrap();
        // One free row left, item 1 needs two.
        assert!(s.legal_actions().is_empty());
    }

    #[test]
    fn illegal_action_rejected_without_mutation() {
        let mut s = state(&[(3, 2)], 5, 5);
        let before = s.clone();
        assert!(s.apply(Action { item: 0, x: 3 }).is_err());
        assert_eq!(s.grid(), before.grid());
        assert_eq!(s.packed(), before.packed());
    }

    #[test]
    fn perfect_pack_reward_is_one() {
        let mut s = state(&[(4, 2), (4, 1)], 4, 6);
        s.apply(Action { item: 0, x: 0 }).unwrap();
        let out = s.apply(Action { item: 1, x: 0 }).unwrap();
        assert!(out.done);
        assert_eq!(out.reward, 1.0);
        assert_eq!(s.utilization().unwrap(), 1.0);
    }

    #[test]
    fn imperfect_pack_reward_ratio() {
        // h_star = max(8/4, 2) = 2; force H~ = 4 by stacking.
        let mut s = state(&[(2, 2), (2, 2)], 4, 6);
        s.apply(Action { item: 0, x: 0 }).unwrap();
        let out = s.apply(Action { item: 1, x: 0 }).unwrap();
        assert!(out.done);
        assert_eq!(s.h_tilde(), 4);
        assert_eq!(out.reward, 0.5);
        // Occupied envelope is 2 wide by 4 tall, fully covered.
        assert_eq!(s.w_tilde(), 2);
        assert_eq!(s.utilization().unwrap(), 1.0);
    }

    #[test]
    fn mid_episode_reward_is_zero() {
        let mut s = state(&[(2, 2), (2, 2)], 4, 6);
        let out = s.apply(Action { item: 0, x: 0 }).unwrap();
        assert!(!out.done);
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn dead_state_reports_zero_and_no_utilization() {
        let mut s = state(&[(2, 2), (2, 2)], 2, 3);
        let out = s.apply(Action { item: 0, x: 0 }).unwrap();
        assert!(out.done);
        assert_eq!(out.reward, 0.0);
        assert!(!s.all_packed());
        assert!(s.utilization().is_err());
    }

    #[test]
    fn encode_planes() {
        let mut s = state(&[(3, 2), (2, 1)], 5, 4);
        let plane = 5 * 4;
        let t = s.encode();
        assert_eq!(t.len(), 3 * plane);
        assert!(t[..plane].iter().all(|&v| v == 0.0));
        assert_eq!(t[plane..2 * plane].iter().sum::<f64>(), 6.0);
        assert_eq!(t[2 * plane..].iter().sum::<f64>(), 2.0);

        s.apply(Action { item: 0, x: 1 }).unwrap();
        let t = s.encode();
        assert_eq!(t[..plane].iter().sum::<f64>(), 6.0);
        assert!(t[plane..2 * plane].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjacency_mask_restricts_x() {
        let inst = Arc::new(Instance::new(&[(2, 1), (1, 1)], 6, 0).unwrap());
        let mut s = PackState::new(inst, 6, true).unwrap();
        // Empty grid: only the bin edges qualify.
        let xs: Vec<usize> = s
            .legal_actions()
            .iter()
            .filter(|a| a.item == 0)
            .map(|a| a.x)
            .collect();
        assert_eq!(xs, vec![0, 4]);
        s.apply(Action { item: 0, x: 0 }).unwrap();
        let xs: Vec<usize> = s.legal_actions().iter().map(|a| a.x).collect();
        // Edges plus the columns touching the placed item.
        assert_eq!(xs, vec![0, 1, 2, 5]);
    }
}
