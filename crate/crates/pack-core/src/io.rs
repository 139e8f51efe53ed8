//! JSON schemas for instance files and packing results.

use crate::{Instance, PackError, PackState};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct ItemShape {
    w: usize,
    h: usize,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    w_star: usize,
    items: Vec<ItemShape>,
    seed: u64,
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        InstanceFile {
            w_star: self.w_star,
            items: self
                .items
                .iter()
                .map(|it| ItemShape { w: it.w, h: it.h })
                .collect(),
            seed: self.seed,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = InstanceFile::deserialize(deserializer)?;
        let shapes: Vec<(usize, usize)> =
            file.items.iter().map(|it| (it.w, it.h)).collect();
        Instance::new(&shapes, file.w_star, file.seed).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlacementRecord {
    pub item: usize,
    pub x: usize,
    pub rows: Vec<usize>,
}

/// Final packing outcome. `utilization` is null for dead episodes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PackingResult {
    pub placements: Vec<PlacementRecord>,
    pub h_tilde: usize,
    pub reward: f64,
    pub utilization: Option<f64>,
    pub status: String,
}

impl PackingResult {
    pub fn from_state(state: &PackState) -> Result<Self, PackError> {
        if !state.is_terminal() {
            return Err(PackError::NotPacked);
        }
        let placements = state
            .grid()
            .placements()
            .iter()
            .map(|(&item, p)| PlacementRecord {
                item,
                x: p.x,
                rows: p.rows.clone(),
            })
            .collect();
        let packed = state.all_packed();
        Ok(PackingResult {
            placements,
            h_tilde: state.h_tilde(),
            reward: state.terminal_reward(),
            utilization: if packed {
                Some(state.utilization()?)
            } else {
                None
            },
            status: if packed { "packed" } else { "dead" }.to_string(),
        })
    }
}
