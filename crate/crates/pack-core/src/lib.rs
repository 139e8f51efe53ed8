//! 2D strip-packing environment with non-contiguous row allocation.
//!
//! Items are placed into a fixed-width strip (the virtual bin `W' x H'`,
//! row 0 at the bottom). An action picks an item and an x offset; the rows
//! the item occupies are always the lowest feasible rows scanned bottom-up,
//! and need not be contiguous.

mod error;
mod grid;
mod instance;
mod io;
mod state;

pub use error::PackError;
pub use grid::{OccupancyGrid, Placement};
pub use instance::{generate_sliced_instance, h_star, h_star_f64, Instance, Item};
pub use io::{PackingResult, PlacementRecord};
pub use state::{Action, PackState, StepOutcome};
