use std::collections::BTreeMap;

/// Where one item ended up: its x offset and the occupied row indices
/// (strictly increasing, not necessarily contiguous).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub x: usize,
    pub rows: Vec<usize>,
}

/// Binary occupancy plane of the virtual bin. Row 0 is the bottom,
/// column 0 the left edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    placements: BTreeMap<usize, Placement>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1);
        OccupancyGrid {
            width,
            height,
            cells: vec![false; width * height],
            placements: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn is_occupied(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn placements(&self) -> &BTreeMap<usize, Placement> {
        &self.placements
    }

    /// 1 + highest occupied row index; 0 for an empty grid.
    pub fn h_tilde(&self) -> usize {
        for row in (0..self.height).rev() {
            let base = row * self.width;
            if self.cells[base..base + self.width].iter().any(|&c| c) {
                return row + 1;
            }
        }
        0
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// True if any cell in the column is occupied.
    pub fn column_occupied(&self, col: usize) -> bool {
        (0..self.height).any(|row| self.is_occupied(row, col))
    }

    #[inline]
    fn span_free(&self, row: usize, x: usize, w: usize) -> bool {
        let base = row * self.width + x;
        self.cells[base..base + w].iter().all(|&c| !c)
    }

    /// The `h` lowest rows whose columns `[x, x+w)` are entirely free,
    /// scanned bottom-up. Pure query; `None` if fewer than `h` such rows
    /// exist below the virtual height cap.
    pub fn allocate_rows(&self, x: usize, w: usize, h: usize) -> Option<Vec<usize>> {
        debug_assert!(x + w <= self.width);
        let mut rows = Vec::with_capacity(h);
        for row in 0..self.height {
            if self.span_free(row, x, w) {
                rows.push(row);
                if rows.len() == h {
                    return Some(rows);
                }
            }
        }
        None
    }

    /// Marks the given rows occupied over `[x, x+w)` and records the placement.
    /// Every target cell must currently be free.
    pub fn place(&mut self, item: usize, x: usize, w: usize, rows: &[usize]) {
        debug_assert!(!self.placements.contains_key(&item));
        for &row in rows {
            debug_assert!(self.span_free(row, x, w));
            let base = row * self.width + x;
            for cell in &mut self.cells[base..base + w] {
                *cell = true;
            }
        }
        self.placements.insert(
            item,
            Placement {
                x,
                rows: rows.to_vec(),
            },
        );
    }
}
