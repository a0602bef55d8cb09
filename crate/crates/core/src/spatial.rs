//! Uniform-grid spatial hash over 2D positions.

use std::collections::HashMap;

use crate::geometry::Vec2;

pub type CellKey = (i64, i64);

/// Buckets point indices by square cells of side `cell_size`, with cell `(0, 0)`
/// covering `[0, s) × [0, s)`.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell_size: f64,
    positions: Vec<Vec2>,
    cells: HashMap<CellKey, Vec<u32>>,
}

impl GridIndex {
    pub fn new(positions: Vec<Vec2>, cell_size: f64) -> Self {
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size must be positive");
        let mut cells: HashMap<CellKey, Vec<u32>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            cells.entry(cell_key(*p, cell_size)).or_default().push(i as u32);
        }
        Self {
            cell_size,
            positions,
            cells,
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn key_of(&self, p: Vec2) -> CellKey {
        cell_key(p, self.cell_size)
    }

    /// Center of cell `key`.
    pub fn cell_center(&self, key: CellKey) -> Vec2 {
        Vec2::new(
            (key.0 as f64 + 0.5) * self.cell_size,
            (key.1 as f64 + 0.5) * self.cell_size,
        )
    }

    /// Occupied cells in ascending key order.
    pub fn occupied_cells(&self) -> Vec<CellKey> {
        let mut keys: Vec<_> = self.cells.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub fn num_occupied_cells(&self) -> usize {
        self.cells.len()
    }

    /// Calls `f(index, distance)` for every point with `‖p − center‖ ≤ radius`.
    /// Visiting order is unspecified.
    pub fn for_each_within(&self, center: Vec2, radius: f64, mut f: impl FnMut(usize, f64)) {
        if self.positions.is_empty() || !(radius >= 0.0) {
            return;
        }
        let lo = cell_key(Vec2::new(center.x - radius, center.y - radius), self.cell_size);
        let hi = cell_key(Vec2::new(center.x + radius, center.y + radius), self.cell_size);
        let span_x = (hi.0 as i128 - lo.0 as i128 + 1) as f64;
        let span_y = (hi.1 as i128 - lo.1 as i128 + 1) as f64;
        let r2 = radius * radius;
        let mut visit = |i: usize| {
            let d2 = (self.positions[i] - center).norm_squared();
            if d2 <= r2 {
                f(i, d2.sqrt());
            }
        };
        if !radius.is_finite() || span_x * span_y > (4 * self.positions.len() + 16) as f64 {
            (0..self.positions.len()).for_each(visit);
            return;
        }
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                if let Some(bucket) = self.cells.get(&(cx, cy)) {
                    for &i in bucket {
                        visit(i as usize);
                    }
                }
            }
        }
    }

    /// Indices within `radius` of `center`, by ascending distance then index.
    pub fn within(&self, center: Vec2, radius: f64) -> Vec<(usize, f64)> {
        let mut hits = Vec::new();
        self.for_each_within(center, radius, |i, d| hits.push((i, d)));
        hits.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        hits
    }

    /// Closest point within `radius`; equal distances resolve to the lower index.
    pub fn nearest_within(&self, center: Vec2, radius: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.for_each_within(center, radius, |i, d| match best {
            Some((bi, bd)) if d > bd || (d == bd && i > bi) => {}
            _ => best = Some((i, d)),
        });
        best
    }
}

fn cell_key(p: Vec2, cell_size: f64) -> CellKey {
    // `as` saturates, so far-away or non-finite inputs still map to some cell.
    (
        (p.x / cell_size).floor() as i64,
        (p.y / cell_size).floor() as i64,
    )
}
