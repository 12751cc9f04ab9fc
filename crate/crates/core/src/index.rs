//! Uniform grid over axis-aligned bounds, used as the broad phase for every
//! conflict query. Built once per dataset and shared read-only.

use crate::geometry::Aabb;

const MAX_CELLS: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct GridIndex {
    origin_x: f64,
    origin_y: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<u32>>,
    bounds: Vec<Aabb>,
}

impl GridIndex {
    /// Indexes `items`; the id of each item is its position in the slice.
    pub fn new(items: &[Aabb]) -> Self {
        let Some(total) = items.iter().copied().reduce(Aabb::union) else {
            return GridIndex { origin_x: 0.0, origin_y: 0.0, cell: 1.0, cols: 1, rows: 1, cells: vec![Vec::new()], bounds: Vec::new() };
        };
        let mean_extent = items.iter().map(|b| b.width().max(b.height())).sum::<f64>() / items.len() as f64;
        let span = total.width().max(total.height()).max(f64::MIN_POSITIVE);
        let mut cell = if mean_extent > 0.0 { mean_extent * 2.0 } else { span / (items.len() as f64).sqrt().max(1.0) };
        if !(cell > 0.0) {
            cell = 1.0;
        }
        let dims = |cell: f64| {
            (((total.width() / cell).floor() as usize) + 1, ((total.height() / cell).floor() as usize) + 1)
        };
        let (mut cols, mut rows) = dims(cell);
        while cols.saturating_mul(rows) > MAX_CELLS {
            cell *= 2.0;
            (cols, rows) = dims(cell);
        }
        let mut grid = GridIndex {
            origin_x: total.min.x,
            origin_y: total.min.y,
            cell,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
            bounds: items.to_vec(),
        };
        for (id, b) in items.iter().enumerate() {
            let (c0, r0, c1, r1) = grid.span(b);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    grid.cells[r * cols + c].push(id as u32);
                }
            }
        }
        grid
    }

    fn clamp_col(&self, x: f64) -> usize {
        (((x - self.origin_x) / self.cell).floor().max(0.0) as usize).min(self.cols - 1)
    }

    fn clamp_row(&self, y: f64) -> usize {
        (((y - self.origin_y) / self.cell).floor().max(0.0) as usize).min(self.rows - 1)
    }

    fn span(&self, b: &Aabb) -> (usize, usize, usize, usize) {
        (self.clamp_col(b.min.x), self.clamp_row(b.min.y), self.clamp_col(b.max.x), self.clamp_row(b.max.y))
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// Ids whose bounds overlap `query`, ascending and without duplicates.
    pub fn query(&self, query: &Aabb) -> Vec<u32> {
        if self.bounds.is_empty() {
            return Vec::new();
        }
        let (c0, r0, c1, r1) = self.span(query);
        let mut out = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.extend(
                    self.cells[r * self.cols + c]
                        .iter()
                        .copied()
                        .filter(|&id| self.bounds[id as usize].overlaps(query)),
                );
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use proptest::prelude::*;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> Aabb {
        Aabb { min: Point::new(x0, y0), max: Point::new(x1, y1) }
    }

    #[test]
    fn empty_index() {
        let g = GridIndex::new(&[]);
        assert!(g.query(&bb(0.0, 0.0, 1.0, 1.0)).is_empty());
    }

    #[test]
    fn finds_overlaps_only() {
        let g = GridIndex::new(&[bb(0.0, 0.0, 1.0, 1.0), bb(5.0, 5.0, 6.0, 6.0), bb(0.5, 0.5, 5.5, 5.5)]);
        assert_eq!(g.query(&bb(0.9, 0.9, 1.1, 1.1)), vec![0, 2]);
        assert_eq!(g.query(&bb(100.0, 100.0, 101.0, 101.0)), Vec::<u32>::new());
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            items in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.0..10.0f64, 0.0..10.0f64), 1..60),
            q in (-10.0..110.0f64, -10.0..110.0f64, 0.0..30.0f64, 0.0..30.0f64),
        ) {
            let boxes: Vec<Aabb> = items.iter().map(|&(x, y, w, h)| bb(x, y, x + w, y + h)).collect();
            let g = GridIndex::new(&boxes);
            let query = bb(q.0, q.1, q.0 + q.2, q.1 + q.3);
            let want: Vec<u32> = boxes.iter().enumerate()
                .filter(|(_, b)| b.overlaps(&query)).map(|(i, _)| i as u32).collect();
            prop_assert_eq!(g.query(&query), want);
        }
    }
}
