//! Uniform-grid index over unit layout space for nearest-dot lookups.

use crate::layout::LayoutPoint;
use crate::scalar::Scalar;

/// Mean number of points per cell the grid is sized for.
pub const TARGET_OCCUPANCY: usize = 8;

#[derive(Debug, Clone)]
pub struct SpatialIndex<T> {
    side: usize,
    /// `cell_start[c]..cell_start[c + 1]` indexes `entries` for cell `c`.
    cell_start: Vec<u32>,
    entries: Vec<LayoutPoint<T>>,
}

impl<T: Scalar> SpatialIndex<T> {
    pub fn build(points: &[LayoutPoint<T>]) -> Self {
        let side = ((points.len() as f64 / TARGET_OCCUPANCY as f64).sqrt().ceil() as usize).max(1);
        let mut index = SpatialIndex {
            side,
            cell_start: vec![0; side * side + 1],
            entries: Vec::with_capacity(points.len()),
        };
        let cells: Vec<usize> = points.iter().map(|p| index.cell(p.x, p.y)).collect();
        for &c in &cells {
            index.cell_start[c + 1] += 1;
        }
        for c in 0..side * side {
            index.cell_start[c + 1] += index.cell_start[c];
        }
        let mut fill = index.cell_start.clone();
        index.entries.resize(
            points.len(),
            LayoutPoint {
                x: T::zero(),
                y: T::zero(),
                event: 0,
            },
        );
        for (p, &c) in points.iter().zip(&cells) {
            index.entries[fill[c] as usize] = *p;
            fill[c] += 1;
        }
        index
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cells_per_side(&self) -> usize {
        self.side
    }

    fn axis_cell(&self, v: T) -> usize {
        let v = if v.is_nan() {
            T::zero()
        } else {
            v.max(T::zero()).min(T::one())
        };
        ((v * T::from_usize(self.side)).floor().to_f64() as usize).min(self.side - 1)
    }

    fn cell(&self, x: T, y: T) -> usize {
        self.axis_cell(y) * self.side + self.axis_cell(x)
    }

    fn cell_points(&self, cx: usize, cy: usize) -> &[LayoutPoint<T>] {
        let c = cy * self.side + cx;
        &self.entries[self.cell_start[c] as usize..self.cell_start[c + 1] as usize]
    }

    /// Event of the closest point within `radius`, lowest event ordinal on ties.
    pub fn nearest(&self, x: T, y: T, radius: T) -> Option<u32> {
        if self.entries.is_empty() || radius.is_nan() || radius <= T::zero() {
            return None;
        }
        let r2 = radius * radius;
        let side = self.side as isize;
        let (cx, cy) = (self.axis_cell(x) as isize, self.axis_cell(y) as isize);
        let cell_size = T::one() / T::from_usize(self.side);
        let mut best: Option<(T, u32)> = None;

        for k in 0..=side {
            // A point can sit one cell off its exact position after rounding, so
            // ring k is only guaranteed to be (k - 2) cells away.
            if k >= 2 {
                let lower = T::from_usize(k as usize - 2) * cell_size;
                let bound = best.map_or(r2, |(d, _)| d.min(r2));
                if lower * lower > bound {
                    break;
                }
            }
            let (x0, x1, y0, y1) = (cx - k, cx + k, cy - k, cy + k);
            if x0 < 0 && y0 < 0 && x1 >= side && y1 >= side && k > 0 {
                break;
            }
            for gy in y0.max(0)..=y1.min(side - 1) {
                let columns: Vec<isize> = if gy == y0 || gy == y1 {
                    (x0.max(0)..=x1.min(side - 1)).collect()
                } else {
                    [x0, x1].into_iter().filter(|&gx| gx >= 0 && gx < side).collect()
                };
                for gx in columns {
                    for p in self.cell_points(gx as usize, gy as usize) {
                        let (dx, dy) = (p.x - x, p.y - y);
                        let d2 = dx * dx + dy * dy;
                        if d2 > r2 {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((bd, be)) => d2 < bd || (d2 == bd && p.event < be),
                        };
                        if better {
                            best = Some((d2, p.event));
                        }
                    }
                }
            }
        }
        best.map(|(_, e)| e)
    }
}

pub fn build_spatial_index<T: Scalar>(points: &[LayoutPoint<T>]) -> SpatialIndex<T> {
    SpatialIndex::build(points)
}

pub fn nearest_event<T: Scalar>(index: &SpatialIndex<T>, x: T, y: T, radius: T) -> Option<u32> {
    index.nearest(x, y, radius)
}
