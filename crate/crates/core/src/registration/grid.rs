use std::collections::HashMap;

use crate::geometry::Point3;
use crate::scalar::Real;

type Cell = (i64, i64, i64);

/// Uniform hash grid for fixed-radius nearest-neighbor queries.
///
/// With the cell edge equal to the query radius, every candidate lies in the
/// 27 cells around the query.
#[derive(Debug, Clone)]
pub struct GridIndex<T> {
    cell: T,
    points: Vec<Point3<T>>,
    cells: HashMap<Cell, Vec<u32>>,
}

impl<T: Real> GridIndex<T> {
    pub fn new(points: &[Point3<T>], cell: T) -> Self {
        assert!(cell > T::zero(), "grid cell size must be positive");
        let mut cells: HashMap<Cell, Vec<u32>> = HashMap::new();
        for (i, &p) in points.iter().enumerate() {
            cells.entry(key(p, cell)).or_default().push(i as u32);
        }
        Self { cell, points: points.to_vec(), cells }
    }

    /// Nearest indexed point within `radius` (which must not exceed the
    /// cell size). Ties resolve to the lowest index. Returns the index and
    /// the squared distance.
    pub fn nearest_within(&self, q: Point3<T>, radius: T) -> Option<(usize, T)> {
        debug_assert!(radius <= self.cell);
        let (cx, cy, cz) = key(q, self.cell);
        let r2 = radius * radius;
        let mut best: Option<(usize, T)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &i in bucket {
                        let i = i as usize;
                        let d2 = (self.points[i] - q).norm_squared();
                        if d2 > r2 {
                            continue;
                        }
                        best = match best {
                            Some((bi, bd)) if bd < d2 || (bd == d2 && bi < i) => Some((bi, bd)),
                            _ => Some((i, d2)),
                        };
                    }
                }
            }
        }
        best
    }

    pub fn point(&self, i: usize) -> Point3<T> {
        self.points[i]
    }
}

fn key<T: Real>(p: Point3<T>, cell: T) -> Cell {
    let k = |v: T| (v / cell).floor().to_i64().unwrap_or(i64::MAX);
    (k(p.x), k(p.y), k(p.z))
}
