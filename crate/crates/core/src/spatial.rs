//! Uniform-grid bucketing of point indices for ball queries.

use std::collections::HashMap;

pub(crate) type Key = [i64; 3];

pub(crate) fn cell_key(p: &[f64; 3], side: f64, dim: usize) -> Key {
    let mut key = [0i64; 3];
    for ax in 0..dim {
        key[ax] = (p[ax] / side).floor() as i64;
    }
    key
}

pub(crate) fn dist2(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    dx * dx + dy * dy + dz * dz
}

pub(crate) struct Buckets {
    pub side: f64,
    pub dim: usize,
    pub cells: HashMap<Key, Vec<u32>>,
}

impl Buckets {
    pub fn new(points: &[[f64; 3]], dim: usize, side: f64) -> Self {
        let mut cells: HashMap<Key, Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(cell_key(p, side, dim)).or_default().push(i as u32);
        }
        Self { side, dim, cells }
    }

    /// Calls `f` with every point index within distance `r` of `center` (closed ball).
    pub fn for_each_in_ball(&self, points: &[[f64; 3]], center: &[f64; 3], r: f64, mut f: impl FnMut(u32)) {
        let reach = (r / self.side).ceil() as i64;
        let base = cell_key(center, self.side, self.dim);
        let r2 = r * r;
        let span = |ax: usize| if ax < self.dim { -reach..=reach } else { 0..=0 };
        for di in span(0) {
            for dj in span(1) {
                for dk in span(2) {
                    let key = [base[0] + di, base[1] + dj, base[2] + dk];
                    if let Some(idx) = self.cells.get(&key) {
                        for &i in idx {
                            if dist2(&points[i as usize], center) <= r2 {
                                f(i);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn count_in_ball(&self, points: &[[f64; 3]], center: &[f64; 3], r: f64) -> usize {
        let mut n = 0;
        self.for_each_in_ball(points, center, r, |_| n += 1);
        n
    }
}
