//! Right-continuous piecewise-constant paths on [0, T].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub x0: i64,
    /// (jump time, state after the jump), times strictly increasing.
    pub jumps: Vec<(f64, i64)>,
}

impl Path {
    pub fn constant(x0: i64) -> Self {
        Path { x0, jumps: Vec::new() }
    }

    pub fn push(&mut self, t: f64, state: i64) {
        debug_assert!(self.jumps.last().is_none_or(|&(s, _)| s < t));
        self.jumps.push((t, state));
    }

    /// Value at time t (right-continuous).
    pub fn at(&self, t: f64) -> i64 {
        let k = self.jumps.partition_point(|&(s, _)| s <= t);
        if k == 0 {
            self.x0
        } else {
            self.jumps[k - 1].1
        }
    }

    /// Value just before t.
    pub fn before(&self, t: f64) -> i64 {
        let k = self.jumps.partition_point(|&(s, _)| s < t);
        if k == 0 {
            self.x0
        } else {
            self.jumps[k - 1].1
        }
    }

    pub fn terminal(&self) -> i64 {
        self.jumps.last().map_or(self.x0, |&(_, x)| x)
    }

    /// ∫₀^t f(x_s) ds, exact for piecewise-constant paths.
    pub fn integral(&self, t: f64, mut f: impl FnMut(i64) -> f64) -> f64 {
        let mut acc = 0.0;
        let mut last_t = 0.0;
        let mut last_x = self.x0;
        for &(s, x) in &self.jumps {
            if s >= t {
                break;
            }
            acc += f(last_x) * (s - last_t);
            last_t = s;
            last_x = x;
        }
        acc + f(last_x) * (t - last_t).max(0.0)
    }
}

/// sup_{0≤s≤T} |a(s) − b(s)| over the merged jump partition.
pub fn sup_path_distance(a: &Path, b: &Path) -> f64 {
    let mut best = (a.x0 - b.x0).unsigned_abs();
    let (mut i, mut j) = (0, 0);
    let (mut xa, mut xb) = (a.x0, b.x0);
    while i < a.jumps.len() || j < b.jumps.len() {
        let ta = a.jumps.get(i).map_or(f64::INFINITY, |p| p.0);
        let tb = b.jumps.get(j).map_or(f64::INFINITY, |p| p.0);
        let t = ta.min(tb);
        if ta == t {
            xa = a.jumps[i].1;
            i += 1;
        }
        if tb == t {
            xb = b.jumps[j].1;
            j += 1;
        }
        best = best.max((xa - xb).unsigned_abs());
    }
    best as f64
}
