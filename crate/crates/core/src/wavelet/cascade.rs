//! Cascade evaluation of refinable dual functions on a dyadic mesh.

use serde::Serialize;

use super::filters::FilterTaps;
use crate::scalar::solve_linear;

/// Mesh level of the dual tables: values are known at `i / 2^10`.
pub const CASCADE_LEVEL: u32 = 10;

/// Samples `values[i]` of a function at `(first + i) / 2^level`, linearly
/// interpolated in between and zero outside.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicTable {
    pub level: u32,
    pub first: i64,
    pub values: Vec<f64>,
}

impl DyadicTable {
    fn scale(&self) -> f64 {
        (1u64 << self.level) as f64
    }

    pub fn support(&self) -> (f64, f64) {
        let s = self.scale();
        (self.first as f64 / s, (self.first + self.values.len() as i64 - 1) as f64 / s)
    }

    /// Sample at mesh index `i`, zero outside the table.
    pub fn at(&self, i: i64) -> f64 {
        let idx = i - self.first;
        if idx < 0 || idx >= self.values.len() as i64 {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = x * self.scale();
        let i = t.floor();
        let frac = t - i;
        let i = i as i64;
        let left = self.at(i);
        if frac == 0.0 {
            return left;
        }
        left + frac * (self.at(i + 1) - left)
    }

    /// Exact integral of the interpolant over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.support();
        let a = a.max(lo);
        let b = b.min(hi);
        if b <= a {
            return 0.0;
        }
        let s = self.scale();
        let (ta, tb) = (a * s, b * s);
        let mut acc = 0.0;
        let mut i = ta.floor() as i64;
        while (i as f64) < tb {
            let c0 = (i as f64).max(ta);
            let c1 = ((i + 1) as f64).min(tb);
            if c1 > c0 {
                let (y0, y1) = (self.at(i), self.at(i + 1));
                let f = |t: f64| y0 + (t - i as f64) * (y1 - y0);
                acc += 0.5 * (f(c0) + f(c1)) * (c1 - c0);
            }
            i += 1;
        }
        acc / s
    }
}

/// Values of the refinable function `phi(x) = sum_m h_m phi(2x - m)` with
/// `int phi = 1`, at the mesh `2^-level`.
///
/// Integer samples come from the eigenvector of the refinement matrix, the
/// finer ones from repeated application of the two-scale relation.
/// Returns `None` when the filter has no continuous solution (e.g. a box).
pub fn cascade_scaling(h: &FilterTaps<f64>, level: u32) -> Option<DyadicTable> {
    let (s, e) = (h.start, h.end() - 1);
    if e - s < 2 {
        return None;
    }
    // unknowns phi(n) for s < n < e; the end values vanish
    let unknowns: Vec<i64> = (s + 1..e).collect();
    let dim = unknowns.len();
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for (r, &n) in unknowns.iter().enumerate() {
        for (c, &p) in unknowns.iter().enumerate() {
            a[r][c] = h.get(2 * n - p) - if r == c { 1.0 } else { 0.0 };
        }
    }
    // the eigen-equations are dependent; trade the last for the normalisation
    a[dim - 1] = vec![1.0; dim];
    b[dim - 1] = 1.0;
    let ints = solve_linear(a, b)?;

    let mut first = s;
    let mut values: Vec<f64> = std::iter::once(0.0).chain(ints).chain(std::iter::once(0.0)).collect();
    for d in 1..=level {
        let half = 1i64 << (d - 1);
        let prev = DyadicTable { level: d - 1, first, values };
        let new_first = s << d;
        let new_last = e << d;
        values = (new_first..=new_last).map(|i| h.iter().map(|(m, c)| c * prev.at(i - m * half)).sum()).collect();
        first = new_first;
    }
    Some(DyadicTable { level, first, values })
}

/// `psi(x) = sum_m g_m phi(2x - m)` tabulated on the mesh of `phi`.
pub fn cascade_wavelet(phi: &DyadicTable, g: &FilterTaps<f64>) -> DyadicTable {
    let scale = 1i64 << phi.level;
    let (plo, phi_hi) = (phi.first, phi.first + phi.values.len() as i64 - 1);
    // 2x - m in [plo, phi_hi] / scale
    let first = (plo + g.start * scale).div_euclid(2);
    let last = (phi_hi + (g.end() - 1) * scale + 1).div_euclid(2);
    let values = (first..=last).map(|i| g.iter().map(|(m, c)| c * phi.at(2 * i - m * scale)).sum()).collect();
    DyadicTable { level: phi.level, first, values }
}
