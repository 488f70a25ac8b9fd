use std::sync::OnceLock;

use serde::Serialize;

use crate::scalar::{solve_linear, Scalar};
use crate::Exact;

/// Finite filter `c_m`, `m = start .. start + taps.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterTaps<T> {
    pub start: i64,
    pub taps: Vec<T>,
}

impl<T: Scalar> FilterTaps<T> {
    pub fn new(start: i64, taps: Vec<T>) -> Self {
        Self { start, taps }
    }

    pub fn end(&self) -> i64 {
        self.start + self.taps.len() as i64
    }

    pub fn get(&self, m: i64) -> T {
        if m < self.start || m >= self.end() {
            T::zero()
        } else {
            self.taps[(m - self.start) as usize].clone()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> + '_ {
        self.taps.iter().enumerate().map(move |(i, c)| (self.start + i as i64, c))
    }

    pub fn to_f64(&self) -> FilterTaps<f64> {
        FilterTaps { start: self.start, taps: self.taps.iter().map(|c| c.to_f64_lossy()).collect() }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> FilterTaps<U> {
        FilterTaps { start: self.start, taps: self.taps.iter().map(f).collect() }
    }
}

/// First index of the spline dual lowpass filter.
pub const SPLINE15_START: i64 = -4;
/// Number of dual lowpass taps; also the length of the analysis highpass.
pub const SPLINE15_LEN: usize = 10;
/// Vanishing moments of the spline analysis wavelet (degrees `0..=4`).
pub const SPLINE15_MOMENTS: u32 = 5;

/// `int_{m/2}^{(m+1)/2} x^q dx`.
fn half_cell_moment<T: Scalar>(m: i64, q: u32) -> T {
    let hi = T::from_ratio(m + 1, 2);
    let lo = T::from_ratio(m, 2);
    let mut ph = T::one();
    let mut pl = T::one();
    for _ in 0..=q {
        ph = ph * hi.clone();
        pl = pl * lo.clone();
    }
    (ph - pl) / T::from_u32(q + 1).expect("small integer")
}

/// Solves for the dual lowpass `h~_m`, `m = -4..=5`, of the spline pair
/// whose analysis scaling function is the box `1_[0,1)`.
///
/// Unknowns are fixed by two families of linear equations:
/// - biorthogonality with the box lowpass `h = (1, 1)`:
///   `h~_{2k} + h~_{2k+1} = 2 delta_{k,0}` for `k = -2..=2`;
/// - vanishing moments of `psi = sum_m g_m 1_[0,1)(2x - m)`,
///   `g_m = (-1)^m h~_{1-m}`: `int psi x^q = 0` for `q = 0..=4`.
///
/// Returns `None` if the system is singular in `T`.
pub fn derive_spline15_dual_lowpass<T: Scalar>() -> Option<FilterTaps<T>> {
    let n = SPLINE15_LEN;
    let col = |m: i64| (m - SPLINE15_START) as usize;
    let mut a = vec![vec![T::zero(); n]; n];
    let mut b = vec![T::zero(); n];
    let mut row = 0;
    for k in -2i64..=2 {
        a[row][col(2 * k)] = T::one();
        a[row][col(2 * k + 1)] = T::one();
        b[row] = if k == 0 { T::from_i64(2).unwrap() } else { T::zero() };
        row += 1;
    }
    for q in 0..SPLINE15_MOMENTS {
        // g_m multiplies 1_[m/2,(m+1)/2); it is (-1)^m h~_{1-m}.
        for m in (1 - (SPLINE15_START + n as i64 - 1))..=(1 - SPLINE15_START) {
            let sign = if m.rem_euclid(2) == 0 { T::one() } else { -T::one() };
            let c = col(1 - m);
            a[row][c] = a[row][c].clone() + sign * half_cell_moment::<T>(m, q);
        }
        row += 1;
    }
    solve_linear(a, b).map(|taps| FilterTaps::new(SPLINE15_START, taps))
}

/// The exact spline dual lowpass, derived once.
pub fn spline15_dual_lowpass_exact() -> &'static FilterTaps<Exact> {
    static TAPS: OnceLock<FilterTaps<Exact>> = OnceLock::new();
    TAPS.get_or_init(|| derive_spline15_dual_lowpass::<Exact>().expect("spline filter system is nonsingular"))
}

/// Analysis highpass `g_m = (-1)^m h~_{1-m}` of a dual lowpass.
pub fn analysis_highpass<T: Scalar>(dual_lo: &FilterTaps<T>) -> FilterTaps<T> {
    let start = 1 - (dual_lo.end() - 1);
    let taps = (start..=1 - dual_lo.start)
        .map(|m| {
            let c = dual_lo.get(1 - m);
            if m.rem_euclid(2) == 0 {
                c
            } else {
                -c
            }
        })
        .collect();
    FilterTaps::new(start, taps)
}

/// Converts an exact rational into any scalar through its integer parts.
pub fn exact_to<T: Scalar>(x: &Exact) -> T {
    use num_traits::ToPrimitive;
    match (x.numer().to_i64(), x.denom().to_i64()) {
        (Some(p), Some(q)) => T::from_ratio(p, q),
        _ => T::from_f64(x.to_f64().unwrap_or(f64::NAN)).expect("float fits scalar"),
    }
}
