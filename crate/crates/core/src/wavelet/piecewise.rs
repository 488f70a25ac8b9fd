use serde::Serialize;

use crate::scalar::Scalar;

/// Function constant on the half-integer pieces `[i/2, (i+1)/2)`, zero
/// outside `[start/2, (start + values.len())/2)`.
///
/// Pieces are half-open; at a breakpoint the right limit is returned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseConstantFn<T> {
    start_half: i64,
    values: Vec<T>,
}

impl<T: Scalar> PiecewiseConstantFn<T> {
    /// Piece `i` covers `[(start_half + i)/2, (start_half + i + 1)/2)`.
    pub fn new(start_half: i64, values: Vec<T>) -> Self {
        assert!(!values.is_empty(), "piecewise function needs at least one piece");
        Self { start_half, values }
    }

    pub fn start_half(&self) -> i64 {
        self.start_half
    }

    pub fn end_half(&self) -> i64 {
        self.start_half + self.values.len() as i64
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn support_lo(&self) -> T {
        T::from_ratio(self.start_half, 2)
    }

    pub fn support_hi(&self) -> T {
        T::from_ratio(self.end_half(), 2)
    }

    /// All `len + 1` breakpoints, strictly increasing.
    pub fn breakpoints(&self) -> Vec<T> {
        (self.start_half..=self.end_half()).map(|h| T::from_ratio(h, 2)).collect()
    }

    /// `(a, b, value)` for every piece.
    pub fn pieces(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| {
            let h = self.start_half + i as i64;
            (T::from_ratio(h, 2), T::from_ratio(h + 1, 2), v.clone())
        })
    }

    /// Exact evaluation; `floor(2x)` is located without rounding for
    /// rational `T`.
    pub fn eval(&self, x: &T) -> T {
        let two_x = x.clone() + x.clone();
        let mut h = two_x.to_f64_lossy().floor() as i64;
        while T::from_i64(h).expect("index fits scalar") > two_x {
            h -= 1;
        }
        while T::from_i64(h + 1).expect("index fits scalar") <= two_x {
            h += 1;
        }
        self.value_at_half(h)
    }

    /// Value on the piece `[h/2, (h+1)/2)`.
    pub fn value_at_half(&self, h: i64) -> T {
        if h < self.start_half || h >= self.end_half() {
            T::zero()
        } else {
            self.values[(h - self.start_half) as usize].clone()
        }
    }

    /// `int x^q f(x) dx`, exact for rational `T`.
    pub fn moment(&self, q: u32) -> T {
        let qp1 = T::from_u32(q + 1).expect("small integer");
        self.pieces().fold(T::zero(), |acc, (a, b, v)| {
            acc + v * (pow(&b, q + 1) - pow(&a, q + 1)) / qp1.clone()
        })
    }

    pub fn integral(&self) -> T {
        self.moment(0)
    }

    /// `int f^2`.
    pub fn square_integral(&self) -> T {
        let half = T::from_ratio(1, 2);
        self.values.iter().fold(T::zero(), |acc, v| acc + v.clone() * v.clone() * half.clone())
    }

    /// `int f g` for two functions on the same grid.
    pub fn inner(&self, other: &Self) -> T {
        let half = T::from_ratio(1, 2);
        let lo = self.start_half.max(other.start_half);
        let hi = self.end_half().min(other.end_half());
        (lo..hi).fold(T::zero(), |acc, h| acc + self.value_at_half(h) * other.value_at_half(h) * half.clone())
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().map(|v| v.abs()).fold(T::zero(), |m, v| if v > m { v } else { m })
    }

    /// Smallest `|f|` over the pieces of the support.
    pub fn inf_abs(&self) -> T {
        let mut it = self.values.iter().map(|v| v.abs());
        let first = it.next().expect("nonempty");
        it.fold(first, |m, v| if v < m { v } else { m })
    }

    /// Converts piece values through `f64`.
    pub fn to_f64_fn(&self) -> PiecewiseConstantFn<f64> {
        PiecewiseConstantFn { start_half: self.start_half, values: self.values.iter().map(|v| v.to_f64_lossy()).collect() }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> PiecewiseConstantFn<U> {
        PiecewiseConstantFn { start_half: self.start_half, values: self.values.iter().map(f).collect() }
    }
}

fn pow<T: Scalar>(x: &T, e: u32) -> T {
    (0..e).fold(T::one(), |acc, _| acc * x.clone())
}
