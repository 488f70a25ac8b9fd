use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Field-like scalar the wavelet machinery is written against.
///
/// Implemented for `f32`, `f64` and the rational types of `num-rational`, so
/// the same code computes filters and moments in floating point or exactly.
pub trait Scalar:
    Num + Signed + FromPrimitive + ToPrimitive + PartialOrd + Clone + Debug + Send + Sync + 'static
{
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer fits scalar") / Self::from_i64(den).expect("integer fits scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Signed + FromPrimitive + ToPrimitive + PartialOrd + Clone + Debug + Send + Sync + 'static
{
}

/// Floating-point [`Scalar`]: the operations that need `sqrt`, `ln` or
/// `floor` are written against this.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// Solves `a x = b` by Gaussian elimination with partial pivoting on `|.|`.
///
/// Returns `None` when the system is singular. Works exactly for rationals.
#[allow(clippy::needless_range_loop)]
pub fn solve_linear<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n), "square system expected");
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / a[col][col].clone();
            for c in col..n {
                let delta = factor.clone() * a[col][c].clone();
                a[row][c] = a[row][c].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[row] = b[row].clone() - delta;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for c in row + 1..n {
            acc = acc - a[row][c].clone() * x[c].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Some(x)
}
