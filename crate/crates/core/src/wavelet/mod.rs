//! Haar and CDF(1,5) biorthogonal bases.
//!
//! Analysis functions `phi`, `psi` are piecewise constant on half-integers,
//! which makes the true coefficients `beta_lambda = int psi_lambda f` finite
//! sums of CDF differences. The dual (reconstruction) functions are only
//! needed to render estimates and are tabulated by the cascade algorithm.

mod cascade;
mod filters;
mod piecewise;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use cascade::{cascade_scaling, cascade_wavelet, DyadicTable, CASCADE_LEVEL};
pub use filters::{
    analysis_highpass, derive_spline15_dual_lowpass, exact_to, spline15_dual_lowpass_exact, FilterTaps, SPLINE15_LEN,
    SPLINE15_MOMENTS, SPLINE15_START,
};
pub use piecewise::PiecewiseConstantFn;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};
use crate::signals::Intensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisKind {
    Haar,
    Spline15,
}

impl BasisKind {
    pub const ALL: [BasisKind; 2] = [BasisKind::Haar, BasisKind::Spline15];

    pub fn token(self) -> &'static str {
        match self {
            BasisKind::Haar => "haar",
            BasisKind::Spline15 => "spline15",
        }
    }

    pub fn basis(self) -> BiorthBasis<f64> {
        BiorthBasis::new(self)
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haar" => Ok(BasisKind::Haar),
            "spline15" | "spline" => Ok(BasisKind::Spline15),
            _ => Err(Error::UnknownToken { kind: "basis", token: s.to_string(), valid: "haar, spline15".into() }),
        }
    }
}

/// Index `(j, k)`; `j = -1` is the scaling function `phi(. - k)`, `j >= 0`
/// the wavelet `psi_{j,k} = 2^{j/2} psi(2^j . - k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LambdaIndex {
    pub j: i32,
    pub k: i64,
}

impl LambdaIndex {
    pub const fn new(j: i32, k: i64) -> Self {
        Self { j, k }
    }

    pub const fn scaling(k: i64) -> Self {
        Self { j: -1, k }
    }

    pub fn is_scaling(&self) -> bool {
        self.j < 0
    }
}

impl fmt::Display for LambdaIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.j, self.k)
    }
}

/// Dual functions tabulated on the cascade mesh.
#[derive(Debug, Clone)]
pub struct DualTables {
    pub phi: DyadicTable,
    pub psi: DyadicTable,
}

/// Biorthogonal pair: exact analysis functions plus reconstruction filters.
#[derive(Debug, Clone)]
pub struct BiorthBasis<T> {
    kind: BasisKind,
    phi: PiecewiseConstantFn<T>,
    psi: PiecewiseConstantFn<T>,
    analysis_hi: FilterTaps<T>,
    recon_lo: FilterTaps<T>,
    recon_hi: FilterTaps<T>,
    r: u32,
    sup_psi: T,
    sup_phi: T,
    inf_psi: T,
    inf_phi: T,
    dual: OnceLock<Option<DualTables>>,
}

/// Haar pair: `phi = 1_[0,1)`, `psi = 1_[0,1/2) - 1_[1/2,1)`, self-dual.
pub fn haar_basis<T: Scalar>() -> BiorthBasis<T> {
    let lo = FilterTaps::new(0, vec![T::one(), T::one()]);
    BiorthBasis::from_filters(BasisKind::Haar, lo, 0)
}

/// CDF(1,5) pair: box scaling function, piecewise-constant wavelet with
/// vanishing moments through degree 4, supported in `[-2, 3]`.
pub fn spline15_basis<T: Scalar>() -> BiorthBasis<T> {
    let lo = spline15_dual_lowpass_exact().map(exact_to::<T>);
    BiorthBasis::from_filters(BasisKind::Spline15, lo, SPLINE15_MOMENTS - 1)
}

impl<T: Scalar> BiorthBasis<T> {
    pub fn new(kind: BasisKind) -> Self {
        match kind {
            BasisKind::Haar => haar_basis(),
            BasisKind::Spline15 => spline15_basis(),
        }
    }

    /// Box analysis scaling function with the given dual lowpass `h~`.
    ///
    /// `psi(x) = sum_m g_m phi(2x - m)` with `g_m = (-1)^m h~_{1-m}`; the dual
    /// wavelet is `psi~(x) = phi~(2x) - phi~(2x - 1)`.
    fn from_filters(kind: BasisKind, recon_lo: FilterTaps<T>, r: u32) -> Self {
        let phi = PiecewiseConstantFn::new(0, vec![T::one(), T::one()]);
        let analysis_hi = analysis_highpass(&recon_lo);
        // 1_[0,1)(2x - m) is the half piece [m/2, (m+1)/2)
        let psi = PiecewiseConstantFn::new(analysis_hi.start, analysis_hi.taps.clone());
        let recon_hi = FilterTaps::new(0, vec![T::one(), -T::one()]);
        Self {
            kind,
            sup_psi: psi.sup_abs(),
            sup_phi: phi.sup_abs(),
            inf_psi: psi.inf_abs(),
            inf_phi: phi.inf_abs(),
            phi,
            psi,
            analysis_hi,
            recon_lo,
            recon_hi,
            r,
            dual: OnceLock::new(),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn phi(&self) -> &PiecewiseConstantFn<T> {
        &self.phi
    }

    pub fn psi(&self) -> &PiecewiseConstantFn<T> {
        &self.psi
    }

    pub fn analysis_hi(&self) -> &FilterTaps<T> {
        &self.analysis_hi
    }

    pub fn recon_lo(&self) -> &FilterTaps<T> {
        &self.recon_lo
    }

    pub fn recon_hi(&self) -> &FilterTaps<T> {
        &self.recon_hi
    }

    /// Highest degree `q` with `int psi x^q = 0`.
    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn sup_psi(&self) -> &T {
        &self.sup_psi
    }

    pub fn sup_phi(&self) -> &T {
        &self.sup_phi
    }

    pub fn inf_psi(&self) -> &T {
        &self.inf_psi
    }

    pub fn inf_phi(&self) -> &T {
        &self.inf_phi
    }

    /// Analysis function of a level: `phi` for `j = -1`, `psi` otherwise.
    pub fn mother(&self, j: i32) -> &PiecewiseConstantFn<T> {
        if j < 0 {
            &self.phi
        } else {
            &self.psi
        }
    }

    /// Dual tables for reconstruction; `None` for Haar, which is self-dual.
    pub fn dual_tables(&self) -> Option<&DualTables> {
        self.dual
            .get_or_init(|| {
                if self.kind == BasisKind::Haar {
                    return None;
                }
                let lo = self.recon_lo.to_f64();
                let phi = cascade_scaling(&lo, CASCADE_LEVEL)?;
                let psi = cascade_wavelet(&phi, &self.recon_hi.to_f64());
                Some(DualTables { phi, psi })
            })
            .as_ref()
    }

    /// Same basis with every coefficient sent through `f64`.
    pub fn to_f64(&self) -> BiorthBasis<f64> {
        BiorthBasis::from_filters(self.kind, self.recon_lo.to_f64(), self.r)
    }
}

/// Evaluation helper for all functions of one level `j`.
///
/// Works in half-units: `lambda = (j, k)` is constant on
/// `[h / (2 s), (h + 1) / (2 s))` with `s = 2^max(j, 0)`, and the mother piece
/// index is `h - 2k`, so point location is integer arithmetic after a single
/// `floor`.
#[derive(Debug, Clone, Copy)]
pub struct LevelView<'a, T> {
    pub j: i32,
    mother: &'a PiecewiseConstantFn<T>,
    scale: T,
    amp: T,
}

impl<'a, T: Real> LevelView<'a, T> {
    /// `floor(2 s x)`.
    pub fn half_index(&self, x: T) -> i64 {
        let two = T::one() + T::one();
        Float::floor(two * self.scale * x).to_i64().expect("position fits i64")
    }

    /// Translations `k` whose support contains the point with half index `h`.
    pub fn k_range(&self, h: i64) -> (i64, i64) {
        let (sh, eh) = (self.mother.start_half(), self.mother.end_half());
        ((h - eh).div_euclid(2) + 1, (h - sh).div_euclid(2))
    }

    /// `lambda_{j,k}` at the point with half index `h`.
    pub fn value_at(&self, k: i64, h: i64) -> T {
        self.amp * self.mother.value_at_half(h - 2 * k)
    }

    pub fn eval(&self, k: i64, x: T) -> T {
        self.value_at(k, self.half_index(x))
    }

    /// `[lo, hi)` support of `lambda_{j,k}`.
    pub fn support(&self, k: i64) -> (T, T) {
        let two = T::one() + T::one();
        let den = two * self.scale;
        let lo = T::from_i64(self.mother.start_half() + 2 * k).unwrap() / den;
        let hi = T::from_i64(self.mother.end_half() + 2 * k).unwrap() / den;
        (lo, hi)
    }

    /// Translations whose support meets `[lo, hi]`.
    pub fn k_range_for_interval(&self, lo: T, hi: T) -> (i64, i64) {
        let (sh, eh) = (self.mother.start_half(), self.mother.end_half());
        let two = T::one() + T::one();
        let hl = Float::floor(two * self.scale * lo).to_i64().expect("position fits i64");
        let hh = Float::floor(two * self.scale * hi).to_i64().expect("position fits i64");
        ((hl - eh).div_euclid(2) + 1, (hh - sh).div_euclid(2))
    }

    /// `(a, b, value)` for every constant piece of `lambda_{j,k}` in `x`.
    pub fn pieces(&self, k: i64) -> impl Iterator<Item = (T, T, T)> + '_ {
        let two = T::one() + T::one();
        let den = two * self.scale;
        let offset = 2 * k;
        self.mother.values().iter().enumerate().map(move |(i, v)| {
            let h = self.mother.start_half() + i as i64 + offset;
            (T::from_i64(h).unwrap() / den, T::from_i64(h + 1).unwrap() / den, self.amp * *v)
        })
    }

    /// `||lambda||_inf` for this level.
    pub fn sup_norm(&self) -> T {
        self.amp * self.mother.sup_abs()
    }
}

impl<T: Real> BiorthBasis<T> {
    pub fn level(&self, j: i32) -> LevelView<'_, T> {
        let jj = j.max(0);
        let scale = Float::powi(T::one() + T::one(), jj);
        let amp = if j < 0 { T::one() } else { Float::sqrt(scale) };
        LevelView { j, mother: self.mother(j), scale, amp }
    }

    /// `||phi_lambda||_inf`: `2^{j/2} sup|psi|` for `j >= 0`, `sup|phi|` for
    /// `j = -1`.
    pub fn sup_norm(&self, j: i32) -> T {
        self.level(j).sup_norm()
    }
}

/// Exact evaluation of `phi_k` (`j = -1`) or `psi_{j,k}` at `x`.
pub fn eval_analysis<T: Real>(basis: &BiorthBasis<T>, lambda: LambdaIndex, x: T) -> T {
    basis.level(lambda.j).eval(lambda.k, x)
}

/// `(beta_lambda, sigma^2_lambda)` = `(int psi_lambda f, int psi_lambda^2 f)`
/// as sums of exact interval masses of `f`.
pub fn true_moments<I: Intensity + ?Sized>(basis: &BiorthBasis<f64>, lambda: LambdaIndex, f: &I) -> (f64, f64) {
    let level = basis.level(lambda.j);
    level.pieces(lambda.k).fold((0.0, 0.0), |(b, s), (lo, hi, v)| {
        let m = f.mass_between(lo, hi);
        (b + v * m, s + v * v * m)
    })
}

pub fn true_coeff<I: Intensity + ?Sized>(basis: &BiorthBasis<f64>, lambda: LambdaIndex, f: &I) -> f64 {
    true_moments(basis, lambda, f).0
}

pub fn true_sigma2<I: Intensity + ?Sized>(basis: &BiorthBasis<f64>, lambda: LambdaIndex, f: &I) -> f64 {
    true_moments(basis, lambda, f).1
}

/// Dual function `phi~_lambda` at `x`; exact for Haar, linear interpolation
/// on the cascade mesh otherwise.
pub fn eval_dual(basis: &BiorthBasis<f64>, lambda: LambdaIndex, x: f64) -> f64 {
    match basis.dual_tables() {
        None => eval_analysis(basis, lambda, x),
        Some(t) => {
            if lambda.j < 0 {
                t.phi.eval(x - lambda.k as f64)
            } else {
                let s = (lambda.j as f64).exp2();
                s.sqrt() * t.psi.eval(s * x - lambda.k as f64)
            }
        }
    }
}

/// Support `[lo, hi]` of `phi~_lambda`.
pub fn dual_support(basis: &BiorthBasis<f64>, lambda: LambdaIndex) -> (f64, f64) {
    match basis.dual_tables() {
        None => basis.level(lambda.j).support(lambda.k),
        Some(t) => {
            let k = lambda.k as f64;
            if lambda.j < 0 {
                let (a, b) = t.phi.support();
                (a + k, b + k)
            } else {
                let s = (lambda.j as f64).exp2();
                let (a, b) = t.psi.support();
                ((a + k) / s, (b + k) / s)
            }
        }
    }
}

/// `sum_lambda beta_lambda phi~_lambda` on a sorted grid.
pub fn reconstruct(basis: &BiorthBasis<f64>, coeffs: &[(LambdaIndex, f64)], grid: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for &(lambda, beta) in coeffs {
        if beta == 0.0 {
            continue;
        }
        let (lo, hi) = dual_support(basis, lambda);
        let start = grid.partition_point(|&x| x < lo);
        let end = grid.partition_point(|&x| x <= hi);
        for i in start..end {
            out[i] += beta * eval_dual(basis, lambda, grid[i]);
        }
    }
    out
}

/// Pieces of `phi` and `psi` as CSV `function,lo,hi,value`, followed by the
/// filters as `filter,m,coefficient`.
pub fn dump_basis_csv<T: Scalar>(basis: &BiorthBasis<T>) -> String {
    let mut out = String::from("function,lo,hi,value\n");
    for (name, f) in [("phi", basis.phi()), ("psi", basis.psi())] {
        for (a, b, v) in f.pieces() {
            out.push_str(&format!("{name},{},{},{}\n", a.to_f64_lossy(), b.to_f64_lossy(), v.to_f64_lossy()));
        }
    }
    out.push_str("filter,m,coefficient\n");
    for (name, taps) in [("analysis_hi", basis.analysis_hi()), ("recon_lo", basis.recon_lo()), ("recon_hi", basis.recon_hi())] {
        for (m, c) in taps.iter() {
            out.push_str(&format!("{name},{m},{}\n", c.to_f64_lossy()));
        }
    }
    out
}
