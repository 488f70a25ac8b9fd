//! Empirical coefficients, the data-driven threshold and the penalized
//! model-selection view of the thresholding estimator.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signals::PointProcess;
use crate::wavelet::{BasisKind, BiorthBasis, LambdaIndex};

/// Largest table accepted by [`select_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 20;

/// Which variance enters the square-root term of the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThresholdVariant {
    /// `sqrt(2 gamma ln n V~) + gamma ln n ||phi||_inf / (3n)`, with the
    /// inflated variance `V~` that makes the oracle inequality hold.
    TheoremForm,
    /// `sqrt(2 gamma ln n V^) + gamma ln n ||phi||_inf / (3n)`, the form used
    /// in simulations.
    SimulationForm,
}

impl ThresholdVariant {
    pub fn token(self) -> &'static str {
        match self {
            ThresholdVariant::TheoremForm => "theorem",
            ThresholdVariant::SimulationForm => "simulation",
        }
    }
}

impl fmt::Display for ThresholdVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ThresholdVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theorem" => Ok(ThresholdVariant::TheoremForm),
            "simulation" => Ok(ThresholdVariant::SimulationForm),
            _ => Err(Error::UnknownToken { kind: "variant", token: s.to_string(), valid: "theorem, simulation".into() }),
        }
    }
}

/// Estimator settings: `Gamma_n = {(j, k) : -1 <= j <= j0}`, threshold
/// parameter `gamma` and threshold variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaNConfig {
    pub j0: u32,
    pub gamma: f64,
    pub variant: ThresholdVariant,
}

impl GammaNConfig {
    pub fn new(j0: u32, gamma: f64, variant: ThresholdVariant) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { j0, gamma, variant })
    }
}

/// `floor(log2 n)`, the default finest level.
pub fn default_j0(n: u64) -> u32 {
    63 - n.max(1).leading_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInfo<T> {
    pub v_tilde: T,
    pub eta: T,
    pub kept: bool,
}

/// True values attached to a coefficient: `beta`, `sigma^2` and
/// `V = sigma^2 / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth<T> {
    pub beta: T,
    pub sigma2: T,
    pub v: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord<T> {
    pub lambda: LambdaIndex,
    /// `(1/n) sum_T phi_lambda(T)`.
    pub beta_hat: T,
    /// `(1/n^2) sum_T phi_lambda(T)^2`.
    pub v_hat: T,
    pub threshold: Option<ThresholdInfo<T>>,
    pub truth: Option<Truth<T>>,
}

impl<T: Real> CoeffRecord<T> {
    pub fn kept(&self) -> bool {
        self.threshold.is_some_and(|t| t.kept)
    }

    /// `beta~ = beta^ 1{|beta^| >= eta}`.
    pub fn beta_tilde(&self) -> T {
        if self.kept() {
            self.beta_hat
        } else {
            T::zero()
        }
    }
}

/// Sparse table of the coefficients of one realization, sorted by `(j, k)`.
/// Coefficients whose support holds no event are not stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffTable<T> {
    pub n: u64,
    pub j0: u32,
    pub basis: BasisKind,
    /// `||phi_lambda||_inf` for `j = -1 ..= j0`, indexed by `j + 1`.
    pub sup_norms: Vec<T>,
    pub records: Vec<CoeffRecord<T>>,
    pub config: Option<GammaNConfig>,
}

impl<T: Real> CoeffTable<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, lambda: LambdaIndex) -> Option<&CoeffRecord<T>> {
        self.records.binary_search_by(|r| r.lambda.cmp(&lambda)).ok().map(|i| &self.records[i])
    }

    pub fn sup_norm(&self, j: i32) -> T {
        self.sup_norms[(j + 1) as usize]
    }

    pub fn kept(&self) -> impl Iterator<Item = &CoeffRecord<T>> + '_ {
        self.records.iter().filter(|r| r.kept())
    }

    pub fn kept_set(&self) -> BTreeSet<LambdaIndex> {
        self.kept().map(|r| r.lambda).collect()
    }

    /// Thresholds every record in place.
    pub fn apply_threshold(&mut self, gamma: f64, variant: ThresholdVariant) {
        let g = T::from_f64(gamma).expect("gamma fits scalar");
        let n = self.n;
        for i in 0..self.records.len() {
            let sup = self.sup_norm(self.records[i].lambda.j);
            let r = &mut self.records[i];
            let (v_tilde, eta) = threshold(r.v_hat, sup, n, g, variant);
            r.threshold = Some(ThresholdInfo { v_tilde, eta, kept: Float::abs(r.beta_hat) >= eta });
        }
        self.config = Some(GammaNConfig { j0: self.j0, gamma, variant });
    }

    pub fn thresholded(&self, gamma: f64, variant: ThresholdVariant) -> Self {
        let mut t = self.clone();
        t.apply_threshold(gamma, variant);
        t
    }

    /// `(lambda, beta~)` of the kept coefficients, for reconstruction.
    pub fn kept_coeffs(&self) -> Vec<(LambdaIndex, T)> {
        self.kept().map(|r| (r.lambda, r.beta_hat)).collect()
    }
}

fn from_u64<T: Real>(n: u64) -> T {
    T::from_u64(n).expect("integer fits scalar")
}

/// Empirical coefficients `beta^` and variances `V^` for every
/// `lambda = (j, k)`, `-1 <= j <= j0`, whose support contains an event.
///
/// Points are sorted, so at each level the touched `k` only move forward:
/// the translations of one point are either appended or fall inside the run
/// opened by the previous point.
pub fn accumulate<T: Real>(points: &PointProcess, basis: &BiorthBasis<T>, j0: i32) -> Result<CoeffTable<T>> {
    if j0 < 0 {
        return Err(Error::InvalidParameter(format!("j0 must be >= 0, got {j0}")));
    }
    if points.n < 2 {
        return Err(Error::InvalidParameter(format!("scaling parameter n must be >= 2, got {}", points.n)));
    }
    let nf: T = from_u64(points.n);
    let xs: Vec<T> = points.points.iter().map(|&x| T::from_f64(x).expect("position fits scalar")).collect();
    let mut records = Vec::new();
    let mut sup_norms = Vec::with_capacity(j0 as usize + 2);
    for j in -1..=j0 {
        let lv = basis.level(j);
        sup_norms.push(lv.sup_norm());
        let mut entries: Vec<(i64, T, T)> = Vec::new();
        for &x in &xs {
            let h = lv.half_index(x);
            let (k0, k1) = lv.k_range(h);
            for k in k0..=k1 {
                let v = lv.value_at(k, h);
                let idx = match entries.last() {
                    Some(&(last, _, _)) if k <= last => entries.len() - 1 - (last - k) as usize,
                    _ => {
                        entries.push((k, T::zero(), T::zero()));
                        entries.len() - 1
                    }
                };
                let e = &mut entries[idx];
                debug_assert_eq!(e.0, k);
                e.1 = e.1 + v;
                e.2 = e.2 + v * v;
            }
        }
        records.extend(entries.into_iter().filter(|e| !e.2.is_zero()).map(|(k, s, s2)| CoeffRecord {
            lambda: LambdaIndex::new(j, k),
            beta_hat: s / nf,
            v_hat: s2 / (nf * nf),
            threshold: None,
            truth: None,
        }));
    }
    Ok(CoeffTable { n: points.n, j0: j0 as u32, basis: basis.kind(), sup_norms, records, config: None })
}

/// `V~ = V^ + sqrt(2 gamma ln n V^ ||phi||^2 / n^2) + 3 gamma ln n ||phi||^2 / n^2`.
pub fn v_tilde<T: Real>(v_hat: T, sup_norm: T, n: u64, gamma: T) -> T {
    let nf: T = from_u64(n);
    let u = gamma * Float::ln(nf);
    v_tilde_at(v_hat, sup_norm, n, u)
}

/// `V~` written with a free deviation level `u` in place of `gamma ln n`.
pub fn v_tilde_at<T: Real>(v_hat: T, sup_norm: T, n: u64, u: T) -> T {
    let nf: T = from_u64(n);
    let two = T::one() + T::one();
    let three = two + T::one();
    let s2 = sup_norm * sup_norm / (nf * nf);
    v_hat + Float::sqrt(two * u * v_hat * s2) + three * u * s2
}

/// `(V~, eta)` for one coefficient. `eta` is strictly positive.
pub fn threshold<T: Real>(v_hat: T, sup_norm: T, n: u64, gamma: T, variant: ThresholdVariant) -> (T, T) {
    let nf: T = from_u64(n);
    let two = T::one() + T::one();
    let three = two + T::one();
    let gl = gamma * Float::ln(nf);
    let vt = v_tilde(v_hat, sup_norm, n, gamma);
    let v = match variant {
        ThresholdVariant::TheoremForm => vt,
        ThresholdVariant::SimulationForm => v_hat,
    };
    (vt, Float::sqrt(two * gl * v) + gl * sup_norm / (three * nf))
}

/// Accumulation followed by thresholding.
pub fn estimate<T: Real>(points: &PointProcess, basis: &BiorthBasis<T>, cfg: &GammaNConfig) -> Result<CoeffTable<T>> {
    let mut table = accumulate(points, basis, cfg.j0 as i32)?;
    table.apply_threshold(cfg.gamma, cfg.variant);
    Ok(table)
}

fn exact_of<T: Real>(x: T) -> Ratio<BigInt> {
    Ratio::from_float(x.to_f64().expect("finite")).expect("finite value")
}

/// Exhaustive minimisation of the penalized contrast
/// `-sum_{m} beta^^2 + sum_{m} eta^2` over all subsets `m` of the table,
/// in exact arithmetic. Among minimisers the largest subset wins, which
/// matches the non-strict keep rule.
pub fn select_bruteforce<T: Real>(table: &CoeffTable<T>) -> Result<BTreeSet<LambdaIndex>> {
    let m = table.len();
    if m > BRUTEFORCE_LIMIT {
        return Err(Error::TableTooLarge { count: m, limit: BRUTEFORCE_LIMIT });
    }
    let mut costs = Vec::with_capacity(m);
    for r in &table.records {
        let t = r.threshold.ok_or_else(|| Error::InvalidParameter("table has not been thresholded".into()))?;
        let (b, e) = (exact_of(r.beta_hat), exact_of(t.eta));
        costs.push(&e * &e - &b * &b);
    }
    // Gray-code walk: one element toggles per step.
    let mut mask = 0u32;
    let mut cost = Ratio::from_integer(BigInt::from(0));
    let mut best = (cost.clone(), 0u32, 0u32);
    for step in 1u64..(1u64 << m) {
        let bit = step.trailing_zeros();
        mask ^= 1 << bit;
        if mask & (1 << bit) != 0 {
            cost += &costs[bit as usize];
        } else {
            cost -= &costs[bit as usize];
        }
        let card = mask.count_ones();
        if cost < best.0 || (cost == best.0 && card > best.1) {
            best = (cost.clone(), card, mask);
        }
    }
    Ok((0..m).filter(|i| best.2 & (1 << i) != 0).map(|i| table.records[i].lambda).collect())
}
