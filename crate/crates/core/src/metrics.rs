//! Oracle risks, risk ratios and change points in `gamma`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{CoeffTable, Truth};
use crate::signals::Intensity;
use crate::wavelet::{true_moments, BasisKind, BiorthBasis, LambdaIndex};

/// Truth tables up to this many coefficients are kept in memory; larger
/// enumerations recompute coefficients on demand.
pub const DENSE_TRUTH_LIMIT: usize = 1 << 22;

const CHUNK: i64 = 4096;

/// `sum min(beta^2, V)` and `sum min(beta^2, V ln n)` over the enumerated
/// part of `Gamma_n`, for one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleDenoms {
    pub n: u64,
    pub oracle_denom: f64,
    pub oracle_log_denom: f64,
}

#[derive(Debug, Clone)]
struct LevelTruth {
    j: i32,
    k_lo: i64,
    k_hi: i64,
    /// `(beta, sigma^2)` for `k_lo..=k_hi` when the enumeration is small.
    dense: Option<Vec<(f64, f64)>>,
}

/// True coefficients of one signal in one basis, enumerated over
/// `-1 <= j <= j0` and every `k` whose support meets the tail range
/// `[lo, hi]` of the signal, with the oracle denominators for a set of `n`.
#[derive(Debug, Clone)]
pub struct TruthSummary {
    pub basis: BasisKind,
    pub j0: u32,
    pub tail_eps: f64,
    /// Interval outside of which at most `tail_eps` of the mass lies.
    pub range: (f64, f64),
    /// Mass actually outside `range`.
    pub tail_mass: f64,
    /// Upper bound on `sum beta^2` over the coefficients of `Gamma_n` left
    /// out by the tail cut.
    pub tail_energy: f64,
    /// `sum beta^2` over the enumerated coefficients.
    pub energy: f64,
    pub denoms: Vec<OracleDenoms>,
    levels: Vec<LevelTruth>,
}

#[derive(Debug, Clone, Default)]
struct ChunkSums {
    energy: f64,
    denom: Vec<f64>,
    log_denom: Vec<f64>,
}

impl TruthSummary {
    pub fn compute<I: Intensity + ?Sized>(
        f: &I,
        basis: &BiorthBasis<f64>,
        j0: u32,
        ns: &[u64],
        tail_eps: f64,
    ) -> Self {
        let (lo, hi) = f.tail_range(tail_eps);
        let tail_mass = (f.mass() - f.mass_between(lo, hi)).max(0.0);
        let mut levels = Vec::with_capacity(j0 as usize + 2);
        for j in -1..=j0 as i32 {
            let (k_lo, k_hi) = basis.level(j).k_range_for_interval(lo, hi);
            levels.push(LevelTruth { j, k_lo, k_hi, dense: None });
        }
        let total: i64 = levels.iter().map(|l| l.k_hi - l.k_lo + 1).sum();
        let dense = (total as usize) <= DENSE_TRUTH_LIMIT;

        let weights: Vec<(f64, f64)> = ns.iter().map(|&n| (1.0 / n as f64, (n as f64).ln() / n as f64)).collect();
        let mut sums = ChunkSums { energy: 0.0, denom: vec![0.0; ns.len()], log_denom: vec![0.0; ns.len()] };
        for level in &mut levels {
            let lambda = |k| LambdaIndex::new(level.j, k);
            // fixed chunking keeps the summation order independent of threads
            let starts: Vec<i64> = (level.k_lo..=level.k_hi).step_by(CHUNK as usize).collect();
            let parts: Vec<(ChunkSums, Vec<(f64, f64)>)> = starts
                .par_iter()
                .map(|&s| {
                    let e = (s + CHUNK - 1).min(level.k_hi);
                    let mut c = ChunkSums { energy: 0.0, denom: vec![0.0; ns.len()], log_denom: vec![0.0; ns.len()] };
                    let mut vals = Vec::new();
                    for k in s..=e {
                        let (b, s2) = true_moments(basis, lambda(k), f);
                        let b2 = b * b;
                        c.energy += b2;
                        for (i, &(w, wl)) in weights.iter().enumerate() {
                            c.denom[i] += b2.min(s2 * w);
                            c.log_denom[i] += b2.min(s2 * wl);
                        }
                        if dense {
                            vals.push((b, s2));
                        }
                    }
                    (c, vals)
                })
                .collect();
            let mut table = Vec::new();
            for (c, vals) in parts {
                sums.energy += c.energy;
                for i in 0..ns.len() {
                    sums.denom[i] += c.denom[i];
                    sums.log_denom[i] += c.log_denom[i];
                }
                table.extend(vals);
            }
            if dense {
                level.dense = Some(table);
            }
        }

        let tail_energy = tail_energy_bound(basis, j0, tail_mass);
        let denoms = ns
            .iter()
            .enumerate()
            .map(|(i, &n)| OracleDenoms { n, oracle_denom: sums.denom[i], oracle_log_denom: sums.log_denom[i] })
            .collect();
        Self { basis: basis.kind(), j0, tail_eps, range: (lo, hi), tail_mass, tail_energy, energy: sums.energy, denoms, levels }
    }

    pub fn denoms(&self, n: u64) -> Option<OracleDenoms> {
        self.denoms.iter().copied().find(|d| d.n == n)
    }

    /// Whether `lambda` belongs to the enumerated set.
    pub fn contains(&self, lambda: LambdaIndex) -> bool {
        self.level(lambda.j).is_some_and(|l| (l.k_lo..=l.k_hi).contains(&lambda.k))
    }

    fn level(&self, j: i32) -> Option<&LevelTruth> {
        if j < -1 {
            return None;
        }
        self.levels.get((j + 1) as usize)
    }

    /// `(beta, sigma^2)` from the stored table, or computed when the
    /// enumeration was too large to store or `lambda` lies outside it.
    pub fn moments<I: Intensity + ?Sized>(&self, f: &I, basis: &BiorthBasis<f64>, lambda: LambdaIndex) -> (f64, f64) {
        if let Some(l) = self.level(lambda.j) {
            if let Some(d) = &l.dense {
                if (l.k_lo..=l.k_hi).contains(&lambda.k) {
                    return d[(lambda.k - l.k_lo) as usize];
                }
            }
        }
        true_moments(basis, lambda, f)
    }

    /// Fills the `truth` field of every record.
    pub fn attach_truth<I: Intensity + ?Sized>(&self, table: &mut CoeffTable<f64>, f: &I, basis: &BiorthBasis<f64>) {
        let nf = table.n as f64;
        for r in &mut table.records {
            let (beta, sigma2) = self.moments(f, basis, r.lambda);
            r.truth = Some(Truth { beta, sigma2, v: sigma2 / nf });
        }
    }
}

/// Bound on the energy of coefficients beyond the tail cut: a coefficient
/// whose support carries mass `m` outside the range satisfies
/// `|beta| <= ||phi_lambda||_inf m`, and each point lies in the support of
/// at most `W` translations of a level (`W` the support width in units).
fn tail_energy_bound(basis: &BiorthBasis<f64>, j0: u32, tail_mass: f64) -> f64 {
    if tail_mass == 0.0 {
        return 0.0;
    }
    let width = |j: i32| {
        let m = basis.mother(j);
        ((m.end_half() - m.start_half()) as f64 / 2.0).ceil()
    };
    let e2 = tail_mass * tail_mass;
    let mut total = basis.sup_phi() * basis.sup_phi() * width(-1) * e2;
    for j in 0..=j0 as i32 {
        total += (j as f64).exp2() * basis.sup_psi() * basis.sup_psi() * width(j) * e2;
    }
    total
}

/// `(sum min(beta^2, V), sum min(beta^2, V ln n))` over `Gamma_n`, truncated
/// to the tail range of `f`.
pub fn oracle_denominators<I: Intensity + ?Sized>(
    f: &I,
    basis: &BiorthBasis<f64>,
    n: u64,
    j0: u32,
    tail_eps: f64,
) -> (f64, f64) {
    let s = TruthSummary::compute(f, basis, j0, &[n], tail_eps);
    (s.denoms[0].oracle_denom, s.denoms[0].oracle_log_denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    /// `sum_{Gamma_n} (beta~ - beta)^2`.
    pub r_n: f64,
    pub oracle_denom: f64,
    pub oracle_log_denom: f64,
    #[serde(rename = "R_n")]
    pub ratio: f64,
    #[serde(rename = "R_n_log")]
    pub ratio_log: f64,
    pub tail_energy: f64,
}

/// Squared error of a thresholded table whose records carry their truth.
///
/// Coefficients without events are not materialized; their error `beta^2`
/// is the enumerated energy minus that of the materialized ones.
pub fn risk_breakdown(table: &CoeffTable<f64>, truth: &TruthSummary) -> Result<RiskBreakdown> {
    let d = truth
        .denoms(table.n)
        .ok_or_else(|| Error::InvalidParameter(format!("no oracle denominators for n={}", table.n)))?;
    let r_n = squared_error(table, truth, |r| r.beta_tilde())?;
    Ok(RiskBreakdown {
        r_n,
        oracle_denom: d.oracle_denom,
        oracle_log_denom: d.oracle_log_denom,
        ratio: r_n / d.oracle_denom,
        ratio_log: r_n / d.oracle_log_denom,
        tail_energy: truth.tail_energy,
    })
}

fn squared_error(
    table: &CoeffTable<f64>,
    truth: &TruthSummary,
    estimate: impl Fn(&crate::estimator::CoeffRecord<f64>) -> f64,
) -> Result<f64> {
    let mut covered = 0.0;
    let mut err = 0.0;
    for r in &table.records {
        let t = r.truth.ok_or(Error::MissingTruth { j: r.lambda.j, k: r.lambda.k })?;
        if truth.contains(r.lambda) {
            covered += t.beta * t.beta;
        }
        let e = estimate(r) - t.beta;
        err += e * e;
    }
    Ok((truth.energy - covered).max(0.0) + err)
}

/// `gamma` at which `eta_{lambda,gamma} = |beta^|` for the simulation form:
/// with `s = sqrt(gamma)`, `a s^2 + b s = |beta^|`,
/// `a = ln n ||phi||_inf / (3n)`, `b = sqrt(2 ln n V^)`.
/// `None` when `beta^ = 0`.
pub fn changepoint(beta_hat: f64, v_hat: f64, sup_norm: f64, n: u64) -> Option<f64> {
    let c = beta_hat.abs();
    if c == 0.0 {
        return None;
    }
    let ln = (n as f64).ln();
    let a = ln * sup_norm / (3.0 * n as f64);
    let b = (2.0 * ln * v_hat).sqrt();
    // rationalised root, stable when b^2 >> a c
    let s = 2.0 * c / (b + (b * b + 4.0 * a * c).sqrt());
    Some(s * s)
}

/// Sorted change points of all materialized coefficients.
pub fn gamma_changepoints(table: &CoeffTable<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = table
        .records
        .iter()
        .filter_map(|r| changepoint(r.beta_hat, r.v_hat, table.sup_norm(r.lambda.j), table.n))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// What one realization contributes to a risk curve: `r_n` with nothing kept
/// and, per materialized coefficient, its change point and the drop
/// `beta^2 - (beta^ - beta)^2` of `r_n` while it is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCurve {
    pub r_inf: f64,
    pub events: Vec<(f64, f64)>,
}

impl RunCurve {
    pub fn from_table(table: &CoeffTable<f64>, truth: &TruthSummary) -> Result<Self> {
        let r_inf = squared_error(table, truth, |_| 0.0)?;
        let mut events = Vec::new();
        for r in &table.records {
            let t = r.truth.ok_or(Error::MissingTruth { j: r.lambda.j, k: r.lambda.k })?;
            if let Some(g) = changepoint(r.beta_hat, r.v_hat, table.sup_norm(r.lambda.j), table.n) {
                let e = r.beta_hat - t.beta;
                events.push((g, t.beta * t.beta - e * e));
            }
        }
        Ok(Self { r_inf, events })
    }

    /// `r_n(gamma)`: a coefficient is kept iff `gamma <= gamma*`.
    pub fn r_n(&self, gamma: f64) -> f64 {
        self.r_inf - self.events.iter().filter(|e| gamma <= e.0).map(|e| e.1).sum::<f64>()
    }
}

/// Right-continuous-from-the-left step function on `(0, inf)`: `values[0]`
/// on `(0, breaks[0]]`, `values[i]` on `(breaks[i-1], breaks[i]]`, and the
/// last value beyond the last break.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepCurve {
    pub fn eval(&self, gamma: f64) -> f64 {
        self.values[self.breaks.partition_point(|&c| c < gamma)]
    }

    /// Leftmost minimizing piece as `(lo, hi, value)`; `lo = 0` for the first.
    pub fn argmin(&self) -> (f64, f64, f64) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        let lo = if best == 0 { 0.0 } else { self.breaks[best - 1] };
        let hi = self.breaks.get(best).copied().unwrap_or(f64::INFINITY);
        (lo, hi, self.values[best])
    }

    /// `gamma_min`: infimum of the leftmost minimizing piece.
    pub fn gamma_min(&self) -> f64 {
        self.argmin().0
    }

    /// `(gamma, value)` at the upper end of every piece; the last piece is
    /// reported at `gamma = inf`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ends = self.breaks.iter().copied().chain(std::iter::once(f64::INFINITY));
        ends.zip(self.values.iter().copied()).collect()
    }

    /// Largest value on `[a, b]`.
    pub fn max_on(&self, a: f64, b: f64) -> f64 {
        let first = self.breaks.partition_point(|&c| c < a);
        let last = self.breaks.partition_point(|&c| c < b);
        self.values[first..=last].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sum with a fixed binary reduction tree, so the result depends only on the
/// order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Streaming mean of `R_n(gamma)` over runs. Drops are merged per distinct
/// change point as runs arrive, so memory follows the number of distinct
/// change points, not the number of events.
#[derive(Debug, Clone, Default)]
pub struct CurveAccumulator {
    r_inf: Vec<f64>,
    drops: BTreeMap<u64, f64>,
}

impl CurveAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn runs(&self) -> usize {
        self.r_inf.len()
    }

    pub fn add(&mut self, run: &RunCurve) {
        self.r_inf.push(run.r_inf);
        for &(g, d) in &run.events {
            // positive finite floats order like their bit patterns
            *self.drops.entry(g.to_bits()).or_insert(0.0) += d;
        }
    }

    /// Mean curve of `r_n / denom`.
    pub fn finish(&self, denom: f64) -> StepCurve {
        let scale = 1.0 / (self.r_inf.len() as f64 * denom);
        let base = pairwise_sum(&self.r_inf) * scale;
        let breaks: Vec<f64> = self.drops.keys().map(|&b| f64::from_bits(b)).collect();
        let drops: Vec<f64> = self.drops.values().copied().collect();
        // the piece ending at breaks[i] keeps every coefficient with gamma* >= breaks[i]
        let mut values = vec![base; breaks.len() + 1];
        let mut suffix = 0.0;
        for i in (0..breaks.len()).rev() {
            suffix += drops[i];
            values[i] = base - suffix * scale;
        }
        StepCurve { breaks, values }
    }
}

/// Mean of `R_n(gamma) = r_n(gamma) / denom` over runs, exact as a step
/// function with a break at every change point of every run.
pub fn mean_ratio_curve(runs: &[RunCurve], denom: f64) -> StepCurve {
    let mut acc = CurveAccumulator::new();
    for r in runs {
        acc.add(r);
    }
    acc.finish(denom)
}
