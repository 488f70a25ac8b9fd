use std::fmt::Write as _;

use serde::Serialize;

use super::plan::ExperimentPlan;
use crate::metrics::{pairwise_sum, OracleDenoms, RiskBreakdown, StepCurve};
use crate::wavelet::BasisKind;

/// Mean and standard error `sd / sqrt(runs)` of a per-run quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean = pairwise_sum(xs) / m;
        if xs.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let sd = (pairwise_sum(&dev) / (m - 1.0)).sqrt();
        Self { mean, se: sd / m.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub signal: String,
    pub basis: BasisKind,
    pub n: u64,
    pub gamma: f64,
    pub run: usize,
    #[serde(flatten)]
    pub risk: RiskBreakdown,
}

/// Aggregate of one `(signal, basis, n, gamma)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub signal: String,
    pub basis: BasisKind,
    pub n: u64,
    pub gamma: f64,
    pub j0: u32,
    pub runs: usize,
    pub r_n: MeanSe,
    #[serde(rename = "R_n")]
    pub ratio: MeanSe,
    #[serde(rename = "R_n_log")]
    pub ratio_log: MeanSe,
    pub oracle_denom: f64,
    pub oracle_log_denom: f64,
    pub tail_energy: f64,
}

/// Mean `R_n(gamma)` curve of one `(signal, basis, n)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub signal: String,
    pub basis: BasisKind,
    pub n: u64,
    pub j0: u32,
    pub runs: usize,
    pub oracle_denom: f64,
    pub tail_energy: f64,
    /// Infimum of the leftmost piece on which the mean curve is minimal.
    pub gamma_min: f64,
    /// Supremum of that piece.
    pub gamma_min_hi: f64,
    pub min_ratio: f64,
    pub ratio_at_1: f64,
    #[serde(skip)]
    pub curve: StepCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub plan: ExperimentPlan,
    #[serde(skip)]
    pub rows: Vec<RunRow>,
    pub cells: Vec<CellSummary>,
    pub curves: Vec<CurveSummary>,
}

impl ExperimentReport {
    pub fn new(plan: ExperimentPlan) -> Self {
        Self { plan, rows: Vec::new(), cells: Vec::new(), curves: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn add_breakdowns(
        &mut self,
        signal: &str,
        basis: BasisKind,
        n: u64,
        j0: u32,
        gammas: &[f64],
        runs: &[Vec<RiskBreakdown>],
        denoms: OracleDenoms,
    ) {
        for (run, per_gamma) in runs.iter().enumerate() {
            for (&gamma, risk) in gammas.iter().zip(per_gamma) {
                self.rows.push(RunRow { signal: signal.to_string(), basis, n, gamma, run, risk: *risk });
            }
        }
        for (gi, &gamma) in gammas.iter().enumerate() {
            let col = |f: fn(&RiskBreakdown) -> f64| MeanSe::of(&runs.iter().map(|r| f(&r[gi])).collect::<Vec<_>>());
            self.cells.push(CellSummary {
                signal: signal.to_string(),
                basis,
                n,
                gamma,
                j0,
                runs: runs.len(),
                r_n: col(|r| r.r_n),
                ratio: col(|r| r.ratio),
                ratio_log: col(|r| r.ratio_log),
                oracle_denom: denoms.oracle_denom,
                oracle_log_denom: denoms.oracle_log_denom,
                tail_energy: runs.first().map(|r| r[gi].tail_energy).unwrap_or(0.0),
            });
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn add_curve(
        &mut self,
        signal: &str,
        basis: BasisKind,
        n: u64,
        j0: u32,
        runs: usize,
        curve: StepCurve,
        denoms: OracleDenoms,
        tail_energy: f64,
    ) {
        let (lo, hi, v) = curve.argmin();
        self.curves.push(CurveSummary {
            signal: signal.to_string(),
            basis,
            n,
            j0,
            runs,
            oracle_denom: denoms.oracle_denom,
            tail_energy,
            gamma_min: lo,
            gamma_min_hi: hi,
            min_ratio: v,
            ratio_at_1: curve.eval(1.0),
            curve,
        });
    }

    pub fn cell(&self, signal: &str, basis: BasisKind, n: u64, gamma: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.signal == signal && c.basis == basis && c.n == n && c.gamma == gamma)
    }

    pub fn curve(&self, signal: &str, basis: BasisKind, n: u64) -> Option<&CurveSummary> {
        self.curves.iter().find(|c| c.signal == signal && c.basis == basis && c.n == n)
    }

    /// One row per `(signal, basis, n, gamma, run)`.
    pub fn breakdown_csv(&self) -> String {
        let mut s = String::from("signal,basis,n,gamma,run,r_n,R_n,R_n_log,tail_energy\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.signal, r.basis, r.n, r.gamma, r.run, r.risk.r_n, r.risk.ratio, r.risk.ratio_log, r.risk.tail_energy
            );
        }
        s
    }

    /// One row per cell with means and standard errors.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "signal,basis,n,gamma,j0,runs,mean_r_n,se_r_n,mean_R_n,se_R_n,mean_R_n_log,se_R_n_log,oracle_denom,oracle_log_denom,tail_energy\n",
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.signal,
                c.basis,
                c.n,
                c.gamma,
                c.j0,
                c.runs,
                c.r_n.mean,
                c.r_n.se,
                c.ratio.mean,
                c.ratio.se,
                c.ratio_log.mean,
                c.ratio_log.se,
                c.oracle_denom,
                c.oracle_log_denom,
                c.tail_energy
            );
        }
        s
    }

    /// Mean curves: the value on each piece is reported at its upper end.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("signal,basis,n,gamma,mean_R_n,runs\n");
        for c in &self.curves {
            for (g, v) in c.curve.points() {
                let _ = writeln!(s, "{},{},{},{},{},{}", c.signal, c.basis, c.n, g, v, c.runs);
            }
        }
        s
    }

    /// `gamma_min` and the curve value at 1 for every curve.
    pub fn gamma_min_csv(&self) -> String {
        let mut s = String::from("signal,basis,n,j0,runs,gamma_min,gamma_min_hi,min_mean_R_n,mean_R_n_at_1,oracle_denom\n");
        for c in &self.curves {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                c.signal, c.basis, c.n, c.j0, c.runs, c.gamma_min, c.gamma_min_hi, c.min_ratio, c.ratio_at_1, c.oracle_denom
            );
        }
        s
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
