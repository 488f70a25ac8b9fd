//! Calibration experiments around `gamma = 1`.

use serde::Serialize;

use super::plan::{ExperimentPlan, GammaGrid, J0Policy, DEFAULT_TAIL_EPS};
use super::report::MeanSe;
use super::{check_tail, run_plan, thread_pool, Cell};
use crate::error::Result;
use crate::estimator::{default_j0, ThresholdVariant};
use crate::metrics::{RiskBreakdown, TruthSummary};
use crate::signals::{uppth_feasible_level, SignalKind, SignalSpec, SignalId};
use crate::wavelet::BasisKind;

/// Mean `r_n` of the uniform signal at one `(n, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundRow {
    pub n: u64,
    pub gamma: f64,
    pub r_n: MeanSe,
    /// `mean r_n * n^0.6`.
    pub scaled_slow: f64,
    /// `mean r_n * n / ln n`.
    pub scaled_fast: f64,
}

/// `1_[0,1]` in the Haar basis with the simulation threshold and
/// `j0 = floor(log2 n)`: below `gamma = 1` the risk decays markedly slower
/// than `ln n / n`.
pub fn lower_bound_probe(
    ns: &[u64],
    gammas: &[f64],
    runs: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<LowerBoundRow>> {
    let plan = ExperimentPlan {
        signals: vec![SignalId::Haar1],
        bases: vec![BasisKind::Haar],
        ns: ns.to_vec(),
        gammas: GammaGrid::List(gammas.to_vec()),
        runs,
        j0: J0Policy::Log2N,
        variant: ThresholdVariant::SimulationForm,
        master_seed,
        tail_eps: DEFAULT_TAIL_EPS,
    };
    let report = run_plan(&plan, workers)?;
    Ok(report
        .cells
        .iter()
        .map(|c| {
            let nf = c.n as f64;
            LowerBoundRow {
                n: c.n,
                gamma: c.gamma,
                r_n: c.r_n,
                scaled_slow: c.r_n.mean * nf.powf(0.6),
                scaled_fast: c.r_n.mean * nf / nf.ln(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UppthRow {
    pub gamma: f64,
    pub r_n: MeanSe,
    pub ratio: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UppthReport {
    pub n: u64,
    pub gamma_min: f64,
    /// Largest `gamma` of the probe; it sets the bump coefficient.
    pub gamma_max: f64,
    pub level: u32,
    pub coeff: f64,
    pub j0: u32,
    pub oracle_denom: f64,
    pub variant: ThresholdVariant,
    pub rows: Vec<UppthRow>,
}

impl UppthReport {
    pub fn row(&self, gamma: f64) -> Option<&UppthRow> {
        self.rows.iter().find(|r| r.gamma == gamma)
    }

    /// `(ratio(a) - ratio(b)) / sqrt(se_a^2 + se_b^2)`.
    pub fn z_score(&self, a: f64, b: f64) -> Option<f64> {
        let (ra, rb) = (self.row(a)?, self.row(b)?);
        let se = (ra.ratio.se * ra.ratio.se + rb.ratio.se * rb.ratio.se).sqrt();
        Some((ra.ratio.mean - rb.ratio.mean) / se)
    }
}

/// Oracle ratios on the adversarial signal built for `max(gammas)`.
///
/// `level = None` picks the largest level not above the default choice at
/// which the signal is a nonnegative density.
#[allow(clippy::too_many_arguments)]
pub fn uppth_probe(
    n: u64,
    gamma_min: f64,
    gammas: &[f64],
    level: Option<u32>,
    variant: ThresholdVariant,
    runs: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<UppthReport> {
    let gamma_max = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let level = match level {
        Some(l) => l,
        None => uppth_feasible_level(n, gamma_max, gamma_min)?,
    };
    let spec = SignalSpec::uppth_at_level(n, gamma_max, gamma_min, level)?;
    let SignalKind::UppthAdversary { coeff, .. } = spec.kind() else { unreachable!("adversarial signal") };
    let basis = BasisKind::Haar.basis();
    let j0 = default_j0(n);
    thread_pool(workers)?.install(|| {
        let truth = TruthSummary::compute(&spec, &basis, j0, &[n], DEFAULT_TAIL_EPS);
        check_tail(&truth, n, &spec.token())?;
        let cell = Cell { spec: &spec, basis: &basis, n, j0, truth: &truth };
        let b = cell.breakdowns(gammas, variant, runs, master_seed)?;
        let rows = gammas
            .iter()
            .enumerate()
            .map(|(gi, &gamma)| {
                let col = |f: fn(&RiskBreakdown) -> f64| MeanSe::of(&b.iter().map(|r| f(&r[gi])).collect::<Vec<_>>());
                UppthRow { gamma, r_n: col(|r| r.r_n), ratio: col(|r| r.ratio) }
            })
            .collect();
        Ok(UppthReport {
            n,
            gamma_min,
            gamma_max,
            level,
            coeff,
            j0,
            oracle_denom: truth.denoms(n).expect("denominator").oracle_denom,
            variant,
            rows,
        })
    })
}
