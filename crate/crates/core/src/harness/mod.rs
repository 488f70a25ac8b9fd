//! Seeded, parallel Monte-Carlo experiments.
//!
//! A cell is one `(signal, basis, n)` combination. Its truth (coefficients
//! and oracle denominators) is computed once; runs are then sampled with
//! child seeds (see [`seed`]), evaluated in parallel, collected in run order
//! and reduced with a fixed summation tree, so no output depends on the
//! number of workers.

mod plan;
mod probes;
mod report;
pub mod seed;

use rayon::prelude::*;

pub use plan::{
    ExperimentPlan, GammaGrid, J0Policy, DEFAULT_TAIL_EPS, SWEEP_RUNS, TABLE1_J0, TABLE1_NS, TABLE1_RUNS,
};
pub use probes::{lower_bound_probe, uppth_probe, LowerBoundRow, UppthReport, UppthRow};
pub use report::{CellSummary, CurveSummary, ExperimentReport, MeanSe, RunRow};

use crate::error::{Error, Result};
use crate::estimator::{accumulate, ThresholdVariant};
use crate::metrics::{risk_breakdown, CurveAccumulator, RiskBreakdown, RunCurve, StepCurve, TruthSummary};
use crate::signals::{sample, SignalSpec};
use crate::wavelet::BiorthBasis;
pub use crate::metrics::pairwise_sum;

/// Largest allowed `tail_energy / oracle_denom`.
pub const TAIL_ENERGY_GUARD: f64 = 1e-6;

/// Runs evaluated between two merges into a curve accumulator.
const CURVE_BATCH: usize = 64;

/// Builds the worker pool; `None` uses every available core.
pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    b.build().map_err(|e| Error::ThreadPool(e.to_string()))
}

/// Fails when the energy left out by the tail cut is not negligible.
pub fn check_tail(truth: &TruthSummary, n: u64, cell: &str) -> Result<()> {
    let d = truth.denoms(n).map(|d| d.oracle_denom).unwrap_or(0.0);
    if truth.tail_energy > TAIL_ENERGY_GUARD * d {
        return Err(Error::TailEnergy { cell: cell.to_string(), tail_energy: truth.tail_energy, oracle_denom: d });
    }
    Ok(())
}

/// One cell of an experiment.
pub struct Cell<'a> {
    pub spec: &'a SignalSpec,
    pub basis: &'a BiorthBasis<f64>,
    pub n: u64,
    pub j0: u32,
    pub truth: &'a TruthSummary,
}

pub enum CellOutput {
    /// `[run][gamma]`.
    Breakdowns(Vec<Vec<RiskBreakdown>>),
    Curve(StepCurve, usize),
}

impl Cell<'_> {
    fn one_run(&self, seed: crate::signals::SeedSpec) -> Result<crate::CoeffTable> {
        let pts = sample(self.spec, self.n, seed)?;
        let mut table = accumulate(&pts, self.basis, self.j0 as i32)?;
        self.truth.attach_truth(&mut table, self.spec, self.basis);
        Ok(table)
    }

    fn seed(&self, master: u64, run: usize) -> crate::signals::SeedSpec {
        seed::child_seed(master, self.spec.kind().seed_code(), self.basis.kind() as u64, self.n, run as u64)
    }

    /// Thresholds every run at each `gamma`.
    pub fn breakdowns(
        &self,
        gammas: &[f64],
        variant: ThresholdVariant,
        runs: usize,
        master: u64,
    ) -> Result<Vec<Vec<RiskBreakdown>>> {
        (0..runs)
            .into_par_iter()
            .map(|run| {
                let mut table = self.one_run(self.seed(master, run))?;
                gammas
                    .iter()
                    .map(|&g| {
                        table.apply_threshold(g, variant);
                        risk_breakdown(&table, self.truth)
                    })
                    .collect()
            })
            .collect()
    }

    /// Exact mean curve of `R_n(gamma)` (simulation threshold).
    pub fn curve(&self, runs: usize, master: u64) -> Result<StepCurve> {
        let denom = self
            .truth
            .denoms(self.n)
            .ok_or_else(|| Error::InvalidParameter(format!("no denominators for n={}", self.n)))?
            .oracle_denom;
        let mut acc = CurveAccumulator::new();
        let mut start = 0;
        while start < runs {
            let end = (start + CURVE_BATCH).min(runs);
            let batch: Vec<RunCurve> = (start..end)
                .into_par_iter()
                .map(|run| RunCurve::from_table(&self.one_run(self.seed(master, run))?, self.truth))
                .collect::<Result<_>>()?;
            for r in &batch {
                acc.add(r);
            }
            start = end;
        }
        Ok(acc.finish(denom))
    }
}

/// Runs every cell of the plan on a pool of `workers` threads (`None`: all
/// cores).
pub fn run_plan(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentReport> {
    plan.validate()?;
    thread_pool(workers)?.install(|| run_plan_inner(plan))
}

fn run_plan_inner(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(plan.clone());
    for &signal in &plan.signals {
        let spec = signal.spec();
        for &kind in &plan.bases {
            let basis = kind.basis();
            // one truth pass per distinct j0
            let mut truths: Vec<(u32, TruthSummary)> = Vec::new();
            for &n in &plan.ns {
                let j0 = plan.j0.resolve(n);
                if !truths.iter().any(|(j, _)| *j == j0) {
                    let ns: Vec<u64> = plan.ns.iter().copied().filter(|&m| plan.j0.resolve(m) == j0).collect();
                    truths.push((j0, TruthSummary::compute(&spec, &basis, j0, &ns, plan.tail_eps)));
                }
            }
            for &n in &plan.ns {
                let j0 = plan.j0.resolve(n);
                let truth = &truths.iter().find(|(j, _)| *j == j0).expect("truth computed").1;
                let label = format!("{signal}/{kind}/n={n}");
                check_tail(truth, n, &label)?;
                let cell = Cell { spec: &spec, basis: &basis, n, j0, truth };
                let denoms = truth.denoms(n).expect("denominators computed");
                match &plan.gammas {
                    GammaGrid::List(gammas) => {
                        let b = cell.breakdowns(gammas, plan.variant, plan.runs, plan.master_seed)?;
                        report.add_breakdowns(&spec.token(), kind, n, j0, gammas, &b, denoms);
                    }
                    GammaGrid::Changepoints => {
                        let curve = cell.curve(plan.runs, plan.master_seed)?;
                        report.add_curve(&spec.token(), kind, n, j0, plan.runs, curve, denoms, truth.tail_energy);
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Change-point sweep of one plan; alias of [`run_plan`] that insists on the
/// curve mode.
pub fn sweep_gamma(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentReport> {
    if plan.gammas != GammaGrid::Changepoints {
        return Err(Error::InvalidParameter("sweep_gamma needs gamma=changepoints".into()));
    }
    run_plan(plan, workers)
}
