use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{default_j0, ThresholdVariant};
use crate::signals::SignalId;
use crate::wavelet::BasisKind;

/// Finest level of `Gamma_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum J0Policy {
    /// `floor(log2 n)`.
    Log2N,
    Fixed(u32),
}

impl J0Policy {
    pub fn resolve(self, n: u64) -> u32 {
        match self {
            J0Policy::Log2N => default_j0(n),
            J0Policy::Fixed(j) => j,
        }
    }

    pub fn token(self) -> String {
        match self {
            J0Policy::Log2N => "log2n".into(),
            J0Policy::Fixed(j) => j.to_string(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("log2n") {
            return Ok(J0Policy::Log2N);
        }
        s.parse()
            .map(J0Policy::Fixed)
            .map_err(|_| Error::InvalidParameter(format!("j0 must be an integer or `log2n`, got `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GammaGrid {
    List(Vec<f64>),
    /// Exact mean curves over all change points.
    Changepoints,
}

/// Fully determines the output of [`super::run_plan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub signals: Vec<SignalId>,
    pub bases: Vec<BasisKind>,
    pub ns: Vec<u64>,
    pub gammas: GammaGrid,
    pub runs: usize,
    pub j0: J0Policy,
    pub variant: ThresholdVariant,
    pub master_seed: u64,
    pub tail_eps: f64,
}

/// Number of runs averaged in a table cell.
pub const TABLE1_RUNS: usize = 100;
/// Number of runs averaged in a `gamma` sweep.
pub const SWEEP_RUNS: usize = 1000;
/// Finest level used for the table.
pub const TABLE1_J0: u32 = 10;
pub const TABLE1_NS: [u64; 4] = [64, 256, 1024, 4096];
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

impl ExperimentPlan {
    /// Table preset: `gamma = 1`, `j0 = 10`, 100 runs, simulation threshold.
    pub fn table1(signals: Vec<SignalId>, bases: Vec<BasisKind>, ns: Vec<u64>, master_seed: u64) -> Self {
        Self {
            signals,
            bases,
            ns,
            gammas: GammaGrid::List(vec![1.0]),
            runs: TABLE1_RUNS,
            j0: J0Policy::Fixed(TABLE1_J0),
            variant: ThresholdVariant::SimulationForm,
            master_seed,
            tail_eps: DEFAULT_TAIL_EPS,
        }
    }

    /// Sweep preset: change-point curves, `j0 = floor(log2 n)`, 1000 runs.
    pub fn sweep(signals: Vec<SignalId>, bases: Vec<BasisKind>, ns: Vec<u64>, master_seed: u64) -> Self {
        Self {
            signals,
            bases,
            ns,
            gammas: GammaGrid::Changepoints,
            runs: SWEEP_RUNS,
            j0: J0Policy::Log2N,
            variant: ThresholdVariant::SimulationForm,
            master_seed,
            tail_eps: DEFAULT_TAIL_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.signals.is_empty() || self.bases.is_empty() || self.ns.is_empty() {
            return bad("plan needs at least one signal, basis and n".into());
        }
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if let Some(n) = self.ns.iter().find(|&&n| n < 2) {
            return bad(format!("n must be >= 2, got {n}"));
        }
        if self.tail_eps.is_nan() || self.tail_eps < 0.0 {
            return bad(format!("tail_eps must be >= 0, got {}", self.tail_eps));
        }
        match &self.gammas {
            GammaGrid::List(g) if g.is_empty() => bad("gamma list is empty".into()),
            GammaGrid::List(g) if g.iter().any(|&x| !(x > 0.0 && x.is_finite())) => bad("gamma values must be positive".into()),
            GammaGrid::Changepoints if self.variant != ThresholdVariant::SimulationForm => {
                bad("change-point sweeps need the simulation threshold".into())
            }
            _ => Ok(()),
        }
    }

    /// Parses `key=value` lines; `#` starts a comment. Lists are comma
    /// separated. Keys: `signals`, `bases`, `n`, `gamma` (list or
    /// `changepoints`), `runs`, `j0` (integer or `log2n`), `variant`, `seed`,
    /// `tail_eps`. Missing keys take the table defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = Self::table1(vec![], vec![], TABLE1_NS.to_vec(), 0);
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Plan { line: line_no, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let items = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            let num_err = |e: std::num::ParseIntError| err(format!("{key}: {e}"));
            let float_err = |e: std::num::ParseFloatError| err(format!("{key}: {e}"));
            match key {
                "signals" => plan.signals = items().map(str::parse).collect::<Result<_>>().map_err(|e| err(e.to_string()))?,
                "bases" => plan.bases = items().map(str::parse).collect::<Result<_>>().map_err(|e| err(e.to_string()))?,
                "n" => plan.ns = items().map(str::parse).collect::<std::result::Result<_, _>>().map_err(num_err)?,
                "gamma" => {
                    plan.gammas = if value.eq_ignore_ascii_case("changepoints") {
                        GammaGrid::Changepoints
                    } else {
                        GammaGrid::List(items().map(str::parse).collect::<std::result::Result<_, _>>().map_err(float_err)?)
                    }
                }
                "runs" => plan.runs = value.parse().map_err(num_err)?,
                "j0" => plan.j0 = J0Policy::parse(value).map_err(|e| err(e.to_string()))?,
                "variant" => plan.variant = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "seed" => plan.master_seed = value.parse().map_err(num_err)?,
                "tail_eps" => plan.tail_eps = value.parse().map_err(float_err)?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    /// The plan in the format read by [`ExperimentPlan::parse`], on one line
    /// with `; ` separators.
    pub fn manifest(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let gamma = match &self.gammas {
            GammaGrid::List(g) => join(g.iter().map(|x| x.to_string()).collect()),
            GammaGrid::Changepoints => "changepoints".into(),
        };
        let mut s = String::new();
        let _ = write!(
            s,
            "signals={}; bases={}; n={}; gamma={}; runs={}; j0={}; variant={}; seed={}; tail_eps={}",
            join(self.signals.iter().map(|x| x.to_string()).collect()),
            join(self.bases.iter().map(|x| x.to_string()).collect()),
            join(self.ns.iter().map(|x| x.to_string()).collect()),
            gamma,
            self.runs,
            self.j0.token(),
            self.variant,
            self.master_seed,
            self.tail_eps
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips_through_manifest() {
        let text = "# sweep\nsignals = haar1, bumps\nbases=haar\nn=64,128\ngamma=changepoints\nruns=10 # few\nj0=log2n\nseed=5\n";
        let plan = ExperimentPlan::parse(text).unwrap();
        assert_eq!(plan.signals, vec![SignalId::Haar1, SignalId::Bumps]);
        assert_eq!(plan.gammas, GammaGrid::Changepoints);
        assert_eq!(plan.j0, J0Policy::Log2N);
        let again = ExperimentPlan::parse(&plan.manifest().replace("; ", "\n")).unwrap();
        assert_eq!(plan, again);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = ExperimentPlan::parse("signals=haar1\nbases=haar\nfoo=1\n").unwrap_err();
        assert!(matches!(err, Error::Plan { line: 3, .. }), "{err}");
        assert!(ExperimentPlan::parse("signals=sine\nbases=haar").is_err());
        assert!(ExperimentPlan::parse("signals=haar1\nbases=haar\nruns=0").is_err());
        assert!(ExperimentPlan::parse("signals=haar1\nbases=haar\ngamma=changepoints\nvariant=theorem").is_err());
    }
}
