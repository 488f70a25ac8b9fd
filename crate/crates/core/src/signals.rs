//! Benchmark intensities and Poisson process sampling.
//!
//! A Poisson process with intensity `n * f` is observed; `f` is the target.
//! Every catalogue signal carries a closed-form density and CDF so that true
//! wavelet coefficients are exact CDF differences.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of teeth kept for the `comb` signal; the omitted mass is `2^-50`.
pub const COMB_TERMS: u32 = 50;

const BLOCKS_POS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.4, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCKS_HEIGHT: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BLOCKS_NORM: f64 = 3.551;
const BUMPS_HEIGHT: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMPS_WIDTH: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];
const BUMPS_NORM: f64 = 0.284;

/// Anything with a density and an exact way to integrate it over intervals.
pub trait Intensity: Sync {
    fn density(&self, x: f64) -> f64;

    /// `int_{-inf}^x f`.
    fn cdf(&self, x: f64) -> f64;

    /// `int_a^b f`, computed without the cancellation of `cdf(b) - cdf(a)`
    /// wherever the closed form allows it.
    fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            0.0
        } else {
            self.cdf(b) - self.cdf(a)
        }
    }

    fn mass(&self) -> f64;

    /// Interval outside of which at most `eps` of the mass lies.
    fn tail_range(&self, eps: f64) -> (f64, f64);
}

/// Catalogue of the nine benchmark intensities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignalId {
    Haar1,
    Haar2,
    Blocks,
    Comb,
    Gauss1,
    Gauss2,
    Beta05,
    Beta4,
    Bumps,
}

impl SignalId {
    pub const ALL: [SignalId; 9] = [
        SignalId::Haar1,
        SignalId::Haar2,
        SignalId::Blocks,
        SignalId::Comb,
        SignalId::Gauss1,
        SignalId::Gauss2,
        SignalId::Beta05,
        SignalId::Beta4,
        SignalId::Bumps,
    ];

    pub fn token(self) -> &'static str {
        match self {
            SignalId::Haar1 => "haar1",
            SignalId::Haar2 => "haar2",
            SignalId::Blocks => "blocks",
            SignalId::Comb => "comb",
            SignalId::Gauss1 => "gauss1",
            SignalId::Gauss2 => "gauss2",
            SignalId::Beta05 => "beta05",
            SignalId::Beta4 => "beta4",
            SignalId::Bumps => "bumps",
        }
    }

    pub fn valid_tokens() -> String {
        Self::ALL.iter().map(|s| s.token()).collect::<Vec<_>>().join(", ")
    }

    pub fn spec(self) -> SignalSpec {
        SignalSpec::catalog(self)
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SignalId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.token() == lower)
            .ok_or_else(|| Error::UnknownToken { kind: "signal", token: s.to_string(), valid: Self::valid_tokens() })
    }
}

/// Identity of a signal: a catalogue entry or the adversarial construction
/// `1_[0,1] + c * sum_k psi_{j,k}` used to probe large `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SignalKind {
    Catalog(SignalId),
    UppthAdversary { n: u64, gamma: f64, gamma_min: f64, level: u32, coeff: f64 },
}

impl SignalKind {
    pub fn token(&self) -> String {
        match self {
            SignalKind::Catalog(id) => id.token().to_string(),
            SignalKind::UppthAdversary { level, .. } => format!("uppth-j{level}"),
        }
    }

    /// Stable code mixed into child seeds.
    pub fn seed_code(&self) -> u64 {
        match self {
            SignalKind::Catalog(id) => *id as u64,
            SignalKind::UppthAdversary { level, .. } => 0x100 + *level as u64,
        }
    }
}

/// Piecewise-constant density on consecutive intervals `[b_i, b_{i+1})`.
#[derive(Debug, Clone)]
struct StepDensity {
    breaks: Vec<f64>,
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl StepDensity {
    fn new(breaks: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(breaks.len(), values.len() + 1);
        let mut cum = Vec::with_capacity(breaks.len());
        cum.push(0.0);
        for (i, v) in values.iter().enumerate() {
            let last = *cum.last().unwrap();
            cum.push(last + v * (breaks[i + 1] - breaks[i]));
        }
        Self { breaks, values, cum }
    }

    fn lo(&self) -> f64 {
        self.breaks[0]
    }

    fn hi(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    /// Index of the piece containing `x`, assuming `lo <= x < hi`.
    fn piece(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b <= x) - 1
    }

    fn density(&self, x: f64) -> f64 {
        if x < self.lo() || x >= self.hi() {
            return 0.0;
        }
        self.values[self.piece(x)]
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return 0.0;
        }
        if x >= self.hi() {
            return *self.cum.last().unwrap();
        }
        let i = self.piece(x);
        self.cum[i] + self.values[i] * (x - self.breaks[i])
    }

    fn mass_between(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo());
        let b = b.min(self.hi());
        if b <= a {
            return 0.0;
        }
        let ia = self.piece(a);
        let ib = if b >= self.hi() { self.values.len() - 1 } else { self.piece(b) };
        if ia == ib {
            return self.values[ia] * (b - a);
        }
        let head = self.values[ia] * (self.breaks[ia + 1] - a);
        let tail = self.values[ib] * (b - self.breaks[ib]);
        let middle = if ib - ia > 64 {
            self.cum[ib] - self.cum[ia + 1]
        } else {
            (ia + 1..ib).map(|i| self.values[i] * (self.breaks[i + 1] - self.breaks[i])).sum()
        };
        head + middle + tail
    }

    fn inverse(&self, u: f64) -> f64 {
        let total = *self.cum.last().unwrap();
        let u = u.clamp(0.0, total);
        let i = self.cum[1..].partition_point(|&c| c <= u).min(self.values.len() - 1);
        let x = self.breaks[i] + (u - self.cum[i]) / self.values[i];
        x.clamp(self.breaks[i], self.breaks[i + 1])
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Step(StepDensity),
    /// Weighted normal components `(weight, mean, sd)`.
    Gaussian(Vec<(f64, f64, f64)>),
    /// `0.5 x^{-1/2}` on `(0, 1]`.
    SqrtSingular,
    /// `3 x^{-4}` on `[1, inf)`.
    PowerTail,
    /// `sum_i g_i (1 + |x - p_i| / w_i)^{-4}` on `[0, 1]`, divided by `norm`.
    Bumps { terms: Vec<(f64, f64, f64)>, norm: f64 },
}

/// A benchmark intensity: closed-form density, CDF and total mass.
#[derive(Debug, Clone)]
pub struct SignalSpec {
    kind: SignalKind,
    shape: Shape,
    mass: f64,
}

fn std_normal_upper(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

fn normal_mass(za: f64, zb: f64) -> f64 {
    if za >= 0.0 {
        std_normal_upper(za) - std_normal_upper(zb)
    } else if zb <= 0.0 {
        std_normal_upper(-zb) - std_normal_upper(-za)
    } else {
        1.0 - std_normal_upper(zb) - std_normal_upper(-za)
    }
}

/// Antiderivative of `(1 + |t|)^{-4}` vanishing at 0.
fn bump_antiderivative(t: f64) -> f64 {
    let mag = (1.0 - (1.0 + t.abs()).powi(-3)) / 3.0;
    if t < 0.0 {
        -mag
    } else {
        mag
    }
}

impl SignalSpec {
    pub fn catalog(id: SignalId) -> Self {
        let shape = match id {
            SignalId::Haar1 => Shape::Step(StepDensity::new(vec![0.0, 1.0], vec![1.0])),
            SignalId::Haar2 => Shape::Step(StepDensity::new(vec![0.0, 0.125, 0.25, 1.0], vec![1.5, 0.5, 1.0])),
            SignalId::Blocks => {
                let mut breaks = vec![0.0];
                breaks.extend_from_slice(&BLOCKS_POS);
                breaks.push(1.0);
                let mut level = 2.0;
                let mut values = vec![level / BLOCKS_NORM];
                for h in BLOCKS_HEIGHT {
                    level += h;
                    values.push(level / BLOCKS_NORM);
                }
                Shape::Step(StepDensity::new(breaks, values))
            }
            SignalId::Comb => {
                let mut breaks = Vec::new();
                let mut values = Vec::new();
                for k in 1..=COMB_TERMS {
                    let kf = k as f64;
                    breaks.push(kf * kf / 32.0);
                    values.push(32.0 / (kf * 2f64.powi(k as i32)));
                    breaks.push((kf * kf + kf) / 32.0);
                    if k < COMB_TERMS {
                        values.push(0.0);
                    }
                }
                Shape::Step(StepDensity::new(breaks, values))
            }
            SignalId::Gauss1 => Shape::Gaussian(vec![(1.0, 0.5, 0.25)]),
            SignalId::Gauss2 => Shape::Gaussian(vec![(0.25, 0.5, 0.25), (0.75, 5.0, 0.25)]),
            SignalId::Beta05 => Shape::SqrtSingular,
            SignalId::Beta4 => Shape::PowerTail,
            SignalId::Bumps => Shape::Bumps {
                terms: (0..11).map(|i| (BUMPS_HEIGHT[i], BLOCKS_POS[i], BUMPS_WIDTH[i])).collect(),
                norm: BUMPS_NORM,
            },
        };
        Self::from_shape(SignalKind::Catalog(id), shape)
    }

    fn from_shape(kind: SignalKind, shape: Shape) -> Self {
        let mut spec = Self { kind, shape, mass: 0.0 };
        spec.mass = spec.compute_mass();
        spec
    }

    fn compute_mass(&self) -> f64 {
        match &self.shape {
            Shape::Step(s) => *s.cum.last().unwrap(),
            Shape::Gaussian(comps) => comps.iter().map(|c| c.0).sum(),
            Shape::SqrtSingular | Shape::PowerTail => 1.0,
            Shape::Bumps { .. } => self.mass_between(0.0, 1.0),
        }
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn token(&self) -> String {
        self.kind.token()
    }

    /// `||f||_1`. Equals 1 for the catalogue up to the rounding of the
    /// published normalising constants of `blocks` and `bumps`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn support_lo(&self) -> f64 {
        match &self.shape {
            Shape::Step(s) => s.lo(),
            Shape::Gaussian(_) => f64::NEG_INFINITY,
            Shape::SqrtSingular | Shape::Bumps { .. } => 0.0,
            Shape::PowerTail => 1.0,
        }
    }

    pub fn support_hi(&self) -> f64 {
        match &self.shape {
            Shape::Step(s) => s.hi(),
            Shape::Gaussian(_) | Shape::PowerTail => f64::INFINITY,
            Shape::SqrtSingular | Shape::Bumps { .. } => 1.0,
        }
    }

    /// Upper cut `X` with `mass - F(X) <= eps`.
    pub fn tail_cut(&self, eps: f64) -> f64 {
        match &self.shape {
            Shape::PowerTail => eps.max(f64::MIN_POSITIVE).powf(-1.0 / 3.0).max(1.0),
            Shape::Gaussian(comps) => {
                let z = Self::normal_quantile_upper(eps / comps.len() as f64);
                comps.iter().map(|&(_, m, s)| m + s * z).fold(f64::NEG_INFINITY, f64::max)
            }
            _ => self.support_hi(),
        }
    }

    /// `z` such that the standard normal upper tail beyond `z` is `<= p`.
    fn normal_quantile_upper(p: f64) -> f64 {
        if p >= 0.5 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_upper(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Inverse of the unnormalised CDF: `x` with `F(x) = u`, `0 <= u < mass`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Step(s) => s.inverse(u),
            Shape::SqrtSingular => {
                let u = u.clamp(0.0, 1.0);
                u * u
            }
            Shape::PowerTail => (1.0 - u.clamp(0.0, 1.0)).max(f64::MIN_POSITIVE).powf(-1.0 / 3.0),
            Shape::Gaussian(comps) => {
                let lo = comps.iter().map(|&(_, m, s)| m - 40.0 * s).fold(f64::INFINITY, f64::min);
                let hi = comps.iter().map(|&(_, m, s)| m + 40.0 * s).fold(f64::NEG_INFINITY, f64::max);
                self.solve_cdf(u, lo, hi)
            }
            Shape::Bumps { .. } => self.solve_cdf(u, 0.0, 1.0),
        }
    }

    /// Safeguarded Newton on the monotone CDF, bracket shrunk to `1e-12`.
    fn solve_cdf(&self, u: f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut x = 0.5 * (lo + hi);
        for _ in 0..300 {
            let fx = self.cdf(x) - u;
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= 1e-12 {
                break;
            }
            let d = self.density(x);
            let newton = if d > 0.0 { x - fx / d } else { f64::NAN };
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 1e-13 * x.abs().max(1.0) {
                x = next;
                break;
            }
            x = next;
        }
        x
    }

    /// Adversarial intensity for large `gamma` at the level selected with
    /// `n / (ln n)^2 < 2^j <= 2 n / (ln n)^2`.
    pub fn uppth(n: u64, gamma: f64, gamma_min: f64) -> Result<Self> {
        check_uppth(n, gamma, gamma_min)?;
        let level = uppth_default_level(n)?;
        Self::uppth_at_level(n, gamma, gamma_min, level)
    }

    /// Same construction at an explicit level `j`.
    pub fn uppth_at_level(n: u64, gamma: f64, gamma_min: f64, level: u32) -> Result<Self> {
        check_uppth(n, gamma, gamma_min)?;
        let coeff = uppth_coefficient(n, gamma, gamma_min);
        let bump = coeff * 2f64.powf(level as f64 / 2.0);
        if bump > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "adversarial signal at level {level} has negative density (bump height {bump:.4} > 1)"
            )));
        }
        let cells = 1usize << level;
        let width = 1.0 / cells as f64;
        let mut breaks = Vec::with_capacity(2 * cells + 1);
        let mut values = Vec::with_capacity(2 * cells);
        for k in 0..cells {
            breaks.push(k as f64 * width);
            breaks.push((k as f64 + 0.5) * width);
            values.push(1.0 + bump);
            values.push(1.0 - bump);
        }
        breaks.push(1.0);
        let kind = SignalKind::UppthAdversary { n, gamma, gamma_min, level, coeff };
        Ok(Self::from_shape(kind, Shape::Step(StepDensity::new(breaks, values))))
    }
}

fn check_uppth(n: u64, gamma: f64, gamma_min: f64) -> Result<()> {
    if n < 16 {
        return Err(Error::InvalidParameter(format!("adversarial signal needs n >= 16, got {n}")));
    }
    if !(gamma > gamma_min && gamma_min > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "adversarial signal needs gamma > gamma_min > 1, got gamma={gamma}, gamma_min={gamma_min}"
        )));
    }
    Ok(())
}

/// Coefficient `sqrt(2 (sqrt(gamma) - sqrt(gamma_min))^2 ln n / n)` of the
/// adversarial bumps.
pub fn uppth_coefficient(n: u64, gamma: f64, gamma_min: f64) -> f64 {
    let nf = n as f64;
    let gap = gamma.sqrt() - gamma_min.sqrt();
    (2.0 * gap * gap * nf.ln() / nf).sqrt()
}

/// Largest `j` with `2^j <= 2n / (ln n)^2`.
pub fn uppth_default_level(n: u64) -> Result<u32> {
    let nf = n as f64;
    let bound = 2.0 * nf / nf.ln().powi(2);
    if bound < 1.0 {
        return Err(Error::InvalidParameter(format!("no admissible adversarial level for n={n}")));
    }
    Ok(bound.log2().floor() as u32)
}

/// Largest level not above [`uppth_default_level`] at which the adversarial
/// density stays nonnegative.
pub fn uppth_feasible_level(n: u64, gamma: f64, gamma_min: f64) -> Result<u32> {
    check_uppth(n, gamma, gamma_min)?;
    let coeff = uppth_coefficient(n, gamma, gamma_min);
    let mut level = uppth_default_level(n)? as i64;
    while level >= 0 && coeff * 2f64.powf(level as f64 / 2.0) > 1.0 {
        level -= 1;
    }
    if level < 0 {
        return Err(Error::InvalidParameter(format!(
            "adversarial signal infeasible for n={n}, gamma={gamma}, gamma_min={gamma_min}"
        )));
    }
    Ok(level as u32)
}

impl Intensity for SignalSpec {
    fn density(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Step(s) => s.density(x),
            Shape::Gaussian(comps) => comps
                .iter()
                .map(|&(w, m, s)| {
                    let z = (x - m) / s;
                    w * (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                })
                .sum(),
            Shape::SqrtSingular => {
                if x > 0.0 && x <= 1.0 {
                    0.5 / x.sqrt()
                } else {
                    0.0
                }
            }
            Shape::PowerTail => {
                if x >= 1.0 {
                    3.0 / (x * x * x * x)
                } else {
                    0.0
                }
            }
            Shape::Bumps { terms, norm } => {
                if !(0.0..1.0).contains(&x) {
                    return 0.0;
                }
                terms.iter().map(|&(g, p, w)| g * (1.0 + (x - p).abs() / w).powi(-4)).sum::<f64>() / norm
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Step(s) => s.cdf(x),
            Shape::Gaussian(comps) => comps.iter().map(|&(w, m, s)| w * std_normal_upper(-(x - m) / s)).sum(),
            Shape::SqrtSingular => x.clamp(0.0, 1.0).sqrt(),
            Shape::PowerTail => {
                if x <= 1.0 {
                    0.0
                } else {
                    1.0 - 1.0 / (x * x * x)
                }
            }
            Shape::Bumps { .. } => self.mass_between(0.0, x),
        }
    }

    fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match &self.shape {
            Shape::Step(s) => s.mass_between(a, b),
            Shape::Gaussian(comps) => comps.iter().map(|&(w, m, s)| w * normal_mass((a - m) / s, (b - m) / s)).sum(),
            Shape::SqrtSingular => {
                let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
                if b <= a {
                    0.0
                } else {
                    (b - a) / (b.sqrt() + a.sqrt())
                }
            }
            Shape::PowerTail => {
                let a = a.max(1.0);
                if b <= a {
                    return 0.0;
                }
                if b.is_infinite() {
                    return 1.0 / (a * a * a);
                }
                (b - a) * (b * b + a * b + a * a) / (a * a * a * b * b * b)
            }
            Shape::Bumps { terms, norm } => {
                let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
                if b <= a {
                    return 0.0;
                }
                terms
                    .iter()
                    .map(|&(g, p, w)| g * w * (bump_antiderivative((b - p) / w) - bump_antiderivative((a - p) / w)))
                    .sum::<f64>()
                    / norm
            }
        }
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn tail_range(&self, eps: f64) -> (f64, f64) {
        match &self.shape {
            Shape::Gaussian(comps) => {
                // Split eps over both sides of every component.
                let z = Self::normal_quantile_upper(eps / (2.0 * comps.len() as f64));
                let lo = comps.iter().map(|&(_, m, s)| m - s * z).fold(f64::INFINITY, f64::min);
                let hi = comps.iter().map(|&(_, m, s)| m + s * z).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            Shape::PowerTail => (1.0, self.tail_cut(eps)),
            _ => (self.support_lo(), self.support_hi()),
        }
    }
}

/// Seed of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec(pub u64);

impl SeedSpec {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// One realization: sorted event positions of a process with intensity `n f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointProcess {
    pub n: u64,
    pub points: Vec<f64>,
}

impl PointProcess {
    /// Wraps externally supplied events, sorting them.
    pub fn new(n: u64, mut points: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("scaling parameter n must be >= 2, got {n}")));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("event positions must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        Ok(Self { n, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of events in `[a, b)`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        let lo = self.points.partition_point(|&x| x < a);
        let hi = self.points.partition_point(|&x| x < b);
        hi.saturating_sub(lo)
    }

    /// Superposition of two independent realizations, observed with
    /// parameter `n1 + n2`.
    pub fn merge(&self, other: &PointProcess) -> PointProcess {
        let mut points = Vec::with_capacity(self.len() + other.len());
        points.extend_from_slice(&self.points);
        points.extend_from_slice(&other.points);
        points.sort_by(f64::total_cmp);
        PointProcess { n: self.n + other.n, points }
    }
}

/// Draws a Poisson process with intensity `n * f`: a Poisson(`n ||f||_1`)
/// count, then iid positions by inverse-CDF sampling.
pub fn sample(spec: &SignalSpec, n: u64, seed: SeedSpec) -> Result<PointProcess> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("scaling parameter n must be >= 2, got {n}")));
    }
    let mut rng = seed.rng();
    let mean = n as f64 * spec.mass();
    let count = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(&mut rng) as usize
    } else {
        0
    };
    let mass = spec.mass();
    let mut points: Vec<f64> = (0..count).map(|_| spec.inverse_cdf(rng.random::<f64>() * mass)).collect();
    points.sort_by(f64::total_cmp);
    Ok(PointProcess { n, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_examples() {
        let haar1 = SignalId::Haar1.spec();
        assert_eq!(haar1.density(0.5), 1.0);
        assert_eq!(haar1.density(2.0), 0.0);
        assert_eq!(haar1.cdf(0.5), 0.5);
        assert!((SignalId::Beta05.spec().density(0.25) - 1.0).abs() < 1e-15);
        assert!((SignalId::Beta4.spec().cdf(2.0) - 0.875).abs() < 1e-15);
        assert!((SignalId::Comb.spec().cdf(f64::INFINITY) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn beta4_cdf_matches_quadrature() {
        // Midpoint rule of 3x^-4 on [1, 2].
        let f = SignalId::Beta4.spec();
        let m = 200_000;
        let h = 1.0 / m as f64;
        let q: f64 = (0..m).map(|i| f.density(1.0 + (i as f64 + 0.5) * h) * h).sum();
        assert!((q - 0.875).abs() < 1e-9);
    }

    #[test]
    fn comb_partial_sums_approach_one() {
        let partial: f64 = (1..=COMB_TERMS).map(|k| 0.5f64.powi(k as i32)).sum();
        assert!((partial - 1.0).abs() < 1e-15);
        assert!((SignalId::Comb.spec().mass() - partial).abs() < 1e-15);
    }

    #[test]
    fn appendix_masses() {
        for id in SignalId::ALL {
            let m = id.spec().mass();
            match id {
                SignalId::Bumps => assert!((m - 1.0).abs() < 0.02, "bumps mass {m}"),
                SignalId::Blocks => assert!((m - 1.0).abs() < 1e-12, "blocks mass {m}"),
                _ => assert!((m - 1.0).abs() < 1e-14, "{id} mass {m}"),
            }
        }
    }

    #[test]
    fn blocks_is_nonnegative() {
        let f = SignalId::Blocks.spec();
        for i in 0..10_000 {
            assert!(f.density(i as f64 / 10_000.0) >= 0.0);
        }
    }

    #[test]
    fn cdf_derivative_matches_density() {
        let h = 1e-6;
        for id in SignalId::ALL {
            let f = id.spec();
            for &x in &[0.0371, 0.3, 0.47, 0.555, 0.93, 1.7, 3.2, 5.1] {
                if !(x > f.support_lo() && x + h < f.support_hi()) {
                    continue;
                }
                // skip jump points of the step signals
                if (f.density(x) - f.density(x + h)).abs() > 1e-3 * f.density(x).abs().max(1e-3) {
                    continue;
                }
                let fd = f.mass_between(x, x + h) / h;
                assert!((fd - f.density(x)).abs() < 1e-5 * f.density(x).max(1.0), "{id} at {x}: {fd} vs {}", f.density(x));
            }
        }
    }

    #[test]
    fn tail_cut_leaves_small_mass() {
        for id in SignalId::ALL {
            let f = id.spec();
            let (lo, hi) = f.tail_range(1e-12);
            let outside = f.mass() - f.mass_between(lo, hi);
            assert!(outside <= 1e-12 + 1e-15, "{id}: {outside:e}");
            let x = f.tail_cut(1e-12);
            assert!(f.mass() - f.cdf(x) <= 1e-12 + 1e-15, "{id}");
        }
    }

    #[test]
    fn inverse_cdf_round_trips() {
        for id in SignalId::ALL {
            let f = id.spec();
            for i in 1..50 {
                let u = f.mass() * i as f64 / 50.0;
                let x = f.inverse_cdf(u);
                assert!((f.cdf(x) - u).abs() < 1e-9, "{id} u={u}: cdf(x)={}", f.cdf(x));
            }
        }
    }

    #[test]
    fn sampling_respects_support_and_is_deterministic() {
        let a = sample(&SignalId::Haar1.spec(), 256, SeedSpec(11)).unwrap();
        assert!(a.points.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(a.points.windows(2).all(|w| w[0] <= w[1]));
        let b = sample(&SignalId::Haar1.spec(), 256, SeedSpec(11)).unwrap();
        assert_eq!(a, b);
        let c = sample(&SignalId::Beta4.spec(), 256, SeedSpec(3)).unwrap();
        assert!(c.points.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn rejects_small_n() {
        assert!(sample(&SignalId::Haar1.spec(), 1, SeedSpec(0)).is_err());
        assert!(PointProcess::new(1, vec![0.5]).is_err());
    }

    #[test]
    fn unknown_token_lists_valid_ones() {
        let err = "sine".parse::<SignalId>().unwrap_err().to_string();
        assert!(err.contains("haar1") && err.contains("bumps"), "{err}");
        assert_eq!("Gauss2".parse::<SignalId>().unwrap(), SignalId::Gauss2);
    }

    #[test]
    fn uppth_construction() {
        let n = 4096;
        let f = SignalSpec::uppth(n, 4.0, 2.0).unwrap();
        let SignalKind::UppthAdversary { level, coeff, .. } = f.kind() else { panic!() };
        assert_eq!(level, 6);
        assert!((f.mass() - 1.0).abs() < 1e-14);
        let expected = (2.0 * (2.0 - 2f64.sqrt()).powi(2) * (n as f64).ln() / n as f64).sqrt();
        assert!((coeff - expected).abs() < 1e-15);
        let min = (0..10_000).map(|i| f.density(i as f64 / 10_000.0)).fold(f64::INFINITY, f64::min);
        assert!((min - (1.0 - 8.0 * coeff)).abs() < 1e-14);
    }

    #[test]
    fn uppth_rejects_negative_density() {
        assert!(SignalSpec::uppth(1024, 16.0, 1.0 + 2f64.sqrt()).is_err());
        let level = uppth_feasible_level(1024, 16.0, 1.0 + 2f64.sqrt()).unwrap();
        assert_eq!(level, 3);
        assert!(SignalSpec::uppth_at_level(1024, 16.0, 1.0 + 2f64.sqrt(), level).is_ok());
        assert!(SignalSpec::uppth(8, 4.0, 2.0).is_err());
        assert!(SignalSpec::uppth(4096, 2.0, 4.0).is_err());
    }
}
