//! Independent oracles and property checks shared by the integration tests
//! and the acceptance gate. Each check returns a one-line summary on success
//! and a description of the first violation otherwise.

#![allow(dead_code, clippy::excessive_precision)]

use std::collections::BTreeSet;

use poisson_wavelet::estimator::{accumulate, select_bruteforce, v_tilde_at, ThresholdVariant};
use poisson_wavelet::metrics::oracle_denominators;
use poisson_wavelet::signals::{sample, Intensity, PointProcess, SeedSpec, SignalId};
use poisson_wavelet::wavelet::{
    haar_basis, spline15_basis, true_moments, BasisKind, BiorthBasis, LambdaIndex, SPLINE15_START,
};
use poisson_wavelet::{Basis, ExactBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

// ---------------------------------------------------------------- quadrature

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and its difference to the embedded 7-point
/// Gauss rule.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive Gauss-Kronrod quadrature by recursive bisection.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 || b - a <= 1e-300 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    rec(f, a, b, tol, 200)
}

/// `(int psi_lambda f, int psi_lambda^2 f)` by quadrature of the density over
/// each constant piece of `psi_lambda`.
pub fn quad_moments<I: Intensity + ?Sized>(basis: &Basis, lambda: LambdaIndex, f: &I) -> (f64, f64) {
    let lv = basis.level(lambda.j);
    let dens = |x: f64| f.density(x);
    let mut beta = 0.0;
    let mut sigma2 = 0.0;
    for (a, b, v) in lv.pieces(lambda.k) {
        let m = integrate(&dens, a, b, 1e-15);
        beta += v * m;
        sigma2 += v * v * m;
    }
    (beta, sigma2)
}

/// `x^{-1/2}` on `(0, 1]`, mass 2.
pub struct InverseSqrt;

impl Intensity for InverseSqrt {
    fn density(&self, x: f64) -> f64 {
        if x > 0.0 && x <= 1.0 {
            1.0 / x.sqrt()
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        2.0 * x.clamp(0.0, 1.0).sqrt()
    }

    fn mass(&self) -> f64 {
        2.0
    }

    fn tail_range(&self, _eps: f64) -> (f64, f64) {
        (0.0, 1.0)
    }
}

// ------------------------------------------------------------ filter oracle

/// The spline dual lowpass re-derived in f64 with nalgebra's LU solver.
pub fn spline_filter_nalgebra() -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    let n = 10;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let col = |m: i64| (m - SPLINE15_START) as usize;
    let mut row = 0;
    for k in -2i64..=2 {
        a[(row, col(2 * k))] = 1.0;
        a[(row, col(2 * k + 1))] = 1.0;
        b[row] = if k == 0 { 2.0 } else { 0.0 };
        row += 1;
    }
    for q in 0..5 {
        for m in -4i64..=5 {
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let hi = (m + 1) as f64 / 2.0;
            let lo = m as f64 / 2.0;
            let mom = (hi.powi(q + 1) - lo.powi(q + 1)) / (q + 1) as f64;
            a[(row, col(1 - m))] += sign * mom;
        }
        row += 1;
    }
    a.lu().solve(&b).expect("nonsingular").iter().copied().collect()
}

/// Published CDF(1,5) decomposition lowpass (bior1.5), scaled by sqrt 2.
pub const PUBLISHED_BIOR15_DEC_LO: [f64; 10] = [
    0.01657281518405971,
    -0.01657281518405971,
    -0.12153397801643787,
    0.12153397801643787,
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
    0.12153397801643787,
    -0.12153397801643787,
    -0.01657281518405971,
    0.01657281518405971,
];

pub fn check_filter_oracle() -> Check {
    let solved = spline_filter_nalgebra();
    let basis = spline15_basis::<f64>();
    for (i, &s) in solved.iter().enumerate() {
        let m = SPLINE15_START + i as i64;
        let lib = basis.recon_lo().get(m);
        let published = PUBLISHED_BIOR15_DEC_LO[i] * std::f64::consts::SQRT_2;
        if (lib - s).abs() > 1e-12 || (lib - published).abs() > 1e-12 {
            return Err(format!("tap {m}: library {lib}, nalgebra {s}, published {published}"));
        }
    }
    Ok("spline dual lowpass matches the nalgebra solve and the published table".into())
}

// ------------------------------------------------------------ basis checks

pub fn check_vanishing_moments() -> Check {
    let exact: ExactBasis = spline15_basis();
    let float: Basis = spline15_basis();
    let mut worst: f64 = 0.0;
    for q in 0..=4 {
        if !num_traits::Zero::is_zero(&exact.psi().moment(q)) {
            return Err(format!("exact moment {q} is nonzero"));
        }
        worst = worst.max(float.psi().moment(q).abs());
    }
    if worst > 1e-12 {
        return Err(format!("f64 moment up to {worst:e}"));
    }
    Ok(format!("moments 0..4 exactly zero in rationals, max f64 {worst:e}"))
}

/// `int phi~_lambda` over `[a, b]`, exact for the interpolated dual.
fn dual_integral(basis: &Basis, lambda: LambdaIndex, a: f64, b: f64) -> f64 {
    let Some(t) = basis.dual_tables() else {
        // self-dual: integrate the analysis function piece by piece
        return basis.level(lambda.j).pieces(lambda.k).map(|(lo, hi, v)| v * (hi.min(b) - lo.max(a)).max(0.0)).sum();
    };
    let k = lambda.k as f64;
    if lambda.j < 0 {
        t.phi.integral(a - k, b - k)
    } else {
        let s = (lambda.j as f64).exp2();
        t.psi.integral(s * a - k, s * b - k) / s.sqrt()
    }
}

pub fn biorthogonality_max_error(basis: &Basis) -> f64 {
    let mut worst: f64 = 0.0;
    for j in -1..=3 {
        for k in -4..=4 {
            let l = LambdaIndex::new(j, k);
            let pieces: Vec<_> = basis.level(j).pieces(k).collect();
            for jj in -1..=3 {
                for kk in -4..=4 {
                    let d = LambdaIndex::new(jj, kk);
                    let v: f64 = pieces.iter().map(|&(a, b, c)| c * dual_integral(basis, d, a, b)).sum();
                    let target = if l == d { 1.0 } else { 0.0 };
                    worst = worst.max((v - target).abs());
                }
            }
        }
    }
    worst
}

pub fn check_biorthogonality() -> Check {
    let w = biorthogonality_max_error(&spline15_basis());
    if w <= 1e-4 {
        Ok(format!("max |<phi_l, phi~_l'> - delta| = {w:e} over |j|,|j'| <= 3, |k|,|k'| <= 4"))
    } else {
        Err(format!("biorthogonality error {w:e}"))
    }
}

/// Translations sampled across the enumerated range of a level.
fn sample_ks(basis: &Basis, j: i32, lo: f64, hi: f64, max: usize) -> Vec<i64> {
    let (k0, k1) = basis.level(j).k_range_for_interval(lo, hi);
    let count = (k1 - k0 + 1) as usize;
    if count <= max {
        return (k0..=k1).collect();
    }
    let mut ks: BTreeSet<i64> = (0..max).map(|i| k0 + ((k1 - k0) as f64 * i as f64 / (max - 1) as f64) as i64).collect();
    // dense near the start of the support, where most signals concentrate
    ks.extend(k0..k0 + max as i64 / 2);
    ks.into_iter().collect()
}

pub fn check_truth_vs_quadrature() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for id in SignalId::ALL {
        let f = id.spec();
        let (lo, hi) = f.tail_range(1e-12);
        for kind in BasisKind::ALL {
            let basis = kind.basis();
            for j in -1..=6 {
                for k in sample_ks(&basis, j, lo, hi, 24) {
                    let l = LambdaIndex::new(j, k);
                    let (b, s) = true_moments(&basis, l, &f);
                    let (qb, qs) = quad_moments(&basis, l, &f);
                    let e = (b - qb).abs().max((s - qs).abs());
                    if e > 1e-9 {
                        return Err(format!("{id}/{kind} {l}: beta {b} vs {qb}, sigma2 {s} vs {qs}"));
                    }
                    worst = worst.max(e);
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} coefficients, max deviation {worst:e}"))
}

pub fn check_closed_form_beta() -> Check {
    let basis = haar_basis::<f64>();
    let (b, s) = true_moments(&basis, LambdaIndex::new(0, 0), &InverseSqrt);
    let eb = 2.0 * (2f64.sqrt() - 1.0);
    if (b - eb).abs() > 1e-12 || (s - 2.0).abs() > 1e-12 {
        return Err(format!("beta {b} (want {eb}), sigma2 {s} (want 2)"));
    }
    Ok(format!("beta_00 = {b}, sigma2_00 = {s}"))
}

pub fn check_haar1_denominator() -> Check {
    let basis = haar_basis::<f64>();
    let f = SignalId::Haar1.spec();
    for n in [2u64, 64, 100, 1024, 4096, 65536] {
        for j0 in [0, 6, 10, 12] {
            let (d, _) = oracle_denominators(&f, &basis, n, j0, 1e-12);
            if d != 1.0 / n as f64 {
                return Err(format!("n={n} j0={j0}: {d} != 1/n"));
            }
        }
    }
    Ok("oracle_denom(haar1) == 1/n exactly".into())
}

// ------------------------------------------------------ estimator checks

/// Per-run `(beta^, V^)` of a probe set, zero when not materialized.
fn probe_runs(id: SignalId, basis: &Basis, n: u64, j0: i32, probes: &[LambdaIndex], runs: u64, seed: u64) -> Vec<Vec<(f64, f64)>> {
    let f = id.spec();
    (0..runs)
        .map(|r| {
            let pts = sample(&f, n, SeedSpec(seed.wrapping_mul(1_000_003) + r)).unwrap();
            let t = accumulate(&pts, basis, j0).unwrap();
            probes.iter().map(|&l| t.get(l).map(|c| (c.beta_hat, c.v_hat)).unwrap_or((0.0, 0.0))).collect()
        })
        .collect()
}

struct ProbeCase {
    id: SignalId,
    kind: BasisKind,
    n: u64,
    j0: i32,
    probes: Vec<LambdaIndex>,
}

fn probe_cases() -> Vec<ProbeCase> {
    vec![
        ProbeCase {
            id: SignalId::Haar1,
            kind: BasisKind::Haar,
            n: 64,
            j0: 4,
            probes: vec![LambdaIndex::scaling(0), LambdaIndex::new(0, 0), LambdaIndex::new(2, 1), LambdaIndex::new(4, 9)],
        },
        ProbeCase {
            id: SignalId::Gauss1,
            kind: BasisKind::Spline15,
            n: 128,
            j0: 4,
            probes: vec![
                LambdaIndex::scaling(0),
                LambdaIndex::scaling(-1),
                LambdaIndex::new(0, 0),
                LambdaIndex::new(1, 1),
                LambdaIndex::new(3, 4),
            ],
        },
        ProbeCase {
            id: SignalId::Gauss1,
            kind: BasisKind::Haar,
            n: 256,
            j0: 3,
            probes: vec![LambdaIndex::scaling(0), LambdaIndex::new(0, 0), LambdaIndex::new(3, 2)],
        },
    ]
}

pub const PROPERTY_RUNS: u64 = 10_000;

/// `E beta^ = beta` and `E V^ = sigma^2 / n`, each within 4 standard errors.
pub fn check_unbiasedness(runs: u64) -> Check {
    let mut worst: f64 = 0.0;
    for case in probe_cases() {
        let basis = case.kind.basis();
        let f = case.id.spec();
        let data = probe_runs(case.id, &basis, case.n, case.j0, &case.probes, runs, 11);
        let m = runs as f64;
        for (i, &l) in case.probes.iter().enumerate() {
            let (beta, sigma2) = true_moments(&basis, l, &f);
            let mean_b = data.iter().map(|r| r[i].0).sum::<f64>() / m;
            let band_b = 4.0 * (sigma2 / (case.n as f64 * m)).sqrt();
            if (mean_b - beta).abs() > band_b {
                return Err(format!("{}/{} {l}: mean beta^ {mean_b} vs {beta} (band {band_b:e})", case.id, case.kind));
            }
            let v = sigma2 / case.n as f64;
            let mean_v = data.iter().map(|r| r[i].1).sum::<f64>() / m;
            let sd_v = (data.iter().map(|r| (r[i].1 - mean_v).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            let band_v = 4.0 * sd_v / m.sqrt();
            if (mean_v - v).abs() > band_v.max(1e-300) {
                return Err(format!("{}/{} {l}: mean V^ {mean_v} vs {v} (band {band_v:e})", case.id, case.kind));
            }
            worst = worst.max((mean_b - beta).abs() / band_b * 4.0);
        }
    }
    Ok(format!("{runs} runs per case, worst beta deviation {worst:.2} standard errors"))
}

/// Empirical tails against `P(|beta^ - beta| >= sqrt(2uV) + ||phi|| u/(3n)) <= 2e^-u`
/// and `P(V > V~(u)) <= e^-u`, with 3 binomial standard deviations of slack.
pub fn check_concentration(runs: u64) -> Check {
    let mut summary = Vec::new();
    for case in probe_cases() {
        let basis = case.kind.basis();
        let f = case.id.spec();
        let data = probe_runs(case.id, &basis, case.n, case.j0, &case.probes, runs, 29);
        let m = runs as f64;
        for (i, &l) in case.probes.iter().enumerate() {
            let (beta, sigma2) = true_moments(&basis, l, &f);
            let v = sigma2 / case.n as f64;
            let sup = basis.sup_norm(l.j);
            let nf = case.n as f64;
            for u in [1.0, 2.0, 4.0] {
                let dev = (2.0 * u * v).sqrt() + sup * u / (3.0 * nf);
                let freq = data.iter().filter(|r| (r[i].0 - beta).abs() >= dev).count() as f64 / m;
                let p = 2.0 * (-u).exp();
                let bound = p + 3.0 * (p.min(1.0) * (1.0 - p.min(1.0)) / m).sqrt();
                if freq > bound {
                    return Err(format!("{}/{} {l} u={u}: deviation frequency {freq} > {bound}", case.id, case.kind));
                }
                let pv = (-u).exp();
                let fv = data.iter().filter(|r| v > v_tilde_at(r[i].1, sup, case.n, u)).count() as f64 / m;
                let bv = pv + 3.0 * (pv * (1.0 - pv) / m).sqrt();
                if fv > bv {
                    return Err(format!("{}/{} {l} u={u}: variance frequency {fv} > {bv}", case.id, case.kind));
                }
                if l.j == 0 && case.id == SignalId::Haar1 {
                    summary.push(format!("u={u}: {freq:.4}<={p:.4}, {fv:.4}<={pv:.4}"));
                }
            }
        }
    }
    Ok(format!("{runs} runs per case; haar1 (0,0): {}", summary.join("; ")))
}

/// Penalized selection by exhaustive search equals thresholding.
pub fn check_bruteforce_equivalence(instances: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sizes = 0;
    let mut done = 0;
    while done < instances {
        let n: u64 = rng.random_range(2..200);
        let count = rng.random_range(0..8);
        let pts: Vec<f64> = (0..count).map(|_| rng.random_range(-1.0..2.0)).collect();
        let kind = if rng.random_bool(0.5) { BasisKind::Haar } else { BasisKind::Spline15 };
        let j0 = if kind == BasisKind::Haar { rng.random_range(0..3) } else { 0 };
        let basis = kind.basis();
        let mut t = accumulate(&PointProcess::new(n, pts).unwrap(), &basis, j0).unwrap();
        if t.len() > 20 {
            continue;
        }
        let gamma = rng.random_range(0.01..4.0);
        let variant = if rng.random_bool(0.5) { ThresholdVariant::SimulationForm } else { ThresholdVariant::TheoremForm };
        t.apply_threshold(gamma, variant);
        let brute = select_bruteforce(&t).map_err(|e| e.to_string())?;
        if brute != t.kept_set() {
            return Err(format!("instance {done}: brute force {brute:?} vs threshold {:?}", t.kept_set()));
        }
        sizes += t.len();
        done += 1;
    }
    Ok(format!("{instances} instances, {sizes} coefficients in total"))
}

/// Superposing two realizations with parameter `n` matches one with `2n` in
/// the first two moments of `beta^`.
pub fn check_scaling_consistency(runs: u64) -> Check {
    let f = SignalId::Haar2.spec();
    let basis = haar_basis::<f64>();
    let l = LambdaIndex::new(1, 0);
    let n = 50;
    let m = runs as f64;
    let mut merged = Vec::new();
    let mut direct = Vec::new();
    for r in 0..runs {
        let a = sample(&f, n, SeedSpec(3 * r)).unwrap();
        let b = sample(&f, n, SeedSpec(3 * r + 1)).unwrap();
        let t = accumulate(&a.merge(&b), &basis, 2).unwrap();
        merged.push(t.get(l).map(|c| c.beta_hat).unwrap_or(0.0));
        let d = sample(&f, 2 * n, SeedSpec(3 * r + 2)).unwrap();
        let t = accumulate(&d, &basis, 2).unwrap();
        direct.push(t.get(l).map(|c| c.beta_hat).unwrap_or(0.0));
    }
    let stats = |x: &[f64]| {
        let mu = x.iter().sum::<f64>() / m;
        (mu, x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1.0))
    };
    let ((m1, v1), (m2, v2)) = (stats(&merged), stats(&direct));
    let (_, sigma2) = true_moments(&basis, l, &f);
    let var = sigma2 / (2 * n) as f64;
    let mean_band = 4.0 * (2.0 * var / m).sqrt();
    // the variance of a sample variance is about 2 var^2 / m for near-normal data
    let var_band = 4.0 * (2.0 * 2.0 * var * var / m).sqrt() * 1.5;
    if (m1 - m2).abs() > mean_band || (v1 - v2).abs() > var_band {
        return Err(format!("merged ({m1}, {v1}) vs direct ({m2}, {v2})"));
    }
    Ok(format!("means {m1:.5}/{m2:.5}, variances {v1:.3e}/{v2:.3e}"))
}

/// Keeps every `BiorthBasis` import used across test crates.
pub fn spline() -> BiorthBasis<f64> {
    spline15_basis()
}

// ------------------------------------------------- exact uniform-signal risk

fn ln_poisson(k: u64, mu: f64) -> f64 {
    k as f64 * mu.ln() - mu - libm::lgamma(k as f64 + 1.0)
}

fn ln_binom_half(k: u64, n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
        - n as f64 * std::f64::consts::LN_2
}

/// `E r_n` of `1_[0,1]` in the Haar basis with the simulation threshold and
/// `j0 = floor(log2 n)`, by exact summation over the Poisson count `N` of a
/// wavelet's support and its binomial split. A wavelet at level `j` has
/// `beta^ = 2^{j/2} D / n` and `V^ = 2^j N / n^2` with `D = N+ - N-`, so it is
/// kept iff `|D| >= sqrt(2 gamma ln n N) + gamma ln n / 3`. The scaling
/// coefficient contributes `1/n`.
pub fn exact_uniform_haar_risk(n: u64, gamma: f64) -> f64 {
    let l = (n as f64).ln();
    let j0 = 63 - n.leading_zeros();
    let mut total = 1.0 / n as f64;
    for j in 0..=j0 {
        let mu = n as f64 / (1u64 << j) as f64;
        let lo = (mu - 12.0 * mu.sqrt() - 30.0).max(1.0) as u64;
        let hi = (mu + 12.0 * mu.sqrt() + 60.0) as u64;
        let mut e = 0.0;
        for big_n in lo..=hi {
            let thr = (2.0 * gamma * l * big_n as f64).sqrt() + gamma * l / 3.0;
            let pn = ln_poisson(big_n, mu);
            let w = (15.0 * (big_n as f64).sqrt() + 10.0) as u64;
            for k in (big_n / 2).saturating_sub(w)..=(big_n / 2 + w).min(big_n) {
                let d = (2.0 * k as f64 - big_n as f64).abs();
                if d >= thr * (1.0 - 1e-12) {
                    e += (pn + ln_binom_half(k, big_n)).exp() * d * d;
                }
            }
        }
        let s = (1u64 << j) as f64;
        total += s * s * e / (n as f64 * n as f64);
    }
    total
}
