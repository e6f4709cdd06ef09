//! Least-squares regression over the one-weight network class.
//!
//! Data follow `Y = f0(X) + noise` with `X` uniform on `[0, 1]^d` and standard
//! normal noise. Networks are constant on grid cells, so the empirical risk of
//! a weight depends on the data only through per-cell counts, means and
//! centered sums of squares.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{
    ceil_root, decimal_digits, log2_big, one_over, pow_rational, rational_from_f64,
};
use crate::functions::{HolderSpec, TargetFunction};
use crate::highprec::{frac_mult_word, word_to_unit_f64};
use crate::kronecker::{Strategy, MAX_SCAN_WEIGHT};
use crate::network::{
    cell_count, cell_fraction, cell_of_index, grid_index, output_from_fraction, sigma_natural,
    GridIndex, Network, NetworkError, NetworkParams, Precision,
};
use crate::scan::{self, canonical_weight, rank_count, stream_rng};

/// Largest `N_n` for which [`schedule`] evaluates `Q_n`.
pub const MAX_SCHEDULE_CELLS: u64 = 1 << 16;
/// First sub-stream used for Monte-Carlo design points; data use stream 0.
pub const MC_STREAM_BASE: u64 = 1 << 32;
/// Weights up to this magnitude are scored from 64-bit words.
const WORD_SCORE_MAX_WEIGHT: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegressionError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid regression input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// `n` samples from one ChaCha20 stream: `d` uniforms for `X`, then one
/// ziggurat standard normal for the noise, per sample.
pub fn generate_data(f0: &TargetFunction, n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..f0.dim()).map(|_| rng.random::<f64>()).collect();
            let noise: f64 = rng.sample(StandardNormal);
            let y = f0.eval(&x) + noise;
            Sample { x, y }
        })
        .collect()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Per-cell sufficient statistics of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    mesh: u64,
    dim: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
    sumsqs: Vec<f64>,
    means: Vec<f64>,
    centered: Vec<f64>,
}

impl CellStats {
    pub fn from_samples(data: &[Sample], mesh: u64, dim: usize) -> Result<Self, RegressionError> {
        let cells = cell_count(mesh, dim)
            .filter(|&n| n <= 1 << 32)
            .ok_or_else(|| RegressionError::Invalid(format!("too many cells for M={mesh}, d={dim}")))?
            as usize;
        let mut counts = vec![0u64; cells];
        let mut sums = vec![Compensated::default(); cells];
        let mut sumsqs = vec![Compensated::default(); cells];
        let mut means = vec![0.0; cells];
        let mut centered = vec![0.0; cells];
        for sample in data {
            if sample.x.len() != dim {
                return Err(NetworkError::DimensionMismatch {
                    expected: dim,
                    got: sample.x.len(),
                }
                .into());
            }
            if !sample.y.is_finite() {
                return Err(RegressionError::Invalid(format!("non-finite response {}", sample.y)));
            }
            let slot = grid_index(&sample.x, mesh)?.slot();
            let y = sample.y;
            counts[slot] += 1;
            sums[slot].add(y);
            sumsqs[slot].add(y * y);
            // Welford update
            let delta = y - means[slot];
            means[slot] += delta / counts[slot] as f64;
            centered[slot] += delta * (y - means[slot]);
        }
        Ok(Self {
            mesh,
            dim,
            counts,
            sums: sums.iter().map(Compensated::value).collect(),
            sumsqs: sumsqs.iter().map(Compensated::value).collect(),
            means,
            centered,
        })
    }

    pub fn mesh(&self) -> u64 {
        self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `sum Y` per cell.
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// `sum Y^2` per cell.
    pub fn sumsqs(&self) -> &[f64] {
        &self.sumsqs
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// `sum (Y - mean)^2` per cell.
    pub fn centered(&self) -> &[f64] {
        &self.centered
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Risk of the best constant on every cell.
    pub fn irreducible(&self) -> f64 {
        let mut acc = Compensated::default();
        self.centered.iter().for_each(|&c| acc.add(c));
        acc.value()
    }

    /// `sum_i n_i (mean_i - v_i)^2`; together with [`Self::irreducible`]
    /// this is `sum_i (c2_i - 2 v_i s_i + n_i v_i^2)`.
    pub fn excess(&self, values: &[f64]) -> f64 {
        let mut acc = Compensated::default();
        for ((&n, &mean), &v) in self.counts.iter().zip(&self.means).zip(values) {
            if n > 0 {
                acc.add(n as f64 * (mean - v) * (mean - v));
            }
        }
        acc.value()
    }

    fn occupied(&self) -> Vec<usize> {
        (0..self.counts.len()).filter(|&i| self.counts[i] > 0).collect()
    }
}

/// `sum_j (Y_j - Z_q(X_j))^2` computed from cell statistics.
pub fn empirical_risk(
    q: &BigInt,
    stats: &CellStats,
    k_bound: f64,
    precision: Precision,
) -> Result<f64, RegressionError> {
    let params = NetworkParams::new(stats.dim, k_bound, stats.mesh, q.clone())?;
    let network = Network::new(params, precision)?;
    Ok(stats.irreducible() + stats.excess(network.cell_values()))
}

/// Plain per-sample sum of squared residuals.
pub fn naive_risk(params: &NetworkParams, data: &[Sample]) -> Result<f64, RegressionError> {
    let network = Network::new(params.clone(), Precision::default())?;
    let mut acc = Compensated::default();
    for sample in data {
        let r = sample.y - network.eval(&sample.x)?;
        acc.add(r * r);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErmConfig {
    pub mesh: u64,
    pub q_cap: BigUint,
    pub strategy: Strategy,
    pub seed: u64,
    pub sample_budget: u64,
}

impl ErmConfig {
    pub fn exhaustive(mesh: u64, q_cap: BigUint) -> Self {
        Self {
            mesh,
            q_cap,
            strategy: Strategy::Exhaustive,
            seed: 0,
            sample_budget: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    #[serde(with = "crate::network::bigint_string")]
    pub q: BigInt,
    /// Empirical risk of `q`, with certified cell values.
    pub risk: f64,
    pub risk_at_zero: f64,
    pub mesh: u64,
    pub cells: u64,
    pub scanned: u64,
    pub q_cap: String,
    pub strategy: Strategy,
}

/// Occupied cells with their `sigma` arguments and 64-bit roots.
struct Scorer<'a> {
    stats: &'a CellStats,
    k_bound: f64,
    cells: Vec<(usize, u64, u64)>,
}

impl<'a> Scorer<'a> {
    fn new(stats: &'a CellStats, k_bound: f64) -> Result<Self, RegressionError> {
        let params = NetworkParams::new(stats.dim, k_bound, stats.mesh, BigInt::zero())?;
        let offset = params.sigma_offset();
        let cells = stats
            .occupied()
            .into_iter()
            .map(|slot| {
                let arg = offset + slot as u64 + 1;
                Ok((slot, arg, sigma_natural(arg, 64)?.frac_word()))
            })
            .collect::<Result<_, NetworkError>>()?;
        Ok(Self {
            stats,
            k_bound,
            cells,
        })
    }

    fn fraction(&self, q: &BigInt, small: Option<i64>, arg: u64, word: u64) -> Result<f64, NetworkError> {
        if let Some(q) = small.filter(|q| q.unsigned_abs() <= WORD_SCORE_MAX_WEIGHT) {
            let (center, radius) = frac_mult_word(q, word);
            let wraps = center < radius || center.checked_add(radius).is_none();
            if !wraps {
                return Ok(word_to_unit_f64(center));
            }
        }
        cell_fraction(q, arg, Precision::default())
    }

    /// `sum_i n_i (mean_i - v_i)^2` over occupied cells.
    fn score(&self, q: &BigInt) -> Result<f64, NetworkError> {
        let small = q.to_i64();
        let mut total = 0.0;
        for &(slot, arg, word) in &self.cells {
            let v = output_from_fraction(self.fraction(q, small, arg, word)?, self.k_bound);
            let r = self.stats.means[slot] - v;
            total += self.stats.counts[slot] as f64 * r * r;
        }
        Ok(total)
    }
}

/// Weight minimizing the empirical risk among the scanned candidates.
///
/// Exhaustive scans cover `|q| <= min(q_cap, 2^62)` and break ties by the
/// order `0, +1, -1, ...`; random scans draw `sample_budget` weights.
pub fn erm_fit(data: &[Sample], k_bound: f64, dim: usize, config: &ErmConfig) -> Result<FitResult, RegressionError> {
    if data.is_empty() {
        return Err(RegressionError::Invalid("no samples".into()));
    }
    if config.strategy == Strategy::Random && config.sample_budget == 0 {
        return Err(RegressionError::Invalid("random strategy needs a positive sample budget".into()));
    }
    let stats = CellStats::from_samples(data, config.mesh, dim)?;
    let scorer = Scorer::new(&stats, k_bound)?;
    let (q, scanned) = match config.strategy {
        Strategy::Exhaustive => {
            let cap = config.q_cap.to_u64().unwrap_or(u64::MAX).min(MAX_SCAN_WEIGHT);
            let end = rank_count(cap);
            let best = scan::argmin(end, || |q: i64| scorer.score(&BigInt::from(q)))?;
            let (rank, _) = best.expect("rank 0 is always scanned");
            (BigInt::from(canonical_weight(rank)), end)
        }
        Strategy::Random => {
            let per_stream = scan::streams(config.sample_budget)
                .into_par_iter()
                .map(|(stream, count)| {
                    let mut rng = stream_rng(config.seed, stream);
                    let mut best: Option<(f64, BigUint, bool, BigInt)> = None;
                    for _ in 0..count {
                        let q = scan::uniform_weight(&mut rng, &config.q_cap);
                        let s = scorer.score(&q)?;
                        let key = (s, q.magnitude().clone(), q.sign() == num_bigint::Sign::Minus);
                        if best.as_ref().is_none_or(|b| key_less(&key, b)) {
                            best = Some((key.0, key.1, key.2, q));
                        }
                    }
                    Ok::<_, NetworkError>(best)
                })
                .collect::<Vec<_>>();
            let mut best: Option<(f64, BigUint, bool, BigInt)> = None;
            for candidate in per_stream {
                if let Some(c) = candidate? {
                    if best.as_ref().is_none_or(|b| key_less(&(c.0, c.1.clone(), c.2), b)) {
                        best = Some(c);
                    }
                }
            }
            (best.expect("positive budget").3, config.sample_budget)
        }
    };
    let risk = empirical_risk(&q, &stats, k_bound, Precision::default())?;
    let risk_at_zero = empirical_risk(&BigInt::zero(), &stats, k_bound, Precision::default())?;
    Ok(FitResult {
        q,
        risk,
        risk_at_zero,
        mesh: config.mesh,
        cells: stats.counts.len() as u64,
        scanned,
        q_cap: config.q_cap.to_string(),
        strategy: config.strategy,
    })
}

fn key_less(key: &(f64, BigUint, bool), best: &(f64, BigUint, bool, BigInt)) -> bool {
    (key.0, &key.1, key.2) < (best.0, &best.1, best.2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub n: u64,
    pub mesh: u64,
    pub cells: u64,
    #[serde(serialize_with = "biguint_string")]
    pub q_n: BigUint,
    pub q_n_digits: usize,
}

fn biguint_string<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// `M_n = ceil((2F)^(1/beta) n^(1/(2beta+d)))` and
/// `Q_n = ceil((N_n+1)^(2N_n+3) (8K n^(beta/(2beta+d)))^N_n)`, exactly.
pub fn schedule(n: u64, spec: &HolderSpec, dim: usize) -> Result<Schedule, RegressionError> {
    if n == 0 || dim == 0 {
        return Err(RegressionError::Invalid("schedule needs n >= 1 and d >= 1".into()));
    }
    let (p, r) = (spec.beta.numer(), spec.beta.denom());
    let d = u32::try_from(dim).map_err(|_| RegressionError::Invalid("dimension too large".into()))?;
    // beta/(2beta+d) = p/e and 1/(2beta+d) = r/e
    let e = 2 * p + d * r;
    let n_big = BigRational::from_integer(BigInt::from(n));
    let two_f = BigRational::from_integer(2.into()) * rational_from_f64(spec.f_const);
    let mesh = ceil_root(
        &(pow_rational(&two_f, r * e) * pow_rational(&n_big, r * p)),
        p * e,
    )
    .to_u64()
    .filter(|&m| m >= 1)
    .unwrap_or(1);
    let cells = cell_count(mesh, dim)
        .filter(|&c| c <= MAX_SCHEDULE_CELLS)
        .ok_or_else(|| RegressionError::Invalid(format!("N_n too large for M_n={mesh}, d={dim}")))?;
    let c32 = cells as u32;
    let eight_k = BigRational::from_integer(8.into()) * rational_from_f64(spec.k_bound);
    let base = pow_rational(&BigRational::from_integer(BigInt::from(cells + 1)), 2 * c32 + 3)
        * pow_rational(&eight_k, c32);
    let q_n = ceil_root(&(pow_rational(&base, e) * pow_rational(&n_big, p * c32)), e);
    let q_n_digits = decimal_digits(&q_n);
    Ok(Schedule {
        n,
        mesh,
        cells,
        q_n,
        q_n_digits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Monte-Carlo estimate of `E (Z(X) - f0(X))^2` over fresh uniform `X`.
pub fn prediction_error_mc(network: &Network, f0: &TargetFunction, n_mc: u64, seed: u64) -> Result<McEstimate, RegressionError> {
    if n_mc == 0 {
        return Err(RegressionError::Invalid("Monte-Carlo size must be positive".into()));
    }
    let dim = network.params().dim();
    let partial = scan::streams(n_mc)
        .into_par_iter()
        .map(|(stream, count)| {
            let mut rng = stream_rng(seed, MC_STREAM_BASE + stream);
            let mut x = vec![0.0; dim];
            let (mut s, mut s2) = (Compensated::default(), Compensated::default());
            for _ in 0..count {
                x.iter_mut().for_each(|xk| *xk = rng.random());
                let e = network.eval(&x)? - f0.eval(&x);
                s.add(e * e);
                s2.add(e * e * e * e);
            }
            Ok((s.value(), s2.value()))
        })
        .collect::<Result<Vec<_>, NetworkError>>()?;
    let (mut s, mut s2) = (Compensated::default(), Compensated::default());
    for (a, b) in partial {
        s.add(a);
        s2.add(b);
    }
    let n = n_mc as f64;
    let mean = s.value() / n;
    let var = if n_mc > 1 {
        ((s2.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples: n_mc,
    })
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order as f64;
    (0..order)
        .map(|k| {
            let mut z = (std::f64::consts::PI * (k as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=order {
                    let j = j as f64;
                    (p0, p1) = (p1, ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j);
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                let step = p1 / dp;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            ((1.0 - z) / 2.0, w / 2.0)
        })
        .collect()
}

/// `E (Z(X) - f0(X))^2` by tensor Gauss-Legendre quadrature on every cell
/// of positive volume.
pub fn prediction_error_quadrature(network: &Network, f0: &TargetFunction, order: usize) -> Result<f64, RegressionError> {
    let params = network.params();
    let (mesh, dim) = (params.mesh(), params.dim());
    let cells = params.cells();
    let rule = gauss_legendre(order);
    let per_cell = (1..=cells)
        .into_par_iter()
        .map(|i| {
            let cell = cell_of_index(GridIndex::new(i, cells)?, mesh, dim)?;
            if cell.volume() == 0.0 {
                return Ok(0.0);
            }
            let lo: Vec<f64> = cell.digits().iter().map(|&m| m as f64 / mesh as f64).collect();
            let width = 1.0 / mesh as f64;
            let v = network.cell_values()[(i - 1) as usize];
            let mut acc = Compensated::default();
            let mut idx = vec![0usize; dim];
            let mut x = vec![0.0; dim];
            for _ in 0..order.pow(dim as u32) {
                let mut w = 1.0;
                for k in 0..dim {
                    let (node, weight) = rule[idx[k]];
                    x[k] = lo[k] + width * node;
                    w *= weight;
                }
                let e = v - f0.eval(&x);
                acc.add(w * e * e);
                for slot in idx.iter_mut() {
                    *slot += 1;
                    if *slot < order {
                        break;
                    }
                    *slot = 0;
                }
            }
            Ok(acc.value() * cell.volume())
        })
        .collect::<Result<Vec<f64>, NetworkError>>()?;
    let mut total = Compensated::default();
    per_cell.into_iter().for_each(|v| total.add(v));
    Ok(total.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskBound {
    /// `log2(2Q + 1)`.
    pub log_term: f64,
    pub value: f64,
}

/// `4 [a + K^2 (18 log2(2Q+1) + 72)/n + 32 delta K]`.
pub fn risk_bound(delta: f64, n: u64, q: &BigUint, approx_err_sq: f64, k_bound: f64) -> RiskBound {
    let log_term = log2_big(&(q * 2u32 + 1u32));
    let value = 4.0
        * (approx_err_sq
            + k_bound * k_bound * (18.0 * log_term + 72.0) / n as f64
            + 32.0 * delta * k_bound);
    RiskBound { log_term, value }
}

/// The same bound for exact inputs, with the logarithm supplied as `log_term`.
pub fn risk_bound_exact(
    delta: &BigRational,
    n: u64,
    log_term: &BigRational,
    approx_err_sq: &BigRational,
    k_bound: &BigRational,
) -> BigRational {
    let c = |v: i64| BigRational::from_integer(v.into());
    c(4) * (approx_err_sq
        + k_bound * k_bound * (c(18) * log_term + c(72)) * one_over(n)
        + c(32) * delta * k_bound)
}

/// Inputs of one rate study.
#[derive(Debug, Clone)]
pub struct RateConfig {
    pub f0: TargetFunction,
    pub n_list: Vec<u64>,
    pub seeds: Vec<u64>,
    /// One cap per `n`, or a single cap for all.
    pub caps: Vec<BigUint>,
    pub mc_size: u64,
    pub strategy: Strategy,
    pub sample_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub q_hat: String,
    pub empirical_risk: f64,
    pub pred_err: f64,
    pub pred_err_se: f64,
    pub pred_err_at_zero: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: u64,
    pub mesh: u64,
    pub cells: u64,
    pub q_cap: String,
    pub q_n_digits: usize,
    pub mean_pred_err: f64,
    pub sd_pred_err: f64,
    pub risk_bound: f64,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub function: String,
    pub spec: HolderSpec,
    pub dim: usize,
    pub theoretical_exponent: f64,
    pub fitted_slope: Option<f64>,
    pub rows: Vec<RateRow>,
}

pub fn theoretical_exponent(spec: &HolderSpec, dim: usize) -> f64 {
    let b = spec.beta.to_f64();
    -2.0 * b / (2.0 * b + dim as f64)
}

/// Least-squares slope of `ln y` against `ln x`; `None` without two distinct `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (logs.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

fn run_once(
    config: &RateConfig,
    n: u64,
    seed: u64,
    erm: &ErmConfig,
) -> Result<RunRecord, RegressionError> {
    let f0 = &config.f0;
    let k = f0.spec().k_bound;
    let data = generate_data(f0, n as usize, seed);
    let fit = erm_fit(&data, k, f0.dim(), erm)?;
    let params = NetworkParams::new(f0.dim(), k, erm.mesh, fit.q.clone())?;
    let network = Network::new(params.clone(), Precision::default())?;
    let err = prediction_error_mc(&network, f0, config.mc_size, seed)?;
    let zero = Network::new(params.with_weight(BigInt::zero()), Precision::default())?;
    let err_zero = prediction_error_mc(&zero, f0, config.mc_size, seed)?;
    Ok(RunRecord {
        seed,
        q_hat: fit.q.to_string(),
        empirical_risk: fit.risk,
        pred_err: err.mean,
        pred_err_se: err.std_error,
        pred_err_at_zero: err_zero.mean,
        error: None,
    })
}

/// For every `n` and seed: draw data, fit by least squares with the `n`-th
/// cap, and estimate the prediction error; then fit the log-log slope of the
/// mean prediction error against `n`.
pub fn rate_study(config: &RateConfig) -> Result<RateReport, RegressionError> {
    if config.n_list.is_empty() || config.seeds.is_empty() {
        return Err(RegressionError::Invalid("n_list and seeds must be non-empty".into()));
    }
    if config.caps.len() != 1 && config.caps.len() != config.n_list.len() {
        return Err(RegressionError::Invalid(format!(
            "caps must have 1 or {} entries, got {}",
            config.n_list.len(),
            config.caps.len()
        )));
    }
    let f0 = &config.f0;
    let spec = f0.spec();
    let mut rows = Vec::with_capacity(config.n_list.len());
    for (j, &n) in config.n_list.iter().enumerate() {
        let sched = schedule(n, &spec, f0.dim())?;
        let cap = config.caps[j.min(config.caps.len() - 1)].clone();
        let runs: Vec<RunRecord> = config
            .seeds
            .iter()
            .map(|&seed| {
                let erm = ErmConfig {
                    mesh: sched.mesh,
                    q_cap: cap.clone(),
                    strategy: config.strategy,
                    seed,
                    sample_budget: config.sample_budget,
                };
                run_once(config, n, seed, &erm).unwrap_or_else(|e| RunRecord {
                    seed,
                    q_hat: String::new(),
                    empirical_risk: f64::NAN,
                    pred_err: f64::NAN,
                    pred_err_se: f64::NAN,
                    pred_err_at_zero: f64::NAN,
                    error: Some(e.to_string()),
                })
            })
            .collect();
        let errs: Vec<f64> = runs.iter().filter(|r| r.error.is_none()).map(|r| r.pred_err).collect();
        let (mean, sd) = mean_sd(&errs);
        let approx = (n as f64).powf(theoretical_exponent(&spec, f0.dim()));
        let bound = risk_bound(1.0 / n as f64, n, &sched.q_n, approx, spec.k_bound);
        rows.push(RateRow {
            n,
            mesh: sched.mesh,
            cells: sched.cells,
            q_cap: cap.to_string(),
            q_n_digits: sched.q_n_digits,
            mean_pred_err: mean,
            sd_pred_err: sd,
            risk_bound: bound.value,
            runs,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mean_pred_err)).collect();
    Ok(RateReport {
        function: f0.name().to_owned(),
        spec,
        dim: f0.dim(),
        theoretical_exponent: theoretical_exponent(&spec, f0.dim()),
        fitted_slope: loglog_slope(&points),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::PositiveRatio;
    use crate::functions::Registered;
    use num_traits::One;

    fn spec(f: f64, k: f64) -> HolderSpec {
        HolderSpec::new(PositiveRatio::new(1, 1).unwrap(), f, k).unwrap()
    }

    fn zero(dim: usize) -> TargetFunction {
        TargetFunction::new("zero", dim, spec(1.0, 1.0), |_| 0.0)
    }

    #[test]
    fn data_is_reproducible_and_standard() {
        assert!(generate_data(&zero(1), 0, 1).is_empty());
        let a = generate_data(&zero(2), 50, 9);
        assert_eq!(a, generate_data(&zero(2), 50, 9));
        assert_ne!(a, generate_data(&zero(2), 50, 10));
        let big = generate_data(&zero(1), 100_000, 3);
        let n = big.len() as f64;
        let mean = big.iter().map(|s| s.y).sum::<f64>() / n;
        let var = big.iter().map(|s| (s.y - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 / n.sqrt());
        assert!((0.97..=1.03).contains(&var));
        assert!(big.iter().all(|s| (0.0..1.0).contains(&s.x[0])));
    }

    #[test]
    fn cell_statistics_partition() {
        let one = [Sample { x: vec![0.3], y: 2.5 }];
        let stats = CellStats::from_samples(&one, 4, 1).unwrap();
        assert_eq!(stats.counts(), &[0, 1, 0, 0, 0]);
        assert_eq!(stats.sums()[1], 2.5);
        assert_eq!(stats.sumsqs()[1], 6.25);

        let data = generate_data(&zero(2), 1000, 4);
        let stats = CellStats::from_samples(&data, 3, 2).unwrap();
        assert_eq!(stats.total(), 1000);
        assert!(stats.sumsqs().iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn risk_examples() {
        let data: Vec<Sample> = (0..10).map(|j| Sample { x: vec![j as f64 / 10.0], y: -1.0 }).collect();
        let stats = CellStats::from_samples(&data, 3, 1).unwrap();
        assert_eq!(empirical_risk(&BigInt::zero(), &stats, 1.0, Precision::default()).unwrap(), 0.0);

        let single = [Sample { x: vec![0.42], y: 0.3 }];
        let stats = CellStats::from_samples(&single, 5, 1).unwrap();
        let q = BigInt::from(987_654);
        let params = NetworkParams::new(1, 1.0, 5, q.clone()).unwrap();
        let z = crate::network::forward(&params, &[0.42], 64).unwrap();
        let risk = empirical_risk(&q, &stats, 1.0, Precision::default()).unwrap();
        assert!((risk - (0.3 - z).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn erm_recovers_noiseless_network() {
        let target = NetworkParams::new(1, 1.0, 4, BigInt::from(-377)).unwrap();
        let network = Network::new(target, Precision::default()).unwrap();
        let data: Vec<Sample> = generate_data(&zero(1), 200, 5)
            .into_iter()
            .map(|s| Sample { y: network.eval(&s.x).unwrap(), x: s.x })
            .collect();
        let fit = erm_fit(&data, 1.0, 1, &ErmConfig::exhaustive(4, 1000u32.into())).unwrap();
        assert_eq!(fit.risk, 0.0);
        assert!(fit.risk <= fit.risk_at_zero);
        let naive = naive_risk(&NetworkParams::new(1, 1.0, 4, fit.q.clone()).unwrap(), &data).unwrap();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn erm_is_pool_independent_and_random_is_seeded() {
        let data = generate_data(&zero(1), 60, 8);
        let cfg = ErmConfig::exhaustive(3, 20_000u32.into());
        let reference = erm_fit(&data, 1.0, 1, &cfg).unwrap();
        for threads in [2, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            assert_eq!(pool.install(|| erm_fit(&data, 1.0, 1, &cfg)).unwrap(), reference);
        }
        let random = ErmConfig {
            strategy: Strategy::Random,
            seed: 2,
            sample_budget: 5000,
            ..cfg.clone()
        };
        let a = erm_fit(&data, 1.0, 1, &random).unwrap();
        assert_eq!(a, erm_fit(&data, 1.0, 1, &random).unwrap());
        assert!(a.risk >= reference.risk - 1e-12);
        let huge = ErmConfig {
            q_cap: BigUint::one() << 200u32,
            sample_budget: 50,
            ..random
        };
        assert!(erm_fit(&data, 1.0, 1, &huge).unwrap().risk.is_finite());
    }

    #[test]
    fn schedule_examples() {
        let s = schedule(27, &spec(0.5, 1.0), 1).unwrap();
        assert_eq!((s.mesh, s.cells), (3, 4));
        // 5^11 * (8 * 3)^4
        assert_eq!(s.q_n, BigUint::from(5u32).pow(11) * BigUint::from(24u32).pow(4));
        assert_eq!(schedule(1, &spec(0.75, 1.0), 1).unwrap().mesh, 2);
        let half = HolderSpec::new(PositiveRatio::new(1, 2).unwrap(), 2.0, 1.0).unwrap();
        // (2F)^2 = 16
        assert_eq!(schedule(1, &half, 3).unwrap().mesh, 16);
        // 28^(1/3) = 3.036..
        assert_eq!(schedule(28, &spec(0.5, 1.0), 1).unwrap().mesh, 4);
    }

    #[test]
    fn prediction_error_examples() {
        let params = NetworkParams::new(1, 1.0, 3, BigInt::zero()).unwrap();
        let network = Network::new(params, Precision::default()).unwrap();
        let mc = prediction_error_mc(&network, &zero(1), 1000, 1).unwrap();
        assert_eq!((mc.mean, mc.std_error), (1.0, 0.0));
        assert!((prediction_error_quadrature(&network, &zero(1), 3).unwrap() - 1.0).abs() < 1e-15);

        let f0 = Registered::parse("cosine:amp=0.5,freq=1").unwrap().instantiate(2, None).unwrap();
        let params = NetworkParams::new(2, 1.0, 3, BigInt::from(4242)).unwrap();
        let network = Network::new(params, Precision::default()).unwrap();
        let mc = prediction_error_mc(&network, &f0, 100_000, 7).unwrap();
        let quad = prediction_error_quadrature(&network, &f0, 8).unwrap();
        assert!((mc.mean - quad).abs() <= 3.0 * mc.std_error, "{mc:?} vs {quad}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for order in 1..8 {
            let rule = gauss_legendre(order);
            let total: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14);
            let deg = 2 * order - 1;
            let integral: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((integral - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn risk_bound_examples() {
        let b = risk_bound(1.0, 1 << 40, &BigUint::from(34992u32), 0.0, 1.0);
        assert!((b.log_term - 16.094_758_119_541_887).abs() < 1e-12);
        assert!((b.value - 128.0).abs() < 1e-6);
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let exact = risk_bound_exact(&r(1, 10), 20, &r(16, 1), &r(1, 4), &r(3, 2));
        // 4 [1/4 + 9/4 (288 + 72)/20 + 32/10 * 3/2] = 4 [1/4 + 81/2 + 24/5]
        assert_eq!(exact, r(4, 1) * (r(1, 4) + r(81, 2) + r(24, 5)));
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [10.0f64, 100.0, 1000.0].iter().map(|&n| (n, 3.0 * n.powf(-0.5))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
        assert!((theoretical_exponent(&spec(1.0, 1.0), 1) + 2.0 / 3.0).abs() < 1e-15);
    }
}
