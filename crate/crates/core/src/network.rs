//! The single-weight network `Z(x) = 2K * frac(q * sigma(k_M + g_M(x))) - K`.
//!
//! `sigma` maps the `m`-th triangular block `((m-1)m/2, m(m+1)/2]` of the
//! naturals onto the roots `2^(1/(m+1)), ..., 2^(m/(m+1))`, so with
//! `N = (M+1)^d` and `k_M = (N-1)N/2` the shifted index `k_M + i` picks out
//! `2^(i/(N+1))` for every grid cell `i`.

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::highprec::{
    self, escalate, frac_mult_interval, frac_mult_word, pow2_root, FixedPoint, PrecisionError,
    DEFAULT_PRECISION_CAP,
};

/// Output tolerance exponent: the fractional part is pinned to `2^-40`.
pub const DEFAULT_TOLERANCE_BITS: u32 = 40;

/// Weights up to this magnitude are evaluated on the 64-bit word path.
const WORD_PATH_MAX_WEIGHT: u64 = 1 << (64 - DEFAULT_TOLERANCE_BITS);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid network parameters: {0}")]
    InvalidParams(String),
    #[error("sigma block lookup needs a positive integer argument")]
    ZeroArgument,
    #[error("coordinate {axis} = {value} lies outside [0, 1]")]
    OutOfDomain { axis: usize, value: f64 },
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid index {index} outside 1..={cells}")]
    IndexOutOfRange { index: u64, cells: u64 },
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

/// `(d, K, M, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    dim: usize,
    output_bound: f64,
    mesh: u64,
    #[serde(with = "bigint_string")]
    weight: BigInt,
}

impl NetworkParams {
    pub fn new(
        dim: usize,
        output_bound: f64,
        mesh: u64,
        weight: BigInt,
    ) -> Result<Self, NetworkError> {
        if dim == 0 {
            return Err(NetworkError::InvalidParams("dimension must be at least 1".into()));
        }
        if !(output_bound.is_finite() && output_bound > 0.0) {
            return Err(NetworkError::InvalidParams(format!(
                "output bound K must be positive, got {output_bound}"
            )));
        }
        if mesh == 0 {
            return Err(NetworkError::InvalidParams("mesh M must be at least 1".into()));
        }
        // sigma(k_M + i) uses root degree N + 1, which must fit in u32
        let cells = cell_count(mesh, dim)
            .filter(|&n| n < u64::from(u32::MAX))
            .ok_or_else(|| {
                NetworkError::InvalidParams(format!("(M+1)^d too large for M={mesh}, d={dim}"))
            })?;
        debug_assert!(cells >= 2);
        Ok(Self {
            dim,
            output_bound,
            mesh,
            weight,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn output_bound(&self) -> f64 {
        self.output_bound
    }

    pub fn mesh(&self) -> u64 {
        self.mesh
    }

    pub fn weight(&self) -> &BigInt {
        &self.weight
    }

    pub fn with_weight(&self, weight: BigInt) -> Self {
        Self {
            weight,
            ..self.clone()
        }
    }

    /// `N = (M+1)^d`.
    pub fn cells(&self) -> u64 {
        cell_count(self.mesh, self.dim).expect("validated at construction")
    }

    /// `k_M = (N-1)N/2`.
    pub fn sigma_offset(&self) -> u64 {
        let n = self.cells();
        (n - 1) * n / 2
    }
}

pub fn cell_count(mesh: u64, dim: usize) -> Option<u64> {
    let dim = u32::try_from(dim).ok()?;
    mesh.checked_add(1)?.checked_pow(dim)
}

/// Cell number `g_M(x)` in `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridIndex(u64);

impl GridIndex {
    pub fn new(index: u64, cells: u64) -> Result<Self, NetworkError> {
        if index == 0 || index > cells {
            return Err(NetworkError::IndexOutOfRange { index, cells });
        }
        Ok(Self(index))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// Zero-based position, for indexing per-cell tables.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }
}

/// Block `m` and offset `x - (m-1)m/2` for `(m-1)m/2 < x <= m(m+1)/2`.
pub fn triangular_block(x: u64) -> Result<(u64, u64), NetworkError> {
    if x == 0 {
        return Err(NetworkError::ZeroArgument);
    }
    let x = u128::from(x);
    let tri = |m: u128| m * (m + 1) / 2;
    let mut m = ((8 * x + 1).sqrt() - 1) / 2;
    while tri(m) < x {
        m += 1;
    }
    while m > 1 && tri(m - 1) >= x {
        m -= 1;
    }
    let offset = x - tri(m - 1);
    Ok((m as u64, offset as u64))
}

/// Exponent `e` with `sigma(x) = 2^e` for a natural `x`.
pub fn sigma_exponent(x: u64) -> Result<Ratio<u64>, NetworkError> {
    let (m, offset) = triangular_block(x)?;
    Ok(Ratio::new(offset, m + 1))
}

/// `sigma` on a natural argument, rounded down to `frac_bits` bits.
pub fn sigma_natural(x: u64, frac_bits: u32) -> Result<FixedPoint, NetworkError> {
    let (m, offset) = triangular_block(x)?;
    let degree = u32::try_from(m + 1)
        .map_err(|_| NetworkError::InvalidParams(format!("sigma({x}) root degree too large")))?;
    Ok(pow2_root(offset as u32, degree, frac_bits)?)
}

/// `sigma` on the reals: zero away from the positive integers.
pub fn sigma(x: f64, frac_bits: u32) -> Result<FixedPoint, NetworkError> {
    if x.is_finite() && x >= 1.0 && x.fract() == 0.0 && x < 9_007_199_254_740_992.0 {
        sigma_natural(x as u64, frac_bits)
    } else {
        Ok(FixedPoint::zero(frac_bits))
    }
}

/// `floor(mesh * x)` for `x` in `[0, 1]`, exact for the binary value of `x`.
pub(crate) fn scaled_floor(mesh: u64, x: f64) -> u64 {
    let m = mesh as f64;
    let mut k = (m * x).floor();
    // the fused residual m*x - k has the sign of the exact residual
    if m.mul_add(x, -k) < 0.0 {
        k -= 1.0;
    } else if m.mul_add(x, -(k + 1.0)) >= 0.0 {
        k += 1.0;
    }
    (k.max(0.0) as u64).min(mesh)
}

fn check_point(x: &[f64], dim: usize) -> Result<(), NetworkError> {
    if x.len() != dim {
        return Err(NetworkError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    for (axis, &value) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(NetworkError::OutOfDomain { axis, value });
        }
    }
    Ok(())
}

/// `g_M(x) = 1 + sum_k (M+1)^(k-1) floor(M x_k)`.
pub fn grid_index(x: &[f64], mesh: u64) -> Result<GridIndex, NetworkError> {
    check_point(x, x.len())?;
    if x.is_empty() {
        return Err(NetworkError::DimensionMismatch { expected: 1, got: 0 });
    }
    let cells = cell_count(mesh, x.len())
        .ok_or_else(|| NetworkError::InvalidParams("(M+1)^d overflows".into()))?;
    let base = mesh + 1;
    let index = x
        .iter()
        .rev()
        .fold(0u64, |acc, &xk| acc * base + scaled_floor(mesh, xk));
    GridIndex::new(index + 1, cells)
}

/// The cell `J_i = I_{M,m}`, an axis-aligned box described by its digits.
///
/// Digit `m < M` on an axis spans `[m/M, (m+1)/M)`; digit `M` is the face
/// `{1}` left over by intersecting `[1, 1 + 1/M)` with `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    digits: Vec<u64>,
    mesh: u64,
}

impl Cell {
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Per-axis `(lower, upper, upper_closed)`. Lower bounds are rounded up
    /// to the first `f64` inside the cell.
    pub fn bounds(&self) -> Vec<(f64, f64, bool)> {
        let m = self.mesh as f64;
        self.digits
            .iter()
            .map(|&digit| {
                if digit == self.mesh {
                    return (1.0, 1.0, true);
                }
                let mut lower = digit as f64 / m;
                if scaled_floor(self.mesh, lower) < digit {
                    lower = lower.next_up();
                }
                (lower, (digit + 1) as f64 / m, false)
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.digits.len()
            && x.iter().zip(&self.digits).all(|(&xk, &digit)| {
                (0.0..=1.0).contains(&xk) && scaled_floor(self.mesh, xk) == digit
            })
    }

    /// Midpoint of the cell; `1` on degenerate axes.
    pub fn center(&self) -> Vec<f64> {
        let twice = 2.0 * self.mesh as f64;
        self.digits
            .iter()
            .map(|&digit| {
                if digit == self.mesh {
                    1.0
                } else {
                    (2 * digit + 1) as f64 / twice
                }
            })
            .collect()
    }

    /// Lebesgue measure; zero whenever some axis is degenerate.
    pub fn volume(&self) -> f64 {
        if self.digits.contains(&self.mesh) {
            0.0
        } else {
            (self.mesh as f64).powi(-(self.digits.len() as i32))
        }
    }
}

/// Inverse of [`grid_index`]: the cell on which `g_M` equals `index`.
pub fn cell_of_index(index: GridIndex, mesh: u64, dim: usize) -> Result<Cell, NetworkError> {
    let cells = cell_count(mesh, dim)
        .ok_or_else(|| NetworkError::InvalidParams("(M+1)^d overflows".into()))?;
    let index = GridIndex::new(index.get(), cells)?;
    let base = mesh + 1;
    let mut rest = index.get() - 1;
    let digits = (0..dim)
        .map(|_| {
            let (q, r) = rest.div_rem(&base);
            rest = q;
            r
        })
        .collect();
    Ok(Cell { digits, mesh })
}

/// Precision controls for certified network evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    pub start_bits: u32,
    pub cap: u32,
    /// The fractional part is resolved to within `2^-tolerance_bits`.
    pub tolerance_bits: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            start_bits: 64,
            cap: DEFAULT_PRECISION_CAP,
            tolerance_bits: DEFAULT_TOLERANCE_BITS,
        }
    }
}

impl Precision {
    pub fn starting_at(start_bits: u32) -> Self {
        Self {
            start_bits,
            ..Self::default()
        }
    }
}

pub(crate) fn output_from_fraction(fraction: f64, bound: f64) -> f64 {
    let v = 2.0 * bound * fraction - bound;
    if v >= bound {
        f64::from_bits(bound.to_bits() - 1)
    } else {
        v
    }
}

/// Certified `frac(q * 2^(i/(N+1)))` for cell `i`, as an `f64` below one.
pub(crate) fn cell_fraction(
    weight: &BigInt,
    sigma_arg: u64,
    precision: Precision,
) -> Result<f64, NetworkError> {
    let tolerance_ok = |radius: &BigUint, bits: u32| {
        radius.bits() + u64::from(precision.tolerance_bits) <= u64::from(bits)
    };
    if let Some(q) = weight.to_i64().filter(|q| q.unsigned_abs() <= WORD_PATH_MAX_WEIGHT) {
        if precision.tolerance_bits <= DEFAULT_TOLERANCE_BITS {
            let alpha = sigma_natural(sigma_arg, 64)?.frac_word();
            let (center, radius) = frac_mult_word(q, alpha);
            let wraps = center < radius || u128::from(center) + u128::from(radius) >> 64 != 0;
            if !wraps {
                return Ok(highprec::word_to_unit_f64(center));
            }
        }
    }
    let start = precision
        .start_bits
        .max(weight.bits() as u32 + precision.tolerance_bits + 1);
    let fraction = escalate(start, precision.cap, |bits| {
        let alpha = sigma_natural(sigma_arg, bits).map_err(|e| match e {
            NetworkError::Precision(p) => p,
            _ => PrecisionError::CapExceeded { cap: bits },
        })?;
        let iv = frac_mult_interval(weight, &alpha)?;
        Ok((tolerance_ok(iv.radius_units(), bits) && !iv.wraps()).then(|| iv.center_f64()))
    })?;
    Ok(fraction)
}

/// Analytic form `2K frac(q sigma(k_M + g_M(x))) - K`, with `frac_bits` as the
/// starting precision.
pub fn forward(params: &NetworkParams, x: &[f64], frac_bits: u32) -> Result<f64, NetworkError> {
    forward_with(params, x, Precision::starting_at(frac_bits))
}

pub fn forward_with(
    params: &NetworkParams,
    x: &[f64],
    precision: Precision,
) -> Result<f64, NetworkError> {
    check_point(x, params.dim)?;
    let index = grid_index(x, params.mesh)?;
    let fraction = cell_fraction(
        &params.weight,
        params.sigma_offset() + index.get(),
        precision,
    )?;
    Ok(output_from_fraction(fraction, params.output_bound))
}

/// Evaluates the displayed layer composition step by step:
/// `M*I_d`, floor, inner product with `(1, M+1, ...)`, `floor(. + 1)`,
/// duplication, `(floor; sigma_{k_M})`, `diag(1, q)`, `(sigma_{k_M}; floor)`
/// and the affine output `(2Kq, -2K) . - K`.
pub fn forward_layerwise(
    params: &NetworkParams,
    x: &[f64],
    frac_bits: u32,
) -> Result<f64, NetworkError> {
    check_point(x, params.dim)?;
    let k = params.output_bound;
    let q = &params.weight;
    let offset = params.sigma_offset();

    let floors: Vec<u64> = x.iter().map(|&xk| scaled_floor(params.mesh, xk)).collect();
    let mut weight = 1u64;
    let mut inner = 0u64;
    for digit in floors {
        inner += weight * digit;
        weight *= params.mesh + 1;
    }
    // floor_1, then duplication into two lanes
    let shifted = inner + 1;
    let [upper, lower] = [shifted, shifted];
    // (floor_0; sigma_{k_M}): the upper lane is already an integer
    let lower_sigma_arg = lower + offset;

    let start = frac_bits.max(q.bits() as u32 + DEFAULT_TOLERANCE_BITS + 1);
    let value = escalate(start, DEFAULT_PRECISION_CAP, |bits| {
        let alpha = sigma_natural(lower_sigma_arg, bits).map_err(|_| PrecisionError::CapExceeded { cap: bits })?;
        // diag(1, q): lower lane becomes q * sigma, known to within |q| units
        let product = q * BigInt::from(alpha.mantissa().clone());
        let slack = BigInt::from(q.magnitude().clone());
        let scale = BigInt::from(1u8) << bits;
        // (sigma_{k_M}; floor_0) on (upper, lower)
        let floor_lo = (&product - &slack).div_floor(&scale);
        let floor_hi = (&product + &slack).div_floor(&scale);
        if floor_lo != floor_hi || slack.bits() + u64::from(DEFAULT_TOLERANCE_BITS) > u64::from(bits) {
            return Ok(None);
        }
        let alpha_again = sigma_natural(upper + offset, bits).map_err(|_| PrecisionError::CapExceeded { cap: bits })?;
        // (2Kq, -2K) . (sigma, floor) - K, with q * sigma re-formed from the upper lane
        let lane = q * BigInt::from(alpha_again.mantissa().clone()) - floor_lo * &scale;
        let frac = lane.to_biguint().unwrap_or_default();
        Ok(Some(highprec::dyadic_to_f64_floor(&frac, bits)))
    })?;
    Ok(output_from_fraction(value, k))
}

/// Network with all `N` cell outputs precomputed.
#[derive(Debug, Clone)]
pub struct Network {
    params: NetworkParams,
    values: Vec<f64>,
}

impl Network {
    pub fn new(params: NetworkParams, precision: Precision) -> Result<Self, NetworkError> {
        let cells = params.cells();
        let offset = params.sigma_offset();
        let values = (1..=cells)
            .into_par_iter()
            .map(|i| {
                cell_fraction(&params.weight, offset + i, precision)
                    .map(|f| output_from_fraction(f, params.output_bound))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { params, values })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    /// Output on each cell, in index order.
    pub fn cell_values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, index: GridIndex) -> f64 {
        self.values[index.slot()]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, NetworkError> {
        check_point(x, self.params.dim)?;
        Ok(self.value_at(grid_index(x, self.params.mesh)?))
    }
}

/// Pointwise [`forward`] over many points, computing each occupied cell once.
pub fn forward_batch(
    params: &NetworkParams,
    xs: &[Vec<f64>],
    frac_bits: u32,
) -> Result<Vec<f64>, NetworkError> {
    let indices = xs
        .iter()
        .map(|x| {
            check_point(x, params.dim)?;
            grid_index(x, params.mesh)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut occupied: Vec<GridIndex> = indices.clone();
    occupied.sort_unstable();
    occupied.dedup();
    let precision = Precision::starting_at(frac_bits);
    let offset = params.sigma_offset();
    let values = occupied
        .par_iter()
        .map(|i| {
            cell_fraction(&params.weight, offset + i.get(), precision)
                .map(|f| output_from_fraction(f, params.output_bound))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(indices
        .iter()
        .map(|i| values[occupied.binary_search(i).expect("index was collected")])
        .collect())
}

pub(crate) mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
