//! Constructive sup-norm approximation of Hölder functions by a single
//! network: pick the mesh, place one representative per cell, turn function
//! values into torus targets and search for the weight.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

pub use crate::functions::{HolderSpec, TargetFunction};

use crate::exact::{ceil_root, decimal_digits, pow_rational, rational_from_f64, rational_string};
use crate::kronecker::{q_bound, search_q, SearchConfig, SearchError, Strategy, TargetVector};
use crate::network::{
    cell_count, cell_of_index, GridIndex, Network, NetworkError, NetworkParams, Precision,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApproxError {
    #[error("f({point:?}) = {value} is outside (-K, K) with K = {bound}")]
    ClassViolation { point: Vec<f64>, value: f64, bound: f64 },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid approximation request: {0}")]
    Invalid(String),
}

/// `ceil((2F/eps)^(1/beta))`, exactly for the binary values of `F` and `eps`.
pub fn mesh_size(eps: &BigRational, spec: &HolderSpec) -> u64 {
    let ratio = BigRational::from_integer(2.into()) * rational_from_f64(spec.f_const) / eps;
    let m = ceil_root(&pow_rational(&ratio, spec.beta.denom()), spec.beta.numer());
    m.to_u64().unwrap_or(u64::MAX).max(1)
}

/// Center of each cell, in index order `1..=N`.
pub fn cell_representatives(mesh: u64, dim: usize) -> Result<Vec<Vec<f64>>, NetworkError> {
    let cells = cell_count(mesh, dim).ok_or_else(|| {
        NetworkError::InvalidParams(format!("(M+1)^d too large for M={mesh}, d={dim}"))
    })?;
    (1..=cells)
        .map(|i| Ok(cell_of_index(GridIndex::new(i, cells)?, mesh, dim)?.center()))
        .collect()
}

/// `b_i = (f(y_i) + K) / (2K)`, exactly for the binary values involved.
pub fn targets_from_function(
    f: &TargetFunction,
    reps: &[Vec<f64>],
    k_bound: f64,
) -> Result<TargetVector, ApproxError> {
    let k = rational_from_f64(k_bound);
    let two_k = &k + &k;
    let values = reps
        .iter()
        .map(|y| {
            let value = f.eval(y);
            if !(value.is_finite() && value.abs() < k_bound) {
                return Err(ApproxError::ClassViolation {
                    point: y.clone(),
                    value,
                    bound: k_bound,
                });
            }
            Ok((rational_from_f64(value) + &k) / &two_k)
        })
        .collect::<Result<Vec<_>, _>>()?;
    TargetVector::new(values).map_err(|e| ApproxError::Invalid(e.to_string()))
}

/// Search statistics carried into the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchStats {
    pub strategy: Strategy,
    pub scanned: u64,
    pub precision_bits: u32,
    pub q_cap: String,
    pub discrepancy_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximationReport {
    pub function: String,
    pub dim: usize,
    pub spec: HolderSpec,
    pub eps: f64,
    pub eps_exact: String,
    pub mesh: u64,
    pub cells: u64,
    /// `eps / (4K)`, exact.
    pub inner_tolerance: String,
    pub q: String,
    pub q_digits: usize,
    /// Weight bound at the inner tolerance.
    pub q_bound: String,
    pub q_bound_digits: usize,
    /// `max_i |Z(y_i) - f(y_i)|` over the representatives.
    pub anchor_error: f64,
    pub grid_resolution: u64,
    pub grid_sup_error: f64,
    /// `eps/2 + F (2M)^-beta`.
    pub analytic_bound: f64,
    pub search: SearchStats,
}

/// Knobs for [`build_approximant`] beyond the class and tolerance.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Search template; its tolerance is replaced by `eps / (4K)` and its cap
    /// is clipped to the weight bound.
    pub search: SearchConfig,
    /// Points per axis for [`sup_error_grid`]; 0 skips the grid.
    pub grid_resolution: u64,
    pub precision: Precision,
}

pub fn inner_tolerance(eps: &BigRational, k_bound: f64) -> BigRational {
    eps / (BigRational::from_integer(4.into()) * rational_from_f64(k_bound))
}

pub fn analytic_bound(eps: f64, spec: &HolderSpec, mesh: u64) -> f64 {
    eps / 2.0 + spec.f_const * (2.0 * mesh as f64).powf(-spec.beta.to_f64())
}

pub fn build_approximant(
    f: &TargetFunction,
    eps: &BigRational,
    options: &BuildOptions,
) -> Result<(NetworkParams, ApproximationReport), ApproxError> {
    if eps <= &BigRational::from_integer(0.into()) {
        return Err(ApproxError::Invalid("eps must be positive".into()));
    }
    let spec = f.spec();
    let dim = f.dim();
    let mesh = mesh_size(eps, &spec);
    let reps = cell_representatives(mesh, dim)?;
    let cells = reps.len() as u64;
    let targets = targets_from_function(f, &reps, spec.k_bound)?;
    let tolerance = inner_tolerance(eps, spec.k_bound);
    let bound = q_bound(reps.len(), &tolerance);

    let mut config = options.search.clone();
    config.eps = tolerance.clone();
    config.q_cap = config.q_cap.min(bound.clone());
    let found = search_q(&targets, &config)?;

    let params = NetworkParams::new(dim, spec.k_bound, mesh, found.q.clone())?;
    let network = Network::new(params.clone(), options.precision)?;
    let anchor_error = reps
        .iter()
        .zip(network.cell_values())
        .map(|(y, z)| (z - f.eval(y)).abs())
        .fold(0.0, f64::max);
    let grid_sup_error = if options.grid_resolution > 0 {
        sup_error_on(&network, f, options.grid_resolution)?
    } else {
        f64::NAN
    };
    let eps_f64 = eps.to_f64().unwrap_or(f64::NAN);
    let report = ApproximationReport {
        function: f.name().to_owned(),
        dim,
        spec,
        eps: eps_f64,
        eps_exact: rational_string(eps),
        mesh,
        cells,
        inner_tolerance: rational_string(&tolerance),
        q: found.q.to_string(),
        q_digits: decimal_digits(found.q.magnitude()),
        q_bound: bound.to_string(),
        q_bound_digits: decimal_digits(&bound),
        anchor_error,
        grid_resolution: options.grid_resolution,
        grid_sup_error,
        analytic_bound: analytic_bound(eps_f64, &spec, mesh),
        search: SearchStats {
            strategy: found.strategy,
            scanned: found.scanned,
            precision_bits: found.precision_bits,
            q_cap: config.q_cap.to_string(),
            discrepancy_upper: found.discrepancy_upper.to_f64().unwrap_or(f64::NAN),
        },
    };
    Ok((params, report))
}

/// Coordinates `j/(R-1)` for `j < R`, plus every cell edge `m/M` and the
/// float just below it.
pub fn grid_axis(resolution: u64, mesh: u64) -> Vec<f64> {
    let mut axis: Vec<f64> = match resolution {
        0 => Vec::new(),
        1 => vec![0.0],
        r => (0..r).map(|j| j as f64 / (r - 1) as f64).collect(),
    };
    for m in 1..=mesh {
        let edge = m as f64 / mesh as f64;
        axis.push(edge);
        axis.push(edge.next_down());
    }
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    axis
}

fn sup_error_on(network: &Network, f: &TargetFunction, resolution: u64) -> Result<f64, NetworkError> {
    let params = network.params();
    let axis = grid_axis(resolution, params.mesh());
    let dim = params.dim();
    let total = (axis.len() as u64)
        .checked_pow(dim as u32)
        .ok_or_else(|| NetworkError::InvalidParams("grid too large".into()))?;
    let per_row = axis.len() as u64;
    (0..total.div_ceil(per_row))
        .into_par_iter()
        .map(|row| {
            let mut x = vec![0.0; dim];
            let mut rest = row;
            for xk in x.iter_mut().skip(1) {
                *xk = axis[(rest % per_row) as usize];
                rest /= per_row;
            }
            let mut worst = 0.0f64;
            for &x0 in &axis {
                x[0] = x0;
                worst = worst.max((network.eval(&x)? - f.eval(&x)).abs());
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// `max |Z(x) - f(x)|` over the product of [`grid_axis`] coordinates.
pub fn sup_error_grid(
    params: &NetworkParams,
    f: &TargetFunction,
    resolution: u64,
) -> Result<f64, NetworkError> {
    let network = Network::new(params.clone(), Precision::default())?;
    sup_error_on(&network, f, resolution)
}

impl BuildOptions {
    /// Exhaustive search up to `q_cap`, grid of `grid_resolution` per axis.
    pub fn exhaustive(q_cap: BigUint, grid_resolution: u64) -> Self {
        Self {
            search: SearchConfig::exhaustive(BigRational::one(), q_cap),
            grid_resolution,
            precision: Precision::default(),
        }
    }
}

/// `Z` evaluated with a precomputed network, for callers holding params only.
pub fn evaluate(params: &NetworkParams, xs: &[Vec<f64>]) -> Result<Vec<f64>, NetworkError> {
    let network = Network::new(params.clone(), Precision::default())?;
    xs.iter().map(|x| network.eval(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use crate::exact::PositiveRatio;
    use crate::functions::Registered;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn spec(beta: (u32, u32), f: f64, k: f64) -> HolderSpec {
        HolderSpec::new(PositiveRatio::new(beta.0, beta.1).unwrap(), f, k).unwrap()
    }

    fn zero(dim: usize) -> TargetFunction {
        TargetFunction::new("zero", dim, spec((1, 1), 1.0, 1.0), |_| 0.0)
    }

    #[test]
    fn mesh_size_examples() {
        assert_eq!(mesh_size(&r(1, 2), &spec((1, 1), 1.0, 1.0)), 4);
        assert_eq!(mesh_size(&r(2, 1), &spec((1, 1), 1.0, 1.0)), 1);
        assert_eq!(mesh_size(&r(3, 1), &spec((7, 3), 1.5, 1.0)), 1);
        assert_eq!(mesh_size(&r(1, 1), &spec((1, 2), 1.0, 1.0)), 4);
        // (2/0.3)^(1/2) = 2.58..
        assert_eq!(mesh_size(&r(3, 10), &spec((2, 1), 1.0, 1.0)), 3);
        // exact integer power: (2/(2/9))^(1/2) = 3
        assert_eq!(mesh_size(&r(2, 9), &spec((2, 1), 1.0, 1.0)), 3);
        assert_eq!(mesh_size(&r(1, 1), &spec((1, 1), f64::MIN_POSITIVE, 1.0)), 1);
    }

    #[test]
    fn representatives_in_index_order() {
        assert_eq!(cell_representatives(1, 1).unwrap(), vec![vec![0.5], vec![1.0]]);
        assert_eq!(
            cell_representatives(4, 1).unwrap(),
            vec![vec![0.125], vec![0.375], vec![0.625], vec![0.875], vec![1.0]]
        );
        assert_eq!(
            cell_representatives(1, 2).unwrap(),
            vec![vec![0.5, 0.5], vec![1.0, 0.5], vec![0.5, 1.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn targets_examples() {
        let t = targets_from_function(&zero(1), &[vec![0.2], vec![0.7]], 1.0).unwrap();
        assert_eq!(t.values(), &[r(1, 2), r(1, 2)]);
        let half = TargetFunction::new("half", 1, spec((1, 1), 1.0, 1.0), |_| 0.5);
        assert_eq!(targets_from_function(&half, &[vec![0.1]], 1.0).unwrap().values(), &[r(3, 4)]);
        let cosine = Registered::parse("cosine").unwrap().instantiate(1, None).unwrap();
        let b = targets_from_function(&cosine, &[vec![0.1]], 1.0).unwrap().to_f64()[0];
        assert!((b - 0.745_016_644_460_310_41).abs() < 1e-15);
        let big = TargetFunction::new("one", 1, spec((1, 1), 1.0, 1.0), |_| 1.0);
        assert!(matches!(
            targets_from_function(&big, &[vec![0.1]], 1.0),
            Err(ApproxError::ClassViolation { .. })
        ));
    }

    #[test]
    fn zero_function_builds() {
        let (params, report) =
            build_approximant(&zero(1), &r(1, 2), &BuildOptions::exhaustive(10_000_000u32.into(), 256)).unwrap();
        assert_eq!(params.mesh(), 4);
        let network = Network::new(params, Precision::default()).unwrap();
        for z in network.cell_values() {
            assert!(z.abs() <= 0.25);
        }
        assert!(report.grid_sup_error <= 0.5);
        assert_eq!(report.inner_tolerance, "1/8");
        assert_eq!(report.q_bound, q_bound(5, &r(1, 8)).to_string());

        // eps = 2K: q = 0 already meets the tolerance 1/2
        let (params, report) =
            build_approximant(&zero(2), &r(2, 1), &BuildOptions::exhaustive(10u32.into(), 64)).unwrap();
        assert_eq!(params.weight(), &BigInt::from(0));
        assert_eq!(report.grid_sup_error, 1.0);
    }

    #[test]
    fn sup_error_examples() {
        let params = NetworkParams::new(1, 1.0, 3, BigInt::from(0)).unwrap();
        assert_eq!(sup_error_grid(&params, &zero(1), 64).unwrap(), 1.0);
        let q = BigInt::from(123_456);
        let params = NetworkParams::new(2, 1.0, 3, q).unwrap();
        let network = Network::new(params.clone(), Precision::default()).unwrap();
        let itself = TargetFunction::new("itself", 2, spec((1, 1), 1.0, 1.0), move |x| network.eval(x).unwrap());
        assert_eq!(sup_error_grid(&params, &itself, 50).unwrap(), 0.0);
    }

    #[test]
    fn grid_axis_includes_edges() {
        let axis = grid_axis(5, 4);
        assert!(axis.contains(&0.25f64.next_down()));
        assert!(axis.contains(&1.0f64.next_down()));
        assert_eq!(axis.first(), Some(&0.0));
        assert_eq!(axis.last(), Some(&1.0));
    }
}
