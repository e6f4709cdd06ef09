//! Named test functions with declared Hölder constants.
//!
//! A description has the form `name` or `name:key=value,key=value`:
//!
//! | name       | value                            | keys (defaults)          |
//! |------------|----------------------------------|--------------------------|
//! | `zero`     | `0`                              |                          |
//! | `constant` | `c`                              | `c` (0)                  |
//! | `affine`   | `c + slope * sum(x)`             | `c` (0), `slope` (0.25)  |
//! | `cosine`   | `amp * cos(freq * sum(x))`       | `amp` (0.5), `freq` (2)  |
//! | `product`  | `amp * prod(cos(freq * x_k))`    | `amp` (0.5), `freq` (2)  |
//!
//! Every entry is Lipschitz in the sup norm, so `beta = 1` with the constant
//! reported by [`Registered::default_spec`] is always valid.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exact::PositiveRatio;
use crate::scan::stream_rng;

/// Smoothness class `|f(x) - f(y)| <= F |x - y|_inf^beta`, `|f| < K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderSpec {
    pub beta: PositiveRatio,
    #[serde(rename = "F")]
    pub f_const: f64,
    #[serde(rename = "K")]
    pub k_bound: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FunctionError {
    #[error("unknown function {0:?} (zero | constant | affine | cosine | product)")]
    UnknownName(String),
    #[error("bad parameter in {input:?}: {reason}")]
    BadParameter { input: String, reason: String },
    #[error("invalid class constants: {0}")]
    InvalidSpec(String),
    #[error("|f(x)| = {value} is not below K = {bound} at x = {point:?}")]
    NotBounded { point: Vec<f64>, value: f64, bound: f64 },
    #[error("Hölder ratio {ratio} exceeds F = {f_const} between {x:?} and {y:?}")]
    NotHolder {
        x: Vec<f64>,
        y: Vec<f64>,
        ratio: f64,
        f_const: f64,
    },
}

impl HolderSpec {
    pub fn new(beta: PositiveRatio, f_const: f64, k_bound: f64) -> Result<Self, FunctionError> {
        if !(f_const.is_finite() && f_const > 0.0) {
            return Err(FunctionError::InvalidSpec(format!("F must be positive, got {f_const}")));
        }
        if !(k_bound.is_finite() && k_bound > 0.0) {
            return Err(FunctionError::InvalidSpec(format!("K must be positive, got {k_bound}")));
        }
        Ok(Self {
            beta,
            f_const,
            k_bound,
        })
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function on `[0, 1]^d` with its declared class.
#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    dim: usize,
    spec: HolderSpec,
    eval: Evaluator,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl TargetFunction {
    /// Wraps an arbitrary evaluator; nothing is checked.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        spec: HolderSpec,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            spec,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> HolderSpec {
        self.spec
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Constant { c: f64 },
    Affine { c: f64, slope: f64 },
    Cosine { amp: f64, freq: f64 },
    Product { amp: f64, freq: f64 },
}

/// A parsed registry entry, not yet bound to a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Registered {
    description: String,
    kind: Kind,
}

fn parse_params(input: &str, body: &str) -> Result<BTreeMap<String, f64>, FunctionError> {
    let bad = |reason: String| FunctionError::BadParameter {
        input: input.to_owned(),
        reason,
    };
    let mut params = BTreeMap::new();
    for pair in body.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got {pair:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| bad(format!("{value:?} is not a number")))?;
        if !value.is_finite() {
            return Err(bad(format!("{key} must be finite")));
        }
        if params.insert(key.trim().to_owned(), value).is_some() {
            return Err(bad(format!("{key} given twice")));
        }
    }
    Ok(params)
}

impl Registered {
    pub fn parse(description: &str) -> Result<Self, FunctionError> {
        let (name, body) = description.split_once(':').unwrap_or((description, ""));
        let mut params = parse_params(description, body)?;
        let mut take = |key: &str, default: f64| params.remove(key).unwrap_or(default);
        let kind = match name.trim() {
            "zero" => Kind::Constant { c: 0.0 },
            "constant" => Kind::Constant { c: take("c", 0.0) },
            "affine" => Kind::Affine {
                c: take("c", 0.0),
                slope: take("slope", 0.25),
            },
            "cosine" => Kind::Cosine {
                amp: take("amp", 0.5),
                freq: take("freq", 2.0),
            },
            "product" => Kind::Product {
                amp: take("amp", 0.5),
                freq: take("freq", 2.0),
            },
            other => return Err(FunctionError::UnknownName(other.to_owned())),
        };
        if let Some(key) = params.keys().next() {
            return Err(FunctionError::BadParameter {
                input: description.to_owned(),
                reason: format!("unknown key {key:?} for {}", name.trim()),
            });
        }
        Ok(Self {
            description: description.trim().to_owned(),
            kind,
        })
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Sup-norm Lipschitz constant on `[0, 1]^dim`, floored at the smallest
    /// positive value so that constants get a valid class.
    pub fn lipschitz(&self, dim: usize) -> f64 {
        let d = dim as f64;
        let l = match self.kind {
            Kind::Constant { .. } => 0.0,
            Kind::Affine { slope, .. } => slope.abs() * d,
            Kind::Cosine { amp, freq } | Kind::Product { amp, freq } => amp.abs() * freq.abs() * d,
        };
        l.max(f64::MIN_POSITIVE)
    }

    /// Upper bound on `sup |f|` over `[0, 1]^dim`.
    pub fn sup_bound(&self, dim: usize) -> f64 {
        match self.kind {
            Kind::Constant { c } => c.abs(),
            Kind::Affine { c, slope } => c.abs().max((c + slope * dim as f64).abs()),
            Kind::Cosine { amp, .. } | Kind::Product { amp, .. } => amp.abs(),
        }
    }

    /// `beta = 1`, `F` the Lipschitz constant, `K = 1` or `2 sup|f|` if larger.
    pub fn default_spec(&self, dim: usize) -> HolderSpec {
        HolderSpec {
            beta: PositiveRatio::new(1, 1).unwrap(),
            f_const: self.lipschitz(dim),
            k_bound: (2.0 * self.sup_bound(dim)).max(1.0),
        }
    }

    pub fn evaluator(&self) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
        let kind = self.kind;
        move |x: &[f64]| match kind {
            Kind::Constant { c } => c,
            Kind::Affine { c, slope } => c + slope * x.iter().sum::<f64>(),
            Kind::Cosine { amp, freq } => amp * (freq * x.iter().sum::<f64>()).cos(),
            Kind::Product { amp, freq } => amp * x.iter().map(|&xk| (freq * xk).cos()).product::<f64>(),
        }
    }

    /// Binds to `dim` with the given class (or the default one) after checking
    /// it numerically with [`verify_class`].
    pub fn instantiate(
        &self,
        dim: usize,
        spec: Option<HolderSpec>,
    ) -> Result<TargetFunction, FunctionError> {
        if dim == 0 {
            return Err(FunctionError::InvalidSpec("dimension must be at least 1".into()));
        }
        let spec = spec.unwrap_or_else(|| self.default_spec(dim));
        let f = TargetFunction::new(self.description.clone(), dim, spec, self.evaluator());
        verify_class(&f)?;
        Ok(f)
    }
}

/// Points per axis for the grid used by [`verify_class`].
pub const VERIFY_RESOLUTION: usize = 257;
/// Random pairs checked by [`verify_class`] in addition to grid neighbours.
pub const VERIFY_PAIRS: u64 = 4096;
const VERIFY_SLACK: f64 = 1e-9;

fn verify_points(dim: usize) -> usize {
    // keep the grid near 2^17 points whatever the dimension
    (131_072f64.powf(1.0 / dim as f64).floor() as usize).clamp(2, VERIFY_RESOLUTION)
}

/// Checks `|f| < K` and the Hölder inequality on a grid, between grid
/// neighbours, and on seeded random pairs.
pub fn verify_class(f: &TargetFunction) -> Result<(), FunctionError> {
    let spec = f.spec;
    let beta = spec.beta.to_f64();
    let holder = |x: &[f64], y: &[f64], fx: f64, fy: f64| -> Result<(), FunctionError> {
        let dist = x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dist == 0.0 {
            return Ok(());
        }
        let ratio = (fx - fy).abs() / dist.powf(beta);
        if ratio > spec.f_const * (1.0 + VERIFY_SLACK) + VERIFY_SLACK {
            return Err(FunctionError::NotHolder {
                x: x.to_vec(),
                y: y.to_vec(),
                ratio,
                f_const: spec.f_const,
            });
        }
        Ok(())
    };
    let bounded = |x: &[f64], fx: f64| -> Result<(), FunctionError> {
        if fx.is_finite() && fx.abs() < spec.k_bound {
            Ok(())
        } else {
            Err(FunctionError::NotBounded {
                point: x.to_vec(),
                value: fx,
                bound: spec.k_bound,
            })
        }
    };

    let per_axis = verify_points(f.dim);
    let step = 1.0 / (per_axis - 1) as f64;
    let total = per_axis.pow(f.dim as u32);
    let mut digits = vec![0usize; f.dim];
    let mut x = vec![0.0; f.dim];
    for _ in 0..total {
        for (xk, &dk) in x.iter_mut().zip(&digits) {
            *xk = dk as f64 * step;
        }
        let fx = f.eval(&x);
        bounded(&x, fx)?;
        for axis in 0..f.dim {
            if digits[axis] + 1 < per_axis {
                let mut y = x.clone();
                y[axis] = (digits[axis] + 1) as f64 * step;
                holder(&x, &y, fx, f.eval(&y))?;
            }
        }
        for digit in digits.iter_mut() {
            *digit += 1;
            if *digit < per_axis {
                break;
            }
            *digit = 0;
        }
    }

    let mut rng = stream_rng(0x5EED, 0);
    for _ in 0..VERIFY_PAIRS {
        let x: Vec<f64> = (0..f.dim).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..f.dim).map(|_| rng.random()).collect();
        let (fx, fy) = (f.eval(&x), f.eval(&y));
        bounded(&x, fx)?;
        holder(&x, &y, fx, fy)?;
    }
    Ok(())
}
