//! Effective simultaneous approximation on the torus by `q * 2^(i/(N+1))`.
//!
//! For any targets `b in [0,1)^N` and `eps > 0` some integer `q` with
//! `|q| <= (N+1)^(2N+3) (2/eps)^N` satisfies
//! `|frac(q 2^(i/(N+1))) - b_i| <= eps` for all `i`. This module computes that
//! bound, certifies the discrepancy of a given `q`, and finds such a `q`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{ceil_to_biguint, pow_rational, rational_from_f64};
use crate::highprec::{
    escalate, frac_mult_interval, frac_mult_word, pow2_root, required_bits, seam_pieces,
    FixedPoint, Pieces, PrecisionError, DEFAULT_PRECISION_CAP,
};
use crate::scan::{self, canonical_rank, canonical_weight, rank_count};

/// Largest weight magnitude an exhaustive scan will reach.
pub const MAX_SCAN_WEIGHT: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("no weight with |q| <= {q_cap} found after {scanned} candidates ({strategy})")]
    NotFound {
        strategy: Strategy,
        q_cap: BigUint,
        scanned: u64,
    },
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid target vector: {0}")]
pub struct TargetError(String);

/// Points `b_1, ..., b_N` of `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetVector {
    values: Vec<BigRational>,
}

impl TargetVector {
    pub fn new(values: Vec<BigRational>) -> Result<Self, TargetError> {
        if values.is_empty() {
            return Err(TargetError("at least one target is required".into()));
        }
        let one = BigRational::one();
        if let Some((i, b)) = values
            .iter()
            .enumerate()
            .find(|(_, b)| b.is_negative() || **b >= one)
        {
            return Err(TargetError(format!("b_{} = {b} is outside [0, 1)", i + 1)));
        }
        if values.len() >= u32::MAX as usize {
            return Err(TargetError("too many targets".into()));
        }
        Ok(Self { values })
    }

    pub fn from_f64(values: &[f64]) -> Result<Self, TargetError> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(TargetError(format!("non-finite target {bad}")));
        }
        Self::new(values.iter().map(|&v| rational_from_f64(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|b| b.to_f64().unwrap_or(f64::NAN)).collect()
    }

    fn root_degree(&self) -> u32 {
        self.values.len() as u32 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Exhaustive,
    Random,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Random => "random",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "random" => Ok(Self::Random),
            other => Err(format!("unknown strategy {other:?} (exhaustive | random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub eps: BigRational,
    pub q_cap: BigUint,
    pub strategy: Strategy,
    pub seed: u64,
    pub sample_budget: u64,
    pub precision_cap: u32,
}

impl SearchConfig {
    pub fn exhaustive(eps: BigRational, q_cap: BigUint) -> Self {
        Self {
            eps,
            q_cap,
            strategy: Strategy::Exhaustive,
            seed: 0,
            sample_budget: 0,
            precision_cap: DEFAULT_PRECISION_CAP,
        }
    }

    pub fn random(eps: BigRational, q_cap: BigUint, seed: u64, sample_budget: u64) -> Self {
        Self {
            strategy: Strategy::Random,
            seed,
            sample_budget,
            ..Self::exhaustive(eps, q_cap)
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !self.eps.is_positive() {
            return Err(SearchError::InvalidConfig("eps must be positive".into()));
        }
        if self.q_cap.is_zero() {
            return Err(SearchError::InvalidConfig("q_cap must be at least 1".into()));
        }
        if self.strategy == Strategy::Random && self.sample_budget == 0 {
            return Err(SearchError::InvalidConfig(
                "random strategy needs a positive sample budget".into(),
            ));
        }
        if self.precision_cap < 64 {
            return Err(SearchError::InvalidConfig("precision cap must be at least 64 bits".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub q: BigInt,
    /// Certified upper bound on `max_i |frac(q 2^(i/(N+1))) - b_i|`.
    pub discrepancy_upper: BigRational,
    /// Candidates examined (canonical positions for exhaustive scans).
    pub scanned: u64,
    pub precision_bits: u32,
    pub strategy: Strategy,
    pub q_cap: BigUint,
}

/// `ceil((N+1)^(2N+3) (2/eps)^N)`, exactly.
pub fn q_bound(n: usize, eps: &BigRational) -> BigUint {
    assert!(n >= 1 && eps.is_positive(), "q_bound needs N >= 1 and eps > 0");
    let n32 = u32::try_from(n).expect("N fits in u32");
    let base = BigRational::from_integer(BigInt::from(n + 1));
    let two_over = BigRational::from_integer(2.into()) / eps;
    ceil_to_biguint(&(pow_rational(&base, 2 * n32 + 3) * pow_rational(&two_over, n32)))
}

/// Certified enclosure `[lower, upper]` of `max_i |frac(q alpha_i) - b_i|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub lower: BigRational,
    pub upper: BigRational,
}

/// Encloses the discrepancy of `q` using roots rounded to `frac_bits` bits.
/// Uses the plain absolute difference, not the wrap-around distance.
pub fn discrepancy(
    q: &BigInt,
    targets: &TargetVector,
    frac_bits: u32,
) -> Result<Discrepancy, PrecisionError> {
    let degree = targets.root_degree();
    let scale = BigRational::from_integer(BigInt::one() << frac_bits);
    let mut lower = BigRational::zero();
    let mut upper = BigRational::zero();
    for (i, b) in targets.values.iter().enumerate() {
        let alpha = pow2_root(i as u32 + 1, degree, frac_bits)?;
        let arc = frac_mult_interval(q, &alpha)?;
        let mut coord_lo: Option<BigRational> = None;
        let mut coord_hi = BigRational::zero();
        for (a, c) in arc.pieces().iter() {
            let a = BigRational::from_integer(a.clone()) / &scale;
            let c = BigRational::from_integer(c.clone()) / &scale;
            let da = (&a - b).abs();
            let dc = (&c - b).abs();
            let nearest = if &a <= b && b <= &c {
                BigRational::zero()
            } else {
                da.clone().min(dc.clone())
            };
            coord_hi = coord_hi.max(da.max(dc));
            coord_lo = Some(match coord_lo {
                Some(lo) => lo.min(nearest),
                None => nearest,
            });
        }
        lower = lower.max(coord_lo.expect("at least one piece"));
        upper = upper.max(coord_hi);
    }
    Ok(Discrepancy { lower, upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Inside,
    Outside,
    Straddles,
}

fn window_side<T: Ord>(pieces: &Pieces<T>, lo: &T, hi: &T) -> Side {
    let mut inside = true;
    let mut outside = true;
    for (a, b) in pieces.iter() {
        inside &= a >= lo && b <= hi;
        outside &= b < lo || a > hi;
    }
    match (inside, outside) {
        (true, _) => Side::Inside,
        (_, true) => Side::Outside,
        _ => Side::Straddles,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Accept { bits: u32 },
    Reject,
}

/// Acceptance windows `[ceil((b-eps) 2^B), floor((b+eps) 2^B)]` at one precision.
struct Level {
    alphas: Vec<FixedPoint>,
    windows: Vec<(BigInt, BigInt)>,
}

/// Accept/reject machinery for one `(targets, eps)` pair.
struct Certifier<'a> {
    targets: &'a TargetVector,
    eps: BigRational,
    alpha_words: Vec<u64>,
    word_windows: Vec<(i128, i128)>,
    word_limit: u64,
    precision_cap: u32,
    levels: Mutex<HashMap<u32, Arc<Level>>>,
}

fn windows_at(targets: &TargetVector, eps: &BigRational, bits: u32) -> Vec<(BigInt, BigInt)> {
    let scale = BigRational::from_integer(BigInt::one() << bits);
    targets
        .values
        .iter()
        .map(|b| {
            let lo = ((b - eps) * &scale).ceil().to_integer();
            let hi = ((b + eps) * &scale).floor().to_integer();
            (lo, hi)
        })
        .collect()
}

impl<'a> Certifier<'a> {
    fn new(targets: &'a TargetVector, eps: &BigRational, precision_cap: u32) -> Self {
        // every discrepancy is below 1, so larger tolerances behave like 2
        let two = BigRational::from_integer(2.into());
        let eps = if *eps > two { two } else { eps.clone() };
        let degree = targets.root_degree();
        let alpha_words = (1..degree)
            .map(|i| pow2_root(i, degree, 64).expect("valid root index").frac_word())
            .collect();
        let word_windows = windows_at(targets, &eps, 64)
            .into_iter()
            .map(|(lo, hi)| (lo.to_i128().unwrap(), hi.to_i128().unwrap()))
            .collect();
        // word path while |q| 2^-64 <= eps/8
        let limit = (&eps * BigRational::from_integer(BigInt::one() << 61u32))
            .floor()
            .to_integer()
            .to_u64()
            .unwrap_or(u64::MAX);
        Self {
            targets,
            eps,
            alpha_words,
            word_windows,
            word_limit: limit.min(1 << 62),
            precision_cap,
            levels: Mutex::new(HashMap::new()),
        }
    }

    fn level(&self, bits: u32) -> Result<Arc<Level>, PrecisionError> {
        if let Some(level) = self.levels.lock().unwrap().get(&bits) {
            return Ok(level.clone());
        }
        let degree = self.targets.root_degree();
        let alphas = (1..degree)
            .map(|i| pow2_root(i, degree, bits))
            .collect::<Result<Vec<_>, _>>()?;
        let level = Arc::new(Level {
            alphas,
            windows: windows_at(self.targets, &self.eps, bits),
        });
        self.levels.lock().unwrap().insert(bits, level.clone());
        Ok(level)
    }

    /// `None` when some coordinate straddles its window at this precision.
    fn classify_word(&self, q: i64) -> Option<Verdict> {
        const MODULUS: i128 = 1 << 64;
        let radius = i128::from(q.unsigned_abs());
        let mut straddles = false;
        for (word, (lo, hi)) in self.alpha_words.iter().zip(&self.word_windows) {
            let (center, _) = frac_mult_word(q, *word);
            let pieces = seam_pieces(i128::from(center), radius, MODULUS);
            match window_side(&pieces, lo, hi) {
                Side::Inside => {}
                Side::Outside => return Some(Verdict::Reject),
                Side::Straddles => straddles = true,
            }
        }
        (!straddles).then_some(Verdict::Accept { bits: 64 })
    }

    fn classify_at(&self, q: &BigInt, bits: u32) -> Result<Option<Verdict>, PrecisionError> {
        let level = self.level(bits)?;
        let mut straddles = false;
        for (alpha, (lo, hi)) in level.alphas.iter().zip(&level.windows) {
            let arc = frac_mult_interval(q, alpha)?;
            match window_side(&arc.pieces(), lo, hi) {
                Side::Inside => {}
                Side::Outside => return Ok(Some(Verdict::Reject)),
                Side::Straddles => straddles = true,
            }
        }
        Ok((!straddles).then_some(Verdict::Accept { bits }))
    }

    fn classify_big(&self, q: &BigInt, start_bits: u32) -> Result<Verdict, PrecisionError> {
        escalate(start_bits, self.precision_cap, |bits| self.classify_at(q, bits))
    }

    fn big_start_bits(&self, magnitude: &BigUint) -> u32 {
        let eighth = &self.eps / BigRational::from_integer(8.into());
        let needed = required_bits(&magnitude.max(&BigUint::one()).clone(), &eighth);
        needed.max(128).next_power_of_two().min(self.precision_cap)
    }

    fn classify(&self, q: i64) -> Result<Verdict, PrecisionError> {
        if q.unsigned_abs() <= self.word_limit {
            if let Some(v) = self.classify_word(q) {
                return Ok(v);
            }
        }
        let q = BigInt::from(q);
        let start = self.big_start_bits(q.magnitude());
        self.classify_big(&q, start)
    }

    fn classify_any(&self, q: &BigInt) -> Result<Verdict, PrecisionError> {
        match q.to_i64() {
            Some(small) => self.classify(small),
            None => self.classify_big(q, self.big_start_bits(q.magnitude())),
        }
    }

    fn result(
        &self,
        q: BigInt,
        bits: u32,
        scanned: u64,
        config: &SearchConfig,
    ) -> Result<SearchResult, PrecisionError> {
        let d = discrepancy(&q, self.targets, bits)?;
        debug_assert!(d.upper <= self.eps);
        Ok(SearchResult {
            q,
            discrepancy_upper: d.upper,
            scanned,
            precision_bits: bits,
            strategy: config.strategy,
            q_cap: config.q_cap.clone(),
        })
    }
}

/// Finds `q` with `|q| <= q_cap` and certified discrepancy at most `eps`.
///
/// The exhaustive strategy returns the first hit in the order
/// `0, +1, -1, +2, ...`; the random strategy returns the accepted draw with
/// the smallest certified discrepancy (ties by that order).
pub fn search_q(targets: &TargetVector, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let certifier = Certifier::new(targets, &config.eps, config.precision_cap);
    match config.strategy {
        Strategy::Exhaustive => search_exhaustive(&certifier, config),
        Strategy::Random => search_random(&certifier, config),
    }
}

fn search_exhaustive(
    certifier: &Certifier<'_>,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let cap = config.q_cap.to_u64().unwrap_or(u64::MAX).min(MAX_SCAN_WEIGHT);
    let end = rank_count(cap);
    let hit = scan::first_hit(end, || {
        |q: i64| match certifier.classify(q)? {
            Verdict::Accept { bits } => Ok::<_, PrecisionError>(Some(bits)),
            Verdict::Reject => Ok(None),
        }
    })?;
    match hit {
        Some((rank, bits)) => Ok(certifier.result(
            BigInt::from(canonical_weight(rank)),
            bits,
            rank + 1,
            config,
        )?),
        None => Err(SearchError::NotFound {
            strategy: Strategy::Exhaustive,
            q_cap: config.q_cap.clone(),
            scanned: end,
        }),
    }
}

/// Sort key: smaller discrepancy, then canonical order.
fn random_key(disc: &BigRational, q: &BigInt) -> (BigRational, BigUint, bool) {
    (disc.clone(), q.magnitude().clone(), q.is_negative())
}

fn search_random(
    certifier: &Certifier<'_>,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let small_cap = config.q_cap.to_i64().filter(|&c| c <= MAX_SCAN_WEIGHT as i64);
    let per_stream: Vec<Result<Option<(BigRational, BigInt, u32)>, PrecisionError>> =
        scan::streams(config.sample_budget)
            .into_par_iter()
            .map(|(stream, count)| {
                let mut rng = scan::stream_rng(config.seed, stream);
                let mut best: Option<(BigRational, BigInt, u32)> = None;
                for _ in 0..count {
                    let q = match small_cap {
                        Some(cap) => BigInt::from(rng.random_range(-cap..=cap)),
                        None => scan::uniform_weight(&mut rng, &config.q_cap),
                    };
                    if let Verdict::Accept { bits } = certifier.classify_any(&q)? {
                        let d = discrepancy(&q, certifier.targets, bits)?.upper;
                        let better = best.as_ref().is_none_or(|(bd, bq, _)| {
                            random_key(&d, &q) < random_key(bd, bq)
                        });
                        if better {
                            best = Some((d, q, bits));
                        }
                    }
                }
                Ok(best)
            })
            .collect();
    let mut best: Option<(BigRational, BigInt, u32)> = None;
    for candidate in per_stream {
        if let Some((d, q, bits)) = candidate? {
            if best
                .as_ref()
                .is_none_or(|(bd, bq, _)| random_key(&d, &q) < random_key(bd, bq))
            {
                best = Some((d, q, bits));
            }
        }
    }
    match best {
        Some((_, q, bits)) => Ok(certifier.result(q, bits, config.sample_budget, config)?),
        None => Err(SearchError::NotFound {
            strategy: Strategy::Random,
            q_cap: config.q_cap.clone(),
            scanned: config.sample_budget,
        }),
    }
}

/// Reference scan: smallest `|q|` up to [`q_bound`] whose certified
/// discrepancy is at most `eps`, decided with [`discrepancy`] alone.
///
/// Sequential and independent of [`search_q`]; meant for small `N`.
pub fn min_q_oracle(targets: &TargetVector, eps: &BigRational) -> Result<Option<u64>, PrecisionError> {
    let bound = q_bound(targets.len(), eps)
        .to_u64()
        .expect("oracle bound must be scannable");
    let eighth = eps / BigRational::from_integer(8.into());
    for magnitude in 0..=bound {
        for q in [magnitude as i64, -(magnitude as i64)] {
            let q = BigInt::from(q);
            let start = required_bits(&BigUint::from(magnitude.max(1)), &eighth).max(8);
            let feasible = escalate(start, DEFAULT_PRECISION_CAP, |bits| {
                let d = discrepancy(&q, targets, bits)?;
                Ok(if d.upper <= *eps {
                    Some(true)
                } else if d.lower > *eps {
                    Some(false)
                } else {
                    None
                })
            })?;
            if feasible {
                return Ok(Some(magnitude));
            }
            if magnitude == 0 {
                break;
            }
        }
    }
    Ok(None)
}

/// Position of `q` in the canonical scan order, if it fits.
pub fn scan_position(q: &BigInt) -> Option<u64> {
    q.to_i64().map(canonical_rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn targets(values: &[f64]) -> TargetVector {
        TargetVector::from_f64(values).unwrap()
    }

    #[test]
    fn q_bound_examples() {
        assert_eq!(q_bound(1, &r(1, 4)), 256u32.into());
        assert_eq!(q_bound(2, &r(1, 2)), 34992u32.into());
        assert_eq!(q_bound(1, &r(2, 1)), 32u32.into());
        // non-dyadic eps: 2^5 * 20 = 640 at eps = 1/10
        assert_eq!(q_bound(1, &r(1, 10)), 640u32.into());
        // ceiling taken last: 2^5 * 2/(3/10) = 213.33..
        assert_eq!(q_bound(1, &r(3, 10)), 214u32.into());
    }

    #[test]
    fn discrepancy_examples() {
        let half = targets(&[0.5]);
        let d = discrepancy(&BigInt::zero(), &half, 64).unwrap();
        assert_eq!((d.lower.clone(), d.upper.clone()), (r(1, 2), r(1, 2)));

        // |frac(sqrt 2) - 1/2| = 0.0857864376269049511983...
        let d = discrepancy(&BigInt::one(), &half, 64).unwrap();
        let expected = 0.085_786_437_626_904_95;
        assert!((d.upper.to_f64().unwrap() - expected).abs() < 1e-15);
        assert!(d.upper >= d.lower && &d.upper - &d.lower <= r(1, 1 << 62));

        // max(|frac(6 2^(1/3)) - 1/2|, |frac(6 2^(2/3)) - 1/2|) = 0.05952629936923898860...
        let d = discrepancy(&6.into(), &targets(&[0.5, 0.5]), 80).unwrap();
        assert!((d.upper.to_f64().unwrap() - 0.059_526_299_369_238_99).abs() < 1e-15);
    }

    #[test]
    fn discrepancy_uses_plain_difference() {
        // frac(q alpha) near 0.99 against b = 0.01: plain distance ~0.98
        let t = targets(&[0.0]);
        let d = discrepancy(&(-1).into(), &t, 64).unwrap();
        // frac(-2^(1/2)) = 0.5857...
        assert!((d.lower.to_f64().unwrap() - 0.585_786_437_626_905).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_examples() {
        let res = search_q(&targets(&[0.5]), &SearchConfig::exhaustive(r(1, 10), 256u32.into())).unwrap();
        assert_eq!(res.q, 1.into());
        assert_eq!(res.scanned, 2);
        assert!((res.discrepancy_upper.to_f64().unwrap() - 0.085_786_437_626_905).abs() < 1e-12);

        let res = search_q(
            &targets(&[0.5, 0.5]),
            &SearchConfig::exhaustive(r(1, 5), 34992u32.into()),
        )
        .unwrap();
        assert_eq!(res.q, 6.into());
        assert!(res.discrepancy_upper <= r(1, 5));

        let res = search_q(&targets(&[0.9, 0.3, 0.7]), &SearchConfig::exhaustive(r(1, 1), 5u32.into())).unwrap();
        assert_eq!(res.q, BigInt::zero());
    }

    #[test]
    fn not_found_carries_range() {
        let err = search_q(&targets(&[0.5, 0.5]), &SearchConfig::exhaustive(r(1, 5), 5u32.into())).unwrap_err();
        assert_eq!(
            err,
            SearchError::NotFound {
                strategy: Strategy::Exhaustive,
                q_cap: 5u32.into(),
                scanned: 11
            }
        );
    }

    #[test]
    fn random_strategy_is_seeded() {
        let t = targets(&[0.25, 0.75, 0.5]);
        let cfg = SearchConfig::random(r(1, 8), 1_000_000u32.into(), 7, 20_000);
        let a = search_q(&t, &cfg).unwrap();
        let b = search_q(&t, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.discrepancy_upper <= r(1, 8));
        assert!(a.q.magnitude() <= &BigUint::from(1_000_000u32));
        assert_eq!(a.scanned, 20_000);
    }

    #[test]
    fn random_strategy_over_huge_range() {
        let t = targets(&[0.5]);
        let cap = q_bound(1, &r(1, 64));
        let cfg = SearchConfig::random(r(1, 64), cap * BigUint::from(10u32).pow(30), 3, 500);
        let res = search_q(&t, &cfg).unwrap();
        assert!(res.precision_bits > 64);
        let check = discrepancy(&res.q, &t, 2 * res.precision_bits).unwrap();
        assert!(check.upper <= r(1, 64));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(min_q_oracle(&targets(&[0.5]), &r(1, 10)).unwrap(), Some(1));
        assert_eq!(min_q_oracle(&targets(&[0.5, 0.5]), &r(1, 5)).unwrap(), Some(6));
        assert_eq!(min_q_oracle(&targets(&[0.0]), &r(1, 100)).unwrap(), Some(0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(TargetVector::from_f64(&[1.0]).is_err());
        assert!(TargetVector::from_f64(&[-0.1]).is_err());
        assert!(TargetVector::from_f64(&[]).is_err());
        let t = targets(&[0.5]);
        assert!(matches!(
            search_q(&t, &SearchConfig::exhaustive(r(0, 1), 5u32.into())),
            Err(SearchError::InvalidConfig(_))
        ));
        assert!(matches!(
            search_q(&t, &SearchConfig::random(r(1, 2), 5u32.into(), 0, 0)),
            Err(SearchError::InvalidConfig(_))
        ));
    }

    #[test]
    fn ambiguous_candidates_escalate() {
        // window edge 2^-70 below frac(3 sqrt 2) forces escalation past 64 bits
        let alpha = pow2_root(1, 2, 256).unwrap();
        let arc = frac_mult_interval(&3.into(), &alpha).unwrap();
        let eps = r(1, 4);
        let b = arc.center() + &eps - BigRational::new(1.into(), BigInt::one() << 70u32);
        let t = TargetVector::new(vec![b]).unwrap();
        let certifier = Certifier::new(&t, &eps, DEFAULT_PRECISION_CAP);
        assert_eq!(certifier.classify_word(3), None);
        let v = certifier.classify(3).unwrap();
        assert!(matches!(v, Verdict::Accept { bits } if bits >= 128));
    }

    #[test]
    fn scan_is_pool_independent() {
        let t = targets(&[0.123, 0.877]);
        let cfg = SearchConfig::exhaustive(r(1, 40), q_bound(2, &r(1, 40)));
        let reference = search_q(&t, &cfg).unwrap();
        for threads in [1, 2, 5] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            assert_eq!(pool.install(|| search_q(&t, &cfg)).unwrap(), reference);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn search_matches_reference_scan(
            b in proptest::collection::vec(0u32..1000, 1..=2),
            eps_denom in 3i64..12,
        ) {
            let t = TargetVector::new(b.iter().map(|&v| r(v.into(), 1000)).collect()).unwrap();
            let eps = r(1, eps_denom);
            let res = search_q(&t, &SearchConfig::exhaustive(eps.clone(), q_bound(t.len(), &eps))).unwrap();
            let oracle = min_q_oracle(&t, &eps).unwrap().unwrap();
            proptest::prop_assert_eq!(res.q.magnitude(), &BigUint::from(oracle));
            let check = discrepancy(&res.q, &t, 2 * res.precision_bits).unwrap();
            proptest::prop_assert!(check.upper <= eps);
        }

        #[test]
        fn looser_tolerance_never_needs_larger_weight(
            b in 0u32..1000,
            eps_denom in 4i64..30,
        ) {
            let t = TargetVector::new(vec![r(b.into(), 1000)]).unwrap();
            let tight = r(1, eps_denom);
            let loose = r(2, eps_denom);
            let a = search_q(&t, &SearchConfig::exhaustive(tight.clone(), q_bound(1, &tight))).unwrap();
            let c = search_q(&t, &SearchConfig::exhaustive(loose.clone(), q_bound(1, &tight))).unwrap();
            proptest::prop_assert!(c.scanned <= a.scanned);
        }
    }
}
