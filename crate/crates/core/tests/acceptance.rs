//! One pass/fail line per acceptance criterion; exits non-zero if any fails.

use std::time::{Duration, Instant};

use intweight::approximator::{build_approximant, BuildOptions};
use intweight::exact::{rational_from_f64, PositiveRatio};
use intweight::functions::{HolderSpec, Registered};
use intweight::highprec::{frac_mult_interval, pow2_root};
use intweight::kronecker::{discrepancy, min_q_oracle, q_bound, search_q, SearchConfig, TargetVector};
use intweight::network::{sigma_exponent, sigma_natural, NetworkParams};
use intweight::regression::{
    empirical_risk, generate_data, naive_risk, rate_study, risk_bound, risk_bound_exact, CellStats,
    RateConfig,
};
use intweight::kronecker::Strategy;
use intweight::network::Precision;
use intweight::scan::stream_rng;
use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn sigma_table() -> Outcome {
    let listed = [(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)];
    for (x, (n, d)) in (1u64..).zip(listed) {
        if sigma_exponent(x).unwrap() != Ratio::new(n, d) {
            return outcome(false, format!("sigma({x}) exponent differs from {n}/{d}"));
        }
    }
    let mut checked = 0;
    for mesh in 1..=6u64 {
        for dim in 1..=3usize {
            let params = NetworkParams::new(dim, 1.0, mesh, BigInt::from(0)).unwrap();
            let (cells, offset) = (params.cells(), params.sigma_offset());
            for i in 1..=cells {
                let exponent = sigma_exponent(offset + i).unwrap();
                if exponent != Ratio::new(i, cells + 1) {
                    return outcome(false, format!("M={mesh} d={dim} i={i}: exponent {exponent}"));
                }
                let value = sigma_natural(offset + i, 96).unwrap();
                if value != pow2_root(i as u32, cells as u32 + 1, 96).unwrap() {
                    return outcome(false, format!("M={mesh} d={dim} i={i}: fixed-point value"));
                }
                checked += 1;
            }
        }
    }
    outcome(true, format!("6 listed values and {checked} block identities"))
}

fn random_targets(rng: &mut impl Rng, n: usize) -> TargetVector {
    TargetVector::from_f64(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>()).unwrap()
}

/// Certified discrepancy of `+m` or `-m`, whichever is within `eps`.
fn certified_at_magnitude(m: u64, targets: &TargetVector, eps: &BigRational) -> Option<BigRational> {
    [m as i64, -(m as i64)]
        .into_iter()
        .map(|q| discrepancy(&BigInt::from(q), targets, 128).unwrap().upper)
        .find(|d| d <= eps)
}

fn weight_bound_empirics() -> Outcome {
    let mut rng = stream_rng(2024, 0);
    let eps = r(1, 4);
    let mut worst1 = 0;
    for k in 0..100 {
        let t = random_targets(&mut rng, 1);
        let Some(m) = min_q_oracle(&t, &eps).unwrap() else {
            return outcome(false, format!("N=1 instance {k}: nothing within 256"));
        };
        if m > 256 || certified_at_magnitude(m, &t, &eps).is_none() {
            return outcome(false, format!("N=1 instance {k}: |q|={m} not certified"));
        }
        worst1 = worst1.max(m);
    }
    let eps = r(1, 2);
    let mut worst2 = 0;
    for k in 0..25 {
        let t = random_targets(&mut rng, 2);
        let Some(m) = min_q_oracle(&t, &eps).unwrap() else {
            return outcome(false, format!("N=2 instance {k}: nothing within 34992"));
        };
        if m > 34992 || certified_at_magnitude(m, &t, &eps).is_none() {
            return outcome(false, format!("N=2 instance {k}: |q|={m} not certified"));
        }
        worst2 = worst2.max(m);
    }
    outcome(true, format!("max |q| = {worst1} (N=1, bound 256), {worst2} (N=2, bound 34992)"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = stream_rng(77, 0);
    let pools: Vec<_> = [2, 4, 8]
        .map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap())
        .into_iter()
        .collect();
    for k in 0..50 {
        let n = 1 + k % 2;
        let eps = r(1, rng.random_range(3..=12));
        let t = random_targets(&mut rng, n);
        let cfg = SearchConfig::exhaustive(eps.clone(), q_bound(n, &eps));
        let found = search_q(&t, &cfg).unwrap();
        let oracle = min_q_oracle(&t, &eps).unwrap();
        if Some(found.q.magnitude().to_u64().unwrap()) != oracle {
            return outcome(false, format!("instance {k}: search {} vs oracle {oracle:?}", found.q));
        }
        for pool in &pools {
            let again = pool.install(|| search_q(&t, &cfg)).unwrap();
            if again.q != found.q {
                return outcome(false, format!("instance {k}: {} workers gave {}", pool.current_num_threads(), again.q));
            }
        }
    }
    outcome(true, "50 instances, identical on 2, 4 and 8 workers")
}

fn end_to_end() -> Outcome {
    let one = PositiveRatio::new(1, 1).unwrap();
    let spec = HolderSpec::new(one, 1.0, 1.0).unwrap();
    let options = BuildOptions::exhaustive(10_000_000u32.into(), 4096);

    let f1 = Registered::parse("cosine:amp=0.5,freq=2").unwrap().instantiate(1, Some(spec)).unwrap();
    let (p1, rep1) = match build_approximant(&f1, &r(1, 2), &options) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("d=1 build failed: {e}")),
    };
    let bound1 = q_bound(5, &r(1, 8));
    let ok1 = p1.mesh() == 4
        && p1.cells() == 5
        && rep1.anchor_error <= 0.25
        && rep1.grid_sup_error <= 0.5
        && p1.weight().magnitude() <= &bound1;

    let f2 = Registered::parse("cosine:amp=0.5,freq=1").unwrap().instantiate(2, Some(spec)).unwrap();
    let (p2, rep2) = match build_approximant(&f2, &r(1, 1), &options) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("d=2 build failed: {e}")),
    };
    let ok2 = p2.mesh() == 2 && p2.cells() == 9 && rep2.grid_sup_error <= 1.0;
    outcome(
        ok1 && ok2,
        format!(
            "d=1: M={} N={} q={} anchor={:.4} sup={:.4}; d=2: M={} N={} q={} sup={:.4}",
            p1.mesh(),
            p1.cells(),
            p1.weight(),
            rep1.anchor_error,
            rep1.grid_sup_error,
            p2.mesh(),
            p2.cells(),
            p2.weight(),
            rep2.grid_sup_error
        ),
    )
}

fn rate() -> Outcome {
    let f0 = Registered::parse("cosine:amp=0.5,freq=1").unwrap();
    let spec = HolderSpec::new(PositiveRatio::new(1, 1).unwrap(), 0.5, 1.0).unwrap();
    let config = RateConfig {
        f0: f0.instantiate(1, Some(spec)).unwrap(),
        n_list: vec![27, 125, 343],
        seeds: (1..=10).collect(),
        caps: vec![BigUint::from(10_000_000u32)],
        mc_size: 100_000,
        strategy: Strategy::Exhaustive,
        sample_budget: 0,
    };
    let report = rate_study(&config).unwrap();
    let failures = report.rows.iter().flat_map(|row| &row.runs).filter(|r| r.error.is_some()).count();
    let means: Vec<String> = report.rows.iter().map(|row| format!("{:.4}", row.mean_pred_err)).collect();
    match report.fitted_slope {
        Some(slope) => outcome(
            (-1.0..=-0.40).contains(&slope) && failures == 0,
            format!(
                "slope {slope:.4} (theory {:.4}); mean errors {}; failed runs {failures}",
                report.theoretical_exponent,
                means.join(", ")
            ),
        ),
        None => outcome(false, "slope undefined"),
    }
}

fn precision_certification() -> Outcome {
    let mut rng = stream_rng(6, 0);
    for k in 0..10_000 {
        let q = BigInt::from(rng.random_range(-(1i64 << 40)..=(1i64 << 40)));
        let degree = rng.random_range(2..=64u32);
        let index = rng.random_range(1..degree);
        let coarse = frac_mult_interval(&q, &pow2_root(index, degree, 80).unwrap()).unwrap();
        let fine = frac_mult_interval(&q, &pow2_root(index, degree, 160).unwrap()).unwrap();
        let limit = BigRational::new(q.abs(), BigInt::from(1) << 80u32);
        if coarse.radius() > limit || !coarse.contains(&fine.center()) {
            return outcome(false, format!("triple {k}: q={q}, i={index}, D={degree}"));
        }
    }
    outcome(true, "10^4 triples")
}

fn risk_identity() -> Outcome {
    let mut rng = stream_rng(7, 0);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let dim = rng.random_range(1..=2usize);
        let mesh = rng.random_range(1..=8u64);
        let n = rng.random_range(1..=10_000usize);
        let f0 = Registered::parse("cosine:amp=0.5,freq=3").unwrap().instantiate(dim, None).unwrap();
        let data = generate_data(&f0, n, rng.random());
        let q = BigInt::from(rng.random_range(-(1i64 << 40)..=(1i64 << 40)));
        let params = NetworkParams::new(dim, 1.0, mesh, q.clone()).unwrap();
        let stats = CellStats::from_samples(&data, mesh, dim).unwrap();
        let fast = empirical_risk(&q, &stats, 1.0, Precision::default()).unwrap();
        let naive = naive_risk(&params, &data).unwrap();
        let rel = (fast - naive).abs() / naive.abs().max(f64::MIN_POSITIVE);
        if rel > 1e-10 {
            return outcome(false, format!("instance {k}: {fast} vs {naive}"));
        }
        worst = worst.max(rel);
    }
    outcome(true, format!("100 instances, worst relative gap {worst:.2e}"))
}

fn oracle_inequality() -> Outcome {
    let b = risk_bound(0.5, 100, &BigUint::from(34992u32), 0.25, 1.0);
    let log_ok = (b.log_term - 16.095).abs() <= 0.01;
    // 4 [1/4 + (9/4)(18*16 + 72)/20 + 32 (1/10)(3/2)] = 911/5
    let literal = risk_bound_exact(&r(1, 10), 20, &r(16, 1), &r(1, 4), &r(3, 2)) == r(911, 5);
    // float path with the same log term
    let l = rational_from_f64(b.log_term);
    let exact = risk_bound_exact(&r(1, 2), 100, &l, &r(1, 4), &r(1, 1)).to_f64().unwrap();
    let agree = ((exact - b.value) / exact).abs() < 1e-14;
    outcome(
        log_ok && literal && agree,
        format!("log2(2Q+1) = {:.6}; closed form {literal}; float vs exact agree {agree}", b.log_term),
    )
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 8] = [
        (1, "sigma table", Duration::from_secs(1), sigma_table),
        (2, "weight bound empirics", Duration::from_secs(60), weight_bound_empirics),
        (3, "oracle equivalence", Duration::from_secs(60), oracle_equivalence),
        (4, "end-to-end approximation", Duration::from_secs(300), end_to_end),
        (5, "rate study slope", Duration::from_secs(900), rate),
        (6, "precision certification", Duration::from_secs(30), precision_certification),
        (7, "risk decomposition", Duration::from_secs(10), risk_identity),
        (8, "oracle-inequality arithmetic", Duration::from_secs(1), oracle_inequality),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let passed = result.passed && elapsed <= budget;
        failed += usize::from(!passed);
        println!(
            "criterion {id} ({name}): {} in {:.2}s of {}s; {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
