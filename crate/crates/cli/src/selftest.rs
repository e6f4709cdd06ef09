use intweight::exact::parse_rational;
use intweight::kronecker::{q_bound, search_q, SearchConfig, TargetVector};
use intweight::network::{forward, sigma_exponent, NetworkParams};
use intweight::regression::{risk_bound, schedule};
use intweight::functions::HolderSpec;
use intweight::exact::PositiveRatio;
use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use serde_json::{json, Value};

use crate::commands::Output;

fn check(name: &str, passed: bool, detail: String) -> Value {
    json!({ "check": name, "passed": passed, "detail": detail })
}

fn search(targets: &[&str], eps: &str) -> String {
    let values = targets.iter().map(|t| parse_rational(t).unwrap()).collect();
    let targets = TargetVector::new(values).unwrap();
    let eps = parse_rational(eps).unwrap();
    let cap = q_bound(targets.len(), &eps);
    match search_q(&targets, &SearchConfig::exhaustive(eps, cap)) {
        Ok(r) => r.q.to_string(),
        Err(e) => e.to_string(),
    }
}

pub fn run() -> Output {
    let mut checks = Vec::new();

    let table: Vec<Ratio<u64>> = (1..=6).map(|x| sigma_exponent(x).unwrap()).collect();
    let expected = [(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)].map(|(n, d)| Ratio::new(n, d));
    let shown: Vec<String> = table.iter().map(|r| r.to_string()).collect();
    checks.push(check("sigma exponents 1..6", table == expected, shown.join(", ")));

    let b1 = q_bound(2, &parse_rational("0.5").unwrap());
    let b2 = q_bound(1, &parse_rational("2").unwrap());
    checks.push(check(
        "weight bounds",
        b1 == BigUint::from(34992u32) && b2 == BigUint::from(32u32),
        format!("{b1}, {b2}"),
    ));

    let found = [search(&["0.5"], "0.1"), search(&["0.5", "0.5"], "0.2"), search(&["0"], "0.01")];
    checks.push(check("first weights", found == ["1", "6", "0"], found.join(", ")));

    let params = NetworkParams::new(1, 1.0, 1, BigInt::from(1)).unwrap();
    let z = forward(&params, &[0.3], 64).unwrap();
    checks.push(check(
        "forward value",
        (z + 0.480_157_900_210_253_67).abs() < 1e-12,
        format!("{z}"),
    ));

    let rb = risk_bound(1.0, 1, &BigUint::from(34992u32), 0.0, 1.0);
    checks.push(check(
        "risk log term",
        (rb.log_term - 16.095).abs() <= 0.01,
        format!("{}", rb.log_term),
    ));

    let spec = HolderSpec::new(PositiveRatio::new(1, 1).unwrap(), 0.5, 1.0).unwrap();
    let sched = schedule(27, &spec, 1).unwrap();
    checks.push(check(
        "schedule n=27",
        (sched.mesh, sched.cells) == (3, 4),
        format!("M_n={}, N_n={}, Q_n digits={}", sched.mesh, sched.cells, sched.q_n_digits),
    ));

    let passed = checks.iter().all(|c| c["passed"] == json!(true));
    Output {
        report: json!({ "passed": passed, "checks": checks.clone() }),
        table: Some(checks),
        failed: !passed,
    }
}
