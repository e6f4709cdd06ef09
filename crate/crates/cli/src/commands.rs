use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use intweight::approximator::{build_approximant, BuildOptions};
use intweight::exact::{
    decimal_digits, log2_big, parse_rational, rational_string, rational_to_f64, PositiveRatio,
};
use intweight::functions::{HolderSpec, Registered};
use intweight::kronecker::{q_bound, search_q, SearchConfig, Strategy, TargetVector};
use intweight::network::{Network, Precision};
use intweight::regression::{
    erm_fit, generate_data, rate_study, risk_bound, schedule, theoretical_exponent, ErmConfig,
    RateConfig, RateReport,
};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::args::{ApproxArgs, BoundsArgs, Cli, Command, FitArgs, KronArgs, RateArgs};
use crate::dataset;
use crate::error::CliError;
use crate::selftest;

/// Report plus an optional table used for CSV output.
pub struct Output {
    pub report: Value,
    pub table: Option<Vec<Value>>,
    pub failed: bool,
}

impl Output {
    fn report(report: Value) -> Self {
        Self {
            report,
            table: None,
            failed: false,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Bounds(a) => bounds(a),
        Command::KronSearch(a) => kron_search(cli, a),
        Command::Approximate(a) => approximate(cli, a),
        Command::Fit(a) => fit(cli, a),
        Command::RateStudy(a) => rate(a),
        Command::Selftest => Ok(selftest::run()),
    }
}

fn positive_rational(name: &str, text: &str) -> Result<BigRational, CliError> {
    let v = parse_rational(text).map_err(|e| CliError::invalid(format!("--{name}: {e}")))?;
    if v <= BigRational::from_integer(0.into()) {
        return Err(CliError::invalid(format!("--{name} must be positive, got {text}")));
    }
    Ok(v)
}

fn parse_cap(name: &str, text: &str) -> Result<BigUint, CliError> {
    let v = parse_rational(text).map_err(|e| CliError::invalid(format!("{name}: {e}")))?;
    if !v.is_integer() || v < BigRational::from_integer(0.into()) {
        return Err(CliError::invalid(format!("{name} must be a non-negative integer, got {text}")));
    }
    Ok(v.to_integer().to_biguint().expect("non-negative"))
}

fn parse_beta(text: &str) -> Result<PositiveRatio, CliError> {
    text.parse()
        .map_err(|e| CliError::invalid(format!("beta: {e}")))
}

fn holder_spec(beta: PositiveRatio, f: f64, k: f64) -> Result<HolderSpec, CliError> {
    Ok(HolderSpec::new(beta, f, k)?)
}

fn bounds(a: &BoundsArgs) -> Result<Output, CliError> {
    if let Some(n_targets) = a.targets {
        let eps = a
            .eps
            .as_deref()
            .ok_or_else(|| CliError::invalid("--N needs --eps"))?;
        let eps = positive_rational("eps", eps)?;
        if n_targets == 0 {
            return Err(CliError::invalid("--N must be at least 1"));
        }
        let q = q_bound(n_targets, &eps);
        return Ok(Output::report(json!({
            "N": n_targets,
            "eps": rational_string(&eps),
            "q_bound": q.to_string(),
            "q_bound_digits": decimal_digits(&q),
        })));
    }
    let (Some(n), Some(beta), Some(f), Some(k), Some(d)) =
        (a.n, a.beta.as_deref(), a.f_const, a.k_bound, a.d)
    else {
        return Err(CliError::invalid(
            "give either --N and --eps, or --n, --beta, --F, --K and --d",
        ));
    };
    let spec = holder_spec(parse_beta(beta)?, f, k)?;
    let sched = schedule(n, &spec, d)?;
    let approx = (n as f64).powf(theoretical_exponent(&spec, d));
    let bound = risk_bound(1.0 / n as f64, n, &sched.q_n, approx, k);
    Ok(Output::report(json!({
        "n": n,
        "beta": spec.beta.to_string(),
        "F": f,
        "K": k,
        "d": d,
        "M_n": sched.mesh,
        "N_n": sched.cells,
        "Q_n": sched.q_n.to_string(),
        "Q_n_digits": sched.q_n_digits,
        "log2_2Q_plus_1": log2_big(&(&sched.q_n * 2u32 + 1u32)),
        "delta": format!("1/{n}"),
        "approx_err_sq": approx,
        "risk_bound": bound.value,
    })))
}

fn parse_targets(text: &str, source: &str) -> Result<TargetVector, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::invalid(format!("{source}: not JSON: {e}")))?;
    let items = value
        .as_array()
        .ok_or_else(|| CliError::invalid(format!("{source}: expected a JSON array of decimals")))?;
    let values = items
        .iter()
        .enumerate()
        .map(|(i, item)| match item {
            Value::Number(num) => parse_rational(&num.to_string())
                .map_err(|e| CliError::invalid(format!("{source}[{i}]: {e}"))),
            other => Err(CliError::invalid(format!("{source}[{i}]: {other} is not a number"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    TargetVector::new(values).map_err(|e| CliError::invalid(format!("{source}: {e}")))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn kron_search(cli: &Cli, a: &KronArgs) -> Result<Output, CliError> {
    let targets = match (&a.targets, &a.targets_file) {
        (Some(inline), _) => parse_targets(inline, "--targets")?,
        (None, Some(path)) => parse_targets(&read_text(path)?, &path.display().to_string())?,
        (None, None) => return Err(CliError::invalid("--targets or --targets-file is required")),
    };
    let eps = positive_rational("eps", &a.eps)?;
    let q_cap = match &a.cap {
        Some(c) => parse_cap("--cap", c)?,
        None => q_bound(targets.len(), &eps),
    };
    let config = SearchConfig {
        eps: eps.clone(),
        q_cap,
        strategy: a.strategy.into(),
        seed: cli.seed,
        sample_budget: a.samples,
        precision_cap: cli.precision_cap,
    };
    let res = search_q(&targets, &config)?;
    Ok(Output::report(json!({
        "status": "found",
        "N": targets.len(),
        "eps": rational_string(&eps),
        "q": res.q.to_string(),
        "q_digits": decimal_digits(res.q.magnitude()),
        "discrepancy_upper": rational_to_f64(&res.discrepancy_upper),
        "scanned": res.scanned,
        "precision_bits": res.precision_bits,
        "strategy": res.strategy,
        "q_cap": res.q_cap.to_string(),
        "q_bound": q_bound(targets.len(), &eps).to_string(),
    })))
}

fn function_spec(
    registered: &Registered,
    dim: usize,
    beta: Option<&str>,
    f: Option<f64>,
    k: Option<f64>,
) -> Result<HolderSpec, CliError> {
    let default = registered.default_spec(dim);
    let beta = match beta {
        Some(b) => parse_beta(b)?,
        None => default.beta,
    };
    holder_spec(beta, f.unwrap_or(default.f_const), k.unwrap_or(default.k_bound))
}

fn approximate(cli: &Cli, a: &ApproxArgs) -> Result<Output, CliError> {
    if a.d == 0 {
        return Err(CliError::invalid("--d must be at least 1"));
    }
    let registered = Registered::parse(&a.function)?;
    let spec = function_spec(&registered, a.d, a.beta.as_deref(), a.f_const, a.k_bound)?;
    let f = registered
        .instantiate(a.d, Some(spec))
        .map_err(|e| CliError::invalid(format!("function outside the declared class: {e}")))?;
    let eps = positive_rational("eps", &a.eps)?;
    let precision = Precision {
        cap: cli.precision_cap,
        ..Precision::default()
    };
    let options = BuildOptions {
        search: SearchConfig {
            eps: eps.clone(),
            q_cap: parse_cap("--cap", &a.cap)?,
            strategy: a.strategy.into(),
            seed: cli.seed,
            sample_budget: a.samples,
            precision_cap: cli.precision_cap,
        },
        grid_resolution: a.resolution,
        precision,
    };
    let (params, report) = build_approximant(&f, &eps, &options)?;
    if let Some(path) = &a.grid_csv {
        let points = a.plot_points.max(2);
        if points.checked_pow(a.d as u32).is_none_or(|t| t > 4_000_000) {
            return Err(CliError::invalid("--plot-points^d exceeds 4e6 rows"));
        }
        let network = Network::new(params.clone(), precision)?;
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = (1..=a.d)
            .map(|k| format!("x{k}"))
            .chain(["f".to_owned(), "z".to_owned()])
            .collect();
        w.write_record(&header)?;
        let total = points.pow(a.d as u32);
        let mut x = vec![0.0; a.d];
        for row in 0..total {
            let mut rest = row;
            for xk in x.iter_mut() {
                *xk = (rest % points) as f64 / (points - 1) as f64;
                rest /= points;
            }
            let fx = f.eval(&x);
            let z = network.eval(&x)?;
            w.write_record(x.iter().chain([&fx, &z]).map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
    }
    let mut value = serde_json::to_value(&report)?;
    value["network"] = serde_json::to_value(&params)?;
    Ok(Output::report(value))
}

fn fit(cli: &Cli, a: &FitArgs) -> Result<Output, CliError> {
    let (data, dim) = match (&a.data, &a.simulate) {
        (Some(path), _) => {
            let data = dataset::load(path)?;
            let dim = data[0].x.len();
            (data, dim)
        }
        (None, Some(desc)) => {
            let (n, dim) = (a.n.unwrap_or(0), a.d.unwrap_or(0));
            if n == 0 || dim == 0 {
                return Err(CliError::invalid("--simulate needs --n >= 1 and --d >= 1"));
            }
            let f0 = Registered::parse(desc)?.instantiate(dim, None)?;
            (generate_data(&f0, n as usize, cli.seed), dim)
        }
        (None, None) => return Err(CliError::invalid("--data or --simulate is required")),
    };
    if let Some(path) = &a.save_data {
        dataset::save(path, &data, dim)?;
    }
    if !(a.k_bound.is_finite() && a.k_bound > 0.0) {
        return Err(CliError::invalid("--K must be positive"));
    }
    if a.mesh == 0 {
        return Err(CliError::invalid("--M must be at least 1"));
    }
    let config = ErmConfig {
        mesh: a.mesh,
        q_cap: parse_cap("--cap", &a.cap)?,
        strategy: a.strategy.into(),
        seed: cli.seed,
        sample_budget: a.samples,
    };
    let res = erm_fit(&data, a.k_bound, dim, &config)?;
    let mut value = serde_json::to_value(&res)?;
    value["n"] = json!(data.len());
    value["d"] = json!(dim);
    value["K"] = json!(a.k_bound);
    value["q_digits"] = json!(decimal_digits(res.q.magnitude()));
    Ok(Output::report(value))
}

/// Validates a rate-study configuration, collecting every field error.
pub fn rate_config(text: &str) -> Result<(RateConfig, Value), CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::invalid(format!("config is not valid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::invalid("config must be a JSON object"))?;
    let known: BTreeSet<&str> = [
        "function", "d", "beta", "F", "K", "n_list", "seeds", "caps", "mc_size", "strategy",
        "sample_budget",
    ]
    .into_iter()
    .collect();
    let mut errors: Vec<String> = obj
        .keys()
        .filter(|k| !known.contains(k.as_str()))
        .map(|k| format!("{k}: unknown field"))
        .collect();

    let positive_int = |key: &str, v: &Value| -> Result<u64, String> {
        v.as_u64()
            .filter(|&x| x > 0)
            .ok_or_else(|| format!("{key}: expected a positive integer, got {v}"))
    };
    let positive_float = |key: &str, v: &Value| -> Result<f64, String> {
        v.as_f64()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| format!("{key}: expected a positive number, got {v}"))
    };
    let mut record = |r: Result<(), String>| {
        if let Err(e) = r {
            errors.push(e);
        }
    };

    let mut registered = None;
    match obj.get("function") {
        Some(Value::String(s)) => match Registered::parse(s) {
            Ok(r) => registered = Some(r),
            Err(e) => record(Err(format!("function: {e}"))),
        },
        Some(other) => record(Err(format!("function: expected a string, got {other}"))),
        None => record(Err("function: required".into())),
    }
    let mut dim = 1usize;
    if let Some(v) = obj.get("d") {
        match positive_int("d", v) {
            Ok(d) => dim = d as usize,
            Err(e) => record(Err(e)),
        }
    }
    let mut beta = None;
    if let Some(v) = obj.get("beta") {
        let text = match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        };
        match text.map(|t| t.parse::<PositiveRatio>()) {
            Some(Ok(b)) => beta = Some(b),
            Some(Err(e)) => record(Err(format!("beta: {e}"))),
            None => record(Err(format!("beta: expected a number or \"p/q\", got {v}"))),
        }
    }
    let mut f_const = None;
    if let Some(v) = obj.get("F") {
        match positive_float("F", v) {
            Ok(f) => f_const = Some(f),
            Err(e) => record(Err(e)),
        }
    }
    let mut k_bound = None;
    if let Some(v) = obj.get("K") {
        match positive_float("K", v) {
            Ok(k) => k_bound = Some(k),
            Err(e) => record(Err(e)),
        }
    }
    let mut n_list = Vec::new();
    match obj.get("n_list") {
        Some(Value::Array(items)) if !items.is_empty() => {
            for (i, item) in items.iter().enumerate() {
                match positive_int(&format!("n_list[{i}]"), item) {
                    Ok(n) => n_list.push(n),
                    Err(e) => record(Err(e)),
                }
            }
        }
        Some(other) => record(Err(format!("n_list: expected a non-empty array, got {other}"))),
        None => record(Err("n_list: required".into())),
    }
    let mut seeds = Vec::new();
    match obj.get("seeds") {
        Some(Value::Array(items)) if !items.is_empty() => {
            for (i, item) in items.iter().enumerate() {
                match item.as_u64() {
                    Some(s) => seeds.push(s),
                    None => record(Err(format!("seeds[{i}]: expected a non-negative integer, got {item}"))),
                }
            }
        }
        Some(other) => record(Err(format!("seeds: expected a non-empty array, got {other}"))),
        None => record(Err("seeds: required".into())),
    }
    let cap_of = |key: &str, v: &Value| -> Result<BigUint, String> {
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => return Err(format!("{key}: expected an integer, got {other}")),
        };
        parse_cap(key, &text).map_err(|e| e.to_string())
    };
    let mut caps = vec![BigUint::from(10_000_000u32)];
    if let Some(v) = obj.get("caps") {
        match v {
            Value::Array(items) => {
                let parsed: Vec<_> = items
                    .iter()
                    .enumerate()
                    .map(|(i, item)| cap_of(&format!("caps[{i}]"), item))
                    .collect();
                caps.clear();
                for p in parsed {
                    match p {
                        Ok(c) => caps.push(c),
                        Err(e) => record(Err(e)),
                    }
                }
                if items.len() != 1 && items.len() != n_list.len() {
                    record(Err(format!(
                        "caps: expected 1 or {} entries, got {}",
                        n_list.len(),
                        items.len()
                    )));
                }
            }
            other => match cap_of("caps", other) {
                Ok(c) => caps = vec![c],
                Err(e) => record(Err(e)),
            },
        }
    }
    let mut mc_size = 100_000;
    if let Some(v) = obj.get("mc_size") {
        match positive_int("mc_size", v) {
            Ok(m) => mc_size = m,
            Err(e) => record(Err(e)),
        }
    }
    let mut strategy = Strategy::Exhaustive;
    if let Some(v) = obj.get("strategy") {
        match v.as_str().map(str::parse::<Strategy>) {
            Some(Ok(s)) => strategy = s,
            Some(Err(e)) => record(Err(format!("strategy: {e}"))),
            None => record(Err(format!("strategy: expected a string, got {v}"))),
        }
    }
    let mut sample_budget = 100_000;
    if let Some(v) = obj.get("sample_budget") {
        match positive_int("sample_budget", v) {
            Ok(b) => sample_budget = b,
            Err(e) => record(Err(e)),
        }
    }

    let mut f0 = None;
    if let Some(r) = &registered {
        let default = r.default_spec(dim);
        let spec = HolderSpec::new(
            beta.unwrap_or(default.beta),
            f_const.unwrap_or(default.f_const),
            k_bound.unwrap_or(default.k_bound),
        );
        match spec.and_then(|s| r.instantiate(dim, Some(s))) {
            Ok(f) => f0 = Some(f),
            Err(e) => record(Err(format!("function: {e}"))),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::invalid(format!(
            "invalid rate-study config:\n  {}",
            errors.join("\n  ")
        )));
    }
    let f0 = f0.expect("validated");
    let mut echo = Map::new();
    echo.insert("function".into(), json!(f0.name()));
    echo.insert("d".into(), json!(dim));
    echo.insert("spec".into(), serde_json::to_value(f0.spec())?);
    echo.insert("n_list".into(), json!(n_list));
    echo.insert("seeds".into(), json!(seeds));
    echo.insert("caps".into(), json!(caps.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
    echo.insert("mc_size".into(), json!(mc_size));
    echo.insert("strategy".into(), serde_json::to_value(strategy)?);
    echo.insert("sample_budget".into(), json!(sample_budget));
    Ok((
        RateConfig {
            f0,
            n_list,
            seeds,
            caps,
            mc_size,
            strategy,
            sample_budget,
        },
        Value::Object(echo),
    ))
}

pub fn rate_table(report: &RateReport) -> Vec<Value> {
    let slope = report.fitted_slope.map_or(String::new(), |s| s.to_string());
    let mut rows: Vec<Value> = report
        .rows
        .iter()
        .map(|row| {
            json!({
                "n": row.n.to_string(),
                "M_n": row.mesh.to_string(),
                "q_cap": row.q_cap,
                "mean_pred_err": row.mean_pred_err.to_string(),
                "sd_pred_err": row.sd_pred_err.to_string(),
                "theoretical_exponent": report.theoretical_exponent.to_string(),
                "fitted_slope": slope,
                "Q_n_digits": row.q_n_digits.to_string(),
                "risk_bound": row.risk_bound.to_string(),
            })
        })
        .collect();
    rows.push(json!({
        "n": "summary",
        "M_n": "",
        "q_cap": "",
        "mean_pred_err": "",
        "sd_pred_err": "",
        "theoretical_exponent": report.theoretical_exponent.to_string(),
        "fitted_slope": slope,
        "Q_n_digits": "",
        "risk_bound": "",
    }));
    rows
}

fn rate(a: &RateArgs) -> Result<Output, CliError> {
    let (config, echo) = rate_config(&read_text(&a.config)?)?;
    let report = rate_study(&config)?;
    let table = rate_table(&report);
    if let Some(path) = &a.table {
        let bytes = crate::output::csv_rows(&table)?;
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    }
    let mut value = serde_json::to_value(&report)?;
    value["study"] = echo;
    Ok(Output {
        report: value,
        table: Some(table),
        failed: false,
    })
}
