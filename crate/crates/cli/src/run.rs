use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use recmax::estimators::{self as est, ChiBarSource, Mc};
use recmax::records::{read_rows, scan_reader, write_record_times_csv, InputFormat, RecordScanState};
use recmax::rng::rng_from_seed;
use recmax::samplers::write_samples_csv;
use recmax::{CopulaModel, DependenceModel, EtaSampler, Parallelism};
use serde_json::{json, Value};

use crate::cli::*;
use crate::output::{cell, fmt_sig, opt_cell, Table};

/// Bad flags or inconsistent options, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub enum Output {
    Json(Value),
    Csv(String),
    Text(String),
}

pub struct Ctx {
    pub workers: usize,
    pub format: Option<Format>,
}

impl Ctx {
    fn mc(&self, samples: u64, seed: u64) -> Mc {
        Mc::new(samples, seed).with_workers(self.workers)
    }

    fn wants(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn parse_model(s: &str) -> Result<DependenceModel> {
    Ok(s.parse()?)
}

fn parse_copula(s: &str) -> Result<CopulaModel> {
    Ok(s.parse()?)
}

fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| UsageError(format!("not a number: {t:?} in {s:?}")).into())
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<Vec<f64>>> {
    let grid: Vec<Vec<f64>> = s.split(';').filter(|p| !p.trim().is_empty()).map(parse_vector).collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(UsageError("empty grid".into()).into());
    }
    Ok(grid)
}

fn envelope(command: &str, config: Value, result: Value) -> Output {
    Output::Json(json!({ "command": command, "config": config, "result": result }))
}

fn reject_csv(ctx: &Ctx, command: &str) -> Result<()> {
    if ctx.format == Some(Format::Csv) {
        return Err(UsageError(format!("{command} has no CSV output")).into());
    }
    Ok(())
}

pub fn run(command: &Command, ctx: &Ctx) -> Result<Output> {
    match command {
        Command::Norm(a) => point(ctx, a, "norm"),
        Command::Dual(a) => point(ctx, a, "dual"),
        Command::Concurrence(a) => concurrence(ctx, a),
        Command::Records(RecordsCommand::Scan(a)) => records_scan(ctx, a),
        Command::Records(RecordsCommand::Simulate(a)) => records_simulate(ctx, a),
        Command::RecordTimes(a) => record_times(ctx, a),
        Command::ChampionDist(a) => dist(ctx, a, true),
        Command::SimpleDist(a) => dist(ctx, a, false),
        Command::ChiBar(a) => chi_bar(ctx, a),
        Command::Sample(a) => sample(ctx, a),
    }
}

fn point(ctx: &Ctx, a: &PointArgs, which: &str) -> Result<Output> {
    reject_csv(ctx, which)?;
    let model = parse_model(&a.model)?;
    let x = parse_vector(&a.x)?;
    let v = if which == "norm" { model.norm(&x)? } else { model.dual(&x)? };
    Ok(match ctx.wants(Format::Text) {
        Format::Json => envelope(which, json!({ "model": model.to_string(), "x": x }), json!(v)),
        _ => Output::Text(format!("{}\n", fmt_sig(v))),
    })
}

fn concurrence(ctx: &Ctx, a: &ConcurrenceArgs) -> Result<Output> {
    reject_csv(ctx, "concurrence")?;
    let model = parse_model(&a.model)?;
    let copula = match &a.copula {
        Some(c) => parse_copula(c)?,
        None => CopulaModel::max_stable(model.clone()),
    };
    let mc = ctx.mc(a.mc.samples, a.mc.seed);
    let all = a.method == Method::All;
    let mut result = serde_json::Map::new();
    if all || a.method == Method::Generator {
        result.insert("generator".into(), serde_json::to_value(est::concurrence_via_generator(&model, &mc)?)?);
    }
    if all || a.method == Method::Eta {
        result.insert("eta".into(), serde_json::to_value(est::concurrence_via_eta(&model, &mc)?)?);
    }
    if all || a.method == Method::Empirical {
        let e = est::concurrence_empirical(&copula, a.n, &mc.with_samples(a.reps))?;
        result.insert("empirical".into(), serde_json::to_value(e)?);
    }
    if all {
        if let Some(v) = model.concurrence_closed_form() {
            result.insert("closed_form".into(), json!(v));
        }
    }
    let mut config = json!({
        "model": model.to_string(),
        "method": format!("{:?}", a.method).to_ascii_lowercase(),
        "samples": a.mc.samples,
        "seed": a.mc.seed,
    });
    if all || a.method == Method::Empirical {
        config["copula"] = json!(copula.to_string());
        config["n"] = json!(a.n);
        config["reps"] = json!(a.reps);
    }
    Ok(envelope("concurrence", config, Value::Object(result)))
}

fn records_scan(ctx: &Ctx, a: &ScanArgs) -> Result<Output> {
    reject_csv(ctx, "records scan")?;
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let summary = scan_reader(BufReader::new(file), InputFormat::from_path(&a.input))?;
    if let Some(p) = &a.times_csv {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_record_times_csv(f, &summary)?;
    }
    Ok(envelope(
        "records scan",
        json!({ "input": a.input.display().to_string() }),
        serde_json::to_value(summary)?,
    ))
}

fn default_checkpoints(n: u64) -> Vec<u64> {
    let mut ks: Vec<u64> = std::iter::successors(Some(10u64), |k| k.checked_mul(10)).take_while(|&k| k < n).collect();
    ks.push(n);
    ks
}

fn records_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<Output> {
    let copula = parse_copula(&a.copula)?;
    if a.n == 0 {
        return Err(UsageError("--n must be positive".into()).into());
    }
    match a.reps {
        Some(reps) if reps > 1 || !a.checkpoints.is_empty() => {
            let ks = if a.checkpoints.is_empty() { default_checkpoints(a.n) } else { a.checkpoints.clone() };
            let table = est::expected_records_growth(&copula, &ks, &ctx.mc(reps, a.seed))?;
            match ctx.wants(Format::Json) {
                Format::Csv => {
                    let mut t = Table::new([
                        "k", "mean_simple", "se_simple", "mean_complete", "se_complete", "simple_over_log", "complete_over_log",
                    ]);
                    for r in &table.rows {
                        t.push(vec![
                            r.k.to_string(),
                            cell(r.mean_simple),
                            cell(r.se_simple),
                            cell(r.mean_complete),
                            cell(r.se_complete),
                            cell(r.simple_over_log),
                            cell(r.complete_over_log),
                        ]);
                    }
                    Ok(Output::Csv(t.render()))
                }
                _ => Ok(envelope(
                    "records simulate",
                    json!({ "copula": copula.to_string(), "n": a.n, "reps": reps, "checkpoints": ks, "seed": a.seed }),
                    serde_json::to_value(table)?,
                )),
            }
        }
        _ => {
            reject_csv(ctx, "records simulate without --reps")?;
            let sampler = copula.sampler()?;
            let mut rng = rng_from_seed(a.seed);
            let mut state = RecordScanState::new(copula.dim());
            let mut x = vec![0.0; copula.dim()];
            for _ in 0..a.n {
                sampler.sample_log_into(&mut rng, &mut x)?;
                state.push(&x)?;
            }
            Ok(envelope(
                "records simulate",
                json!({ "copula": copula.to_string(), "n": a.n, "seed": a.seed }),
                serde_json::to_value(state.summary())?,
            ))
        }
    }
}

fn record_times(ctx: &Ctx, a: &RecordTimesArgs) -> Result<Output> {
    let copula = parse_copula(&a.copula)?;
    let report = est::expected_n2(&copula, &ctx.mc(a.mc.samples, a.mc.seed), a.cap)?;
    match ctx.wants(Format::Json) {
        Format::Csv => {
            let mut t = Table::new(["k", "p", "std_error"]);
            for p in &report.tail {
                t.push(vec![p.k.to_string(), cell(p.p), cell(p.std_error)]);
            }
            Ok(Output::Csv(t.render()))
        }
        _ => Ok(envelope(
            "record-times",
            json!({ "copula": copula.to_string(), "samples": a.mc.samples, "seed": a.mc.seed, "cap": a.cap }),
            serde_json::to_value(report)?,
        )),
    }
}

fn dist(ctx: &Ctx, a: &DistArgs, champion: bool) -> Result<Output> {
    let name = if champion { "champion-dist" } else { "simple-dist" };
    let model = parse_model(&a.model)?;
    let grid = parse_grid(&a.grid)?;
    let mc = ctx.mc(a.mc.samples, a.mc.seed);
    let copula = CopulaModel::max_stable(model.clone());
    let empirical = |x: &[f64]| -> Result<Option<est::ConditionalEmpirical>> {
        let Some(n) = a.empirical_n else { return Ok(None) };
        let mc = mc.with_samples(a.reps);
        Ok(Some(if champion {
            est::champion_survival_empirical(&copula, x, n, &mc)?
        } else {
            est::simple_record_df_empirical(&copula, x, n, &mc)?
        }))
    };
    let d = model.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend(["value", "std_error"].map(String::from));
    if champion {
        header.extend(["eta", "eta_se", "generator", "generator_se"].map(String::from));
    }
    if a.empirical_n.is_some() {
        header.extend(["empirical", "empirical_se", "effective"].map(String::from));
    }
    let mut table = Table::new(header);
    let mut rows = Vec::new();
    for x in &grid {
        let mut row: Vec<String> = x.iter().map(|v| cell(*v)).collect();
        let mut json_row = serde_json::Map::new();
        json_row.insert("x".into(), json!(x));
        if champion {
            let r = est::champion_survival(&model, x, &mc)?;
            row.extend([cell(r.value.value), cell(r.value.std_error)]);
            row.extend([
                opt_cell(r.eta.as_ref().map(|e| e.value)),
                opt_cell(r.eta.as_ref().map(|e| e.std_error)),
                cell(r.generator.value),
                cell(r.generator.std_error),
            ]);
            json_row.insert("value".into(), serde_json::to_value(&r.value)?);
            json_row.insert("eta".into(), serde_json::to_value(&r.eta)?);
            json_row.insert("generator".into(), serde_json::to_value(&r.generator)?);
        } else {
            let e = est::simple_record_limit_df(&model, x, &mc)?;
            row.extend([cell(e.value), cell(e.std_error)]);
            json_row.insert("value".into(), serde_json::to_value(&e)?);
        }
        if let Some(e) = empirical(x)? {
            row.extend([cell(e.estimate.value), cell(e.estimate.std_error), e.effective.to_string()]);
            json_row.insert("empirical".into(), serde_json::to_value(&e)?);
        }
        table.push(row);
        rows.push(Value::Object(json_row));
    }
    match ctx.wants(Format::Csv) {
        Format::Csv | Format::Text => Ok(Output::Csv(table.render())),
        Format::Json => {
            let mut config = json!({
                "model": model.to_string(), "grid": grid, "samples": a.mc.samples, "seed": a.mc.seed,
            });
            if let Some(n) = a.empirical_n {
                config["empirical_n"] = json!(n);
                config["reps"] = json!(a.reps);
            }
            Ok(envelope(name, config, Value::Array(rows)))
        }
    }
}

fn read_pairs(path: &Path, pair: &[usize]) -> Result<Vec<(f64, f64)>> {
    let [i, j] = pair else {
        return Err(UsageError("--pair takes two 1-based coordinates".into()).into());
    };
    if *i == 0 || *j == 0 || i == j {
        return Err(UsageError("--pair takes two distinct 1-based coordinates".into()).into());
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = read_rows(BufReader::new(file), InputFormat::from_path(path))?;
    rows.iter()
        .map(|r| match (r.get(i - 1), r.get(j - 1)) {
            (Some(a), Some(b)) => Ok((*a, *b)),
            _ => Err(UsageError(format!("--pair {i},{j} exceeds the data dimension {}", r.len())).into()),
        })
        .collect()
}

fn chi_bar(ctx: &Ctx, a: &ChiBarArgs) -> Result<Output> {
    let (source, config) = match (&a.copula, &a.input) {
        (Some(c), None) => {
            let copula = parse_copula(c)?;
            let config = json!({ "copula": copula.to_string(), "u": a.u, "samples": a.mc.samples, "seed": a.mc.seed });
            (ChiBarSource::Copula(copula), config)
        }
        (None, Some(p)) => {
            let config = json!({ "input": p.display().to_string(), "pair": a.pair, "u": a.u });
            (ChiBarSource::Data(read_pairs(p, &a.pair)?), config)
        }
        _ => return Err(UsageError("give exactly one of --copula and --input".into()).into()),
    };
    let rows = est::chi_bar(&source, &a.u, &ctx.mc(a.mc.samples, a.mc.seed))?;
    match ctx.wants(Format::Csv) {
        Format::Json => Ok(envelope("chi-bar", config, serde_json::to_value(rows)?)),
        _ => {
            let mut t = Table::new(["u", "exceedances", "n", "p_joint", "chi_bar", "std_error", "exact", "warning"]);
            for r in &rows {
                t.push(vec![
                    cell(r.u),
                    r.exceedances.to_string(),
                    r.n.to_string(),
                    cell(r.p_joint),
                    cell(r.chi_bar),
                    cell(r.std_error),
                    opt_cell(r.exact),
                    r.warning.clone().unwrap_or_default(),
                ]);
            }
            Ok(Output::Csv(t.render()))
        }
    }
}

fn sample(ctx: &Ctx, a: &SampleArgs) -> Result<Output> {
    if ctx.format == Some(Format::Json) {
        return Err(UsageError("sample writes CSV only".into()).into());
    }
    let mut rng = rng_from_seed(a.seed);
    let rows: Vec<Vec<f64>> = match (&a.copula, &a.model) {
        (Some(c), None) => {
            let sampler = parse_copula(c)?.sampler()?;
            (0..a.n)
                .map(|_| {
                    let mut x = vec![0.0; sampler.dim()];
                    sampler.sample_into(&mut rng, &mut x).map(|_| x)
                })
                .collect::<recmax::Result<_>>()?
        }
        (None, Some(m)) => {
            let sampler = EtaSampler::new(&parse_model(m)?)?;
            if let Some(note) = sampler.bias_note() {
                eprintln!("note: {note}");
            }
            (0..a.n)
                .map(|_| {
                    let mut x = vec![0.0; sampler.dim()];
                    sampler.sample_into(&mut rng, &mut x).map(|_| x)
                })
                .collect::<recmax::Result<_>>()?
        }
        _ => return Err(UsageError("give exactly one of --copula and --model".into()).into()),
    };
    let dim = rows.first().map_or(0, |r| r.len());
    let mut buf = Vec::new();
    write_samples_csv(&mut buf, dim, &rows)?;
    Ok(Output::Csv(String::from_utf8(buf)?))
}

/// Resolved worker count: flag or environment, else all cores.
pub fn workers(flag: Option<usize>) -> usize {
    flag.map(|w| w.max(1)).unwrap_or_else(|| Parallelism::from_env().workers())
}
