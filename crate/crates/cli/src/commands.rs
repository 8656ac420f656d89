use std::path::{Path, PathBuf};
use std::time::Instant;

use hffeat::features::{select_m_detailed, LevelScan, MSelection, SmoothingSchedule};
use hffeat::noise::{estimate_sigma, shrink, wavelet_transform};
use hffeat::nulltest::{run_full_test_detailed, Smoothing, TestConfig, TestReport};
use hffeat::spectrum::AmplitudeSpectrum;
use hffeat::testsignal::{self, TestSignalParams};
use hffeat::trend::{l1_trend_filter, lambda_max, LambdaPreset, DEFAULT_TOL};
use hffeat::{HFFeature, Signal};
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult, Stage};
use crate::ingest::{ingest_csv, read_table, Ingested};
use crate::output::{num, CsvTable, Outputs};
use crate::{ExtractArgs, GenArgs, LambdaArgs, NoiseArgs, PresetName, SmoothingArgs, TestArgs, TrendArgs};

#[derive(Debug, Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
    library_version: &'static str,
}

const TOOL: Tool = Tool {
    name: "hffeat",
    version: env!("CARGO_PKG_VERSION"),
    library_version: hffeat::VERSION,
};

#[derive(Debug, Serialize)]
struct InputInfo {
    path: String,
    n: usize,
    /// Absent when the spacing was not supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_seconds: Option<f64>,
}

impl InputInfo {
    fn new(path: &Path, ing: &Ingested) -> Self {
        Self {
            path: path.display().to_string(),
            n: ing.signal.len(),
            dt_seconds: ing.dt_known.then(|| ing.signal.dt()),
        }
    }
}

/// Serializes `value`, dropping every `*_hz` field when the sampling
/// interval is unknown.
fn to_json<T: Serialize>(value: &T, dt_known: bool) -> CliResult<Value> {
    let mut v = serde_json::to_value(value).stage("write")?;
    if !dt_known {
        strip_hz(&mut v);
    }
    Ok(v)
}

fn strip_hz(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.ends_with("_hz"));
            map.values_mut().for_each(strip_hz);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_hz),
        _ => {}
    }
}

/// Leading `index` and, when known, `time_s` columns.
fn time_header<'a>(dt_known: bool, rest: &[&'a str]) -> Vec<&'a str> {
    let mut h = vec!["index"];
    if dt_known {
        h.push("time_s");
    }
    h.extend_from_slice(rest);
    h
}

fn time_cells(i: usize, dt: f64, dt_known: bool) -> Vec<String> {
    let mut row = vec![i.to_string()];
    if dt_known {
        row.push(num(i as f64 * dt));
    }
    row
}

fn resolve_lambda(args: &LambdaArgs) -> CliResult<Option<(f64, Option<&'static str>)>> {
    match (args.lambda, args.lambda_preset) {
        (Some(l), _) => {
            if !(l.is_finite() && l >= 0.0) {
                return Err(CliError::new("config", format!("--lambda must be finite and >= 0, got {l}")));
            }
            Ok(Some((l, None)))
        }
        (None, Some(PresetName::Sls31)) => Ok(Some((LambdaPreset::Sls31.value(), Some("sls31")))),
        (None, Some(PresetName::Synth301)) => Ok(Some((LambdaPreset::Synth301.value(), Some("synth301")))),
        (None, None) => Ok(None),
    }
}

fn require_lambda(args: &LambdaArgs) -> CliResult<(f64, Option<&'static str>)> {
    resolve_lambda(args)?
        .ok_or_else(|| CliError::new("config", "no trend penalty: pass --lambda or --lambda-preset"))
}

fn smoothing(args: &SmoothingArgs) -> CliResult<Smoothing> {
    match (args.k, args.m) {
        (_, Some(m)) => Ok(Smoothing::Fixed(m)),
        (Some(k), None) if k < 2 => Err(CliError::new("config", format!("--K must be at least 2, got {k}"))),
        (k, None) => Ok(Smoothing::Auto { k }),
    }
}

fn select(signal: &Signal, s: &Smoothing) -> CliResult<(usize, Option<MSelection>)> {
    match s {
        Smoothing::Fixed(m) => Ok((*m, None)),
        Smoothing::Auto { k } => {
            let n = signal.len();
            let schedule = match k {
                Some(k) => SmoothingSchedule::linear(n, *k),
                None => SmoothingSchedule::default_for(n),
            }
            .stage("select_m")?;
            let sel = select_m_detailed(signal, &schedule).stage("select_m")?;
            Ok((sel.m, Some(sel)))
        }
        Smoothing::Schedule(schedule) => {
            let sel = select_m_detailed(signal, schedule).stage("select_m")?;
            Ok((sel.m, Some(sel)))
        }
    }
}

pub fn gen(args: &GenArgs) -> CliResult<Vec<PathBuf>> {
    let mut params = TestSignalParams {
        sigma: args.sigma,
        c_a: args.c_a,
        c_f: args.c_f,
        seed: args.seed,
        ..TestSignalParams::scaled(args.n)
    };
    if let Some(j) = args.j_connect {
        params.j_connect = j;
    }
    let signal = testsignal::generate(&params).stage("gen")?;
    let trend = testsignal::lj_trend(&params).stage("gen")?;
    let osc = testsignal::oscillation(&params).stage("gen")?;
    let dt = params.dt_seconds();

    let mut sig_csv = CsvTable::new(&["time_s", "value"]);
    let mut comp_csv = CsvTable::new(&["time_s", "trend", "oscillation"]);
    for (i, v) in signal.samples().iter().enumerate() {
        let t = num(i as f64 * dt);
        sig_csv.push(vec![t.clone(), num(*v)]);
        comp_csv.push(vec![t, num(trend[i]), num(osc[i])]);
    }
    let mut out = Outputs::new(&args.common.out)?;
    out.csv("signal.csv", &sig_csv)?;
    out.csv("components.csv", &comp_csv)?;
    out.json(
        "gen.json",
        &serde_json::json!({
            "tool": TOOL,
            "params": params,
            "dt_seconds": dt,
            "oscillation_bin": params.oscillation_bin(),
        }),
    )?;
    out.commit()
}

pub fn trend(args: &TrendArgs) -> CliResult<Vec<PathBuf>> {
    let ing = ingest_csv(&args.input.input, args.input.dt)?;
    let (lambda, preset) = require_lambda(&args.lambda)?;
    let signal = &ing.signal;
    let est = l1_trend_filter(signal, lambda, DEFAULT_TOL).stage("trend")?;
    let dt = signal.dt();

    let mut trend_csv = CsvTable::new(&time_header(ing.dt_known, &["value", "trend"]));
    for (i, (y, x)) in signal.samples().iter().zip(&est.values).enumerate() {
        let mut row = time_cells(i, dt, ing.dt_known);
        row.extend([num(*y), num(*x)]);
        trend_csv.push(row);
    }
    let mut knots_csv = CsvTable::new(&time_header(ing.dt_known, &["second_difference"]));
    let x = &est.values;
    for &k in &est.knots {
        let mut row = time_cells(k, dt, ing.dt_known);
        row.push(num(x[k - 1] - 2.0 * x[k] + x[k + 1]));
        knots_csv.push(row);
    }
    let summary = serde_json::json!({
        "tool": TOOL,
        "input": InputInfo::new(&args.input.input, &ing),
        "lambda": lambda,
        "lambda_preset": preset,
        "lambda_max": lambda_max(signal),
        "objective": est.objective,
        "dual_gap": est.dual_gap,
        "iterations": est.iterations,
        "knots": est.knots.len(),
    });
    let mut out = Outputs::new(&args.common.out)?;
    out.csv("trend.csv", &trend_csv)?;
    out.csv("knots.csv", &knots_csv)?;
    out.json("trend.json", &summary)?;
    out.commit()
}

pub fn noise(args: &NoiseArgs) -> CliResult<Vec<PathBuf>> {
    let ing = ingest_csv(&args.input.input, args.input.dt)?;
    let signal = &ing.signal;
    let decomp = wavelet_transform(signal).stage("noise")?;
    let est = estimate_sigma(&decomp);
    let threshold = est.sigma_hat * (2.0 * (est.n_used as f64).ln()).sqrt();
    let denoised = shrink(&decomp, args.j0_wavelet, threshold).stage("noise")?;

    let mut csv = CsvTable::new(&time_header(ing.dt_known, &["value", "denoised"]));
    for (i, (y, d)) in signal.samples().iter().zip(&denoised).enumerate() {
        let mut row = time_cells(i, signal.dt(), ing.dt_known);
        row.extend([num(*y), num(*d)]);
        csv.push(row);
    }
    let summary = serde_json::json!({
        "tool": TOOL,
        "input": InputInfo::new(&args.input.input, &ing),
        "sigma_hat": est.sigma_hat,
        "padded_len": est.n_used,
        "finest_level": decomp.finest_level,
        "j0": args.j0_wavelet,
        "threshold": threshold,
    });
    let mut out = Outputs::new(&args.common.out)?;
    out.json("noise.json", &summary)?;
    out.csv("denoised.csv", &csv)?;
    out.commit()
}

#[derive(Debug, Serialize)]
struct ExtractFile<'a> {
    tool: Tool,
    input: InputInfo,
    m_hat: usize,
    /// `G` in bins at each width of the schedule, when `m` was selected.
    selection: Option<&'a MSelection>,
    feature: HFFeature,
    /// Spike levels considered, highest first.
    spike_levels: Vec<f64>,
    search_end: usize,
}

pub fn extract(args: &ExtractArgs) -> CliResult<Vec<PathBuf>> {
    let ing = ingest_csv(&args.input.input, args.input.dt)?;
    let signal = &ing.signal;
    let (m, selection) = select(signal, &smoothing(&args.smoothing)?)?;
    let spec = AmplitudeSpectrum::from_signal(signal, m).stage("extract")?;
    let scan = LevelScan::new(&spec);
    let feature = scan.extract();
    let sets = scan.candidate_sets();

    let mut cols = vec!["bin"];
    if ing.dt_known {
        cols.push("hz");
    }
    cols.extend(["amplitude", "searched", "is_a", "is_b", "at_iota"]);
    let mut csv = CsvTable::new(&cols);
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for (i, v) in spec.smoothed.iter().enumerate() {
        let k = i + m;
        let mut row = vec![k.to_string()];
        if ing.dt_known {
            row.push(num(spec.bins_to_hz(k as f64)));
        }
        row.extend([
            num(*v),
            flag(k <= spec.search_end),
            flag(k == feature.a_index),
            flag(k == feature.b_index),
            flag(feature.iota > 0.0 && *v == feature.iota),
        ]);
        csv.push(row);
    }
    let file = ExtractFile {
        tool: TOOL,
        input: InputInfo::new(&args.input.input, &ing),
        m_hat: m,
        selection: selection.as_ref(),
        feature,
        spike_levels: sets.set_s,
        search_end: spec.search_end,
    };
    let mut out = Outputs::new(&args.common.out)?;
    out.json("extract.json", &to_json(&file, ing.dt_known)?)?;
    out.csv("spectrum.csv", &csv)?;
    out.commit()
}

#[derive(Debug, Serialize)]
struct CloudSummary {
    points: usize,
    alpha_star: f64,
    g_min: usize,
    g_median: f64,
    g_max: usize,
    d_min: f64,
    d_median: f64,
    d_max: f64,
    /// Replicates without any spike.
    zero_features: usize,
}

#[derive(Debug, Serialize)]
struct TrendSummary {
    objective: f64,
    dual_gap: f64,
    iterations: usize,
    knots: usize,
}

#[derive(Debug, Serialize)]
struct Timing {
    ingest_s: f64,
    analysis_s: f64,
    total_s: f64,
}

#[derive(Debug, Serialize)]
struct TestSettings {
    replicates: usize,
    seed: u64,
    smoothing: Smoothing,
    lambda: Option<f64>,
    lambda_preset: Option<&'static str>,
    trend_file: Option<String>,
    sigma_override: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    tool: Tool,
    input: InputInfo,
    settings: TestSettings,
    report: &'a TestReport,
    m_hat: usize,
    selection: Option<&'a MSelection>,
    sigma_hat: f64,
    lambda: Option<f64>,
    trend: Option<TrendSummary>,
    cloud: CloudSummary,
    /// Wall-clock seconds; the only field that varies between identical runs.
    timing: Timing,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Trend values from a file: column `trend` when there is a header with it,
/// otherwise the value column of a one- or two-column file.
fn read_trend(path: &Path) -> CliResult<Vec<f64>> {
    let table = read_table(path).map_err(|e| CliError::new("trend", e.message))?;
    if let Some(col) = table.column("trend") {
        return Ok(col.to_vec());
    }
    match table.columns.len() {
        1 | 2 => Ok(table.columns.last().unwrap().clone()),
        k => Err(CliError::new(
            "trend",
            format!("{}: no `trend` column among {k} columns", path.display()),
        )),
    }
}

pub fn test(args: &TestArgs) -> CliResult<Vec<PathBuf>> {
    let start = Instant::now();
    let ing = ingest_csv(&args.input.input, args.input.dt)?;
    let ingest_s = start.elapsed().as_secs_f64();
    let signal = &ing.signal;

    if args.replicates == 0 {
        return Err(CliError::new("config", "--N must be at least 1"));
    }
    let trend_override = args.trend_file.as_deref().map(read_trend).transpose()?;
    let (lambda, preset) = match (&trend_override, resolve_lambda(&args.lambda)?) {
        (_, Some((l, p))) => (Some(l), p),
        (Some(_), None) => (None, None),
        (None, None) => return Err(CliError::new("config", "no trend penalty: pass --lambda or --lambda-preset")),
    };
    if let Some(s) = args.sigma {
        if !(s.is_finite() && s >= 0.0) {
            return Err(CliError::new("config", format!("--sigma must be >= 0, got {s}")));
        }
    }
    let mut config = TestConfig::new(lambda.unwrap_or(0.0), args.replicates, args.seed);
    config.smoothing = smoothing(&args.smoothing)?;
    config.trend_override = trend_override;
    config.sigma_override = args.sigma;

    let analysis = Instant::now();
    let run = run_full_test_detailed(signal, &config)?;
    let analysis_s = analysis.elapsed().as_secs_f64();

    let report = &run.report;
    let dt = signal.dt();
    let mut cloud_cols = vec!["G_bins"];
    if ing.dt_known {
        cloud_cols.push("G_hz");
    }
    cloud_cols.push("D");
    let mut cloud_csv = CsvTable::new(&cloud_cols);
    let n = signal.len() as f64;
    for p in &run.cloud.points {
        let mut row = vec![p.g.to_string()];
        if ing.dt_known {
            row.push(num(p.g as f64 / (n * dt)));
        }
        row.push(num(p.d));
        cloud_csv.push(row);
    }
    let points = &run.cloud.points;
    let summary = CloudSummary {
        points: points.len(),
        alpha_star: report.alpha_star,
        g_min: points.iter().map(|p| p.g).min().unwrap_or(0),
        g_median: median(points.iter().map(|p| p.g as f64).collect()),
        g_max: points.iter().map(|p| p.g).max().unwrap_or(0),
        d_min: points.iter().map(|p| p.d).fold(f64::INFINITY, f64::min),
        d_median: median(points.iter().map(|p| p.d).collect()),
        d_max: points.iter().map(|p| p.d).fold(0.0, f64::max),
        zero_features: points.iter().filter(|p| p.g == 0 && p.d == 0.0).count(),
    };
    let file = ReportFile {
        tool: TOOL,
        input: InputInfo::new(&args.input.input, &ing),
        settings: TestSettings {
            replicates: args.replicates,
            seed: args.seed,
            smoothing: config.smoothing.clone(),
            lambda,
            lambda_preset: preset,
            trend_file: args.trend_file.as_ref().map(|p| p.display().to_string()),
            sigma_override: args.sigma,
        },
        report,
        m_hat: report.statistic.m_used,
        selection: run.selection.as_ref(),
        sigma_hat: report.provenance.sigma,
        lambda: report.provenance.lambda,
        trend: run.trend.as_ref().map(|t| TrendSummary {
            objective: t.objective,
            dual_gap: t.dual_gap,
            iterations: t.iterations,
            knots: t.knots.len(),
        }),
        cloud: summary,
        timing: Timing {
            ingest_s,
            analysis_s,
            total_s: start.elapsed().as_secs_f64(),
        },
    };
    let mut out = Outputs::new(&args.common.out)?;
    out.json("report.json", &to_json(&file, ing.dt_known)?)?;
    out.csv("cloud.csv", &cloud_csv)?;
    out.commit()
}
