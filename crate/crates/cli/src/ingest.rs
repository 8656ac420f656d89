//! CSV ingestion: one value column, or `(time, value)` with uniform spacing.

use std::path::Path;

use hffeat::Signal;

use crate::error::{CliError, CliResult};

/// Largest tolerated deviation of a time step from the median step, relative.
pub const MAX_JITTER: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Ingested {
    pub signal: Signal,
    /// False when neither a time column nor `--dt` supplied the spacing; the
    /// signal then carries `dt = 1` and Hz values are not reported.
    pub dt_known: bool,
}

/// Parsed numeric table with an optional header.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub columns: Vec<Vec<f64>>,
    /// 1-based file line of each row.
    pub lines: Vec<u64>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let idx = self.header.as_ref()?.iter().position(|h| h.trim() == name)?;
        Some(&self.columns[idx])
    }
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let stage = "ingest";
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::new(stage, format!("{}: {e}", path.display())))?;
    let mut header = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut lines = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::new(stage, format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<Result<f64, _>> = record.iter().map(|f| f.parse::<f64>()).collect();
        if columns.is_empty() && header.is_none() && parsed.iter().any(|v| v.is_err()) {
            // the first nonempty row is a header when any of it is not a number
            header = Some(record.iter().map(str::to_owned).collect::<Vec<_>>());
            continue;
        }
        let width = header.as_ref().map(|h| h.len()).or(columns.first().map(|_| columns.len()));
        if let Some(w) = width {
            if record.len() != w {
                return Err(CliError::new(
                    stage,
                    format!("{} line {line}: expected {w} fields, found {}", path.display(), record.len()),
                ));
            }
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); record.len()];
        }
        for (i, (v, raw)) in parsed.into_iter().zip(record.iter()).enumerate() {
            let v = v.map_err(|_| {
                CliError::new(stage, format!("{} line {line}: cannot parse {raw:?} as a number", path.display()))
            })?;
            if !v.is_finite() {
                return Err(CliError::new(stage, format!("{} line {line}: value {raw:?} is not finite", path.display())));
            }
            columns[i].push(v);
        }
        lines.push(line);
    }
    if columns.is_empty() {
        return Err(CliError::new(stage, format!("{}: no data rows", path.display())));
    }
    Ok(Table { header, columns, lines })
}

/// Reads a signal from a one- or two-column CSV. A time column (seconds)
/// fixes `dt`; `dt` must be given for a single column to report Hz.
pub fn ingest_csv(path: &Path, dt: Option<f64>) -> CliResult<Ingested> {
    let stage = "ingest";
    if let Some(dt) = dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CliError::new(stage, format!("--dt must be positive, got {dt}")));
        }
    }
    let table = read_table(path)?;
    let (values, dt, dt_known) = match table.columns.len() {
        1 => (table.columns[0].clone(), dt.unwrap_or(1.0), dt.is_some()),
        2 => {
            let spacing = uniform_spacing(&table.columns[0], &table.lines, path)?;
            if let Some(given) = dt {
                if ((given - spacing) / spacing).abs() > MAX_JITTER {
                    return Err(CliError::new(
                        stage,
                        format!("--dt {given} disagrees with the time column spacing {spacing}"),
                    ));
                }
            }
            (table.columns[1].clone(), spacing, true)
        }
        k => {
            return Err(CliError::new(
                stage,
                format!("{}: expected one or two columns, found {k}", path.display()),
            ))
        }
    };
    let signal = Signal::new(values, dt)
        .map_err(|e| CliError::new(stage, format!("{}: {e}", path.display())))?
        .with_label(path.display().to_string());
    Ok(Ingested { signal, dt_known })
}

fn uniform_spacing(times: &[f64], lines: &[u64], path: &Path) -> CliResult<f64> {
    let stage = "ingest";
    if times.len() < 2 {
        return Err(CliError::new(stage, format!("{}: need at least two rows", path.display())));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(CliError::new(stage, format!("{}: time column must increase", path.display())));
    }
    // a single bad gap drags the mean, so steps are judged against the median
    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    let typical = steps[steps.len() / 2];
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if ((step - typical) / typical).abs() > MAX_JITTER {
            return Err(CliError::new(
                stage,
                format!(
                    "{} line {}: nonuniform time spacing (step {step} vs typical {typical}, tolerance {}%)",
                    path.display(),
                    lines[i + 1],
                    MAX_JITTER * 100.0
                ),
            ));
        }
    }
    Ok(dt)
}
