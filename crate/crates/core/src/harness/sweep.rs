//! Parameter sweeps over the Cartesian product of override values, run
//! in parallel.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::output::write_outcome;
use super::report::{Report, Verdict};
use super::scenarios::run_scenario;
use crate::error::{Error, Result};

/// One point of the sweep and how it ended.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub overrides: Vec<(String, String)>,
    pub dir: PathBuf,
    /// `Err` holds a configuration or I/O message for this point only.
    pub result: std::result::Result<Report, String>,
}

impl SweepPoint {
    pub fn verdict(&self) -> Verdict {
        match &self.result {
            Ok(r) => r.verdict,
            Err(_) => Verdict::Error,
        }
    }
}

/// Every combination of the parameter values, first key varying slowest.
pub fn cartesian(params: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in params {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out
}

/// Columns of `summary.csv`: `point`, one column per swept key, `verdict`,
/// `checks_failed`, `message`, then every metric reported by any point in
/// lexicographic order (empty where a point lacks it).
///
/// Runs every point with `threads` workers (0 means the rayon default) and
/// writes `point_NNN/` directories plus `summary.csv` under `out`. No
/// parameters means a single point with the base config.
pub fn run_sweep(
    base: &ScenarioConfig,
    params: &[(String, Vec<String>)],
    out: &Path,
    threads: usize,
) -> Result<Vec<SweepPoint>> {
    if let Some((k, _)) = params.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Config(format!("sweep parameter `{k}` has no values")));
    }
    fs::create_dir_all(out)?;
    let combos = cartesian(params);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        combos
            .into_par_iter()
            .enumerate()
            .map(|(index, overrides)| {
                let dir = out.join(format!("point_{index:03}"));
                let result = run_point(base, &overrides, &dir).map_err(|e| e.to_string());
                SweepPoint {
                    index,
                    overrides,
                    dir,
                    result,
                }
            })
            .collect()
    });
    write_summary(&out.join("summary.csv"), params, &points)?;
    Ok(points)
}

fn run_point(base: &ScenarioConfig, overrides: &[(String, String)], dir: &Path) -> Result<Report> {
    let config = base.with_overrides(overrides)?;
    let outcome = run_scenario(&config)?;
    write_outcome(dir, &outcome)?;
    Ok(outcome.report)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_summary(path: &Path, params: &[(String, Vec<String>)], points: &[SweepPoint]) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    let keys: Vec<String> = params.iter().map(|(k, _)| csv_field(k)).collect();
    let key_cols: String = keys.iter().map(|k| format!("{k},")).collect();
    let metric_names: BTreeSet<&str> = points
        .iter()
        .filter_map(|p| p.result.as_ref().ok())
        .flat_map(|r| r.metrics.keys().map(String::as_str))
        .collect();
    let metric_cols: String = metric_names.iter().map(|k| format!(",{}", csv_field(k))).collect();
    writeln!(w, "point,{key_cols}verdict,checks_failed,message{metric_cols}")?;
    for p in points {
        let values: Vec<String> = p.overrides.iter().map(|(_, v)| csv_field(v)).collect();
        let (verdict, failed, msg) = match &p.result {
            Ok(r) => (
                r.verdict,
                r.checks.iter().filter(|c| !c.passed).count(),
                r.error.as_ref().map(|e| e.message.clone()).unwrap_or_default(),
            ),
            Err(m) => (Verdict::Error, 0, m.clone()),
        };
        let verdict = serde_json::to_value(verdict)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let value_cols: String = values.iter().map(|v| format!("{v},")).collect();
        let metric_vals: String = metric_names
            .iter()
            .map(|k| {
                let v = p.result.as_ref().ok().and_then(|r| r.metrics.get(*k));
                v.map_or_else(|| ",".to_string(), |x| format!(",{x:.16e}"))
            })
            .collect();
        writeln!(
            w,
            "point_{:03},{value_cols}{verdict},{failed},{}{metric_vals}",
            p.index,
            csv_field(&msg)
        )?;
    }
    w.flush()?;
    Ok(())
}
