//! On-disk run artefacts: `trace.csv`, `snapshots/t_<time>.csv` and
//! `report.json`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::report::Report;
use super::scenarios::Outcome;
use crate::error::{Error, Result};
use crate::model::Grid;
use crate::solver::{Snapshot, Trace};

pub const TRACE_HEADER: &str = "t,mass_u,mass_v,linf_u,linf_v,gradmax_v,front_rho,min_u";

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.records {
        let front = r.front_rho.map(|x| format!("{x:.16e}")).unwrap_or_default();
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{front},{:.16e}",
            r.t, r.mass_u, r.mass_v, r.linf_u, r.linf_v, r.gradmax_v, r.min_u
        )?;
    }
    w.flush()?;
    Ok(())
}

/// File name of a snapshot, e.g. `t_1.0000000000e-2.csv`.
pub fn snapshot_file_name(t: f64) -> String {
    format!("t_{t:.10e}.csv")
}

pub fn write_snapshot_csv(path: &Path, snap: &Snapshot, grid: &Grid) -> Result<()> {
    grid.check_len(snap.u.len())?;
    let mut w = create(path)?;
    writeln!(w, "x,u,v")?;
    for ((x, u), v) in grid.centers().iter().zip(&snap.u).zip(&snap.v) {
        writeln!(w, "{x:.16e},{u:.16e},{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json(path: &Path, report: &Report) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes every artefact of `outcome` into `dir`, creating it if needed.
pub fn write_outcome(dir: &Path, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    if let Some((trace, grid)) = &outcome.run {
        write_trace_csv(&dir.join("trace.csv"), trace)?;
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        for s in &trace.snapshots {
            write_snapshot_csv(&snap_dir.join(snapshot_file_name(s.t)), s, grid)?;
        }
    }
    write_report_json(&dir.join("report.json"), &outcome.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, State};
    use crate::solver::{RunDiagnostics, TraceRecord};

    #[test]
    fn trace_csv_round_trips_exactly() {
        let grid = make_grid(1, false, 1.0, 8).unwrap();
        let rec = TraceRecord {
            t: 0.1,
            step: 3,
            mass_u: 1.0 / 3.0,
            mass_v: 2.0,
            linf_u: 0.5,
            linf_v: 1.0,
            gradmax_v: 0.25,
            lapmax_v: 0.0,
            front_rho: None,
            min_u: 0.0,
            min_v: 0.0,
            interval_grad_v: 0.25,
            interval_lap_v: 0.0,
        };
        let trace = Trace {
            records: vec![rec, TraceRecord { front_rho: Some(0.7), ..rec }],
            snapshots: vec![],
            diagnostics: RunDiagnostics::default(),
            final_state: State::new(&grid, vec![0.0; 8], vec![0.0; 8], 0.1).unwrap(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        write_trace_csv(&p, &trace).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        let f: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(f.len(), 8);
        assert_eq!(f[1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(f[6], "");
        assert_eq!(lines[2].split(',').nth(6).unwrap().parse::<f64>().unwrap(), 0.7);
    }
}
