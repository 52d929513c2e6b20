//! Numerical confirmation of certificates against simulated solutions, and
//! the measurements (bounds on `v`, structure and decay times) that feed
//! the searches.

use serde::{Deserialize, Serialize};

use super::profile::{Certificate, Role};
use crate::error::{Error, Result};
use crate::model::{linf, Grid};
use crate::solver::{Snapshot, Trace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub holds: bool,
    /// Largest signed violation `u − g` (upper) or `g − u` (lower).
    pub worst_violation: f64,
    /// Largest `violation − tol`; nonpositive when the check holds.
    pub worst_excess_over_tol: f64,
    pub worst_time: f64,
    pub snapshots_checked: usize,
}

/// Tolerance used at a snapshot: `1e−8 + 5 dx ‖u‖_∞`.
pub fn domination_tolerance(grid: &Grid, u: &[f64]) -> f64 {
    1e-8 + 5.0 * grid.dx() * linf(u)
}

fn covered(trace: &Trace, window: (f64, f64)) -> Result<()> {
    let first = trace.records.first().map_or(f64::NAN, |r| r.t);
    let last = trace.records.last().map_or(f64::NAN, |r| r.t);
    let slack = 1e-12 * window.1.abs().max(1.0);
    if !(first <= window.0 + slack && last >= window.1 - slack) {
        return Err(Error::WindowNotCovered {
            start: window.0,
            end: window.1,
            covered_start: first,
            covered_end: last,
        });
    }
    Ok(())
}

/// Compares every stored snapshot inside the certificate window with the
/// profile.
pub fn numeric_domination(trace: &Trace, cert: &Certificate, grid: &Grid) -> Result<DominationReport> {
    covered(trace, cert.window)?;
    let (a, b) = cert.window;
    let slack = 1e-12 * b.abs().max(1.0);
    let mut report = DominationReport {
        holds: true,
        worst_violation: f64::NEG_INFINITY,
        worst_excess_over_tol: f64::NEG_INFINITY,
        worst_time: a,
        snapshots_checked: 0,
    };
    for snap in trace.snapshots.iter().filter(|s| s.t >= a - slack && s.t <= b + slack) {
        grid.check_len(snap.u.len())?;
        let t = snap.t.clamp(a, b);
        let g = cert.profile.eval_on_grid(grid, t)?;
        let tol = domination_tolerance(grid, &snap.u);
        for (ui, gi) in snap.u.iter().zip(&g) {
            let violation = match cert.role {
                Role::Upper => ui - gi,
                Role::Lower => gi - ui,
            };
            if violation > report.worst_violation {
                report.worst_violation = violation;
                report.worst_time = snap.t;
            }
            report.worst_excess_over_tol = report.worst_excess_over_tol.max(violation - tol);
        }
        report.snapshots_checked += 1;
    }
    if report.snapshots_checked == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    report.holds = report.worst_excess_over_tol <= 0.0;
    Ok(report)
}

/// Largest `‖∇v‖_∞` and `‖Δv‖_∞` seen by the solver over `[t0, t1]`,
/// including every step between samples.
pub fn measured_bounds(records: &[TraceRecord], t0: f64, t1: f64) -> Result<(f64, f64)> {
    let mut c1 = f64::NEG_INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    let mut seen = 0usize;
    for r in records {
        if r.t < t0 || r.t > t1 {
            continue;
        }
        c1 = c1.max(r.gradmax_v);
        c2 = c2.max(r.lapmax_v);
        if r.t > t0 {
            c1 = c1.max(r.interval_grad_v);
            c2 = c2.max(r.interval_lap_v);
        }
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok((c1, c2))
}

/// Central-difference `(x − x₀)·∇v` at each cell center; one-sided at the
/// ends.
fn radial_derivative_times_offset(v: &[f64], grid: &Grid, x0: f64) -> Vec<(f64, f64)> {
    let n = v.len();
    let dx = grid.dx();
    (0..n)
        .map(|i| {
            let slope = if n < 2 {
                0.0
            } else if i == 0 {
                (v[1] - v[0]) / dx
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / dx
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * dx)
            };
            let off = if grid.radial() { grid.centers()[i] } else { grid.offset(i, x0) };
            (off.abs(), off * slope)
        })
        .collect()
}

/// True when `(x−x₀)·∇v ≤ −(μ/2)|x−x₀|²` on `R₀/2 ≤ |x−x₀| ≤ R₀` and
/// `(x−x₀)·∇v ≤ (μ/2)R₀²` on `|x−x₀| < R₀/2`.
pub fn structure_holds(v: &[f64], grid: &Grid, x0: f64, r0: f64, mu: f64) -> bool {
    radial_derivative_times_offset(v, grid, x0).into_iter().all(|(r, xv)| {
        if r > r0 {
            true
        } else if r >= r0 / 2.0 {
            xv <= -0.5 * mu * r * r
        } else {
            xv <= 0.5 * mu * r0 * r0
        }
    })
}

/// Last snapshot time `t` such that the structure held at every snapshot
/// up to `t`; `None` if it fails at the first one.
pub fn structure_time(snapshots: &[Snapshot], grid: &Grid, x0: f64, r0: f64, mu: f64) -> Option<f64> {
    let mut last = None;
    for s in snapshots {
        if !structure_holds(&s.v, grid, x0, r0, mu) {
            break;
        }
        last = Some(s.t);
    }
    last
}

/// `sup |(x−x₀)·∇v/|x−x₀|² + μ|` over `r_inner ≤ |x−x₀| ≤ r_outer` and the
/// snapshots with `t ≤ t_max`.
pub fn structure_defect(
    snapshots: &[Snapshot],
    grid: &Grid,
    x0: f64,
    mu: f64,
    r_inner: f64,
    r_outer: f64,
    t_max: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut seen = 0usize;
    for s in snapshots.iter().filter(|s| s.t <= t_max) {
        for (r, xv) in radial_derivative_times_offset(&s.v, grid, x0) {
            if r >= r_inner && r <= r_outer && r > 0.0 {
                worst = worst.max((xv / (r * r) + mu).abs());
            }
        }
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(worst)
}

/// First sample time after which `‖∇v‖_∞ ≤ δ` and `‖Δv‖_∞ ≤ δ` at every
/// later step.
pub fn decay_time(records: &[TraceRecord], delta: f64) -> Option<f64> {
    let mut suffix: f64 = f64::NEG_INFINITY;
    let mut found = None;
    for (k, r) in records.iter().enumerate().rev() {
        suffix = suffix.max(r.gradmax_v).max(r.lapmax_v);
        if suffix > delta {
            break;
        }
        found = Some(r.t);
        if k > 0 {
            suffix = suffix.max(r.interval_grad_v).max(r.interval_lap_v);
        }
    }
    found
}

/// Smallest `min u` over the records with `t ≥ t_from`.
pub fn min_u_after(records: &[TraceRecord], t_from: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.t >= t_from)
        .map(|r| r.min_u)
        .reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::profile::{CertificateConstants, CertificateKind, SelfSimilarProfile};
    use crate::model::{make_grid, State};
    use crate::solver::RunDiagnostics;

    fn record(t: f64, g: f64, ig: f64) -> TraceRecord {
        TraceRecord {
            t,
            step: 0,
            mass_u: 1.0,
            mass_v: 0.0,
            linf_u: 1.0,
            linf_v: 0.0,
            gradmax_v: g,
            lapmax_v: g / 2.0,
            front_rho: None,
            min_u: 0.0,
            min_v: 0.0,
            interval_grad_v: ig,
            interval_lap_v: ig / 2.0,
        }
    }

    fn cert(role: Role) -> Certificate {
        Certificate {
            kind: CertificateKind::FiniteSpeed,
            role,
            profile: SelfSimilarProfile {
                epsilon: 1.0,
                tau: 1.0,
                sigma: 0.0,
                beta: 0.0,
                eta: 1.0,
                d: 1.0,
                x0: 0.0,
            },
            window: (0.0, 1.0),
            constants: CertificateConstants::default(),
            margins: Vec::new(),
        }
    }

    fn trace(grid: &Grid, u: Vec<f64>) -> Trace {
        let n = u.len();
        let snaps = vec![
            Snapshot { t: 0.0, u: u.clone(), v: vec![0.0; n] },
            Snapshot { t: 1.0, u: u.clone(), v: vec![0.0; n] },
        ];
        Trace {
            records: vec![record(0.0, 0.0, 0.0), record(1.0, 0.0, 0.0)],
            snapshots: snaps,
            diagnostics: RunDiagnostics::default(),
            final_state: State::new(grid, u, vec![0.0; n], 1.0).unwrap(),
        }
    }

    #[test]
    fn zero_solution_is_dominated() {
        let g = make_grid(1, false, 2.0, 40).unwrap();
        let r = numeric_domination(&trace(&g, vec![0.0; 40]), &cert(Role::Upper), &g).unwrap();
        assert!(r.holds && r.worst_violation <= 0.0);
        assert_eq!(r.snapshots_checked, 2);
    }

    #[test]
    fn lower_profile_violation_detected() {
        let g = make_grid(1, false, 2.0, 40).unwrap();
        let r = numeric_domination(&trace(&g, vec![0.0; 40]), &cert(Role::Lower), &g).unwrap();
        assert!(!r.holds);
        assert!(r.worst_violation > 0.9);
    }

    #[test]
    fn uncovered_window() {
        let g = make_grid(1, false, 2.0, 8).unwrap();
        let mut c = cert(Role::Upper);
        c.window = (0.0, 2.0);
        assert!(matches!(
            numeric_domination(&trace(&g, vec![0.0; 8]), &c, &g),
            Err(Error::WindowNotCovered { .. })
        ));
    }

    #[test]
    fn decay_time_uses_suffix_maximum() {
        let recs = vec![
            record(0.0, 1.0, 0.0),
            record(1.0, 0.05, 0.5),
            record(2.0, 0.05, 0.08),
            record(3.0, 0.01, 0.05),
        ];
        assert_eq!(decay_time(&recs, 0.1), Some(1.0));
        assert_eq!(decay_time(&recs, 0.01), Some(3.0));
        assert_eq!(decay_time(&recs, 0.001), None);
        let (c1, c2) = measured_bounds(&recs, 1.0, 3.0).unwrap();
        assert_eq!((c1, c2), (0.08, 0.04));
    }

    #[test]
    fn quadratic_well_has_structure() {
        let g = make_grid(1, false, 2.0, 400).unwrap();
        let mu = 3.0;
        let v: Vec<f64> = g.centers().iter().map(|x| -0.5 * mu * x * x).collect();
        assert!(structure_holds(&v, &g, 0.0, 1.0, mu));
        let defect = structure_defect(
            &[Snapshot { t: 0.0, u: vec![0.0; 400], v: v.clone() }],
            &g,
            0.0,
            mu,
            0.5,
            1.5,
            1.0,
        )
        .unwrap();
        assert!(defect < 1e-10, "{defect}");
        let flat = vec![0.0; 400];
        assert!(!structure_holds(&flat, &g, 0.0, 1.0, mu));
    }
}
