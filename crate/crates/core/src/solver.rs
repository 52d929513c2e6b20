//! Explicit finite-volume time stepping.
//!
//! Each interior face `j` carries the flux
//! `A_j [(u^m_j − u^m_{j−1})/dx − χ (v_j − v_{j−1})/dx · u_up]` with the
//! upwind value `u_up`; boundary faces carry none. The attractant is
//! advanced with the same stencil and the consumption term `−αuv`, both
//! evaluated at the old time level.

use serde::{Deserialize, Serialize};

use crate::analysis::front::{front_position_about, pressure_front_about};
use crate::error::{Error, Result};
use crate::model::{integrate, linf, Grid, ModelParams, State};

const TINY: f64 = 1e-300;
/// Fraction of the monotonicity bound used by [`stable_dt`].
const MONOTONE_SAFETY: f64 = 0.9;

fn default_cfl_diffusion() -> f64 {
    0.2
}
fn default_cfl_advection() -> f64 {
    0.4
}
fn default_dt_max() -> f64 {
    1e-2
}
fn default_t_end() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControls {
    #[serde(default = "default_cfl_diffusion")]
    pub cfl_diffusion: f64,
    #[serde(default = "default_cfl_advection")]
    pub cfl_advection: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            cfl_diffusion: default_cfl_diffusion(),
            cfl_advection: default_cfl_advection(),
            dt_max: default_dt_max(),
            t_end: default_t_end(),
        }
    }
}

impl StepControls {
    pub fn until(t_end: f64) -> Self {
        Self {
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self, t_start: f64) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidControls(s));
        for (name, f) in [
            ("cfl_diffusion", self.cfl_diffusion),
            ("cfl_advection", self.cfl_advection),
        ] {
            if !(f > 0.0 && f <= 0.5) {
                return bad(format!("{name} must lie in (0, 0.5], got {f}"));
            }
        }
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if !(self.t_end >= t_start && self.t_end.is_finite()) {
            return bad(format!(
                "t_end = {} precedes the start time {t_start}",
                self.t_end
            ));
        }
        Ok(())
    }
}

fn max_rate_terms(u: &[f64], v: &[f64], params: &ModelParams, grid: &Grid) -> (f64, f64) {
    let umax = linf(u);
    let inv_dx = 1.0 / grid.dx();
    let gmax = v
        .windows(2)
        .fold(0.0f64, |acc, w| acc.max((w[1] - w[0]).abs() * inv_dx));
    (params.m * params.pow_m(umax) / umax.max(TINY), gmax)
}

/// Time step from the CFL candidates and the monotonicity bounds for both
/// components.
fn dt_bound(
    u: &[f64],
    v: &[f64],
    params: &ModelParams,
    grid: &Grid,
    cfl_d: f64,
    cfl_a: f64,
    monotone_safety: f64,
    frozen: bool,
) -> f64 {
    let dx = grid.dx();
    let kappa = grid.stencil_factor();
    let geo = 2.0 / kappa;
    let (diffusivity, gmax) = max_rate_terms(u, v, params, grid);
    let umax = linf(u);
    let diffusive = geo * cfl_d * dx * dx / diffusivity.max(1.0);
    let advective = geo * cfl_a * dx / (params.chi * gmax + TINY);
    let v_diffusive = geo * cfl_d * dx * dx;
    let u_rate = kappa * (diffusivity / (dx * dx) + params.chi * gmax / dx);
    let mut dt = diffusive.min(advective).min(v_diffusive);
    if u_rate > 0.0 {
        dt = dt.min(monotone_safety / u_rate);
    }
    if !frozen {
        dt = dt.min(monotone_safety / (kappa / (dx * dx) + params.alpha * umax));
    }
    dt
}

/// Largest admissible step under the controls' safety factors.
pub fn stable_dt(state: &State, params: &ModelParams, grid: &Grid, controls: &StepControls) -> Result<f64> {
    grid.check_len(state.u.len())?;
    grid.check_len(state.v.len())?;
    let dt = dt_bound(
        &state.u,
        &state.v,
        params,
        grid,
        controls.cfl_diffusion,
        controls.cfl_advection,
        MONOTONE_SAFETY,
        false,
    );
    Ok(dt.min(controls.dt_max))
}

fn hard_limit(u: &[f64], v: &[f64], params: &ModelParams, grid: &Grid, frozen: bool) -> f64 {
    dt_bound(u, v, params, grid, 0.5, 0.5, 1.0, frozen) * (1.0 + 1e-12)
}

/// Maxima of the pre-step attractant derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub grad_v: f64,
    pub lap_v: f64,
}

/// Reusable work arrays for [`step_in_place`].
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pm: Vec<f64>,
    flux: Vec<f64>,
    v_new: Vec<f64>,
}

/// Advances `state` by `dt` in place. With `frozen`, `v` is held fixed.
pub fn step_in_place(
    state: &mut State,
    params: &ModelParams,
    grid: &Grid,
    dt: f64,
    frozen: bool,
    ws: &mut Workspace,
) -> Result<StepStats> {
    let n = grid.n_cells();
    grid.check_len(state.u.len())?;
    grid.check_len(state.v.len())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidControls(format!("time step must be positive, got {dt}")));
    }
    let limit = hard_limit(&state.u, &state.v, params, grid, frozen);
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    let u = &mut state.u;
    let v = &mut state.v;
    let inv_dx = 1.0 / grid.dx();
    let a = grid.face_areas();
    let w = grid.weights();
    ws.pm.resize(n, 0.0);
    ws.flux.resize(n + 1, 0.0);
    for (p, ui) in ws.pm.iter_mut().zip(u.iter()) {
        *p = params.pow_m(*ui);
    }
    let mut grad_v: f64 = 0.0;
    ws.flux[0] = 0.0;
    ws.flux[n] = 0.0;
    for j in 1..n {
        let g = (v[j] - v[j - 1]) * inv_dx;
        grad_v = grad_v.max(g.abs());
        let vel = params.chi * g;
        let upwind = if vel >= 0.0 { u[j - 1] } else { u[j] };
        let f = (ws.pm[j] - ws.pm[j - 1]) * inv_dx - vel * upwind;
        ws.flux[j] = dt * a[j] * f;
    }
    let mut lap_v: f64 = 0.0;
    if !frozen {
        ws.v_new.resize(n, 0.0);
    }
    for i in 0..n {
        let right = if i + 1 < n { a[i + 1] * (v[i + 1] - v[i]) } else { 0.0 };
        let left = if i > 0 { a[i] * (v[i] - v[i - 1]) } else { 0.0 };
        let lap = (right - left) * inv_dx / w[i];
        lap_v = lap_v.max(lap.abs());
        if !frozen {
            ws.v_new[i] = v[i] + dt * lap - dt * params.alpha * u[i] * v[i];
        }
    }
    let mut finite = true;
    for i in 0..n {
        u[i] += (ws.flux[i + 1] - ws.flux[i]) / w[i];
        finite &= u[i].is_finite();
    }
    if !frozen {
        std::mem::swap(v, &mut ws.v_new);
        finite &= v.iter().all(|x| x.is_finite());
    }
    state.t += dt;
    if !finite {
        let field = if state.u.iter().all(|x| x.is_finite()) { "v" } else { "u" };
        return Err(Error::NonFinite {
            field,
            step: 0,
            t: state.t,
        });
    }
    Ok(StepStats { grad_v, lap_v })
}

/// One explicit step of the coupled system.
pub fn step(state: &State, params: &ModelParams, grid: &Grid, dt: f64) -> Result<State> {
    let mut next = state.clone();
    step_in_place(&mut next, params, grid, dt, false, &mut Workspace::default())?;
    Ok(next)
}

/// One step of the first equation against the fixed attractant `state.v`.
pub fn step_frozen(state: &State, params: &ModelParams, grid: &Grid, dt: f64) -> Result<State> {
    let mut next = state.clone();
    step_in_place(&mut next, params, grid, dt, true, &mut Workspace::default())?;
    Ok(next)
}

/// Front probe evaluated at every sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontProbe {
    pub x0: f64,
    pub rel_threshold: f64,
    /// When set, the front is the zero of the pressure fit over this band
    /// instead of the threshold crossing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_band: Option<(f64, f64)>,
}

/// Which times to record and what to keep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SamplingPlan {
    /// Observable sample times; `t_end` is always sampled.
    pub sample_times: Vec<f64>,
    /// Times at which full fields are stored; each is also sampled.
    pub snapshot_times: Vec<f64>,
    pub front: Option<FrontProbe>,
    pub frozen_v: bool,
}

impl SamplingPlan {
    /// `count` equally spaced samples on `(t_start, t_end]`.
    pub fn uniform(t_start: f64, t_end: f64, count: usize) -> Self {
        let sample_times = (1..=count)
            .map(|i| t_start + (t_end - t_start) * i as f64 / count as f64)
            .collect();
        Self {
            sample_times,
            ..Self::default()
        }
    }

    pub fn with_front(mut self, x0: f64, rel_threshold: f64) -> Self {
        self.front = Some(FrontProbe {
            x0,
            rel_threshold,
            pressure_band: None,
        });
        self
    }

    /// Front from the pressure fit over `band`; see
    /// [`crate::analysis::pressure_front_about`].
    pub fn with_pressure_front(mut self, x0: f64, band: (f64, f64)) -> Self {
        self.front = Some(FrontProbe {
            x0,
            rel_threshold: crate::analysis::DEFAULT_REL_THRESHOLD,
            pressure_band: Some(band),
        });
        self
    }

    /// Stores a snapshot at every sample time.
    pub fn snapshot_all(mut self) -> Self {
        self.snapshot_times = self.sample_times.clone();
        self
    }

    pub fn frozen(mut self) -> Self {
        self.frozen_v = true;
        self
    }
}

/// Reduced observables at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub step: u64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub linf_u: f64,
    pub linf_v: f64,
    pub gradmax_v: f64,
    pub lapmax_v: f64,
    pub front_rho: Option<f64>,
    pub min_u: f64,
    pub min_v: f64,
    /// Largest `‖∇v‖_∞` over the steps since the previous sample, including
    /// this sample's state.
    pub interval_grad_v: f64,
    /// Largest `‖Δv‖_∞` over the same steps.
    pub interval_lap_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Whole-run checks accumulated step by step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub steps: u64,
    /// Cells that became positive without a positive neighbor in the
    /// previous step.
    pub support_jumps: u64,
    pub min_u: f64,
    pub min_v: f64,
    /// Largest one-step increase of `max v`.
    pub max_v_increase: f64,
    pub min_dt: f64,
    pub max_dt: f64,
}

impl Default for RunDiagnostics {
    fn default() -> Self {
        Self {
            steps: 0,
            support_jumps: 0,
            min_u: f64::INFINITY,
            min_v: f64::INFINITY,
            max_v_increase: f64::NEG_INFINITY,
            min_dt: f64::INFINITY,
            max_dt: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: RunDiagnostics,
    pub final_state: State,
}

impl Trace {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Largest `|mass_u − mass_u(0)| / mass_u(0)` over the samples.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.records[0].mass_u;
        let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
        self.records
            .iter()
            .fold(0.0, |acc, r| acc.max((r.mass_u - m0).abs() / scale))
    }

    /// Front positions as a strictly increasing trace.
    pub fn front_trace(&self, threshold: f64) -> Result<crate::analysis::FrontTrace> {
        let mut out = crate::analysis::FrontTrace::new(threshold);
        for r in &self.records {
            if let Some(rho) = r.front_rho {
                out.push(r.t, rho)?;
            }
        }
        Ok(out)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.t == t)
    }
}

fn record(
    state: &State,
    grid: &Grid,
    params: &ModelParams,
    probe: Option<&FrontProbe>,
    step: u64,
    interval: (f64, f64),
) -> Result<TraceRecord> {
    let gradmax_v = crate::model::grad_max(&state.v, grid)?;
    let lapmax_v = crate::model::laplacian_max(&state.v, grid)?;
    let front_rho = match probe {
        Some(p) => match p.pressure_band.map_or_else(
            || front_position_about(&state.u, grid, p.x0, params.m, p.rel_threshold),
            |band| pressure_front_about(&state.u, grid, p.x0, params.m, band),
        ) {
            Ok(r) => Some(r),
            Err(Error::EmptySupport) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    Ok(TraceRecord {
        t: state.t,
        step,
        mass_u: integrate(&state.u, grid)?,
        mass_v: integrate(&state.v, grid)?,
        linf_u: linf(&state.u),
        linf_v: linf(&state.v),
        gradmax_v,
        lapmax_v,
        front_rho,
        min_u: state.u.iter().copied().fold(f64::INFINITY, f64::min),
        min_v: state.v.iter().copied().fold(f64::INFINITY, f64::min),
        interval_grad_v: interval.0.max(gradmax_v),
        interval_lap_v: interval.1.max(lapmax_v),
    })
}

/// Times closer than this relative gap are treated as one stop.
const TIME_MERGE_REL: f64 = 1e-12;

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_MERGE_REL * a.abs().max(b.abs())
}

fn stop_times(t_start: f64, controls: &StepControls, plan: &SamplingPlan) -> Vec<f64> {
    let mut stops: Vec<f64> = plan
        .sample_times
        .iter()
        .chain(&plan.snapshot_times)
        .copied()
        .filter(|t| *t > t_start && *t < controls.t_end && !same_time(*t, t_start) && !same_time(*t, controls.t_end))
        .collect();
    if controls.t_end > t_start {
        stops.push(controls.t_end);
    }
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|b, a| same_time(*a, *b));
    stops
}

/// Integrates to `controls.t_end`, landing exactly on every sample time.
pub fn run(
    state: &State,
    params: &ModelParams,
    grid: &Grid,
    controls: &StepControls,
    plan: &SamplingPlan,
) -> Result<Trace> {
    run_observed(state, params, grid, controls, plan, &mut |_, _| Ok(()))
}

/// [`run`] with a callback invoked on every sampled state.
pub fn run_observed(
    state: &State,
    params: &ModelParams,
    grid: &Grid,
    controls: &StepControls,
    plan: &SamplingPlan,
    observer: &mut dyn FnMut(&State, &TraceRecord) -> Result<()>,
) -> Result<Trace> {
    params.validate()?;
    state.check(grid)?;
    controls.validate(state.t)?;
    let probe = plan.front.as_ref();
    let snapshot_wanted = |t: f64| plan.snapshot_times.iter().any(|s| same_time(*s, t));
    let mut cur = state.clone();
    let mut diag = RunDiagnostics {
        min_u: state.u.iter().copied().fold(f64::INFINITY, f64::min),
        min_v: state.v.iter().copied().fold(f64::INFINITY, f64::min),
        ..RunDiagnostics::default()
    };
    let first = record(&cur, grid, params, probe, 0, (0.0, 0.0))?;
    observer(&cur, &first)?;
    let mut records = vec![first];
    let mut snapshots = Vec::new();
    if snapshot_wanted(cur.t) {
        snapshots.push(Snapshot {
            t: cur.t,
            u: cur.u.clone(),
            v: cur.v.clone(),
        });
    }
    let mut ws = Workspace::default();
    let mut interval = (0.0f64, 0.0f64);
    let mut prev_positive: Vec<bool> = cur.u.iter().map(|x| *x > 0.0).collect();
    let n = grid.n_cells();
    for stop in stop_times(state.t, controls, plan) {
        while cur.t < stop {
            let dt_stable = if plan.frozen_v {
                dt_bound(
                    &cur.u,
                    &cur.v,
                    params,
                    grid,
                    controls.cfl_diffusion,
                    controls.cfl_advection,
                    MONOTONE_SAFETY,
                    true,
                )
                .min(controls.dt_max)
            } else {
                stable_dt(&cur, params, grid, controls)?
            };
            let remaining = stop - cur.t;
            let (dt, land) = if remaining <= dt_stable {
                (remaining, true)
            } else {
                (dt_stable, false)
            };
            let vmax_old = linf(&cur.v);
            let stats = step_in_place(&mut cur, params, grid, dt, plan.frozen_v, &mut ws)
                .map_err(|e| match e {
                    Error::NonFinite { field, t, .. } => Error::NonFinite {
                        field,
                        step: diag.steps + 1,
                        t,
                    },
                    other => other,
                })?;
            if land {
                cur.t = stop;
            }
            diag.steps += 1;
            diag.min_dt = diag.min_dt.min(dt);
            diag.max_dt = diag.max_dt.max(dt);
            interval.0 = interval.0.max(stats.grad_v);
            interval.1 = interval.1.max(stats.lap_v);
            diag.max_v_increase = diag.max_v_increase.max(linf(&cur.v) - vmax_old);
            let mut umin = f64::INFINITY;
            for i in 0..n {
                let ui = cur.u[i];
                umin = umin.min(ui);
                let pos = ui > 0.0;
                if pos && !prev_positive[i] {
                    let left = i > 0 && prev_positive[i - 1];
                    let right = i + 1 < n && prev_positive[i + 1];
                    if !(left || right) {
                        diag.support_jumps += 1;
                    }
                }
            }
            for i in 0..n {
                prev_positive[i] = cur.u[i] > 0.0;
            }
            diag.min_u = diag.min_u.min(umin);
            diag.min_v = diag.min_v.min(cur.v.iter().copied().fold(f64::INFINITY, f64::min));
        }
        let rec = record(&cur, grid, params, probe, diag.steps, interval)?;
        observer(&cur, &rec)?;
        records.push(rec);
        interval = (0.0, 0.0);
        if snapshot_wanted(stop) {
            snapshots.push(Snapshot {
                t: cur.t,
                u: cur.u.clone(),
                v: cur.v.clone(),
            });
        }
    }
    if diag.steps == 0 {
        diag.max_v_increase = 0.0;
        diag.min_dt = 0.0;
    }
    Ok(Trace {
        records,
        snapshots,
        diagnostics: diag,
        final_state: cur,
    })
}

/// Result of advancing two cell densities against one frozen attractant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub steps: u64,
    pub samples: usize,
    /// Largest `u⁽¹⁾ − u⁽²⁾` over all cells and samples.
    pub worst_excess: f64,
}

/// Advances `lower` and `upper` in lockstep with a common step against the
/// attractant of `lower`, recording the largest `u_lower − u_upper`.
pub fn ordering_run(
    lower: &State,
    upper: &State,
    params: &ModelParams,
    grid: &Grid,
    controls: &StepControls,
    sample_times: &[f64],
) -> Result<OrderingReport> {
    params.validate()?;
    lower.check(grid)?;
    upper.check(grid)?;
    controls.validate(lower.t)?;
    let mut a = lower.clone();
    let mut b = State {
        v: lower.v.clone(),
        ..upper.clone()
    };
    b.t = a.t;
    let excess = |a: &State, b: &State| {
        a.u.iter()
            .zip(&b.u)
            .fold(f64::NEG_INFINITY, |acc, (x, y)| acc.max(x - y))
    };
    let mut worst = excess(&a, &b);
    let mut ws = Workspace::default();
    let plan = SamplingPlan {
        sample_times: sample_times.to_vec(),
        ..SamplingPlan::default()
    };
    let mut steps = 0;
    let stops = stop_times(a.t, controls, &plan);
    for &stop in &stops {
        while a.t < stop {
            let bound = |s: &State| {
                dt_bound(
                    &s.u,
                    &s.v,
                    params,
                    grid,
                    controls.cfl_diffusion,
                    controls.cfl_advection,
                    MONOTONE_SAFETY,
                    true,
                )
            };
            let dt_stable = bound(&a).min(bound(&b)).min(controls.dt_max);
            let remaining = stop - a.t;
            let (dt, land) = if remaining <= dt_stable {
                (remaining, true)
            } else {
                (dt_stable, false)
            };
            step_in_place(&mut a, params, grid, dt, true, &mut ws)?;
            step_in_place(&mut b, params, grid, dt, true, &mut ws)?;
            if land {
                a.t = stop;
                b.t = stop;
            }
            steps += 1;
        }
        worst = worst.max(excess(&a, &b));
    }
    Ok(OrderingReport {
        steps,
        samples: stops.len(),
        worst_excess: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_off_close_stops_merge() {
        let plan = SamplingPlan {
            sample_times: vec![90.0 * 0.0002, 0.02],
            snapshot_times: vec![0.02 * 9.0 / 10.0, 0.0],
            ..SamplingPlan::default()
        };
        let stops = stop_times(0.0, &StepControls::until(0.02), &plan);
        assert_eq!(stops.len(), 2, "{stops:?}");
    }
    use crate::model::make_grid;
    use approx::assert_relative_eq;

    fn line(m: f64, chi: f64) -> ModelParams {
        ModelParams::line(m, chi).unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        let g = make_grid(1, false, 1.0, 200).unwrap();
        let dx = g.dx();
        assert_relative_eq!(dx, 0.01, epsilon = 1e-15);
        let c = StepControls::until(1.0);
        let zero = State::new(&g, vec![0.0; 200], vec![0.0; 200], 0.0).unwrap();
        let dt = stable_dt(&zero, &line(2.0, 1.0), &g, &c).unwrap();
        assert_relative_eq!(dt, 0.2 * dx * dx, max_relative = 1e-12);
        let mut u = vec![0.0; 200];
        u[100] = 1.0;
        let s = State::new(&g, u.clone(), vec![0.0; 200], 0.0).unwrap();
        let dt1 = stable_dt(&s, &line(2.0, 0.0), &g, &c).unwrap();
        assert_relative_eq!(dt1, 1e-5, max_relative = 1e-12);
        u[100] = 2.0;
        let s = State::new(&g, u, vec![0.0; 200], 0.0).unwrap();
        let dt2 = stable_dt(&s, &line(2.0, 0.0), &g, &c).unwrap();
        assert_relative_eq!(dt2, dt1 / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn controls_validation() {
        assert!(StepControls::until(1.0).validate(0.0).is_ok());
        assert!(StepControls::until(0.0).validate(0.0).is_ok());
        assert!(StepControls::until(-1.0).validate(0.0).is_err());
        let c = StepControls {
            cfl_diffusion: 0.6,
            ..StepControls::default()
        };
        assert!(c.validate(0.0).is_err());
    }

    #[test]
    fn constant_u_is_steady_without_chemotaxis() {
        let g = make_grid(1, false, 1.0, 32).unwrap();
        let v: Vec<f64> = g.centers().iter().map(|x| 1.0 + x * x).collect();
        let s = State::new(&g, vec![0.4; 32], v, 0.0).unwrap();
        let p = line(2.0, 0.0);
        let dt = stable_dt(&s, &p, &g, &StepControls::default()).unwrap();
        let next = step(&s, &p, &g, dt).unwrap();
        assert!(next.u.iter().all(|x| *x == 0.4));
    }

    #[test]
    fn heat_equation_conserves_v() {
        for (dim, radial) in [(1, false), (2, true), (3, true)] {
            let g = make_grid(dim, radial, 1.0, 64).unwrap();
            let v: Vec<f64> = g.centers().iter().map(|x| (3.0 * x).cos() + 2.0).collect();
            let p = ModelParams::new(2.0, 1.0, 1.0, dim, radial).unwrap();
            let mut s = State::new(&g, vec![0.0; 64], v, 0.0).unwrap();
            let m0 = integrate(&s.v, &g).unwrap();
            for _ in 0..200 {
                let dt = stable_dt(&s, &p, &g, &StepControls::default()).unwrap();
                s = step(&s, &p, &g, dt).unwrap();
            }
            let m1 = integrate(&s.v, &g).unwrap();
            assert!(((m1 - m0) / m0).abs() < 1e-12, "N = {dim}");
        }
    }

    #[test]
    fn consumption_matches_discrete_sum() {
        let g = make_grid(1, false, 1.0, 40).unwrap();
        let u: Vec<f64> = g.centers().iter().map(|x| (0.5 - x * x).max(0.0)).collect();
        let v: Vec<f64> = g.centers().iter().map(|x| 1.0 + 0.2 * x).collect();
        let p = ModelParams::new(2.0, 0.5, 0.7, 1, false).unwrap();
        let s = State::new(&g, u.clone(), v.clone(), 0.0).unwrap();
        let dt = stable_dt(&s, &p, &g, &StepControls::default()).unwrap();
        let next = step(&s, &p, &g, dt).unwrap();
        let consumed: f64 = u.iter().zip(&v).zip(g.weights()).map(|((a, b), w)| a * b * w).sum();
        let before = integrate(&v, &g).unwrap();
        let after = integrate(&next.v, &g).unwrap();
        assert!(after < before);
        assert_relative_eq!(before - after, dt * 0.7 * consumed, max_relative = 1e-9);
    }

    #[test]
    fn rejects_oversized_step() {
        let g = make_grid(1, false, 1.0, 32).unwrap();
        let s = State::new(&g, vec![1.0; 32], vec![0.0; 32], 0.0).unwrap();
        let p = line(2.0, 0.0);
        let dt = stable_dt(&s, &p, &g, &StepControls::default()).unwrap();
        assert!(matches!(step(&s, &p, &g, 10.0 * dt), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn run_with_no_time_has_one_record() {
        let g = make_grid(1, false, 1.0, 16).unwrap();
        let s = State::new(&g, vec![0.1; 16], vec![0.0; 16], 0.0).unwrap();
        let tr = run(&s, &line(2.0, 0.0), &g, &StepControls::until(0.0), &SamplingPlan::default()).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.diagnostics.steps, 0);
    }

    #[test]
    fn run_lands_on_samples_and_conserves_mass() {
        let g = make_grid(1, false, 1.0, 64).unwrap();
        let u: Vec<f64> = g.centers().iter().map(|x| (0.25 - x * x).max(0.0)).collect();
        let v: Vec<f64> = g.centers().iter().map(|x| 1.0 - 0.5 * x * x).collect();
        let s = State::new(&g, u, v, 0.0).unwrap();
        let plan = SamplingPlan::uniform(0.0, 0.05, 5).with_front(0.0, 1e-4).snapshot_all();
        let tr = run(&s, &line(2.0, 1.0), &g, &StepControls::until(0.05), &plan).unwrap();
        assert_eq!(tr.records.len(), 6);
        for (k, r) in tr.records.iter().enumerate() {
            assert_eq!(r.t, 0.05 * k as f64 / 5.0);
            assert!(r.front_rho.is_some());
        }
        assert_eq!(tr.snapshots.len(), 5);
        assert!(tr.mass_drift() < 1e-13);
        assert_eq!(tr.diagnostics.support_jumps, 0);
        assert!(tr.diagnostics.min_u >= 0.0 && tr.diagnostics.min_v >= 0.0);
        assert!(tr.diagnostics.max_v_increase <= 0.0);
    }

    #[test]
    fn frozen_mode_keeps_v() {
        let g = make_grid(1, false, 1.0, 32).unwrap();
        let u: Vec<f64> = g.centers().iter().map(|x| (0.25 - x * x).max(0.0)).collect();
        let v: Vec<f64> = g.centers().iter().map(|x| 1.0 - 0.5 * x * x).collect();
        let s = State::new(&g, u, v.clone(), 0.0).unwrap();
        let plan = SamplingPlan::uniform(0.0, 0.01, 2).frozen();
        let tr = run(&s, &line(2.0, 1.0), &g, &StepControls::until(0.01), &plan).unwrap();
        assert_eq!(tr.final_state.v, v);
    }

    #[test]
    fn nested_bumps_stay_ordered() {
        let g = make_grid(1, false, 1.0, 64).unwrap();
        let lo: Vec<f64> = g.centers().iter().map(|x| (0.16 - x * x).max(0.0)).collect();
        let hi: Vec<f64> = g.centers().iter().map(|x| 1.5 * (0.25 - x * x).max(0.0)).collect();
        let v: Vec<f64> = g.centers().iter().map(|x| 4.0 - 3.0 * x * x).collect();
        let a = State::new(&g, lo, v.clone(), 0.0).unwrap();
        let b = State::new(&g, hi, v, 0.0).unwrap();
        let rep = ordering_run(&a, &b, &line(2.0, 1.0), &g, &StepControls::until(0.05), &[0.01, 0.02]).unwrap();
        assert!(rep.worst_excess <= 1e-10, "{}", rep.worst_excess);
        assert!(rep.steps > 10);
    }
}
