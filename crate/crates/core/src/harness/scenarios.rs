//! Scenario drivers: build initial data, run the solver, analyse the trace
//! and assemble the report.

use super::config::{AttractantInit, ScenarioConfig, ScenarioKind};
use super::report::{CertificateRecord, Check, Report};
use crate::analysis::{
    fit_exponential, holder_quotient, initial_speed_with, predicted_speed, BarenblattParams,
};
use crate::certificates::{
    anchor_expanding, decay_time, expanding_certificate, exact_speed_profiles, finite_speed_certificate,
    measured_bounds, min_u_after, numeric_domination, shrinking_certificate, structure_defect, structure_time,
    Certificate, ExactSpeedBounds, ExactSpeedProfiles,
};
use crate::error::{Error, Result};
use crate::initial::{aggregating_v0, barenblatt_u0, bump_u0, constant_v0, hypothesis_shrinking, shrinking_threshold};
use crate::model::{grad_max, integrate, laplacian_max, Grid, ModelParams, State};
use crate::solver::{ordering_run, run, SamplingPlan, StepControls, Trace};

/// Relative mass drift allowed in every scenario.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A finished scenario: the report and, when the solver ran, the trace of
/// the main run on its grid.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub run: Option<(Trace, Grid)>,
}

/// Validates the configuration and runs its scenario. Configuration errors
/// are returned; numerical failures are recorded in the report.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Outcome> {
    config.validate()?;
    let mut report = Report::new(config);
    let mut slot = None;
    let result = match config.scenario {
        ScenarioKind::PmeValidate => pme_validate(config, &mut report, &mut slot),
        ScenarioKind::ExactSpeed => exact_speed(config, &mut report, &mut slot),
        ScenarioKind::Shrinking => shrinking(config, &mut report, &mut slot),
        ScenarioKind::FiniteSpeed => finite_speed(config, &mut report, &mut slot),
        ScenarioKind::Expanding | ScenarioKind::Decay => long_run(config, &mut report, &mut slot),
        ScenarioKind::Ordering => ordering(config, &mut report, &mut slot),
    };
    if let Err(e) = result {
        report.fail_with(&e);
    }
    report.finalize();
    Ok(Outcome { report, run: slot })
}

type Slot = Option<(Trace, Grid)>;

/// `u₀` from the bump and `v₀` from the attractant choice.
pub fn initial_state(config: &ScenarioConfig, grid: &Grid) -> Result<State> {
    let u = bump_u0(grid, &config.bump, &config.model)?;
    let v = initial_attractant(config, grid)?;
    State::new(grid, u, v, 0.0)
}

fn initial_attractant(config: &ScenarioConfig, grid: &Grid) -> Result<Vec<f64>> {
    match config.attractant {
        AttractantInit::Aggregating => aggregating_v0(grid, &config.bump),
        AttractantInit::Constant { value } => constant_v0(grid, value),
        AttractantInit::Zero => constant_v0(grid, 0.0),
    }
}

/// Samples and snapshots requested by the configuration on `[0, t_end]`.
pub fn sampling_plan(config: &ScenarioConfig, t_end: f64) -> SamplingPlan {
    let mut plan = SamplingPlan::uniform(0.0, t_end, config.sampling.samples);
    let k = config.sampling.snapshots;
    let mut snaps: Vec<f64> = if k == 0 {
        Vec::new()
    } else {
        (0..=k).map(|i| t_end * i as f64 / k as f64).collect()
    };
    if config.sampling.snapshot_every_sample {
        snaps.push(0.0);
        snaps.extend(plan.sample_times.iter().copied());
    }
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    plan.snapshot_times = snaps;
    plan
}

fn common_checks(report: &mut Report, trace: &Trace) {
    let d = &trace.diagnostics;
    report.metric("steps", d.steps as f64);
    report.metric("mass_drift", trace.mass_drift());
    report.metric("min_u", d.min_u);
    report.metric("min_v", d.min_v);
    report.metric("max_v_increase", d.max_v_increase);
    report.metric("support_jumps", d.support_jumps as f64);
    report.metric("min_dt", d.min_dt);
    report.metric("max_dt", d.max_dt);
    report.check(Check::at_most("mass_conserved", trace.mass_drift(), MASS_TOLERANCE));
    report.check(Check::at_least("u_nonnegative", d.min_u, 0.0));
    report.check(Check::at_least("v_nonnegative", d.min_v, 0.0));
    report.check(Check::at_most("max_v_nonincreasing", d.max_v_increase, 0.0));
    report.check(Check::at_most("front_advances_one_cell_per_step", d.support_jumps as f64, 0.0));
}

fn holder_metric(report: &mut Report, params: &ModelParams, trace: &Trace, grid: &Grid) -> Result<()> {
    if params.dim >= 2 {
        let q = holder_quotient(&trace.final_state.u, grid, 1.0 / (2.0 * params.m))?;
        report.metric("holder_quotient_final", q);
    }
    Ok(())
}

fn record_certificate(report: &mut Report, label: &str, cert: &Certificate) {
    report.check(Check::at_least(
        &format!("{label}_margins_nonnegative"),
        cert.min_margin(),
        0.0,
    ));
    report.certificates.push(CertificateRecord {
        label: label.into(),
        certificate: cert.clone(),
        domination: None,
    });
}

fn record_domination(report: &mut Report, label: &str, trace: &Trace, grid: &Grid, cert: &Certificate) -> Result<()> {
    let dom = numeric_domination(trace, cert, grid)?;
    report.metric(&format!("{label}_worst_violation"), dom.worst_violation);
    report.metric(&format!("{label}_worst_excess_over_tol"), dom.worst_excess_over_tol);
    report.check(Check::at_most(
        &format!("{label}_domination"),
        dom.worst_excess_over_tol,
        0.0,
    ));
    if let Some(rec) = report.certificates.iter_mut().rev().find(|r| r.label == label) {
        rec.domination = Some(dom);
    }
    Ok(())
}

fn pme_validate(config: &ScenarioConfig, report: &mut Report, slot: &mut Slot) -> Result<()> {
    let params = config.model;
    let t_end = config.controls.t_end;
    let t_final = config.pme.t_offset + t_end;
    let bp = BarenblattParams::new(params.m, params.dim)?;
    let mut ns = config.pme.resolutions.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut linf_errors = Vec::new();
    let mut l1_errors = Vec::new();
    for &n in &ns {
        let grid = crate::model::make_grid(params.dim, params.radial, config.grid.half_length, n)?;
        let u0 = barenblatt_u0(&grid, &params, config.pme.t_offset)?;
        let state = State::new(&grid, u0, vec![0.0; n], 0.0)?;
        let plan = sampling_plan(config, t_end).with_front(0.0, config.sampling.front_threshold);
        let trace = run(&state, &params, &grid, &config.controls, &plan)?;
        let x0 = 0.0;
        let exact: Vec<f64> = (0..n).map(|i| bp.eval(grid.distance(i, x0), t_final)).collect();
        let diff: Vec<f64> = trace.final_state.u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect();
        let linf = diff.iter().copied().fold(0.0f64, f64::max);
        let l1 = integrate(&diff, &grid)?;
        report.metric(&format!("linf_error_{n}"), linf);
        report.metric(&format!("l1_error_{n}"), l1);
        linf_errors.push(linf);
        l1_errors.push(l1);
        if n == *ns.last().unwrap_or(&n) {
            if let Some(rho) = trace.records.last().and_then(|r| r.front_rho) {
                report.metric("front_final", rho);
                report.metric("front_exact", bp.front_radius(t_final));
            }
            common_checks(report, &trace);
            holder_metric(report, &params, &trace, &grid)?;
            *slot = Some((trace, grid));
        }
    }
    for k in 1..ns.len() {
        let order = (l1_errors[k - 1] / l1_errors[k]).ln() / (ns[k] as f64 / ns[k - 1] as f64).ln();
        report.metric(&format!("l1_order_{}_{}", ns[k - 1], ns[k]), order);
    }
    let order = convergence_order(&ns, &l1_errors);
    report.metric("l1_order", order);
    let finest = *linf_errors.last().unwrap_or(&f64::INFINITY);
    report.check(Check::at_most("linf_error_finest", finest, config.pme.max_linf_error));
    report.check(Check::at_least("l1_order", order, config.pme.min_order));
    Ok(())
}

/// Least-squares slope of `−ln e` against `ln n`.
pub fn convergence_order(ns: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn exact_speed(config: &ScenarioConfig, report: &mut Report, slot: &mut Slot) -> Result<()> {
    let (params, spec) = (config.model, config.bump);
    let grid = config.make_grid()?;
    let state = initial_state(config, &grid)?;
    let t_end = config.controls.t_end;
    let plan = sampling_plan(config, t_end).with_pressure_front(spec.x0, config.sampling.pressure_band);
    let trace = run(&state, &params, &grid, &config.controls, &plan)?;
    let (trace, grid) = &*slot.insert((trace, grid));
    common_checks(report, trace);
    let front = trace.front_trace(0.0)?;
    let horizon = config.fit_horizon();
    let fit = initial_speed_with(&front, horizon, config.analysis.speed_windows)?;
    let predicted = predicted_speed(&params, &spec)?;
    report.metric("predicted_speed", predicted);
    report.metric("measured_speed", fit.speed);
    report.metric("measured_speed_stderr", fit.stderr);
    report.metric("speed_samples", fit.n_samples as f64);
    let tol = config.analysis.speed_abs_tol.max(config.analysis.speed_rel_tol * predicted.abs());
    report.check(Check::at_most("speed_matches_prediction", (fit.speed - predicted).abs(), tol));
    let abs = config.analysis.speed_abs_tol;
    if predicted > abs {
        report.check(Check::flag(
            "front_strictly_increasing",
            front.strictly_monotone(horizon, 1.0),
            "front radius over the fit horizon",
        ));
    } else if predicted < -abs {
        report.check(Check::flag(
            "front_strictly_decreasing",
            front.strictly_monotone(horizon, -1.0),
            "front radius over the fit horizon",
        ));
    }

    let (pair, cert_trace, bounds) = exact_speed_certificate_run(config, &state, &grid)?;
    report.metric("c1", bounds.c1);
    report.metric("c2", bounds.c2);
    report.metric("structure_defect", bounds.structure_defect);
    report.metric("certificate_horizon", bounds.t_max);
    report.metric("beta", pair.beta);
    report.metric("speed_interval_low", pair.speed_interval.0);
    report.metric("speed_interval_high", pair.speed_interval.1);
    report.check(Check::flag(
        "speed_interval_brackets_prediction",
        pair.speed_interval.0 <= predicted && predicted <= pair.speed_interval.1,
        format!("[{}, {}] contains {predicted}", pair.speed_interval.0, pair.speed_interval.1),
    ));
    record_certificate(report, "exact_upper", &pair.upper);
    record_domination(report, "exact_upper", &cert_trace, grid, &pair.upper)?;
    record_certificate(report, "exact_lower", &pair.lower);
    record_domination(report, "exact_lower", &cert_trace, grid, &pair.lower)?;
    holder_metric(report, &params, &trace, &grid)?;
    Ok(())
}

/// Snapshots per certificate run of the exact-speed pair.
const EXACT_CERT_SNAPSHOTS: usize = 40;
const EXACT_CERT_HALVINGS: usize = 40;

/// Short runs on `[0, t_max]` with dense snapshots, halving `t_max` until
/// the bounds measured on the run admit the profile pair.
fn exact_speed_certificate_run(
    config: &ScenarioConfig,
    state: &State,
    grid: &Grid,
) -> Result<(ExactSpeedProfiles, Trace, ExactSpeedBounds)> {
    let (params, spec) = (config.model, config.bump);
    let (r_inner, r_outer) = (spec.r0 - spec.delta, spec.r0 + spec.delta);
    let mut t_max = config.controls.t_end;
    let mut last_err = None;
    for _ in 0..EXACT_CERT_HALVINGS {
        let plan = SamplingPlan::uniform(0.0, t_max, EXACT_CERT_SNAPSHOTS).snapshot_all();
        let mut plan = plan;
        plan.snapshot_times.insert(0, 0.0);
        let trace = run(state, &params, grid, &controls_until(config, t_max), &plan)?;
        let (c1, c2) = measured_bounds(&trace.records, 0.0, t_max)?;
        let defect = structure_defect(&trace.snapshots, grid, spec.x0, spec.mu, r_inner, r_outer, t_max)?;
        let bounds = ExactSpeedBounds {
            c1,
            c2,
            structure_defect: defect,
            r_inner,
            r_outer,
            t_max,
        };
        match exact_speed_profiles(&params, &spec, config.certificate.gap, &bounds) {
            Ok(pair) => return Ok((pair, trace, bounds)),
            Err(e @ Error::Infeasible { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        t_max /= 2.0;
    }
    Err(last_err.unwrap_or(Error::TooFewSamples { needed: 1, got: 0 }))
}

fn shrinking(config: &ScenarioConfig, report: &mut Report, slot: &mut Slot) -> Result<()> {
    let (params, spec) = (config.model, config.bump);
    let (ok, margin) = hypothesis_shrinking(&params, &spec);
    report.metric("hypothesis_margin", margin);
    report.metric("threshold", shrinking_threshold(&params, &spec));
    report.check(Check::at_least("hypothesis_margin_positive", margin, f64::MIN_POSITIVE));
    let grid = config.make_grid()?;
    let state = initial_state(config, &grid)?;
    let t_end = config.controls.t_end;
    let mut plan = sampling_plan(config, t_end).with_front(spec.x0, config.sampling.front_threshold);
    plan.snapshot_times = std::iter::once(0.0).chain(plan.sample_times.iter().copied()).collect();
    let trace = run(&state, &params, &grid, &config.controls, &plan)?;
    let (trace, grid) = &*slot.insert((trace, grid));
    common_checks(report, trace);
    let ts = structure_time(&trace.snapshots, &grid, spec.x0, spec.r0, spec.mu);
    report.check(Check::flag(
        "structure_holds_initially",
        ts.is_some(),
        "aggregating structure of v at t = 0",
    ));
    let Some(ts) = ts else {
        return Ok(());
    };
    report.metric("structure_time", ts);
    let (c1, c2) = measured_bounds(&trace.records, 0.0, t_end)?;
    report.metric("c1", c1);
    report.metric("c2", c2);
    let _ = ok;
    match shrinking_certificate(&params, &spec, c1, c2, Some(ts)) {
        Ok(cert) => {
            report.metric("t0", cert.constants.t0);
            report.metric("beta", cert.profile.beta);
            report.metric("sigma", cert.profile.sigma);
            report.metric("tau", cert.profile.tau);
            record_certificate(report, "shrinking", &cert);
            record_domination(report, "shrinking", &trace, &grid, &cert)?;
            let r0 = cert.profile.support_radius(0.0)?;
            let r1 = cert.profile.support_radius(cert.window.1)?;
            report.check(Check::flag(
                "support_radius_decreasing",
                r1 < r0,
                format!("{r0} -> {r1}"),
            ));
        }
        Err(e) => report.check(Check::flag("shrinking_certificate_found", false, e.to_string())),
    }
    if params.chi > 0.0 {
        let at_threshold = crate::initial::BumpSpec {
            mu: shrinking_threshold(&params, &spec) / params.chi,
            ..spec
        };
        let infeasible = matches!(
            shrinking_certificate(&params, &at_threshold, c1, c2, Some(ts)),
            Err(Error::Infeasible { .. })
        );
        report.check(Check::flag(
            "threshold_search_infeasible",
            infeasible,
            "search at chi*mu equal to the threshold",
        ));
    }
    Ok(())
}

fn finite_speed(config: &ScenarioConfig, report: &mut Report, slot: &mut Slot) -> Result<()> {
    let (params, spec) = (config.model, config.bump);
    let grid = config.make_grid()?;
    let state = initial_state(config, &grid)?;
    let t_end = config.controls.t_end;
    let mut plan = sampling_plan(config, t_end).with_front(spec.x0, config.sampling.front_threshold);
    plan.snapshot_times = std::iter::once(0.0).chain(plan.sample_times.iter().copied()).collect();
    let trace = run(&state, &params, &grid, &config.controls, &plan)?;
    let (trace, grid) = &*slot.insert((trace, grid));
    common_checks(report, trace);
    let (c1, c2) = measured_bounds(&trace.records, 0.0, t_end)?;
    report.metric("c1", c1);
    report.metric("c2", c2);
    let r_env = config.r_envelope();
    report.metric("r_envelope", r_env);
    let cert = finite_speed_certificate(&params, &spec, c1, c2, r_env)?;
    report.metric("t0", cert.constants.t0);
    report.metric("sigma", cert.profile.sigma);
    record_certificate(report, "finite_speed", &cert);
    record_domination(report, "finite_speed", &trace, &grid, &cert)?;
    let worst_front = trace
        .records
        .iter()
        .filter(|r| r.t <= cert.window.1)
        .filter_map(|r| r.front_rho)
        .fold(0.0f64, f64::max);
    report.metric("max_front_in_window", worst_front);
    report.check(Check::at_most("support_inside_envelope", worst_front, r_env));
    Ok(())
}

fn long_run(config: &ScenarioConfig, report: &mut Report, slot: &mut Slot) -> Result<()> {
    let params = config.model;
    let grid = config.make_grid()?;
    let state = initial_state(config, &grid)?;
    let t_end = config.controls.t_end;
    let plan = sampling_plan(config, t_end);
    let ubar = integrate(&state.u, &grid)? / grid.measure();
    let grad0 = grad_max(&state.v, &grid)?;
    report.metric("ubar", ubar);
    report.metric("grad_v_initial", grad0);
    report.metric("lap_v_initial", laplacian_max(&state.v, &grid)?);
    let trace = run(&state, &params, &grid, &config.controls, &plan)?;
    let (trace, grid) = &*slot.insert((trace, grid));
    common_checks(report, trace);
    let half = grid.half_length();
    let eps1 = ubar / 2.0;
    let base = expanding_certificate(&params, eps1, half, half, config.certificate.delta_request)?;
    let delta = base.constants.delta.unwrap_or(0.0);
    report.metric("eps1", eps1);
    report.metric("delta", delta);
    let first_positive = trace.records.iter().find(|r| r.min_u > 0.0).map(|r| r.t);
    if let Some(t) = first_positive {
        report.metric("first_positive_time", t);
    }
    let t_hat = decay_time(&trace.records, delta);
    let expanding_checks = config.scenario == ScenarioKind::Expanding;
    let Some(t_hat) = t_hat else {
        report.check(Check::flag(
            "decay_time_found",
            false,
            format!("grad v and lap v never stay below delta = {delta:e}"),
        ));
        return Ok(());
    };
    report.metric("decay_time", t_hat);
    let (c1, c2) = measured_bounds(&trace.records, t_hat, t_end)?;
    let cert = anchor_expanding(&base, &params, t_hat, 0.0, c1, c2)?;
    let t0 = cert.constants.t0;
    let eps0 = cert.constants.eps0.unwrap_or(f64::NAN);
    report.metric("t0", t0);
    report.metric("eps0", eps0);
    report.metric("window_end", cert.window.1);
    report.metric("beta", cert.profile.beta);
    report.metric("sigma", cert.profile.sigma);
    report.metric("l", cert.constants.l.unwrap_or(f64::NAN));
    record_certificate(report, "expanding", &cert);
    if expanding_checks {
        report.check(Check::at_least(
            "core_lower_bound_after_decay_time",
            min_u_after(&trace.records, t_hat).unwrap_or(f64::NEG_INFINITY),
            eps1,
        ));
        report.check(Check::at_least(
            "min_u_after_t0_above_eps0",
            min_u_after(&trace.records, t0).unwrap_or(f64::NEG_INFINITY),
            eps0,
        ));
        report.check(Check::at_least("window_covered", t_end, cert.window.1));
        if t_end >= cert.window.1 {
            record_domination(report, "expanding", &trace, &grid, &cert)?;
        }
    } else {
        report.certificates.last_mut().map(|r| r.label = "expanding_reference".into());
        report.checks.retain(|c| c.name != "expanding_margins_nonnegative");
    }

    let times = trace.times();
    let dev: Vec<f64> = trace
        .records
        .iter()
        .map(|r| (r.linf_u - ubar).max(ubar - r.min_u))
        .collect();
    let attract: Vec<f64> = trace.records.iter().map(|r| r.linf_v + r.gradmax_v).collect();
    let floor = config.analysis.noise_floor * f64::EPSILON;
    let fits = [
        ("u_deviation", &dev, floor * ubar),
        ("attractant", &attract, floor * attract[0]),
    ];
    for (name, series, cutoff) in fits {
        let end = decay_window_end(&times, series, t0, cutoff);
        let fit = fit_exponential(&times, series, (t0, end))?.with_ubar(ubar);
        report.metric(&format!("{name}_rate"), fit.rate);
        report.metric(&format!("{name}_prefactor"), fit.prefactor);
        report.metric(&format!("{name}_r_squared"), fit.r_squared);
        report.metric(&format!("{name}_window_end"), end);
        report.metric(&format!("{name}_samples"), fit.n_samples as f64);
        if !expanding_checks {
            report.check(Check::at_least(&format!("{name}_rate_positive"), fit.rate, f64::MIN_POSITIVE));
            report.check(Check::at_least(
                &format!("{name}_r_squared"),
                fit.r_squared,
                config.analysis.min_r_squared,
            ));
        }
    }
    let grad_final = trace.records.last().map_or(f64::NAN, |r| r.gradmax_v);
    report.metric("grad_v_final", grad_final);
    if !expanding_checks {
        report.check(Check::at_most(
            "grad_v_reduction",
            grad_final,
            config.analysis.gradient_reduction * grad0,
        ));
    }
    Ok(())
}

/// Last sample time before the first sample after `t0` that falls below
/// `cutoff`.
fn decay_window_end(times: &[f64], values: &[f64], t0: f64, cutoff: f64) -> f64 {
    let mut end = t0;
    for (&t, &y) in times.iter().zip(values) {
        if t < t0 {
            continue;
        }
        if y < cutoff {
            break;
        }
        end = t;
    }
    end
}

fn ordering(config: &ScenarioConfig, report: &mut Report, slot: &mut Slot) -> Result<()> {
    let (params, spec) = (config.model, config.bump);
    let grid = config.make_grid()?;
    let upper = initial_state(config, &grid)?;
    let lower_spec = crate::initial::BumpSpec {
        k0: spec.k0 * config.ordering.amplitude_scale,
        r0: spec.r0 * config.ordering.radius_scale,
        delta: spec.delta * config.ordering.radius_scale,
        ..spec
    };
    let lower_u = bump_u0(&grid, &lower_spec, &params)?;
    let lower = State::new(&grid, lower_u, upper.v.clone(), 0.0)?;
    let t_end = config.controls.t_end;
    let plan = sampling_plan(config, t_end);
    let rep = ordering_run(&lower, &upper, &params, &grid, &config.controls, &plan.sample_times)?;
    report.metric("ordering_worst_excess", rep.worst_excess);
    report.metric("ordering_steps", rep.steps as f64);
    report.check(Check::at_most("ordering_holds", rep.worst_excess, config.ordering.tolerance));
    let trace = run(&upper, &params, &grid, &config.controls, &plan.frozen())?;
    common_checks(report, &trace);
    *slot = Some((trace, grid));
    Ok(())
}

/// Certificates from the initial data alone, without running the solver.
/// `C1` and `C2` are taken from `v₀`.
pub fn certify(config: &ScenarioConfig) -> Result<Report> {
    config.validate()?;
    let mut report = Report::new(config);
    let (params, spec) = (config.model, config.bump);
    let result = (|| -> Result<()> {
        if config.scenario == ScenarioKind::PmeValidate {
            report.check(Check::flag("certificate_applicable", false, "pme-validate has no certificate"));
            return Ok(());
        }
        let grid = config.make_grid()?;
        let state = initial_state(config, &grid)?;
        let c1 = grad_max(&state.v, &grid)?;
        let c2 = laplacian_max(&state.v, &grid)?;
        report.metric("c1", c1);
        report.metric("c2", c2);
        let outcome = match config.scenario {
            ScenarioKind::Shrinking => shrinking_certificate(&params, &spec, c1, c2, None).map(|c| vec![("shrinking", c)]),
            ScenarioKind::FiniteSpeed | ScenarioKind::Ordering => {
                finite_speed_certificate(&params, &spec, c1, c2, config.r_envelope()).map(|c| vec![("finite_speed", c)])
            }
            ScenarioKind::ExactSpeed => {
                let snaps = [crate::solver::Snapshot {
                    t: 0.0,
                    u: state.u.clone(),
                    v: state.v.clone(),
                }];
                let (r_inner, r_outer) = (spec.r0 - spec.delta, spec.r0 + spec.delta);
                let defect = structure_defect(&snaps, &grid, spec.x0, spec.mu, r_inner, r_outer, 0.0)?;
                let bounds = ExactSpeedBounds {
                    c1,
                    c2,
                    structure_defect: defect,
                    r_inner,
                    r_outer,
                    t_max: config.controls.t_end,
                };
                exact_speed_profiles(&params, &spec, config.certificate.gap, &bounds).map(|p| {
                    report.metric("beta", p.beta);
                    report.metric("speed_interval_low", p.speed_interval.0);
                    report.metric("speed_interval_high", p.speed_interval.1);
                    vec![("exact_upper", p.upper), ("exact_lower", p.lower)]
                })
            }
            ScenarioKind::Expanding | ScenarioKind::Decay => {
                let ubar = integrate(&state.u, &grid)? / grid.measure();
                let half = grid.half_length();
                expanding_certificate(&params, ubar / 2.0, half, half, config.certificate.delta_request)
                    .map(|c| vec![("expanding", c)])
            }
            ScenarioKind::PmeValidate => unreachable!(),
        };
        match outcome {
            Ok(certs) => {
                for (label, cert) in certs {
                    record_certificate(&mut report, label, &cert);
                }
            }
            Err(e @ Error::Infeasible { .. }) => {
                report.check(Check::flag("certificate_found", false, e.to_string()));
            }
            Err(e) => return Err(e),
        }
        Ok(())
    })();
    if let Err(e) = result {
        report.fail_with(&e);
    }
    report.finalize();
    Ok(report)
}

/// Controls for `config` with `t_end` replaced.
pub fn controls_until(config: &ScenarioConfig, t_end: f64) -> StepControls {
    StepControls {
        t_end,
        ..config.controls
    }
}
