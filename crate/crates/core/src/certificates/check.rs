//! Direct re-evaluation of every inequality behind a certificate.
//!
//! Nothing here is shared with the search code: each margin is computed
//! from the stored profile and constants with unsimplified powers.

use serde::{Deserialize, Serialize};

use super::profile::{Certificate, CertificateKind, Margin, Role};
use crate::initial::BumpSpec;
use crate::model::ModelParams;

/// Relative tolerance for the defining equalities of a profile.
pub const EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub margins: Vec<Margin>,
    pub all_nonnegative: bool,
    pub worst: Option<Margin>,
}

impl MarginReport {
    fn from_margins(margins: Vec<Margin>) -> Self {
        let worst = margins
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .cloned();
        let all_nonnegative = margins.iter().all(|m| m.value >= 0.0);
        Self {
            margins,
            all_nonnegative,
            worst,
        }
    }
}

fn equality(name: &str, lhs: f64, rhs: f64) -> Margin {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Margin::new(name, EQUALITY_TOL * scale - (lhs - rhs).abs())
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

/// Recomputes the margins of `cert`; any NaN input yields a negative
/// (failing) margin.
pub fn check_inequalities(cert: &Certificate, params: &ModelParams, spec: &BumpSpec) -> MarginReport {
    let mut margins = match cert.kind {
        CertificateKind::Shrinking => shrinking(cert, params, spec),
        CertificateKind::FiniteSpeed => finite_speed(cert, params, spec),
        CertificateKind::ExactSpeed => exact_speed(cert, params, spec),
        CertificateKind::Expanding => expanding(cert, params),
    };
    for m in &mut margins {
        if m.value.is_nan() {
            m.value = f64::NEG_INFINITY;
        }
    }
    MarginReport::from_margins(margins)
}

fn initial_domination(cert: &Certificate, params: &ModelParams, spec: &BumpSpec) -> Margin {
    let p = &cert.profile;
    let d = 1.0 / (params.m - 1.0);
    let required = spec.k0 * 1f64.max(spec.r0.powf(2.0 * (spec.d0 - d)));
    Margin::new(
        "initial_domination",
        p.epsilon * p.tau.powf(p.sigma - d * p.beta) - required,
    )
}

fn exponent_is_canonical(cert: &Certificate, params: &ModelParams) -> Margin {
    equality("profile_exponent", cert.profile.d, 1.0 / (params.m - 1.0))
}

fn shrinking(cert: &Certificate, params: &ModelParams, spec: &BumpSpec) -> Vec<Margin> {
    let p = &cert.profile;
    let (m, chi, mu) = (params.m, params.chi, spec.mu);
    let n = params.dim as f64;
    let d = 1.0 / (m - 1.0);
    let c2 = cert.constants.c2;
    let (tau, sigma, beta, eps) = (p.tau, p.sigma, p.beta, p.epsilon);
    let e = eps.powf(m - 1.0);
    let q = (m - 1.0) * sigma - beta;
    let diffusion = 4.0 * m / ((m - 1.0) * (m - 1.0)) * e * (2.0 * tau).powf(q);
    let h_coeff = sigma + 2.0 * n * m / (m - 1.0) * e * tau.powf(q + 1.0) - 2.0 * c2 * chi * tau;
    let drift = beta / ((m - 1.0) * tau);
    let front = d * chi * mu + drift - diffusion;
    let inner = h_coeff * 5.0 / (9.0 * tau.powf(beta))
        + (drift - diffusion - 4.0 * d * chi * mu) * (2.0 * tau).powf(1.0 - beta) / 4.0;
    let beta_floor = -2.0 * (4.0f64 / 3.0).ln() / 2f64.ln();
    let t0 = cert.constants.t0;
    let mut out = vec![
        exponent_is_canonical(cert, params),
        equality("initial_support_radius", p.eta * p.eta * tau.powf(beta), spec.r0 * spec.r0),
        initial_domination(cert, params, spec),
        Margin::new("h_coefficient", h_coeff),
        Margin::new("front_coefficient", front),
        Margin::new("inner_ball_balance", inner),
        Margin::new("beta_above_floor", beta - beta_floor),
        Margin::new("beta_negative", -beta),
        Margin::new("sigma_positive", sigma),
        Margin::new("tau_positive", tau),
        Margin::new("window_within_tau", tau - t0),
        Margin::new("window_nonempty", t0),
        equality("window_matches_t0", cert.window.1, t0),
    ];
    if let Some(ts) = cert.constants.structure_time {
        out.push(Margin::new("window_within_structure_time", ts - t0));
    }
    out
}

fn finite_speed(cert: &Certificate, params: &ModelParams, spec: &BumpSpec) -> Vec<Margin> {
    let p = &cert.profile;
    let (m, chi) = (params.m, params.chi);
    let (c1, c2) = (cert.constants.c1, cert.constants.c2);
    let (tau, sigma, beta, eps, r0) = (p.tau, p.sigma, p.beta, p.epsilon, spec.r0);
    let e = eps.powf(m - 1.0);
    let q = (m - 1.0) * sigma - beta;
    let front = beta / (m - 1.0) / (2.0 * tau)
        - 4.0 * m / ((m - 1.0) * (m - 1.0)) * e * tau.powf(q) * 1f64.max(2f64.powf(q))
        - 4.0 * c1 * chi / ((m - 1.0) * r0);
    let inner = (sigma - 2.0 * c2 * chi * tau)
        * (3.0 * r0 / (4.0 * tau.powf(beta)))
        * tau.powf(beta - 1.0)
        * 1f64.min(2f64.powf(beta - 1.0))
        - c1 * chi / (m - 1.0);
    let r_env = opt(cert.constants.r_envelope);
    let t_env = opt(cert.constants.envelope_time);
    let t0 = cert.constants.t0;
    vec![
        exponent_is_canonical(cert, params),
        equality("initial_support_radius", p.eta * p.eta * tau.powf(beta), r0 * r0),
        initial_domination(cert, params, spec),
        equality("beta_matches_sigma", beta, (m - 1.0) * sigma),
        Margin::new("sigma_dominates_laplacian_bound", sigma - 2.0 * c2 * chi * tau),
        Margin::new("front_coefficient", front),
        Margin::new("inner_ball_balance", inner),
        Margin::new("envelope_larger_than_bump", r_env - r0),
        Margin::new(
            "envelope_window",
            r_env * r_env / (r0 * r0) - (1.0 + t_env / tau).powf(beta),
        ),
        Margin::new("window_within_tau", tau - t0),
        Margin::new("window_within_envelope_time", t_env - t0),
        Margin::new("window_nonempty", t0),
        Margin::new(
            "support_within_envelope",
            r_env - p.eta * (tau + t0).powf(beta / 2.0),
        ),
    ]
}

fn exact_speed(cert: &Certificate, params: &ModelParams, spec: &BumpSpec) -> Vec<Margin> {
    let p = &cert.profile;
    let c = &cert.constants;
    let (m, chi, mu, k0, r0) = (params.m, params.chi, spec.mu, spec.k0, spec.r0);
    let n = params.dim as f64;
    let d = 1.0 / (m - 1.0);
    let (sigma, beta) = (p.sigma, p.beta);
    let big_t = cert.window.1;
    let s_end = 1.0 + big_t;
    let kappa = opt(c.structure_defect);
    let r_in = opt(c.r_inner);
    let r_out = opt(c.r_outer);
    let beta_center = opt(c.beta_center);
    let k = k0.powf(m - 1.0);
    let q = (m - 1.0) * sigma - beta;
    let s_hi = 1f64.max(s_end.powf(q));
    let s_lo = 1f64.min(s_end.powf(q));
    let geo_hi = 1f64.max(s_end.powf(-beta));
    let h_min = r0 * r0 - r_in * r_in * geo_hi;
    let spread = 2.0 * n * m / (m - 1.0) * k;
    let focus = 4.0 * m / (m - 1.0) * k;
    let mut out = vec![
        exponent_is_canonical(cert, params),
        equality("initial_amplitude", p.epsilon, k0),
        equality("initial_shift", p.tau, 1.0),
        equality("initial_support_radius", p.eta, r0),
        Margin::new("window_nonempty", big_t),
        Margin::new("inner_radius_positive", r_in),
        Margin::new("inner_ball_h_positive", h_min),
    ];
    let radius_lo = r0 * s_end.powf(beta.min(0.0) / 2.0);
    let radius_hi = r0 * s_end.powf(beta.max(0.0) / 2.0);
    out.push(Margin::new("support_above_inner_radius", radius_lo - r_in));
    out.push(Margin::new("support_below_outer_radius", r_out - radius_hi));
    match cert.role {
        Role::Upper => {
            let h_coeff = sigma / s_end - c.c2 * chi;
            let front = beta.min(beta / s_end) - focus * s_hi + 2.0 * chi * mu - 2.0 * chi * kappa;
            let inner = h_min * h_coeff
                - geo_hi
                    * (r_in * r_in * ((-beta).max(0.0) / (m - 1.0) + focus / (m - 1.0) * s_hi)
                        + 2.0 * d * chi * c.c1 * r_in);
            out.push(Margin::new("beta_above_center", beta - beta_center));
            out.push(Margin::new("h_coefficient", h_coeff));
            out.push(Margin::new("front_coefficient", front));
            out.push(Margin::new("inner_ball_balance", inner));
        }
        Role::Lower => {
            let h_coeff = sigma / s_end + spread * s_hi + c.c2 * chi;
            let front = beta.max(beta / s_end) - focus * s_lo + 2.0 * chi * mu + 2.0 * chi * kappa;
            let inner = h_min * h_coeff
                + geo_hi * (r_in * r_in * beta.max(0.0) / (m - 1.0) + 2.0 * d * chi * c.c1 * r_in);
            out.push(Margin::new("beta_below_center", beta_center - beta));
            out.push(Margin::new("h_coefficient", -h_coeff));
            out.push(Margin::new("front_coefficient", -front));
            out.push(Margin::new("inner_ball_balance", -inner));
        }
    }
    out
}

fn expanding(cert: &Certificate, params: &ModelParams) -> Vec<Margin> {
    let p = &cert.profile;
    let c = &cert.constants;
    let (m, chi) = (params.m, params.chi);
    let n = params.dim as f64;
    let d = 1.0 / (m - 1.0);
    let (eps, sigma, beta, eta) = (p.epsilon, p.sigma, p.beta, p.eta);
    let eps1 = opt(c.eps1);
    let delta = opt(c.delta);
    let r_core = opt(c.r_core);
    let r_domain = opt(c.r_domain);
    let t_hat = opt(c.decay_time);
    let span = cert.window.1 - cert.window.0 + 1.0;
    let e = eps.powf(m - 1.0);
    // With χ = 0 the drift terms vanish whatever δ is.
    let drift = if chi == 0.0 { 0.0 } else { delta * chi };
    let mut out = vec![
        exponent_is_canonical(cert, params),
        Margin::new("core_profile_below_eps1", eps1 - eps * eta.powf(2.0 * d)),
        Margin::new("spreading_below_decay", -sigma / 4.0 - 2.0 * n * m / (m - 1.0) * e),
        Margin::new("beta_below_spreading", 2.0 * m / (m - 1.0) * e - beta),
        Margin::new("drift_below_decay", -sigma / 4.0 - drift * span),
        Margin::new("drift_below_spreading", 2.0 * m / (m - 1.0) * e * r_core - 4.0 * drift * span),
        Margin::new(
            "inner_drift_below_decay",
            -sigma * eta * eta / 4.0 - drift * span.powf(1.0 - beta) * r_core / (m - 1.0),
        ),
        Margin::new("support_covers_domain", span.powf(beta / 2.0) - 2.0 * r_domain / r_core),
        Margin::new("eta_within_core", r_core - eta),
        equality("sigma_matches_beta", sigma, -(1.0 - beta) / (m - 1.0)),
        Margin::new("beta_in_unit_interval", beta.min(1.0 - beta)),
        equality("tau_matches_decay_time", p.tau, 1.0 - t_hat),
        Margin::new("domain_contains_core", r_domain - r_core),
        Margin::new("window_nonempty", cert.window.1 - cert.window.0),
    ];
    let t0 = c.t0;
    out.push(Margin::new("t0_after_decay_time", t0 - cert.window.0));
    out.push(Margin::new("t0_before_window_end", cert.window.1 - t0));
    if let Some(b) = c.decay_bound {
        out.push(Margin::new("decay_bounds_below_delta", delta - b));
    }
    out
}
