//! Parameter searches for the comparison profiles.
//!
//! The searches evaluate their own (algebraically simplified) forms of the
//! inequalities; every emitted certificate is then re-checked with
//! [`check_inequalities`] and carries those margins.

use serde::{Deserialize, Serialize};

use super::check::check_inequalities;
use super::profile::{Certificate, CertificateConstants, CertificateKind, Margin, Role, SelfSimilarProfile};
use crate::error::{Error, Result};
use crate::initial::BumpSpec;
use crate::model::ModelParams;

/// `K₀ max{1, R₀^{2(d₀−d)}}`.
pub fn effective_amplitude(params: &ModelParams, spec: &BumpSpec) -> f64 {
    spec.k0 * 1f64.max(spec.r0.powf(2.0 * (spec.d0 - params.d())))
}

/// Lower end of the admissible exponent range for shrinking profiles,
/// `−2 ln(4/3)/ln 2`.
pub fn shrinking_beta_floor() -> f64 {
    -2.0 * (4.0f64 / 3.0).ln() / std::f64::consts::LN_2
}

/// Tracks the most nearly feasible rejected candidate.
struct Closest {
    best: Option<(f64, String)>,
}

impl Closest {
    fn new() -> Self {
        Self { best: None }
    }

    fn offer(&mut self, margins: &[(&str, f64)]) {
        let (name, worst) = margins
            .iter()
            .map(|(n, v)| (*n, if v.is_nan() { f64::NEG_INFINITY } else { *v }))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or(("none", f64::NEG_INFINITY));
        if self.best.as_ref().is_none_or(|(w, _)| worst > *w) {
            self.best = Some((worst, name.to_string()));
        }
    }

    fn into_error(self) -> Error {
        let (margin, condition) = self.best.unwrap_or((f64::NEG_INFINITY, "none".into()));
        Error::Infeasible { condition, margin }
    }
}

fn all_ok(margins: &[(&str, f64)]) -> bool {
    margins.iter().all(|(_, v)| *v >= 0.0)
}

/// Smallest `ε ≥ guess` with `ε scale ≥ target`, stepping by ulps.
fn nudge_up(guess: f64, scale: f64, target: f64) -> Option<f64> {
    let mut eps = guess;
    for _ in 0..256 {
        if !eps.is_finite() {
            return None;
        }
        if eps * scale >= target {
            return Some(eps);
        }
        eps = eps.next_up();
    }
    None
}

fn finish(mut cert: Certificate, params: &ModelParams, spec: &BumpSpec) -> Option<Certificate> {
    let report = check_inequalities(&cert, params, spec);
    cert.margins = report.margins;
    report.all_nonnegative.then_some(cert)
}

/// Upper profile with shrinking support on `(0, t₀)`.
///
/// The search runs over `τ = 2^{-k}`, then `β` from the floor of the
/// admissible range towards zero by halving `|β|`, then `σ` upwards over a
/// geometric grid. `ε` is the smallest value satisfying the initial
/// domination. `structure_time`, when given, caps `t₀`.
pub fn shrinking_certificate(
    params: &ModelParams,
    spec: &BumpSpec,
    c1: f64,
    c2: f64,
    structure_time: Option<f64>,
) -> Result<Certificate> {
    params.validate()?;
    spec.validate(params)?;
    let (m, chi, mu) = (params.m, params.chi, spec.mu);
    let n = params.dim as f64;
    let d = params.d();
    let k = effective_amplitude(params, spec);
    let km = k.powf(m - 1.0);
    let floor = shrinking_beta_floor();
    let mut closest = Closest::new();
    for kt in 0..=60 {
        let tau = 0.5f64.powi(kt);
        for jb in 0..=40 {
            let beta = floor * 0.5f64.powi(jb);
            for is in 0..=320 {
                let sigma = 2f64.powf((is as f64 - 160.0) / 8.0);
                let q = (m - 1.0) * sigma - beta;
                // With equality in the initial domination, ε^{m−1} = K^{m−1} τ^{−q}.
                let diffusion = 4.0 * m / ((m - 1.0) * (m - 1.0)) * km * 2f64.powf(q);
                let i1 = sigma + 2.0 * n * m / (m - 1.0) * km * tau - 2.0 * c2 * chi * tau;
                let i2 = (d * chi * mu + beta / ((m - 1.0) * tau)) - diffusion;
                let i3 = i1 * 5.0 / 9.0 * tau.powf(-beta)
                    + (beta / ((m - 1.0) * tau) - diffusion - 4.0 * d * chi * mu) * 0.25 * (2.0 * tau).powf(1.0 - beta);
                let margins = [("h_coefficient", i1), ("front_coefficient", i2), ("inner_ball_balance", i3)];
                if !all_ok(&margins) {
                    closest.offer(&margins);
                    if i2 < 0.0 {
                        // Larger σ only increases the diffusion term.
                        break;
                    }
                    continue;
                }
                let scale = tau.powf(sigma - d * beta);
                let Some(epsilon) = nudge_up(k / scale, scale, k) else {
                    continue;
                };
                let eta = spec.r0 / tau.powf(beta / 2.0);
                let t0 = structure_time.map_or(tau, |ts| ts.min(tau));
                let cert = Certificate {
                    kind: CertificateKind::Shrinking,
                    role: Role::Upper,
                    profile: SelfSimilarProfile {
                        epsilon,
                        tau,
                        sigma,
                        beta,
                        eta,
                        d,
                        x0: spec.x0,
                    },
                    window: (0.0, t0),
                    constants: CertificateConstants {
                        c1,
                        c2,
                        t0,
                        structure_time,
                        ..CertificateConstants::default()
                    },
                    margins: Vec::new(),
                };
                if let Some(c) = finish(cert, params, spec) {
                    return Ok(c);
                }
            }
        }
    }
    Err(closest.into_error())
}

/// Upper profile with `τ = 1`, `η = R₀` and `β = (m−1)σ`; `σ` doubles from
/// one until both coefficient conditions hold. The window ends when the
/// support would leave `B_{R_envelope}(x₀)`, or at `τ`.
pub fn finite_speed_certificate(
    params: &ModelParams,
    spec: &BumpSpec,
    c1: f64,
    c2: f64,
    r_envelope: f64,
) -> Result<Certificate> {
    params.validate()?;
    spec.validate(params)?;
    if !(r_envelope > spec.r0) {
        return Err(Error::Hypothesis(format!(
            "envelope radius {r_envelope} must exceed R0 = {}",
            spec.r0
        )));
    }
    let (m, chi, r0) = (params.m, params.chi, spec.r0);
    let d = params.d();
    let tau = 1.0;
    let epsilon = effective_amplitude(params, spec);
    let em = epsilon.powf(m - 1.0);
    let mut closest = Closest::new();
    for ks in 0..=20 {
        let sigma = 2f64.powi(ks);
        let beta = (m - 1.0) * sigma;
        let f0 = sigma - 2.0 * c2 * chi * tau;
        let f1 = beta / (2.0 * (m - 1.0)) - 4.0 * m / ((m - 1.0) * (m - 1.0)) * em - 4.0 * c1 * chi / ((m - 1.0) * r0);
        let f2 = f0 * 0.75 * r0 * 1f64.min(2f64.powf(beta - 1.0)) - c1 * chi / (m - 1.0);
        let margins = [
            ("sigma_dominates_laplacian_bound", f0),
            ("front_coefficient", f1),
            ("inner_ball_balance", f2),
        ];
        if !all_ok(&margins) {
            closest.offer(&margins);
            continue;
        }
        let ratio = (r_envelope / r0) * (r_envelope / r0);
        let mut t_env = tau * (ratio.powf(1.0 / beta) - 1.0);
        for _ in 0..256 {
            if (1.0 + t_env / tau).powf(beta) <= ratio {
                break;
            }
            t_env = t_env.next_down();
        }
        let t0 = tau.min(t_env);
        let cert = Certificate {
            kind: CertificateKind::FiniteSpeed,
            role: Role::Upper,
            profile: SelfSimilarProfile {
                epsilon,
                tau,
                sigma,
                beta,
                eta: r0,
                d,
                x0: spec.x0,
            },
            window: (0.0, t0),
            constants: CertificateConstants {
                c1,
                c2,
                t0,
                envelope_time: Some(t_env),
                r_envelope: Some(r_envelope),
                ..CertificateConstants::default()
            },
            margins: Vec::new(),
        };
        if let Some(c) = finish(cert, params, spec) {
            return Ok(c);
        }
    }
    Err(closest.into_error())
}

/// Measured bounds on the attractant near the initial front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSpeedBounds {
    pub c1: f64,
    pub c2: f64,
    /// `sup |x·∇v/|x|² + μ|` over `r_inner ≤ |x − x₀| ≤ r_outer`.
    pub structure_defect: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Length of the time interval over which the bounds were measured.
    pub t_max: f64,
}

impl ExactSpeedBounds {
    /// Bounds of an attractant that keeps the exact quadratic structure on
    /// `B_{R₀+δ}` with no curvature; useful for algebraic checks.
    pub fn ideal(spec: &BumpSpec, t_max: f64) -> Self {
        Self {
            c1: 0.0,
            c2: 0.0,
            structure_defect: 0.0,
            r_inner: spec.r0 - spec.delta,
            r_outer: spec.r0 + spec.delta,
            t_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSpeedProfiles {
    pub upper: Certificate,
    pub lower: Certificate,
    /// `4m/(m−1) K₀^{m−1} − 2χμ`.
    pub beta: f64,
    /// `[R₀β₋/2, R₀β₊/2]`.
    pub speed_interval: (f64, f64),
}

/// `4m/(m−1) K₀^{m−1} − 2χμ`.
pub fn exact_speed_beta(params: &ModelParams, spec: &BumpSpec) -> f64 {
    let m = params.m;
    4.0 * m / (m - 1.0) * spec.k0.powf(m - 1.0) - 2.0 * params.chi * spec.mu
}

/// Builds the upper and lower profiles `g±` with `ε = K₀`, `τ = 1`,
/// `η = R₀` and `β± = β ± gap`. `σ₊` doubles upwards from one and `σ₋`
/// downwards from minus one; for each, the window length halves from
/// `bounds.t_max` until every condition holds, and the longest window wins.
pub fn exact_speed_profiles(
    params: &ModelParams,
    spec: &BumpSpec,
    gap: f64,
    bounds: &ExactSpeedBounds,
) -> Result<ExactSpeedProfiles> {
    params.validate()?;
    spec.validate(params)?;
    if (spec.d0 - params.d()).abs() > 1e-12 * params.d() {
        return Err(Error::Hypothesis(format!(
            "exact-speed profiles need d0 = 1/(m-1), got {}",
            spec.d0
        )));
    }
    if !(gap > 0.0) {
        return Err(Error::InvalidParams(format!("gap must be positive, got {gap}")));
    }
    let beta = exact_speed_beta(params, spec);
    let upper = exact_side(params, spec, beta, gap, bounds, Role::Upper)?;
    let lower = exact_side(params, spec, beta, gap, bounds, Role::Lower)?;
    Ok(ExactSpeedProfiles {
        speed_interval: (spec.r0 * lower.profile.beta / 2.0, spec.r0 * upper.profile.beta / 2.0),
        upper,
        lower,
        beta,
    })
}

fn exact_side(
    params: &ModelParams,
    spec: &BumpSpec,
    beta_center: f64,
    gap: f64,
    bounds: &ExactSpeedBounds,
    role: Role,
) -> Result<Certificate> {
    let (m, chi, mu, r0) = (params.m, params.chi, spec.mu, spec.r0);
    let n = params.dim as f64;
    let d = params.d();
    let km = spec.k0.powf(m - 1.0);
    let sign = if role == Role::Upper { 1.0 } else { -1.0 };
    let beta = beta_center + sign * gap;
    let (r_in, r_out) = (bounds.r_inner, bounds.r_outer);
    let mut closest = Closest::new();
    let mut best: Option<(f64, f64)> = None;
    for ks in 0..=20 {
        let sigma = sign * 2f64.powi(ks);
        for jt in 0..=60 {
            let big_t = bounds.t_max * 0.5f64.powi(jt);
            let s = 1.0 + big_t;
            let growth = s.powf((m - 1.0) * sigma - beta);
            let geo = s.powf(-beta).max(1.0);
            let h_min = r0 * r0 - r_in * r_in * geo;
            let focus = 4.0 * m / (m - 1.0) * km;
            let drift_lo = if beta < 0.0 { beta } else { beta / s };
            let drift_hi = if beta < 0.0 { beta / s } else { beta };
            let support = [
                ("support_above_inner_radius", r0 * s.powf(beta.min(0.0) / 2.0) - r_in),
                ("support_below_outer_radius", r_out - r0 * s.powf(beta.max(0.0) / 2.0)),
                ("inner_ball_h_positive", h_min),
            ];
            let conditions = if role == Role::Upper {
                let h = sigma / s - bounds.c2 * chi;
                let front = drift_lo + 2.0 * chi * (mu - bounds.structure_defect) - focus * growth.max(1.0);
                let inner = h_min * h
                    - geo * (r_in * r_in * ((-beta).max(0.0) + focus * growth.max(1.0)) / (m - 1.0)
                        + 2.0 * d * chi * bounds.c1 * r_in);
                [("h_coefficient", h), ("front_coefficient", front), ("inner_ball_balance", inner)]
            } else {
                let h = -(sigma / s + 2.0 * n * m / (m - 1.0) * km * growth.max(1.0) + bounds.c2 * chi);
                let front = -(drift_hi + 2.0 * chi * (mu + bounds.structure_defect) - focus * growth.min(1.0));
                let inner = h_min * h
                    - geo * (r_in * r_in * beta.max(0.0) / (m - 1.0) + 2.0 * d * chi * bounds.c1 * r_in);
                [("h_coefficient", h), ("front_coefficient", front), ("inner_ball_balance", inner)]
            };
            let all: Vec<(&str, f64)> = support.iter().chain(conditions.iter()).copied().collect();
            if all_ok(&all) {
                if best.is_none_or(|(t, _)| big_t > t) {
                    best = Some((big_t, sigma));
                }
                break;
            }
            closest.offer(&all);
        }
    }
    let (big_t, sigma) = best.ok_or_else(|| closest.into_error())?;
    let cert = Certificate {
        kind: CertificateKind::ExactSpeed,
        role,
        profile: SelfSimilarProfile {
            epsilon: spec.k0,
            tau: 1.0,
            sigma,
            beta,
            eta: r0,
            d,
            x0: spec.x0,
        },
        window: (0.0, big_t),
        constants: CertificateConstants {
            c1: bounds.c1,
            c2: bounds.c2,
            t0: big_t,
            structure_defect: Some(bounds.structure_defect),
            r_inner: Some(r_in),
            r_outer: Some(r_out),
            gap: Some(gap),
            beta_center: Some(beta_center),
            ..CertificateConstants::default()
        },
        margins: Vec::new(),
    };
    let report = check_inequalities(&cert, params, spec);
    if !report.all_nonnegative {
        let worst = report.worst.unwrap_or(Margin::new("none", f64::NEG_INFINITY));
        return Err(Error::Infeasible {
            condition: worst.name,
            margin: worst.value,
        });
    }
    Ok(Certificate {
        margins: report.margins,
        ..cert
    })
}

/// Lower profile that eventually covers the whole domain.
///
/// `β` starts at `1/(4N(m−1)+1)` (shaved by a relative `1e−9` so that the
/// spreading condition keeps positive slack) and is halved until
/// `ε η^{2d} ≤ ε₁`, with `ε` from `2m/(m−1) ε^{m−1} = β`. The window
/// length `L` and the drift budget `δ` follow (`δ` shaved by a relative
/// `1e−12`); `delta_request` caps `δ`.
/// The certificate is anchored at decay time zero; see
/// [`anchor_expanding`].
pub fn expanding_certificate(
    params: &ModelParams,
    eps1: f64,
    r0_core: f64,
    r_domain: f64,
    delta_request: Option<f64>,
) -> Result<Certificate> {
    params.validate()?;
    if !(eps1 > 0.0) {
        return Err(Error::Hypothesis(format!("eps1 must be positive, got {eps1}")));
    }
    if !(r0_core > 0.0 && r_domain >= r0_core) {
        return Err(Error::Hypothesis(format!(
            "need 0 < R0_core <= R_domain, got {r0_core} and {r_domain}"
        )));
    }
    let (m, chi) = (params.m, params.chi);
    let n = params.dim as f64;
    let d = params.d();
    let coef = 2.0 * m / (m - 1.0);
    let eta = r0_core;
    let mut beta = (1.0 - 1e-9) / (4.0 * n * (m - 1.0) + 1.0);
    let mut epsilon = 0.0;
    for _ in 0..200 {
        let guess = (beta / coef).powf(1.0 / (m - 1.0));
        let mut e = guess;
        while coef * e.powf(m - 1.0) < beta {
            e = e.next_up();
        }
        epsilon = e;
        if epsilon * eta.powf(2.0 * d) <= eps1 {
            break;
        }
        beta /= 2.0;
    }
    if !(epsilon * eta.powf(2.0 * d) <= eps1) {
        return Err(Error::Infeasible {
            condition: "core_profile_below_eps1".into(),
            margin: eps1 - epsilon * eta.powf(2.0 * d),
        });
    }
    let sigma = -(1.0 - beta) / (m - 1.0);
    let ratio = 2.0 * r_domain / eta;
    let mut l = (2.0 / beta * ratio.ln()).exp() - 1.0;
    for _ in 0..4096 {
        if (l + 1.0).powf(beta / 2.0) >= ratio {
            break;
        }
        l = l.next_up();
    }
    let recipe = if chi == 0.0 {
        f64::MAX
    } else {
        let a = -sigma / (4.0 * chi * (l + 1.0));
        let b = coef * epsilon.powf(m - 1.0) * eta / (4.0 * chi * (l + 1.0));
        let c = -sigma * eta * eta * (m - 1.0) / (4.0 * chi * (l + 1.0).powf(1.0 - beta) * eta);
        // Each bound makes one drift condition an equality; shave so
        // round-off keeps the slack nonnegative.
        a.min(b).min(c) * (1.0 - 1e-12)
    };
    let delta = delta_request.map_or(recipe, |r| r.min(recipe));
    let eps0 = epsilon * (l + 1.0).powf(sigma) * (eta * eta / 2.0).powf(d);
    let cert = Certificate {
        kind: CertificateKind::Expanding,
        role: Role::Lower,
        profile: SelfSimilarProfile {
            epsilon,
            tau: 1.0,
            sigma,
            beta,
            eta,
            d,
            x0: 0.0,
        },
        window: (0.0, l),
        constants: CertificateConstants {
            t0: expanding_t0(beta, r_domain, eta, 1.0),
            eps0: Some(eps0),
            eps1: Some(eps1),
            l: Some(l),
            delta: Some(delta),
            r_core: Some(r0_core),
            r_domain: Some(r_domain),
            decay_time: Some(0.0),
            ..CertificateConstants::default()
        },
        margins: Vec::new(),
    };
    let dummy = BumpSpec {
        k0: 1.0,
        r0: r0_core,
        d0: d,
        x0: 0.0,
        mu: 0.0,
        delta: r0_core / 2.0,
        v_floor: None,
    };
    finish(cert, params, &dummy).ok_or_else(|| Error::Infeasible {
        condition: "expanding recipe".into(),
        margin: f64::NEG_INFINITY,
    })
}

/// First time after which `η² − R²/(τ+t)^β ≥ η²/2`.
fn expanding_t0(beta: f64, r_domain: f64, eta: f64, tau: f64) -> f64 {
    (2.0 * r_domain * r_domain / (eta * eta)).powf(1.0 / beta) - tau
}

/// Moves an expanding certificate to the decay time `t_hat`, centered at
/// `x0`, and records the largest measured `C1(t)`, `C2(t)` after it.
pub fn anchor_expanding(
    cert: &Certificate,
    params: &ModelParams,
    t_hat: f64,
    x0: f64,
    c1: f64,
    c2: f64,
) -> Result<Certificate> {
    if cert.kind != CertificateKind::Expanding {
        return Err(Error::InvalidParams("not an expanding certificate".into()));
    }
    let l = cert.constants.l.unwrap_or(0.0);
    let tau = 1.0 - t_hat;
    let profile = SelfSimilarProfile {
        tau,
        x0,
        ..cert.profile
    };
    let r_domain = cert.constants.r_domain.unwrap_or(f64::NAN);
    let anchored = Certificate {
        profile,
        window: (t_hat, t_hat + l),
        constants: CertificateConstants {
            c1,
            c2,
            t0: expanding_t0(profile.beta, r_domain, profile.eta, tau),
            decay_time: Some(t_hat),
            decay_bound: Some(c1.max(c2)),
            ..cert.constants.clone()
        },
        ..cert.clone()
    };
    let dummy = BumpSpec {
        k0: 1.0,
        r0: profile.eta,
        d0: profile.d,
        x0,
        mu: 0.0,
        delta: profile.eta / 2.0,
        v_floor: None,
    };
    let report = check_inequalities(&anchored, params, &dummy);
    Ok(Certificate {
        margins: report.margins,
        ..anchored
    })
}
