//! Self-similar comparison profiles and the certificate record.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pow_fast, Grid};

/// `g(x,t) = ε(τ+t)^σ [(η² − |x−x₀|²/(τ+t)^β)₊]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarProfile {
    pub epsilon: f64,
    pub tau: f64,
    pub sigma: f64,
    pub beta: f64,
    pub eta: f64,
    pub d: f64,
    pub x0: f64,
}

impl SelfSimilarProfile {
    fn shifted(&self, t: f64) -> Result<f64> {
        let s = self.tau + t;
        if !(s > 0.0) {
            return Err(Error::ProfileTime(s));
        }
        Ok(s)
    }

    /// Value at distance `r = |x − x₀|`.
    pub fn eval_at_distance(&self, r: f64, t: f64) -> Result<f64> {
        let s = self.shifted(t)?;
        let h = self.eta * self.eta - r * r / s.powf(self.beta);
        if h <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.epsilon * s.powf(self.sigma) * pow_fast(h, self.d))
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        self.eval_at_distance((x - self.x0).abs(), t)
    }

    /// Samples `g(·, t)` at the cell centers.
    pub fn eval_on_grid(&self, grid: &Grid, t: f64) -> Result<Vec<f64>> {
        (0..grid.n_cells())
            .map(|i| self.eval_at_distance(grid.distance(i, self.x0), t))
            .collect()
    }

    /// Support radius `η(τ+t)^{β/2}`.
    pub fn support_radius(&self, t: f64) -> Result<f64> {
        Ok(self.eta * self.shifted(t)?.powf(self.beta / 2.0))
    }

    /// Peak value `ε(τ+t)^σ η^{2d}`.
    pub fn peak(&self, t: f64) -> Result<f64> {
        Ok(self.epsilon * self.shifted(t)?.powf(self.sigma) * pow_fast(self.eta * self.eta, self.d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Shrinking,
    FiniteSpeed,
    ExactSpeed,
    Expanding,
}

/// Slack of one inequality; nonnegative means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub name: String,
    pub value: f64,
}

impl Margin {
    pub fn new(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
        }
    }
}

/// Measured bounds and derived constants of a certificate. Fields that do
/// not apply to a kind are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateConstants {
    /// Bound on `‖∇v‖_∞` over the relevant window.
    pub c1: f64,
    /// Bound on `‖Δv‖_∞` over the relevant window.
    pub c2: f64,
    pub t0: f64,
    /// Time over which the aggregating structure of `v` persists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_time: Option<f64>,
    /// Time after which the measured `C1(t)`, `C2(t)` stay below `δ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_time: Option<f64>,
    /// Time for which the support stays inside the envelope ball.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_envelope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_core: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_domain: Option<f64>,
    /// Largest measured `C1(t)`, `C2(t)` after the decay time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_bound: Option<f64>,
    /// `sup |x·∇v/|x|² + μ|` over the structure annulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_defect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// The unperturbed exponent of the exact-speed pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_center: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub role: Role,
    pub profile: SelfSimilarProfile,
    pub window: (f64, f64),
    pub constants: CertificateConstants,
    pub margins: Vec<Margin>,
}

impl Certificate {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.value).fold(f64::INFINITY, f64::min)
    }

    pub fn margin(&self, name: &str) -> Option<f64> {
        self.margins.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> SelfSimilarProfile {
        SelfSimilarProfile {
            epsilon: 1.0,
            tau: 1.0,
            sigma: 0.0,
            beta: 0.0,
            eta: 1.0,
            d: 1.0,
            x0: 0.0,
        }
    }

    #[test]
    fn stationary_profile() {
        let p = unit();
        for t in [0.0, 1.0, 7.5] {
            assert_relative_eq!(p.eval(0.5, t).unwrap(), 0.75, epsilon = 1e-15);
            assert_eq!(p.eval(1.5, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn shrinking_radius_and_peak() {
        let p = SelfSimilarProfile {
            beta: -0.3,
            sigma: 2.0,
            epsilon: 0.7,
            eta: 1.3,
            d: 2.0,
            ..unit()
        };
        let mut last = f64::INFINITY;
        for k in 0..10 {
            let r = p.support_radius(k as f64 * 0.1).unwrap();
            assert!(r < last);
            last = r;
        }
        let t = 0.4;
        assert_relative_eq!(
            p.eval(0.0, t).unwrap(),
            0.7 * 1.4f64.powf(2.0) * 1.3f64.powi(4),
            max_relative = 1e-14
        );
        assert_relative_eq!(p.peak(t).unwrap(), p.eval(0.0, t).unwrap(), max_relative = 1e-15);
    }

    #[test]
    fn rejects_nonpositive_shift() {
        let p = SelfSimilarProfile { tau: 0.5, ..unit() };
        assert_eq!(p.eval(0.0, -0.5), Err(Error::ProfileTime(0.0)));
    }
}
