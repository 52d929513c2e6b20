//! Source-type self-similar solution of `u_t = Δu^m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattParams {
    pub m: f64,
    pub n: usize,
    /// Similarity exponent `1/(m − 1 + 2/N)`.
    pub k: f64,
}

impl BarenblattParams {
    pub fn new(m: f64, n: usize) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::InvalidParams(format!("Barenblatt needs m > 1, got {m}")));
        }
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidParams(format!("dimension must be 1..=3, got {n}")));
        }
        Ok(Self {
            m,
            n,
            k: 1.0 / (m - 1.0 + 2.0 / n as f64),
        })
    }

    /// `B(x, t)` at distance `r = |x|`.
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let (m, n, k) = (self.m, self.n as f64, self.k);
        let s = 1.0 + t;
        let bracket = 1.0 - k * (m - 1.0) / (2.0 * m * n) * r * r / s.powf(2.0 * k / n);
        if bracket <= 0.0 {
            return 0.0;
        }
        s.powf(-k) * bracket.powf(1.0 / (m - 1.0))
    }

    /// Radius of the support, `sqrt(2mN/(k(m−1))) (1+t)^{k/N}`.
    pub fn front_radius(&self, t: f64) -> f64 {
        let (m, n, k) = (self.m, self.n as f64, self.k);
        (2.0 * m * n / (k * (m - 1.0))).sqrt() * (1.0 + t).powf(k / n)
    }

    /// Front velocity at `t = 0`.
    pub fn front_speed_at_zero(&self) -> f64 {
        self.front_radius(0.0) * self.k / self.n as f64
    }
}

pub fn barenblatt_eval(x: f64, t: f64, bp: &BarenblattParams) -> f64 {
    bp.eval(x.abs(), t)
}

pub fn barenblatt_front_radius(t: f64, bp: &BarenblattParams) -> f64 {
    bp.front_radius(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn values() {
        for (m, n) in [(2.0, 1), (3.0, 2), (1.5, 3)] {
            let bp = BarenblattParams::new(m, n).unwrap();
            assert_eq!(barenblatt_eval(0.0, 0.0, &bp), 1.0);
            assert!(bp.k > 0.0 && bp.k < 1.0 / (m - 1.0));
            let r = bp.front_radius(0.7);
            assert_eq!(bp.eval(r * 1.000001, 0.7), 0.0);
        }
        let bp = BarenblattParams::new(2.0, 1).unwrap();
        assert_relative_eq!(bp.k, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(barenblatt_eval(-1.0, 0.0, &bp), 11.0 / 12.0, epsilon = 1e-15);
        assert_relative_eq!(barenblatt_front_radius(0.0, &bp), 12f64.sqrt(), epsilon = 1e-14);
        let bp3 = BarenblattParams::new(3.0, 1).unwrap();
        assert_relative_eq!(bp3.front_radius(0.0), 12f64.sqrt(), epsilon = 1e-14);
        let t = 2.5;
        assert_relative_eq!(
            bp.front_radius(t) / bp.front_radius(0.0),
            (1.0 + t).powf(bp.k),
            epsilon = 1e-14
        );
        assert!(BarenblattParams::new(1.0, 1).is_err());
        assert!(BarenblattParams::new(2.0, 4).is_err());
    }

    #[test]
    fn front_speed_matches_difference_quotient() {
        let bp = BarenblattParams::new(2.0, 2).unwrap();
        let h = 1e-6;
        let fd = (bp.front_radius(h) - bp.front_radius(0.0)) / h;
        assert!((fd - bp.front_speed_at_zero()).abs() < 1e-5);
    }

    /// Centered residual of `B_t − r^{1−N}(r^{N−1}(B^m)_r)_r` in the bulk.
    fn residual(bp: &BarenblattParams, h: f64, dt: f64) -> f64 {
        let t: f64 = 0.5;
        let n = bp.n as f64;
        let rf = bp.front_radius(t);
        let mut worst: f64 = 0.0;
        let mut r = 0.2;
        while r < rf - 5.0 * h {
            let bt = (bp.eval(r, t + dt) - bp.eval(r, t - dt)) / (2.0 * dt);
            let p = |s: f64| bp.eval(s, t).powf(bp.m);
            let flux = |s: f64| s.powf(n - 1.0) * (p(s + h / 2.0) - p(s - h / 2.0)) / h;
            let lap = (flux(r + h / 2.0) - flux(r - h / 2.0)) / (h * r.powf(n - 1.0));
            worst = worst.max((bt - lap).abs());
            r += 0.05;
        }
        worst
    }

    #[test]
    fn solves_pme_in_bulk() {
        for n in 1..=3 {
            let bp = BarenblattParams::new(2.0, n).unwrap();
            let coarse = residual(&bp, 1e-2, 1e-3);
            let fine = residual(&bp, 5e-3, 5e-4);
            assert!(coarse < 1e-4, "N = {n}: residual {coarse}");
            assert!(fine < coarse / 3.0 || fine < 1e-9, "N = {n}: {fine} vs {coarse}");
        }
    }
}
