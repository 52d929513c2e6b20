//! Structured initial data: algebraic bumps for the cell density, an
//! aggregating quadratic attractant profile, and the hypothesis threshold
//! for support shrinking.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::analysis::barenblatt::BarenblattParams;
use crate::error::{Error, Result};
use crate::model::{pow_fast, Grid, ModelParams};

/// Parameters of `u₀ = K₀[(R₀² − |x − x₀|²)₊]^{d₀}` and of the attractant
/// profile `v₀ = v_floor − μ|x − x₀|²/2` around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub k0: f64,
    pub r0: f64,
    pub d0: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub mu: f64,
    /// Width of the aggregating annulus; also the width of the cosine blend.
    pub delta: f64,
    /// Additive constant of `v₀`; `None` selects [`BumpSpec::min_v_floor`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_floor: Option<f64>,
}

impl BumpSpec {
    /// Canonical bump with `d₀ = 1/(m−1)` centered at the origin.
    pub fn canonical(params: &ModelParams, k0: f64, r0: f64, mu: f64, delta: f64) -> Self {
        Self {
            k0,
            r0,
            d0: params.d(),
            x0: 0.0,
            mu,
            delta,
            v_floor: None,
        }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidInitialData(s));
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return bad(format!("K0 must be positive, got {}", self.k0));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return bad(format!("R0 must be positive, got {}", self.r0));
        }
        if self.d0 < params.d() * (1.0 - 1e-12) {
            return bad(format!(
                "d0 = {} is below 1/(m-1) = {}",
                self.d0,
                params.d()
            ));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be >= 0, got {}", self.mu));
        }
        if !(self.delta > 0.0 && self.delta < self.r0) {
            return bad(format!("delta must lie in (0, R0), got {}", self.delta));
        }
        if params.radial && self.x0 != 0.0 {
            return bad("radial data must be centered at the origin".into());
        }
        Ok(())
    }

    /// Checks that the closed support ball lies strictly inside the domain.
    pub fn validate_on(&self, params: &ModelParams, grid: &Grid) -> Result<()> {
        self.validate(params)?;
        if self.r0 + self.x0.abs() >= grid.half_length() {
            return Err(Error::InvalidInitialData(format!(
                "bump B_{}({}) is not strictly inside the domain of half-length {}",
                self.r0,
                self.x0,
                grid.half_length()
            )));
        }
        Ok(())
    }

    /// Start of the cosine blend, `R₀ + δ`.
    pub fn blend_start(&self) -> f64 {
        self.r0 + self.delta
    }

    /// End of the cosine blend, `R₀ + 2δ`; `v₀` is constant beyond it.
    pub fn blend_end(&self) -> f64 {
        self.r0 + 2.0 * self.delta
    }

    /// Smallest `v_floor` for which `v₀ ≥ 0`; `v₀` then vanishes on the
    /// outer plateau.
    pub fn min_v_floor(&self) -> f64 {
        let a = self.blend_start();
        let d = self.delta;
        self.mu * (a * a / 2.0 + a * d / 2.0 + d * d / 4.0 - d * d / (PI * PI))
    }

    pub fn resolved_v_floor(&self) -> f64 {
        self.v_floor.unwrap_or_else(|| self.min_v_floor())
    }

    /// `v₀` as a function of the distance `r` from the bump center.
    pub fn v0_profile(&self, r: f64) -> f64 {
        let floor = self.resolved_v_floor();
        let a = self.blend_start();
        let d = self.delta;
        let mu = self.mu;
        let drop = |s: f64| {
            let k = PI / d;
            mu * (a * s / 2.0
                + s * s / 4.0
                + 0.5 * ((a + s) * (k * s).sin() / k + ((k * s).cos() - 1.0) / (k * k)))
        };
        if r <= a {
            floor - mu * r * r / 2.0
        } else if r < a + d {
            floor - mu * a * a / 2.0 - drop(r - a)
        } else {
            floor - mu * a * a / 2.0 - drop(d)
        }
    }

    /// Radial derivative of [`BumpSpec::v0_profile`].
    pub fn v0_slope(&self, r: f64) -> f64 {
        let a = self.blend_start();
        if r <= a {
            -self.mu * r
        } else if r < a + self.delta {
            -self.mu * r * (1.0 + (PI * (r - a) / self.delta).cos()) / 2.0
        } else {
            0.0
        }
    }
}

/// Samples `K₀[(R₀² − |x − x₀|²)₊]^{d₀}` at the cell centers.
pub fn bump_u0(grid: &Grid, spec: &BumpSpec, params: &ModelParams) -> Result<Vec<f64>> {
    spec.validate_on(params, grid)?;
    Ok((0..grid.n_cells())
        .map(|i| {
            let r = grid.distance(i, spec.x0);
            let base = (spec.r0 * spec.r0 - r * r).max(0.0);
            spec.k0 * pow_fast(base, spec.d0)
        })
        .collect())
}

/// Samples the aggregating attractant profile. Inside `B_{R₀+δ}(x₀)` it is
/// the quadratic `v_floor − μ|x − x₀|²/2`; over `[R₀+δ, R₀+2δ]` its slope is
/// ramped to zero with a cosine, and it is constant further out. The
/// plateau must cover the two outermost cells on every boundary so that
/// the discrete normal derivative vanishes there.
pub fn aggregating_v0(grid: &Grid, spec: &BumpSpec) -> Result<Vec<f64>> {
    if !(spec.mu >= 0.0 && spec.delta > 0.0) {
        return Err(Error::InvalidInitialData(
            "aggregating profile needs mu >= 0 and delta > 0".into(),
        ));
    }
    let floor = spec.resolved_v_floor();
    let min_floor = spec.min_v_floor();
    if floor < min_floor * (1.0 - 1e-14) {
        return Err(Error::InvalidInitialData(format!(
            "v_floor = {floor} is below {min_floor}; the profile would go negative"
        )));
    }
    let v: Vec<f64> = (0..grid.n_cells())
        .map(|i| spec.v0_profile(grid.distance(i, spec.x0)).max(0.0))
        .collect();
    if spec.mu > 0.0 {
        let n = grid.n_cells();
        let plateau = |i: usize| grid.distance(i, spec.x0) >= spec.blend_end();
        let right_ok = plateau(n - 1) && plateau(n - 2);
        let left_ok = grid.radial() || (plateau(0) && plateau(1));
        if !(right_ok && left_ok) {
            return Err(Error::InvalidInitialData(format!(
                "attractant blend ending at radius {} reaches the boundary cells",
                spec.blend_end()
            )));
        }
    }
    Ok(v)
}

/// Constant attractant field, without any aggregating structure.
pub fn constant_v0(grid: &Grid, value: f64) -> Result<Vec<f64>> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::InvalidInitialData(format!(
            "constant v0 must be >= 0, got {value}"
        )));
    }
    Ok(vec![value; grid.n_cells()])
}

/// Threshold `4m/(m−1) K₀^{m−1} max{1, R₀^{2((m−1)d₀−1)}}` for shrinking.
pub fn shrinking_threshold(params: &ModelParams, spec: &BumpSpec) -> f64 {
    let m = params.m;
    let exponent = 2.0 * ((m - 1.0) * spec.d0 - 1.0);
    4.0 * m / (m - 1.0) * spec.k0.powf(m - 1.0) * 1f64.max(spec.r0.powf(exponent))
}

/// Returns whether `χμ` strictly exceeds the shrinking threshold, and the
/// margin `χμ − threshold`.
pub fn hypothesis_shrinking(params: &ModelParams, spec: &BumpSpec) -> (bool, f64) {
    let margin = params.chi * spec.mu - shrinking_threshold(params, spec);
    (margin > 0.0, margin)
}

/// Samples the Barenblatt profile at time `t_offset`, centered at the origin.
pub fn barenblatt_u0(grid: &Grid, params: &ModelParams, t_offset: f64) -> Result<Vec<f64>> {
    if !(t_offset >= 0.0) {
        return Err(Error::InvalidInitialData(format!(
            "time offset must be >= 0, got {t_offset}"
        )));
    }
    let bp = BarenblattParams::new(params.m, params.dim)?;
    let radius = bp.front_radius(t_offset);
    if radius >= grid.half_length() {
        return Err(Error::InvalidInitialData(format!(
            "Barenblatt support radius {radius} exceeds the domain half-length {}",
            grid.half_length()
        )));
    }
    Ok((0..grid.n_cells())
        .map(|i| bp.eval(grid.distance(i, 0.0), t_offset))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{integrate, make_grid};
    use approx::assert_relative_eq;

    fn p2() -> ModelParams {
        ModelParams::line(2.0, 1.0).unwrap()
    }

    fn spec(k0: f64, r0: f64, d0: f64, mu: f64) -> BumpSpec {
        BumpSpec {
            k0,
            r0,
            d0,
            x0: 0.0,
            mu,
            delta: 0.1 * r0,
            v_floor: None,
        }
    }

    /// Grid with a cell center exactly at `x` (odd count, symmetric).
    fn grid_with_center_at_zero() -> Grid {
        make_grid(1, false, 2.0, 401).unwrap()
    }

    #[test]
    fn bump_values() {
        let g = grid_with_center_at_zero();
        let u = bump_u0(&g, &spec(1.0, 1.0, 1.0, 0.0), &p2()).unwrap();
        let mid = g.n_cells() / 2;
        assert!(g.centers()[mid].abs() < 1e-12);
        assert_relative_eq!(u[mid], 1.0, epsilon = 1e-12);
        for (x, ui) in g.centers().iter().zip(&u) {
            if x.abs() >= 1.0 {
                assert_eq!(*ui, 0.0);
            }
            assert!(*ui >= 0.0);
        }
        // K0 = 2, R0 = 1, d0 = 2 at |x - x0| = 0.5: 2·0.75² = 1.125.
        let g = make_grid(1, false, 2.0, 8).unwrap();
        let s = BumpSpec { x0: 0.25, ..spec(2.0, 1.0, 2.0, 0.0) };
        let j = g.centers().iter().position(|x| (x - 0.75).abs() < 1e-12).unwrap();
        let u = bump_u0(&g, &s, &p2()).unwrap();
        assert_relative_eq!(u[j], 1.125, epsilon = 1e-12);
    }

    #[test]
    fn bump_mass_matches_antiderivative() {
        let g = make_grid(1, false, 2.0, 20_000).unwrap();
        let u = bump_u0(&g, &spec(1.0, 1.0, 1.0, 0.0), &p2()).unwrap();
        assert!((integrate(&u, &g).unwrap() - 4.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn bump_must_fit_inside() {
        let g = make_grid(1, false, 1.0, 100).unwrap();
        assert!(bump_u0(&g, &spec(1.0, 1.0, 1.0, 0.0), &p2()).is_err());
        let s = BumpSpec { x0: 0.6, ..spec(1.0, 0.5, 1.0, 0.0) };
        assert!(bump_u0(&g, &s, &p2()).is_err());
        let s = BumpSpec { d0: 0.5, ..spec(1.0, 0.5, 1.0, 0.0) };
        assert!(bump_u0(&g, &s, &p2()).is_err());
    }

    #[test]
    fn v0_identity_and_constant_case() {
        let s = BumpSpec { mu: 2.0, ..spec(1.0, 1.0, 1.0, 2.0) };
        // v0'(r)·r = −μ r² on the quadratic part.
        let r = 0.5;
        assert_relative_eq!(s.v0_slope(r) * r, -0.5, epsilon = 1e-15);
        let g = make_grid(1, false, 2.0, 64).unwrap();
        let flat = BumpSpec { mu: 0.0, v_floor: Some(0.7), ..spec(1.0, 1.0, 1.0, 0.0) };
        let v = aggregating_v0(&g, &flat).unwrap();
        assert!(v.iter().all(|x| *x == 0.7));
    }

    #[test]
    fn v0_blend_is_neumann_at_boundary() {
        let s = BumpSpec {
            k0: 1.0,
            r0: 1.0,
            d0: 1.0,
            x0: 0.0,
            mu: 1.0,
            delta: 0.2,
            v_floor: Some(1.0),
        };
        let g = make_grid(1, false, 2.0, 200).unwrap();
        let v = aggregating_v0(&g, &s).unwrap();
        let n = v.len();
        assert_eq!((v[1] - v[0]) / g.dx(), 0.0);
        assert_eq!((v[n - 1] - v[n - 2]) / g.dx(), 0.0);
        assert!(v.iter().all(|x| *x >= 0.0));
        let gr = make_grid(2, true, 2.0, 100).unwrap();
        let v = aggregating_v0(&gr, &s).unwrap();
        assert_eq!(v[99] - v[98], 0.0);
    }

    #[test]
    fn v0_profile_is_c1_and_floor_is_minimal() {
        let s = BumpSpec { mu: 3.0, ..spec(1.0, 0.5, 1.0, 3.0) };
        let h = 1e-6;
        for r in [0.3, 0.55, 0.6, 0.62, 0.65, 0.69, 0.7, 0.8] {
            let fd = (s.v0_profile(r + h) - s.v0_profile(r - h)) / (2.0 * h);
            assert!((fd - s.v0_slope(r)).abs() < 1e-6, "r = {r}: {fd} vs {}", s.v0_slope(r));
        }
        assert!(s.v0_profile(1.0).abs() < 1e-14);
        let low = BumpSpec { v_floor: Some(0.9 * s.min_v_floor()), ..s };
        let g = make_grid(1, false, 1.0, 100).unwrap();
        assert!(aggregating_v0(&g, &low).is_err());
    }

    #[test]
    fn v0_centered_differences_match_on_core() {
        let s = BumpSpec { mu: 2.0, ..spec(1.0, 0.5, 1.0, 2.0) };
        let g = make_grid(1, false, 1.0, 400).unwrap();
        let v = aggregating_v0(&g, &s).unwrap();
        for i in 1..v.len() - 1 {
            let r = g.centers()[i].abs();
            if r > 2.0 * g.dx() && r < s.r0 {
                let dv = (v[i + 1] - v[i - 1]) / (2.0 * g.dx());
                let x = g.centers()[i];
                assert!((dv * x + s.mu * x * x).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn blend_cannot_touch_boundary() {
        let s = BumpSpec { mu: 1.0, ..spec(1.0, 0.8, 1.0, 1.0) };
        let g = make_grid(1, false, 0.9, 100).unwrap();
        assert!(aggregating_v0(&g, &s).is_err());
    }

    #[test]
    fn shrinking_threshold_cases() {
        let p = ModelParams::line(2.0, 1.0).unwrap();
        let (ok, margin) = hypothesis_shrinking(&p, &spec(1.0, 1.0, 1.0, 9.0));
        assert!(ok);
        assert_relative_eq!(margin, 1.0, epsilon = 1e-12);
        let (ok, margin) = hypothesis_shrinking(&p, &spec(1.0, 1.0, 1.0, 8.0));
        assert!(!ok);
        assert_eq!(margin, 0.0);
        let p3 = ModelParams::line(3.0, 1.0).unwrap();
        let (ok, margin) = hypothesis_shrinking(&p3, &spec(1.0, 2.0, 1.0, 40.0));
        assert!(ok);
        assert_relative_eq!(margin, 16.0, epsilon = 1e-12);
    }

    #[test]
    fn barenblatt_initial_values() {
        let p = ModelParams::line(2.0, 0.0).unwrap();
        let g = make_grid(1, false, 6.0, 601).unwrap();
        let u = barenblatt_u0(&g, &p, 0.0).unwrap();
        assert_relative_eq!(u[300], 1.0, epsilon = 1e-12);
        let bp = BarenblattParams::new(2.0, 1).unwrap();
        assert_relative_eq!(bp.eval(1.0, 0.0), 11.0 / 12.0, epsilon = 1e-12);
        for (x, ui) in g.centers().iter().zip(&u) {
            if x.abs() >= 12f64.sqrt() {
                assert_eq!(*ui, 0.0);
            }
        }
        let small = make_grid(1, false, 3.0, 100).unwrap();
        assert!(barenblatt_u0(&small, &p, 0.0).is_err());
    }
}
