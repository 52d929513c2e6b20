//! Model coefficients, the cell-centered mesh and the field state.
//!
//! The mesh is uniform. A plain 1D grid covers the symmetric interval
//! `[-L, L]`; a radial grid covers `[0, L]` in the radius of a ball in
//! `R^N`, with cell weights equal to the exact shell measures
//! `|S^{N-1}| (r_{i+1/2}^N - r_{i-1/2}^N) / N` and face areas
//! `|S^{N-1}| r^{N-1}`. The face at `r = 0` has zero area for `N > 1`, and
//! every boundary face carries zero flux, which gives the reflecting
//! (homogeneous Neumann) behaviour.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Coefficients of `u_t = Δu^m − χ∇·(u∇v)`, `v_t = Δv − αuv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Diffusion exponent, strictly greater than one.
    pub m: f64,
    /// Chemotactic sensitivity.
    pub chi: f64,
    /// Consumption rate of the attractant.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Spatial dimension, 1 to 3.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Radially symmetric reduction. Required when `dim > 1`.
    #[serde(default)]
    pub radial: bool,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_dim() -> usize {
    1
}

impl ModelParams {
    pub fn new(m: f64, chi: f64, alpha: f64, dim: usize, radial: bool) -> Result<Self> {
        let p = Self {
            m,
            chi,
            alpha,
            dim,
            radial,
        };
        p.validate()?;
        Ok(p)
    }

    /// One-dimensional, non-radial parameters with `α = 1`.
    pub fn line(m: f64, chi: f64) -> Result<Self> {
        Self::new(m, chi, 1.0, 1, false)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 1.0) {
            return Err(Error::InvalidParams(format!(
                "m must be finite and > 1, got {}",
                self.m
            )));
        }
        if !(self.chi.is_finite() && self.chi >= 0.0) {
            return Err(Error::InvalidParams(format!("chi must be >= 0, got {}", self.chi)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        check_dim(self.dim, self.radial).map_err(|e| match e {
            Error::InvalidGrid(s) => Error::InvalidParams(s),
            other => other,
        })
    }

    /// The canonical profile exponent `1/(m−1)`.
    pub fn d(&self) -> f64 {
        1.0 / (self.m - 1.0)
    }

    /// `s^m`, using an integer power when `m` is integral.
    #[inline]
    pub fn pow_m(&self, s: f64) -> f64 {
        pow_fast(s, self.m)
    }
}

fn check_dim(dim: usize, radial: bool) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if dim > 1 && !radial {
        return Err(Error::InvalidGrid(format!(
            "dimension {dim} is only supported as a radial reduction"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn pow_fast(s: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() <= 16.0 {
        s.powi(e as i32)
    } else {
        s.powf(e)
    }
}

/// Surface measure of the unit sphere `S^{N-1}`; `2` for `N = 1`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Uniform cell-centered mesh with geometric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    radial: bool,
    half_length: f64,
    dx: f64,
    centers: Vec<f64>,
    weights: Vec<f64>,
    face_areas: Vec<f64>,
    stencil_factor: f64,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radial(&self) -> bool {
        self.radial
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Cell-center coordinates (signed `x` for a line, radius `r` for radial).
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Cell measures; they sum to the measure of the discretized domain.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Areas of the `n + 1` cell faces, boundary faces included.
    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// `max_i (a_{i-1/2} + a_{i+1/2}) dx / w_i` over interior faces; 2 for a
    /// uniform line. Scales the explicit stability limits.
    pub fn stencil_factor(&self) -> f64 {
        self.stencil_factor
    }

    /// Total measure `Σ w_i`.
    pub fn measure(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Exact measure of the continuous domain.
    pub fn exact_measure(&self) -> f64 {
        if self.radial {
            unit_sphere_area(self.dim) * self.half_length.powi(self.dim as i32) / self.dim as f64
        } else {
            2.0 * self.half_length
        }
    }

    /// Distance of cell `i` from the point `x0` (radius for radial grids).
    #[inline]
    pub fn distance(&self, i: usize, x0: f64) -> f64 {
        if self.radial {
            self.centers[i]
        } else {
            (self.centers[i] - x0).abs()
        }
    }

    /// Signed offset `x_i − x0` along the grid coordinate.
    #[inline]
    pub fn offset(&self, i: usize, x0: f64) -> f64 {
        if self.radial {
            self.centers[i]
        } else {
            self.centers[i] - x0
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_cells() {
            return Err(Error::LengthMismatch {
                expected: self.n_cells(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Builds a uniform grid. A line spans `[-half_length, half_length]`, a
/// radial grid spans `[0, half_length]`.
pub fn make_grid(dim: usize, radial: bool, half_length: f64, n_cells: usize) -> Result<Grid> {
    check_dim(dim, radial)?;
    if n_cells < 8 {
        return Err(Error::InvalidGrid(format!("need at least 8 cells, got {n_cells}")));
    }
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "half_length must be positive, got {half_length}"
        )));
    }
    let n = n_cells;
    let (dx, centers, weights, face_areas) = if radial {
        let dx = half_length / n as f64;
        let omega = unit_sphere_area(dim);
        let nd = dim as i32;
        let face_r = |j: usize| j as f64 * dx;
        let centers = (0..n).map(|i| (i as f64 + 0.5) * dx).collect();
        let weights = (0..n)
            .map(|i| omega * (face_r(i + 1).powi(nd) - face_r(i).powi(nd)) / dim as f64)
            .collect();
        let face_areas = (0..=n).map(|j| omega * face_r(j).powi(nd - 1)).collect();
        (dx, centers, weights, face_areas)
    } else {
        let dx = 2.0 * half_length / n as f64;
        let centers = (0..n)
            .map(|i| -half_length + (i as f64 + 0.5) * dx)
            .collect();
        (dx, centers, vec![dx; n], vec![1.0; n + 1])
    };
    let mut grid = Grid {
        dim,
        radial,
        half_length,
        dx,
        centers,
        weights,
        face_areas,
        stencil_factor: 0.0,
    };
    grid.stencil_factor = (0..n)
        .map(|i| {
            let left = if i > 0 { grid.face_areas[i] } else { 0.0 };
            let right = if i + 1 < n { grid.face_areas[i + 1] } else { 0.0 };
            (left + right) * dx / grid.weights[i]
        })
        .fold(0.0, f64::max);
    Ok(grid)
}

/// Cell density and attractant concentration at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(grid: &Grid, u: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self> {
        let s = Self { u, v, t };
        s.check(grid)?;
        Ok(s)
    }

    /// Verifies lengths, finiteness and nonnegativity.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        grid.check_len(self.u.len())?;
        grid.check_len(self.v.len())?;
        if let Some(x) = self.u.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidInitialData(format!("u must be finite and >= 0, found {x}")));
        }
        if let Some(x) = self.v.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidInitialData(format!("v must be finite and >= 0, found {x}")));
        }
        Ok(())
    }
}

/// Compensated sum; keeps conservation checks at round-off level.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Discrete integral `Σ f_i w_i`.
pub fn integrate(field: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(field.len())?;
    Ok(neumaier_sum(
        field.iter().zip(grid.weights()).map(|(f, w)| f * w),
    ))
}

/// `max_i |f_i|`.
pub fn linf(field: &[f64]) -> f64 {
    field.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest one-sided difference quotient over interior faces.
pub fn grad_max(field: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(field.len())?;
    let inv_dx = 1.0 / grid.dx();
    Ok(field
        .windows(2)
        .fold(0.0, |acc, w| acc.max((w[1] - w[0]).abs() * inv_dx)))
}

/// Conservative discrete Laplacian with zero boundary flux.
pub fn laplacian(field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(field.len())?;
    let n = field.len();
    let inv_dx = 1.0 / grid.dx();
    let a = grid.face_areas();
    let w = grid.weights();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let right = if i + 1 < n {
            a[i + 1] * (field[i + 1] - field[i]) * inv_dx
        } else {
            0.0
        };
        let left = if i > 0 {
            a[i] * (field[i] - field[i - 1]) * inv_dx
        } else {
            0.0
        };
        out[i] = (right - left) / w[i];
    }
    Ok(out)
}

/// `‖Δ_h f‖_∞`.
pub fn laplacian_max(field: &[f64], grid: &Grid) -> Result<f64> {
    Ok(linf(&laplacian(field, grid)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_line_grid() {
        let g = make_grid(1, false, 1.0, 10).unwrap();
        assert_relative_eq!(g.dx(), 0.2, epsilon = 1e-15);
        assert!(g.weights().iter().all(|w| (w - 0.2).abs() < 1e-15));
        assert_relative_eq!(g.centers()[0], -0.9, epsilon = 1e-15);
        assert_relative_eq!(g.measure(), 2.0, max_relative = 1e-12);
        assert_eq!(g.stencil_factor(), 2.0);
    }

    #[test]
    fn disk_weights_reproduce_area() {
        let g = make_grid(2, true, 1.0, 100).unwrap();
        // Midpoint rule on 2π r dr against the exact π.
        let midpoint: f64 = g.centers().iter().map(|r| 2.0 * PI * r * g.dx()).sum();
        assert!((midpoint - PI).abs() < 1e-3);
        assert!((g.measure() - PI).abs() < 1e-3);
        assert_relative_eq!(g.measure(), g.exact_measure(), max_relative = 1e-12);
        for (w, r) in g.weights().iter().zip(g.centers()) {
            assert_relative_eq!(*w, 2.0 * PI * r * g.dx(), max_relative = 1e-12);
        }
    }

    #[test]
    fn ball_weights_exact_measure() {
        let g = make_grid(3, true, 2.0, 37).unwrap();
        assert!(g.weights().iter().all(|w| *w > 0.0));
        assert_relative_eq!(g.measure(), g.exact_measure(), max_relative = 1e-12);
        assert!((g.stencil_factor() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(3, false, 1.0, 10).is_err());
        assert!(make_grid(2, false, 1.0, 10).is_err());
        assert!(make_grid(1, false, 1.0, 7).is_err());
        assert!(make_grid(1, false, 0.0, 10).is_err());
        assert!(make_grid(1, false, -1.0, 10).is_err());
        assert!(make_grid(4, true, 1.0, 10).is_err());
        assert!(make_grid(1, true, 1.0, 10).is_ok());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::line(1.0, 1.0).is_err());
        assert!(ModelParams::line(2.0, -1.0).is_err());
        assert!(ModelParams::new(2.0, 1.0, -0.5, 1, false).is_err());
        assert!(ModelParams::new(2.0, 1.0, 1.0, 2, false).is_err());
        assert!(ModelParams::new(1.5, 0.0, 0.0, 3, true).is_ok());
    }

    #[test]
    fn integrate_cases() {
        let g = make_grid(1, false, 1.5, 30).unwrap();
        let c = vec![2.5; 30];
        assert_eq!(integrate(&c, &g).unwrap(), 2.5 * 3.0);
        assert_eq!(integrate(&vec![0.0; 30], &g).unwrap(), 0.0);
        assert!(matches!(
            integrate(&[1.0; 3], &g),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gradient_cases() {
        let g = make_grid(1, false, 1.0, 50).unwrap();
        assert_eq!(grad_max(&vec![3.0; 50], &g).unwrap(), 0.0);
        let lin: Vec<f64> = g.centers().to_vec();
        assert!((grad_max(&lin, &g).unwrap() - 1.0).abs() < 1e-12);

        // cos(πx/(2L)) has maximal slope π/(2L) at the ends.
        let l = 1.0;
        let mut prev_err = f64::INFINITY;
        for n in [50, 100, 200, 400] {
            let g = make_grid(1, false, l, n).unwrap();
            let f: Vec<f64> = g.centers().iter().map(|x| (PI * x / (2.0 * l)).cos()).collect();
            let err = (grad_max(&f, &g).unwrap() - PI / (2.0 * l)).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-4);
    }

    #[test]
    fn laplacian_of_constant_vanishes_and_quadratic_is_exact_inside() {
        let g = make_grid(1, false, 1.0, 40).unwrap();
        let lap = laplacian(&vec![1.0; 40], &g).unwrap();
        assert!(lap.iter().all(|x| x.abs() < 1e-12));
        let q: Vec<f64> = g.centers().iter().map(|x| x * x).collect();
        let lap = laplacian(&q, &g).unwrap();
        for l in &lap[1..39] {
            assert!((l - 2.0).abs() < 1e-9);
        }
        // Discrete divergence theorem: Σ w_i (Δ_h f)_i = 0.
        let g = make_grid(3, true, 1.0, 40).unwrap();
        let f: Vec<f64> = g.centers().iter().map(|r| (3.0 * r).sin()).collect();
        let total = integrate(&laplacian(&f, &g).unwrap(), &g).unwrap();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn state_rejects_negative() {
        let g = make_grid(1, false, 1.0, 8).unwrap();
        assert!(State::new(&g, vec![0.0; 8], vec![0.0; 8], 0.0).is_ok());
        let mut u = vec![0.0; 8];
        u[3] = -1e-3;
        assert!(State::new(&g, u, vec![0.0; 8], 0.0).is_err());
        assert!(State::new(&g, vec![0.0; 7], vec![0.0; 8], 0.0).is_err());
    }
}
