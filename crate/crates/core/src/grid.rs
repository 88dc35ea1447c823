//! Node layout on the ball.
//!
//! `n = 2` uses the polar chart `(r, φ)` with radial nodes `r_j = j h_r`,
//! `j = 0..=J`. `n = 3` uses the half-disk chart `(r, θ)` with
//! `(ρ, z) = (r sinθ, r cosθ)` and nodes `θ_k = k h_θ`, `k = 0..=K`, times the
//! angle `φ`. Both layouts put explicit nodes on the axis and on `r = R`.
//! Nodes are indexed `j * (K + 1) + k`, with `K = 0` for `n = 2`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::reduction::{Dimension, HelicalConfig};

pub const MIN_INTERVALS: usize = 16;
pub const MIN_NODES_PER_SIDE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub dim: Dimension,
    pub radius: f64,
    pub omega: f64,
    /// Radial intervals `J`.
    pub n_r: usize,
    /// Polar intervals `K` (0 for `n = 2`).
    pub n_theta: usize,
    /// Samples of the helical angle used for analysis/synthesis.
    pub n_phi: usize,
    pub h_r: f64,
    pub h_theta: f64,
    pub light_cylinder_interior: bool,
}

/// Density-weighted coefficients in the solver chart at one node.
///
/// With `J = r^{n-2}` the Jacobian of `(ρ, z) → (r, θ)`:
/// `h^{rr} = Jρ`, `h^{θθ} = Jρ/r²`, `h^{φφ} = Jχ/ρ`, `σ' = Jρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartCoefficients {
    pub h_rr: f64,
    pub h_tt: f64,
    pub h_pp: f64,
    pub sigma: f64,
    /// `∂_r` and `∂_θ` of the three diagonal entries, in the order
    /// `(rr, tt, pp)`.
    pub dr: [f64; 3],
    pub dt: [f64; 3],
}

pub fn build_grid(config: &HelicalConfig, resolution: &[usize], n_phi: usize) -> Result<Grid> {
    let expected = config.n() - 1;
    if resolution.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: resolution.len(),
        });
    }
    if let Some(&bad) = resolution.iter().find(|&&v| v < MIN_INTERVALS) {
        return Err(Error::GridTooCoarse(format!(
            "resolution {bad} is below the minimum of {MIN_INTERVALS} intervals"
        )));
    }
    if n_phi == 0 {
        return Err(Error::GridTooCoarse("n_phi must be positive".into()));
    }
    let n_r = resolution[0];
    let n_theta = if config.dim == Dimension::Three { resolution[1] } else { 0 };
    let h_r = config.radius / n_r as f64;
    let h_theta = if n_theta > 0 { PI / n_theta as f64 } else { 0.0 };
    let grid = Grid {
        dim: config.dim,
        radius: config.radius,
        omega: config.omega,
        n_r,
        n_theta,
        n_phi,
        h_r,
        h_theta,
        light_cylinder_interior: config.boundary_crosses_light_cylinder(),
    };
    if grid.light_cylinder_interior {
        let lc = config.light_cylinder_radius();
        let inside = (0..=n_r).filter(|&j| grid.r(j) < lc).count();
        let outside = (0..=n_r).filter(|&j| grid.r(j) > lc).count();
        if inside < MIN_NODES_PER_SIDE || outside < MIN_NODES_PER_SIDE {
            return Err(Error::GridTooCoarse(format!(
                "light cylinder at r = {lc} has {inside} radial nodes inside and {outside} \
                 outside; need at least {MIN_NODES_PER_SIDE} on each side"
            )));
        }
    }
    Ok(grid)
}

impl Grid {
    pub fn n(&self) -> usize {
        self.dim.as_usize()
    }

    pub fn radial_nodes(&self) -> usize {
        self.n_r + 1
    }

    pub fn theta_nodes(&self) -> usize {
        self.n_theta + 1
    }

    pub fn node_count(&self) -> usize {
        self.radial_nodes() * self.theta_nodes()
    }

    pub fn boundary_node_count(&self) -> usize {
        self.theta_nodes()
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.theta_nodes() + k
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.theta_nodes(), idx % self.theta_nodes())
    }

    /// Node index of the `k`-th boundary node (on `r = R`).
    pub fn boundary_index(&self, k: usize) -> usize {
        self.index(self.n_r, k)
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        if j == self.n_r {
            self.radius
        } else {
            j as f64 * self.h_r
        }
    }

    #[inline]
    pub fn theta(&self, k: usize) -> f64 {
        match self.dim {
            Dimension::Two => FRAC_PI_2,
            Dimension::Three => {
                if k == self.n_theta {
                    PI
                } else {
                    k as f64 * self.h_theta
                }
            }
        }
    }

    #[inline]
    fn sin_theta(&self, k: usize) -> f64 {
        match self.dim {
            Dimension::Two => 1.0,
            Dimension::Three => {
                if k == 0 || k == self.n_theta {
                    0.0
                } else {
                    self.theta(k).sin()
                }
            }
        }
    }

    #[inline]
    pub fn rho(&self, j: usize, k: usize) -> f64 {
        self.r(j) * self.sin_theta(k)
    }

    #[inline]
    pub fn z(&self, j: usize, k: usize) -> f64 {
        match self.dim {
            Dimension::Two => 0.0,
            Dimension::Three => self.r(j) * self.theta(k).cos(),
        }
    }

    pub fn phi(&self, p: usize) -> f64 {
        2.0 * PI * p as f64 / self.n_phi as f64
    }

    /// Node on the axis `ρ = 0`, where chart coefficients are singular.
    #[inline]
    pub fn is_axis(&self, j: usize, k: usize) -> bool {
        j == 0 || (self.dim == Dimension::Three && (k == 0 || k == self.n_theta))
    }

    /// Smallest relative spacing, `max(h_r / R, h_θ)`.
    pub fn h_rel(&self) -> f64 {
        (self.h_r / self.radius).max(self.h_theta)
    }

    /// Chart coefficients; `h_pp` and its derivatives are infinite on the axis.
    pub fn coefficients(&self, j: usize, k: usize) -> ChartCoefficients {
        let r = self.r(j);
        let w2 = self.omega * self.omega;
        match self.dim {
            Dimension::Two => ChartCoefficients {
                h_rr: r,
                h_tt: 0.0,
                h_pp: 1.0 / r - w2 * r,
                sigma: r,
                dr: [1.0, 0.0, -1.0 / (r * r) - w2],
                dt: [0.0; 3],
            },
            Dimension::Three => {
                let s = self.sin_theta(k);
                let c = self.theta(k).cos();
                ChartCoefficients {
                    h_rr: r * r * s,
                    h_tt: s,
                    h_pp: 1.0 / s - w2 * r * r * s,
                    sigma: r * r * s,
                    dr: [2.0 * r * s, 0.0, -2.0 * w2 * r * s],
                    dt: [r * r * c, c, -c / (s * s) - w2 * r * r * c],
                }
            }
        }
    }

    /// Chart density `σ'` at a node (zero on the axis).
    pub fn sigma(&self, j: usize, k: usize) -> f64 {
        let r = self.r(j);
        match self.dim {
            Dimension::Two => r,
            Dimension::Three => r * r * self.sin_theta(k),
        }
    }

    /// `h^{rr}` on the boundary node `k`: the density that multiplies the
    /// radial derivative in boundary fluxes.
    pub fn boundary_h_rr(&self, k: usize) -> f64 {
        self.sigma(self.n_r, k)
    }

    fn trapezoid_weight(i: usize, last: usize, h: f64) -> f64 {
        if i == 0 || i == last {
            0.5 * h
        } else {
            h
        }
    }

    /// Composite trapezoid weights over `(r[, θ])`, without the `φ` factor.
    pub fn volume_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.node_count());
        for j in 0..self.radial_nodes() {
            let wr = Self::trapezoid_weight(j, self.n_r, self.h_r);
            for k in 0..self.theta_nodes() {
                let wt = match self.dim {
                    Dimension::Two => 1.0,
                    Dimension::Three => Self::trapezoid_weight(k, self.n_theta, self.h_theta),
                };
                w.push(wr * wt);
            }
        }
        w
    }

    /// Trapezoid weights over the boundary chart (`θ` for `n = 3`; a single
    /// unit weight for `n = 2`), without the `φ` factor.
    pub fn boundary_weights(&self) -> Vec<f64> {
        match self.dim {
            Dimension::Two => vec![1.0],
            Dimension::Three => (0..self.theta_nodes())
                .map(|k| Self::trapezoid_weight(k, self.n_theta, self.h_theta))
                .collect(),
        }
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    /// Radial nodes strictly inside / outside the light cylinder.
    pub fn light_cylinder_split(&self) -> (usize, usize) {
        let lc = 1.0 / self.omega;
        let inside = (0..self.radial_nodes()).filter(|&j| self.r(j) < lc).count();
        let outside = (0..self.radial_nodes()).filter(|&j| self.r(j) > lc).count();
        (inside, outside)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::Sign;

    fn cfg(n: usize, omega: f64, radius: f64) -> HelicalConfig {
        HelicalConfig::new(Dimension::from_usize(n).unwrap(), omega, radius, Sign::Plus).unwrap()
    }

    #[test]
    fn disk_grid_with_light_cylinder() {
        let g = build_grid(&cfg(2, 1.0, 2.0), &[64], 16).unwrap();
        assert_eq!(g.radial_nodes(), 65);
        assert!(g.light_cylinder_interior);
        let (inside, outside) = g.light_cylinder_split();
        assert!(inside >= 8 && outside >= 8);
        assert_eq!(g.r(64), 2.0);
    }

    #[test]
    fn fully_elliptic_disk() {
        let g = build_grid(&cfg(2, 1.0, 0.5), &[32], 8).unwrap();
        assert!(!g.light_cylinder_interior);
    }

    #[test]
    fn half_disk_grid() {
        let g = build_grid(&cfg(3, 1.0, 2.0), &[64, 48], 8).unwrap();
        assert_eq!(g.boundary_node_count(), 49);
        assert_eq!(g.node_count(), 65 * 49);
        assert_eq!(g.theta(48), PI);
        assert_eq!(g.rho(10, 0), 0.0);
        assert!(g.is_axis(3, 48) && g.is_axis(0, 5) && !g.is_axis(3, 5));
    }

    #[test]
    fn coarse_grids_rejected() {
        assert!(matches!(
            build_grid(&cfg(2, 1.0, 2.0), &[8], 8),
            Err(Error::GridTooCoarse(_))
        ));
        // J = 16 over R = 10 with the cylinder at r = 0.2 leaves one node inside.
        assert!(matches!(
            build_grid(&cfg(2, 5.0, 10.0), &[16], 8),
            Err(Error::GridTooCoarse(_))
        ));
        assert!(build_grid(&cfg(3, 1.0, 2.0), &[32], 8).is_err());
    }

    #[test]
    fn weights_integrate_linears_exactly() {
        let g = build_grid(&cfg(3, 1.0, 2.0), &[20, 16], 8).unwrap();
        let w = g.volume_weights();
        let total: f64 = w.iter().sum();
        assert!((total - 2.0 * PI).abs() < 1e-13);
        let lin: f64 = (0..g.node_count())
            .map(|i| {
                let (j, k) = g.split(i);
                w[i] * (g.r(j) + 3.0 * g.theta(k))
            })
            .sum();
        let exact = PI * 2.0 + 2.0 * 3.0 * PI * PI / 2.0;
        assert!((lin - exact).abs() < 1e-12);
    }
}
