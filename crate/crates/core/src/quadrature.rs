//! Composite trapezoid rules for weight-one densities in the solver chart.
//!
//! A density already carries every Jacobian factor, so the volume integral is
//! plain coordinate integration over `(r, φ)` or `(r, θ, φ)` and the boundary
//! integral over `φ` or `(θ, φ)`.

use std::ops::{AddAssign, Mul};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::field::{check_field, d_phi, d_r, d_theta};
use crate::grid::Grid;
use crate::reduction::{Dimension, HelicalConfig};

pub trait Scalar: Copy + Zero + AddAssign + Mul<f64, Output = Self> {}
impl<T: Copy + Zero + AddAssign + Mul<f64, Output = T>> Scalar for T {}

/// `∫_B density` for samples `[node * n_phi + p]`.
pub fn volume_quadrature<T: Scalar>(grid: &Grid, samples: &[T]) -> Result<T> {
    let np = grid.n_phi;
    let expected = grid.node_count() * np;
    if samples.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: samples.len(),
        });
    }
    let w = grid.volume_weights();
    let mut total = T::zero();
    for (node, wn) in w.iter().enumerate() {
        let mut s = T::zero();
        for v in &samples[node * np..(node + 1) * np] {
            s += *v;
        }
        total += s * *wn;
    }
    Ok(total * grid.phi_weight())
}

/// `∫_{∂B} density` for samples `[k * n_phi + p]` on `r = R`.
pub fn boundary_quadrature<T: Scalar>(grid: &Grid, samples: &[T]) -> Result<T> {
    let np = grid.n_phi;
    let expected = grid.boundary_node_count() * np;
    if samples.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: samples.len(),
        });
    }
    let mut total = T::zero();
    for (k, wk) in grid.boundary_weights().iter().enumerate() {
        let mut s = T::zero();
        for v in &samples[k * np..(k + 1) * np] {
            s += *v;
        }
        total += s * *wk;
    }
    Ok(total * grid.phi_weight())
}

/// Volume quadrature of one mode's values (the `φ` integral contributes
/// `2π` times the `m = 0` coefficient and zero otherwise).
pub fn mode_volume_quadrature<T: Scalar>(grid: &Grid, samples: &[T]) -> Result<T> {
    if samples.len() != grid.node_count() {
        return Err(Error::ShapeMismatch {
            expected: grid.node_count(),
            found: samples.len(),
        });
    }
    let mut total = T::zero();
    for (v, w) in samples.iter().zip(grid.volume_weights()) {
        total += *v * w;
    }
    Ok(total * (2.0 * std::f64::consts::PI))
}

/// Boundary analogue of [`mode_volume_quadrature`].
pub fn mode_boundary_quadrature<T: Scalar>(grid: &Grid, samples: &[T]) -> Result<T> {
    if samples.len() != grid.boundary_node_count() {
        return Err(Error::ShapeMismatch {
            expected: grid.boundary_node_count(),
            found: samples.len(),
        });
    }
    let mut total = T::zero();
    for (v, w) in samples.iter().zip(grid.boundary_weights()) {
        total += *v * w;
    }
    Ok(total * (2.0 * std::f64::consts::PI))
}

/// Chart components of a weight-one vector density: `[V^r, V^φ]` for
/// `n = 2`, `[V^r, V^θ, V^φ]` for `n = 3`, each sampled node-major.
#[derive(Debug, Clone)]
pub struct VectorDensity {
    pub components: Vec<Vec<f64>>,
}

impl VectorDensity {
    fn check(&self, grid: &Grid) -> Result<()> {
        if self.components.len() != grid.n() {
            return Err(Error::ShapeMismatch {
                expected: grid.n(),
                found: self.components.len(),
            });
        }
        self.components.iter().try_for_each(|c| check_field(grid, c))
    }

    /// `∂_α V^α` at every node.
    pub fn divergence(&self, grid: &Grid) -> Result<Vec<f64>> {
        self.check(grid)?;
        let mut div = d_r(grid, &self.components[0]);
        let last = self.components.len() - 1;
        let tails = [
            (grid.dim == Dimension::Three).then(|| d_theta(grid, &self.components[1])),
            Some(d_phi(grid, &self.components[last])),
        ];
        for t in tails.into_iter().flatten() {
            div.iter_mut().zip(t).for_each(|(a, b)| *a += b);
        }
        Ok(div)
    }
}

/// `|∫_B ∂_α V^α − ∫_{∂B} n_α V^α|`. The co-normal is `dr`, so the boundary
/// integrand is `V^r` on `r = R`.
pub fn stokes_residual(v: &VectorDensity, grid: &Grid, config: &HelicalConfig) -> Result<f64> {
    if config.dim != grid.dim {
        return Err(Error::InvalidConfig("grid and configuration dimensions differ".into()));
    }
    let (volume, boundary) = stokes_sides(v, grid)?;
    Ok((volume - boundary).abs())
}

/// Both sides of the divergence identity.
pub fn stokes_sides(v: &VectorDensity, grid: &Grid) -> Result<(f64, f64)> {
    let div = v.divergence(grid)?;
    let volume = volume_quadrature(grid, &div)?;
    let flux = crate::field::boundary_values(grid, &v.components[0]);
    let boundary = boundary_quadrature(grid, &flux)?;
    Ok((volume, boundary))
}
