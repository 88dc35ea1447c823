//! Real fields sampled on `grid × φ` (node-major: `values[node * n_phi + p]`)
//! and their chart derivatives.
//!
//! `r` and `θ` derivatives are second-order finite differences (central inside,
//! one-sided at the ends of each coordinate line); `φ` derivatives are
//! spectral, which is what the per-mode solver sees.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modes::PhiTransform;
use crate::reduction::Dimension;

pub fn check_field(grid: &Grid, values: &[f64]) -> Result<()> {
    let expected = grid.node_count() * grid.n_phi;
    if values.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: values.len(),
        });
    }
    Ok(())
}

/// Second-order derivative of samples `f(i)`, `i = 0..=last`, spacing `h`.
#[inline]
fn line_derivative(f: impl Fn(usize) -> f64, i: usize, last: usize, h: f64) -> f64 {
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if i == last {
        (3.0 * f(last) - 4.0 * f(last - 1) + f(last - 2)) / (2.0 * h)
    } else {
        (f(i + 1) - f(i - 1)) / (2.0 * h)
    }
}

pub fn d_r(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let np = grid.n_phi;
    let mut out = vec![0.0; u.len()];
    for j in 0..grid.radial_nodes() {
        for k in 0..grid.theta_nodes() {
            for p in 0..np {
                let f = |jj: usize| u[grid.index(jj, k) * np + p];
                out[grid.index(j, k) * np + p] = line_derivative(f, j, grid.n_r, grid.h_r);
            }
        }
    }
    out
}

/// `∂_θ`; identically zero for `n = 2`.
pub fn d_theta(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let np = grid.n_phi;
    let mut out = vec![0.0; u.len()];
    if grid.dim == Dimension::Two {
        return out;
    }
    for j in 0..grid.radial_nodes() {
        for k in 0..grid.theta_nodes() {
            for p in 0..np {
                let f = |kk: usize| u[grid.index(j, kk) * np + p];
                out[grid.index(j, k) * np + p] = line_derivative(f, k, grid.n_theta, grid.h_theta);
            }
        }
    }
    out
}

pub fn d_phi(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let np = grid.n_phi;
    let t = PhiTransform::new(np, PhiTransform::max_resolved(np)).expect("resolved band");
    let mut out = vec![0.0; u.len()];
    for (src, dst) in u.chunks_exact(np).zip(out.chunks_exact_mut(np)) {
        t.derivative_into(src, dst);
    }
    out
}

/// Chart gradient `(u_r, u_θ, u_φ)`; `u_θ` is zero for `n = 2`.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Gradient {
    pub fn of(grid: &Grid, u: &[f64]) -> Result<Self> {
        check_field(grid, u)?;
        Ok(Self {
            r: d_r(grid, u),
            theta: d_theta(grid, u),
            phi: d_phi(grid, u),
        })
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.r,
            1 => &self.theta,
            _ => &self.phi,
        }
    }
}

/// Overwrite the values at axis nodes (where chart densities are singular)
/// by quadratic extrapolation `f₀ = 3f₁ − 3f₂ + f₃` from the regular side:
/// along `θ` at the poles first, then along `r` at the origin.
pub fn fill_axis(grid: &Grid, values: &mut [f64]) {
    let np = grid.n_phi;
    let kt = grid.n_theta;
    if grid.dim == Dimension::Three {
        for j in 1..grid.radial_nodes() {
            for p in 0..np {
                let at = |v: &[f64], k: usize| v[grid.index(j, k) * np + p];
                let north = 3.0 * at(values, 1) - 3.0 * at(values, 2) + at(values, 3);
                let south = 3.0 * at(values, kt - 1) - 3.0 * at(values, kt - 2) + at(values, kt - 3);
                values[grid.index(j, 0) * np + p] = north;
                values[grid.index(j, kt) * np + p] = south;
            }
        }
    }
    for k in 0..grid.theta_nodes() {
        for p in 0..np {
            let at = |v: &[f64], j: usize| v[grid.index(j, k) * np + p];
            values[grid.index(0, k) * np + p] = 3.0 * at(values, 1) - 3.0 * at(values, 2) + at(values, 3);
        }
    }
}

/// Boundary analogue of [`fill_axis`] for samples `[k * n_phi + p]`.
pub fn fill_boundary_poles(grid: &Grid, values: &mut [f64]) {
    if grid.dim == Dimension::Two {
        return;
    }
    let np = grid.n_phi;
    let kt = grid.n_theta;
    for p in 0..np {
        let at = |v: &[f64], k: usize| v[k * np + p];
        values[p] = 3.0 * at(values, 1) - 3.0 * at(values, 2) + at(values, 3);
        values[kt * np + p] = 3.0 * at(values, kt - 1) - 3.0 * at(values, kt - 2) + at(values, kt - 3);
    }
}

/// Sample a function of `(r, θ, φ)` on every node.
pub fn sample(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let np = grid.n_phi;
    let mut out = Vec::with_capacity(grid.node_count() * np);
    for i in 0..grid.node_count() {
        let (j, k) = grid.split(i);
        for p in 0..np {
            out.push(f(grid.r(j), grid.theta(k), grid.phi(p)));
        }
    }
    out
}

/// Restriction of a field to the boundary nodes, `[k * n_phi + p]`.
pub fn boundary_values(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let np = grid.n_phi;
    (0..grid.boundary_node_count())
        .flat_map(|k| {
            let base = grid.boundary_index(k) * np;
            u[base..base + np].iter().copied()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::reduction::{HelicalConfig, Sign};

    fn grid3() -> Grid {
        let c = HelicalConfig::new(Dimension::Three, 0.4, 1.5, Sign::Plus).unwrap();
        build_grid(&c, &[20, 16], 7).unwrap()
    }

    #[test]
    fn quadratics_differentiate_exactly() {
        let g = grid3();
        let u = sample(&g, |r, t, p| r * r - 2.0 * r * t + t * t + p.cos() * r);
        let d = Gradient::of(&g, &u).unwrap();
        let ur = sample(&g, |r, t, p| 2.0 * r - 2.0 * t + p.cos());
        let ut = sample(&g, |r, t, _| -2.0 * r + 2.0 * t);
        let up = sample(&g, |r, _, p| -p.sin() * r);
        for i in 0..u.len() {
            assert!((d.r[i] - ur[i]).abs() < 1e-11);
            assert!((d.theta[i] - ut[i]).abs() < 1e-11);
            assert!((d.phi[i] - up[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fill_reproduces_quadratics() {
        let g = grid3();
        let exact = sample(&g, |r, t, p| 1.0 + r * r + t * t * p.sin() + r * t);
        let mut v = exact.clone();
        for i in 0..g.node_count() {
            let (j, k) = g.split(i);
            if g.is_axis(j, k) {
                for p in 0..g.n_phi {
                    v[i * g.n_phi + p] = f64::NAN;
                }
            }
        }
        fill_axis(&g, &mut v);
        for (a, b) in v.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_is_checked() {
        let g = grid3();
        assert!(Gradient::of(&g, &[0.0; 3]).is_err());
    }
}
