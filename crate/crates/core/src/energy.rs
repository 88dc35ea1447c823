//! Generalized energy integral, its integration-by-parts expansion, the
//! proof multiplier and the non-negative integrands of the uniqueness
//! argument.
//!
//! Everything is evaluated as densities in the solver chart `(r[, θ], φ)`.
//! The coefficient densities `h^{αα}` are diagonal there, so
//! `h^{αβ}u_αu_β = h_rr u_r² + h_θθ u_θ² + h_φφ u_φ²`. Densities are singular
//! term-by-term on the axis, so their axis values are filled by
//! extrapolation before quadrature.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{boundary_values, check_field, fill_axis, fill_boundary_poles, Gradient};
use crate::grid::Grid;
use crate::modes::{mode_operator_apply, synthesize_field, ModeField, ModeIndex, PhiTransform};
use crate::quadrature::{boundary_quadrature, volume_quadrature};
use crate::profiles::{ChartPolynomial, ManufacturedSolution};
use crate::reduction::{Dimension, HelicalConfig, ON_SPHERE_TOL};
use crate::solver::{gauge_weights, HelicalProblem};

/// Multiplier `a u + b^γ u_γ`. `b` holds chart components
/// `[b^r, b^φ]` (`n = 2`) or `[b^r, b^θ, b^φ]` (`n = 3`), node-major.
#[derive(Debug, Clone)]
pub struct Multiplier {
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
}

/// The multiplier of the uniqueness proof: `a = −1` and
/// `b = (2/(1−n))(ρ∂_ρ + zⁱ∂_i + sign·RΩ∂_φ)`, which in the chart is
/// `b^r = (2/(1−n)) r`, `b^θ = 0`, `b^φ = (2/(1−n)) sign·RΩ`.
#[derive(Debug, Clone, Copy)]
pub struct ProofMultiplier {
    pub config: HelicalConfig,
}

impl ProofMultiplier {
    pub fn new(config: HelicalConfig) -> Self {
        Self { config }
    }

    fn factor(&self) -> f64 {
        2.0 / (1.0 - self.config.n() as f64)
    }

    /// `b^α u_α` on `r = R` from the radial and helical derivatives.
    pub fn boundary_contraction(&self, u_r: f64, u_phi: f64) -> f64 {
        let c = &self.config;
        self.factor() * c.radius * (u_r + c.sign.value() * c.omega * u_phi)
    }

    pub fn sample(&self, grid: &Grid) -> Multiplier {
        let np = grid.n_phi;
        let total = grid.node_count() * np;
        let f = self.factor();
        let br: Vec<f64> = (0..total).map(|i| f * grid.r(grid.split(i / np).0)).collect();
        let bp = vec![f * self.config.sign.value() * self.config.radius * self.config.omega; total];
        let b = match grid.dim {
            Dimension::Two => vec![br, bp],
            Dimension::Three => vec![br, vec![0.0; total], bp],
        };
        Multiplier { a: vec![-1.0; total], b }
    }
}

impl Multiplier {
    fn check(&self, grid: &Grid) -> Result<()> {
        check_field(grid, &self.a)?;
        if self.b.len() != grid.n() {
            return Err(Error::ShapeMismatch {
                expected: grid.n(),
                found: self.b.len(),
            });
        }
        self.b.iter().try_for_each(|c| check_field(grid, c))
    }

    /// Components padded to `[b^r, b^θ, b^φ]`.
    fn chart(&self) -> [std::borrow::Cow<'_, [f64]>; 3] {
        use std::borrow::Cow;
        match self.b.len() {
            2 => [
                Cow::Borrowed(&self.b[0][..]),
                Cow::Owned(vec![0.0; self.b[0].len()]),
                Cow::Borrowed(&self.b[1][..]),
            ],
            _ => [
                Cow::Borrowed(&self.b[0][..]),
                Cow::Borrowed(&self.b[1][..]),
                Cow::Borrowed(&self.b[2][..]),
            ],
        }
    }
}

/// `∂_α(h^{αβ}u_β)` of a real field, through its Fourier modes.
pub fn density_operator(grid: &Grid, config: &HelicalConfig, u: &[f64]) -> Result<Vec<f64>> {
    check_field(grid, u)?;
    let m_max = PhiTransform::max_resolved(grid.n_phi);
    let modes = crate::modes::analyze_field(grid, u, m_max)?;
    let applied = modes
        .iter()
        .map(|mf| {
            Ok(ModeField {
                m: mf.m,
                values: mode_operator_apply(mf, grid, config)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(synthesize_field(grid, &applied)?.0)
}

fn check_pair(grid: &Grid, config: &HelicalConfig) -> Result<()> {
    if grid.dim != config.dim {
        return Err(Error::InvalidConfig("grid and configuration dimensions differ".into()));
    }
    Ok(())
}

/// `E[u] = ∫_B (a u + b^γ u_γ) ∂_α(h^{αβ}u_β)`.
pub fn energy_direct(u: &[f64], mult: &Multiplier, grid: &Grid, config: &HelicalConfig) -> Result<f64> {
    check_pair(grid, config)?;
    mult.check(grid)?;
    let lu = density_operator(grid, config, u)?;
    let g = Gradient::of(grid, u)?;
    let b = mult.chart();
    let mut dens: Vec<f64> = (0..u.len())
        .map(|i| {
            let bu = b[0][i] * g.r[i] + b[1][i] * g.theta[i] + b[2][i] * g.phi[i];
            (mult.a[i] * u[i] + bu) * lu[i]
        })
        .collect();
    fill_axis(grid, &mut dens);
    volume_quadrature(grid, &dens)
}

/// Volume and boundary terms of the expanded identity.
pub fn energy_expanded(u: &[f64], mult: &Multiplier, grid: &Grid, config: &HelicalConfig) -> Result<(f64, f64)> {
    let (dens, flux) = expanded_densities(u, mult, grid, config)?;
    Ok((volume_quadrature(grid, &dens)?, boundary_quadrature(grid, &flux)?))
}

/// Volume density and boundary flux `n_α(…)^α` of the expanded identity,
/// axis values filled.
pub fn expanded_densities(
    u: &[f64],
    mult: &Multiplier,
    grid: &Grid,
    config: &HelicalConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_pair(grid, config)?;
    mult.check(grid)?;
    let np = grid.n_phi;
    let gu = Gradient::of(grid, u)?;
    let ga = Gradient::of(grid, &mult.a)?;
    let la = density_operator(grid, config, &mult.a)?;
    let b = mult.chart();
    let gb: Vec<Gradient> = b.iter().map(|c| Gradient::of(grid, c)).collect::<Result<_>>()?;
    let mut dens = vec![0.0; u.len()];
    for node in 0..grid.node_count() {
        let (j, k) = grid.split(node);
        if grid.is_axis(j, k) {
            continue;
        }
        let c = grid.coefficients(j, k);
        let h = [c.h_rr, c.h_tt, c.h_pp];
        for p in 0..np {
            let i = node * np + p;
            let du = [gu.r[i], gu.theta[i], gu.phi[i]];
            let bv = [b[0][i], b[1][i], b[2][i]];
            let div_b = gb[0].r[i] + gb[1].theta[i] + gb[2].phi[i];
            let mut v = 0.5 * la[i] * u[i] * u[i];
            for al in 0..3 {
                let dh = bv[0] * c.dr[al] + bv[1] * c.dt[al];
                v += (-mult.a[i] * h[al] + 0.5 * (dh + h[al] * div_b)) * du[al] * du[al];
                for (ga_, gbg) in gb.iter().enumerate() {
                    v -= gbg.component(al)[i] * h[al] * du[ga_] * du[al];
                }
            }
            dens[i] = v;
        }
    }
    fill_axis(grid, &mut dens);

    let mut flux = vec![0.0; grid.boundary_node_count() * np];
    for k in 0..grid.boundary_node_count() {
        if grid.is_axis(grid.n_r, k) {
            continue;
        }
        let c = grid.coefficients(grid.n_r, k);
        let h = [c.h_rr, c.h_tt, c.h_pp];
        for p in 0..np {
            let i = grid.boundary_index(k) * np + p;
            let du = [gu.r[i], gu.theta[i], gu.phi[i]];
            let bu: f64 = (0..3).map(|g| b[g][i] * du[g]).sum();
            let quad: f64 = (0..3).map(|al| h[al] * du[al] * du[al]).sum();
            flux[k * np + p] = (mult.a[i] * u[i] + bu) * h[0] * du[0]
                - 0.5 * h[0] * ga.r[i] * u[i] * u[i]
                - 0.5 * b[0][i] * quad;
        }
    }
    fill_boundary_poles(grid, &mut flux);
    Ok((dens, flux))
}

/// `|E[u] − (volume + boundary)|`.
pub fn ibp_residual(u: &[f64], mult: &Multiplier, grid: &Grid, config: &HelicalConfig) -> Result<f64> {
    let e = energy_direct(u, mult, grid, config)?;
    let (v, b) = energy_expanded(u, mult, grid, config)?;
    Ok((e - v - b).abs())
}

/// Point sample for the volume integrand: `ρ`, `u_ρ`, `u_φ` and the
/// `n − 2` derivatives `u_i = ∂u/∂zⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSample {
    pub rho: f64,
    pub u_rho: f64,
    pub u_phi: f64,
    pub u_z: Vec<f64>,
}

/// Point sample on the boundary sphere: `ρ`, `zⁱ`, `u_i` and `u_φ`. The
/// dimension is `z.len() + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub rho: f64,
    pub z: Vec<f64>,
    pub u_z: Vec<f64>,
    pub u_phi: f64,
}

/// `(1/(n−1)) σ [u_ρ² + δ^{ij}u_iu_j + (1/ρ² + Ω²) u_φ²]`.
pub fn proof_volume_integrand(s: &VolumeSample, config: &HelicalConfig) -> Result<f64> {
    if s.rho <= 0.0 {
        return Err(Error::Domain(format!("volume integrand needs rho > 0, got {}", s.rho)));
    }
    let n = config.n();
    if s.u_z.len() != n - 2 {
        return Err(Error::ShapeMismatch {
            expected: n - 2,
            found: s.u_z.len(),
        });
    }
    let grad2 = s.u_rho * s.u_rho + s.u_z.iter().map(|v| v * v).sum::<f64>();
    let w2 = config.omega * config.omega;
    let helical = (1.0 / (s.rho * s.rho) + w2) * s.u_phi * s.u_phi;
    Ok(s.rho * (grad2 + helical) / (n as f64 - 1.0))
}

/// Boundary integrand and its lower bound. Returns `(integrand, lower)`.
pub fn proof_boundary_integrand(s: &BoundarySample, config: &HelicalConfig) -> Result<(f64, f64)> {
    if s.u_z.len() != s.z.len() {
        return Err(Error::ShapeMismatch {
            expected: s.z.len(),
            found: s.u_z.len(),
        });
    }
    if s.rho <= 0.0 {
        return Err(Error::Domain(format!("boundary integrand needs rho > 0, got {}", s.rho)));
    }
    let radius = config.radius;
    let z2: f64 = s.z.iter().map(|v| v * v).sum();
    let dist = ((s.rho * s.rho + z2).sqrt() - radius).abs();
    if dist > ON_SPHERE_TOL * radius.max(1.0) {
        return Err(Error::OffSphere { distance: dist });
    }
    let n = s.z.len() + 2;
    let sgn = config.sign.value();
    let w = config.omega;
    let zu: f64 = s.z.iter().zip(&s.u_z).map(|(a, b)| a * b).sum();
    let u2: f64 = s.u_z.iter().map(|v| v * v).sum();
    let pref = s.rho * (radius / (s.rho * s.rho)) / (n as f64 - 1.0);
    let up = s.u_phi;
    let integrand = pref
        * (zu * zu + s.rho * s.rho * u2 + (1.0 + w * w * z2) * up * up + sgn * 2.0 * radius * w * zu * up);
    // rotate zⁱ onto its first axis
    let (z1, u1) = match s.z.len() {
        0 => (0.0, 0.0),
        1 => (s.z[0], s.u_z[0]),
        _ => {
            let zn = z2.sqrt();
            if zn == 0.0 {
                (0.0, s.u_z[0])
            } else {
                (zn, zu / zn)
            }
        }
    };
    let sq = radius * u1 + sgn * w * z1 * up;
    let lower = pref * (up * up + sq * sq);
    Ok((integrand, lower))
}

fn cylindrical(grid: &Grid, j: usize, k: usize, u_r: f64, u_t: f64) -> (f64, f64) {
    match grid.dim {
        Dimension::Two => (u_r, 0.0),
        Dimension::Three => {
            let (s, c) = grid.theta(k).sin_cos();
            let r = grid.r(j);
            (s * u_r + c * u_t / r, c * u_r - s * u_t / r)
        }
    }
}

/// Chart densities of the two proof integrals, axis values filled.
pub fn proof_densities(u: &[f64], grid: &Grid, config: &HelicalConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    check_pair(grid, config)?;
    let g = Gradient::of(grid, u)?;
    let np = grid.n_phi;
    let w2 = config.omega * config.omega;
    let norm = 1.0 / (config.n() as f64 - 1.0);
    let mut vol = vec![0.0; u.len()];
    for node in 0..grid.node_count() {
        let (j, k) = grid.split(node);
        if grid.is_axis(j, k) {
            continue;
        }
        let c = grid.coefficients(j, k);
        let rho = grid.rho(j, k);
        let jac = c.sigma / rho;
        for p in 0..np {
            let i = node * np + p;
            vol[i] = norm
                * (c.h_rr * g.r[i] * g.r[i]
                    + c.h_tt * g.theta[i] * g.theta[i]
                    + jac * (1.0 / rho + w2 * rho) * g.phi[i] * g.phi[i]);
        }
    }
    fill_axis(grid, &mut vol);
    let mut bnd = vec![0.0; grid.boundary_node_count() * np];
    let jr = grid.n_r;
    let chart = config.radius.powi(config.n() as i32 - 2);
    for k in 0..grid.boundary_node_count() {
        if grid.is_axis(jr, k) {
            continue;
        }
        for p in 0..np {
            let i = grid.boundary_index(k) * np + p;
            let (_, u_z) = cylindrical(grid, jr, k, g.r[i], g.theta[i]);
            let sample = BoundarySample {
                rho: grid.rho(jr, k),
                z: if grid.dim == Dimension::Three { vec![grid.z(jr, k)] } else { vec![] },
                u_z: if grid.dim == Dimension::Three { vec![u_z] } else { vec![] },
                u_phi: g.phi[i],
            };
            bnd[k * np + p] = chart * proof_boundary_integrand(&sample, config)?.0;
        }
    }
    fill_boundary_poles(grid, &mut bnd);
    Ok((vol, bnd))
}

/// Smallest volume integrand and smallest `integrand − lower` over the
/// non-axis nodes.
pub fn integrand_minima(u: &[f64], grid: &Grid, config: &HelicalConfig) -> Result<(f64, f64)> {
    let g = Gradient::of(grid, u)?;
    let np = grid.n_phi;
    let mut min_vol = f64::INFINITY;
    for node in 0..grid.node_count() {
        let (j, k) = grid.split(node);
        if grid.is_axis(j, k) {
            continue;
        }
        for p in 0..np {
            let i = node * np + p;
            let (u_rho, u_z) = cylindrical(grid, j, k, g.r[i], g.theta[i]);
            let s = VolumeSample {
                rho: grid.rho(j, k),
                u_rho,
                u_phi: g.phi[i],
                u_z: if grid.dim == Dimension::Three { vec![u_z] } else { vec![] },
            };
            min_vol = min_vol.min(proof_volume_integrand(&s, config)?);
        }
    }
    let mut min_gap = f64::INFINITY;
    let jr = grid.n_r;
    for k in 0..grid.boundary_node_count() {
        if grid.is_axis(jr, k) {
            continue;
        }
        for p in 0..np {
            let i = grid.boundary_index(k) * np + p;
            let (_, u_z) = cylindrical(grid, jr, k, g.r[i], g.theta[i]);
            let s = BoundarySample {
                rho: grid.rho(jr, k),
                z: if grid.dim == Dimension::Three { vec![grid.z(jr, k)] } else { vec![] },
                u_z: if grid.dim == Dimension::Three { vec![u_z] } else { vec![] },
                u_phi: g.phi[i],
            };
            let (v, lo) = proof_boundary_integrand(&s, config)?;
            min_gap = min_gap.min(v - lo);
        }
    }
    Ok((min_vol, min_gap))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub e_direct: f64,
    pub volume_term: f64,
    /// `∫|volume density|`, a cancellation-free size of the volume term.
    pub volume_magnitude: f64,
    pub boundary_term: f64,
    pub ibp_residual: f64,
    pub min_volume_integrand: f64,
    pub min_boundary_gap: f64,
}

pub fn energy_report(u: &[f64], mult: &Multiplier, grid: &Grid, config: &HelicalConfig) -> Result<EnergyReport> {
    let e = energy_direct(u, mult, grid, config)?;
    let (dens, flux) = expanded_densities(u, mult, grid, config)?;
    let v = volume_quadrature(grid, &dens)?;
    let b = boundary_quadrature(grid, &flux)?;
    let abs: Vec<f64> = dens.iter().map(|d| d.abs()).collect();
    let (min_volume_integrand, min_boundary_gap) = integrand_minima(u, grid, config)?;
    Ok(EnergyReport {
        e_direct: e,
        volume_term: v,
        volume_magnitude: volume_quadrature(grid, &abs)?,
        boundary_term: b,
        ibp_residual: (e - v - b).abs(),
        min_volume_integrand,
        min_boundary_gap,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// Largest chart-gradient component of `d = u₁ − u₂`.
    pub gradient_max: f64,
    /// `sup |d − mean_σ(d)|`.
    pub mean_adjusted_sup: f64,
    /// Same, relative to `sup |u₁|`.
    pub relative_difference: f64,
    pub volume_total: f64,
    pub boundary_total: f64,
    /// `∫` of the volume proof integrand of `u₁`, the energy scale.
    pub scale: f64,
    pub h_rel: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Certificate that two solutions of the same problem differ by a constant.
/// Passes when the relative difference is within `tolerance` and both proof
/// totals of the difference are at most `10 h² · scale`.
pub fn uniqueness_certificate(u1: &[f64], u2: &[f64], problem: &HelicalProblem, tolerance: f64) -> Result<UniquenessReport> {
    let grid = &problem.grid;
    let config = &problem.config;
    check_field(grid, u1)?;
    check_field(grid, u2)?;
    let d: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| a - b).collect();
    let g = Gradient::of(grid, &d)?;
    let gradient_max = [&g.r, &g.theta, &g.phi]
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let np = grid.n_phi;
    let w = gauge_weights(grid);
    let total: f64 = w.iter().sum::<f64>() * np as f64;
    let mean: f64 = d.iter().enumerate().map(|(i, v)| w[i / np] * v).sum::<f64>() / total;
    let mean_adjusted_sup = d.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    let u_sup = u1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let relative_difference = mean_adjusted_sup / u_sup.max(f64::MIN_POSITIVE);
    let (vd, bd) = proof_densities(&d, grid, config)?;
    let volume_total = volume_quadrature(grid, &vd)?;
    let boundary_total = boundary_quadrature(grid, &bd)?;
    let (v1, _) = proof_densities(u1, grid, config)?;
    let scale = volume_quadrature(grid, &v1)?;
    let h_rel = grid.h_rel();
    let bound = 10.0 * h_rel * h_rel * scale;
    let passed = relative_difference <= tolerance && volume_total.abs() <= bound && boundary_total.abs() <= bound;
    Ok(UniquenessReport {
        gradient_max,
        mean_adjusted_sup,
        relative_difference,
        volume_total,
        boundary_total,
        scale,
        h_rel,
        tolerance,
        passed,
    })
}

/// Sampled `b^α u_α` of the proof multiplier on the boundary, using the
/// solver's one-sided radial difference and spectral `∂_φ`.
pub fn proof_boundary_contraction(u: &[f64], grid: &Grid, config: &HelicalConfig) -> Result<Vec<f64>> {
    check_pair(grid, config)?;
    check_field(grid, u)?;
    let np = grid.n_phi;
    let pm = ProofMultiplier::new(*config);
    let jr = grid.n_r;
    let h = grid.h_r;
    let ub = boundary_values(grid, u);
    let t = PhiTransform::new(np, PhiTransform::max_resolved(np))?;
    let mut out = vec![0.0; ub.len()];
    let mut dphi = vec![0.0; np];
    for k in 0..grid.boundary_node_count() {
        t.derivative_into(&ub[k * np..(k + 1) * np], &mut dphi);
        for p in 0..np {
            let at = |j: usize| u[grid.index(j, k) * np + p];
            let ur = (3.0 * at(jr) - 4.0 * at(jr - 1) + at(jr - 2)) / (2.0 * h);
            out[k * np + p] = pm.boundary_contraction(ur, dphi[p]);
        }
    }
    Ok(out)
}

/// Mode coefficients of a real field's `φ` derivative (testing helper).
pub fn phi_derivative_modes(values: &[Complex64], m: ModeIndex) -> Vec<Complex64> {
    let f = Complex64::new(0.0, m.0 as f64);
    values.iter().map(|v| v * f).collect()
}

/// Random low-degree field and multiplier built from regular mode profiles
/// (|m| ≤ 2 for `u`, |m| ≤ 1 for `a`) and chart polynomials of bandwidth 1.
pub fn random_smooth_pair<R: rand::Rng + ?Sized>(grid: &Grid, rng: &mut R) -> (Vec<f64>, Multiplier) {
    let u = ManufacturedSolution::random_with_degree(2, grid.dim, 0, 1, rng).sample_value(grid);
    let a = ManufacturedSolution::random_with_degree(1, grid.dim, 0, 1, rng).sample_value(grid);
    let b = (0..grid.n())
        .map(|_| ChartPolynomial::random(grid.dim, 1, rng).sample(grid))
        .collect();
    (u, Multiplier { a, b })
}
