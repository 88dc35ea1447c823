//! Fourier decomposition in the helical angle and the per-mode operator.
//!
//! Convention: `u(φ) = Σ_m u_m e^{imφ}` with `u_m = (1/N) Σ_p u(φ_p) e^{-imφ_p}`.
//! Coefficients carry the full field, so a real field has
//! `u_{-m} = conj(u_m)`. Substituting `∂_φ → im` turns the density-form
//! operator into `L_m u = ∂_r(h^{rr} u_r) + ∂_θ(h^{θθ} u_θ) - m² h^{φφ} u`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::reduction::{Dimension, HelicalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex(pub i32);

impl ModeIndex {
    pub fn m(self) -> i32 {
        self.0
    }

    pub fn abs(self) -> usize {
        self.0.unsigned_abs() as usize
    }
}

/// One Fourier mode of a field, sampled at every node of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub m: ModeIndex,
    pub values: Vec<Complex64>,
}

/// Tabulated `e^{-imφ_p}` for a fixed angular grid.
#[derive(Debug, Clone)]
pub struct PhiTransform {
    n_phi: usize,
    m_max: usize,
    /// `table[(m + M) * N + p] = e^{-imφ_p}`
    table: Vec<Complex64>,
}

impl PhiTransform {
    pub fn new(n_phi: usize, m_max: usize) -> Result<Self> {
        if n_phi < 2 * m_max + 1 {
            return Err(Error::AngularResolution { n_phi, m_max });
        }
        let mm = m_max as i64;
        let mut table = Vec::with_capacity((2 * m_max + 1) * n_phi);
        for m in -mm..=mm {
            for p in 0..n_phi {
                // reduce m·p mod N before scaling to keep the phase exact
                let k = (m * p as i64).rem_euclid(n_phi as i64) as f64;
                let angle = -2.0 * PI * k / n_phi as f64;
                table.push(Complex64::from_polar(1.0, angle));
            }
        }
        Ok(Self { n_phi, m_max, table })
    }

    /// Largest mode index a grid of `n_phi` samples resolves without aliasing
    /// onto the Nyquist frequency.
    pub fn max_resolved(n_phi: usize) -> usize {
        (n_phi.max(1) - 1) / 2
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn analyze(&self, samples: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(samples.len(), self.n_phi);
        let inv = 1.0 / self.n_phi as f64;
        self.table
            .chunks_exact(self.n_phi)
            .map(|row| row.iter().zip(samples).map(|(e, &f)| e * f).sum::<Complex64>() * inv)
            .collect()
    }

    /// Real part of the synthesis; the caller decides whether the imaginary
    /// residue matters.
    pub fn synthesize_into(&self, modes: &[Complex64], out: &mut [f64]) {
        debug_assert_eq!(modes.len(), 2 * self.m_max + 1);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (row, c) in self.table.chunks_exact(self.n_phi).zip(modes) {
            for (o, e) in out.iter_mut().zip(row) {
                // e^{+imφ} = conj(e^{-imφ})
                *o += c.re * e.re + c.im * e.im;
            }
        }
    }

    pub fn synthesize_complex(&self, modes: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_phi];
        for (row, c) in self.table.chunks_exact(self.n_phi).zip(modes) {
            for (o, e) in out.iter_mut().zip(row) {
                *o += c * e.conj();
            }
        }
        out
    }

    /// Spectral `∂_φ` of band-limited samples.
    pub fn derivative_into(&self, samples: &[f64], out: &mut [f64]) {
        let mut modes = self.analyze(samples);
        let mm = self.m_max as i32;
        for (i, c) in modes.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, (i as i32 - mm) as f64);
        }
        self.synthesize_into(&modes, out);
    }
}

/// Largest defect `|u_{-m} - conj(u_m)|` of a centred coefficient vector.
pub fn conjugate_defect(modes: &[Complex64]) -> f64 {
    let mm = modes.len() / 2;
    (0..=mm)
        .map(|i| (modes[mm + i] - modes[mm - i].conj()).norm())
        .fold(0.0, f64::max)
}

/// Coefficients `u_m`, `m = -M..=M` (index `m + M`), of samples on a uniform
/// `φ` grid.
pub fn analyze_phi(samples: &[f64], m_max: usize) -> Result<Vec<Complex64>> {
    Ok(PhiTransform::new(samples.len(), m_max)?.analyze(samples))
}

/// Inverse of [`analyze_phi`]. Rejects coefficients whose synthesis would
/// carry an imaginary part.
pub fn synthesize_phi(modes: &[Complex64], n_phi: usize) -> Result<Vec<f64>> {
    if modes.len() % 2 == 0 {
        return Err(Error::ShapeMismatch {
            expected: modes.len() + 1,
            found: modes.len(),
        });
    }
    let m_max = modes.len() / 2;
    let scale = modes.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let defect = conjugate_defect(modes);
    if defect > 1e-12 * scale.max(1e-300) {
        return Err(Error::NotConjugateSymmetric { defect });
    }
    let t = PhiTransform::new(n_phi, m_max)?;
    let mut out = vec![0.0; n_phi];
    t.synthesize_into(modes, &mut out);
    Ok(out)
}

/// Split a node-major field (`values[node * n_phi + p]`) into modes
/// `-M..=M`.
pub fn analyze_field(grid: &Grid, samples: &[f64], m_max: usize) -> Result<Vec<ModeField>> {
    let expected = grid.node_count() * grid.n_phi;
    if samples.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: samples.len(),
        });
    }
    let t = PhiTransform::new(grid.n_phi, m_max)?;
    let mut modes: Vec<ModeField> = (-(m_max as i32)..=m_max as i32)
        .map(|m| ModeField {
            m: ModeIndex(m),
            values: Vec::with_capacity(grid.node_count()),
        })
        .collect();
    for node in samples.chunks_exact(grid.n_phi) {
        for (mf, c) in modes.iter_mut().zip(t.analyze(node)) {
            mf.values.push(c);
        }
    }
    Ok(modes)
}

/// Boundary analogue of [`analyze_field`] for samples `tau[k * n_phi + p]`.
pub fn analyze_boundary(grid: &Grid, samples: &[f64], m_max: usize) -> Result<Vec<Vec<Complex64>>> {
    let expected = grid.boundary_node_count() * grid.n_phi;
    if samples.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: samples.len(),
        });
    }
    let t = PhiTransform::new(grid.n_phi, m_max)?;
    let mut out = vec![Vec::with_capacity(grid.boundary_node_count()); 2 * m_max + 1];
    for node in samples.chunks_exact(grid.n_phi) {
        for (o, c) in out.iter_mut().zip(t.analyze(node)) {
            o.push(c);
        }
    }
    Ok(out)
}

/// Recombine modes `-M..=M` into a real node-major field. Returns the field
/// and the largest imaginary residue relative to the largest sample.
pub fn synthesize_field(grid: &Grid, modes: &[ModeField]) -> Result<(Vec<f64>, f64)> {
    if modes.len() % 2 == 0 {
        return Err(Error::ShapeMismatch {
            expected: modes.len() + 1,
            found: modes.len(),
        });
    }
    let m_max = modes.len() / 2;
    let t = PhiTransform::new(grid.n_phi, m_max)?;
    let nodes = grid.node_count();
    for mf in modes {
        if mf.values.len() != nodes {
            return Err(Error::ShapeMismatch {
                expected: nodes,
                found: mf.values.len(),
            });
        }
    }
    let mut out = vec![0.0; nodes * grid.n_phi];
    let mut max_im: f64 = 0.0;
    let mut max_re: f64 = 0.0;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); modes.len()];
    for node in 0..nodes {
        for (c, mf) in coeffs.iter_mut().zip(modes) {
            *c = mf.values[node];
        }
        let full = t.synthesize_complex(&coeffs);
        for (o, v) in out[node * grid.n_phi..(node + 1) * grid.n_phi].iter_mut().zip(&full) {
            *o = v.re;
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
        }
    }
    let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    Ok((out, residue))
}

#[inline]
fn one_sided_first(u0: Complex64, u1: Complex64, u2: Complex64, h: f64) -> Complex64 {
    // backward difference at the last node: (3u_J - 4u_{J-1} + u_{J-2}) / 2h
    (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * h)
}

#[inline]
fn one_sided_second(u0: Complex64, u1: Complex64, u2: Complex64, u3: Complex64, h: f64) -> Complex64 {
    (2.0 * u0 - 5.0 * u1 + 4.0 * u2 - u3) / (h * h)
}

fn check_mode(mode: &ModeField, grid: &Grid, config: &HelicalConfig) -> Result<()> {
    if config.dim != grid.dim {
        return Err(Error::InvalidConfig(format!(
            "configuration is {}-dimensional but the grid is {}-dimensional",
            config.n(),
            grid.n()
        )));
    }
    if mode.values.len() != grid.node_count() {
        return Err(Error::ShapeMismatch {
            expected: grid.node_count(),
            found: mode.values.len(),
        });
    }
    Ok(())
}

/// Density-weighted residual `L_m u` at every node (solver chart).
///
/// Interior nodes use the flux-form stencil; nodes on `r = R` use second-order
/// one-sided differences in `r`. The density carries a factor `σ` that
/// vanishes on the axis, so axis nodes report zero.
pub fn mode_operator_apply(
    mode: &ModeField,
    grid: &Grid,
    config: &HelicalConfig,
) -> Result<Vec<Complex64>> {
    check_mode(mode, grid, config)?;
    let u = &mode.values;
    let m2 = (mode.m.0 as f64).powi(2);
    let h = grid.h_r;
    let jr = grid.n_r;
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    match grid.dim {
        Dimension::Two => {
            for j in 1..jr {
                let rp = grid.r(j) + 0.5 * h;
                let rm = grid.r(j) - 0.5 * h;
                let flux = (rp * (u[j + 1] - u[j]) - rm * (u[j] - u[j - 1])) / (h * h);
                out[j] = flux - m2 * grid.coefficients(j, 0).h_pp * u[j];
            }
            let c = grid.coefficients(jr, 0);
            let ur = one_sided_first(u[jr], u[jr - 1], u[jr - 2], h);
            let urr = one_sided_second(u[jr], u[jr - 1], u[jr - 2], u[jr - 3], h);
            out[jr] = c.dr[0] * ur + c.h_rr * urr - m2 * c.h_pp * u[jr];
        }
        Dimension::Three => {
            let kt = grid.n_theta;
            let ht = grid.h_theta;
            let at = |j: usize, k: usize| u[grid.index(j, k)];
            for j in 1..=jr {
                for k in 1..kt {
                    let c = grid.coefficients(j, k);
                    let s = grid.theta(k).sin();
                    let radial = if j < jr {
                        let rp = grid.r(j) + 0.5 * h;
                        let rm = grid.r(j) - 0.5 * h;
                        s * (rp * rp * (at(j + 1, k) - at(j, k)) - rm * rm * (at(j, k) - at(j - 1, k)))
                            / (h * h)
                    } else {
                        let ur = one_sided_first(at(j, k), at(j - 1, k), at(j - 2, k), h);
                        let urr =
                            one_sided_second(at(j, k), at(j - 1, k), at(j - 2, k), at(j - 3, k), h);
                        c.dr[0] * ur + c.h_rr * urr
                    };
                    let tp = (grid.theta(k) + 0.5 * ht).sin();
                    let tm = (grid.theta(k) - 0.5 * ht).sin();
                    let polar =
                        (tp * (at(j, k + 1) - at(j, k)) - tm * (at(j, k) - at(j, k - 1))) / (ht * ht);
                    out[grid.index(j, k)] = radial + polar - m2 * c.h_pp * at(j, k);
                }
            }
        }
    }
    Ok(out)
}

/// Outward radial derivative at every boundary node by the second-order
/// one-sided difference.
pub fn boundary_radial_derivative(values: &[Complex64], grid: &Grid) -> Vec<Complex64> {
    let jr = grid.n_r;
    (0..grid.boundary_node_count())
        .map(|k| {
            one_sided_first(
                values[grid.index(jr, k)],
                values[grid.index(jr - 1, k)],
                values[grid.index(jr - 2, k)],
                grid.h_r,
            )
        })
        .collect()
}

/// Sommerfeld residual `u_r + sign·imΩ u_m - τ_m` per boundary node.
///
/// On `r = R` the Euler operator `(1/R)(ρ∂_ρ + zⁱ∂_i)` equals `∂_r`, so the
/// radial derivative is taken directly along the chart coordinate.
pub fn mode_boundary_residual(
    mode: &ModeField,
    tau: &[Complex64],
    grid: &Grid,
    config: &HelicalConfig,
) -> Result<Vec<Complex64>> {
    check_mode(mode, grid, config)?;
    if tau.len() != grid.boundary_node_count() {
        return Err(Error::ShapeMismatch {
            expected: grid.boundary_node_count(),
            found: tau.len(),
        });
    }
    let rot = Complex64::new(0.0, config.sign.value() * mode.m.0 as f64 * config.omega);
    let ur = boundary_radial_derivative(&mode.values, grid);
    Ok(ur
        .iter()
        .enumerate()
        .map(|(k, d)| d + rot * mode.values[grid.boundary_index(k)] - tau[k])
        .collect())
}

/// `(1/R)(ρ u_ρ + zⁱ u_i)` from cylindrical derivatives.
pub fn euler_radial_derivative(rho: f64, z: &[f64], u_rho: f64, u_z: &[f64], radius: f64) -> f64 {
    (rho * u_rho + z.iter().zip(u_z).map(|(a, b)| a * b).sum::<f64>()) / radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::reduction::Sign;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg(n: usize, omega: f64, radius: f64) -> HelicalConfig {
        HelicalConfig::new(Dimension::from_usize(n).unwrap(), omega, radius, Sign::Plus).unwrap()
    }

    #[test]
    fn constant_and_cosine() {
        let n = 9;
        let modes = analyze_phi(&vec![2.5; n], 3).unwrap();
        for (i, m) in modes.iter().enumerate() {
            let expect = if i == 3 { 2.5 } else { 0.0 };
            assert!((m - c(expect, 0.0)).norm() < 1e-15);
        }
        let samples: Vec<f64> = (0..n).map(|p| (2.0 * PI * p as f64 / n as f64).cos()).collect();
        let modes = analyze_phi(&samples, 3).unwrap();
        for (i, m) in modes.iter().enumerate() {
            let expect = if i == 2 || i == 4 { 0.5 } else { 0.0 };
            assert!((m - c(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn synthesis_examples() {
        let one = synthesize_phi(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], 7).unwrap();
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-15));
        // u_{±1} = ∓i/2 gives sin φ
        let sine = synthesize_phi(&[c(0.0, 0.5), c(0.0, 0.0), c(0.0, -0.5)], 7).unwrap();
        for (p, v) in sine.iter().enumerate() {
            assert!((v - (2.0 * PI * p as f64 / 7.0).sin()).abs() < 1e-15);
        }
        assert!(matches!(
            synthesize_phi(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 7),
            Err(Error::NotConjugateSymmetric { .. })
        ));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            analyze_phi(&[0.0; 6], 3),
            Err(Error::AngularResolution { n_phi: 6, m_max: 3 })
        ));
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [9usize, 16, 33] {
            let m_max = (n - 1) / 2;
            // band-limited real data
            let mut modes = vec![c(0.0, 0.0); 2 * m_max + 1];
            modes[m_max] = c(rng.random_range(-1.0..1.0), 0.0);
            for m in 1..=m_max {
                let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                modes[m_max + m] = v;
                modes[m_max - m] = v.conj();
            }
            let f = synthesize_phi(&modes, n).unwrap();
            let back = analyze_phi(&f, m_max).unwrap();
            for (a, b) in modes.iter().zip(&back) {
                assert!((a - b).norm() < 1e-13);
            }
            let again = synthesize_phi(&back, n).unwrap();
            let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in f.iter().zip(&again) {
                assert!((a - b).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn operator_on_quadratic_profile() {
        let cf = cfg(2, 1.0, 2.0);
        let g = build_grid(&cf, &[64], 4).unwrap();
        let u = ModeField {
            m: ModeIndex(0),
            values: (0..=64).map(|j| c(g.r(j).powi(2) / 4.0, 0.0)).collect(),
        };
        let out = mode_operator_apply(&u, &g, &cf).unwrap();
        for j in 1..=64 {
            assert!((out[j] - c(g.r(j), 0.0)).norm() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn operator_annihilates_constants() {
        for (n, res) in [(2usize, vec![32usize]), (3, vec![24, 20])] {
            let cf = cfg(n, 1.0, 2.0);
            let g = build_grid(&cf, &res, 4).unwrap();
            let u = ModeField {
                m: ModeIndex(0),
                values: vec![c(3.0, -1.0); g.node_count()],
            };
            let out = mode_operator_apply(&u, &g, &cf).unwrap();
            assert!(out.iter().all(|v| v.norm() < 1e-10));
        }
    }

    #[test]
    fn operator_on_linear_m1_profile() {
        // u = ρ, m = 1: (ρ·1)' - (χ/ρ)ρ = Ω²ρ²
        let cf = cfg(2, 1.3, 2.0);
        for jn in [32usize, 64] {
            let g = build_grid(&cf, &[jn], 4).unwrap();
            let u = ModeField {
                m: ModeIndex(1),
                values: (0..=jn).map(|j| c(g.r(j), 0.0)).collect(),
            };
            let out = mode_operator_apply(&u, &g, &cf).unwrap();
            for j in 1..=jn {
                let exact = 1.3f64.powi(2) * g.r(j).powi(2);
                assert!((out[j].re - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn operator_dimension_mismatch() {
        let g = build_grid(&cfg(2, 1.0, 2.0), &[32], 4).unwrap();
        let u = ModeField {
            m: ModeIndex(0),
            values: vec![c(0.0, 0.0); g.node_count()],
        };
        assert!(mode_operator_apply(&u, &g, &cfg(3, 1.0, 2.0)).is_err());
        let short = ModeField {
            m: ModeIndex(0),
            values: vec![c(0.0, 0.0); 3],
        };
        assert!(matches!(
            mode_operator_apply(&short, &g, &cfg(2, 1.0, 2.0)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn boundary_residual_examples() {
        let cf = cfg(2, 1.5, 1.0);
        let g = build_grid(&cf, &[32], 4).unwrap();
        let ones = |m| ModeField {
            m: ModeIndex(m),
            values: vec![c(1.0, 0.0); g.node_count()],
        };
        let r = mode_boundary_residual(&ones(0), &[c(0.0, 0.0)], &g, &cf).unwrap();
        assert!(r[0].norm() < 1e-12);
        let r = mode_boundary_residual(&ones(1), &[c(0.0, 0.0)], &g, &cf).unwrap();
        assert!((r[0] - c(0.0, 1.5)).norm() < 1e-12);
        // quadratic profiles are differentiated exactly by the one-sided rule
        let q = ModeField {
            m: ModeIndex(0),
            values: (0..=32).map(|j| c(g.r(j).powi(2) / 4.0, 0.0)).collect(),
        };
        let r = mode_boundary_residual(&q, &[c(0.5, 0.0)], &g, &cf).unwrap();
        assert!(r[0].norm() < 1e-12);
        assert!(mode_boundary_residual(&q, &[], &g, &cf).is_err());
    }

    #[test]
    fn euler_operator_is_radial_derivative() {
        // u = x² + 3yz on the sphere of radius 2 (n = 3)
        let radius = 2.0;
        let (theta, phi) = (0.8f64, 0.3f64);
        let rho = radius * theta.sin();
        let z = radius * theta.cos();
        // along the fixed-φ slice x = ρ cosφ, y = ρ sinφ
        let (sp, cp) = phi.sin_cos();
        let u_rho = 2.0 * rho * cp * cp + 3.0 * sp * z;
        let u_z = 3.0 * rho * sp;
        let u_r = 2.0 * (rho * rho * cp * cp + 3.0 * rho * sp * z) / radius;
        let e = euler_radial_derivative(rho, &[z], u_rho, &[u_z], radius);
        assert!((e - u_r).abs() < 1e-14);
    }
}
