//! Analytic fields used as oracles: manufactured solutions, random smooth
//! fields and multipliers, and fields obeying the homogeneous boundary
//! condition exactly.
//!
//! Solutions are built per mode from monomials `ρ^a z^b` with `a ≥ |m|` and
//! `a − |m|` even, so `ρ^a z^b e^{imφ}` is a polynomial in Cartesian
//! coordinates and the field is smooth across the axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::Grid;
use crate::reduction::{Dimension, HelicalConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub a: u32,
    pub b: u32,
    pub c: Complex64,
}

/// `p_m(ρ, z) = Σ c ρ^a z^b`, the coefficient of `e^{imφ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub m: i32,
    pub terms: Vec<Monomial>,
}

fn powi(x: f64, k: i64) -> f64 {
    if k < 0 {
        0.0
    } else {
        x.powi(k as i32)
    }
}

impl ModeProfile {
    pub fn new(m: i32, terms: Vec<Monomial>) -> Self {
        for t in &terms {
            let am = m.unsigned_abs();
            assert!(t.a >= am && (t.a - am) % 2 == 0, "ρ^{} is not regular for m = {m}", t.a);
        }
        Self { m, terms }
    }

    /// Random profile with degrees `a ∈ {|m|, |m|+2}` and `b ≤ 2` (`b = 0`
    /// in two dimensions). Coefficients are real for `m = 0`.
    pub fn random<R: Rng + ?Sized>(m: i32, dim: Dimension, rng: &mut R) -> Self {
        Self::random_with_degree(m, dim, 2, 2, rng)
    }

    /// Random profile with `a ∈ |m| + {0, 2, …, extra}` and `b ≤ max_b`.
    pub fn random_with_degree<R: Rng + ?Sized>(m: i32, dim: Dimension, extra: u32, max_b: u32, rng: &mut R) -> Self {
        let am = m.unsigned_abs();
        let max_b = if dim == Dimension::Three { max_b } else { 0 };
        let mut terms = Vec::new();
        for a in (am..=am + extra).step_by(2) {
            for b in 0..=max_b {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = if m == 0 { 0.0 } else { StandardNormal.sample(rng) };
                terms.push(Monomial {
                    a,
                    b,
                    c: Complex64::new(re, im) / (1.0 + (a + b) as f64),
                });
            }
        }
        Self::new(m, terms)
    }

    pub fn conj(&self) -> Self {
        Self {
            m: -self.m,
            terms: self
                .terms
                .iter()
                .map(|t| Monomial { c: t.c.conj(), ..t.clone() })
                .collect(),
        }
    }

    pub fn value(&self, rho: f64, z: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.c * powi(rho, t.a as i64) * powi(z, t.b as i64))
            .sum()
    }

    /// Unweighted source `f_m` with `∂_α(h^{αβ}u_β) = σ f` for this mode.
    pub fn source(&self, rho: f64, z: f64, omega: f64) -> Complex64 {
        let m2 = (self.m as f64).powi(2);
        self.terms
            .iter()
            .map(|t| {
                let (a, b) = (t.a as i64, t.b as i64);
                let radial = ((a * a) as f64 - m2) * powi(rho, a - 2) * powi(z, b);
                let axial = (b * (b - 1)) as f64 * powi(rho, a) * powi(z, b - 2);
                let helical = m2 * omega * omega * powi(rho, a) * powi(z, b);
                t.c * (radial + axial + helical)
            })
            .sum()
    }

    /// `(ρ ∂_ρ + z ∂_z) p_m / r` at a point of radius `r`.
    pub fn radial_derivative(&self, rho: f64, z: f64) -> Complex64 {
        let r = rho.hypot(z);
        self.terms
            .iter()
            .map(|t| t.c * (t.a + t.b) as f64 * powi(rho, t.a as i64) * powi(z, t.b as i64) / r)
            .sum()
    }

    /// Sommerfeld data `u_r + sign·imΩ u` on the boundary.
    pub fn tau(&self, rho: f64, z: f64, config: &HelicalConfig) -> Complex64 {
        let rot = Complex64::new(0.0, config.sign.value() * self.m as f64 * config.omega);
        self.radial_derivative(rho, z) + rot * self.value(rho, z)
    }
}

/// A real field `Σ_m p_m(ρ, z) e^{imφ}` given by profiles for `m ≥ 0`; the
/// negative modes are the conjugates.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub profiles: Vec<ModeProfile>,
}

fn cyl(r: f64, theta: f64) -> (f64, f64) {
    (r * theta.sin(), r * theta.cos())
}

impl ManufacturedSolution {
    pub fn random<R: Rng + ?Sized>(m_max: usize, dim: Dimension, rng: &mut R) -> Self {
        Self {
            profiles: (0..=m_max as i32).map(|m| ModeProfile::random(m, dim, rng)).collect(),
        }
    }

    pub fn random_with_degree<R: Rng + ?Sized>(m_max: usize, dim: Dimension, extra: u32, max_b: u32, rng: &mut R) -> Self {
        Self {
            profiles: (0..=m_max as i32)
                .map(|m| ModeProfile::random_with_degree(m, dim, extra, max_b, rng))
                .collect(),
        }
    }

    pub fn m_max(&self) -> usize {
        self.profiles.iter().map(|p| p.m.unsigned_abs() as usize).max().unwrap_or(0)
    }

    fn real_sum(&self, phi: f64, f: impl Fn(&ModeProfile) -> Complex64) -> f64 {
        self.profiles
            .iter()
            .map(|p| {
                let v = f(p) * Complex64::from_polar(1.0, p.m as f64 * phi);
                if p.m == 0 {
                    v.re
                } else {
                    2.0 * v.re
                }
            })
            .sum()
    }

    pub fn value(&self, r: f64, theta: f64, phi: f64) -> f64 {
        let (rho, z) = cyl(r, theta);
        self.real_sum(phi, |p| p.value(rho, z))
    }

    pub fn source(&self, r: f64, theta: f64, phi: f64, omega: f64) -> f64 {
        let (rho, z) = cyl(r, theta);
        self.real_sum(phi, |p| p.source(rho, z, omega))
    }

    pub fn tau(&self, theta: f64, phi: f64, config: &HelicalConfig) -> f64 {
        let (rho, z) = cyl(config.radius, theta);
        self.real_sum(phi, |p| p.tau(rho, z, config))
    }

    /// Profile for mode `m` (conjugated for negative `m`), if present.
    pub fn mode(&self, m: i32) -> Option<ModeProfile> {
        let p = self.profiles.iter().find(|p| p.m == m.abs())?;
        Some(if m < 0 { p.conj() } else { p.clone() })
    }

    /// Samples `Σ_m f(p_m, ρ, z) e^{imφ}` (real part, conjugate modes
    /// included) with one profile evaluation per node.
    fn sample_with(&self, grid: &Grid, f: impl Fn(&ModeProfile, f64, f64) -> Complex64) -> Vec<f64> {
        let np = grid.n_phi;
        let phases: Vec<Vec<Complex64>> = self
            .profiles
            .iter()
            .map(|p| {
                let scale = if p.m == 0 { 1.0 } else { 2.0 };
                (0..np).map(|q| Complex64::from_polar(scale, p.m as f64 * grid.phi(q))).collect()
            })
            .collect();
        let mut out = vec![0.0; grid.node_count() * np];
        for (node, row) in out.chunks_exact_mut(np).enumerate() {
            let (j, k) = grid.split(node);
            let (rho, z) = cyl(grid.r(j), grid.theta(k));
            for (p, ph) in self.profiles.iter().zip(&phases) {
                let v = f(p, rho, z);
                row.iter_mut().zip(ph).for_each(|(o, e)| *o += (v * e).re);
            }
        }
        out
    }

    pub fn sample_value(&self, grid: &Grid) -> Vec<f64> {
        self.sample_with(grid, |p, rho, z| p.value(rho, z))
    }

    pub fn sample_source(&self, grid: &Grid) -> Vec<f64> {
        let w = grid.omega;
        self.sample_with(grid, |p, rho, z| p.source(rho, z, w))
    }

    pub fn sample_tau(&self, grid: &Grid, config: &HelicalConfig) -> Vec<f64> {
        (0..grid.boundary_node_count())
            .flat_map(|k| (0..grid.n_phi).map(move |p| (k, p)))
            .map(|(k, p)| self.tau(grid.theta(k), grid.phi(p), config))
            .collect()
    }

    /// Exact mode values `p_m` at every node.
    pub fn mode_values(&self, m: i32, grid: &Grid) -> Vec<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        let prof = self.mode(m);
        (0..grid.node_count())
            .map(|i| {
                let (j, k) = grid.split(i);
                prof.as_ref()
                    .map_or(zero, |p| p.value(grid.rho(j, k), grid.z(j, k)))
            })
            .collect()
    }
}

/// Random chart-smooth function `Σ c r^i cos^l θ trig(qφ)` with `i, l ≤ 2`
/// and `q ≤ bandwidth`.
#[derive(Debug, Clone)]
pub struct ChartPolynomial {
    terms: Vec<(i32, i32, i32, f64, f64)>,
}

impl ChartPolynomial {
    pub fn random<R: Rng + ?Sized>(dim: Dimension, bandwidth: i32, rng: &mut R) -> Self {
        let max_l = if dim == Dimension::Three { 2 } else { 0 };
        let mut terms = Vec::new();
        for i in 0..=2 {
            for l in 0..=max_l {
                for q in 0..=bandwidth {
                    let c: f64 = StandardNormal.sample(rng);
                    let phase = rng.random_range(0.0..2.0 * PI);
                    terms.push((i, l, q, c / (1 + i + l + q) as f64, phase));
                }
            }
        }
        Self { terms }
    }

    /// Same as sampling [`Self::eval`] on every node, without per-node trig.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let np = grid.n_phi;
        let trig: Vec<Vec<f64>> = self
            .terms
            .iter()
            .map(|&(_, _, q, c, ph)| (0..np).map(|p| c * (q as f64 * grid.phi(p) + ph).cos()).collect())
            .collect();
        let mut out = vec![0.0; grid.node_count() * np];
        for (node, row) in out.chunks_exact_mut(np).enumerate() {
            let (j, k) = grid.split(node);
            let (r, ct) = (grid.r(j), grid.theta(k).cos());
            for (&(i, l, ..), t) in self.terms.iter().zip(&trig) {
                let w = r.powi(i) * ct.powi(l);
                row.iter_mut().zip(t).for_each(|(o, v)| *o += w * v);
            }
        }
        out
    }

    pub fn eval(&self, r: f64, theta: f64, phi: f64) -> f64 {
        let ct = theta.cos();
        self.terms
            .iter()
            .map(|&(i, l, q, c, ph)| c * r.powi(i) * ct.powi(l) * (q as f64 * phi + ph).cos())
            .sum()
    }
}

/// Random trig polynomial `Σ c cos(k_r r + α) cos(k_θ θ + β) cos(qφ + γ)`.
#[derive(Debug, Clone)]
pub struct TrigPolynomial {
    terms: Vec<[f64; 7]>,
}

impl TrigPolynomial {
    pub fn random<R: Rng + ?Sized>(count: usize, bandwidth: i32, rng: &mut R) -> Self {
        let terms = (0..count)
            .map(|_| {
                let c: f64 = StandardNormal.sample(rng);
                [
                    c,
                    rng.random_range(0..=2) as f64,
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(0..=2) as f64,
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(0..=bandwidth) as f64,
                    rng.random_range(0.0..2.0 * PI),
                ]
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, r: f64, theta: f64, phi: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t[0] * (t[1] * r + t[2]).cos() * (t[3] * theta + t[4]).cos() * (t[5] * phi + t[6]).cos())
            .sum()
    }
}

/// A field `Σ_m S_m(θ)[q_m(r) + α_m r^k] e^{imφ}` (plus conjugates) whose
/// Sommerfeld residual vanishes identically on `r = R`: `α_m` is solved from
/// `∂_r u_m + sign·imΩ u_m = 0` at `r = R`.
#[derive(Debug, Clone)]
pub struct SommerfeldField {
    modes: Vec<SommerfeldMode>,
}

#[derive(Debug, Clone)]
struct SommerfeldMode {
    m: i32,
    /// `q(r) = Σ q_i r^i`
    q: Vec<Complex64>,
    alpha: Complex64,
    k: i32,
    /// `S(θ) = Σ s_l cos(lθ)`
    s: Vec<f64>,
}

impl SommerfeldField {
    pub fn random<R: Rng + ?Sized>(m_max: i32, config: &HelicalConfig, rng: &mut R) -> Self {
        let radius = config.radius;
        let modes = (0..=m_max)
            .map(|m| {
                let mut q: Vec<Complex64> = (0..4)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = if m == 0 { 0.0 } else { StandardNormal.sample(rng) };
                        Complex64::new(re, im)
                    })
                    .collect();
                q[0] = Complex64::new(q[0].re, 0.0);
                let k = rng.random_range(2..=4);
                let rot = Complex64::new(0.0, config.sign.value() * m as f64 * config.omega);
                let q_r: Complex64 = (1..q.len()).map(|i| q[i] * i as f64 * radius.powi(i as i32 - 1)).sum();
                let q_v: Complex64 = (0..q.len()).map(|i| q[i] * radius.powi(i as i32)).sum();
                let denom = k as f64 * radius.powi(k - 1) + rot * radius.powi(k);
                let alpha = -(q_r + rot * q_v) / denom;
                let s = if config.dim == Dimension::Three {
                    (0..3).map(|_| StandardNormal.sample(rng)).collect()
                } else {
                    vec![1.0]
                };
                SommerfeldMode { m, q, alpha, k, s }
            })
            .collect();
        Self { modes }
    }

    pub fn eval(&self, r: f64, theta: f64, phi: f64) -> f64 {
        self.modes
            .iter()
            .map(|md| {
                let radial: Complex64 = md.q.iter().enumerate().map(|(i, c)| c * r.powi(i as i32)).sum::<Complex64>()
                    + md.alpha * r.powi(md.k);
                let angular: f64 = md.s.iter().enumerate().map(|(l, c)| c * (l as f64 * theta).cos()).sum();
                let v = radial * angular * Complex64::from_polar(1.0, md.m as f64 * phi);
                if md.m == 0 {
                    v.re
                } else {
                    2.0 * v.re
                }
            })
            .sum()
    }

    pub fn bandwidth(&self) -> usize {
        self.modes.iter().map(|m| m.m as usize).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample;
    use crate::reduction::Sign;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fast_samplers_match_pointwise() {
        let c = cfg(3);
        let g = crate::grid::build_grid(&c, &[16, 16], 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sol = ManufacturedSolution::random(3, c.dim, &mut rng);
        let poly = ChartPolynomial::random(c.dim, 2, &mut rng);
        let pairs = [
            (sol.sample_value(&g), sample(&g, |r, t, p| sol.value(r, t, p))),
            (sol.sample_source(&g), sample(&g, |r, t, p| sol.source(r, t, p, c.omega))),
            (poly.sample(&g), sample(&g, |r, t, p| poly.eval(r, t, p))),
        ];
        for (fast, slow) in pairs {
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    fn cfg(n: usize) -> HelicalConfig {
        HelicalConfig::new(Dimension::from_usize(n).unwrap(), 1.0, 2.0, Sign::Minus).unwrap()
    }

    /// Density-form operator by centred differences in `(ρ, z)`.
    fn numeric_operator(p: &ModeProfile, rho: f64, z: f64, omega: f64) -> Complex64 {
        let h = 1e-4;
        let u = |a: f64, b: f64| p.value(a, b);
        let fr = |a: f64| a * (u(a + h / 2.0, z) - u(a - h / 2.0, z)) / h;
        let fz = |b: f64| rho * (u(rho, b + h / 2.0) - u(rho, b - h / 2.0)) / h;
        let m2 = (p.m as f64).powi(2);
        (fr(rho + h / 2.0) - fr(rho - h / 2.0)) / h + (fz(z + h / 2.0) - fz(z - h / 2.0)) / h
            - m2 * (1.0 / rho - omega * omega * rho) * u(rho, z)
    }

    #[test]
    fn source_matches_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 0..4 {
            let p = ModeProfile::random(m, Dimension::Three, &mut rng);
            for (rho, z) in [(0.3, 0.2), (1.1, -0.7), (1.7, 0.4)] {
                let expect = numeric_operator(&p, rho, z, 1.3);
                let got = p.source(rho, z, 1.3) * rho;
                assert!((expect - got).norm() < 1e-5 * (1.0 + got.norm()), "m={m}");
            }
        }
    }

    #[test]
    fn spec_examples() {
        // u = ρ²/4, m = 0: f = 1 so f̃ = ρ; u_r(R) = R/2
        let p = ModeProfile::new(0, vec![Monomial { a: 2, b: 0, c: Complex64::new(0.25, 0.0) }]);
        assert!((p.source(0.7, 0.0, 1.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((p.radial_derivative(2.0, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // u = ρ, m = 1: ρ f = Ω²ρ²
        let p = ModeProfile::new(1, vec![Monomial { a: 1, b: 0, c: Complex64::new(1.0, 0.0) }]);
        assert!((p.source(0.5, 0.0, 2.0) * 0.5 - Complex64::new(4.0 * 0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn irregular_monomial_rejected() {
        ModeProfile::new(1, vec![Monomial { a: 2, b: 0, c: Complex64::new(1.0, 0.0) }]);
    }

    #[test]
    fn sommerfeld_field_has_zero_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 3] {
            let c = cfg(n);
            let f = SommerfeldField::random(3, &c, &mut rng);
            let h = 1e-5;
            for (theta, phi) in [(0.4, 1.0), (2.0, 5.5)] {
                let ur = (f.eval(c.radius + h, theta, phi) - f.eval(c.radius - h, theta, phi)) / (2.0 * h);
                let up = (f.eval(c.radius, theta, phi + h) - f.eval(c.radius, theta, phi - h)) / (2.0 * h);
                let res = ur + c.sign.value() * c.omega * up;
                assert!(res.abs() < 1e-6 * (1.0 + ur.abs()), "n={n}: {res}");
            }
        }
    }

    #[test]
    fn real_field_matches_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = ManufacturedSolution::random(2, Dimension::Three, &mut rng);
        let (r, t, phi) = (0.8, 1.1, 0.3);
        let (rho, z) = cyl(r, t);
        let direct: Complex64 = (-2..=2)
            .map(|m| s.mode(m).unwrap().value(rho, z) * Complex64::from_polar(1.0, m as f64 * phi))
            .sum();
        assert!((direct.re - s.value(r, t, phi)).abs() < 1e-13);
        assert!(direct.im.abs() < 1e-13);
    }
}
