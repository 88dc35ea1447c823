//! Verification suites. Each returns named checks with the measured value,
//! the threshold it is held to, and a pass flag.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::assemble_mode_system;
use crate::config::{RunConfig, SourcePreset};
use crate::energy::{
    energy_direct, expanded_densities, proof_boundary_contraction, proof_boundary_integrand,
    proof_volume_integrand, random_smooth_pair, uniqueness_certificate, BoundarySample, VolumeSample,
};
use crate::error::{Error, Result};
use crate::field::{boundary_values, d_phi, d_r, sample};
use crate::grid::{build_grid, Grid};
use crate::modes::ModeIndex;
use crate::profiles::{ChartPolynomial, ManufacturedSolution, SommerfeldField};
use crate::quadrature::{boundary_quadrature, stokes_sides, volume_quadrature, VectorDensity};
use crate::reduction::{conormal_spherical, Dimension, HelicalConfig, Sign, SphericalPoint};
use crate::solver::{
    null_space_probe, solve_full, HelicalProblem, SolveOptions, SolvePath, SCHEMA_VERSION,
};

pub const SUITE_NAMES: [&str; 6] = ["energy", "inequality", "stokes", "uniqueness", "nullspace", "compat"];

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
            detail: detail.into(),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
            detail: detail.into(),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed: ok,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, checks: Vec<CheckResult>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            suite: suite.to_string(),
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Independent stream `t` of the suite seed.
pub fn trial_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

fn doubled(res: &[usize]) -> Vec<usize> {
    res.iter().map(|v| 2 * v).collect()
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

/// Integration-by-parts identity on random smooth `(u, a, b)`: residual ratio
/// under halving of `h`, and the fine-grid residual against `∫|volume density|`.
pub fn ibp_checks(config: &HelicalConfig, coarse: &[usize], n_phi: usize, trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let gc = build_grid(config, coarse, n_phi)?;
    let gf = build_grid(config, &doubled(coarse), n_phi)?;
    let measure = |g: &Grid, t: usize| -> Result<(f64, f64)> {
        let (u, m) = random_smooth_pair(g, &mut trial_rng(seed, t));
        let e = energy_direct(&u, &m, g, config)?;
        let (dens, flux) = expanded_densities(&u, &m, g, config)?;
        let v = volume_quadrature(g, &dens)?;
        let b = boundary_quadrature(g, &flux)?;
        let abs: Vec<f64> = dens.iter().map(|d| d.abs()).collect();
        Ok(((e - v - b).abs(), volume_quadrature(g, &abs)?))
    };
    let rows: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (rc, _) = measure(&gc, t)?;
            let (rf, mag) = measure(&gf, t)?;
            Ok((rc, rf, mag))
        })
        .collect::<Result<_>>()?;
    let n = config.n();
    let min_ratio = min_of(rows.iter().map(|(c, f, _)| c / f));
    let worst_rel = max_of(rows.iter().map(|(_, f, m)| f / m));
    let sum_c: f64 = rows.iter().map(|r| r.0).sum();
    let sum_f: f64 = rows.iter().map(|r| r.1).sum();
    let grids = format!("{coarse:?} -> {:?}, {trials} triples", doubled(coarse));
    Ok(vec![
        CheckResult::at_least(format!("n{n}_ibp_min_ratio"), min_ratio, 3.5, grids.clone()),
        CheckResult::at_least(format!("n{n}_ibp_aggregate_order"), (sum_c / sum_f).log2(), 1.8, grids.clone()),
        CheckResult::at_most(format!("n{n}_ibp_fine_relative"), worst_rel, 1e-4, "max residual / ∫|volume density|"),
    ])
}

/// `max |b^α u_α|` on `r = R` and its scale `max R(|u_r| + Ω|u_φ|)`.
fn contraction_size(u: &[f64], grid: &Grid, config: &HelicalConfig) -> Result<(f64, f64)> {
    let c = proof_boundary_contraction(u, grid, config)?;
    let ur = boundary_values(grid, &d_r(grid, u));
    let up = boundary_values(grid, &d_phi(grid, u));
    let scale = max_of(ur.iter().zip(&up).map(|(a, b)| config.radius * (a.abs() + config.omega * b.abs())));
    Ok((max_of(c.iter().map(|v| v.abs())), scale))
}

/// Proof-multiplier contraction on fields with zero Sommerfeld residual.
pub fn contraction_checks(config: &HelicalConfig, coarse: &[usize], n_phi: usize, trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let gc = build_grid(config, coarse, n_phi)?;
    let gf = build_grid(config, &doubled(coarse), n_phi)?;
    let m_max = (n_phi as i32 - 1) / 2;
    let m_max = m_max.min(3);
    let rows: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let field = SommerfeldField::random(m_max, config, &mut trial_rng(seed, t));
            let uc = sample(&gc, |r, th, ph| field.eval(r, th, ph));
            let uf = sample(&gf, |r, th, ph| field.eval(r, th, ph));
            let (cc, _) = contraction_size(&uc, &gc, config)?;
            let (cf, scale) = contraction_size(&uf, &gf, config)?;
            Ok((cc, cf, scale))
        })
        .collect::<Result<_>>()?;
    let n = config.n();
    let h2 = gf.h_rel().powi(2);
    let min_ratio = min_of(rows.iter().map(|(c, f, _)| c / f));
    let constant = max_of(rows.iter().map(|(_, f, s)| f / (h2 * s)));
    Ok(vec![
        CheckResult::at_least(format!("n{n}_contraction_min_ratio"), min_ratio, 3.5, format!("{trials} fields")),
        CheckResult::at_most(
            format!("n{n}_contraction_constant"),
            constant,
            100.0,
            "max |b·du| / (h² · max R(|u_r| + Ω|u_φ|))",
        ),
    ])
}

fn random_config<R: Rng + ?Sized>(rng: &mut R, dim: Dimension) -> HelicalConfig {
    let omega = rng.random_range(0.0..3.0);
    let radius = rng.random_range(0.1..5.0);
    let sign = if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
    HelicalConfig::new(dim, omega, radius, sign).expect("valid parameters")
}

fn spread<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let g: f64 = StandardNormal.sample(rng);
    g * 10f64.powf(rng.random_range(-3.0..3.0))
}

/// Pointwise proof integrands on random samples; half the budget goes to the
/// volume integrand, half to the boundary chain.
pub fn inequality_checks(samples: usize, seed: u64) -> Result<Vec<CheckResult>> {
    const CHUNK: usize = 10_000;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut min_vol, mut min_gap, mut min_lower) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
            for i in 0..count {
                let dim = if rng.random_bool(0.5) { Dimension::Two } else { Dimension::Three };
                let cfg = random_config(&mut rng, dim);
                if i % 2 == 0 {
                    let s = VolumeSample {
                        rho: rng.random_range(1e-6..5.0),
                        u_rho: spread(&mut rng),
                        u_phi: spread(&mut rng),
                        u_z: (0..cfg.n() - 2).map(|_| spread(&mut rng)).collect(),
                    };
                    min_vol = min_vol.min(proof_volume_integrand(&s, &cfg)?);
                } else {
                    // n = 4 samples use two z-coordinates
                    let nz = rng.random_range(0..=2usize);
                    let s = boundary_sample(&mut rng, cfg.radius, nz);
                    let (v, lo) = proof_boundary_integrand(&s, &cfg)?;
                    let scale = boundary_scale(&s, &cfg);
                    min_gap = min_gap.min((v - lo) / scale);
                    min_lower = min_lower.min(lo / scale);
                }
            }
            Ok((min_vol, min_gap, min_lower))
        })
        .collect::<Result<_>>()?;
    let min_vol = min_of(parts.iter().map(|p| p.0));
    let min_gap = min_of(parts.iter().map(|p| p.1));
    let min_lower = min_of(parts.iter().map(|p| p.2));

    // equator equality, n = 3
    let mut rng = trial_rng(seed, usize::MAX >> 1);
    let mut equator = 0.0f64;
    for _ in 0..1000 {
        let cfg = random_config(&mut rng, Dimension::Three);
        let (u1, up) = (spread(&mut rng), spread(&mut rng));
        let s = BoundarySample { rho: cfg.radius, z: vec![0.0], u_z: vec![u1], u_phi: up };
        let (v, lo) = proof_boundary_integrand(&s, &cfg)?;
        let expect = 0.5 * (cfg.radius * cfg.radius * u1 * u1 + up * up);
        let scale = expect.max(f64::MIN_POSITIVE);
        equator = equator.max((v - expect).abs() / scale).max((lo - expect).abs() / scale);
    }

    // rotating (zⁱ, u_i) together leaves the n = 4 integrand unchanged
    let mut invariance = 0.0f64;
    for _ in 0..1000 {
        let cfg = random_config(&mut rng, Dimension::Three);
        let s = boundary_sample(&mut rng, cfg.radius, 2);
        let a: f64 = rng.random_range(0.0..2.0 * PI);
        let (sa, ca) = a.sin_cos();
        let rot = |v: &[f64]| vec![ca * v[0] - sa * v[1], sa * v[0] + ca * v[1]];
        let t = BoundarySample { rho: s.rho, z: rot(&s.z), u_z: rot(&s.u_z), u_phi: s.u_phi };
        let (v0, _) = proof_boundary_integrand(&s, &cfg)?;
        let (v1, _) = proof_boundary_integrand(&t, &cfg)?;
        invariance = invariance.max((v0 - v1).abs() / boundary_scale(&s, &cfg));
    }

    Ok(vec![
        CheckResult::at_least("volume_integrand_min", min_vol, 0.0, format!("{} samples", samples.div_ceil(2))),
        CheckResult::at_least("boundary_gap_min", min_gap, -1e-12, "min (integrand − lower) / scale"),
        CheckResult::at_least("boundary_lower_min", min_lower, -1e-12, "min lower / scale"),
        CheckResult::at_most("equator_equality", equator, 1e-13, "n = 3, z = 0, relative"),
        CheckResult::at_most("orthogonal_invariance", invariance, 1e-12, "n = 4 synthetic samples, relative"),
    ])
}

fn boundary_sample<R: Rng + ?Sized>(rng: &mut R, radius: f64, nz: usize) -> BoundarySample {
    // uniform direction on the sphere of dimension nz + 1 (the φ circle
    // collapsed), kept off the axis
    let (rho, z) = loop {
        let v: Vec<f64> = (0..=nz).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rho = radius * v[0].abs() / norm;
        if rho > 1e-8 * radius {
            let mut z: Vec<f64> = v[1..].iter().map(|x| radius * x / norm).collect();
            // keep ρ² + |z|² = R² to roundoff
            let zn = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            if zn > 0.0 {
                let target = (radius * radius - rho * rho).max(0.0).sqrt();
                z.iter_mut().for_each(|x| *x *= target / zn);
            }
            break (rho, z);
        }
    };
    BoundarySample {
        rho,
        u_z: (0..nz).map(|_| spread(rng)).collect(),
        z,
        u_phi: spread(rng),
    }
}

/// Sum of absolute values of the terms of the boundary integrand.
fn boundary_scale(s: &BoundarySample, cfg: &HelicalConfig) -> f64 {
    let n = s.z.len() as f64 + 2.0;
    let r = cfg.radius;
    let w = cfg.omega;
    let z2: f64 = s.z.iter().map(|v| v * v).sum();
    let zu: f64 = s.z.iter().zip(&s.u_z).map(|(a, b)| a * b).sum();
    let u2: f64 = s.u_z.iter().map(|v| v * v).sum();
    let up = s.u_phi;
    let pref = r / s.rho / (n - 1.0);
    let terms = zu * zu + s.rho * s.rho * u2 + (1.0 + w * w * z2) * up * up + 2.0 * r * w * (zu * up).abs();
    (pref * terms).max(f64::MIN_POSITIVE)
}

/// Divergence identity on random chart vector densities, plus the co-normal
/// against `dr` at random boundary points.
pub fn stokes_checks(config: &HelicalConfig, coarse: &[usize], n_phi: usize, trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let gc = build_grid(config, coarse, n_phi)?;
    let gf = build_grid(config, &doubled(coarse), n_phi)?;
    let bw = ((n_phi as i32 - 1) / 2).min(2);
    // signed residual of each component on its own; the identity is linear,
    // so the full residual is their sum
    let residuals = |g: &Grid, t: usize| -> Result<Vec<f64>> {
        let mut rng = trial_rng(seed, t);
        let polys: Vec<ChartPolynomial> = (0..g.n()).map(|_| ChartPolynomial::random(g.dim, bw, &mut rng)).collect();
        let zero = vec![0.0; g.node_count() * g.n_phi];
        polys
            .iter()
            .enumerate()
            .map(|(c, p)| {
                let comp = sample(g, |r, th, ph| {
                    // weight-one density: vanishes on r = 0 and the poles
                    let w = match g.dim {
                        Dimension::Two => r,
                        Dimension::Three => r * r * th.sin(),
                    };
                    w * p.eval(r, th, ph)
                });
                let mut components = vec![zero.clone(); g.n()];
                components[c] = comp;
                let (vol, bnd) = stokes_sides(&VectorDensity { components }, g)?;
                Ok(vol - bnd)
            })
            .collect()
    };
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| Ok((residuals(&gc, t)?, residuals(&gf, t)?)))
        .collect::<Result<_>>()?;
    let last = config.n() - 1;
    // the φ divergence is spectral and integrates to zero up to roundoff
    let phi_residual = max_of(rows.iter().flat_map(|(c, f)| [c[last].abs(), f[last].abs()]));
    let full = |v: &[f64]| v.iter().sum::<f64>().abs();
    let sum_c: f64 = rows.iter().map(|(c, _)| full(c)).sum();
    let sum_f: f64 = rows.iter().map(|(_, f)| full(f)).sum();
    let mut orders: Vec<f64> = rows.iter().map(|(c, f)| (full(c) / full(f)).log2()).collect();
    orders.sort_by(f64::total_cmp);
    let median = orders[orders.len() / 2];
    let spread = format!(
        "{coarse:?} -> {:?}, {trials} densities, per-density orders {:.2}..{:.2}",
        doubled(coarse),
        orders[0],
        orders[orders.len() - 1]
    );

    let mut rng = trial_rng(seed, trials);
    let mut conormal_err = 0.0f64;
    for _ in 0..1000 {
        let phi = rng.random_range(0.0..2.0 * PI);
        let point = match config.dim {
            Dimension::Two => SphericalPoint::circle(config.radius, phi),
            Dimension::Three => {
                let theta = rng.random_range(0.0..=PI);
                SphericalPoint::sphere(config.radius, theta, phi)
            }
        };
        let n = conormal_spherical(&point, config)?;
        let err = n
            .iter()
            .enumerate()
            .map(|(i, v)| (v - if i == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        conormal_err = conormal_err.max(err);
    }
    let n = config.n();
    Ok(vec![
        CheckResult::at_least(format!("n{n}_stokes_aggregate_order"), (sum_c / sum_f).log2(), 1.8, spread),
        CheckResult::at_least(format!("n{n}_stokes_median_order"), median, 1.8, ""),
        CheckResult::at_most(format!("n{n}_stokes_phi_part"), phi_residual, 1e-10, "spectral φ divergence"),
        CheckResult::at_most(format!("n{n}_conormal_vs_dr"), conormal_err, 1e-12, "1000 boundary points"),
    ])
}

/// Two solve paths on random compatible manufactured problems; the
/// difference must be a constant and carry no proof energy.
pub fn uniqueness_checks(
    config: &HelicalConfig,
    resolution: &[usize],
    n_phi: usize,
    m_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let grid = build_grid(config, resolution, n_phi)?;
    let rows: Vec<(f64, f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let sol = ManufacturedSolution::random(m_max, config.dim, &mut rng);
            let pin = rng.random_range(0..grid.node_count());
            let problem = HelicalProblem::new(
                *config,
                grid.clone(),
                sol.sample_source(&grid),
                sol.sample_tau(&grid, config),
                m_max,
            )?;
            let banded = solve_full(&problem, &SolveOptions::default()).field?;
            let pinned = solve_full(
                &problem,
                &SolveOptions {
                    path: SolvePath::SparsePinned { pin },
                    ..SolveOptions::default()
                },
            )
            .field?;
            let cert = uniqueness_certificate(&banded, &pinned, &problem, 1e-8)?;
            let bound = cert.h_rel * cert.h_rel * cert.scale;
            Ok((
                cert.relative_difference,
                cert.volume_total.abs() / bound,
                cert.boundary_total.abs() / bound,
                cert.gradient_max,
            ))
        })
        .collect::<Result<_>>()?;
    let n = config.n();
    let detail = format!("{resolution:?}, {trials} problems");
    Ok(vec![
        CheckResult::at_most(format!("n{n}_path_agreement"), max_of(rows.iter().map(|r| r.0)), 1e-8, detail),
        CheckResult::at_most(
            format!("n{n}_difference_volume_total"),
            max_of(rows.iter().map(|r| r.1)),
            10.0,
            "in units of h² · scale",
        ),
        CheckResult::at_most(
            format!("n{n}_difference_boundary_total"),
            max_of(rows.iter().map(|r| r.2)),
            10.0,
            "in units of h² · scale",
        ),
    ])
}

/// Singular values of the homogeneous per-mode systems.
pub fn nullspace_checks(config: &HelicalConfig, resolutions: &[Vec<usize>], modes: &[i32]) -> Result<Vec<CheckResult>> {
    let n = config.n();
    let mut out = Vec::new();
    for res in resolutions {
        let grid = build_grid(config, res, 8)?;
        let reports: Vec<_> = modes
            .par_iter()
            .map(|&m| {
                let op = assemble_mode_system(ModeIndex(m), &grid, config)?;
                null_space_probe(&op, 3)
            })
            .collect::<Result<_>>()?;
        for rep in reports {
            let small = rep.count_below(1e-6);
            let ratio = rep.singular_values[0] / rep.largest;
            let tag = format!("n{n}_{res:?}_m{}", rep.m).replace(", ", "x").replace(['[', ']'], "");
            if rep.m == 0 {
                out.push(CheckResult::flag(
                    format!("{tag}_single_null"),
                    small == 1,
                    format!("{small} below 1e-6·σ_max ({})", rep.method),
                ));
                out.push(CheckResult::at_least(format!("{tag}_constant_cosine"), rep.constant_cosine, 0.999, ""));
            } else {
                out.push(CheckResult::at_least(
                    format!("{tag}_min_singular"),
                    ratio,
                    1e-6,
                    format!("σ_min / σ_max ({})", rep.method),
                ));
            }
        }
    }
    Ok(out)
}

/// Constant source `c`: both sides of the compatibility condition against
/// `c |B|`, the quadratic solution, and rejection of `τ = 0`.
pub fn compat_checks(config: &HelicalConfig, resolution: &[usize], c: f64) -> Result<Vec<CheckResult>> {
    let n = config.n();
    let r = config.radius;
    let (ball, tau, coef) = match config.dim {
        Dimension::Two => (PI * r * r, c * r / 2.0, c / 4.0),
        Dimension::Three => (4.0 / 3.0 * PI * r.powi(3), c * r / 3.0, c / 6.0),
    };
    let n_phi = 8;
    let problem = HelicalProblem::from_functions(*config, resolution, n_phi, 2, |_, _, _| c, |_, _| tau)?;
    let (vol, bnd) = problem.compatibility_sides();
    let exact = ball * c;
    let mut out = vec![
        CheckResult::at_most(format!("n{n}_volume_side"), (vol - exact).abs() / exact.abs(), 1e-3, format!("exact {exact}")),
        CheckResult::at_most(format!("n{n}_boundary_side"), (bnd - exact).abs() / exact.abs(), 1e-3, format!("exact {exact}")),
    ];

    let outcome = solve_full(&problem, &SolveOptions::default());
    let solution_err = match &outcome.field {
        Ok(u) => {
            let g = &problem.grid;
            let exact = sample(g, |r, _, _| coef * r * r);
            let mut d: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
            let w = crate::solver::gauge_weights(g);
            let total: f64 = w.iter().sum::<f64>() * n_phi as f64;
            let mean: f64 = d.iter().enumerate().map(|(i, v)| w[i / n_phi] * v).sum::<f64>() / total;
            d.iter_mut().for_each(|v| *v -= mean);
            max_of(d.iter().map(|v| v.abs())) / (coef * r * r).abs()
        }
        Err(_) => f64::INFINITY,
    };
    out.push(CheckResult::at_most(
        format!("n{n}_constant_source_solution"),
        solution_err,
        1e-3,
        "sup error of c r²/(2n) after gauge, relative",
    ));

    let mut bad = problem.clone();
    bad.tau.iter_mut().for_each(|t| *t = 0.0);
    let rejected = matches!(solve_full(&bad, &SolveOptions::default()).field, Err(Error::IncompatibleData { .. }));
    out.push(CheckResult::flag(format!("n{n}_incompatible_rejected"), rejected, "τ = 0"));
    Ok(out)
}

/// Run a named suite at the configuration's parameters and resolution.
pub fn run_suite(name: &str, run: &RunConfig) -> Result<SuiteReport> {
    let config = run.helical()?;
    let res = &run.resolution;
    let seed = run.seed;
    let checks = match name {
        "energy" => {
            let mut c = ibp_checks(&config, res, run.n_phi, run.trials, seed)?;
            c.extend(contraction_checks(&config, res, run.n_phi, run.trials, seed)?);
            c
        }
        "inequality" => inequality_checks(run.samples, seed)?,
        "stokes" => stokes_checks(&config, res, run.n_phi, run.trials, seed)?,
        "uniqueness" => uniqueness_checks(&config, res, run.n_phi, run.m_max, run.trials, seed)?,
        "nullspace" => {
            let modes: Vec<i32> = (0..=run.m_max.min(3) as i32).collect();
            nullspace_checks(&config, &[res.clone(), doubled(res)], &modes)?
        }
        "compat" => {
            let c = if run.source == SourcePreset::Constant { run.source_value } else { 1.0 };
            compat_checks(&config, res, c)?
        }
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(SuiteReport::new(name, seed, checks))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub resolution: Vec<usize>,
    pub h: f64,
    pub l2_error: f64,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    pub passed: bool,
}

/// Relative L2 error `‖u − u*‖ / ‖u*‖` after removing the σ-mean of the
/// difference.
pub fn relative_l2_error(grid: &Grid, u: &[f64], exact: &[f64]) -> Result<f64> {
    let np = grid.n_phi;
    let w = crate::solver::gauge_weights(grid);
    let total: f64 = w.iter().sum::<f64>() * np as f64;
    let d: Vec<f64> = u.iter().zip(exact).map(|(a, b)| a - b).collect();
    let mean: f64 = d.iter().enumerate().map(|(i, v)| w[i / np] * v).sum::<f64>() / total;
    let weighted = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..u.len())
            .map(|i| {
                let (j, k) = grid.split(i / np);
                grid.sigma(j, k) * f(i)
            })
            .collect()
    };
    let err = volume_quadrature(grid, &weighted(&|i| (d[i] - mean).powi(2)))?;
    let emean: f64 = exact.iter().enumerate().map(|(i, v)| w[i / np] * v).sum::<f64>() / total;
    let norm = volume_quadrature(grid, &weighted(&|i| (exact[i] - emean).powi(2)))?;
    Ok((err / norm).sqrt())
}

/// Manufactured-solution refinement study: `refine` levels starting at the
/// configured resolution, each doubling every grid count.
pub fn convergence_table(run: &RunConfig) -> Result<ConvergenceReport> {
    let sol = run.manufactured()?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut res = run.resolution.clone();
    for _ in 0..run.refine.max(1) {
        let problem = run.problem_at(&res)?;
        let u = solve_full(&problem, &run.solve_options()).field?;
        let exact = sol.sample_value(&problem.grid);
        let err = relative_l2_error(&problem.grid, &u, &exact)?;
        let h = problem.grid.h_rel();
        let order = rows.last().map(|p| (p.l2_error / err).ln() / (p.h / h).ln());
        rows.push(ConvergenceRow { resolution: res.clone(), h, l2_error: err, order });
        res = doubled(&res);
    }
    let passed = rows.last().and_then(|r| r.order).is_some_and(|o| o >= 1.8);
    Ok(ConvergenceReport { schema_version: SCHEMA_VERSION, seed: run.seed, rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> HelicalConfig {
        HelicalConfig::new(Dimension::from_usize(n).unwrap(), 1.0, 2.0, Sign::Plus).unwrap()
    }

    #[test]
    fn unknown_suite() {
        let run = RunConfig::new(2, 1.0, 2.0, vec![32]);
        assert!(matches!(run_suite("bogus", &run), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn inequality_small() {
        let checks = inequality_checks(20_000, 1).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }

    #[test]
    fn compat_constant_source() {
        let checks = compat_checks(&cfg(2), &[128], 1.0).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }

    #[test]
    fn nullspace_small() {
        let checks = nullspace_checks(&cfg(2), &[vec![32]], &[0, 1, 2]).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }

    #[test]
    fn report_passes_iff_all_checks_pass() {
        let r = SuiteReport::new(
            "x",
            0,
            vec![CheckResult::at_most("a", 1.0, 2.0, ""), CheckResult::at_least("b", 1.0, 2.0, "")],
        );
        assert!(!r.passed);
        assert!(r.to_json().contains("\"schema_version\": 1"));
    }

    #[test]
    fn trial_streams_differ() {
        let a: u64 = trial_rng(42, 0).random();
        let b: u64 = trial_rng(42, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, trial_rng(42, 0).random::<u64>());
    }
}
