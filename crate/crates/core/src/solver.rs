//! Per-mode solves, compatibility enforcement, gauge fixing and null-space
//! probing.
//!
//! The `m = 0` system annihilates constants exactly, so it is singular with
//! a one-dimensional kernel and a one-dimensional cokernel. The default path
//! factors the bordered matrix `A + ℓ e_pᵀ`, where `ℓ` is the image of a unit
//! shift of `τ₀` and `p` is a boundary node. Its solution `v` satisfies
//! `A v = b − v_p ℓ`, i.e. it solves the system with `τ₀` shifted by the
//! discrete compatibility defect `v_p`. The result is then moved to the
//! representative with `∫ σ u₀ = 0`.
//!
//! The cross-check path uses a general sparse LU with its own ordering on a
//! different formulation: the left null vector is obtained from a transposed
//! solve, the compatible right side is projected explicitly, and one
//! equation is replaced by a pinned node.

use faer::linalg::solvers::Solve;
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_mode_system, DiscreteOperator, RowKind};
use crate::band::BandLu;
use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid};
use crate::modes::{synthesize_field, ModeField, ModeIndex, PhiTransform};
use crate::quadrature::{boundary_quadrature, volume_quadrature};
use crate::reduction::HelicalConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Source and boundary data for one solve.
#[derive(Debug, Clone)]
pub struct HelicalProblem {
    pub config: HelicalConfig,
    pub grid: Grid,
    /// Unweighted source `f`, node-major over `grid × φ`.
    pub source: Vec<f64>,
    /// Boundary data `τ`, `[k * n_phi + p]`.
    pub tau: Vec<f64>,
    pub m_max: usize,
}

impl HelicalProblem {
    pub fn new(config: HelicalConfig, grid: Grid, source: Vec<f64>, tau: Vec<f64>, m_max: usize) -> Result<Self> {
        if grid.dim != config.dim || grid.radius != config.radius || grid.omega != config.omega {
            return Err(Error::InvalidConfig("grid was not built for this configuration".into()));
        }
        PhiTransform::new(grid.n_phi, m_max)?;
        let nv = grid.node_count() * grid.n_phi;
        if source.len() != nv {
            return Err(Error::ShapeMismatch { expected: nv, found: source.len() });
        }
        let nb = grid.boundary_node_count() * grid.n_phi;
        if tau.len() != nb {
            return Err(Error::ShapeMismatch { expected: nb, found: tau.len() });
        }
        Ok(Self { config, grid, source, tau, m_max })
    }

    /// Build from analytic data `f(r, θ, φ)` and `τ(θ, φ)`.
    pub fn from_functions(
        config: HelicalConfig,
        resolution: &[usize],
        n_phi: usize,
        m_max: usize,
        f: impl Fn(f64, f64, f64) -> f64,
        tau: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let grid = build_grid(&config, resolution, n_phi)?;
        let source = crate::field::sample(&grid, f);
        let tau: Vec<f64> = (0..grid.boundary_node_count())
            .flat_map(|k| (0..n_phi).map(move |p| (k, p)))
            .map(|(k, p)| tau(grid.theta(k), grid.phi(p)))
            .collect();
        Self::new(config, grid, source, tau, m_max)
    }

    fn coefficient(samples: &[f64], m: i32, n_phi: usize) -> Vec<Complex64> {
        let e: Vec<Complex64> = (0..n_phi)
            .map(|p| {
                let k = (-(m as i64) * p as i64).rem_euclid(n_phi as i64) as f64;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k / n_phi as f64)
            })
            .collect();
        let inv = 1.0 / n_phi as f64;
        samples
            .chunks_exact(n_phi)
            .map(|s| s.iter().zip(&e).map(|(v, w)| w * *v).sum::<Complex64>() * inv)
            .collect()
    }

    pub fn source_mode(&self, m: i32) -> Vec<Complex64> {
        Self::coefficient(&self.source, m, self.grid.n_phi)
    }

    pub fn tau_mode(&self, m: i32) -> Vec<Complex64> {
        Self::coefficient(&self.tau, m, self.grid.n_phi)
    }

    /// `∫_B f̃` and `∫_{∂B} στ` (chart densities).
    pub fn compatibility_sides(&self) -> (f64, f64) {
        let g = &self.grid;
        let np = g.n_phi;
        let dens: Vec<f64> = self
            .source
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let (j, k) = g.split(i / np);
                g.sigma(j, k) * f
            })
            .collect();
        let bdens: Vec<f64> = self
            .tau
            .iter()
            .enumerate()
            .map(|(i, t)| g.boundary_h_rr(i / np) * t)
            .collect();
        (
            volume_quadrature(g, &dens).expect("shape checked"),
            boundary_quadrature(g, &bdens).expect("shape checked"),
        )
    }

    /// `∫|f̃| + ∫σ|τ|`, the magnitude against which compatibility is judged.
    pub fn compatibility_scale(&self) -> f64 {
        let g = &self.grid;
        let np = g.n_phi;
        let dens: Vec<f64> = self
            .source
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let (j, k) = g.split(i / np);
                g.sigma(j, k) * f.abs()
            })
            .collect();
        let bdens: Vec<f64> = self
            .tau
            .iter()
            .enumerate()
            .map(|(i, t)| g.boundary_h_rr(i / np) * t.abs())
            .collect();
        volume_quadrature(g, &dens).expect("shape checked") + boundary_quadrature(g, &bdens).expect("shape checked")
    }

    /// `∫_{∂B} σ` on the boundary, the effect of a unit shift of `τ`.
    pub fn boundary_measure(&self) -> f64 {
        let g = &self.grid;
        let ones: Vec<f64> = (0..g.boundary_node_count() * g.n_phi)
            .map(|i| g.boundary_h_rr(i / g.n_phi))
            .collect();
        boundary_quadrature(g, &ones).expect("shape checked")
    }

    pub fn compatibility_threshold(&self, factor: f64) -> f64 {
        factor * self.grid.h_rel().powi(2) * self.compatibility_scale()
    }
}

/// `∫_B f̃ − ∫_{∂B} στ`.
pub fn compatibility_residual(problem: &HelicalProblem) -> f64 {
    let (vol, bnd) = problem.compatibility_sides();
    vol - bnd
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    /// Banded LU of the bordered system (default).
    Banded,
    /// General sparse LU on the pinned system, with the given pinned node.
    SparsePinned { pin: usize },
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub rtol: f64,
    pub compat_factor: f64,
    pub allow_incompatible: bool,
    pub path: SolvePath,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            compat_factor: 10.0,
            allow_incompatible: false,
            path: SolvePath::Banded,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub residual: f64,
    pub threshold: f64,
    pub volume_side: f64,
    pub boundary_side: f64,
    /// Shift of `τ₀` applied under the override flag.
    pub override_shift: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub m: i32,
    pub path: SolvePath,
    pub residual: f64,
    pub refinement_steps: usize,
    pub condition_estimate: f64,
    /// `m = 0`: shift of `τ₀` that makes the discrete system consistent.
    pub discrete_shift: Option<f64>,
    /// `m = 0`: constant subtracted to reach zero σ-weighted mean.
    pub gauge_constant: Option<f64>,
    pub compatibility: Option<CompatibilityReport>,
    pub error: Option<String>,
}

impl ModeReport {
    fn failed(m: i32, path: SolvePath, e: &Error) -> Self {
        let condition = match e {
            Error::SingularSystem { condition, .. } => *condition,
            _ => f64::NAN,
        };
        Self {
            m,
            path,
            residual: f64::NAN,
            refinement_steps: 0,
            condition_estimate: condition,
            discrete_shift: None,
            gauge_constant: None,
            compatibility: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub dimension: usize,
    pub omega: f64,
    pub radius: f64,
    pub sign: i32,
    pub resolution: Vec<usize>,
    pub n_phi: usize,
    pub m_max: usize,
    pub light_cylinder_interior: bool,
    /// `ΩR = 1`: the boundary touches the light cylinder, a case no
    /// uniqueness statement covers.
    pub out_of_theory: bool,
    pub compatibility: Option<CompatibilityReport>,
    pub modes: Vec<ModeReport>,
    pub imaginary_residue: Option<f64>,
    pub max_residual: f64,
    pub error: Option<String>,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `σ'`-weighted trapezoid weights; `∫σu₀ ∝ Σ w u`.
pub fn gauge_weights(grid: &Grid) -> Vec<f64> {
    grid.volume_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let (j, k) = grid.split(i);
            w * grid.sigma(j, k)
        })
        .collect()
}

/// Subtract the σ-weighted mean; returns the constant removed.
pub fn apply_gauge(grid: &Grid, values: &mut [Complex64]) -> Complex64 {
    let w = gauge_weights(grid);
    let total: f64 = w.iter().sum();
    let mean = values.iter().zip(&w).map(|(v, w)| v * *w).sum::<Complex64>() / total;
    values.iter_mut().for_each(|v| *v -= mean);
    mean
}

/// Vector `ℓ` with `row_scale` on the Sommerfeld rows: the right-side image
/// of a unit shift in `τ`.
fn shift_vector(op: &DiscreteOperator) -> Vec<Complex64> {
    op.kinds
        .iter()
        .zip(&op.row_scale)
        .map(|(k, s)| Complex64::new(if *k == RowKind::Boundary { *s } else { 0.0 }, 0.0))
        .collect()
}

fn residual_of(op: &DiscreteOperator, x: &[Complex64], b: &[Complex64]) -> (Vec<Complex64>, f64) {
    let ax = op.apply(x);
    let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let scale = norm2(b).max(op.norm1() * norm2(x) * 1e-300).max(f64::MIN_POSITIVE);
    let rel = norm2(&r) / scale;
    (r, rel)
}

struct BandedSolve {
    lu: BandLu,
    condition: f64,
}

fn band_factor(op: &DiscreteOperator, extra: &[(usize, usize, Complex64)]) -> Result<BandedSolve> {
    let m = op.m.0;
    let lu = op.band_lu(extra).map_err(|z| Error::SingularSystem {
        mode: m,
        condition: f64::INFINITY,
        detail: format!("zero pivot at row {}", z.index),
    })?;
    let mut norm = op.norm1();
    for &(_, _, v) in extra {
        norm += v.norm();
    }
    let condition = norm * lu.inverse_norm1_estimate();
    Ok(BandedSolve { lu, condition })
}

fn faer_matrix(
    op: &DiscreteOperator,
    replace_row: Option<(usize, usize)>,
) -> Result<SparseColMat<usize, Complex64>> {
    let n = op.dim();
    let mut trips: Vec<Triplet<usize, usize, Complex64>> = op
        .triplets()
        .filter(|(i, _, _)| replace_row.is_none_or(|(r, _)| *i != r))
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    if let Some((r, q)) = replace_row {
        trips.push(Triplet::new(r, q, Complex64::new(op.row_scale[r].max(1.0), 0.0)));
    }
    SparseColMat::try_new_from_triplets(n, n, &trips)
        .map_err(|e| Error::Io(format!("sparse assembly failed: {e:?}")))
}

fn faer_solve(
    mat: &SparseColMat<usize, Complex64>,
    b: &[Complex64],
    transpose: bool,
    m: i32,
) -> Result<Vec<Complex64>> {
    let lu = mat.sp_lu().map_err(|e| Error::SingularSystem {
        mode: m,
        condition: f64::INFINITY,
        detail: format!("sparse LU failed: {e:?}"),
    })?;
    let rhs = Mat::<Complex64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = if transpose { lu.solve_transpose(&rhs) } else { lu.solve(&rhs) };
    Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
}

/// Solution of one mode plus diagnostics. `f_m` is unweighted, `τ_m` per
/// boundary node.
pub fn solve_mode_data(
    op: &DiscreteOperator,
    f_m: &[Complex64],
    tau_m: &[Complex64],
    options: &SolveOptions,
) -> Result<(ModeField, ModeReport)> {
    let m = op.m.0;
    let grid = op.grid();
    let b = op.rhs(f_m, tau_m)?;
    let n = op.dim();
    let mut report = ModeReport {
        m,
        path: options.path,
        residual: f64::NAN,
        refinement_steps: 0,
        condition_estimate: f64::NAN,
        discrete_shift: None,
        gauge_constant: None,
        compatibility: None,
        error: None,
    };
    let ell = shift_vector(op);
    let p = grid.boundary_index(0);
    let (mut x, target) = match (options.path, m == 0) {
        (SolvePath::Banded, false) => {
            let f = band_factor(op, &[])?;
            report.condition_estimate = f.condition;
            let mut x = b.clone();
            f.lu.solve_in_place(&mut x);
            // iterative refinement on the factored matrix
            for _ in 0..3 {
                let (r, rel) = residual_of(op, &x, &b);
                if rel <= options.rtol * 1e-2 {
                    break;
                }
                let mut d = r;
                f.lu.solve_in_place(&mut d);
                x.iter_mut().zip(&d).for_each(|(a, d)| *a += d);
                report.refinement_steps += 1;
            }
            (x, b)
        }
        (SolvePath::Banded, true) => {
            let extra: Vec<(usize, usize, Complex64)> =
                (0..n).filter(|&i| ell[i].re != 0.0).map(|i| (i, p, ell[i])).collect();
            let f = band_factor(op, &extra)?;
            report.condition_estimate = f.condition;
            let bordered = |x: &[Complex64]| -> Vec<Complex64> {
                let mut y = op.apply(x);
                y.iter_mut().zip(&ell).for_each(|(y, l)| *y += l * x[p]);
                y
            };
            let mut v = b.clone();
            f.lu.solve_in_place(&mut v);
            for _ in 0..3 {
                let kv = bordered(&v);
                let r: Vec<Complex64> = b.iter().zip(&kv).map(|(b, a)| b - a).collect();
                if norm2(&r) <= options.rtol * 1e-2 * norm2(&b).max(f64::MIN_POSITIVE) {
                    break;
                }
                let mut d = r;
                f.lu.solve_in_place(&mut d);
                v.iter_mut().zip(&d).for_each(|(a, d)| *a += d);
                report.refinement_steps += 1;
            }
            let lambda = v[p];
            report.discrete_shift = Some(lambda.re);
            let target: Vec<Complex64> = b.iter().zip(&ell).map(|(b, l)| b - lambda * l).collect();
            (v, target)
        }
        (SolvePath::SparsePinned { .. }, false) => {
            let mat = faer_matrix(op, None)?;
            (faer_solve(&mat, &b, false, m)?, b)
        }
        (SolvePath::SparsePinned { pin }, true) => {
            if pin >= n {
                return Err(Error::InvalidConfig(format!("pinned node {pin} out of range")));
            }
            // left null vector y of A, normalised by ℓᵀy = 1
            let k_trips: Vec<Triplet<usize, usize, Complex64>> = op
                .triplets()
                .chain((0..n).filter(|&i| ell[i].re != 0.0).map(|i| (i, p, ell[i])))
                .map(|(i, j, v)| Triplet::new(i, j, v))
                .collect();
            let k = SparseColMat::try_new_from_triplets(n, n, &k_trips)
                .map_err(|e| Error::Io(format!("sparse assembly failed: {e:?}")))?;
            let mut ep = vec![Complex64::new(0.0, 0.0); n];
            ep[p] = Complex64::new(1.0, 0.0);
            let y = faer_solve(&k, &ep, true, m)?;
            let lambda: Complex64 = y.iter().zip(&b).map(|(y, b)| y * b).sum();
            report.discrete_shift = Some(lambda.re);
            let target: Vec<Complex64> = b.iter().zip(&ell).map(|(b, l)| b - lambda * l).collect();
            let row = (0..n)
                .max_by(|&a, &c| y[a].norm().total_cmp(&y[c].norm()))
                .expect("nonempty");
            let pinned = faer_matrix(op, Some((row, pin)))?;
            let mut rhs = target.clone();
            rhs[row] = Complex64::new(0.0, 0.0);
            (faer_solve(&pinned, &rhs, false, m)?, target)
        }
    };
    if m == 0 {
        report.gauge_constant = Some(apply_gauge(grid, &mut x).re);
    }
    let (_, rel) = residual_of(op, &x, &target);
    report.residual = rel;
    if !rel.is_finite() || rel > options.rtol {
        return Err(Error::SingularSystem {
            mode: m,
            condition: report.condition_estimate,
            detail: format!("linear residual {rel:e} exceeds rtol {:e}", options.rtol),
        });
    }
    Ok((ModeField { m: op.m, values: x }, report))
}

/// Compatibility check for `m = 0`; returns the report and the `τ₀` shift to
/// apply.
pub fn check_compatibility(problem: &HelicalProblem, options: &SolveOptions) -> Result<(CompatibilityReport, f64)> {
    let (vol, bnd) = problem.compatibility_sides();
    let residual = vol - bnd;
    let threshold = problem.compatibility_threshold(options.compat_factor);
    let mut report = CompatibilityReport {
        residual,
        threshold,
        volume_side: vol,
        boundary_side: bnd,
        override_shift: None,
    };
    if residual.abs() <= threshold {
        return Ok((report, 0.0));
    }
    if !options.allow_incompatible {
        return Err(Error::IncompatibleData { residual, threshold });
    }
    let shift = residual / problem.boundary_measure();
    report.override_shift = Some(shift);
    Ok((report, shift))
}

/// Solve one Fourier mode of the problem.
pub fn solve_mode(m: ModeIndex, problem: &HelicalProblem, options: &SolveOptions) -> Result<(ModeField, ModeReport)> {
    if m.abs() > problem.m_max {
        return Err(Error::AngularResolution { n_phi: problem.grid.n_phi, m_max: m.abs() });
    }
    let op = assemble_mode_system(m, &problem.grid, &problem.config)?;
    let f_m = problem.source_mode(m.0);
    let mut tau_m = problem.tau_mode(m.0);
    let mut compat = None;
    if m.0 == 0 {
        let (report, shift) = check_compatibility(problem, options)?;
        tau_m.iter_mut().for_each(|t| *t += shift);
        compat = Some(report);
    }
    let (field, mut report) = solve_mode_data(&op, &f_m, &tau_m, options)?;
    report.compatibility = compat;
    Ok((field, report))
}

/// Outcome of a full solve: the synthesized field (absent on failure) and a
/// report that is always populated.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub field: Result<Vec<f64>>,
    pub modes: Vec<ModeField>,
    pub report: SolveReport,
}

pub fn solve_full(problem: &HelicalProblem, options: &SolveOptions) -> SolveOutcome {
    let g = &problem.grid;
    let cfg = &problem.config;
    let mm = problem.m_max as i32;
    let results: Vec<(i32, Result<(ModeField, ModeReport)>)> = (-mm..=mm)
        .into_par_iter()
        .map(|m| (m, solve_mode(ModeIndex(m), problem, options)))
        .collect();
    let mut report = SolveReport {
        schema_version: SCHEMA_VERSION,
        dimension: cfg.n(),
        omega: cfg.omega,
        radius: cfg.radius,
        sign: cfg.sign.value() as i32,
        resolution: if g.n_theta > 0 { vec![g.n_r, g.n_theta] } else { vec![g.n_r] },
        n_phi: g.n_phi,
        m_max: problem.m_max,
        light_cylinder_interior: g.light_cylinder_interior,
        out_of_theory: cfg.is_tangent_case(),
        compatibility: None,
        modes: Vec::new(),
        imaginary_residue: None,
        max_residual: 0.0,
        error: None,
    };
    let mut modes = Vec::new();
    let mut first_error: Option<Error> = None;
    for (m, r) in results {
        match r {
            Ok((field, mr)) => {
                report.max_residual = report.max_residual.max(mr.residual);
                if m == 0 {
                    report.compatibility = mr.compatibility.clone();
                }
                report.modes.push(mr);
                modes.push(field);
            }
            Err(e) => {
                if m == 0 {
                    if let Error::IncompatibleData { residual, threshold } = e {
                        let (vol, bnd) = problem.compatibility_sides();
                        report.compatibility = Some(CompatibilityReport {
                            residual,
                            threshold,
                            volume_side: vol,
                            boundary_side: bnd,
                            override_shift: None,
                        });
                    }
                }
                report.modes.push(ModeReport::failed(m, options.path, &e));
                modes.push(ModeField {
                    m: ModeIndex(m),
                    values: vec![Complex64::new(0.0, 0.0); g.node_count()],
                });
                // m = 0 errors take precedence: they are about the data
                if first_error.is_none() || m == 0 {
                    first_error = Some(e);
                }
            }
        }
    }
    let field = match first_error {
        Some(e) => {
            report.error = Some(e.to_string());
            Err(e)
        }
        None => synthesize_field(g, &modes).map(|(u, residue)| {
            report.imaginary_residue = Some(residue);
            u
        }),
    };
    if let Err(e) = &field {
        report.error.get_or_insert_with(|| e.to_string());
    }
    SolveOutcome { field, modes, report }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub m: i32,
    pub method: String,
    /// The `k` smallest singular values, ascending.
    pub singular_values: Vec<f64>,
    pub largest: f64,
    /// `|⟨v_min, 1⟩| / (‖v_min‖ ‖1‖)`.
    pub constant_cosine: f64,
    #[serde(skip)]
    pub vectors: Vec<Vec<Complex64>>,
}

impl SpectrumReport {
    /// Number of computed singular values below `rel · σ_max`.
    pub fn count_below(&self, rel: f64) -> usize {
        self.singular_values.iter().filter(|s| **s < rel * self.largest).count()
    }
}

/// Systems up to this size are probed with a dense SVD.
pub const DENSE_PROBE_LIMIT: usize = 2500;

fn constant_cosine(v: &[Complex64]) -> f64 {
    let s: Complex64 = v.iter().sum();
    s.norm() / (norm2(v) * (v.len() as f64).sqrt()).max(f64::MIN_POSITIVE)
}

/// The `k` smallest singular values of the homogeneous system and their
/// right singular vectors.
pub fn null_space_probe(op: &DiscreteOperator, k: usize) -> Result<SpectrumReport> {
    let n = op.dim();
    let k = k.min(n).max(1);
    if n <= DENSE_PROBE_LIMIT {
        dense_probe(op, k)
    } else {
        inverse_iteration_probe(op, k, 300, 1e-10)
    }
}

fn dense_probe(op: &DiscreteOperator, k: usize) -> Result<SpectrumReport> {
    let n = op.dim();
    let mut a = Mat::<Complex64>::zeros(n, n);
    for (i, j, v) in op.triplets() {
        a[(i, j)] += v;
    }
    let svd = a.svd().map_err(|_| Error::NoConvergence {
        iterations: 0,
        estimates: vec![],
    })?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let largest = values[0];
    let mut singular_values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for idx in (n - k..n).rev() {
        singular_values.push(values[idx]);
        vectors.push((0..n).map(|r| v[(r, idx)]).collect::<Vec<_>>());
    }
    Ok(SpectrumReport {
        m: op.m.0,
        method: "dense_svd".into(),
        constant_cosine: constant_cosine(&vectors[0]),
        singular_values,
        largest,
        vectors,
    })
}

fn orthonormalize(vs: &mut [Vec<Complex64>]) {
    for i in 0..vs.len() {
        for j in 0..i {
            let (head, tail) = vs.split_at_mut(i);
            let proj: Complex64 = head[j].iter().zip(tail[0].iter()).map(|(a, b)| a.conj() * b).sum();
            tail[0].iter_mut().zip(&head[j]).for_each(|(b, a)| *b -= proj * a);
        }
        let nrm = norm2(&vs[i]).max(f64::MIN_POSITIVE);
        vs[i].iter_mut().for_each(|v| *v /= nrm);
    }
}

/// Block inverse iteration on `AᴴA` with Rayleigh–Ritz extraction.
pub fn inverse_iteration_probe(op: &DiscreteOperator, k: usize, max_iter: usize, tol: f64) -> Result<SpectrumReport> {
    let n = op.dim();
    let norm = op.norm1();
    let lu = match op.band_lu(&[]) {
        Ok(lu) => lu,
        Err(_) => {
            // exactly singular in floating point: shift the diagonal slightly
            let shift: Vec<(usize, usize, Complex64)> =
                (0..n).map(|i| (i, i, Complex64::new(1e-14 * norm, 0.0))).collect();
            op.band_lu(&shift).map_err(|z| Error::SingularSystem {
                mode: op.m.0,
                condition: f64::INFINITY,
                detail: format!("zero pivot at row {} even after shift", z.index),
            })?
        }
    };
    let mut rng_state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut vs: Vec<Vec<Complex64>> = (0..k)
        .map(|_| (0..n).map(|_| Complex64::new(next(), next())).collect())
        .collect();
    orthonormalize(&mut vs);
    let mut prev = vec![f64::INFINITY; k];
    let mut estimates = vec![f64::NAN; k];
    let mut converged = false;
    for _ in 0..max_iter {
        for v in vs.iter_mut() {
            lu.solve_transpose_in_place(v, true);
            lu.solve_in_place(v);
        }
        orthonormalize(&mut vs);
        let avs: Vec<Vec<Complex64>> = vs.iter().map(|v| op.apply(v)).collect();
        let gram = Mat::<Complex64>::from_fn(k, k, |i, j| {
            avs[i].iter().zip(&avs[j]).map(|(a, b)| a.conj() * b).sum()
        });
        let eig = gram
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| Error::NoConvergence { iterations: 0, estimates: estimates.clone() })?;
        let w = eig.U();
        let lam = eig.S().column_vector();
        let rotated: Vec<Vec<Complex64>> = (0..k)
            .map(|c| {
                (0..n)
                    .map(|r| (0..k).map(|i| vs[i][r] * w[(i, c)]).sum())
                    .collect()
            })
            .collect();
        vs = rotated;
        estimates = (0..k).map(|i| lam[i].re.max(0.0).sqrt()).collect();
        let change = estimates
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1e-300 * norm))
            .fold(0.0, f64::max);
        prev.clone_from(&estimates);
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: max_iter, estimates });
    }
    // largest singular value by power iteration on AᴴA
    let mut x: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
    let mut largest = 0.0;
    for _ in 0..200 {
        let y = op.apply_adjoint(&op.apply(&x));
        let nrm = norm2(&y);
        let est = (nrm / norm2(&x)).sqrt();
        x = y.into_iter().map(|v| v / nrm).collect();
        if (est - largest).abs() <= 1e-6 * est {
            largest = est;
            break;
        }
        largest = est;
    }
    Ok(SpectrumReport {
        m: op.m.0,
        method: "inverse_iteration".into(),
        constant_cosine: constant_cosine(&vs[0]),
        singular_values: estimates,
        largest,
        vectors: vs,
    })
}
