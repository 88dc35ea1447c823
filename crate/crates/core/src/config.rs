//! Flat key-value run configuration (TOML).
//!
//! ```toml
//! dimension = 2
//! omega = 2.0
//! radius = 1.0
//! sign = 1
//! resolution = [128]
//! n_phi = 16
//! m_max = 4
//! source = "constant"
//! source_value = 1.0
//! boundary = "compatible"
//! ```

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid};
use crate::profiles::{ManufacturedSolution, TrigPolynomial};
use crate::reduction::{Dimension, HelicalConfig, Sign};
use crate::solver::{HelicalProblem, SolveOptions, SolvePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePreset {
    Zero,
    /// `f ≡ source_value`.
    Constant,
    /// Source of a random regular field with modes `|m| ≤ manufactured_modes`.
    Manufactured,
    /// Random trig polynomial drawn from `seed`.
    Trig,
    /// Tabular file, last column is the value.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPreset {
    Zero,
    /// Constant `τ` that balances the source exactly on the grid.
    Compatible,
    /// Boundary data of the manufactured field (needs `source = "manufactured"`).
    Manufactured,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    Banded,
    SparsePinned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub omega: f64,
    pub radius: f64,
    #[serde(default = "defaults::sign")]
    pub sign: i32,
    /// `[J]` for `n = 2`, `[J, K]` for `n = 3`.
    pub resolution: Vec<usize>,
    #[serde(default = "defaults::n_phi")]
    pub n_phi: usize,
    #[serde(default = "defaults::m_max")]
    pub m_max: usize,

    #[serde(default = "defaults::source")]
    pub source: SourcePreset,
    #[serde(default = "defaults::one")]
    pub source_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<PathBuf>,
    #[serde(default = "defaults::boundary")]
    pub boundary: BoundaryPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_file: Option<PathBuf>,
    #[serde(default = "defaults::manufactured_modes")]
    pub manufactured_modes: usize,
    #[serde(default = "defaults::trig_terms")]
    pub trig_terms: usize,

    #[serde(default = "defaults::seed")]
    pub seed: u64,
    /// Number of grid levels for `convergence`.
    #[serde(default = "defaults::refine")]
    pub refine: usize,
    #[serde(default = "defaults::rtol")]
    pub rtol: f64,
    #[serde(default = "defaults::compat_factor")]
    pub compat_factor: f64,
    #[serde(default)]
    pub allow_incompatible: bool,
    #[serde(default = "defaults::path")]
    pub solve_path: PathChoice,
    #[serde(default = "defaults::pin")]
    pub pin: usize,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,

    /// Point samples for the inequality suite.
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    /// Random instances for the sampled suites.
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    /// Suites run by `verify` when none is named on the command line.
    #[serde(default = "defaults::suites")]
    pub suites: Vec<String>,
}

mod defaults {
    use super::*;
    pub fn sign() -> i32 {
        1
    }
    pub fn n_phi() -> usize {
        16
    }
    pub fn m_max() -> usize {
        4
    }
    pub fn source() -> SourcePreset {
        SourcePreset::Zero
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn boundary() -> BoundaryPreset {
        BoundaryPreset::Compatible
    }
    pub fn manufactured_modes() -> usize {
        4
    }
    pub fn trig_terms() -> usize {
        6
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn refine() -> usize {
        3
    }
    pub fn rtol() -> f64 {
        1e-10
    }
    pub fn compat_factor() -> f64 {
        10.0
    }
    pub fn path() -> PathChoice {
        PathChoice::Banded
    }
    pub fn pin() -> usize {
        0
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn samples() -> usize {
        1_000_000
    }
    pub fn trials() -> usize {
        10
    }
    pub fn suites() -> Vec<String> {
        crate::suites::SUITE_NAMES.iter().map(|s| s.to_string()).collect()
    }
}

impl RunConfig {
    /// Minimal configuration with every optional key at its default.
    pub fn new(dimension: usize, omega: f64, radius: f64, resolution: Vec<usize>) -> Self {
        let text = format!(
            "dimension = {dimension}\nomega = {omega:?}\nradius = {radius:?}\nresolution = {resolution:?}\n"
        );
        Self::parse(&text).expect("minimal config is well formed")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn helical(&self) -> Result<HelicalConfig> {
        let dim = Dimension::from_usize(self.dimension)?;
        let sign = Sign::from_i32(self.sign)?;
        HelicalConfig::new(dim, self.omega, self.radius, sign)
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(&self.helical()?, &self.resolution, self.n_phi)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            rtol: self.rtol,
            compat_factor: self.compat_factor,
            allow_incompatible: self.allow_incompatible,
            path: match self.solve_path {
                PathChoice::Banded => SolvePath::Banded,
                PathChoice::SparsePinned => SolvePath::SparsePinned { pin: self.pin },
            },
        }
    }

    /// The manufactured field behind the `manufactured` presets.
    pub fn manufactured(&self) -> Result<ManufacturedSolution> {
        if self.source != SourcePreset::Manufactured {
            return Err(Error::InvalidConfig(
                "an analytic solution needs source = \"manufactured\"".into(),
            ));
        }
        let dim = Dimension::from_usize(self.dimension)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(ManufacturedSolution::random(self.manufactured_modes, dim, &mut rng))
    }

    /// Problem on the configured grid.
    pub fn problem(&self) -> Result<HelicalProblem> {
        self.problem_at(&self.resolution)
    }

    pub fn problem_at(&self, resolution: &[usize]) -> Result<HelicalProblem> {
        let config = self.helical()?;
        let grid = build_grid(&config, resolution, self.n_phi)?;
        let nv = grid.node_count() * grid.n_phi;
        let nb = grid.boundary_node_count() * grid.n_phi;
        let manufactured = match (self.source, self.boundary) {
            (SourcePreset::Manufactured, _) => Some(self.manufactured()?),
            (_, BoundaryPreset::Manufactured) => {
                return Err(Error::InvalidConfig(
                    "boundary = \"manufactured\" needs source = \"manufactured\"".into(),
                ))
            }
            _ => None,
        };
        let source = match self.source {
            SourcePreset::Zero => vec![0.0; nv],
            SourcePreset::Constant => vec![self.source_value; nv],
            SourcePreset::Manufactured => manufactured.as_ref().unwrap().sample_source(&grid),
            SourcePreset::Trig => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let bw = self.m_max.min(3) as i32;
                let t = TrigPolynomial::random(self.trig_terms, bw, &mut rng);
                crate::field::sample(&grid, |r, th, ph| t.eval(r, th, ph))
            }
            SourcePreset::File => read_column(required(&self.source_file, "source_file")?, nv)?,
        };
        let tau = match self.boundary {
            BoundaryPreset::Zero | BoundaryPreset::Compatible => vec![0.0; nb],
            BoundaryPreset::Manufactured => manufactured.as_ref().unwrap().sample_tau(&grid, &config),
            BoundaryPreset::File => read_column(required(&self.boundary_file, "boundary_file")?, nb)?,
        };
        let mut problem = HelicalProblem::new(config, grid, source, tau, self.m_max)?;
        if self.boundary == BoundaryPreset::Compatible {
            let (vol, _) = problem.compatibility_sides();
            let t = vol / problem.boundary_measure();
            problem.tau.iter_mut().for_each(|v| *v = t);
        }
        Ok(problem)
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("missing key `{key}`")))
}

/// Values from a tabular file: rows of whitespace-separated numbers, the last
/// column taken as the value. Lines starting with `#` and blank lines are
/// skipped.
pub fn read_column(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::with_capacity(expected);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.split_whitespace().last().unwrap_or_default();
        let v: f64 = last.parse().map_err(|_| {
            Error::InvalidConfig(format!("{}:{}: cannot parse `{last}`", path.display(), lineno + 1))
        })?;
        out.push(v);
    }
    if out.len() != expected {
        return Err(Error::ShapeMismatch { expected, found: out.len() });
    }
    Ok(out)
}
