//! Coefficient fields of the reduced operator, light-cylinder classification
//! and the metric-free boundary co-normal.
//!
//! Cylindrical coordinates on the reduced manifold are `(ρ, φ, zⁱ)`, where
//! `φ` is the co-rotating angle. The reduced equation in density form reads
//! `∂_α(h^{αβ} u_β) = σ f` with
//!
//! ```text
//! χ(ρ)   = 1 - Ω²ρ²
//! σ      = ρ
//! h^{ρρ} = ρ,   h^{ij} = ρ δ^{ij},   h^{φφ} = χ/ρ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `χ` used when classifying points against the light
/// cylinder.
pub const LIGHT_CYLINDER_TOL: f64 = 1e-12;

/// Relative tolerance for "this point lies on the sphere `r = R`".
pub const ON_SPHERE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn from_usize(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            _ => Err(Error::InvalidConfig(format!(
                "dimension must be 2 or 3, got {n}"
            ))),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }
}

/// Branch of the Sommerfeld condition: `+1` outgoing, `-1` ingoing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i32(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::InvalidConfig(format!("sign must be +1 or -1, got {s}"))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Problem parameters shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelicalConfig {
    pub dim: Dimension,
    pub omega: f64,
    pub radius: f64,
    pub sign: Sign,
}

impl HelicalConfig {
    pub fn new(dim: Dimension, omega: f64, radius: f64, sign: Sign) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidConfig(format!("omega must be positive, got {omega}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            dim,
            omega,
            radius,
            sign,
        })
    }

    pub fn n(&self) -> usize {
        self.dim.as_usize()
    }

    pub fn light_cylinder_radius(&self) -> f64 {
        1.0 / self.omega
    }

    /// The boundary sphere crosses the light cylinder (`ΩR > 1`).
    pub fn boundary_crosses_light_cylinder(&self) -> bool {
        self.omega * self.radius > 1.0
    }

    /// `ΩR = 1`: the boundary is tangent to the light cylinder, a case no
    /// uniqueness statement covers.
    pub fn is_tangent_case(&self) -> bool {
        (self.omega * self.radius - 1.0).abs() <= 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    Elliptic,
    LightCylinder,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSample {
    pub rho: f64,
    pub chi: f64,
    pub sigma: f64,
    pub h_rho_rho: f64,
    /// `h^{zz}`; only meaningful for `n = 3`.
    pub h_zz: Option<f64>,
    pub h_phi_phi: f64,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::Domain(format!("cylindrical radius must be >= 0, got {rho}")));
    }
    Ok(())
}

pub fn chi(rho: f64, config: &HelicalConfig) -> Result<f64> {
    check_rho(rho)?;
    Ok(chi_unchecked(rho, config.omega))
}

#[inline]
pub(crate) fn chi_unchecked(rho: f64, omega: f64) -> f64 {
    1.0 - omega * omega * rho * rho
}

pub fn classify_point(rho: f64, config: &HelicalConfig, tol: f64) -> Result<RegionTag> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let c = chi(rho, config)?;
    Ok(if c > tol {
        RegionTag::Elliptic
    } else if c < -tol {
        RegionTag::Hyperbolic
    } else {
        RegionTag::LightCylinder
    })
}

/// Pointwise coefficient fields. The axis `ρ = 0` is rejected because
/// `h^{φφ}` is singular there.
pub fn coefficients(rho: f64, config: &HelicalConfig) -> Result<CoefficientSample> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Domain(format!(
            "coefficients need rho > 0 (h^φφ is singular on the axis), got {rho}"
        )));
    }
    let chi = chi_unchecked(rho, config.omega);
    Ok(CoefficientSample {
        rho,
        chi,
        sigma: rho,
        h_rho_rho: rho,
        h_zz: match config.dim {
            Dimension::Two => None,
            Dimension::Three => Some(rho),
        },
        h_phi_phi: 1.0 / rho - config.omega * config.omega * rho,
    })
}

/// A point of the boundary sphere in spherical coordinates: `angles = [φ]`
/// for `n = 2`, `[θ, φ]` for `n = 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPoint {
    pub r: f64,
    pub angles: Vec<f64>,
}

impl SphericalPoint {
    pub fn circle(r: f64, phi: f64) -> Self {
        Self { r, angles: vec![phi] }
    }

    pub fn sphere(r: f64, theta: f64, phi: f64) -> Self {
        Self {
            r,
            angles: vec![theta, phi],
        }
    }
}

/// Cartesian embedding `x(r, angles)` and its Jacobian columns
/// `∂x/∂r, ∂x/∂angle_1, ...`.
fn embedding_frame(r: f64, angles: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    match angles.len() {
        1 => {
            let (s, c) = angles[0].sin_cos();
            let x = vec![r * c, r * s];
            let d_r = vec![c, s];
            let d_phi = vec![-r * s, r * c];
            (x, vec![d_r, d_phi])
        }
        2 => {
            let (st, ct) = angles[0].sin_cos();
            let (sp, cp) = angles[1].sin_cos();
            let x = vec![r * st * cp, r * st * sp, r * ct];
            let d_r = vec![st * cp, st * sp, ct];
            let d_t = vec![r * ct * cp, r * ct * sp, -r * st];
            let d_p = vec![-r * st * sp, r * st * cp, 0.0];
            (x, vec![d_r, d_t, d_p])
        }
        _ => unreachable!("only circles and 2-spheres are supported"),
    }
}

/// Permutation parity of a sequence of distinct indices (+1, -1), or 0 if an
/// index repeats.
fn levi_civita(idx: &[usize]) -> f64 {
    let mut sign = 1.0;
    let mut v = idx.to_vec();
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if v[i] == v[j] {
                return 0.0;
            }
        }
    }
    for i in 0..v.len() {
        while v[i] != i {
            let t = v[i];
            v.swap(i, t);
            sign = -sign;
        }
    }
    sign
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `n_β = (1/(n-1)!) (i_*ξ)^{α₁…α_{n-1}} η_{βα₁…α_{n-1}}` evaluated in
/// Cartesian components, with `ξ` the coordinate density of the angular chart
/// on the sphere and `η` the Cartesian Levi-Civita symbol.
fn conormal_cartesian(tangents: &[Vec<f64>]) -> Vec<f64> {
    let n = tangents.len() + 1;
    let k = tangents.len();
    let perms_k = permutations(k);
    let mut out = vec![0.0; n];
    // push-forward (i_*ξ)^{α₁…α_k} = Σ_σ sgn(σ) Π_i T_{σ(i)}^{α_i}
    let mut alphas = vec![0usize; k];
    loop {
        let mut pushed = 0.0;
        for sigma in &perms_k {
            let mut prod = levi_civita(sigma);
            for (i, &a) in alphas.iter().enumerate() {
                prod *= tangents[sigma[i]][a];
            }
            pushed += prod;
        }
        if pushed != 0.0 {
            for (beta, o) in out.iter_mut().enumerate() {
                let mut idx = Vec::with_capacity(n);
                idx.push(beta);
                idx.extend_from_slice(&alphas);
                *o += pushed * levi_civita(&idx);
            }
        }
        // next multi-index
        let mut pos = 0;
        loop {
            if pos == k {
                return out.into_iter().map(|v| v / factorial(k)).collect();
            }
            alphas[pos] += 1;
            if alphas[pos] < n {
                break;
            }
            alphas[pos] = 0;
            pos += 1;
        }
    }
}

fn conormal_regular(r: f64, angles: &[f64]) -> Vec<f64> {
    let (_, frame) = embedding_frame(r, angles);
    let tangents = &frame[1..];
    let n_cart = conormal_cartesian(tangents);
    // Covector density: pull back with the chart Jacobian and divide by
    // det(∂x/∂x') to account for the weight of η.
    let n = frame.len();
    let mut jac = vec![vec![0.0; n]; n];
    for (col, v) in frame.iter().enumerate() {
        for (row, x) in v.iter().enumerate() {
            jac[row][col] = *x;
        }
    }
    let det = determinant(&jac);
    frame
        .iter()
        .map(|col| col.iter().zip(&n_cart).map(|(a, b)| a * b).sum::<f64>() / det)
        .collect()
}

fn determinant(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!(),
    }
}

/// Co-normal `n_α` on `∂B` from the metric-free contraction, returned in
/// spherical components `(r, angles...)`. The outward orientation makes the
/// result the covector `dr`.
///
/// At the poles of the 2-sphere the `(θ, φ)` chart degenerates; there the
/// contraction is evaluated in a chart rotated so the point sits on its
/// equator. `r` is rotation invariant, so the components carry over.
pub fn conormal_spherical(point: &SphericalPoint, config: &HelicalConfig) -> Result<Vec<f64>> {
    let expected = config.n() - 1;
    if point.angles.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: point.angles.len(),
        });
    }
    let distance = (point.r - config.radius).abs();
    if distance > ON_SPHERE_TOL * config.radius {
        return Err(Error::OffSphere { distance });
    }
    let r = point.r;
    match config.dim {
        Dimension::Two => Ok(conormal_regular(r, &point.angles)),
        Dimension::Three => {
            let theta = point.angles[0];
            if theta.sin().abs() > 1e-6 {
                Ok(conormal_regular(r, &point.angles))
            } else {
                // Rotating the polar axis onto x sends the poles to θ' = π/2.
                let phi_rot = if theta.cos() > 0.0 { 0.0 } else { std::f64::consts::PI };
                Ok(conormal_regular(r, &[std::f64::consts::FRAC_PI_2, phi_rot]))
            }
        }
    }
}
