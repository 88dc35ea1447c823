//! Per-mode sparse systems: interior flux stencils, Sommerfeld rows on
//! `r = R` and regularity rows on the axis.
//!
//! Row scaling: interior rows are exactly the density-weighted operator of
//! [`crate::modes::mode_operator_apply`]. Boundary rows are the Sommerfeld
//! residual multiplied by `R^{n-1}/h_r`, and axis rows are scaled so their
//! diagonal is comparable to that of nearby interior rows. The scale of each
//! row is kept in [`DiscreteOperator::row_scale`].

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::band::{BandLu, ZeroPivot};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modes::ModeIndex;
use crate::reduction::{Dimension, HelicalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Interior,
    Boundary,
    /// Finite-volume balance over the half cell at the axis (`m = 0`).
    AxisFlux,
    /// `u_m = 0` on the axis (`m ≠ 0`).
    AxisZero,
    /// Finite-volume balance over the small ball at the origin (`n = 3`, `m = 0`).
    OriginFlux,
    /// Ties the duplicate origin nodes to `(0, 0)` (`n = 3`, `m = 0`).
    OriginTie,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub m: ModeIndex,
    pub rows: Vec<Vec<(usize, Complex64)>>,
    pub kinds: Vec<RowKind>,
    pub row_scale: Vec<f64>,
    /// Lower / upper bandwidth of the natural node ordering.
    pub kl: usize,
    pub ku: usize,
    grid: Grid,
}

fn cz(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

pub fn assemble_mode_system(m: ModeIndex, grid: &Grid, config: &HelicalConfig) -> Result<DiscreteOperator> {
    if config.dim != grid.dim || (config.omega - grid.omega).abs() > 0.0 || config.radius != grid.radius {
        return Err(Error::InvalidConfig(
            "grid was not built for this configuration".into(),
        ));
    }
    let n = grid.node_count();
    let mut rows = vec![Vec::new(); n];
    let mut kinds = vec![RowKind::Interior; n];
    let mut scale = vec![1.0; n];
    let mm = m.0 as f64;
    let m2 = mm * mm;
    let h = grid.h_r;
    let jr = grid.n_r;
    let rot = Complex64::new(0.0, config.sign.value() * mm * config.omega);
    let boundary_scale = config.radius.powi(config.n() as i32 - 1) / h;

    let sommerfeld = |idx: &[usize; 3]| -> Vec<(usize, Complex64)> {
        vec![
            (idx[0], (cz(1.5 / h) + rot) * boundary_scale),
            (idx[1], cz(-2.0 / h * boundary_scale)),
            (idx[2], cz(0.5 / h * boundary_scale)),
        ]
    };

    match grid.dim {
        Dimension::Two => {
            if m.0 == 0 {
                rows[0] = vec![(0, cz(-2.0 / h)), (1, cz(2.0 / h))];
                kinds[0] = RowKind::AxisFlux;
            } else {
                rows[0] = vec![(0, cz(2.0 / h))];
                kinds[0] = RowKind::AxisZero;
            }
            scale[0] = 2.0 / h;
            for j in 1..jr {
                let rp = grid.r(j) + 0.5 * h;
                let rm = grid.r(j) - 0.5 * h;
                let hpp = grid.coefficients(j, 0).h_pp;
                rows[j] = vec![
                    (j - 1, cz(rm / (h * h))),
                    (j, cz(-(rp + rm) / (h * h) - m2 * hpp)),
                    (j + 1, cz(rp / (h * h))),
                ];
            }
            rows[jr] = sommerfeld(&[jr, jr - 1, jr - 2]);
            kinds[jr] = RowKind::Boundary;
            scale[jr] = boundary_scale;
        }
        Dimension::Three => {
            let kt = grid.n_theta;
            let ht = grid.h_theta;
            let idx = |j: usize, k: usize| grid.index(j, k);
            // origin
            let origin_scale = 2.0 / h;
            if m.0 == 0 {
                let w = grid.boundary_weights();
                let rh = 0.5 * h;
                let c: Vec<f64> = (0..=kt)
                    .map(|k| w[k] * grid.theta(k).sin() * rh * rh / h)
                    .collect();
                let total: f64 = c.iter().sum();
                let f = origin_scale / total;
                let mut row: Vec<(usize, Complex64)> = vec![(idx(0, 0), cz(-total * f))];
                row.extend((0..=kt).filter(|&k| c[k] != 0.0).map(|k| (idx(1, k), cz(c[k] * f))));
                rows[idx(0, 0)] = row;
                kinds[idx(0, 0)] = RowKind::OriginFlux;
                scale[idx(0, 0)] = f;
                for k in 1..=kt {
                    rows[idx(0, k)] = vec![(idx(0, 0), cz(-origin_scale)), (idx(0, k), cz(origin_scale))];
                    kinds[idx(0, k)] = RowKind::OriginTie;
                    scale[idx(0, k)] = origin_scale;
                }
            } else {
                for k in 0..=kt {
                    rows[idx(0, k)] = vec![(idx(0, k), cz(origin_scale))];
                    kinds[idx(0, k)] = RowKind::AxisZero;
                    scale[idx(0, k)] = origin_scale;
                }
            }
            // pole half cells: divide by ∫_0^{h_θ/2} sinθ dθ, then scale by h_θ/2
            let half = 0.5 * ht;
            let mu = 1.0 - half.cos();
            let pole_scale = half;
            let polar_coupling = half.sin() / (mu * ht) * pole_scale;
            for j in 1..=jr {
                let rp = grid.r(j) + 0.5 * h;
                let rm = grid.r(j) - 0.5 * h;
                for (k, inner) in [(0usize, 1usize), (kt, kt - 1)] {
                    let here = idx(j, k);
                    let diag = if j < jr {
                        pole_scale * (rp * rp + rm * rm) / (h * h) + polar_coupling
                    } else {
                        boundary_scale * 1.5 / h
                    };
                    if m.0 != 0 {
                        rows[here] = vec![(here, cz(diag))];
                        kinds[here] = RowKind::AxisZero;
                        scale[here] = diag;
                    } else if j < jr {
                        let r2 = grid.r(j) * grid.r(j);
                        rows[here] = vec![
                            (idx(j - 1, k), cz(pole_scale * rm * rm / (h * h))),
                            (here, cz(-diag)),
                            (idx(j + 1, k), cz(pole_scale * rp * rp / (h * h))),
                            (idx(j, inner), cz(polar_coupling)),
                        ];
                        kinds[here] = RowKind::AxisFlux;
                        // RHS is pole_scale · r² f
                        scale[here] = pole_scale * r2;
                    } else {
                        rows[here] = sommerfeld(&[here, idx(j - 1, k), idx(j - 2, k)]);
                        kinds[here] = RowKind::Boundary;
                        scale[here] = boundary_scale;
                    }
                }
                for k in 1..kt {
                    let here = idx(j, k);
                    if j == jr {
                        rows[here] = sommerfeld(&[here, idx(j - 1, k), idx(j - 2, k)]);
                        kinds[here] = RowKind::Boundary;
                        scale[here] = boundary_scale;
                        continue;
                    }
                    let s = grid.theta(k).sin();
                    let tp = (grid.theta(k) + half).sin();
                    let tm = (grid.theta(k) - half).sin();
                    let hpp = grid.coefficients(j, k).h_pp;
                    let ar = s * rm * rm / (h * h);
                    let br = s * rp * rp / (h * h);
                    let at = tm / (ht * ht);
                    let bt = tp / (ht * ht);
                    rows[here] = vec![
                        (idx(j - 1, k), cz(ar)),
                        (idx(j, k - 1), cz(at)),
                        (here, cz(-(ar + br + at + bt) - m2 * hpp)),
                        (idx(j, k + 1), cz(bt)),
                        (idx(j + 1, k), cz(br)),
                    ];
                }
            }
        }
    }

    let mut kl = 0;
    let mut ku = 0;
    for (i, row) in rows.iter().enumerate() {
        for &(j, _) in row {
            if j < i {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
    }
    Ok(DiscreteOperator {
        m,
        rows,
        kinds,
        row_scale: scale,
        kl,
        ku,
        grid: grid.clone(),
    })
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                y[j] += v.conj() * x[i];
            }
        }
        y
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Largest number of nonzeros in any interior row.
    pub fn max_interior_row_nnz(&self) -> usize {
        self.rows
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k == RowKind::Interior)
            .map(|(r, _)| r.len())
            .max()
            .unwrap_or(0)
    }

    /// Indices of the Sommerfeld rows.
    pub fn boundary_rows(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.kinds[i] == RowKind::Boundary).collect()
    }

    /// Right-hand side for the unweighted source `f_m` (at every node) and
    /// boundary data `τ_m` (at every boundary node).
    pub fn rhs(&self, f: &[Complex64], tau: &[Complex64]) -> Result<Vec<Complex64>> {
        let g = &self.grid;
        if f.len() != g.node_count() {
            return Err(Error::ShapeMismatch {
                expected: g.node_count(),
                found: f.len(),
            });
        }
        if tau.len() != g.boundary_node_count() {
            return Err(Error::ShapeMismatch {
                expected: g.boundary_node_count(),
                found: tau.len(),
            });
        }
        let h = g.h_r;
        Ok((0..self.dim())
            .map(|i| {
                let (j, k) = g.split(i);
                match self.kinds[i] {
                    RowKind::Interior => f[i] * g.sigma(j, k),
                    RowKind::Boundary => tau[k] * self.row_scale[i],
                    RowKind::AxisZero | RowKind::OriginTie => Complex64::new(0.0, 0.0),
                    RowKind::AxisFlux => match g.dim {
                        Dimension::Two => f[i] * (0.5 * h),
                        Dimension::Three => f[i] * self.row_scale[i],
                    },
                    RowKind::OriginFlux => {
                        let vol = 2.0 / 3.0 * (0.5 * h).powi(3);
                        f[i] * vol * self.row_scale[i]
                    }
                }
            })
            .collect())
    }

    /// Banded LU of the operator, optionally with extra entries added.
    pub fn band_lu(&self, extra: &[(usize, usize, Complex64)]) -> std::result::Result<BandLu, ZeroPivot> {
        let mut kl = self.kl;
        let mut ku = self.ku;
        for &(i, j, _) in extra {
            if j < i {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        BandLu::factor(
            self.dim(),
            kl,
            ku,
            self.triplets().chain(extra.iter().copied()),
        )
    }

    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.dim()];
        for (_, j, v) in self.triplets() {
            col[j] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Plain-text triplet dump: a header line, then `row col re im` per entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# mode {} size {} nnz {}", self.m.0, self.dim(), self.nnz())?;
        writeln!(w, "row col re im")?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{i} {j} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Parse a triplet dump back into `(row, col, value)` entries.
pub fn read_triplets(text: &str) -> Result<Vec<(usize, usize, Complex64)>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("row") {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Io(format!("line {}: malformed triplet `{line}`", line_no + 1));
        if parts.len() != 4 {
            return Err(bad());
        }
        let i = parts[0].parse().map_err(|_| bad())?;
        let j = parts[1].parse().map_err(|_| bad())?;
        let re: f64 = parts[2].parse().map_err(|_| bad())?;
        let im: f64 = parts[3].parse().map_err(|_| bad())?;
        out.push((i, j, Complex64::new(re, im)));
    }
    Ok(out)
}

impl Grid {
    /// Node table: `index j k r theta rho z`.
    pub fn write_nodes<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index j k r theta rho z")?;
        for i in 0..self.node_count() {
            let (j, k) = self.split(i);
            writeln!(
                w,
                "{i} {j} {k} {:.17e} {:.17e} {:.17e} {:.17e}",
                self.r(j),
                self.theta(k),
                self.rho(j, k),
                self.z(j, k)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::modes::{mode_boundary_residual, mode_operator_apply, ModeField};
    use crate::reduction::Sign;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize) -> HelicalConfig {
        HelicalConfig::new(Dimension::from_usize(n).unwrap(), 1.0, 2.0, Sign::Minus).unwrap()
    }

    fn grid(n: usize) -> Grid {
        let res = if n == 2 { vec![32] } else { vec![24, 18] };
        build_grid(&cfg(n), &res, 8).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn assembled_matches_matrix_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3] {
            let g = grid(n);
            let c = cfg(n);
            for m in [-2, 0, 1, 3] {
                let op = assemble_mode_system(ModeIndex(m), &g, &c).unwrap();
                for _ in 0..20 {
                    let x = random_vec(g.node_count(), &mut rng);
                    let ax = op.apply(&x);
                    let field = ModeField { m: ModeIndex(m), values: x.clone() };
                    let lx = mode_operator_apply(&field, &g, &c).unwrap();
                    let zero_tau = vec![Complex64::new(0.0, 0.0); g.boundary_node_count()];
                    let bx = mode_boundary_residual(&field, &zero_tau, &g, &c).unwrap();
                    let scale = ax.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    for i in 0..g.node_count() {
                        let (j, k) = g.split(i);
                        match op.kinds[i] {
                            RowKind::Interior => {
                                assert!((ax[i] - lx[i]).norm() <= 1e-13 * scale, "interior {i}");
                            }
                            RowKind::Boundary => {
                                assert_eq!(j, g.n_r);
                                let expect = bx[k] * op.row_scale[i];
                                assert!((ax[i] - expect).norm() <= 1e-13 * scale, "boundary {i}");
                            }
                            _ => assert!(g.is_axis(j, k)),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn stencil_widths() {
        let op = assemble_mode_system(ModeIndex(1), &grid(2), &cfg(2)).unwrap();
        assert!(op.max_interior_row_nnz() <= 3);
        assert_eq!((op.kl, op.ku), (2, 1));
        let op = assemble_mode_system(ModeIndex(2), &grid(3), &cfg(3)).unwrap();
        assert!(op.max_interior_row_nnz() <= 5);
    }

    #[test]
    fn constants_are_annihilated_for_m0() {
        for n in [2, 3] {
            let g = grid(n);
            let op = assemble_mode_system(ModeIndex(0), &g, &cfg(n)).unwrap();
            let one = vec![Complex64::new(1.0, 0.0); g.node_count()];
            let scale = op.norm1();
            assert!(op.apply(&one).iter().all(|v| v.norm() <= 1e-13 * scale));
        }
    }

    #[test]
    fn triplet_round_trip() {
        let op = assemble_mode_system(ModeIndex(1), &grid(2), &cfg(2)).unwrap();
        let mut buf = Vec::new();
        op.write_triplets(&mut buf).unwrap();
        let back = read_triplets(std::str::from_utf8(&buf).unwrap()).unwrap();
        let orig: Vec<_> = op.triplets().collect();
        assert_eq!(back.len(), orig.len());
        for (a, b) in back.iter().zip(&orig) {
            assert_eq!((a.0, a.1), (b.0, b.1));
            assert_eq!(a.2, b.2);
        }
        assert!(read_triplets("1 2 x 4").is_err());
    }

    #[test]
    fn rhs_shape_checks() {
        let g = grid(2);
        let op = assemble_mode_system(ModeIndex(0), &g, &cfg(2)).unwrap();
        let f = vec![Complex64::new(1.0, 0.0); g.node_count()];
        assert!(op.rhs(&f, &[]).is_err());
        assert!(op.rhs(&f[1..], &[Complex64::new(0.0, 0.0)]).is_err());
    }
}
