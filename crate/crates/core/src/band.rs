//! Banded LU factorization with partial pivoting for complex systems.
//!
//! Rows are stored in windows of width `2·kl + ku + 1` starting at column
//! `i - kl`, which leaves room for the fill produced by row interchanges.
//! `L` is kept as the sequence of Gauss transforms, as in LAPACK's `gbtrf`.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// Upper factor `U`, row windows.
    rows: Vec<Complex64>,
    piv: Vec<usize>,
    /// Multipliers of step `k` for rows `k+1..=k+kl`.
    mult: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPivot {
    pub index: usize,
}

impl BandLu {
    /// Factor an `n × n` matrix given as `(row, col, value)` entries (duplicates
    /// are summed). Every entry must satisfy `-kl <= col - row <= ku`.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self, ZeroPivot> {
        let width = 2 * kl + ku + 1;
        let mut rows = vec![Complex64::new(0.0, 0.0); n * width];
        for (i, j, v) in entries {
            assert!(
                j + kl >= i && j <= i + ku,
                "entry ({i}, {j}) outside band kl={kl}, ku={ku}"
            );
            rows[i * width + (j + kl - i)] += v;
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            rows,
            piv: vec![0; n],
            mult: vec![Complex64::new(0.0, 0.0); n * kl.max(1)],
        };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        // caller guarantees i - kl <= j < i - kl + width
        self.rows[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        let w = self.width;
        let kl = self.kl;
        &mut self.rows[i * w + (j + kl - i)]
    }

    fn eliminate(&mut self) -> Result<(), ZeroPivot> {
        let n = self.n;
        let kl = self.kl;
        let upper = kl + self.ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + upper).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).norm();
            for i in (k + 1)..=last_row {
                let v = self.at(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.piv[k] = p;
            if best == 0.0 {
                return Err(ZeroPivot { index: k });
            }
            if p != k {
                for j in k..=last_col {
                    let a = self.at(k, j);
                    let b = self.at(p, j);
                    *self.at_mut(k, j) = b;
                    *self.at_mut(p, j) = a;
                }
            }
            let pivot = self.at(k, k);
            for i in (k + 1)..=last_row {
                let l = self.at(i, k) / pivot;
                self.mult[k * kl + (i - k - 1)] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                *self.at_mut(i, k) = Complex64::new(0.0, 0.0);
                for j in (k + 1)..=last_col {
                    let ukj = self.at(k, j);
                    *self.at_mut(i, j) -= l * ukj;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest and largest `|u_kk|`.
    pub fn pivot_range(&self) -> (f64, f64) {
        (0..self.n)
            .map(|k| self.at(k, k).norm())
            .fold((f64::INFINITY, 0.0), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        let upper = kl + self.ku;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            let last_row = (k + kl).min(n - 1);
            for i in (k + 1)..=last_row {
                b[i] -= self.mult[k * kl + (i - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + upper).min(n - 1);
            let mut s = b[k];
            for j in (k + 1)..=last_col {
                s -= self.at(k, j) * b[j];
            }
            b[k] = s / self.at(k, k);
        }
    }

    /// Solve `Aᵀ x = b`, or `Aᴴ x = b` when `conjugate` is set.
    pub fn solve_transpose_in_place(&self, b: &mut [Complex64], conjugate: bool) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        let upper = kl + self.ku;
        let cj = |v: Complex64| if conjugate { v.conj() } else { v };
        // Uᵀ z = b (forward, column-oriented)
        for k in 0..n {
            b[k] /= cj(self.at(k, k));
            let bk = b[k];
            let last_col = (k + upper).min(n - 1);
            for j in (k + 1)..=last_col {
                b[j] -= cj(self.at(k, j)) * bk;
            }
        }
        for k in (0..n).rev() {
            let last_row = (k + kl).min(n - 1);
            let mut s = b[k];
            for i in (k + 1)..=last_row {
                s -= cj(self.mult[k * kl + (i - k - 1)]) * b[i];
            }
            b[k] = s;
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }

    /// Hager–Higham estimate of `‖A⁻¹‖₁`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            let new_est: f64 = y.iter().map(|v| v.norm()).sum();
            let mut z: Vec<Complex64> = y
                .iter()
                .map(|v| {
                    let a = v.norm();
                    if a > 0.0 {
                        v / a
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect();
            self.solve_transpose_in_place(&mut z, true);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if new_est <= est || zmax <= ztx {
                est = est.max(new_est);
                break;
            }
            est = new_est;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[jmax] = Complex64::new(1.0, 0.0);
        }
        est
    }
}
