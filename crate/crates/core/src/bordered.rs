//! Linear solves with a tridiagonal matrix bordered by a few dense rows and
//! columns: the lattice block is factored by banded LU with partial pivoting
//! and the emitter block is eliminated through its Schur complement.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Boundary, HamiltonianOperator};

/// `A = [[T, B], [C, D]]` in a permuted ordering: `T` is tridiagonal over the
/// first `n` positions, the border holds the remaining `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BorderedMatrix {
    /// `T[i+1][i]`.
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    /// `T[i][i+1]`.
    pub upper: Vec<Complex64>,
    /// Columns of `B`, each of length `n`.
    pub border_cols: Vec<Vec<Complex64>>,
    /// Rows of `C`, each of length `n`.
    pub border_rows: Vec<Vec<Complex64>>,
    /// `D`, `k x k`, row major.
    pub corner: Vec<Vec<Complex64>>,
    /// Original index of each permuted position (tridiagonal block first).
    pub order: Vec<usize>,
}

impl BorderedMatrix {
    /// `H - shift I`. On a ring the last lattice site moves into the border.
    pub fn from_operator(h: &HamiltonianOperator, shift: Complex64) -> Self {
        let m = h.sites();
        let tri = if h.boundary() == Boundary::Periodic && m > 2 { m - 1 } else { m };
        let order: Vec<usize> = (0..h.dim()).collect();
        let border: Vec<usize> = order[tri..].to_vec();
        let diag = vec![h.onsite() - shift; tri];
        let lower = vec![Complex64::new(h.t_r(), 0.0); tri.saturating_sub(1)];
        let upper = vec![Complex64::new(h.t_l(), 0.0); tri.saturating_sub(1)];
        let border_cols = border.iter().map(|&b| (0..tri).map(|r| h.entry(r, b)).collect()).collect();
        let border_rows = border.iter().map(|&b| (0..tri).map(|c| h.entry(b, c)).collect()).collect();
        let corner = border
            .iter()
            .map(|&r| border.iter().map(|&c| h.entry(r, c) - if r == c { shift } else { Complex64::default() }).collect())
            .collect();
        Self { lower, diag, upper, border_cols, border_rows, corner, order }
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    fn tri_len(&self) -> usize {
        self.diag.len()
    }

    /// `y = A x` in the original ordering.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.tri_len();
        let xp: Vec<Complex64> = self.order.iter().map(|&i| x[i]).collect();
        let (xt, xb) = xp.split_at(n);
        let mut yp = vec![Complex64::default(); self.dim()];
        for i in 0..n {
            let mut s = self.diag[i] * xt[i];
            if i > 0 {
                s += self.lower[i - 1] * xt[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * xt[i + 1];
            }
            for (col, xj) in self.border_cols.iter().zip(xb) {
                s += col[i] * xj;
            }
            yp[i] = s;
        }
        for (j, row) in self.border_rows.iter().enumerate() {
            let mut s: Complex64 = row.iter().zip(xt).map(|(a, b)| a * b).sum();
            s += self.corner[j].iter().zip(xb).map(|(a, b)| a * b).sum::<Complex64>();
            yp[n + j] = s;
        }
        let mut y = vec![Complex64::default(); self.dim()];
        for (p, &i) in self.order.iter().enumerate() {
            y[i] = yp[p];
        }
        y
    }

    pub fn factor(&self) -> Result<BorderedLu> {
        let tri = TriLu::factor(&self.lower, &self.diag, &self.upper)?;
        let n = self.tri_len();
        let k = self.corner.len();
        let tinv_b: Vec<Vec<Complex64>> = self.border_cols.iter().map(|c| tri.solve(c)).collect();
        let mut schur = self.corner.clone();
        for (i, row) in self.border_rows.iter().enumerate() {
            for (j, col) in tinv_b.iter().enumerate() {
                schur[i][j] -= row.iter().zip(col).map(|(a, b)| a * b).sum::<Complex64>();
            }
        }
        let schur = DenseLu::factor(schur).map_err(|j| Error::SingularPivot { index: self.order[n + j] })?;
        debug_assert_eq!(schur.n, k);
        Ok(BorderedLu { tri, tinv_b, schur, matrix: self.clone() })
    }
}

#[derive(Clone, Debug)]
pub struct BorderedLu {
    tri: TriLu,
    tinv_b: Vec<Vec<Complex64>>,
    schur: DenseLu,
    matrix: BorderedMatrix,
}

impl BorderedLu {
    const REFINEMENT_STEPS: usize = 3;

    /// Solves `A x = rhs`, followed by a few steps of iterative refinement.
    /// Refinement matters when the tridiagonal block alone is far more
    /// non-normal than `A`, as for a strongly non-reciprocal ring.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = self.matrix.dim();
        if rhs.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rhs.len() });
        }
        let mut x = self.solve_once(rhs);
        let mut r = residual(&self.matrix, &x, rhs);
        let mut rn = norm(&r);
        for _ in 0..Self::REFINEMENT_STEPS {
            if rn == 0.0 {
                break;
            }
            let dx = self.solve_once(&r);
            let cand: Vec<Complex64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let cr = residual(&self.matrix, &cand, rhs);
            let cn = norm(&cr);
            if !(cn < 0.5 * rn) {
                break;
            }
            (x, r, rn) = (cand, cr, cn);
        }
        Ok(x)
    }

    fn solve_once(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let order = &self.matrix.order;
        let n = self.tri.d.len();
        let rp: Vec<Complex64> = order.iter().map(|&i| rhs[i]).collect();
        let (rt, rb) = rp.split_at(n);
        let tinv_r = self.tri.solve(rt);
        let reduced: Vec<Complex64> = self
            .matrix
            .border_rows
            .iter()
            .zip(rb)
            .map(|(row, r)| r - row.iter().zip(&tinv_r).map(|(a, b)| a * b).sum::<Complex64>())
            .collect();
        let xb = self.schur.solve(reduced);
        let mut xt = tinv_r;
        for (col, xj) in self.tinv_b.iter().zip(&xb) {
            for (x, c) in xt.iter_mut().zip(col) {
                *x -= c * xj;
            }
        }
        let mut x = vec![Complex64::default(); order.len()];
        for (p, v) in xt.into_iter().chain(xb).enumerate() {
            x[order[p]] = v;
        }
        x
    }
}

fn residual(a: &BorderedMatrix, x: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.apply(x).iter().zip(b).map(|(ax, b)| b - ax).collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `(H - shift I) x = rhs`.
pub fn bordered_tridiagonal_solve(h: &HamiltonianOperator, shift: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    BorderedMatrix::from_operator(h, shift).factor()?.solve(rhs)
}

/// Tridiagonal LU with row interchanges, as in LAPACK's `gttrf`.
#[derive(Clone, Debug)]
struct TriLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TriLu {
    fn factor(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        let mut dl = lower.to_vec();
        let mut d = diag.to_vec();
        let mut du = upper.to_vec();
        let mut du2 = vec![Complex64::default(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].l1_norm() >= dl[i].l1_norm() {
                if d[i] != Complex64::default() {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if let Some(index) = d.iter().position(|x| *x == Complex64::default()) {
            return Err(Error::SingularPivot { index });
        }
        Ok(Self { dl, d, du, du2, swapped })
    }

    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.d.len();
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                let v = b[i];
                b[i + 1] -= self.dl[i] * v;
            }
        }
        if n == 0 {
            return b;
        }
        let last = b[n - 1] / self.d[n - 1];
        b[n - 1] = last;
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

/// Dense LU with partial pivoting for the small border block.
#[derive(Clone, Debug)]
struct DenseLu {
    n: usize,
    lu: Vec<Vec<Complex64>>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// On failure returns the column of the zero pivot.
    fn factor(mut a: Vec<Vec<Complex64>>) -> std::result::Result<Self, usize> {
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
            if a[p][c] == Complex64::default() {
                return Err(c);
            }
            a.swap(c, p);
            perm.swap(c, p);
            let pivot = a[c].clone();
            for row in a.iter_mut().skip(c + 1) {
                let f = row[c] / pivot[c];
                row[c] = f;
                for (x, v) in row[c + 1..].iter_mut().zip(&pivot[c + 1..]) {
                    *x -= f * v;
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    fn solve(&self, rhs: Vec<Complex64>) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for r in 0..n {
            for c in 0..r {
                let v = x[c];
                x[r] -= self.lu[r][c] * v;
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                let v = x[c];
                x[r] -= self.lu[r][c] * v;
            }
            x[r] /= self.lu[r][r];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_hamiltonian, EmitterSpec, LatticeSpec, SystemSpec};

    fn dense_solve(a: Vec<Vec<Complex64>>, b: &[Complex64]) -> Vec<Complex64> {
        DenseLu::factor(a).unwrap().solve(b.to_vec())
    }

    fn rhs(n: usize) -> Vec<Complex64> {
        (0..n).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())).collect()
    }

    fn rel_residual(h: &HamiltonianOperator, shift: Complex64, x: &[Complex64], b: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::default(); h.dim()];
        h.apply(x, &mut y);
        let num: f64 = y.iter().zip(x).zip(b).map(|((y, x), b)| (y - shift * x - b).norm_sqr()).sum();
        let den: f64 = b.iter().map(|b| b.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn bare_chain_matches_dense() {
        let spec = SystemSpec::new(LatticeSpec::open(10, 1.0, 0.4), vec![]);
        let h = assemble_hamiltonian(&spec).unwrap();
        let shift = Complex64::new(0.3, 0.1);
        let b = rhs(10);
        let x = bordered_tridiagonal_solve(&h, shift, &b).unwrap();
        let mut a = h.to_dense();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= shift;
        }
        let xd = dense_solve(a, &b);
        for (u, v) in x.iter().zip(&xd) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    fn system(gamma: f64, boundary: Boundary) -> HamiltonianOperator {
        let spec = SystemSpec::new(
            LatticeSpec::open(50, 10.0, gamma).with_boundary(boundary),
            vec![EmitterSpec::giant("b", 20, 1.0, 4, 0.3), EmitterSpec::small("c", 22, 0.7).with_detuning(0.5)],
        );
        assemble_hamiltonian(&spec).unwrap()
    }

    #[test]
    fn emitter_and_ring_residuals() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let h = system(0.5, boundary);
            let shift = Complex64::new(0.01, 0.0);
            let b = rhs(h.dim());
            let x = bordered_tridiagonal_solve(&h, shift, &b).unwrap();
            let r = rel_residual(&h, shift, &x, &b);
            assert!(r < 1e-12, "{boundary:?} {r}");
            let y = BorderedMatrix::from_operator(&h, shift).apply(&x);
            let direct: f64 = y.iter().zip(&b).map(|(y, b)| (y - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(direct < 1e-10);
        }
    }

    #[test]
    fn backward_stable_on_strongly_nonreciprocal_lattice() {
        // |x| / |b| reaches ~β^M here, so only the normwise backward error is small
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let h = system(5.0, boundary);
            let shift = Complex64::new(0.01, 0.0);
            let b = rhs(h.dim());
            let x = bordered_tridiagonal_solve(&h, shift, &b).unwrap();
            let nx = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let nb = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let backward = rel_residual(&h, shift, &x, &b) * nb / (h.norm_bound() * nx + nb);
            assert!(backward < 1e-14, "{boundary:?} {backward}");
        }
    }

    #[test]
    fn exact_eigenvalue_is_singular() {
        let spec = SystemSpec::new(LatticeSpec::open(3, 1.0, 0.0), vec![]);
        let h = assemble_hamiltonian(&spec).unwrap();
        let err = bordered_tridiagonal_solve(&h, Complex64::default(), &rhs(3)).unwrap_err();
        assert!(matches!(err, Error::SingularPivot { index: 2 }), "{err:?}");
    }

    #[test]
    fn singular_border_names_emitter_row() {
        let spec = SystemSpec::new(LatticeSpec::open(4, 1.0, 0.0), vec![EmitterSpec::small("b", 1, 0.0)]);
        let h = assemble_hamiltonian(&spec).unwrap();
        let err = bordered_tridiagonal_solve(&h, Complex64::default(), &rhs(5)).unwrap_err();
        assert!(matches!(err, Error::SingularPivot { index: 4 }), "{err:?}");
    }
}
