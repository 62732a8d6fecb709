//! Dense eigendecomposition used to cross-check the structured solvers on
//! small systems.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{assemble_hamiltonian, SystemSpec};

pub const MAX_ORACLE_DIM: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit 2-norm right eigenvector.
    pub vector: Vec<Complex64>,
}

/// All eigenpairs of the full Hamiltonian of a small system.
pub fn dense_eigen_oracle(spec: &SystemSpec) -> Result<Vec<EigenPair>> {
    let h = assemble_hamiltonian(spec)?;
    if h.dim() > MAX_ORACLE_DIM {
        return Err(Error::InvalidArgument(format!(
            "dense oracle limited to dimension {MAX_ORACLE_DIM}, got {}",
            h.dim()
        )));
    }
    dense_eigen(&h.to_dense())
}

/// Eigenpairs of a dense matrix via balancing, complex Schur form and
/// triangular back-substitution.
pub fn dense_eigen(rows: &[Vec<Complex64>]) -> Result<Vec<EigenPair>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let mut a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let scale = balance(&mut a);
    let (q, t) = schur_form(a)?;
    let norm_t = t.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * norm_t;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut v = vec![Complex64::default(); n];
        v[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let s: Complex64 = (j + 1..=i).map(|l| t[(j, l)] * v[l]).sum();
            let mut den = t[(j, j)] - lambda;
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            v[j] = -s / den;
        }
        let mut x: Vec<Complex64> = (0..n).map(|r| (0..=i).map(|c| q[(r, c)] * v[c]).sum()).collect();
        for (xi, d) in x.iter_mut().zip(&scale) {
            *xi *= d;
        }
        let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|c| *c /= norm);
        out.push(EigenPair { value: lambda, vector: x });
    }
    Ok(out)
}

/// `A = Q T Q^H`. Cyclic structures such as rings can stall the shifted QR
/// iteration; those are retried after a fixed unitary similarity.
fn schur_form(a: DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    const MAX_ITER: usize = 100_000;
    if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, MAX_ITER) {
        return Ok(s.unpack());
    }
    let n = a.nrows();
    let mix = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(((7 * i + 13 * j) as f64 * 0.77).sin(), ((3 * i + 5 * j) as f64 * 1.3).cos())
    });
    let u = mix.qr().q();
    let b = u.adjoint() * &a * &u;
    let (q, t) = Schur::try_new(b, f64::EPSILON, MAX_ITER)
        .ok_or_else(|| Error::InvalidArgument("Schur iteration did not converge".into()))?
        .unpack();
    Ok((u * q, t))
}

/// Diagonal similarity `D^-1 A D` with powers of two equalizing row and column
/// norms. Returns `D`.
fn balance(a: &mut DMatrix<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0; n];
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].l1_norm()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].l1_norm()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    d
}

/// `1 - |<a, b>| / (|a| |b|)`.
pub fn overlap_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    1.0 - dot.norm() / (na * nb)
}
