//! Dense complex linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Kronecker product of two column vectors.
pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Kronecker product of two matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Real inner product `Re tr(A^H B)`.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `‖X − X^H‖_F`.
pub fn hermitian_defect(x: &CMat) -> f64 {
    let n = x.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (x[(i, j)] - x[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

/// `(X + X^H) / 2`.
pub fn hermitian_part(x: &CMat) -> CMat {
    let n = x.nrows();
    CMat::from_fn(n, n, |i, j| (x[(i, j)] + x[(j, i)].conj()) * 0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn hermitian_eigen(x: &CMat) -> Result<HermitianEigen> {
    if !x.is_square() {
        return Err(Error::InvalidDimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in eigenproblem".into()));
    }
    let n = x.nrows();
    let m = faer::Mat::<Complex64>::from_fn(n, n, |i, j| x[(i, j)]);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    // faer returns eigenvalues in nondecreasing order
    let s = eig.S();
    let u = eig.U();
    let values = (0..n).map(|i| s[i].re).collect();
    let vectors = CMat::from_fn(n, n, |r, c| u[(r, c)]);
    Ok(HermitianEigen { values, vectors })
}

pub fn min_eigenvalue(x: &CMat) -> Result<f64> {
    Ok(hermitian_eigen(&hermitian_part(x))?
        .values
        .first()
        .copied()
        .unwrap_or(0.0))
}

/// `V diag(w) V^H` restricted to the columns listed in `cols`.
pub(crate) fn reconstruct(vectors: &CMat, weights: &[(usize, f64)]) -> CMat {
    let n = vectors.nrows();
    let mut out = CMat::zeros(n, n);
    for &(c, w) in weights {
        let v = vectors.column(c);
        for j in 0..n {
            let vj = v[j].conj() * w;
            for i in j..n {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    for j in 0..n {
        out[(j, j)].im = 0.0;
        for i in (j + 1)..n {
            out[(j, i)] = out[(i, j)].conj();
        }
    }
    out
}

pub fn is_finite_vec(v: &CVec) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite_mat(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Draws a circularly-symmetric complex Gaussian sample with variance `var`.
pub(crate) fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    use rand_distr::{Distribution, StandardNormal};
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}
