//! Two-dimensional atoms and the two-level Toeplitz structure.
//!
//! Atoms are `g(θ, φ) = conj(a_T(θ)) ⊗ a_R(φ)`, so a vectorized channel index
//! runs over the receive antenna fastest. [`toeplitz_embed`] follows the same
//! ordering: the outer (block) level is the transmit array and the inner level
//! the receive array. Entry `((i, r), (i', r'))` of `S(U)` is `u(i − i', r − r')`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::steering_vector;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigen, hermitian_part, kron_vec, reconstruct, CMat, CVec};

/// Transmit/receive array sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayDims {
    pub n_tx: usize,
    pub n_rx: usize,
}

impl ArrayDims {
    pub fn new(n_tx: usize, n_rx: usize) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::InvalidDimension("array sizes must be positive".into()));
        }
        Ok(Self { n_tx, n_rx })
    }

    /// `N_t · N_r`.
    pub fn len(&self) -> usize {
        self.n_tx * self.n_rx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Lag array `u(p, q)`, `p ∈ [−(N_t−1), N_t−1]`, `q ∈ [−(N_r−1), N_r−1]`,
/// with `u(−p, −q) = conj(u(p, q))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelSpectrum {
    dims: ArrayDims,
    entries: Vec<Complex64>,
}

impl TwoLevelSpectrum {
    pub fn zeros(dims: ArrayDims) -> Self {
        let len = (2 * dims.n_tx - 1) * (2 * dims.n_rx - 1);
        Self {
            dims,
            entries: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Builds a spectrum from a generator; only the conjugate-symmetric part
    /// is kept if `f` is not already symmetric.
    pub fn from_fn(dims: ArrayDims, mut f: impl FnMut(isize, isize) -> Complex64) -> Self {
        let mut u = Self::zeros(dims);
        for (p, q) in u.lags().collect::<Vec<_>>() {
            let i = u.index(p, q);
            u.entries[i] = f(p, q);
        }
        u.symmetrize();
        u
    }

    /// Checked constructor over the raw entry array, `p` major.
    pub fn from_entries(dims: ArrayDims, entries: Vec<Complex64>) -> Result<Self> {
        let len = (2 * dims.n_tx - 1) * (2 * dims.n_rx - 1);
        if entries.len() != len {
            return Err(Error::InvalidDimension(format!(
                "expected {len} lag entries, got {}",
                entries.len()
            )));
        }
        let u = Self { dims, entries };
        let scale = u.norm().max(1.0);
        if u.symmetry_defect() > 1e-12 * scale {
            return Err(Error::InvalidInput("lag array is not conjugate symmetric".into()));
        }
        Ok(u)
    }

    pub fn dims(&self) -> ArrayDims {
        self.dims
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    fn index(&self, p: isize, q: isize) -> usize {
        let wq = 2 * self.dims.n_rx - 1;
        let pi = (p + self.dims.n_tx as isize - 1) as usize;
        let qi = (q + self.dims.n_rx as isize - 1) as usize;
        pi * wq + qi
    }

    fn in_range(&self, p: isize, q: isize) -> bool {
        p.unsigned_abs() < self.dims.n_tx && q.unsigned_abs() < self.dims.n_rx
    }

    /// All `(p, q)` lags in storage order.
    pub fn lags(&self) -> impl Iterator<Item = (isize, isize)> {
        let nt = self.dims.n_tx as isize;
        let nr = self.dims.n_rx as isize;
        (1 - nt..nt).flat_map(move |p| (1 - nr..nr).map(move |q| (p, q)))
    }

    pub fn get(&self, p: isize, q: isize) -> Result<Complex64> {
        if !self.in_range(p, q) {
            return Err(Error::InvalidInput(format!("lag ({p}, {q}) out of range")));
        }
        Ok(self.entries[self.index(p, q)])
    }

    /// Sets `u(p, q)` and its conjugate partner `u(−p, −q)`.
    pub fn set(&mut self, p: isize, q: isize, value: Complex64) -> Result<()> {
        if !self.in_range(p, q) {
            return Err(Error::InvalidInput(format!("lag ({p}, {q}) out of range")));
        }
        let i = self.index(p, q);
        let j = self.index(-p, -q);
        if i == j {
            self.entries[i] = Complex64::new(value.re, 0.0);
        } else {
            self.entries[i] = value;
            self.entries[j] = value.conj();
        }
        Ok(())
    }

    pub(crate) fn get_unchecked(&self, p: isize, q: isize) -> Complex64 {
        self.entries[self.index(p, q)]
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    fn symmetry_defect(&self) -> f64 {
        self.lags()
            .map(|(p, q)| (self.get_unchecked(p, q) - self.get_unchecked(-p, -q).conj()).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn symmetrize(&mut self) {
        let lags: Vec<_> = self.lags().collect();
        let old = self.entries.clone();
        for (p, q) in lags {
            let a = old[self.index(p, q)];
            let b = old[self.index(-p, -q)];
            let i = self.index(p, q);
            self.entries[i] = (a + b.conj()) * 0.5;
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Complex inner product `Σ conj(self) · other` over all lags.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Number of entries of `S(U)` that carry lag `(p, q)`.
pub fn lag_multiplicity(p: isize, q: isize, dims: ArrayDims) -> usize {
    (dims.n_tx - p.unsigned_abs()) * (dims.n_rx - q.unsigned_abs())
}

/// A unit-norm 2D array response.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub aod: f64,
    pub aoa: f64,
    pub vector: CVec,
}

/// `g(θ, φ) = conj(a_T(θ)) ⊗ a_R(φ)`.
pub fn atom(aod: f64, aoa: f64, dims: ArrayDims) -> Atom {
    let at = steering_vector(aod, dims.n_tx).expect("n_tx > 0");
    let ar = steering_vector(aoa, dims.n_rx).expect("n_rx > 0");
    Atom {
        aod,
        aoa,
        vector: kron_vec(&at.conjugate(), &ar),
    }
}

/// Two-level Toeplitz embedding `S(U)`.
pub fn toeplitz_embed(u: &TwoLevelSpectrum) -> Result<CMat> {
    let scale = u.norm().max(1.0);
    if u.symmetry_defect() > 1e-10 * scale {
        return Err(Error::InvalidInput(
            "lag array must be conjugate symmetric for a Hermitian embedding".into(),
        ));
    }
    Ok(embed_unchecked(u))
}

pub(crate) fn embed_unchecked(u: &TwoLevelSpectrum) -> CMat {
    let ArrayDims { n_tx, n_rx } = u.dims();
    let n = n_tx * n_rx;
    let mut s = CMat::zeros(n, n);
    for it in 0..n_tx {
        for jt in 0..n_tx {
            let p = it as isize - jt as isize;
            for ir in 0..n_rx {
                for jr in 0..n_rx {
                    let q = ir as isize - jr as isize;
                    s[(it * n_rx + ir, jt * n_rx + jr)] = u.get_unchecked(p, q);
                }
            }
        }
    }
    s
}

/// Adjoint of [`toeplitz_embed`] with respect to `Re tr(A^H B)`: sums the
/// Hermitian part of `x` along each two-level diagonal. For Hermitian input
/// this is the plain diagonal sum.
pub fn toeplitz_adjoint(x: &CMat, dims: ArrayDims) -> Result<TwoLevelSpectrum> {
    let n = dims.len();
    if x.shape() != (n, n) {
        return Err(Error::InvalidDimension(format!(
            "expected {n}x{n} matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(adjoint_unchecked(x, dims))
}

pub(crate) fn adjoint_unchecked(x: &CMat, dims: ArrayDims) -> TwoLevelSpectrum {
    let ArrayDims { n_tx, n_rx } = dims;
    let mut u = TwoLevelSpectrum::zeros(dims);
    for it in 0..n_tx {
        for jt in 0..n_tx {
            let p = it as isize - jt as isize;
            for ir in 0..n_rx {
                for jr in 0..n_rx {
                    let q = ir as isize - jr as isize;
                    let idx = u.index(p, q);
                    u.entries[idx] += x[(it * n_rx + ir, jt * n_rx + jr)];
                }
            }
        }
    }
    u.symmetrize();
    u
}

/// Frobenius-nearest PSD matrix: negative eigenvalues clipped to zero.
pub fn psd_project(x: &CMat) -> Result<CMat> {
    if !x.is_square() {
        return Err(Error::InvalidDimension("PSD projection needs a square matrix".into()));
    }
    let defect = hermitian_defect(x);
    if defect > 1e-8 * x.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (‖X − X^H‖ = {defect:e})"
        )));
    }
    Ok(psd_project_hermitian(&hermitian_part(x))?.0)
}

/// Projection of an exactly Hermitian matrix; also returns the number of
/// retained eigenvalues.
pub(crate) fn psd_project_hermitian(x: &CMat) -> Result<(CMat, usize)> {
    let eig = hermitian_eigen(x)?;
    let n = eig.values.len();
    // eigenvalues ascending: negatives first
    let split = eig.values.partition_point(|&v| v <= 0.0);
    let rank = n - split;
    if rank <= split {
        let keep: Vec<(usize, f64)> = (split..n).map(|i| (i, eig.values[i])).collect();
        Ok((reconstruct(&eig.vectors, &keep), rank))
    } else {
        let drop: Vec<(usize, f64)> = (0..split).map(|i| (i, eig.values[i])).collect();
        let mut out = x - reconstruct(&eig.vectors, &drop);
        for j in 0..n {
            out[(j, j)].im = 0.0;
            for i in (j + 1)..n {
                out[(j, i)] = out[(i, j)].conj();
            }
        }
        Ok((out, rank))
    }
}
