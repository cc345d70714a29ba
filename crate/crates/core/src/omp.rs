//! On-grid baseline: orthogonal matching pursuit over a uniform angle grid.

use std::f64::consts::PI;

use crate::atomic::{atom, ArrayDims};
use crate::channel::unvectorize;
use crate::error::{check_index, Error, Result};
use crate::linalg::{is_finite_mat, is_finite_vec, CMat, CVec};
use crate::sounding::MeasurementSet;

/// Atoms `g(θ_i, φ_j)` with `θ_i = iπ/G`, `φ_j = jπ/G`; column `i·G + j`.
#[derive(Debug, Clone)]
pub struct AngularDictionary {
    grid_size: usize,
    dims: ArrayDims,
    atoms: CMat,
}

impl AngularDictionary {
    pub fn new(grid_size: usize, dims: ArrayDims) -> Result<Self> {
        if grid_size == 0 {
            return Err(Error::InvalidConfig("grid size must be at least 1".into()));
        }
        let n = dims.len();
        let mut atoms = CMat::zeros(n, grid_size * grid_size);
        for i in 0..grid_size {
            for j in 0..grid_size {
                let g = atom(Self::grid_angle(i, grid_size), Self::grid_angle(j, grid_size), dims);
                atoms.set_column(i * grid_size + j, &g.vector);
            }
        }
        Ok(Self {
            grid_size,
            dims,
            atoms,
        })
    }

    fn grid_angle(i: usize, grid_size: usize) -> f64 {
        i as f64 * PI / grid_size as f64
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn dims(&self) -> ArrayDims {
        self.dims
    }

    pub fn atoms(&self) -> &CMat {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }

    /// `(θ, φ)` of column `index`.
    pub fn angles(&self, index: usize) -> Result<(f64, f64)> {
        check_index("dictionary column", index, self.len())?;
        let g = self.grid_size;
        Ok((Self::grid_angle(index / g, g), Self::grid_angle(index % g, g)))
    }
}

/// Convenience wrapper around [`AngularDictionary::new`].
pub fn build_dictionary(grid_size: usize, dims: ArrayDims) -> Result<AngularDictionary> {
    AngularDictionary::new(grid_size, dims)
}

#[derive(Debug, Clone)]
pub struct OmpResult {
    pub h_v: CVec,
    /// Selected columns in selection order.
    pub support: Vec<usize>,
    pub coefficients: CVec,
    /// `‖y − Φh‖` before the first and after every accepted selection.
    pub residual_norms: Vec<f64>,
    /// Set when a selection made the refit rank-deficient and was dropped.
    pub rank_deficient: bool,
}

/// Greedy recovery on the composite matrix `Φ·A`.
///
/// Stops after `max_atoms` selections or once `‖r‖ ≤ residual_tol·‖y‖`.
pub fn omp_estimate(
    y: &CVec,
    phi: &CMat,
    dict: &AngularDictionary,
    max_atoms: usize,
    residual_tol: f64,
) -> Result<OmpResult> {
    let n = dict.dims.len();
    if phi.ncols() != n || phi.nrows() != y.len() {
        return Err(Error::InvalidDimension(format!(
            "sensing matrix {}x{} incompatible with y of length {} and {n} unknowns",
            phi.nrows(),
            phi.ncols(),
            y.len()
        )));
    }
    if max_atoms > dict.len() {
        return Err(Error::InvalidConfig(format!(
            "max_atoms {max_atoms} exceeds dictionary size {}",
            dict.len()
        )));
    }
    if !(residual_tol >= 0.0 && residual_tol.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "residual_tol must be non-negative, got {residual_tol}"
        )));
    }
    if !is_finite_vec(y) || !is_finite_mat(phi) {
        return Err(Error::InvalidInput("non-finite measurement or sensing entry".into()));
    }

    let composite = phi * &dict.atoms;
    let col_norms: Vec<f64> = composite.column_iter().map(|c| c.norm()).collect();
    let y_norm = y.norm();
    let mut support: Vec<usize> = Vec::new();
    let mut coefficients = CVec::zeros(0);
    let mut residual = y.clone();
    let mut residual_norms = vec![y_norm];
    let mut rank_deficient = false;

    while support.len() < max_atoms && residual.norm() > residual_tol * y_norm {
        let corr = composite.ad_mul(&residual);
        let mut pick = None;
        let mut best = 0.0;
        for (j, (c, &norm)) in corr.iter().zip(&col_norms).enumerate() {
            if norm == 0.0 || support.contains(&j) {
                continue;
            }
            let score = c.norm() / norm;
            if score > best {
                best = score;
                pick = Some(j);
            }
        }
        let Some(j) = pick else { break };
        support.push(j);
        let sub = composite.select_columns(&support);
        match least_squares(&sub, y) {
            Some(c) => {
                residual = y - &sub * &c;
                coefficients = c;
                residual_norms.push(residual.norm());
            }
            None => {
                support.pop();
                rank_deficient = true;
                break;
            }
        }
    }

    let h_v = if support.is_empty() {
        CVec::zeros(n)
    } else {
        dict.atoms.select_columns(&support) * &coefficients
    };
    Ok(OmpResult {
        h_v,
        support,
        coefficients,
        residual_norms,
        rank_deficient,
    })
}

/// Least squares through a thin QR; `None` when `R` is numerically singular.
fn least_squares(a: &CMat, b: &CVec) -> Option<CVec> {
    if a.nrows() < a.ncols() {
        return None;
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let top = r.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if r.diagonal().iter().any(|z| z.norm() <= 1e-10 * top) {
        return None;
    }
    let qtb = qr.q().ad_mul(b);
    r.solve_upper_triangular(&qtb)
}

/// Estimates `H[k]` with OMP.
pub fn estimate_channel_omp(
    measurements: &MeasurementSet,
    k: usize,
    dict: &AngularDictionary,
    max_atoms: usize,
    residual_tol: f64,
) -> Result<(CMat, OmpResult)> {
    check_index("subcarrier", k, measurements.received.len())?;
    if dict.dims != ArrayDims::new(measurements.n_tx, measurements.n_rx)? {
        return Err(Error::InvalidDimension("dictionary built for different array sizes".into()));
    }
    let res = omp_estimate(
        &measurements.received[k],
        &measurements.sensing[k],
        dict,
        max_atoms,
        residual_tol,
    )?;
    let h = unvectorize(&res.h_v, measurements.n_rx, measurements.n_tx)?;
    Ok((h, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_phi(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) / (rows as f64).sqrt()
        })
    }

    #[test]
    fn single_point_grid() {
        let dims = ArrayDims::new(3, 2).unwrap();
        let d = build_dictionary(1, dims).unwrap();
        assert_eq!(d.atoms().shape(), (6, 1));
        assert!((d.atoms().column(0) - atom(0.0, 0.0, dims).vector).norm() < 1e-15);
        assert!(build_dictionary(0, dims).is_err());
    }

    #[test]
    fn columns_are_unit_norm_and_indexed() {
        let dims = ArrayDims::new(4, 3).unwrap();
        let d = build_dictionary(5, dims).unwrap();
        for col in d.atoms().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        let (t, p) = d.angles(2 * 5 + 3).unwrap();
        let expected = atom(2.0 * PI / 5.0, 3.0 * PI / 5.0, dims).vector;
        assert_eq!((t, p), (2.0 * PI / 5.0, 3.0 * PI / 5.0));
        assert!((d.atoms().column(13) - expected).norm() < 1e-15);
    }

    #[test]
    fn dictionary_shape() {
        let d = build_dictionary(32, ArrayDims::new(16, 16).unwrap()).unwrap();
        assert_eq!(d.atoms().shape(), (256, 1024));
    }

    #[test]
    fn zero_measurement_selects_nothing() {
        let dims = ArrayDims::new(2, 2).unwrap();
        let d = build_dictionary(4, dims).unwrap();
        let phi = CMat::identity(4, 4);
        let res = omp_estimate(&CVec::zeros(4), &phi, &d, 3, 1e-3).unwrap();
        assert!(res.support.is_empty());
        assert_eq!(res.h_v, CVec::zeros(4));
    }

    #[test]
    fn on_grid_path_is_recovered_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dims = ArrayDims::new(4, 4).unwrap();
        let d = build_dictionary(8, dims).unwrap();
        let phi = random_phi(16, 16, &mut rng);
        let idx = 5 * 8 + 2;
        let h = d.atoms().column(idx) * c(1.1, -0.7);
        let res = omp_estimate(&(&phi * &h), &phi, &d, 2, 1e-3).unwrap();
        assert_eq!(res.support, vec![idx]);
        assert!((&res.h_v - &h).norm() / h.norm() <= 1e-6);
    }

    #[test]
    fn two_on_grid_paths_with_exact_budget() {
        let dims = ArrayDims::new(4, 4).unwrap();
        let d = build_dictionary(8, dims).unwrap();
        let phi = CMat::identity(16, 16);
        let h = d.atoms().column(9) * c(1.0, 0.2) + d.atoms().column(46) * c(-0.4, 0.8);
        let res = omp_estimate(&(&phi * &h), &phi, &d, 2, 0.0).unwrap();
        let mut s = res.support.clone();
        s.sort();
        assert_eq!(s, vec![9, 46]);
        assert!((&res.h_v - &h).norm() / h.norm() <= 1e-6);
    }

    #[test]
    fn residuals_shrink_and_support_is_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dims = ArrayDims::new(4, 4).unwrap();
        let d = build_dictionary(16, dims).unwrap();
        let phi = random_phi(12, 16, &mut rng);
        let y = CVec::from_fn(12, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let res = omp_estimate(&y, &phi, &d, 10, 0.0).unwrap();
        for w in res.residual_norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let mut s = res.support.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), res.support.len());
    }

    #[test]
    fn rank_deficiency_stops_selection() {
        let dims = ArrayDims::new(2, 2).unwrap();
        let d = build_dictionary(4, dims).unwrap();
        let phi = CMat::from_fn(2, 4, |i, j| c(if i == j { 1.0 } else { 0.0 }, 0.0));
        let y = CVec::from_vec(vec![c(1.0, 0.0), c(0.3, 0.1)]);
        let res = omp_estimate(&y, &phi, &d, 5, 0.0).unwrap();
        assert!(res.support.len() <= 2);
        assert!(res.rank_deficient);
    }

    #[test]
    fn rejects_bad_arguments() {
        let dims = ArrayDims::new(2, 2).unwrap();
        let d = build_dictionary(2, dims).unwrap();
        let phi = CMat::identity(4, 4);
        let y = CVec::zeros(4);
        assert!(matches!(omp_estimate(&y, &phi, &d, 5, 1e-3), Err(Error::InvalidConfig(_))));
        assert!(matches!(omp_estimate(&CVec::zeros(3), &phi, &d, 1, 1e-3), Err(Error::InvalidDimension(_))));
    }
}
