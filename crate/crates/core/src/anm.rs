//! Regularized atomic-norm channel estimation.
//!
//! Per subcarrier we solve
//!
//! ```text
//! minimize  ½‖y − Φh‖² + ζ/(2N) · tr(Θ S(U)) + ζν/2
//! s.t.      Ξ = [[S(U), h], [h^H, ν]] ⪰ 0
//! ```
//!
//! with `N = N_t·N_r` and `Θ = I` unless a weight is supplied. The solver is
//! an ADMM splitting between the structured triple `(h, U, ν)` and a PSD copy
//! `Z` of `Ξ`:
//!
//! 1. minimize the augmented Lagrangian over `(h, U, ν)` in closed form (the
//!    `U` block is diagonal through [`toeplitz_adjoint`](crate::atomic::toeplitz_adjoint),
//!    the `h` block is a ridge system solved through the eigenbasis of `Φ^HΦ`);
//! 2. `Z ← P_psd(Ξ + Λ/ρ)`;
//! 3. `Λ ← Λ + ρ(Ξ − Z)`.
//!
//! `(Z, Λ)` carry Nesterov momentum that restarts whenever the combined
//! residual stops decreasing, and `ρ` is rebalanced every ten iterations from
//! the normalized primal and dual residuals.
//!
//! The returned triple is made exactly feasible by shifting `U(0,0)` and `ν`
//! by the most negative eigenvalue of the assembled `Ξ`, if any. With `U`
//! fixed, `(h, ν)` is then re-minimized exactly through the Schur complement
//! and kept when it lowers the objective.

use num_complex::Complex64;

use crate::atomic::{
    adjoint_unchecked, embed_unchecked, lag_multiplicity, psd_project_hermitian, ArrayDims,
    TwoLevelSpectrum,
};
use crate::channel::unvectorize;
use crate::error::{check_index, Error, Result};
use crate::linalg::{hermitian_eigen, is_finite_mat, is_finite_vec, CMat, CVec, ZERO};
use crate::sounding::MeasurementSet;

#[derive(Debug, Clone, PartialEq)]
pub struct AnmConfig {
    /// Use this `ζ` instead of the noise-derived value.
    pub zeta_override: Option<f64>,
    /// Multiplier on the noise-derived `ζ`.
    pub zeta_scale: f64,
    pub max_iters: usize,
    /// Initial ADMM penalty `ρ`.
    pub penalty: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Residual balancing: double/halve `ρ` when one residual exceeds the other tenfold.
    pub adaptive_penalty: bool,
    /// Trace weight `Θ` (identity when `None`).
    pub weight: Option<CMat>,
}

impl Default for AnmConfig {
    fn default() -> Self {
        Self {
            zeta_override: None,
            zeta_scale: 1.0,
            max_iters: 2000,
            penalty: 1.0,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            adaptive_penalty: true,
            weight: None,
        }
    }
}

impl AnmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("penalty", self.penalty)?;
        positive("tol_primal", self.tol_primal)?;
        positive("tol_dual", self.tol_dual)?;
        if !(self.zeta_scale >= 0.0 && self.zeta_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "zeta_scale must be non-negative, got {}",
                self.zeta_scale
            )));
        }
        if let Some(z) = self.zeta_override {
            positive("zeta_override", z)?;
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// `ζ` for a measurement with combined noise standard deviation `noise_std`.
    pub fn resolve_zeta(&self, noise_std: f64, dims: ArrayDims) -> Result<f64> {
        match self.zeta_override {
            Some(z) => Ok(z),
            None => Ok(compute_zeta(noise_std, dims.len())? * self.zeta_scale),
        }
    }
}

/// Output of one regularized solve.
#[derive(Debug, Clone)]
pub struct AnmSolution {
    pub h_v: CVec,
    pub spectrum: TwoLevelSpectrum,
    pub nu: f64,
    pub objective: f64,
    /// `½‖y − Φh‖²` at the returned point.
    pub data_fit: f64,
    pub zeta: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Primal residual `‖Ξ − Z‖_F` per iteration.
    pub residual_history: Vec<f64>,
}

impl AnmSolution {
    /// Assembled block matrix `[[S(U), h], [h^H, ν]]`.
    pub fn xi(&self) -> CMat {
        assemble(&embed_unchecked(&self.spectrum), &self.h_v, self.nu)
    }

    /// Smallest eigenvalue of `Ξ` and the tolerance `1e−6·(1 + tr S(U))` it
    /// must clear.
    pub fn feasibility(&self) -> Result<(f64, f64)> {
        let xi = self.xi();
        let min = hermitian_eigen(&xi)?.values[0];
        let trace = self.spectrum.get_unchecked(0, 0).re * self.spectrum.dims().len() as f64;
        Ok((min, -1e-6 * (1.0 + trace)))
    }

    pub fn is_feasible(&self) -> Result<bool> {
        let (min, bound) = self.feasibility()?;
        Ok(min >= bound)
    }

    fn zero(dims: ArrayDims, zeta: f64, y: &CVec) -> Self {
        Self {
            h_v: CVec::zeros(dims.len()),
            spectrum: TwoLevelSpectrum::zeros(dims),
            nu: 0.0,
            objective: 0.5 * y.norm_squared(),
            data_fit: 0.5 * y.norm_squared(),
            zeta,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
            residual_history: Vec::new(),
        }
    }
}

/// `ζ = κ(1 + 1/ln N′)·sqrt(N′ ln N′ + N′ ln(4π ln N′))`.
pub fn compute_zeta(noise_std: f64, n_prime: usize) -> Result<f64> {
    if n_prime < 2 {
        return Err(Error::InvalidConfig(format!(
            "regularization needs N' >= 2, got {n_prime}"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise level must be non-negative, got {noise_std}")));
    }
    let n = n_prime as f64;
    let ln = n.ln();
    let inner = n * ln + n * (4.0 * std::f64::consts::PI * ln).ln();
    Ok(noise_std * (1.0 + 1.0 / ln) * inner.sqrt())
}

fn assemble(s: &CMat, h: &CVec, nu: f64) -> CMat {
    let n = s.nrows();
    let mut xi = CMat::zeros(n + 1, n + 1);
    xi.view_mut((0, 0), (n, n)).copy_from(s);
    for i in 0..n {
        xi[(i, n)] = h[i];
        xi[(n, i)] = h[i].conj();
    }
    xi[(n, n)] = Complex64::new(nu, 0.0);
    xi
}

/// How the off-diagonal column of `Ξ` is determined.
enum DataTerm {
    /// `½‖y − Φh‖²`, with `Φ^HΦ = V diag(d) V^H` and `b = V^H Φ^H y`.
    Fit {
        basis: CMat,
        gram_eigs: Vec<f64>,
        projected_rhs: CVec,
    },
    /// `h` held fixed.
    Fixed(CVec),
}

/// Warm-start state carried between related solves.
#[derive(Debug, Clone)]
pub(crate) struct AdmmState {
    z: CMat,
    lambda: CMat,
    rho: f64,
}

const BALANCE_PERIOD: usize = 10;

struct AdmmOutcome {
    h: CVec,
    spectrum: TwoLevelSpectrum,
    nu: f64,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    converged: bool,
    history: Vec<f64>,
    state: AdmmState,
}

struct Admm<'a> {
    dims: ArrayDims,
    data: &'a DataTerm,
    /// `T*(C)` for the linear cost `⟨C, S(U)⟩`.
    trace_cost: TwoLevelSpectrum,
    nu_cost: f64,
}

impl Admm<'_> {
    /// Norm of the adjoint of `(h, U, ν) ↦ Ξ` applied to `x`.
    fn adjoint_norm(&self, x: &CMat) -> f64 {
        let n = self.dims.len();
        let t = adjoint_unchecked(&x.view((0, 0), (n, n)).into_owned(), self.dims);
        let h: f64 = (0..n).map(|i| (x[(i, n)] + x[(n, i)].conj()).norm_sqr()).sum();
        (t.norm().powi(2) + h + x[(n, n)].re.powi(2)).sqrt()
    }

    fn run(&self, config: &AnmConfig, warm: Option<AdmmState>) -> Result<AdmmOutcome> {
        let n = self.dims.len();
        let mut state = warm.unwrap_or_else(|| AdmmState {
            z: CMat::zeros(n + 1, n + 1),
            lambda: CMat::zeros(n + 1, n + 1),
            rho: config.penalty,
        });
        let multiplicity: Vec<f64> = TwoLevelSpectrum::zeros(self.dims)
            .lags()
            .map(|(p, q)| lag_multiplicity(p, q, self.dims) as f64)
            .collect();
        let mut history = Vec::with_capacity(config.max_iters.min(4096));
        let mut h = CVec::zeros(n);
        let mut u = TwoLevelSpectrum::zeros(self.dims);
        let mut nu = 0.0;
        let mut r_norm = f64::INFINITY;
        let mut s_norm = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        // the optimal multiplier carries the ν cost, so ‖Λ*‖ ≥ ν_cost
        let dual_floor = self.nu_cost.max(f64::MIN_POSITIVE);
        // accelerated ADMM with restart: momentum on (Z, Λ), reset whenever
        // the combined residual fails to drop or ρ changes
        let mut alpha = 1.0f64;
        let mut c_prev = f64::INFINITY;
        let mut z_last = state.z.clone();
        let mut l_last = state.lambda.clone();

        for it in 0..config.max_iters {
            iterations = it + 1;
            let rho = state.rho;
            // M = ρZ − Λ carries everything the (h, U, ν) block needs
            let m = &state.z * Complex64::new(rho, 0.0) - &state.lambda;

            let s_block = m.view((0, 0), (n, n)).into_owned();
            let t = adjoint_unchecked(&s_block, self.dims);
            for ((dst, (&ti, &ci)), &mult) in u
                .entries_mut()
                .iter_mut()
                .zip(t.entries().iter().zip(self.trace_cost.entries()))
                .zip(&multiplicity)
            {
                *dst = (ti - ci) / (rho * mult);
            }
            nu = (m[(n, n)].re - self.nu_cost) / rho;
            match self.data {
                DataTerm::Fit {
                    basis,
                    gram_eigs,
                    projected_rhs,
                } => {
                    // (Φ^HΦ + 2ρI) h = Φ^H y + 2(ρ z − λ)
                    let col: CVec = m.column(n).rows(0, n).into_owned();
                    let mut w = basis.ad_mul(&col) * Complex64::new(2.0, 0.0);
                    for i in 0..n {
                        w[i] = (w[i] + projected_rhs[i]) / (gram_eigs[i] + 2.0 * rho);
                    }
                    h = basis * w;
                }
                DataTerm::Fixed(fixed) => h.copy_from(fixed),
            }

            let xi = assemble(&embed_unchecked(&u), &h, nu);
            let shifted = &xi + &state.lambda * Complex64::new(1.0 / rho, 0.0);
            let (z_new, _) = psd_project_hermitian(&shifted)?;
            let diff = &xi - &z_new;
            let lambda_new = &state.lambda + &diff * Complex64::new(rho, 0.0);
            r_norm = diff.norm();
            let dz = &z_new - &state.z;
            s_norm = rho * self.adjoint_norm(&dz);
            let scale_d = self.adjoint_norm(&lambda_new).max(dual_floor);
            let scale_p = xi.norm().max(z_new.norm()).max(1.0);
            let combined = (&lambda_new - &state.lambda).norm_squared() / rho + rho * dz.norm_squared();
            if combined < 0.999 * c_prev {
                let a1 = (1.0 + (1.0 + 4.0 * alpha * alpha).sqrt()) / 2.0;
                let w = Complex64::new((alpha - 1.0) / a1, 0.0);
                state.z = &z_new + (&z_new - &z_last) * w;
                state.lambda = &lambda_new + (&lambda_new - &l_last) * w;
                alpha = a1;
                c_prev = combined;
            } else {
                alpha = 1.0;
                state.z = z_last.clone();
                state.lambda = l_last.clone();
                c_prev /= 0.999;
            }
            z_last = z_new;
            l_last = lambda_new;
            history.push(r_norm);
            if !r_norm.is_finite() {
                return Err(Error::Numerical("ADMM iterate diverged".into()));
            }
            if r_norm <= config.tol_primal * scale_p && s_norm <= config.tol_dual * scale_d {
                converged = true;
                break;
            }
            if config.adaptive_penalty && it % BALANCE_PERIOD == BALANCE_PERIOD - 1 {
                let (rp, rd) = (r_norm / scale_p, s_norm / scale_d);
                let before = state.rho;
                if rp > 10.0 * rd {
                    state.rho *= 2.0;
                } else if rd > 10.0 * rp {
                    state.rho /= 2.0;
                }
                if state.rho != before {
                    alpha = 1.0;
                    c_prev = f64::INFINITY;
                    state.z = z_last.clone();
                    state.lambda = l_last.clone();
                }
            }
        }

        state.z = z_last;
        state.lambda = l_last;
        Ok(AdmmOutcome {
            h,
            spectrum: u,
            nu,
            iterations,
            primal_residual: r_norm,
            dual_residual: s_norm,
            converged,
            history,
            state,
        })
    }
}

/// Shifts `U(0,0)` and `ν` by the most negative eigenvalue of `Ξ` so the
/// returned point is PSD.
fn restore_feasibility(u: &mut TwoLevelSpectrum, h: &CVec, nu: &mut f64) -> Result<()> {
    let xi = assemble(&embed_unchecked(u), h, *nu);
    let min = hermitian_eigen(&xi)?.values[0];
    if min < 0.0 {
        let shift = -min * (1.0 + 1e-9) + f64::EPSILON * xi.norm();
        let d = u.get_unchecked(0, 0) + shift;
        u.set(0, 0, d)?;
        *nu += shift;
    }
    Ok(())
}

/// Precomputed per-subcarrier data shared by ANM and its reweighted variant.
pub struct AnmProblem<'a> {
    y: &'a CVec,
    phi: &'a CMat,
    dims: ArrayDims,
    data: DataTerm,
    phi_h_y_norm: f64,
}

impl<'a> AnmProblem<'a> {
    pub fn new(y: &'a CVec, phi: &'a CMat, dims: ArrayDims) -> Result<Self> {
        let n = dims.len();
        if phi.ncols() != n || phi.nrows() != y.len() {
            return Err(Error::InvalidDimension(format!(
                "sensing matrix {}x{} incompatible with y of length {} and {n} unknowns",
                phi.nrows(),
                phi.ncols(),
                y.len()
            )));
        }
        if !is_finite_vec(y) || !is_finite_mat(phi) {
            return Err(Error::InvalidInput("non-finite measurement or sensing entry".into()));
        }
        let gram = phi.adjoint() * phi;
        let eig = hermitian_eigen(&gram)?;
        let phi_h_y = phi.adjoint() * y;
        let projected_rhs = eig.vectors.adjoint() * &phi_h_y;
        Ok(Self {
            y,
            phi,
            dims,
            data: DataTerm::Fit {
                basis: eig.vectors,
                gram_eigs: eig.values.iter().map(|&v| v.max(0.0)).collect(),
                projected_rhs,
            },
            phi_h_y_norm: phi_h_y.norm(),
        })
    }

    pub fn dims(&self) -> ArrayDims {
        self.dims
    }

    pub fn data_fit(&self, h: &CVec) -> f64 {
        0.5 * (self.y - self.phi * h).norm_squared()
    }

    pub fn solve(&self, zeta: f64, config: &AnmConfig) -> Result<AnmSolution> {
        Ok(self.solve_warm(zeta, config, None)?.0)
    }

    /// Exact minimization over `(h, ν)` with `U` fixed: `ν = h^H S^+ h` and
    /// `(Φ^HΦ + ζS^+) h = Φ^H y` on the range of `S(U)`.
    fn polish(&self, spectrum: &TwoLevelSpectrum, zeta: f64) -> Result<Option<(CVec, f64)>> {
        let DataTerm::Fit { .. } = self.data else {
            return Ok(None);
        };
        let n = self.dims.len();
        let eig = hermitian_eigen(&embed_unchecked(spectrum))?;
        let top = eig.values[n - 1];
        if !(top > 0.0) {
            return Ok(None);
        }
        let keep: Vec<usize> = (0..n).filter(|&i| eig.values[i] > top * 1e-12).collect();
        let q = eig.vectors.select_columns(&keep);
        let pq = self.phi * &q;
        let mut a = pq.ad_mul(&pq);
        for (j, &i) in keep.iter().enumerate() {
            a[(j, j)] += Complex64::new(zeta / eig.values[i], 0.0);
        }
        let rhs = pq.ad_mul(self.y);
        let Some(chol) = a.cholesky() else {
            return Ok(None);
        };
        let coef = chol.solve(&rhs);
        let nu = keep
            .iter()
            .enumerate()
            .map(|(j, &i)| coef[j].norm_sqr() / eig.values[i])
            .sum();
        let h = q * coef;
        if !is_finite_vec(&h) {
            return Ok(None);
        }
        Ok(Some((h, nu)))
    }

    pub(crate) fn solve_warm(
        &self,
        zeta: f64,
        config: &AnmConfig,
        warm: Option<AdmmState>,
    ) -> Result<(AnmSolution, Option<AdmmState>)> {
        config.validate()?;
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidConfig(format!("zeta must be non-negative, got {zeta}")));
        }
        let n = self.dims.len();
        let weight_cost = match &config.weight {
            Some(w) => {
                if w.shape() != (n, n) {
                    return Err(Error::InvalidDimension(format!(
                        "weight must be {n}x{n}, got {}x{}",
                        w.nrows(),
                        w.ncols()
                    )));
                }
                if !is_finite_mat(w) {
                    return Err(Error::InvalidInput("non-finite weight entry".into()));
                }
                adjoint_unchecked(w, self.dims)
            }
            None => {
                // ‖v‖*_SDP ≤ √N ‖v‖, so ζ ≥ √N‖Φ^H y‖ makes h = 0 optimal
                if zeta >= (n as f64).sqrt() * self.phi_h_y_norm {
                    return Ok((AnmSolution::zero(self.dims, zeta, self.y), None));
                }
                let mut c = TwoLevelSpectrum::zeros(self.dims);
                c.set(0, 0, Complex64::new(n as f64, 0.0))?;
                c
            }
        };
        let coef = zeta / (2.0 * n as f64);
        let mut trace_cost = weight_cost;
        trace_cost.entries_mut().iter_mut().for_each(|z| *z *= coef);
        let admm = Admm {
            dims: self.dims,
            data: &self.data,
            trace_cost: trace_cost.clone(),
            nu_cost: zeta / 2.0,
        };
        let out = admm.run(config, warm)?;
        let AdmmOutcome {
            h,
            mut spectrum,
            mut nu,
            ..
        } = out;
        restore_feasibility(&mut spectrum, &h, &mut nu)?;
        let mut h = h;
        let mut data_fit = self.data_fit(&h);
        let trace_term = trace_cost.inner(&spectrum).re;
        let mut objective = data_fit + trace_term + zeta / 2.0 * nu;
        if let Some((hp, mut nup)) = self.polish(&spectrum, zeta)? {
            let mut sp = spectrum.clone();
            restore_feasibility(&mut sp, &hp, &mut nup)?;
            let fit = self.data_fit(&hp);
            let obj = fit + trace_cost.inner(&sp).re + zeta / 2.0 * nup;
            if obj <= objective {
                h = hp;
                nu = nup;
                spectrum = sp;
                data_fit = fit;
                objective = obj;
            }
        }
        Ok((
            AnmSolution {
                h_v: h,
                spectrum,
                nu,
                objective,
                data_fit,
                zeta,
                iterations: out.iterations,
                primal_residual: out.primal_residual,
                dual_residual: out.dual_residual,
                converged: out.converged,
                residual_history: out.history,
            },
            Some(out.state),
        ))
    }
}

/// Solves the regularized problem for one measurement vector.
pub fn solve_anm(
    y: &CVec,
    phi: &CMat,
    dims: ArrayDims,
    zeta: f64,
    config: &AnmConfig,
) -> Result<AnmSolution> {
    AnmProblem::new(y, phi, dims)?.solve(zeta, config)
}

/// Atomic norm of `h_v` over the unit-norm atoms `g(θ, φ)`.
///
/// The SDP `min tr(S(U))/(2N) + ν/2, Ξ ⪰ 0` measures `h_v` against atoms with
/// unit-modulus entries (norm `√N`); its value is rescaled by `√N` here.
pub fn atomic_norm(h_v: &CVec, dims: ArrayDims, config: &AnmConfig) -> Result<f64> {
    Ok(atomic_norm_sdp(h_v, dims, config)?.objective * (dims.len() as f64).sqrt())
}

/// The raw SDP characterization with `h` held fixed; `objective` is
/// `tr(S(U))/(2N) + ν/2` at the returned feasible point.
pub fn atomic_norm_sdp(h_v: &CVec, dims: ArrayDims, config: &AnmConfig) -> Result<AnmSolution> {
    config.validate()?;
    let n = dims.len();
    if h_v.len() != n {
        return Err(Error::InvalidDimension(format!(
            "expected vector of length {n}, got {}",
            h_v.len()
        )));
    }
    if !is_finite_vec(h_v) {
        return Err(Error::InvalidInput("non-finite entry".into()));
    }
    let empty = CVec::zeros(0);
    if h_v.iter().all(|z| *z == ZERO) {
        let mut s = AnmSolution::zero(dims, 0.0, &empty);
        s.objective = 0.0;
        s.data_fit = 0.0;
        return Ok(s);
    }
    let mut trace_cost = TwoLevelSpectrum::zeros(dims);
    trace_cost.set(0, 0, Complex64::new(0.5, 0.0))?;
    let data = DataTerm::Fixed(h_v.clone());
    let admm = Admm {
        dims,
        data: &data,
        trace_cost: trace_cost.clone(),
        nu_cost: 0.5,
    };
    let out = admm.run(config, None)?;
    let mut spectrum = out.spectrum;
    let mut nu = out.nu;
    restore_feasibility(&mut spectrum, h_v, &mut nu)?;
    let objective = trace_cost.inner(&spectrum).re + 0.5 * nu;
    Ok(AnmSolution {
        h_v: h_v.clone(),
        spectrum,
        nu,
        objective,
        data_fit: 0.0,
        zeta: 0.0,
        iterations: out.iterations,
        primal_residual: out.primal_residual,
        dual_residual: out.dual_residual,
        converged: out.converged,
        residual_history: out.history,
    })
}

/// Estimates `H[k]` from one subcarrier of a measurement set.
pub fn estimate_channel(
    measurements: &MeasurementSet,
    k: usize,
    config: &AnmConfig,
) -> Result<(CMat, AnmSolution)> {
    check_index("subcarrier", k, measurements.received.len())?;
    let dims = ArrayDims::new(measurements.n_tx, measurements.n_rx)?;
    let zeta = config.resolve_zeta(measurements.combined_noise_std, dims)?;
    let sol = solve_anm(
        &measurements.received[k],
        &measurements.sensing[k],
        dims,
        zeta,
        config,
    )?;
    let h = unvectorize(&sol.h_v, dims.n_rx, dims.n_tx)?;
    Ok((h, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::atom;
    use crate::linalg::ONE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_phi(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) / (rows as f64).sqrt()
        })
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(compute_zeta(0.0, 256).unwrap(), 0.0);
        // direct evaluation at κ = 1, N' = 256
        let n = 256f64;
        let ln = n.ln();
        let direct = (1.0 + 1.0 / ln) * (n * ln + n * (4.0 * PI * ln).ln()).sqrt();
        let z = compute_zeta(1.0, 256).unwrap();
        assert!((z - direct).abs() < 1e-12);
        assert!((z - 59.087_826_437_973_01).abs() < 1e-9, "{z}");
        let a = compute_zeta(0.3, 64).unwrap();
        let b = compute_zeta(0.6, 64).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        assert!(matches!(compute_zeta(1.0, 1), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn zero_measurement_gives_zero_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = ArrayDims::new(2, 3).unwrap();
        let phi = random_phi(6, 6, &mut rng);
        let y = CVec::zeros(6);
        let sol = solve_anm(&y, &phi, dims, 0.5, &AnmConfig::default()).unwrap();
        assert_eq!(sol.h_v.norm(), 0.0);
        assert_eq!(sol.nu, 0.0);
        assert_eq!(sol.spectrum.norm(), 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn scalar_problem_is_soft_thresholding() {
        let dims = ArrayDims::new(1, 1).unwrap();
        let phi = CMat::from_element(1, 1, ONE);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tight = AnmConfig { tol_primal: 1e-10, tol_dual: 1e-10, max_iters: 100_000, ..Default::default() };
        for _ in 0..20 {
            let yv = 4.0 * rng.random::<f64>() - 2.0;
            let zeta = 0.05 + rng.random::<f64>();
            let y = CVec::from_element(1, c(yv, 0.0));
            let sol = solve_anm(&y, &phi, dims, zeta, &tight).unwrap();
            let expected = yv.signum() * (yv.abs() - zeta).max(0.0);
            assert!((sol.h_v[0] - c(expected, 0.0)).norm() < 1e-6, "y={yv} ζ={zeta}: {} vs {expected}", sol.h_v[0]);
        }
    }

    #[test]
    fn noiseless_full_sounding_recovers_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = ArrayDims::new(4, 4).unwrap();
        let g = atom(0.8, 2.1, dims).vector * c(1.3, -0.4);
        let phi = random_phi(16, 16, &mut rng);
        let y = &phi * &g;
        let sol = solve_anm(&y, &phi, dims, 1e-6, &AnmConfig::default()).unwrap();
        let err = (&sol.h_v - &g).norm() / g.norm();
        assert!(err <= 1e-3, "relative error {err}");
        assert!(sol.is_feasible().unwrap());
    }

    #[test]
    fn objective_bounded_by_zero_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dims = ArrayDims::new(3, 3).unwrap();
        let phi = random_phi(12, 9, &mut rng);
        let y = CVec::from_fn(12, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let sol = solve_anm(&y, &phi, dims, 0.2, &AnmConfig::default()).unwrap();
        assert!(sol.objective >= 0.0);
        assert!(sol.objective <= 0.5 * y.norm_squared() + 1e-9);
        assert!(sol.is_feasible().unwrap());
    }

    #[test]
    fn solve_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dims = ArrayDims::new(3, 2).unwrap();
        let phi = random_phi(8, 6, &mut rng);
        let y = CVec::from_fn(8, |_, _| c(rng.random::<f64>(), rng.random::<f64>()));
        let a = solve_anm(&y, &phi, dims, 0.1, &AnmConfig::default()).unwrap();
        let b = solve_anm(&y, &phi, dims, 0.1, &AnmConfig::default()).unwrap();
        assert_eq!(a.h_v, b.h_v);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn rejects_non_finite_input() {
        let dims = ArrayDims::new(1, 2).unwrap();
        let phi = CMat::identity(2, 2);
        let y = CVec::from_vec(vec![c(f64::NAN, 0.0), ONE]);
        assert!(matches!(
            solve_anm(&y, &phi, dims, 0.1, &AnmConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn atomic_norm_of_single_atom() {
        let dims = ArrayDims::new(3, 3).unwrap();
        assert_eq!(atomic_norm(&CVec::zeros(9), dims, &AnmConfig::default()).unwrap(), 0.0);
        let beta = c(-0.9, 1.2);
        let h = atom(1.0, 2.5, dims).vector * beta;
        let v = atomic_norm(&h, dims, &AnmConfig::default()).unwrap();
        assert!((v - beta.norm()).abs() <= 0.01 * beta.norm(), "{v} vs {}", beta.norm());
    }

    #[test]
    fn residual_history_settles() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dims = ArrayDims::new(3, 3).unwrap();
        let phi = random_phi(9, 9, &mut rng);
        let h = atom(0.4, 1.7, dims).vector + atom(2.0, 0.9, dims).vector * c(0.5, 0.5);
        let y = &phi * &h;
        let sol = solve_anm(&y, &phi, dims, 0.05, &AnmConfig::default()).unwrap();
        let hist = &sol.residual_history;
        let tail = &hist[hist.len() - hist.len() / 10 - 1..];
        let half = tail.len() / 2;
        let first: f64 = tail[..half].iter().sum::<f64>() / half as f64;
        let second: f64 = tail[half..].iter().sum::<f64>() / (tail.len() - half) as f64;
        assert!(second <= first * 1.5 + 1e-12, "{first} -> {second}");
    }
}
