//! Reweighted atomic-norm refinement.
//!
//! Starting from the unweighted solution `Û_0`, each outer step replaces the
//! trace penalty by `tr(Θ_j S(U))` with `Θ_j = (S(Û_{j−1}) + εI)⁻¹` and
//! re-solves, warm-started from the previous ADMM state.

use crate::anm::{AnmConfig, AnmProblem, AnmSolution};
use crate::atomic::{embed_unchecked, ArrayDims, TwoLevelSpectrum};
use crate::channel::unvectorize;
use crate::error::{check_index, Error, Result};
use crate::linalg::{hermitian_eigen, reconstruct, CMat, CVec};
use crate::sounding::MeasurementSet;

#[derive(Debug, Clone, PartialEq)]
pub struct RamConfig {
    /// Number of reweighting steps `J`.
    pub iterations: usize,
    /// Inverse shift `ε`; the solve's `ζ` when `None`.
    pub epsilon: Option<f64>,
    /// Multiplier `ξ` on `ε`.
    pub epsilon_scale: f64,
    /// Settings for every inner solve. Its `weight` is ignored.
    pub inner: AnmConfig,
}

impl Default for RamConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            epsilon: None,
            epsilon_scale: 1.0,
            inner: AnmConfig::default(),
        }
    }
}

impl RamConfig {
    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidConfig(format!("epsilon must be positive, got {e}")));
            }
        }
        if !(self.epsilon_scale > 0.0 && self.epsilon_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_scale must be positive, got {}",
                self.epsilon_scale
            )));
        }
        Ok(())
    }

    fn resolve_epsilon(&self, zeta: f64) -> Result<f64> {
        let eps = self.epsilon.unwrap_or(zeta) * self.epsilon_scale;
        if eps > 0.0 && eps.is_finite() {
            Ok(eps)
        } else {
            Err(Error::InvalidConfig(format!(
                "reweighting shift must be positive, got {eps} (zeta = {zeta})"
            )))
        }
    }
}

/// Result of the reweighted refinement.
#[derive(Debug, Clone)]
pub struct RamSolution {
    /// Final accepted iterate; `iterations` counts ADMM steps over all solves.
    pub solution: AnmSolution,
    /// Reweighting steps actually accepted.
    pub outer_iterations: usize,
    /// Set when a step blew up the data fit and the loop stopped early.
    pub diverged: bool,
    /// `½‖y − Φh‖²` after the initial solve and each accepted step.
    pub data_fit_history: Vec<f64>,
    /// ADMM steps of the initial solve and of each reweighted solve.
    pub inner_iterations: Vec<usize>,
}

/// `(S(U) + εI)⁻¹`.
pub fn reweight_matrix(u_prev: &TwoLevelSpectrum, epsilon: f64) -> Result<CMat> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let eig = hermitian_eigen(&embed_unchecked(u_prev))?;
    let n = eig.values.len();
    let top = eig.values[n - 1].max(0.0);
    let bottom = eig.values[0];
    if bottom < -1e-8 * (1.0 + top) {
        return Err(Error::InvalidInput(format!(
            "previous Toeplitz estimate is not PSD (min eigenvalue {bottom:.3e})"
        )));
    }
    let shifted: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0) + epsilon).collect();
    let cond = shifted[n - 1] / shifted[0];
    if !(cond < 1.0 / f64::EPSILON) {
        return Err(Error::Numerical(format!(
            "reweighting matrix condition number {cond:.3e} exceeds 1/machine-epsilon"
        )));
    }
    let weights: Vec<(usize, f64)> = shifted.iter().enumerate().map(|(i, &v)| (i, 1.0 / v)).collect();
    Ok(reconstruct(&eig.vectors, &weights))
}

/// Runs the unweighted solve followed by `J` reweighted solves.
pub fn solve_ram(
    y: &CVec,
    phi: &CMat,
    dims: ArrayDims,
    zeta: f64,
    config: &RamConfig,
) -> Result<RamSolution> {
    config.validate()?;
    let problem = AnmProblem::new(y, phi, dims)?;
    let mut inner = config.inner.clone();
    inner.weight = None;
    let (first, mut state) = problem.solve_warm(zeta, &inner, None)?;
    let mut inner_iterations = vec![first.iterations];
    let mut history = vec![first.data_fit];
    let mut best = first;
    let mut outer = 0;
    let mut diverged = false;
    if config.iterations > 0 {
        let eps = config.resolve_epsilon(zeta)?;
        let floor = f64::EPSILON * y.norm_squared();
        for _ in 0..config.iterations {
            inner.weight = Some(reweight_matrix(&best.spectrum, eps)?);
            let w = state.take();
            let (next, next_state) = problem.solve_warm(zeta, &inner, w)?;
            inner_iterations.push(next.iterations);
            if next.data_fit > 10.0 * best.data_fit.max(floor) {
                diverged = true;
                break;
            }
            history.push(next.data_fit);
            best = next;
            state = next_state;
            outer += 1;
        }
    }
    best.iterations = inner_iterations.iter().sum();
    Ok(RamSolution {
        solution: best,
        outer_iterations: outer,
        diverged,
        data_fit_history: history,
        inner_iterations,
    })
}

/// Estimates `H[k]` with the reweighted solver.
pub fn estimate_channel_ram(
    measurements: &MeasurementSet,
    k: usize,
    config: &RamConfig,
) -> Result<(CMat, RamSolution)> {
    check_index("subcarrier", k, measurements.received.len())?;
    let dims = ArrayDims::new(measurements.n_tx, measurements.n_rx)?;
    let zeta = config.inner.resolve_zeta(measurements.combined_noise_std, dims)?;
    let sol = solve_ram(
        &measurements.received[k],
        &measurements.sensing[k],
        dims,
        zeta,
        config,
    )?;
    let h = unvectorize(&sol.solution.h_v, measurements.n_rx, measurements.n_tx)?;
    Ok((h, sol))
}
