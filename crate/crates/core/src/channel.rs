//! Geometric wideband mmWave channel.
//!
//! A realization is a sum of `L` planar paths, each with a complex gain, a
//! delay, an angle of arrival and an angle of departure. The delay-tap
//! representation filters each path through a raised-cosine pulse sampled at
//! the symbol period; the per-subcarrier representation is the `K`-point DFT
//! of the taps.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::linalg::{complex_gaussian, CMat, CVec};

/// Half-wavelength uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_elements: usize,
}

impl ArrayGeometry {
    pub const SPACING: f64 = 0.5;

    pub fn new(n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidDimension("array needs at least one element".into()));
        }
        Ok(Self { n_elements })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Element spacing in wavelengths.
    pub fn spacing(&self) -> f64 {
        Self::SPACING
    }

    pub fn steering(&self, angle: f64) -> CVec {
        steering_unchecked(angle, self.n_elements)
    }
}

/// Raised-cosine pulse parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    symbol_period: f64,
    rolloff: f64,
}

impl PulseShape {
    pub fn new(symbol_period: f64, rolloff: f64) -> Result<Self> {
        if !(symbol_period > 0.0 && symbol_period.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "symbol period must be positive, got {symbol_period}"
            )));
        }
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(Error::InvalidConfig(format!(
                "rolloff must lie in [0, 1], got {rolloff}"
            )));
        }
        Ok(Self {
            symbol_period,
            rolloff,
        })
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPath {
    pub gain: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Angle of arrival, radians in `[0, π)`.
    pub aoa: f64,
    /// Angle of departure, radians in `[0, π)`.
    pub aod: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: Vec<ChannelPath>,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub pulse: PulseShape,
    pub n_taps: usize,
    pub n_subcarriers: usize,
}

/// Per-subcarrier `N_r × N_t` channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyChannel {
    pub per_subcarrier: Vec<CMat>,
}

impl FrequencyChannel {
    pub fn n_subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }

    pub fn get(&self, k: usize) -> Result<&CMat> {
        check_index("subcarrier", k, self.per_subcarrier.len())?;
        Ok(&self.per_subcarrier[k])
    }
}

/// Parameters for drawing a random realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub n_paths: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_taps: usize,
    pub n_subcarriers: usize,
    pub pulse: PulseShape,
}

/// ULA response `(1/√n)·exp(jπ·i·cos(angle))`, `i = 0..n`.
pub fn steering_vector(angle: f64, n: usize) -> Result<CVec> {
    if n == 0 {
        return Err(Error::InvalidDimension("steering vector of length 0".into()));
    }
    Ok(steering_unchecked(angle, n))
}

fn steering_unchecked(angle: f64, n: usize) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    let c = angle.cos();
    CVec::from_fn(n, |i, _| Complex64::from_polar(scale, PI * i as f64 * c))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine impulse response, normalized so `p(0) = 1`.
pub fn raised_cosine(t: f64, pulse: &PulseShape) -> f64 {
    let x = t / pulse.symbol_period;
    let beta = pulse.rolloff;
    if beta == 0.0 {
        return sinc(x);
    }
    let denom = 1.0 - (2.0 * beta * x).powi(2);
    if denom.abs() < 1e-10 {
        // limit at |t| = T_s / (2β)
        return PI / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    sinc(x) * (PI * beta * x).cos() / denom
}

impl ChannelRealization {
    pub fn new(
        paths: Vec<ChannelPath>,
        tx: ArrayGeometry,
        rx: ArrayGeometry,
        pulse: PulseShape,
        n_taps: usize,
        n_subcarriers: usize,
    ) -> Result<Self> {
        if n_taps == 0 || n_subcarriers == 0 {
            return Err(Error::InvalidDimension(
                "taps and subcarriers must both be positive".into(),
            ));
        }
        let max_delay = (n_taps - 1) as f64 * pulse.symbol_period();
        for (l, p) in paths.iter().enumerate() {
            if !(0.0..=max_delay * (1.0 + 1e-12)).contains(&p.delay) {
                return Err(Error::InvalidInput(format!(
                    "path {l}: delay {} outside [0, {max_delay}]",
                    p.delay
                )));
            }
            if !(0.0..PI).contains(&p.aoa) || !(0.0..PI).contains(&p.aod) {
                return Err(Error::InvalidInput(format!("path {l}: angles must lie in [0, π)")));
            }
        }
        Ok(Self {
            paths,
            tx,
            rx,
            pulse,
            n_taps,
            n_subcarriers,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.tx.n_elements()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.n_elements()
    }

    fn path_outer(&self, path: &ChannelPath) -> CMat {
        let ar = self.rx.steering(path.aoa);
        let at = self.tx.steering(path.aod);
        &ar * at.adjoint()
    }

    /// `H_d = Σ_l α_l p(dT_s − τ_l) a_R(φ_l) a_T(θ_l)^H`.
    pub fn delay_tap(&self, d: usize) -> Result<CMat> {
        check_index("delay tap", d, self.n_taps)?;
        let t = d as f64 * self.pulse.symbol_period();
        let mut h = CMat::zeros(self.n_rx(), self.n_tx());
        for path in &self.paths {
            let w = path.gain * raised_cosine(t - path.delay, &self.pulse);
            h += self.path_outer(path) * w;
        }
        Ok(h)
    }

    /// Frequency response of path `l` (0-based) at subcarrier `k`.
    pub fn rho(&self, k: usize, l: usize) -> Result<Complex64> {
        check_index("subcarrier", k, self.n_subcarriers)?;
        check_index("path", l, self.paths.len())?;
        Ok(self.rho_unchecked(k, self.paths[l].delay))
    }

    fn rho_unchecked(&self, k: usize, delay: f64) -> Complex64 {
        let ts = self.pulse.symbol_period();
        (0..self.n_taps)
            .map(|d| {
                let phase = -2.0 * PI * (k * d) as f64 / self.n_subcarriers as f64;
                Complex64::from_polar(raised_cosine(d as f64 * ts - delay, &self.pulse), phase)
            })
            .sum()
    }

    /// DFT of the delay taps: `H[k] = Σ_d H_d e^{−j2πkd/K}`.
    pub fn frequency_channel(&self) -> FrequencyChannel {
        let taps: Vec<CMat> = (0..self.n_taps)
            .map(|d| self.delay_tap(d).expect("tap index in range"))
            .collect();
        let per_subcarrier = (0..self.n_subcarriers)
            .map(|k| {
                let mut h = CMat::zeros(self.n_rx(), self.n_tx());
                for (d, tap) in taps.iter().enumerate() {
                    let phase = -2.0 * PI * (k * d) as f64 / self.n_subcarriers as f64;
                    h += tap * Complex64::from_polar(1.0, phase);
                }
                h
            })
            .collect();
        FrequencyChannel { per_subcarrier }
    }

    /// Same channel assembled path by path: `H[k] = Σ_l α_l ρ_{k,l} a_R a_T^H`.
    pub fn frequency_channel_by_path(&self) -> FrequencyChannel {
        let outers: Vec<CMat> = self.paths.iter().map(|p| self.path_outer(p)).collect();
        let per_subcarrier = (0..self.n_subcarriers)
            .map(|k| {
                let mut h = CMat::zeros(self.n_rx(), self.n_tx());
                for (path, outer) in self.paths.iter().zip(&outers) {
                    h += outer * (path.gain * self.rho_unchecked(k, path.delay));
                }
                h
            })
            .collect();
        FrequencyChannel { per_subcarrier }
    }

    /// Per-path coefficients `α_l ρ_{k,l}` at subcarrier `k`.
    pub fn path_coefficients(&self, k: usize) -> Result<Vec<Complex64>> {
        check_index("subcarrier", k, self.n_subcarriers)?;
        Ok(self
            .paths
            .iter()
            .map(|p| p.gain * self.rho_unchecked(k, p.delay))
            .collect())
    }
}

/// Column-major stacking of `H[k]`.
pub fn vectorize_channel(freq: &FrequencyChannel, k: usize) -> Result<CVec> {
    Ok(vectorize(freq.get(k)?))
}

pub fn vectorize(h: &CMat) -> CVec {
    CVec::from_column_slice(h.as_slice())
}

/// Inverse of [`vectorize`] for an `n_rx × n_tx` matrix.
pub fn unvectorize(h_v: &CVec, n_rx: usize, n_tx: usize) -> Result<CMat> {
    if h_v.len() != n_rx * n_tx {
        return Err(Error::InvalidDimension(format!(
            "vector of length {} cannot be reshaped to {n_rx}x{n_tx}",
            h_v.len()
        )));
    }
    Ok(CMat::from_column_slice(n_rx, n_tx, h_v.as_slice()))
}

/// Draws gains from CN(0, 1), delays uniformly on `[0, (N_c − 1)T_s]` and
/// both angles uniformly on `[0, π)`.
pub fn random_realization(params: &ChannelParams, seed: u64) -> Result<ChannelRealization> {
    let tx = ArrayGeometry::new(params.n_tx)?;
    let rx = ArrayGeometry::new(params.n_rx)?;
    if params.n_taps == 0 || params.n_subcarriers == 0 {
        return Err(Error::InvalidDimension(
            "taps and subcarriers must both be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_delay = (params.n_taps - 1) as f64 * params.pulse.symbol_period();
    let paths = (0..params.n_paths)
        .map(|_| {
            let gain = complex_gaussian(&mut rng, 1.0);
            let delay = rng.random::<f64>() * max_delay;
            let aoa = rng.random::<f64>() * PI;
            let aod = rng.random::<f64>() * PI;
            ChannelPath {
                gain,
                delay,
                aoa,
                aod,
            }
        })
        .collect();
    ChannelRealization::new(
        paths,
        tx,
        rx,
        params.pulse,
        params.n_taps,
        params.n_subcarriers,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron_vec;
    use proptest::prelude::*;

    fn pulse() -> PulseShape {
        PulseShape::new(1.0 / 1760e6, 0.8).unwrap()
    }

    fn single_path(delay: f64) -> ChannelRealization {
        let p = pulse();
        ChannelRealization::new(
            vec![ChannelPath {
                gain: Complex64::new(0.7, -0.4),
                delay,
                aoa: 1.1,
                aod: 0.3,
            }],
            ArrayGeometry::new(4).unwrap(),
            ArrayGeometry::new(3).unwrap(),
            p,
            4,
            32,
        )
        .unwrap()
    }

    fn params(n_paths: usize) -> ChannelParams {
        ChannelParams {
            n_paths,
            n_tx: 4,
            n_rx: 3,
            n_taps: 4,
            n_subcarriers: 16,
            pulse: pulse(),
        }
    }

    #[test]
    fn steering_examples() {
        let v = steering_vector(PI / 2.0, 4).unwrap();
        for z in v.iter() {
            assert!((z - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        let v = steering_vector(0.0, 2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((v[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(-s, 0.0)).norm() < 1e-15);
        assert!((steering_vector(0.7, 16).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!(matches!(steering_vector(0.1, 0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn raised_cosine_values() {
        let p = pulse();
        let ts = p.symbol_period();
        assert_eq!(raised_cosine(0.0, &p), 1.0);
        assert!(raised_cosine(3.0 * ts, &p).abs() < 1e-12);
        assert!(raised_cosine(-2.0 * ts, &p).abs() < 1e-12);
        // two-sided numerical limit at the removable singularity
        let t0 = ts / (2.0 * 0.8);
        let limit = 0.5 * (raised_cosine(t0 + 1e-8 * ts, &p) + raised_cosine(t0 - 1e-8 * ts, &p));
        assert!((raised_cosine(t0, &p) - limit).abs() < 1e-7);
    }

    #[test]
    fn zero_rolloff_is_sinc() {
        let p = PulseShape::new(1.0, 0.0).unwrap();
        assert!((raised_cosine(0.5, &p) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn pulse_validation() {
        assert!(PulseShape::new(0.0, 0.5).is_err());
        assert!(PulseShape::new(1.0, 1.5).is_err());
    }

    #[test]
    fn delay_tap_examples() {
        let p = pulse();
        let empty = ChannelRealization::new(
            vec![],
            ArrayGeometry::new(2).unwrap(),
            ArrayGeometry::new(2).unwrap(),
            p,
            4,
            8,
        )
        .unwrap();
        assert_eq!(empty.delay_tap(0).unwrap().norm(), 0.0);

        let r = single_path(0.0);
        let path = r.paths[0];
        let expected = &r.rx.steering(path.aoa) * r.tx.steering(path.aod).adjoint() * path.gain;
        assert!((r.delay_tap(0).unwrap() - expected).norm() < 1e-14);
        assert!(r.delay_tap(2).unwrap().norm() < 1e-12);
        assert!(matches!(r.delay_tap(4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn rho_examples() {
        let ts = pulse().symbol_period();
        let r = single_path(0.0);
        for k in 0..32 {
            assert!((r.rho(k, 0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let r = single_path(ts);
        let k = 3;
        let expected = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / 32.0);
        assert!((r.rho(k, 0).unwrap() - expected).norm() < 1e-12);

        // term-by-term evaluation over the four taps
        let r = single_path(0.4 * ts);
        let mut direct = Complex64::new(0.0, 0.0);
        for d in 0..4 {
            let x = d as f64 - 0.4;
            let px = PI * x;
            let b = 0.8;
            let p = (px.sin() / px) * (PI * b * x).cos() / (1.0 - (2.0 * b * x).powi(2));
            direct += Complex64::from_polar(p, -2.0 * PI * 5.0 * d as f64 / 32.0);
        }
        assert!((r.rho(5, 0).unwrap() - direct).norm() < 1e-12);
        assert!(r.rho(32, 0).is_err());
        assert!(r.rho(0, 1).is_err());
    }

    #[test]
    fn flat_single_tap_channel() {
        let r = single_path(0.0);
        let f = r.frequency_channel();
        for k in 1..32 {
            assert!((&f.per_subcarrier[k] - &f.per_subcarrier[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_path_channel_is_zero() {
        let r = random_realization(&params(0), 3).unwrap();
        assert!(r.frequency_channel().per_subcarrier.iter().all(|h| h.norm() == 0.0));
        assert!(vectorize_channel(&r.frequency_channel(), 0).unwrap().norm() == 0.0);
    }

    #[test]
    fn vectorize_is_column_major() {
        let z = |x: f64| Complex64::new(x, 0.0);
        let h = CMat::from_row_slice(2, 2, &[z(1.0), z(2.0), z(3.0), z(4.0)]);
        let v = vectorize(&h);
        assert_eq!(v.as_slice(), &[z(1.0), z(3.0), z(2.0), z(4.0)]);
        assert_eq!(unvectorize(&v, 2, 2).unwrap(), h);
    }

    #[test]
    fn vectorized_single_path_is_khatri_rao() {
        let r = single_path(0.37 * pulse().symbol_period());
        let f = r.frequency_channel();
        let path = r.paths[0];
        for k in [0, 7, 31] {
            let g = kron_vec(&r.tx.steering(path.aod).conjugate(), &r.rx.steering(path.aoa));
            let expected = g * (path.gain * r.rho(k, 0).unwrap());
            assert!((vectorize_channel(&f, k).unwrap() - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn seed_determinism_and_delay_range() {
        let a = random_realization(&params(3), 42).unwrap();
        let b = random_realization(&params(3), 42).unwrap();
        assert_eq!(a, b);
        let ts = pulse().symbol_period();
        for seed in 0..200 {
            let r = random_realization(&params(3), seed).unwrap();
            for p in &r.paths {
                assert!(p.delay >= 0.0 && p.delay <= 3.0 * ts);
                assert!((0.0..PI).contains(&p.aoa) && (0.0..PI).contains(&p.aod));
            }
        }
    }

    #[test]
    fn gain_second_moment() {
        let mut acc = 0.0;
        let n = 10_000;
        for seed in 0..n {
            let r = random_realization(&params(1), seed).unwrap();
            acc += r.paths[0].gain.norm_sqr();
        }
        let m = acc / n as f64;
        assert!((m - 1.0).abs() < 0.05, "E|α|² = {m}");
    }

    #[test]
    fn nyquist_zeros_for_integer_delays() {
        let ts = pulse().symbol_period();
        let mut r = random_realization(&params(2), 9).unwrap();
        r.paths[0].delay = 0.0;
        r.paths[1].delay = 2.0 * ts;
        for d in [1, 3] {
            assert!(r.delay_tap(d).unwrap().norm() < 1e-12);
        }
        assert!(r.delay_tap(2).unwrap().norm() > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn raised_cosine_is_even(t in -10.0f64..10.0, beta in 0.0f64..=1.0) {
            let p = PulseShape::new(1.0, beta).unwrap();
            prop_assert!((raised_cosine(t, &p) - raised_cosine(-t, &p)).abs() < 1e-12);
        }

        #[test]
        fn tap_and_path_forms_agree(seed in any::<u64>()) {
            let r = random_realization(&params(3), seed).unwrap();
            let a = r.frequency_channel();
            let b = r.frequency_channel_by_path();
            for (ha, hb) in a.per_subcarrier.iter().zip(&b.per_subcarrier) {
                prop_assert!((ha - hb).norm() <= 1e-10 * ha.norm().max(1.0));
            }
        }

        #[test]
        fn steering_unit_norm(angle in 0.0f64..PI, n in 1usize..40) {
            prop_assert!((steering_vector(angle, n).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }
}
