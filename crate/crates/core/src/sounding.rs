//! Hybrid training: quantized-phase precoders and combiners, pilot symbols,
//! the stacked sensing operators `Φ[k]` and noisy received measurements.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{vectorize, FrequencyChannel};
use crate::error::{check_index, Error, Result};
use crate::linalg::{complex_gaussian, kron, CMat, CVec};

/// Uniform `Q`-bit phase-shifter codebook `{2πq/2^Q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCodebook {
    bits: u32,
}

impl PhaseCodebook {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 24 {
            return Err(Error::InvalidConfig(format!(
                "codebook bits must be in 1..=24, got {bits}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> u32 {
        1 << self.bits
    }

    pub fn angle(&self, code: u32) -> f64 {
        2.0 * PI * f64::from(code) / f64::from(self.size())
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.size()).map(|q| self.angle(q)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoundingDims {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf: usize,
    pub n_subcarriers: usize,
}

impl SoundingDims {
    fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.n_rf == 0 || self.n_subcarriers == 0 {
            return Err(Error::InvalidConfig("all sounding dimensions must be positive".into()));
        }
        if self.n_rf > self.n_tx.min(self.n_rx) {
            return Err(Error::InvalidConfig(format!(
                "N_RF = {} exceeds min(N_t, N_r) = {}",
                self.n_rf,
                self.n_tx.min(self.n_rx)
            )));
        }
        Ok(())
    }
}

/// One training frame. Precoder and combiner are frequency-flat; the pilot
/// symbols differ per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingFrame {
    /// `N_t × N_s`.
    pub precoder: CMat,
    /// `N_r × N_RF`.
    pub combiner: CMat,
    /// `K` pilot vectors of length `N_s`.
    pub symbols: Vec<CVec>,
    /// Codebook indices of the precoder phases (column-major).
    pub precoder_codes: Vec<u32>,
    /// Codebook indices of the combiner phases (column-major).
    pub combiner_codes: Vec<u32>,
}

impl TrainingFrame {
    /// `x_m[k] = F_{T,m} s_m[k]`.
    pub fn transmitted(&self, k: usize) -> Result<CVec> {
        check_index("subcarrier", k, self.symbols.len())?;
        Ok(&self.precoder * &self.symbols[k])
    }
}

/// Stacked per-subcarrier measurements over `M` frames.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    /// `K` vectors of length `M·N_RF`.
    pub received: Vec<CVec>,
    /// `K` matrices of shape `(M·N_RF) × (N_t·N_r)`.
    pub sensing: Vec<CMat>,
    /// Per-antenna noise standard deviation `σ`.
    pub noise_std: f64,
    /// Average noise standard deviation after combining.
    pub combined_noise_std: f64,
    pub frames: usize,
    pub n_tx: usize,
    pub n_rx: usize,
}

fn phase_matrix<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    codebook: &PhaseCodebook,
) -> (CMat, Vec<u32>) {
    let scale = 1.0 / (rows as f64).sqrt();
    let codes: Vec<u32> = (0..rows * cols)
        .map(|_| rng.random_range(0..codebook.size()))
        .collect();
    let m = CMat::from_iterator(
        rows,
        cols,
        codes
            .iter()
            .map(|&c| Complex64::from_polar(scale, codebook.angle(c))),
    );
    (m, codes)
}

/// Generates `m` frames with uniformly drawn codebook phases and QPSK pilots
/// scaled to `E[s s^H] = (P/N_s)·I` with `N_s = N_RF`.
pub fn gen_frames(
    m: usize,
    dims: SoundingDims,
    codebook: &PhaseCodebook,
    power: f64,
    seed: u64,
) -> Result<Vec<TrainingFrame>> {
    if m == 0 {
        return Err(Error::InvalidConfig("at least one training frame is required".into()));
    }
    dims.validate()?;
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidConfig(format!("power must be positive, got {power}")));
    }
    let n_s = dims.n_rf;
    let amp = (power / n_s as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = (0..m)
        .map(|_| {
            let (precoder, precoder_codes) = phase_matrix(&mut rng, dims.n_tx, n_s, codebook);
            let (combiner, combiner_codes) = phase_matrix(&mut rng, dims.n_rx, dims.n_rf, codebook);
            let symbols = (0..dims.n_subcarriers)
                .map(|_| {
                    CVec::from_fn(n_s, |_, _| {
                        let q = rng.random_range(0..4u32);
                        Complex64::from_polar(amp, PI / 4.0 + PI / 2.0 * f64::from(q))
                    })
                })
                .collect();
            TrainingFrame {
                precoder,
                combiner,
                symbols,
                precoder_codes,
                combiner_codes,
            }
        })
        .collect();
    Ok(frames)
}

/// Vertical stack over frames of `x_m[k]^T ⊗ W_{T,m}^H`.
pub fn build_phi(frames: &[TrainingFrame], k: usize) -> Result<CMat> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidInput("no training frames".into()))?;
    let n_rf = first.combiner.ncols();
    let n = first.precoder.nrows() * first.combiner.nrows();
    let mut phi = CMat::zeros(frames.len() * n_rf, n);
    for (m, frame) in frames.iter().enumerate() {
        if frame.combiner.ncols() != n_rf || frame.precoder.nrows() * frame.combiner.nrows() != n {
            return Err(Error::InvalidDimension("frames have inconsistent shapes".into()));
        }
        let x = frame.transmitted(k)?;
        let x_row = CMat::from_row_slice(1, x.len(), x.as_slice());
        let block = kron(&x_row, &frame.combiner.adjoint());
        phi.view_mut((m * n_rf, 0), (n_rf, n)).copy_from(&block);
    }
    Ok(phi)
}

/// `σ² = P / (K · SNR)`; infinite SNR gives a noiseless link.
pub fn noise_variance(snr_db: f64, power: f64, n_subcarriers: usize) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    power / (n_subcarriers as f64 * 10f64.powf(snr_db / 10.0))
}

/// `σ · sqrt(mean squared row norm of W^H)` over all frames.
pub fn effective_noise_std(frames: &[TrainingFrame], sigma: f64) -> f64 {
    let mut acc = 0.0;
    let mut rows = 0usize;
    for f in frames {
        // rows of W^H are the columns of W
        for c in f.combiner.column_iter() {
            acc += c.norm_squared();
            rows += 1;
        }
    }
    if rows == 0 {
        return 0.0;
    }
    sigma * (acc / rows as f64).sqrt()
}

/// Synthesizes `y_m[k] = W^H H[k] x_m[k] + W^H z_m[k]` stacked over frames.
pub fn receive(
    freq: &FrequencyChannel,
    frames: &[TrainingFrame],
    snr_db: f64,
    power: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidConfig("no training frames".into()))?;
    let k_total = freq.n_subcarriers();
    let h0 = freq.get(0)?;
    let (n_rx, n_tx) = h0.shape();
    let n_rf = first.combiner.ncols();
    for f in frames {
        if f.precoder.nrows() != n_tx || f.combiner.nrows() != n_rx || f.symbols.len() != k_total {
            return Err(Error::InvalidConfig(format!(
                "frames ({}x{} precoder, {} rx, {} subcarriers) do not match a {n_rx}x{n_tx} channel over {k_total} subcarriers",
                f.precoder.nrows(),
                f.precoder.ncols(),
                f.combiner.nrows(),
                f.symbols.len()
            )));
        }
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidConfig("SNR is NaN".into()));
    }
    let var = noise_variance(snr_db, power, k_total);
    let sigma = var.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut received = Vec::with_capacity(k_total);
    let mut sensing = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let h = &freq.per_subcarrier[k];
        let phi = build_phi(frames, k)?;
        let mut y = &phi * vectorize(h);
        if sigma > 0.0 {
            for (m, f) in frames.iter().enumerate() {
                let z = CVec::from_fn(n_rx, |_, _| complex_gaussian(&mut rng, var));
                let wz = f.combiner.adjoint() * z;
                let mut seg = y.rows_mut(m * n_rf, n_rf);
                seg += wz;
            }
        }
        received.push(y);
        sensing.push(phi);
    }
    Ok(MeasurementSet {
        received,
        sensing,
        noise_std: sigma,
        combined_noise_std: effective_noise_std(frames, sigma),
        frames: frames.len(),
        n_tx,
        n_rx,
    })
}
