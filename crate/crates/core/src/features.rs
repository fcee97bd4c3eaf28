//! Spectral features for multichannel signals.
//!
//! Both features use the full-length DFT magnitude spectrum `|X(k)|`, `k = 0..N−1`, of a
//! real channel.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Equal-length channels sampled at a common rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    channels: Vec<Vec<f64>>,
    sample_rate: f64,
}

impl MultichannelSignal {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: f64) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::input("a signal needs at least one channel"));
        };
        let n = first.len();
        if n < 2 {
            return Err(Error::dim(format!("channels need at least 2 samples, got {n}")));
        }
        if let Some(i) = channels.iter().position(|c| c.len() != n) {
            return Err(Error::dim(format!(
                "channel {i} has {} samples, channel 0 has {n}",
                channels[i].len()
            )));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("channels contain non-finite samples"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::input(format!("sample rate must be > 0, got {sample_rate}")));
        }
        Ok(MultichannelSignal {
            channels,
            sample_rate,
        })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `|X(k)|` for `k = 0..N−1`.
pub fn magnitude_spectrum(channel: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = channel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

/// First difference of the magnitude spectrum: `d(k) = |X(k+1)| − |X(k)|`.
pub fn differential_spectrum(channel: &[f64]) -> Result<Vec<f64>> {
    if channel.len() < 2 {
        return Err(Error::dim(format!(
            "differential spectrum needs at least 2 samples, got {}",
            channel.len()
        )));
    }
    let mag = magnitude_spectrum(channel);
    Ok(mag.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Pearson correlation of the two channels' magnitude spectra, in `[−1, 1]`.
///
/// Returns 0 when either spectrum is constant (including all-zero channels).
pub fn adjacent_channel_fourier_correlation(ch1: &[f64], ch2: &[f64]) -> Result<f64> {
    if ch1.len() != ch2.len() {
        return Err(Error::dim(format!(
            "channel lengths differ: {} vs {}",
            ch1.len(),
            ch2.len()
        )));
    }
    if ch1.len() < 2 {
        return Err(Error::dim("channels need at least 2 samples"));
    }
    Ok(pearson(&magnitude_spectrum(ch1), &magnitude_spectrum(ch2)))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    (cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0)
}

/// Concatenates every channel's differential spectrum (channel order), followed by the
/// Fourier correlations of adjacent pairs `(0,1), (1,2), …`.
///
/// Length is `C·(N−1) + (C−1)` for `C` channels of `N` samples.
pub fn feature_vector(signal: &MultichannelSignal) -> Result<Vec<f64>> {
    let channels = signal.channels();
    let mut out = Vec::with_capacity(channels.len() * signal.len());
    for ch in channels {
        out.extend(differential_spectrum(ch)?);
    }
    for pair in channels.windows(2) {
        out.push(adjacent_channel_fourier_correlation(&pair[0], &pair[1])?);
    }
    Ok(out)
}
