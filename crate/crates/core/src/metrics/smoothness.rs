use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::record::EpisodeRecord;

use super::series::{downsample, tip_speed};
use super::MetricsError;

/// Spectral arc length parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparcParams {
    pub cutoff_hz: f64,
    pub amp_threshold: f64,
    /// The FFT length is the next power of two above the series length,
    /// multiplied by `2^padding_level`.
    pub padding_level: u32,
}

impl Default for SparcParams {
    fn default() -> Self {
        Self { cutoff_hz: 10.0, amp_threshold: 0.05, padding_level: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessResult {
    pub sparc: f64,
    pub ldlj: f64,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessOptions {
    /// Resampling rate; `None` keeps the recorded control rate.
    pub fs: Option<f64>,
    pub sparc: SparcParams,
}

impl Default for SmoothnessOptions {
    fn default() -> Self {
        Self { fs: Some(5.0), sparc: SparcParams::default() }
    }
}

fn check_series(speed: &[f64], fs: f64, min: usize) -> Result<(), MetricsError> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(MetricsError::InvalidParameter("sample rate must be positive"));
    }
    if speed.len() < min {
        return Err(MetricsError::SeriesTooShort { len: speed.len(), min });
    }
    if speed.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    Ok(())
}

/// Spectral arc length of a uniformly sampled speed profile.
///
/// The zero-padded magnitude spectrum is normalized to a peak of one, cut at
/// `min(cutoff_hz, fs / 2)`, and trimmed to the bins between the first and the
/// last one reaching `amp_threshold`. The result is minus the length of that
/// curve with frequency rescaled to `[0, 1]`.
pub fn sparc(speed: &[f64], fs: f64, params: &SparcParams) -> Result<f64, MetricsError> {
    check_series(speed, fs, 4)?;
    if !(params.cutoff_hz > 0.0 && params.amp_threshold > 0.0 && params.amp_threshold < 1.0) {
        return Err(MetricsError::InvalidParameter("SPARC cutoff and threshold"));
    }
    let nfft = speed.len().next_power_of_two() << params.padding_level;
    let mut buf: Vec<Complex<f64>> = speed.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(nfft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let half = &buf[..=nfft / 2];
    let mag: Vec<f64> = half.iter().map(|c| c.norm()).collect();
    let peak = mag.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(MetricsError::AllZeroSignal);
    }
    let df = fs / nfft as f64;
    let cutoff = params.cutoff_hz.min(fs / 2.0);
    let n_band = ((cutoff / df).floor() as usize + 1).min(mag.len());
    let band: Vec<f64> = mag[..n_band].iter().map(|m| m / peak).collect();

    let first = band.iter().position(|&m| m >= params.amp_threshold);
    let last = band.iter().rposition(|&m| m >= params.amp_threshold);
    let (Some(first), Some(last)) = (first, last) else {
        return Ok(0.0);
    };
    if last == first {
        return Ok(0.0);
    }
    let width = (last - first) as f64 * df;
    let arc: f64 = band[first..=last].windows(2).map(|w| ((df / width).powi(2) + (w[1] - w[0]).powi(2)).sqrt()).sum();
    Ok(-arc)
}

/// Log dimensionless jerk of a uniformly sampled speed profile.
///
/// Jerk is the second derivative of speed by the three-point stencil, with the
/// series mirrored about its end samples. The squared jerk is integrated with a
/// rectangle rule over `T = (n - 1) / fs`.
pub fn ldlj(speed: &[f64], fs: f64) -> Result<f64, MetricsError> {
    check_series(speed, fs, 5)?;
    let n = speed.len();
    let h = 1.0 / fs;
    let v_peak = speed.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if v_peak == 0.0 {
        return Err(MetricsError::ZeroPeakSpeed);
    }
    let at = |i: isize| -> f64 {
        let j = if i < 0 {
            -i
        } else if i >= n as isize {
            2 * (n as isize - 1) - i
        } else {
            i
        };
        speed[j as usize]
    };
    let integral: f64 = (0..n as isize)
        .map(|i| {
            let j = (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h);
            j * j * h
        })
        .sum();
    if integral == 0.0 {
        return Err(MetricsError::ZeroJerk);
    }
    let duration = (n - 1) as f64 * h;
    Ok(-(duration.powi(3) / (v_peak * v_peak) * integral).ln())
}

/// Tip-speed smoothness of a recorded episode.
pub fn episode_smoothness(episode: &EpisodeRecord, opts: &SmoothnessOptions) -> Result<SmoothnessResult, MetricsError> {
    let speed = tip_speed(episode)?;
    let (values, fs) = match opts.fs {
        Some(fs) => (downsample(&speed, fs)?.values, fs),
        None => {
            let fs = 1.0 / episode.header.dt;
            (speed.values, fs)
        }
    };
    Ok(SmoothnessResult { sparc: sparc(&values, fs, &opts.sparc)?, ldlj: ldlj(&values, fs)?, sample_rate_hz: fs })
}
