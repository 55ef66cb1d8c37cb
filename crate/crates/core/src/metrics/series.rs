use crate::record::EpisodeRecord;

use super::MetricsError;

/// Scalar samples with timestamps (s), strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimedSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimedSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len(), "times and values differ in length");
        Self { times, values }
    }

    /// Uniform series starting at `t0`.
    pub fn uniform(values: Vec<f64>, fs: f64, t0: f64) -> Self {
        let times = (0..values.len()).map(|i| t0 + i as f64 / fs).collect();
        Self { times, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean sample rate over the whole series, `None` with fewer than two samples.
    pub fn mean_rate(&self) -> Option<f64> {
        let n = self.times.len();
        (n >= 2).then(|| (n - 1) as f64 / (self.times[n - 1] - self.times[0]))
    }

    fn interpolate(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.times.len() {
            return self.values[i - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        // grid nodes that land on a sample (up to rounding) take it verbatim
        let snap = 1e-9 * (t1 - t0);
        if t - t0 <= snap {
            return v0;
        }
        if t1 - t <= snap {
            return v1;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Linear resampling onto `t0 + k / target_hz`, for every grid point within the
/// series' time span.
pub fn downsample(series: &TimedSeries, target_hz: f64) -> Result<TimedSeries, MetricsError> {
    if !(target_hz > 0.0 && target_hz.is_finite()) {
        return Err(MetricsError::InvalidParameter("target rate must be positive"));
    }
    if series.is_empty() {
        return Err(MetricsError::EmptyEpisode);
    }
    let Some(input_hz) = series.mean_rate() else {
        return Ok(series.clone());
    };
    if input_hz < target_hz * (1.0 - 1e-9) {
        return Err(MetricsError::RateTooLow { input_hz, target_hz });
    }
    let t0 = series.times[0];
    let span = series.times[series.len() - 1] - t0;
    let count = (span * target_hz * (1.0 + 1e-12)).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|k| t0 + k as f64 / target_hz).collect();
    let values = times.iter().map(|&t| series.interpolate(t)).collect();
    Ok(TimedSeries { times, values })
}

/// Tip speed by forward differences of recorded tip positions; sample `i` is
/// the mean speed over `[t_i, t_{i+1}]` and is stamped at `t_i`.
pub fn tip_speed(episode: &EpisodeRecord) -> Result<TimedSeries, MetricsError> {
    if episode.rows.len() < 2 {
        return Err(MetricsError::EmptyEpisode);
    }
    let (times, values) =
        episode.rows.windows(2).map(|w| (w[0].time, (w[1].tip - w[0].tip).norm() / (w[1].time - w[0].time))).unzip();
    Ok(TimedSeries { times, values })
}
