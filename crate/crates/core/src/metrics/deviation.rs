use crate::geometry::{point_to_line_distance, Vec3};
use crate::record::EpisodeRecord;
use crate::solver::ShaftCalibration;

use super::MetricsError;

/// Distance between the trocar point and the shaft line, per recorded step, in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationStats {
    pub mean_mm: f64,
    pub max_mm: f64,
    pub median_mm: f64,
    pub series_mm: Vec<f64>,
}

impl DeviationStats {
    pub fn from_series(series_mm: Vec<f64>) -> Result<Self, MetricsError> {
        if series_mm.is_empty() {
            return Err(MetricsError::EmptyEpisode);
        }
        let mean_mm = series_mm.iter().sum::<f64>() / series_mm.len() as f64;
        let max_mm = series_mm.iter().copied().fold(0.0, f64::max);
        let median_mm = median(&series_mm);
        Ok(Self { mean_mm, max_mm, median_mm, series_mm })
    }
}

/// Median of a non-empty slice (mean of the two middle values for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Rebuilds the shaft line from each recorded flange pose and measures its
/// distance to `p_rcm`.
pub fn rcm_deviation_series(
    episode: &EpisodeRecord,
    p_rcm: &Vec3,
    calib: &ShaftCalibration,
) -> Result<DeviationStats, MetricsError> {
    let series = episode
        .rows
        .iter()
        .map(|row| {
            let (tip, dir) = calib.shaft_line(&row.flange);
            point_to_line_distance(p_rcm, &tip, &dir)
                .map(|d| d * 1e3)
                .map_err(|_| MetricsError::InvalidParameter("calibration shaft direction is not unit length"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    DeviationStats::from_series(series)
}
