use std::fmt::Write as _;
use std::io::Write;

use super::deviation::DeviationStats;
use super::smoothness::{SmoothnessResult, SparcParams};

/// Metrics for one episode, as emitted by the report writers.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub label: String,
    pub rows: usize,
    pub duration_s: f64,
    pub deviation: DeviationStats,
    pub smoothness: SmoothnessResult,
    pub sparc_params: SparcParams,
}

pub const TABLE_COLUMNS: [&str; 12] = [
    "episode",
    "rows",
    "duration_s",
    "dev_mean_mm",
    "dev_median_mm",
    "dev_max_mm",
    "sparc",
    "ldlj",
    "sample_rate_hz",
    "sparc_cutoff_hz",
    "sparc_amp_threshold",
    "sparc_padding_level",
];

/// Human-readable report, one block per episode.
pub fn render_text(reports: &[EpisodeReport]) -> String {
    let mut out = String::new();
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let d = &r.deviation;
        let s = &r.smoothness;
        let p = &r.sparc_params;
        writeln!(out, "episode: {}", r.label).unwrap();
        writeln!(out, "  rows:               {}", r.rows).unwrap();
        writeln!(out, "  duration:           {:.3} s", r.duration_s).unwrap();
        writeln!(out, "  rcm deviation mean: {:.6} mm", d.mean_mm).unwrap();
        writeln!(out, "  rcm deviation med:  {:.6} mm", d.median_mm).unwrap();
        writeln!(out, "  rcm deviation max:  {:.6} mm", d.max_mm).unwrap();
        writeln!(out, "  sparc:              {:.4}", s.sparc).unwrap();
        writeln!(out, "  ldlj:               {:.4}", s.ldlj).unwrap();
        writeln!(out, "  metric rate:        {} Hz", s.sample_rate_hz).unwrap();
        writeln!(
            out,
            "  sparc params:       cutoff {} Hz, threshold {}, padding {}",
            p.cutoff_hz, p.amp_threshold, p.padding_level
        )
        .unwrap();
    }
    out
}

/// Machine-readable table with the columns in [`TABLE_COLUMNS`].
pub fn write_table<W: Write>(reports: &[EpisodeReport], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TABLE_COLUMNS)?;
    for r in reports {
        let d = &r.deviation;
        let s = &r.smoothness;
        let p = &r.sparc_params;
        w.write_record([
            r.label.clone(),
            r.rows.to_string(),
            r.duration_s.to_string(),
            d.mean_mm.to_string(),
            d.median_mm.to_string(),
            d.max_mm.to_string(),
            s.sparc.to_string(),
            s.ldlj.to_string(),
            s.sample_rate_hz.to_string(),
            p.cutoff_hz.to_string(),
            p.amp_threshold.to_string(),
            p.padding_level.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
