use std::io::Write;

use crate::error::Result;
use crate::trustmhe::Estimate;

pub const TRACE_MAGIC: &str = "# trustsim trace v1";

pub const TRACE_COLUMNS: [&str; 8] = [
    "sim_time_s",
    "omega",
    "weighted_ade_m",
    "ego_x",
    "ego_y",
    "ego_v",
    "min_dist_m",
    "crash_count",
];

/// One row per prediction tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub omega: f64,
    /// `None` when the estimator is disabled.
    pub estimate: Option<Estimate>,
    pub ego_x: f64,
    pub ego_y: f64,
    pub ego_v: f64,
    pub min_dist: f64,
    pub crashes: u32,
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

impl TraceRow {
    fn cells(&self) -> [String; 8] {
        let ade = match self.estimate {
            None => "off".to_string(),
            Some(Estimate::Warmup) => "warmup".to_string(),
            Some(Estimate::NoEvidence) => "none".to_string(),
            Some(Estimate::Error(d)) => fixed(d),
        };
        [
            fixed(self.time),
            fixed(self.omega),
            ade,
            fixed(self.ego_x),
            fixed(self.ego_y),
            fixed(self.ego_v),
            fixed(self.min_dist),
            self.crashes.to_string(),
        ]
    }
}

/// Writes the versioned trace: a magic comment line, a header, then rows.
pub fn write_trace<W: Write>(mut out: W, rows: &[TraceRow]) -> Result<()> {
    writeln!(out, "{TRACE_MAGIC}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let rows = [
            TraceRow {
                time: 0.0,
                omega: 1.0,
                estimate: Some(Estimate::Warmup),
                ego_x: 1.0,
                ego_y: -0.5,
                ego_v: 8.0,
                min_dist: f64::INFINITY,
                crashes: 0,
            },
            TraceRow {
                time: 0.25,
                omega: 0.5,
                estimate: Some(Estimate::Error(0.125)),
                ego_x: 3.0,
                ego_y: 0.0,
                ego_v: 8.0,
                min_dist: 12.5,
                crashes: 1,
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_MAGIC);
        assert_eq!(lines[1], TRACE_COLUMNS.join(","));
        assert_eq!(
            lines[2],
            "0.000000,1.000000,warmup,1.000000,-0.500000,8.000000,inf,0"
        );
        assert_eq!(
            lines[3],
            "0.250000,0.500000,0.125000,3.000000,0.000000,8.000000,12.500000,1"
        );
    }
}
