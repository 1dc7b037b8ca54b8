use std::io::Write;

use serde::{Deserialize, Serialize};

use super::UnderlayError;

/// One per-STA result row: `seed,density,sta_id,demand_mbps,throughput_mbps,strategy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRow {
    pub seed: u64,
    pub density: String,
    pub sta_id: u32,
    pub demand_mbps: f64,
    pub throughput_mbps: f64,
    pub strategy: String,
}

pub fn write_rows_csv<W: Write>(out: W, rows: &[ThroughputRow]) -> Result<(), UnderlayError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
