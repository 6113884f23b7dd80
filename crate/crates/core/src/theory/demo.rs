use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SpectralModel;
use crate::error::{Error, Result};

pub const DEMO_HEADER: &str = "k,lambda_x,h_mag2,lambda_ytilde,d,r";

/// One DFT component of the optimal allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoRow {
    pub k: usize,
    pub lambda_x: f64,
    pub h_mag2: f64,
    pub lambda_ytilde: f64,
    pub d: f64,
    pub r: f64,
}

pub fn demo_rows(model: &SpectralModel) -> Result<Vec<DemoRow>> {
    let alloc = model.optimal_allocation()?;
    let filtered = model.filtered_spectrum();
    let mag2 = model.h_mag2();
    Ok((0..model.len())
        .map(|k| DemoRow {
            k,
            lambda_x: model.lambda_x()[k],
            h_mag2: mag2[k],
            lambda_ytilde: filtered[k],
            d: alloc.d[k],
            r: alloc.r[k],
        })
        .collect())
}

/// Writes the allocation table as CSV. Floats use the shortest representation
/// that parses back to the same value.
pub fn demo_write<W: Write>(model: &SpectralModel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in demo_rows(model)? {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn demo_emit(model: &SpectralModel, out_path: &Path) -> Result<()> {
    let file = std::fs::File::create(out_path)?;
    demo_write(model, std::io::BufWriter::new(file))
}
