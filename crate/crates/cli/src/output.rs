//! File emission helpers. Every CSV header here is a stable contract.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use auon_core::DenseMatrix;

pub const BENCH_HEADER: [&str; 4] = ["size", "transform", "mean_seconds", "std_seconds"];
pub const SPECTRA_HEADER: [&str; 3] = ["step", "index", "sigma"];
pub const GRAM_HEADER: [&str; 2] = ["step", "frobenius_distance_to_identity"];
pub const DIAGNOSTICS_HEADER: [&str; 4] = ["step", "loss", "kappa_median_sofar", "sigma2_mean_sofar"];
pub const MATRIX_HEADER: [&str; 3] = ["row", "col", "value"];

/// Writes `rows` under `header`. Each row must serialize to one record.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    Ok(())
}

/// Long-format matrix dump, one `row,col,value` record per entry.
pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let cols = m.cols();
    write_csv(
        path,
        &MATRIX_HEADER,
        m.as_slice().iter().enumerate().map(|(k, &v)| (k / cols, k % cols, v)),
    )
}

pub fn announce(path: PathBuf) {
    println!("wrote {}", path.display());
}
