//! CSV writers for solver internals, shared by the qp and sqp debug dumps.

use nalgebra::{DMatrix, DVector};
use std::io::Write;
use std::path::Path;

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.16e}", m[(r, c)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for value in v.iter() {
        writeln!(out, "{:.16e}", value)?;
    }
    Ok(())
}

pub fn write_scalar(path: &Path, v: f64) -> std::io::Result<()> {
    std::fs::write(path, format!("{:.16e}\n", v))
}
