//! End-to-end experiment pipelines. Each returns JSON results plus raw CSV
//! tables; a seed that fails is recorded with its error and the run goes on.

pub mod curves;
pub mod propagation;
pub mod spheres;
pub mod sweep;

use serde_json::Value;

/// Barcodes are only read at `epsilon`, so the filtration stops there.
pub(crate) fn homology_options(max_dim: usize, epsilon: f64) -> crate::homology::HomologyOptions {
    crate::homology::HomologyOptions {
        clearing: true,
        ..crate::homology::HomologyOptions::new(max_dim, epsilon)
    }
}

/// Barcode up to `epsilon` when it fits under the simplex cap, and the Betti
/// numbers at `epsilon` in any case.
pub(crate) fn barcode_and_betti(
    d: &crate::linalg::DistanceMatrix,
    max_dim: usize,
    epsilon: f64,
) -> crate::error::Result<(Option<crate::homology::Barcode>, Vec<usize>)> {
    use crate::error::Error;
    use crate::homology::{betti_at_scale, metric_homology, rips_betti_at, DEFAULT_SIMPLEX_CAP};
    match metric_homology(d, &homology_options(max_dim, epsilon)) {
        Ok(b) => {
            let betti = betti_at_scale(&b, epsilon);
            Ok((Some(b), betti))
        }
        Err(Error::SimplexCap { .. }) => Ok((None, rips_betti_at(d, max_dim, epsilon, DEFAULT_SIMPLEX_CAP)?)),
        Err(e) => Err(e),
    }
}

pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file_name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self {
            file_name: file_name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        crate::io::table_to_csv(&header, &self.rows)
    }
}

pub struct ExperimentOutput {
    pub results: Value,
    pub tables: Vec<Table>,
}

pub(crate) fn csv_row<const N: usize>(fields: [String; N]) -> Vec<String> {
    fields.into()
}

pub(crate) fn fmt_death(d: f64) -> String {
    if d.is_infinite() {
        "inf".into()
    } else {
        d.to_string()
    }
}
