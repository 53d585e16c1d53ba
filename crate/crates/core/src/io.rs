//! CSV and JSON interchange.
//!
//! Matrices are written row-major, one CSV record per row, no header, every
//! value in scientific notation with 17 significant digits so that reading a
//! file back reproduces the exact `f64`.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::completion::CompletionResult;
use crate::error::{Error, Result};
use crate::mds::MdsResult;
use crate::packing::{PackingSet, Verification};
use crate::sampling::{MaskMatrix, Observation, ObservationMeta};

/// Shortest form that still round-trips: 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::invalid(format!("row {}: cannot parse '{field}'", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::shape(format!(
                    "row {} has {} values, expected {}",
                    line + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::invalid("empty matrix file"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn save_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix(BufWriter::new(File::create(path)?), m)
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix(File::open(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `y.csv`, `mask.csv` and `observation.json` into `dir`.
pub fn save_observation(dir: &Path, obs: &Observation) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_matrix(&dir.join("y.csv"), &obs.y)?;
    save_matrix(&dir.join("mask.csv"), obs.mask.matrix())?;
    save_json(&dir.join("observation.json"), &obs.meta())
}

/// Reads an observation from explicit paths; `p` and `nu` come from the sidecar.
pub fn load_observation(y: &Path, mask: &Path, meta: &ObservationMeta) -> Result<Observation> {
    let y = load_matrix(y)?;
    let mask = MaskMatrix::from_matrix(load_matrix(mask)?)?;
    if y.nrows() != meta.n {
        return Err(Error::shape(format!(
            "sidecar says n = {} but y has {} rows",
            meta.n,
            y.nrows()
        )));
    }
    let mut obs = Observation::new(y, mask, meta.p, meta.nu)?;
    if let (Some(master_seed), Some(trial_index)) = (meta.master_seed, meta.trial_index) {
        obs.seed = Some(crate::sampling::SeedSpec::new(master_seed, trial_index));
    }
    Ok(obs)
}

/// Writes `d_hat.csv` and `completion.json`.
pub fn save_completion(dir: &Path, res: &CompletionResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_matrix(&dir.join("d_hat.csv"), &res.d_hat)?;
    save_json(&dir.join("completion.json"), &res.diagnostics)
}

/// Writes `x_hat.csv` (`d` rows by `n` columns) and `mds.json`.
pub fn save_mds(dir: &Path, res: &MdsResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_matrix(&dir.join("x_hat.csv"), &res.x_hat)?;
    save_json(&dir.join("mds.json"), &res.diagnostics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingManifest {
    pub n: usize,
    pub r: usize,
    pub delta: f64,
    #[serde(rename = "M")]
    pub cardinality: u64,
    pub seed: u64,
    pub drawn: usize,
    pub files: Vec<String>,
    pub verification: Option<Verification>,
}

/// Writes `matrix_00000.csv`, ... and `manifest.json`.
pub fn save_packing(
    dir: &Path,
    ps: &PackingSet,
    verification: Option<Verification>,
) -> Result<PackingManifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(ps.matrices.len());
    for (l, m) in ps.matrices.iter().enumerate() {
        let name = format!("matrix_{l:05}.csv");
        save_matrix(&dir.join(&name), m)?;
        files.push(name);
    }
    let manifest = PackingManifest {
        n: ps.n,
        r: ps.r,
        delta: ps.delta,
        cardinality: ps.cardinality,
        seed: ps.seed,
        drawn: ps.matrices.len(),
        files,
        verification,
    };
    save_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
