//! Report files: pretty JSON, CSV extracts and a raw binary operator bundle.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::experiments::{BerezinSample, BoundRow, ExperimentReport};
use crate::linalg::CMat;
use crate::localization::LocalizationReport;
use crate::operators::LocalizedOperator;
use crate::{Error, Result, C64};

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_berezin_csv(path: &Path, profile: &[BerezinSample]) -> Result<()> {
    write_rows(path, profile)
}

#[derive(Serialize)]
struct SvRow {
    k: usize,
    sigma_k: f64,
}

/// `k` is 1-based.
pub fn write_singular_values_csv(path: &Path, sv: &[f64]) -> Result<()> {
    write_rows(path, sv.iter().enumerate().map(|(i, &s)| SvRow { k: i + 1, sigma_k: s }))
}

#[derive(Serialize)]
struct BoundCsvRow {
    r: f64,
    epsilon: f64,
    norm: f64,
    bound: f64,
    essential_bound: f64,
    adjoint_bound: f64,
    admissible: bool,
}

pub fn write_bounds_csv(path: &Path, rows: &[BoundRow]) -> Result<()> {
    write_rows(
        path,
        rows.iter().map(|b| BoundCsvRow {
            r: b.r,
            epsilon: b.epsilon,
            norm: b.norm,
            bound: b.bound,
            essential_bound: b.essential_bound,
            adjoint_bound: b.adjoint_bound,
            admissible: b.admissible,
        }),
    )
}

#[derive(Serialize)]
struct RhoRow {
    epsilon: f64,
    rho_low: f64,
    rho_high: Option<f64>,
}

pub fn write_rho_csv(path: &Path, report: &LocalizationReport) -> Result<()> {
    write_rows(path, report.rho_table.iter().map(|r| RhoRow { epsilon: r.epsilon, rho_low: r.low, rho_high: r.high }))
}

#[derive(Serialize)]
struct TailRow {
    radius: f64,
    row: Option<f64>,
    col: Option<f64>,
    interior_fraction: f64,
}

pub fn write_tail_csv(path: &Path, report: &LocalizationReport) -> Result<()> {
    write_rows(
        path,
        report.tail_profile.iter().map(|e| TailRow {
            radius: e.radius,
            row: e.row,
            col: e.col,
            interior_fraction: e.interior_fraction,
        }),
    )
}

/// Writes `report.json` plus the CSV extracts into `dir`, returning the written paths.
pub fn write_report_bundle(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let p = |name: &str| dir.join(name);
    write_json(&p("report.json"), report)?;
    write_berezin_csv(&p("berezin_profile.csv"), &report.berezin_profile)?;
    write_singular_values_csv(&p("singular_values.csv"), &report.singular_values)?;
    write_bounds_csv(&p("bounds.csv"), &report.bounds)?;
    write_rho_csv(&p("rho_table.csv"), &report.operator_localization)?;
    Ok(["report.json", "berezin_profile.csv", "singular_values.csv", "bounds.csv", "rho_table.csv"]
        .iter()
        .map(|n| p(n))
        .collect())
}

/// Writes `localization.json`, `tail_profile.csv` and `rho_table.csv` into `dir`.
pub fn write_localization_bundle<T: Serialize>(dir: &Path, summary: &T, report: &LocalizationReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let p = |name: &str| dir.join(name);
    write_json(&p("localization.json"), summary)?;
    write_tail_csv(&p("tail_profile.csv"), report)?;
    write_rho_csv(&p("rho_table.csv"), report)?;
    Ok(["localization.json", "tail_profile.csv", "rho_table.csv"].iter().map(|n| p(n)).collect())
}

pub const MATRIX_MAGIC: &[u8; 8] = b"WLOCOP01";

/// Raw matrix: magic, `u64` rows, `u64` cols, then column-major little-endian `(re, im)` pairs.
pub fn write_matrix(path: &Path, m: &CMat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for col in m.columns() {
        for z in col {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<CMat> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Format(format!("{} is not an operator matrix file", path.display())));
    }
    let mut word = [0u8; 8];
    let mut next = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let rows = u64::from_le_bytes(next(&mut r)?) as usize;
    let cols = u64::from_le_bytes(next(&mut r)?) as usize;
    let mut m = CMat::zeros((rows, cols));
    for j in 0..cols {
        for i in 0..rows {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            m[[i, j]] = C64::new(re, im);
        }
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} has {} trailing bytes", path.display(), rest.len())));
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub label: String,
    pub family: String,
    pub space: String,
    pub nodes: usize,
    pub dim: usize,
    pub compressed: bool,
}

/// Writes `<name>.bin` (the action matrix) and `<name>.json` (metadata) into `dir`.
pub fn write_operator(dir: &Path, name: &str, t: &LocalizedOperator) -> Result<OperatorMeta> {
    fs::create_dir_all(dir)?;
    let frame = &t.ctx.frame;
    let meta = OperatorMeta {
        label: t.label(),
        family: frame.family.name().into(),
        space: frame.domain.space.kind.name().into(),
        nodes: frame.len(),
        dim: frame.dim(),
        compressed: frame.is_compressed(),
    };
    write_matrix(&dir.join(format!("{name}.bin")), &t.action)?;
    write_json(&dir.join(format!("{name}.json")), &meta)?;
    Ok(meta)
}

pub fn read_operator(dir: &Path, name: &str) -> Result<(CMat, OperatorMeta)> {
    let m = read_matrix(&dir.join(format!("{name}.bin")))?;
    let meta: OperatorMeta = read_json(&dir.join(format!("{name}.json")))?;
    if m.nrows() != meta.dim || m.ncols() != meta.dim {
        return Err(Error::Format(format!("matrix is {}x{} but metadata says dimension {}", m.nrows(), m.ncols(), meta.dim)));
    }
    Ok((m, meta))
}
