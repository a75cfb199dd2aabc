//! File formats.
//!
//! * Reports: pretty-printed JSON. Field order is fixed by the types and
//!   floats print in shortest round-trip form, so equal inputs give
//!   byte-identical files.
//! * Operators: the magic `NLSYMOP1`, a little-endian `u64` header length, a
//!   JSON header, then little-endian `f64` payload: `W` row-major (`n × n`),
//!   `κ` (`n`), and the outside-box mass (`n`).
//! * Fields: little-endian `f64` over the whole lattice (`name.bin`) with a
//!   JSON sidecar (`name.json`) carrying the grid.
//! * Grids: `grid.json` plus the mask as one byte per lattice node.
//! * Tables for plotting: CSV with a header row.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nlsym_core::energy::{AssemblyOptions, AssemblyStats, EnergyOperator};
use nlsym_core::geometry::{Grid, RadialDomain};
use nlsym_core::kernel::{KernelSpec, Sample};
use nlsym_core::polarization::FoliatedReport;
use nlsym_core::solver::IterLog;
use nlsym_core::Field;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OPERATOR_MAGIC: &[u8; 8] = b"NLSYMOP1";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to rebuild a [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub domain: RadialDomain,
    pub h: f64,
    pub half_extent: usize,
    pub interior_nodes: usize,
    pub lattice_nodes: usize,
}

impl GridMeta {
    pub fn of(grid: &Grid) -> Self {
        Self {
            domain: *grid.domain(),
            h: grid.h(),
            half_extent: grid.half_extent(),
            interior_nodes: grid.interior().len(),
            lattice_nodes: grid.node_count(),
        }
    }

    pub fn build(&self) -> nlsym_core::Result<Grid> {
        let grid = Grid::with_half_extent(self.domain, self.h, self.half_extent)?;
        if grid.interior().len() != self.interior_nodes || grid.node_count() != self.lattice_nodes {
            return Err(nlsym_core::Error::GridMismatch);
        }
        Ok(grid)
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

fn write_f64s(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn decode_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub grid: GridMeta,
    pub options: AssemblyOptions,
    pub stats: AssemblyStats,
    pub n: usize,
    pub payload: String,
}

pub fn write_operator(path: &Path, op: &EnergyOperator, seed: u64) -> Result<()> {
    let n = op.len();
    let header = OperatorHeader {
        format: "nlsym-operator".into(),
        version: FORMAT_VERSION,
        seed,
        kernel: op.kernel().clone(),
        grid: GridMeta::of(op.grid()),
        options: *op.options(),
        stats: *op.stats(),
        n,
        payload: "f64 le: W row-major n*n, kappa n, box_mass n".into(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::format(path, e))?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(OPERATOR_MAGIC).map_err(io)?;
    w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    write_f64s(&mut w, op.weights()).map_err(io)?;
    write_f64s(&mut w, op.kappa()).map_err(io)?;
    write_f64s(&mut w, op.box_mass()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_operator(path: &Path) -> Result<(EnergyOperator, OperatorHeader)> {
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != OPERATOR_MAGIC {
        return Err(Error::format(path, "not an operator file"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16 + hlen).ok_or_else(|| Error::format(path, "truncated header"))?;
    let header: OperatorHeader = serde_json::from_slice(body).map_err(|e| Error::format(path, e))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported version {}", header.version)));
    }
    let n = header.n;
    let payload = &bytes[16 + hlen..];
    if payload.len() != 8 * (n * n + 2 * n) {
        return Err(Error::format(path, "payload length does not match the header"));
    }
    let values = decode_f64s(payload);
    let grid = header.grid.build()?;
    let weights = values[..n * n].to_vec();
    let kappa = values[n * n..n * n + n].to_vec();
    let box_mass = values[n * n + n..].to_vec();
    let op = EnergyOperator::from_parts(header.kernel.clone(), grid, header.options, weights, kappa, box_mass)?;
    Ok((op, header))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub seed: u64,
    pub grid: GridMeta,
    pub len: usize,
}

/// Sidecar path for a field binary.
pub fn sidecar(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Write `dir/name.bin` and `dir/name.json`; returns the binary's path.
pub fn write_field(dir: &Path, name: &str, field: &Field, grid: &Grid, seed: u64) -> Result<PathBuf> {
    field.check_grid(grid)?;
    let bin = dir.join(format!("{name}.bin"));
    let mut data = Vec::with_capacity(8 * field.values().len());
    write_f64s(&mut data, field.values()).map_err(|e| Error::io(&bin, e))?;
    fs::write(&bin, data).map_err(|e| Error::io(&bin, e))?;
    let meta = FieldMeta {
        format: "nlsym-field".into(),
        version: FORMAT_VERSION,
        name: name.into(),
        seed,
        grid: GridMeta::of(grid),
        len: field.values().len(),
    };
    write_json(&sidecar(&bin), &meta)?;
    Ok(bin)
}

pub fn read_field(bin: &Path) -> Result<(Grid, Field, FieldMeta)> {
    let meta: FieldMeta = read_json(&sidecar(bin))?;
    let bytes = fs::read(bin).map_err(|e| Error::io(bin, e))?;
    if bytes.len() != 8 * meta.len {
        return Err(Error::format(bin, "length does not match the sidecar"));
    }
    let grid = meta.grid.build()?;
    let field = Field::from_values(&grid, decode_f64s(&bytes)).map_err(|e| Error::format(bin, e))?;
    Ok((grid, field, meta))
}

pub fn write_grid(dir: &Path, grid: &Grid, seed: u64) -> Result<()> {
    #[derive(Serialize)]
    struct Doc {
        format: &'static str,
        seed: u64,
        grid: GridMeta,
        mask: &'static str,
    }
    let doc = Doc { format: "nlsym-grid", seed, grid: GridMeta::of(grid), mask: "grid_mask.bin" };
    write_json(&dir.join("grid.json"), &doc)?;
    let mask: Vec<u8> = grid.mask().iter().map(|&b| b as u8).collect();
    let path = dir.join("grid_mask.bin");
    fs::write(&path, mask).map_err(|e| Error::io(&path, e))
}

/// Rebuild the grid from `grid.json` and check it against the stored mask.
pub fn read_grid(dir: &Path) -> Result<Grid> {
    #[derive(Deserialize)]
    struct Doc {
        grid: GridMeta,
    }
    let doc: Doc = read_json(&dir.join("grid.json"))?;
    let grid = doc.grid.build()?;
    let path = dir.join("grid_mask.bin");
    let mask = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if mask.len() != grid.node_count() || mask.iter().zip(grid.mask()).any(|(&a, &b)| (a != 0) != b) {
        return Err(Error::format(&path, "mask does not match the grid"));
    }
    Ok(grid)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::format(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(path, e)
}

/// Interior nodes as rows `x, y[, z…], name₁, name₂, …`.
pub fn write_fields_csv(path: &Path, grid: &Grid, columns: &[(&str, &Field)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let axes = ["x", "y", "z", "w"];
    let mut header: Vec<String> = (0..grid.dim()).map(|i| axes.get(i).map_or(format!("x{i}"), |s| s.to_string())).collect();
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header).map_err(csv_err(path))?;
    for &i in grid.interior() {
        let mut row: Vec<String> = grid.point(i).iter().map(|c| c.to_string()).collect();
        row.extend(columns.iter().map(|(_, f)| f.values()[i].to_string()));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header and numeric rows of a CSV table.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::format(path, format!("`{s}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_log_csv(path: &Path, log: &[IterLog]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iter", "j", "residual", "step", "norm2"]).map_err(csv_err(path))?;
    for l in log {
        w.write_record([l.iter.to_string(), l.j.to_string(), l.residual.to_string(), l.step.to_string(), l.norm2.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_log_csv(path: &Path) -> Result<Vec<IterLog>> {
    let (_, rows) = read_table(path)?;
    rows.iter()
        .map(|r| match r.as_slice() {
            &[iter, j, residual, step, norm2] => Ok(IterLog { iter: iter as usize, j, residual, step, norm2 }),
            _ => Err(Error::format(path, "expected five columns")),
        })
        .collect()
}

/// Ring profiles as rows `component, radius, angle, upper, lower`, the
/// component given by its position in `reports`.
pub fn write_rings_csv(path: &Path, reports: &[FoliatedReport]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["component", "radius", "angle", "upper", "lower"]).map_err(csv_err(path))?;
    for (k, rep) in reports.iter().enumerate() {
        for ring in &rep.rings {
            for ((a, u), l) in ring.angles.iter().zip(&ring.upper).zip(&ring.lower) {
                w.write_record([k.to_string(), ring.radius.to_string(), a.to_string(), u.to_string(), l.to_string()])
                    .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Two columns `r, k0`; a non-numeric first row is taken as a header.
pub fn read_kernel_table(path: &Path) -> Result<Vec<Sample>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.len() != 2 {
            return Err(Error::format(path, format!("row {}: expected two columns", line + 1)));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(r), Ok(k0)) => out.push(Sample { r, k0 }),
            _ if line == 0 => continue,
            _ => return Err(Error::format(path, format!("row {}: not numeric", line + 1))),
        }
    }
    if out.is_empty() {
        return Err(Error::format(path, "no samples"));
    }
    Ok(out)
}
