//! Field dumps and CSV slices.
//!
//! Binary layout (all integers `u64` little-endian):
//!
//! ```text
//! dims | size_1 … size_dims | arity | f64 LE samples
//! ```
//!
//! Samples are row-major over the grid axes with `arity` consecutive values
//! per point. Scalar fields have arity 1; Hermitian fields store the full
//! `n×n` matrix as `(re, im)` pairs row by row (arity `2n²`). A JSON sidecar
//! `<dump>.json` carries [`FieldMetadata`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};
use crate::grid::{GridSpec, HermitianField, ScalarField};
use crate::herm::{HermForm, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub format: String,
    pub name: String,
    pub n: usize,
    pub sizes: Vec<usize>,
    pub axes: Vec<String>,
    pub arity: usize,
    pub components: Vec<String>,
    #[serde(default)]
    pub description: String,
}

pub const FORMAT_TAG: &str = "gma-field-v1";

/// Raw dump contents.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub sizes: Vec<usize>,
    pub arity: usize,
    pub data: Vec<f64>,
}

impl FieldDump {
    pub fn grid(&self) -> Result<GridSpec> {
        if self.sizes.len() % 2 != 0 {
            return Err(GmaError::Format("odd number of axes".into()));
        }
        GridSpec::new(self.sizes.len() / 2, self.sizes.clone())
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        if self.arity != 1 {
            return Err(GmaError::Format(format!("expected arity 1, found {}", self.arity)));
        }
        let grid = self.grid()?;
        ScalarField::new(grid, self.data)
    }
}

pub fn encode_dump(sizes: &[usize], arity: usize, data: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * (sizes.len() + 2 + data.len()));
    out.extend_from_slice(&(sizes.len() as u64).to_le_bytes());
    for &s in sizes {
        out.extend_from_slice(&(s as u64).to_le_bytes());
    }
    out.extend_from_slice(&(arity as u64).to_le_bytes());
    for &v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_dump(bytes: &[u8]) -> Result<FieldDump> {
    let mut words = bytes.chunks_exact(8);
    let mut next_u64 = |what: &str| -> Result<u64> {
        words
            .next()
            .map(|w| u64::from_le_bytes(w.try_into().expect("8-byte chunk")))
            .ok_or_else(|| GmaError::Format(format!("truncated header ({what})")))
    };
    let dims = next_u64("dimension count")? as usize;
    if dims == 0 || dims > 16 {
        return Err(GmaError::Format(format!("implausible dimension count {dims}")));
    }
    let sizes = (0..dims).map(|_| next_u64("axis size").map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
    let arity = next_u64("arity")? as usize;
    let header = 8 * (dims + 2);
    let points: usize = sizes.iter().product();
    let expected = header + 8 * points * arity;
    if bytes.len() != expected {
        return Err(GmaError::Format(format!("payload is {} bytes, header implies {expected}", bytes.len())));
    }
    let data =
        bytes[header..].chunks_exact(8).map(|w| f64::from_le_bytes(w.try_into().expect("8-byte chunk"))).collect();
    Ok(FieldDump { sizes, arity, data })
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_with_sidecar(
    path: &Path,
    grid: &GridSpec,
    arity: usize,
    data: &[f64],
    name: &str,
    components: Vec<String>,
    description: &str,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_dump(grid.sizes(), arity, data))?;
    w.flush()?;
    let meta = FieldMetadata {
        format: FORMAT_TAG.into(),
        name: name.into(),
        n: grid.n(),
        sizes: grid.sizes().to_vec(),
        axes: (0..grid.dims()).map(|a| grid.axis_name(a)).collect(),
        arity,
        components,
        description: description.into(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| GmaError::Format(e.to_string()))?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn write_scalar_field(path: &Path, field: &ScalarField, name: &str, description: &str) -> Result<()> {
    write_with_sidecar(path, field.grid(), 1, field.values(), name, vec![name.to_string()], description)
}

pub fn write_hermitian_field(path: &Path, field: &HermitianField, name: &str, description: &str) -> Result<()> {
    let n = field.grid().n();
    let mut data = Vec::with_capacity(field.values().len() * 2 * n * n);
    for h in field.values() {
        for i in 0..n {
            for j in 0..n {
                let z = h.get(i, j);
                data.push(z.re);
                data.push(z.im);
            }
        }
    }
    let components =
        (0..n).flat_map(|i| (0..n).flat_map(move |j| [format!("re{i}{j}"), format!("im{i}{j}")])).collect();
    write_with_sidecar(path, field.grid(), 2 * n * n, &data, name, components, description)
}

pub fn read_dump(path: &Path) -> Result<FieldDump> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_dump(&bytes)
}

pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    read_dump(path)?.into_scalar()
}

pub fn read_hermitian_field(path: &Path) -> Result<HermitianField> {
    let dump = read_dump(path)?;
    let grid = dump.grid()?;
    let n = grid.n();
    if dump.arity != 2 * n * n {
        return Err(GmaError::Format(format!("expected arity {}, found {}", 2 * n * n, dump.arity)));
    }
    let values = dump
        .data
        .chunks_exact(dump.arity)
        .map(|c| HermForm::from_upper_fn(n, |i, j| C64::new(c[2 * (i * n + j)], c[2 * (i * n + j) + 1])))
        .collect();
    HermitianField::new(grid, values)
}

pub fn read_metadata(path: &Path) -> Result<FieldMetadata> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| GmaError::Format(e.to_string()))
}

/// Selects a 2D coordinate slice: two free axes, every other axis pinned.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub axes: (usize, usize),
    /// Index for each axis; entries for the free axes are ignored.
    pub fixed: Vec<usize>,
}

impl SliceSpec {
    pub fn new(axes: (usize, usize), fixed: Vec<usize>) -> Self {
        Self { axes, fixed }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let d = grid.dims();
        let (a, b) = self.axes;
        if a >= d || b >= d || a == b {
            return Err(GmaError::invalid(format!("slice axes ({a}, {b}) invalid for {d} axes")));
        }
        if self.fixed.len() != d {
            return Err(GmaError::invalid(format!("expected {d} fixed indices")));
        }
        for (axis, (&i, &n)) in self.fixed.iter().zip(grid.sizes()).enumerate() {
            if axis != a && axis != b && i >= n {
                return Err(GmaError::invalid(format!("index {i} out of range on axis {axis}")));
            }
        }
        Ok(())
    }
}

/// Writes `coord1,coord2,value` rows (with a header naming the axes).
/// Floats are written in shortest round-trip form.
pub fn write_csv_slice<W: Write>(field: &ScalarField, slice: &SliceSpec, mut out: W) -> Result<()> {
    let grid = field.grid();
    slice.validate(grid)?;
    let (a, b) = slice.axes;
    writeln!(out, "{},{},value", grid.axis_name(a), grid.axis_name(b))?;
    let sizes = grid.sizes();
    let mut idx = slice.fixed.clone();
    for i in 0..sizes[a] {
        for j in 0..sizes[b] {
            idx[a] = i;
            idx[b] = j;
            let v = field.values()[grid.flat_index(&idx)];
            let ca = i as f64 / sizes[a] as f64;
            let cb = j as f64 / sizes[b] as f64;
            writeln!(out, "{ca},{cb},{v}")?;
        }
    }
    Ok(())
}

/// Parses the output of [`write_csv_slice`] back into `(c1, c2, value)` rows.
pub fn parse_csv_slice(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(GmaError::Format(format!("bad CSV row: {line}")));
            }
            let p = |s: &str| s.trim().parse::<f64>().map_err(|e| GmaError::Format(e.to_string()));
            Ok((p(parts[0])?, p(parts[1])?, p(parts[2])?))
        })
        .collect()
}
