//! Grid file formats: binvox, a packed raw format, and a legacy VTK writer.
//!
//! binvox stores voxels with y varying fastest, then z, then x, and its
//! `dim` line lists the extents in that storage order (x, z, y). The packed raw
//! format is three little-endian `u64` extents (x, y, z) followed by the
//! occupancy bits in linear index order, least significant bit first.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::{Frame, VoxelGrid};
use crate::error::{Error, ParseError, Result};

/// Upper bound on grid size accepted from files.
const MAX_VOXELS: u64 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binvox,
    Raw,
    Vtk,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "binvox" => Some(Format::Binvox),
            "raw" | "bin" => Some(Format::Raw),
            "vtk" => Some(Format::Vtk),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Binvox => "binvox",
            Format::Raw => "raw",
            Format::Vtk => "vtk",
        }
    }
}

pub fn load_grid(path: impl AsRef<Path>, format: Format) -> Result<VoxelGrid> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let parsed = match format {
        Format::Binvox => read_binvox(&mut reader),
        Format::Raw => read_raw(&mut reader),
        Format::Vtk => {
            return Err(Error::Parse {
                path: path.into(),
                source: ParseError::MalformedHeader("VTK files are write-only".into()),
            })
        }
    };
    match parsed {
        Ok(g) => Ok(g),
        Err(ReadError::Io(e)) => Err(Error::io(path, e)),
        Err(ReadError::Parse(source)) => Err(Error::Parse { path: path.into(), source }),
    }
}

pub fn save_grid(g: &VoxelGrid, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        Format::Binvox => write_binvox(g, &mut w),
        Format::Raw => write_raw(g, &mut w),
        Format::Vtk => write_vtk_body(&mut w, g.frame(), "occupancy", g.bits().len(), |i| {
            g.get_index(i) as i64
        }),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes per-voxel integer scalars as VTK legacy `STRUCTURED_POINTS` cell data.
pub fn write_vtk_cells<T>(path: impl AsRef<Path>, frame: &Frame, name: &str, values: &[T]) -> Result<()>
where
    T: Copy + Into<i64>,
{
    let path = path.as_ref();
    if values.len() != frame.len() {
        return Err(Error::InvalidGrid(format!(
            "{} values for a frame of {} voxels",
            values.len(),
            frame.len()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_vtk_body(&mut w, frame, name, values.len(), |i| values[i].into())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_vtk_body(
    w: &mut impl Write,
    frame: &Frame,
    name: &str,
    n: usize,
    value: impl Fn(usize) -> i64,
) -> std::io::Result<()> {
    let [nx, ny, nz] = frame.dims;
    let [ox, oy, oz] = frame.origin;
    let s = frame.spacing;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{name}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1)?;
    writeln!(w, "ORIGIN {ox} {oy} {oz}")?;
    writeln!(w, "SPACING {s} {s} {s}")?;
    writeln!(w, "CELL_DATA {n}")?;
    writeln!(w, "SCALARS {name} int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for row in 0..n.div_ceil(nx) {
        let start = row * nx;
        let end = (start + nx).min(n);
        let line: Vec<String> = (start..end).map(|i| value(i).to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

enum ReadError {
    Io(std::io::Error),
    Parse(ParseError),
}

impl From<std::io::Error> for ReadError {
    fn from(e: std::io::Error) -> Self {
        ReadError::Io(e)
    }
}

impl From<ParseError> for ReadError {
    fn from(e: ParseError) -> Self {
        ReadError::Parse(e)
    }
}

fn checked_volume(dims: [u64; 3]) -> Result<usize, ParseError> {
    if dims.contains(&0) {
        return Err(ParseError::MalformedHeader(format!("zero extent in {dims:?}")));
    }
    let n = dims
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or(ParseError::DimensionOverflow(dims))?;
    if n > MAX_VOXELS || usize::try_from(n).is_err() {
        return Err(ParseError::DimensionOverflow(dims));
    }
    Ok(n as usize)
}

fn header_line(r: &mut impl BufRead) -> Result<Option<String>, ReadError> {
    let mut buf = Vec::new();
    let n = r.read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    let s = String::from_utf8(buf)
        .map_err(|_| ParseError::MalformedHeader("non-UTF-8 header line".into()))?;
    Ok(Some(s.trim().to_string()))
}

fn read_binvox(r: &mut impl BufRead) -> Result<VoxelGrid, ReadError> {
    let magic = header_line(r)?.unwrap_or_default();
    if magic != "#binvox 1" {
        return Err(ParseError::BadMagic { expected: "#binvox 1", found: magic }.into());
    }
    let mut dim: Option<[u64; 3]> = None;
    let mut translate = [0.0f64; 3];
    let mut scale = None;
    loop {
        let line = header_line(r)?
            .ok_or_else(|| ParseError::MalformedHeader("missing `data` line".into()))?;
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        match key {
            "" => continue,
            "data" => break,
            "dim" => {
                let v = parse_numbers::<u64>(&rest, 3, "dim")?;
                dim = Some([v[0], v[1], v[2]]);
            }
            "translate" => {
                let v = parse_numbers::<f64>(&rest, 3, "translate")?;
                translate = [v[0], v[1], v[2]];
            }
            "scale" => scale = Some(parse_numbers::<f64>(&rest, 1, "scale")?[0]),
            other => {
                return Err(ParseError::MalformedHeader(format!("unknown header key `{other}`")).into())
            }
        }
    }
    let [dx, dz, dy] = dim.ok_or_else(|| ParseError::MalformedHeader("missing `dim` line".into()))?;
    let dims = [dx, dy, dz];
    let n = checked_volume(dims)?;
    let max_dim = dims.iter().copied().max().unwrap_or(1) as f64;
    let spacing = scale.unwrap_or(max_dim) / max_dim;
    let frame = Frame::new(dims.map(|d| d as usize), spacing, translate)
        .map_err(|e| ParseError::MalformedHeader(e.to_string()))?;

    let mut occ = FixedBitSet::with_capacity(n);
    let (nx, ny, nz) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    let mut pos = 0usize;
    let mut pair = [0u8; 2];
    while pos < n {
        match read_full(r, &mut pair)? {
            2 => {}
            _ => return Err(ParseError::Truncated { expected: n as u64, found: pos as u64 }.into()),
        }
        let (value, run) = (pair[0], pair[1] as usize);
        if run == 0 {
            return Err(ParseError::MalformedHeader("zero-length run in data".into()).into());
        }
        if pos + run > n {
            return Err(ParseError::TrailingData { extra: (pos + run - n) as u64 }.into());
        }
        if value != 0 {
            for k in pos..pos + run {
                // binvox order: y fastest, then z, then x.
                let y = k % ny;
                let z = (k / ny) % nz;
                let x = k / (ny * nz);
                occ.insert(x + nx * (y + ny * z));
            }
        }
        pos += run;
    }
    Ok(VoxelGrid::from_bits(frame, occ).expect("bit count matches frame"))
}

fn parse_numbers<T: std::str::FromStr>(
    parts: &[&str],
    expected: usize,
    key: &str,
) -> Result<Vec<T>, ParseError> {
    if parts.len() != expected {
        return Err(ParseError::MalformedHeader(format!(
            "`{key}` needs {expected} values, found {}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| ParseError::MalformedHeader(format!("bad `{key}` value `{p}`")))
        })
        .collect()
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

fn write_binvox(g: &VoxelGrid, w: &mut impl Write) -> std::io::Result<()> {
    let f = g.frame();
    let [nx, ny, nz] = f.dims;
    let max_dim = nx.max(ny).max(nz) as f64;
    writeln!(w, "#binvox 1")?;
    writeln!(w, "dim {nx} {nz} {ny}")?;
    writeln!(w, "translate {} {} {}", f.origin[0], f.origin[1], f.origin[2])?;
    writeln!(w, "scale {}", f.spacing * max_dim)?;
    writeln!(w, "data")?;
    let mut current: Option<(bool, u8)> = None;
    for x in 0..nx {
        for z in 0..nz {
            for y in 0..ny {
                let v = g.get([x, y, z]);
                current = match current {
                    Some((cv, run)) if cv == v && run < u8::MAX => Some((cv, run + 1)),
                    Some((cv, run)) => {
                        w.write_all(&[cv as u8, run])?;
                        Some((v, 1))
                    }
                    None => Some((v, 1)),
                };
            }
        }
    }
    if let Some((cv, run)) = current {
        w.write_all(&[cv as u8, run])?;
    }
    Ok(())
}

fn read_raw(r: &mut impl Read) -> Result<VoxelGrid, ReadError> {
    let mut header = [0u8; 24];
    let got = read_full(r, &mut header)?;
    if got < 24 {
        return Err(ParseError::Truncated { expected: 24, found: got as u64 }.into());
    }
    let dims = [0, 1, 2].map(|a| u64::from_le_bytes(header[8 * a..8 * a + 8].try_into().unwrap()));
    let n = checked_volume(dims)?;
    let nbytes = n.div_ceil(8);
    let mut payload = Vec::with_capacity(nbytes + 1);
    r.take(nbytes as u64 + 1).read_to_end(&mut payload)?;
    if payload.len() < nbytes {
        return Err(ParseError::Truncated { expected: nbytes as u64, found: payload.len() as u64 }.into());
    }
    if payload.len() > nbytes {
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        return Err(ParseError::TrailingData { extra: (payload.len() - nbytes + rest.len()) as u64 }.into());
    }
    let mut occ = FixedBitSet::with_capacity(n);
    for (byte_idx, &b) in payload.iter().enumerate() {
        for bit in 0..8 {
            let i = byte_idx * 8 + bit;
            if b & (1 << bit) != 0 {
                if i >= n {
                    return Err(ParseError::MalformedHeader("padding bits set past the last voxel".into()).into());
                }
                occ.insert(i);
            }
        }
    }
    let frame = Frame::new(dims.map(|d| d as usize), 1.0, [0.0; 3])
        .map_err(|e| ParseError::MalformedHeader(e.to_string()))?;
    Ok(VoxelGrid::from_bits(frame, occ).expect("bit count matches frame"))
}

fn write_raw(g: &VoxelGrid, w: &mut impl Write) -> std::io::Result<()> {
    for d in g.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    let n = g.frame().len();
    let mut bytes = vec![0u8; n.div_ceil(8)];
    for i in g.occupied() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    w.write_all(&bytes)
}
