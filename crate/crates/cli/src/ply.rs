//! Minimal PLY reader/writer for point geometry.
//!
//! Reading accepts `ascii 1.0` and `binary_little_endian 1.0` files and
//! extracts the `x`, `y`, `z` properties of the `vertex` element; every other
//! vertex property is skipped and elements after `vertex` (faces and the like)
//! are ignored. Writing always emits binary little-endian `float` vertices so
//! output bytes are deterministic across platforms.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use lsrn_core::cloud::VoxelCloud;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a PLY file (missing magic line)")]
    NotPly,
    #[error("unsupported PLY format `{0}` (expected ascii or binary_little_endian 1.0)")]
    UnsupportedFormat(String),
    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),
    #[error("vertex element is missing scalar x/y/z properties")]
    MissingCoordinates,
    #[error("list property before the vertex element is not supported in binary files")]
    ListBeforeVertex,
    #[error("file ends before all {0} vertices are read")]
    TruncatedBody(usize),
    #[error("malformed vertex row: {0}")]
    MalformedRow(String),
}

type Result<T> = std::result::Result<T, PlyError>;

/// Points read from a PLY file, plus whether x/y/z were integer-typed.
#[derive(Debug, Clone)]
pub struct PlyDocument {
    pub points: Vec<[f64; 3]>,
    pub integer_typed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    F32,
    F64,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::F32 | Scalar::I32 | Scalar::U32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            Scalar::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
            Scalar::I8 => bytes[0] as i8 as f64,
            Scalar::U8 => bytes[0] as f64,
            Scalar::I16 => i16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            Scalar::U16 => u16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            Scalar::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
        }
    }
}

#[derive(Debug, Clone)]
struct Property {
    ty: Scalar,
    name: String,
    is_list: bool,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

pub fn read_ply(path: &Path) -> Result<PlyDocument> {
    parse_ply(&fs::read(path)?)
}

pub fn parse_ply(bytes: &[u8]) -> Result<PlyDocument> {
    let (format, elements, body_start) = parse_header(bytes)?;
    let vertex_idx = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| PlyError::MalformedHeader("no vertex element".into()))?;
    let vertex = &elements[vertex_idx];

    let mut coord_cols = [usize::MAX; 3];
    let mut coord_tys = [Scalar::F32; 3];
    for (i, prop) in vertex.properties.iter().enumerate() {
        let slot = match prop.name.as_str() {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            _ => continue,
        };
        if prop.is_list {
            return Err(PlyError::MissingCoordinates);
        }
        coord_cols[slot] = i;
        coord_tys[slot] = prop.ty;
    }
    if coord_cols.contains(&usize::MAX) {
        return Err(PlyError::MissingCoordinates);
    }
    let integer_typed = coord_tys.iter().all(|t| t.is_integer());

    let points = match format {
        Format::Ascii => read_ascii_vertices(&bytes[body_start..], &elements, vertex_idx, coord_cols)?,
        Format::BinaryLe => read_binary_vertices(&bytes[body_start..], &elements, vertex_idx, coord_cols)?,
    };
    Ok(PlyDocument { points, integer_typed })
}

/// Parses the header and returns (format, elements, offset of first body byte).
fn parse_header(bytes: &[u8]) -> Result<(Format, Vec<Element>, usize)> {
    let mut pos = 0usize;
    let mut first = true;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();

    loop {
        let line_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| PlyError::MalformedHeader("no end_header".into()))?;
        let raw = &bytes[pos..pos + line_end];
        pos += line_end + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| PlyError::MalformedHeader("non-UTF-8 header line".into()))?
            .trim_end_matches('\r');
        let mut tokens = line.split_ascii_whitespace();
        let keyword = tokens.next().unwrap_or("");

        if first {
            if keyword != "ply" {
                return Err(PlyError::NotPly);
            }
            first = false;
            continue;
        }
        match keyword {
            "format" => {
                let kind = tokens.next().unwrap_or("");
                let version = tokens.next().unwrap_or("");
                format = Some(match (kind, version) {
                    ("ascii", "1.0") => Format::Ascii,
                    ("binary_little_endian", "1.0") => Format::BinaryLe,
                    _ => return Err(PlyError::UnsupportedFormat(format!("{kind} {version}"))),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| PlyError::MalformedHeader("element without name".into()))?;
                let count: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| PlyError::MalformedHeader("element without count".into()))?;
                elements.push(Element { name: name.to_string(), count, properties: Vec::new() });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| PlyError::MalformedHeader("property before element".into()))?;
                let ty_tok = tokens
                    .next()
                    .ok_or_else(|| PlyError::MalformedHeader("property without type".into()))?;
                if ty_tok == "list" {
                    let _count_ty = tokens
                        .next()
                        .and_then(Scalar::parse)
                        .ok_or_else(|| PlyError::MalformedHeader("bad list count type".into()))?;
                    let item_ty = tokens
                        .next()
                        .and_then(Scalar::parse)
                        .ok_or_else(|| PlyError::MalformedHeader("bad list item type".into()))?;
                    let name = tokens
                        .next()
                        .ok_or_else(|| PlyError::MalformedHeader("property without name".into()))?;
                    element.properties.push(Property {
                        ty: item_ty,
                        name: name.to_string(),
                        is_list: true,
                    });
                } else {
                    let ty = Scalar::parse(ty_tok).ok_or_else(|| {
                        PlyError::MalformedHeader(format!("unknown property type `{ty_tok}`"))
                    })?;
                    let name = tokens
                        .next()
                        .ok_or_else(|| PlyError::MalformedHeader("property without name".into()))?;
                    element.properties.push(Property {
                        ty,
                        name: name.to_string(),
                        is_list: false,
                    });
                }
            }
            "end_header" => {
                let format = format
                    .ok_or_else(|| PlyError::MalformedHeader("no format line".into()))?;
                return Ok((format, elements, pos));
            }
            other => {
                return Err(PlyError::MalformedHeader(format!("unknown keyword `{other}`")));
            }
        }
    }
}

fn read_ascii_vertices(
    body: &[u8],
    elements: &[Element],
    vertex_idx: usize,
    coord_cols: [usize; 3],
) -> Result<Vec<[f64; 3]>> {
    let text = std::str::from_utf8(body)
        .map_err(|_| PlyError::MalformedRow("non-UTF-8 body in ascii file".into()))?;
    let mut lines = text.lines();
    // Each row of every element occupies one line, so earlier elements are
    // skipped by line count even when they contain list properties.
    for element in &elements[..vertex_idx] {
        for _ in 0..element.count {
            lines
                .next()
                .ok_or(PlyError::TruncatedBody(elements[vertex_idx].count))?;
        }
    }
    let vertex = &elements[vertex_idx];
    let mut points = Vec::with_capacity(vertex.count);
    for _ in 0..vertex.count {
        let line = lines.next().ok_or(PlyError::TruncatedBody(vertex.count))?;
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let mut point = [0.0f64; 3];
        for (slot, &col) in coord_cols.iter().enumerate() {
            let field = fields
                .get(col)
                .ok_or_else(|| PlyError::MalformedRow(line.to_string()))?;
            point[slot] = field
                .parse::<f64>()
                .map_err(|_| PlyError::MalformedRow(line.to_string()))?;
        }
        points.push(point);
    }
    Ok(points)
}

fn read_binary_vertices(
    body: &[u8],
    elements: &[Element],
    vertex_idx: usize,
    coord_cols: [usize; 3],
) -> Result<Vec<[f64; 3]>> {
    let mut pos = 0usize;
    for element in &elements[..vertex_idx] {
        if element.properties.iter().any(|p| p.is_list) {
            return Err(PlyError::ListBeforeVertex);
        }
        let row: usize = element.properties.iter().map(|p| p.ty.size()).sum();
        pos = pos
            .checked_add(row * element.count)
            .filter(|&p| p <= body.len())
            .ok_or(PlyError::TruncatedBody(elements[vertex_idx].count))?;
    }

    let vertex = &elements[vertex_idx];
    if vertex.properties.iter().any(|p| p.is_list) {
        return Err(PlyError::MissingCoordinates);
    }
    let offsets: Vec<usize> = vertex
        .properties
        .iter()
        .scan(0usize, |acc, p| {
            let here = *acc;
            *acc += p.ty.size();
            Some(here)
        })
        .collect();
    let row: usize = vertex.properties.iter().map(|p| p.ty.size()).sum();
    let need = row
        .checked_mul(vertex.count)
        .ok_or(PlyError::TruncatedBody(vertex.count))?;
    if body.len() - pos < need {
        return Err(PlyError::TruncatedBody(vertex.count));
    }

    let mut points = Vec::with_capacity(vertex.count);
    for i in 0..vertex.count {
        let base = pos + i * row;
        let mut point = [0.0f64; 3];
        for (slot, &col) in coord_cols.iter().enumerate() {
            let prop = &vertex.properties[col];
            point[slot] = prop.ty.read_le(&body[base + offsets[col]..]);
        }
        points.push(point);
    }
    Ok(points)
}

/// Writes a voxel cloud as a binary little-endian PLY with float32 vertices.
pub fn write_ply(path: &Path, cloud: &VoxelCloud) -> Result<()> {
    let mut out = Vec::with_capacity(128 + cloud.len() * 12);
    out.extend_from_slice(b"ply\n");
    out.extend_from_slice(b"format binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {}\n", cloud.len()).as_bytes());
    out.extend_from_slice(b"property float x\n");
    out.extend_from_slice(b"property float y\n");
    out.extend_from_slice(b"property float z\n");
    out.extend_from_slice(b"end_header\n");
    for v in cloud.points() {
        for &c in v {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}
