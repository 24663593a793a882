//! PLY point clouds: `ascii 1.0` and `binary_little_endian 1.0`.
//!
//! Only the `vertex` element is interpreted: `x`, `y`, `z` (float or double),
//! optional `red`, `green`, `blue` (uchar) and an optional integer `label`.
//! Other scalar properties and elements are skipped; list properties are
//! rejected.

use std::io::Write;
use std::path::Path;

use super::{format_sig9, read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::{ColorRGB, Point3, PointCloud, SurfaceClass, DEFAULT_FRAME};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }

    fn parse_ascii(self, tok: &str) -> Option<f64> {
        if self.is_float() {
            let v: f64 = tok.parse().ok()?;
            return Some(if self == Scalar::F32 { v as f32 as f64 } else { v });
        }
        let v: i64 = tok.parse().ok()?;
        let (lo, hi) = match self {
            Scalar::I8 => (i8::MIN as i64, i8::MAX as i64),
            Scalar::U8 => (0, u8::MAX as i64),
            Scalar::I16 => (i16::MIN as i64, i16::MAX as i64),
            Scalar::U16 => (0, u16::MAX as i64),
            Scalar::I32 => (i32::MIN as i64, i32::MAX as i64),
            _ => (0, u32::MAX as i64),
        };
        (lo..=hi).contains(&v).then_some(v as f64)
    }
}

#[derive(Debug)]
struct Property {
    name: String,
    ty: Scalar,
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

impl Element {
    fn stride(&self) -> usize {
        self.props.iter().map(|p| p.ty.size()).sum()
    }
}

#[derive(Debug)]
struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    source_tag: String,
    frame_id: String,
    /// Byte offset of the body.
    body: usize,
    /// Number of header lines (the body starts on the next line).
    lines: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut source_tag = String::new();
    let mut frame_id = DEFAULT_FRAME.to_owned();

    loop {
        let Some(nl) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(Error::parse(line_no + 1, "header ends before 'end_header'"));
        };
        line_no += 1;
        let raw = &bytes[pos..pos + nl];
        pos += nl + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| Error::parse(line_no, "header line is not valid text"))?
            .trim_end_matches('\r');
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap_or("");

        if line_no == 1 {
            if line.trim() != "ply" {
                return Err(Error::parse(1, "missing 'ply' magic line"));
            }
            continue;
        }
        match keyword {
            "format" => {
                let kind = words.next().unwrap_or("");
                let version = words.next().unwrap_or("");
                if version != "1.0" {
                    return Err(Error::parse(line_no, format!("unsupported PLY version '{version}'")));
                }
                encoding = Some(match kind {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(Error::UnsupportedFormat("PLY encoding binary_big_endian".into()))
                    }
                    other => return Err(Error::parse(line_no, format!("unknown PLY format '{other}'"))),
                });
            }
            "comment" => {
                let rest = line.trim_start()["comment".len()..].trim();
                if let Some(tag) = rest.strip_prefix("source_tag ") {
                    source_tag = tag.trim().to_owned();
                } else if let Some(frame) = rest.strip_prefix("frame_id ") {
                    frame_id = frame.trim().to_owned();
                }
            }
            "obj_info" | "" => {}
            "element" => {
                let name = words.next().ok_or_else(|| Error::parse(line_no, "element without a name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(line_no, format!("element '{name}' has no valid count")))?;
                elements.push(Element { name: name.to_owned(), count, props: Vec::new() });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "property declared before any element"))?;
                let ty = words.next().unwrap_or("");
                if ty == "list" {
                    let name = words.nth(2).unwrap_or("?");
                    return Err(Error::UnsupportedFormat(format!(
                        "list property '{name}' in element '{}'",
                        element.name
                    )));
                }
                let name = words.next().ok_or_else(|| Error::parse(line_no, "property without a name"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| {
                    Error::UnsupportedFormat(format!("property '{name}' has unsupported type '{ty}'"))
                })?;
                element.props.push(Property { name: name.to_owned(), ty });
            }
            "end_header" => break,
            other => return Err(Error::parse(line_no, format!("unexpected header keyword '{other}'"))),
        }
    }

    let encoding = encoding.ok_or_else(|| Error::parse(line_no, "header has no format line"))?;
    Ok(Header { encoding, elements, source_tag, frame_id, body: pos, lines: line_no })
}

/// Column positions of the interpreted vertex properties.
struct VertexLayout {
    xyz: [usize; 3],
    rgb: Option<[usize; 3]>,
    label: Option<usize>,
}

fn vertex_layout(el: &Element) -> Result<VertexLayout> {
    let find = |n: &str| el.props.iter().position(|p| p.name == n);
    let mut xyz = [0; 3];
    for (slot, n) in xyz.iter_mut().zip(["x", "y", "z"]) {
        let i = find(n)
            .ok_or_else(|| Error::UnsupportedFormat(format!("vertex element lacks property '{n}'")))?;
        if !el.props[i].ty.is_float() {
            return Err(Error::UnsupportedFormat(format!(
                "property '{n}' must be float or double, found {:?}",
                el.props[i].ty
            )));
        }
        *slot = i;
    }
    let rgb = match (find("red"), find("green"), find("blue")) {
        (None, None, None) => None,
        (Some(r), Some(g), Some(b)) => {
            for i in [r, g, b] {
                if el.props[i].ty != Scalar::U8 {
                    return Err(Error::UnsupportedFormat(format!(
                        "color property '{}' must be uchar",
                        el.props[i].name
                    )));
                }
            }
            Some([r, g, b])
        }
        _ => {
            return Err(Error::UnsupportedFormat(
                "vertex colors need all of 'red', 'green' and 'blue'".into(),
            ))
        }
    };
    let label = find("label");
    if let Some(i) = label {
        if el.props[i].ty.is_float() {
            return Err(Error::UnsupportedFormat("property 'label' must be an integer type".into()));
        }
    }
    Ok(VertexLayout { xyz, rgb, label })
}

struct Sink {
    points: Vec<Point3<f64>>,
    colors: Vec<ColorRGB>,
    labels: Vec<SurfaceClass>,
}

impl Sink {
    fn push(&mut self, layout: &VertexLayout, row: &[f64], line: usize) -> Result<()> {
        let [x, y, z] = layout.xyz.map(|i| row[i]);
        self.points.push(Point3::new(x, y, z));
        if let Some([r, g, b]) = layout.rgb {
            self.colors.push(ColorRGB::new(row[r] as u8, row[g] as u8, row[b] as u8));
        }
        if let Some(l) = layout.label {
            let class = SurfaceClass::from_code(row[l] as i64)
                .ok_or_else(|| Error::parse(line, format!("unknown label code {}", row[l])))?;
            self.labels.push(class);
        }
        Ok(())
    }
}

/// Decode a PLY document held in memory.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud<f64>> {
    let header = parse_header(bytes)?;
    let vertex = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::UnsupportedFormat("PLY has no vertex element".into()))?;
    let layout = vertex_layout(&header.elements[vertex])?;
    let n = header.elements[vertex].count;
    let mut sink = Sink { points: Vec::with_capacity(n), colors: Vec::new(), labels: Vec::new() };
    let body = &bytes[header.body..];

    match header.encoding {
        PlyEncoding::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::parse(header.lines + 1, "body is not valid text"))?;
            let mut lines = text
                .lines()
                .enumerate()
                .map(|(i, l)| (header.lines + 1 + i, l.trim()))
                .filter(|(_, l)| !l.is_empty());
            let mut last_line = header.lines;
            let mut row = Vec::new();
            for (ei, el) in header.elements.iter().enumerate() {
                for k in 0..el.count {
                    let Some((line_no, line)) = lines.next() else {
                        return Err(Error::parse(
                            last_line + 1,
                            format!(
                                "element '{}' declares {} entries but the body ends after {}",
                                el.name, el.count, k
                            ),
                        ));
                    };
                    last_line = line_no;
                    row.clear();
                    for (tok, prop) in line.split_whitespace().zip(&el.props) {
                        let v = prop.ty.parse_ascii(tok).ok_or_else(|| {
                            Error::parse(
                                line_no,
                                format!("invalid {:?} value '{tok}' for property '{}'", prop.ty, prop.name),
                            )
                        })?;
                        row.push(v);
                    }
                    let found = line.split_whitespace().count();
                    if found != el.props.len() {
                        return Err(Error::parse(
                            line_no,
                            format!("expected {} values, found {found}", el.props.len()),
                        ));
                    }
                    if ei == vertex {
                        sink.push(&layout, &row, line_no)?;
                    }
                }
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            let mut pos = 0;
            let line = header.lines + 1;
            let mut row = Vec::new();
            for (ei, el) in header.elements.iter().enumerate() {
                let stride = el.stride();
                let needed = stride
                    .checked_mul(el.count)
                    .ok_or_else(|| Error::parse(line, "element size overflows"))?;
                let available = body.len() - pos;
                if available < needed {
                    return Err(Error::parse(
                        line,
                        format!(
                            "element '{}' declares {} entries but the body holds {}",
                            el.name,
                            el.count,
                            available.checked_div(stride).unwrap_or(0)
                        ),
                    ));
                }
                if ei == vertex {
                    for chunk in body[pos..pos + needed].chunks_exact(stride.max(1)) {
                        row.clear();
                        let mut off = 0;
                        for p in &el.props {
                            row.push(p.ty.decode_le(&chunk[off..]));
                            off += p.ty.size();
                        }
                        sink.push(&layout, &row, line)?;
                    }
                }
                pos += needed;
            }
        }
    }

    PointCloud::from_parts(
        sink.points,
        layout.rgb.map(|_| sink.colors),
        layout.label.map(|_| sink.labels),
        header.source_tag,
        header.frame_id,
    )
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud<f64>> {
    parse_ply(&read_bytes(path.as_ref())?)
}

/// Serialize with double-precision coordinates. Binary output reproduces
/// coordinates bit-exactly; ASCII keeps nine significant digits.
pub fn write_ply_to(
    cloud: &PointCloud<f64>,
    w: &mut dyn Write,
    encoding: PlyEncoding,
) -> std::io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(
        w,
        "format {} 1.0",
        match encoding {
            PlyEncoding::Ascii => "ascii",
            PlyEncoding::BinaryLittleEndian => "binary_little_endian",
        }
    )?;
    writeln!(w, "comment generated by skyground")?;
    if !cloud.source_tag().is_empty() {
        writeln!(w, "comment source_tag {}", cloud.source_tag())?;
    }
    writeln!(w, "comment frame_id {}", cloud.frame_id())?;
    writeln!(w, "element vertex {}", cloud.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    if cloud.colors().is_some() {
        for ch in ["red", "green", "blue"] {
            writeln!(w, "property uchar {ch}")?;
        }
    }
    if cloud.labels().is_some() {
        writeln!(w, "property uchar label")?;
    }
    writeln!(w, "end_header")?;

    for (i, p) in cloud.points().iter().enumerate() {
        let color = cloud.colors().map(|c| c[i]);
        let label = cloud.labels().map(|l| l[i].code());
        match encoding {
            PlyEncoding::Ascii => {
                write!(w, "{} {} {}", format_sig9(p.x), format_sig9(p.y), format_sig9(p.z))?;
                if let Some(c) = color {
                    write!(w, " {} {} {}", c.r, c.g, c.b)?;
                }
                if let Some(l) = label {
                    write!(w, " {l}")?;
                }
                writeln!(w)?;
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    w.write_all(&v.to_le_bytes())?;
                }
                if let Some(c) = color {
                    w.write_all(&[c.r, c.g, c.b])?;
                }
                if let Some(l) = label {
                    w.write_all(&[l])?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_ply(cloud: &PointCloud<f64>, path: impl AsRef<Path>, encoding: PlyEncoding) -> Result<()> {
    write_atomic(path, |w| write_ply_to(cloud, w, encoding))
}
