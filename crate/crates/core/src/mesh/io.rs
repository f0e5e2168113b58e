//! OFF input and OBJ / legacy VTK output. Numbers are written with 17
//! significant digits so that `f64` coordinates survive a round trip.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::linalg::Vec3;
use crate::mesh::reference::ReferenceElement;
use crate::mesh::surface::SurfaceMesh;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    Vtk,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            "vtk" => Some(Self::Vtk),
            _ => None,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> FlowError {
    FlowError::Parse { line, message: message.into() }
}

fn number<S: Scalar>(token: &str, line: usize) -> Result<S> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(S::lit)
        .ok_or_else(|| parse_err(line, format!("invalid number {token:?}")))
}

fn index(token: &str, line: usize) -> Result<usize> {
    token.parse::<usize>().map_err(|_| parse_err(line, format!("invalid index {token:?}")))
}

/// Parses an OFF triangle mesh into a linear [`SurfaceMesh`].
pub fn parse_off<S: Scalar>(text: &str) -> Result<SurfaceMesh<S>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = header.strip_prefix("OFF").ok_or_else(|| parse_err(header_line, "missing OFF header"))?.trim();
    let (count_line, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| parse_err(header_line + 1, "missing element counts"))?
    } else {
        (header_line, rest)
    };
    let counts: Vec<&str> = counts.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(parse_err(count_line, "expected vertex and face counts"));
    }
    let n_vertices = index(counts[0], count_line)?;
    let n_faces = index(counts[1], count_line)?;
    let mut nodes = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(count_line, "unexpected end of vertex list"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        nodes.push(Vec3([number(t[0], ln)?, number(t[1], ln)?, number(t[2], ln)?]));
    }
    let mut elements = Vec::with_capacity(3 * n_faces);
    for _ in 0..n_faces {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(count_line, "unexpected end of face list"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.first() != Some(&"3") || t.len() < 4 {
            return Err(parse_err(ln, "only triangular faces are supported"));
        }
        for tok in &t[1..4] {
            let i = index(tok, ln)?;
            if i >= n_vertices {
                return Err(parse_err(ln, format!("vertex index {i} out of range")));
            }
            elements.push(i);
        }
    }
    let reference = Arc::new(ReferenceElement::with_default_quadrature(1)?);
    SurfaceMesh::new(nodes, elements, reference)
}

/// Parses the `v` / `f` records of an OBJ file into a linear mesh.
pub fn parse_obj<S: Scalar>(text: &str) -> Result<SurfaceMesh<S>> {
    let mut nodes = Vec::new();
    let mut faces: Vec<(usize, [&str; 3])> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.first() {
            Some(&"v") if t.len() >= 4 => nodes.push(Vec3([number(t[1], ln)?, number(t[2], ln)?, number(t[3], ln)?])),
            Some(&"v") => return Err(parse_err(ln, "vertex needs three coordinates")),
            Some(&"f") if t.len() == 4 => faces.push((ln, [t[1], t[2], t[3]])),
            Some(&"f") => return Err(parse_err(ln, "only triangular faces are supported")),
            _ => {}
        }
    }
    let mut elements = Vec::with_capacity(3 * faces.len());
    for (ln, f) in faces {
        for tok in f {
            let i = index(tok.split('/').next().unwrap_or(""), ln)?;
            if i == 0 || i > nodes.len() {
                return Err(parse_err(ln, format!("vertex index {i} out of range")));
            }
            elements.push(i - 1);
        }
    }
    let reference = Arc::new(ReferenceElement::with_default_quadrature(1)?);
    SurfaceMesh::new(nodes, elements, reference)
}

pub fn load_mesh<S: Scalar>(path: &Path) -> Result<SurfaceMesh<S>> {
    let text = fs::read_to_string(path).map_err(|e| FlowError::io(path, e))?;
    match MeshFormat::from_path(path) {
        Some(MeshFormat::Obj) => parse_obj(&text),
        _ => parse_off(&text),
    }
}

/// Straight triangles for output; quadratic elements become four each.
pub fn display_triangles<S: Scalar>(mesh: &SurfaceMesh<S>) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for e in 0..mesh.element_count() {
        let el = mesh.element(e);
        if el.len() == 3 {
            out.push([el[0], el[1], el[2]]);
        } else {
            let (m01, m12, m20) = (el[3], el[4], el[5]);
            out.extend([[el[0], m01, m20], [m01, el[1], m12], [m20, m12, el[2]], [m01, m12, m20]]);
        }
    }
    out
}

fn fmt17<S: Scalar>(x: S) -> String {
    format!("{:.16e}", x.as_f64())
}

pub fn format_obj(points: &[Vec3<impl Scalar>], triangles: &[[usize; 3]]) -> String {
    let mut s = String::new();
    for p in points {
        let _ = writeln!(s, "v {} {} {}", fmt17(p[0]), fmt17(p[1]), fmt17(p[2]));
    }
    for t in triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn format_off<S: Scalar>(mesh: &SurfaceMesh<S>) -> String {
    let tris = display_triangles(mesh);
    let mut s = format!("OFF\n{} {} 0\n", mesh.node_count(), tris.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} {}", fmt17(p[0]), fmt17(p[1]), fmt17(p[2]));
    }
    for t in &tris {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Nodal data attached to a VTK export.
pub enum PointData<'a, S> {
    Scalars(&'a str, &'a [S]),
    Vectors(&'a str, &'a [Vec3<S>]),
}

pub fn format_vtk<S: Scalar>(mesh: &SurfaceMesh<S>, title: &str, data: &[PointData<'_, S>]) -> String {
    let tris = display_triangles(mesh);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET POLYDATA", title.replace('\n', " "));
    let _ = writeln!(s, "POINTS {} double", mesh.node_count());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} {}", fmt17(p[0]), fmt17(p[1]), fmt17(p[2]));
    }
    let _ = writeln!(s, "POLYGONS {} {}", tris.len(), 4 * tris.len());
    for t in &tris {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    if !data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.node_count());
    }
    for d in data {
        match d {
            PointData::Scalars(name, values) => {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in values.iter() {
                    let _ = writeln!(s, "{}", fmt17(*v));
                }
            }
            PointData::Vectors(name, values) => {
                let _ = writeln!(s, "VECTORS {name} double");
                for v in values.iter() {
                    let _ = writeln!(s, "{} {} {}", fmt17(v[0]), fmt17(v[1]), fmt17(v[2]));
                }
            }
        }
    }
    s
}

pub fn export_mesh<S: Scalar>(mesh: &SurfaceMesh<S>, path: &Path, format: MeshFormat) -> Result<()> {
    let text = match format {
        MeshFormat::Obj => format_obj(&mesh.nodes, &display_triangles(mesh)),
        MeshFormat::Off => format_off(mesh),
        MeshFormat::Vtk => format_vtk(mesh, "wulff-flow surface", &[]),
    };
    fs::write(path, text).map_err(|e| FlowError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "OFF\n# regular tetrahedron\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn tetrahedron_loads() {
        let m = parse_off::<f64>(TETRA).unwrap();
        assert_eq!(m.node_count(), 4);
        assert_eq!(m.element_count(), 4);
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "OFF\n4 4 6\n1 1 1\n1 -1 x\n";
        assert!(matches!(parse_off::<f64>(bad), Err(FlowError::Parse { line: 4, .. })));
        let open = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        assert!(matches!(parse_off::<f64>(open), Err(FlowError::NotClosed(..))));
    }

    #[test]
    fn obj_round_trip_is_bit_exact() {
        let m = parse_off::<f64>(TETRA).unwrap();
        let scaled = m.with_nodes(m.nodes.iter().map(|&p| p * (1.0 / 3.0)).collect()).unwrap();
        let text = format_obj(&scaled.nodes, &display_triangles(&scaled));
        let back = parse_obj::<f64>(&text).unwrap();
        assert_eq!(back.nodes, scaled.nodes);
        assert_eq!(back.elements_flat(), scaled.elements_flat());
    }
}
