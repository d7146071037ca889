//! Shape spec text format.
//!
//! One `key = value` pair per line, `#` starts a comment. A key with an
//! empty value (`left =`) opens a nested shape made of the following lines
//! indented deeper than the key.
//!
//! ```text
//! kind = difference
//! bounds = 0 0 0 1 1 1
//! left =
//!   kind = box
//!   center = 0.5 0.5 0.5
//!   half = 0.3 0.3 0.3
//! right =
//!   kind = sphere
//!   center = 0.5 0.5 0.5
//!   radius = 0.38
//! ```
//!
//! Kinds and their keys: `sphere` (center, radius), `box` (center, half),
//! `rotated-box` (center, half, axis, angle in degrees), `union`,
//! `intersection` and `difference` (left, right), `mesh` (path to an OBJ
//! file, relative to the spec file). `bounds` is only read at the top
//! level and defaults to the unit cube.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Bounds, MeshSdf, Shape, ShapeSpec};
use crate::error::{Error, Result};
use crate::mesh::read_obj;
use crate::scalar::Vec3;

#[derive(Debug)]
struct Line<'a> {
    offset: usize,
    indent: usize,
    key: &'a str,
    value: &'a str,
}

fn lex(src: &str) -> Result<Vec<Line<'_>>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for raw in src.split_inclusive('\n') {
        let start = offset;
        offset += raw.len();
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::parse(start, "expected `key = value`"))?;
        out.push(Line {
            offset: start,
            indent,
            key: key.trim(),
            value: value.trim(),
        });
    }
    Ok(out)
}

struct Block<'a, 'l> {
    lines: &'l [Line<'a>],
    offset: usize,
}

impl<'a> Block<'a, '_> {
    fn find(&self, key: &str) -> Option<(usize, &Line<'a>)> {
        let indent = self.lines.first()?.indent;
        self.lines
            .iter()
            .enumerate()
            .find(|(_, l)| l.indent == indent && l.key == key)
    }

    fn scalar(&self, key: &str) -> Result<f64> {
        let (_, l) = self.find(key).ok_or_else(|| Error::parse(self.offset, format!("missing `{key}`")))?;
        l.value
            .parse()
            .map_err(|_| Error::parse(l.offset, format!("`{key}` needs a number, got `{}`", l.value)))
    }

    fn numbers(&self, key: &str, n: usize) -> Result<Option<Vec<f64>>> {
        let Some((_, l)) = self.find(key) else {
            return Ok(None);
        };
        let nums: std::result::Result<Vec<f64>, _> =
            l.value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        match nums {
            Ok(v) if v.len() == n => Ok(Some(v)),
            _ => Err(Error::parse(l.offset, format!("`{key}` needs {n} numbers"))),
        }
    }

    fn vector(&self, key: &str) -> Result<Vec3<f64>> {
        let v = self
            .numbers(key, 3)?
            .ok_or_else(|| Error::parse(self.offset, format!("missing `{key}`")))?;
        Ok(Vec3::new(v[0], v[1], v[2]))
    }

    fn child(&self, key: &str) -> Result<Block<'a, '_>> {
        let (i, l) = self.find(key).ok_or_else(|| Error::parse(self.offset, format!("missing `{key}`")))?;
        if !l.value.is_empty() {
            return Err(Error::parse(l.offset, format!("`{key}` opens a nested shape and takes no value")));
        }
        let rest = &self.lines[i + 1..];
        let len = rest.iter().take_while(|c| c.indent > l.indent).count();
        if len == 0 {
            return Err(Error::parse(l.offset, format!("`{key}` has no indented shape")));
        }
        let lines = &rest[..len];
        if lines.iter().any(|c| c.indent < lines[0].indent) {
            return Err(Error::parse(l.offset, format!("inconsistent indentation under `{key}`")));
        }
        Ok(Block { lines, offset: l.offset })
    }
}

fn positive(v: f64, what: &str, offset: usize) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(offset, format!("{what} must be positive")))
    }
}

fn shape(block: &Block<'_, '_>, base: Option<&Path>) -> Result<Shape> {
    let (_, kind) = block
        .find("kind")
        .ok_or_else(|| Error::parse(block.offset, "missing `kind`"))?;
    let at = kind.offset;
    let half = |b: &Block<'_, '_>| -> Result<Vec3<f64>> {
        let h = b.vector("half")?;
        if h.iter().all(|&c| c > 0.0 && c.is_finite()) {
            Ok(h)
        } else {
            Err(Error::parse(at, "half extents must be positive"))
        }
    };
    let pair = |b: &Block<'_, '_>| -> Result<(Box<Shape>, Box<Shape>)> {
        Ok((Box::new(shape(&b.child("left")?, base)?), Box::new(shape(&b.child("right")?, base)?)))
    };
    Ok(match kind.value {
        "sphere" => Shape::sphere(block.vector("center")?, positive(block.scalar("radius")?, "radius", at)?),
        "box" => Shape::cuboid(block.vector("center")?, half(block)?),
        "rotated-box" | "rotated_box" => {
            let axis = block.vector("axis")?;
            if !(axis.norm() > 0.0) {
                return Err(Error::parse(at, "rotation axis must be non-zero"));
            }
            Shape::rotated_cuboid(block.vector("center")?, half(block)?, axis, block.scalar("angle")?)
        }
        "union" => {
            let (a, b) = pair(block)?;
            Shape::Union(a, b)
        }
        "intersection" => {
            let (a, b) = pair(block)?;
            Shape::Intersection(a, b)
        }
        "difference" => {
            let (a, b) = pair(block)?;
            Shape::Difference(a, b)
        }
        "mesh" => {
            let (_, l) = block.find("path").ok_or_else(|| Error::parse(at, "missing `path`"))?;
            let mut path = PathBuf::from(l.value);
            if path.is_relative() {
                if let Some(b) = base {
                    path = b.join(path);
                }
            }
            let poly = read_obj::<f64>(&path)?;
            Shape::Mesh(Arc::new(MeshSdf::new(poly.to_tri_mesh())?))
        }
        other => return Err(Error::parse(at, format!("unknown shape kind `{other}`"))),
    })
}

/// Parses a shape spec; relative mesh paths resolve against `base`.
pub fn parse_shape_spec(src: &str, base: Option<&Path>) -> Result<ShapeSpec> {
    let lines = lex(src)?;
    if lines.is_empty() {
        return Err(Error::parse(0, "empty shape spec"));
    }
    if lines.iter().any(|l| l.indent < lines[0].indent) {
        return Err(Error::parse(lines[0].offset, "top-level lines must not be indented less than the first"));
    }
    let top = Block { lines: &lines, offset: 0 };
    let bounds = match top.numbers("bounds", 6)? {
        Some(b) => {
            let bounds = Bounds::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]));
            if !(0..3).all(|k| bounds.max[k] > bounds.min[k]) {
                return Err(Error::Shape("bounds max must exceed min on every axis".into()));
            }
            bounds
        }
        None => Bounds::unit(),
    };
    Ok(ShapeSpec {
        shape: shape(&top, base)?,
        bounds,
    })
}

pub fn read_shape_spec(path: impl AsRef<Path>) -> Result<ShapeSpec> {
    let path = path.as_ref();
    let src = fs::read_to_string(path)?;
    parse_shape_spec(&src, path.parent())
}
