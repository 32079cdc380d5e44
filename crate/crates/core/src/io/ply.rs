//! ASCII PLY point clouds with a per-vertex `sigma`.
//!
//! The writer emits exactly:
//!
//! ```text
//! ply
//! format ascii 1.0
//! comment <text>            (zero or more)
//! element vertex <n>
//! property float x
//! property float y
//! property float z
//! property float sigma
//! end_header
//! <x> <y> <z> <sigma>       (n lines)
//! ```
//!
//! Values are stored at `f32` precision in their shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::UncertainPointCloud;

const PROPERTIES: [&str; 4] = ["x", "y", "z", "sigma"];

/// A cloud plus the comment lines of its header.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyFile {
    pub cloud: UncertainPointCloud,
    pub comments: Vec<String>,
}

pub fn format_ply(cloud: &UncertainPointCloud, comments: &[String]) -> Result<String> {
    let mut s = String::from("ply\nformat ascii 1.0\n");
    for c in comments {
        if c.contains('\n') || c.contains('\r') {
            return Err(Error::Parameter(format!("PLY comment {c:?} spans lines")));
        }
        writeln!(s, "comment {c}").expect("write to String");
    }
    writeln!(s, "element vertex {}", cloud.len()).expect("write to String");
    for p in PROPERTIES {
        writeln!(s, "property float {p}").expect("write to String");
    }
    s.push_str("end_header\n");
    for (p, sigma) in cloud.points().iter().zip(cloud.sigma()) {
        writeln!(
            s,
            "{} {} {} {}",
            p.x as f32, p.y as f32, p.z as f32, *sigma as f32
        )
        .expect("write to String");
    }
    Ok(s)
}

pub fn parse_ply(text: &str) -> Result<PlyFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| {
            Error::parse(
                text.lines().count() + 1,
                format!("unexpected end of file, expected {what}"),
            )
        })
    };

    let (n, l) = next("\"ply\"")?;
    if l != "ply" {
        return Err(Error::parse(n, format!("expected \"ply\", found {l:?}")));
    }
    let (n, l) = next("format line")?;
    if l != "format ascii 1.0" {
        return Err(Error::parse(
            n,
            format!("unsupported format line {l:?}, only \"format ascii 1.0\" is read"),
        ));
    }
    let mut comments = Vec::new();
    let (mut n, mut l) = next("element line")?;
    while let Some(c) = l.strip_prefix("comment") {
        comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
        (n, l) = next("element line")?;
    }
    let count: usize = match l.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["element", "vertex", k] => k
            .parse()
            .map_err(|_| Error::parse(n, format!("bad vertex count {k:?}")))?,
        _ => {
            return Err(Error::parse(
                n,
                format!("expected \"element vertex <n>\", found {l:?}"),
            ))
        }
    };
    for want in PROPERTIES {
        let (n, l) = next("property line")?;
        match l.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["property", "float" | "float32", name] if *name == want => {}
            _ => {
                return Err(Error::parse(
                    n,
                    format!("expected \"property float {want}\", found {l:?}"),
                ))
            }
        }
    }
    let (n, l) = next("end_header")?;
    if l != "end_header" {
        return Err(Error::parse(
            n,
            format!("expected \"end_header\", found {l:?}"),
        ));
    }

    let mut points = Vec::with_capacity(count);
    let mut sigma = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = next("vertex line")?;
        let mut v = [0.0f64; 4];
        let mut fields = l.split_whitespace();
        for (k, slot) in v.iter_mut().enumerate() {
            let f = fields
                .next()
                .ok_or_else(|| Error::parse(n, format!("vertex has {k} values, expected 4")))?;
            let x: f32 = f
                .parse()
                .map_err(|_| Error::parse(n, format!("bad {} value {f:?}", PROPERTIES[k])))?;
            *slot = f64::from(x);
        }
        if fields.next().is_some() {
            return Err(Error::parse(n, "vertex has more than 4 values"));
        }
        if !(v[3] >= 0.0) {
            return Err(Error::parse(n, format!("sigma {} must be >= 0", v[3])));
        }
        points.push(Vector3::new(v[0], v[1], v[2]));
        sigma.push(v[3]);
    }
    for (n, l) in lines {
        if !l.trim().is_empty() {
            return Err(Error::parse(n, "data after the declared vertices"));
        }
    }
    Ok(PlyFile {
        cloud: UncertainPointCloud::new(points, sigma)?,
        comments,
    })
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PlyFile> {
    parse_ply(&std::fs::read_to_string(path)?)
}

pub fn write_ply(
    path: impl AsRef<Path>,
    cloud: &UncertainPointCloud,
    comments: &[String],
) -> Result<()> {
    std::fs::write(path, format_ply(cloud, comments)?)?;
    Ok(())
}
