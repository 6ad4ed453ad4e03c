//! Reader and writer for tetgen `.node` / `.ele` files.
//!
//! Node files start with `n 3 nattr nmarker`, followed by `n` lines of
//! `index x y z [attributes...] [marker]`. Element files start with
//! `m 4 nattr`, followed by `m` lines of `index i1 i2 i3 i4 [attributes...]`.
//! Everything after a `#` is a comment. Numbering starts at 0 or 1, taken
//! from the first node line; element files must use the same base.
//!
//! The writer emits the canonical form `n 3 0 0` / `m 4 0` with 1-based
//! indices and shortest round-trip float formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::{Mapping, Point, TetMesh};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct NodeFile {
    /// Index of the first node, 0 or 1.
    pub first_index: usize,
    pub points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EleFile {
    pub first_index: usize,
    /// Node indices exactly as written in the file.
    pub tets: Vec<[usize; 4]>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("invalid coordinate '{tok}'"))),
    }
}

pub fn parse_node(text: &str) -> Result<NodeFile> {
    let mut lines = data_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    if header.len() < 2 || header.len() > 4 {
        return Err(parse_err(
            hline,
            "header must be 'count dim [attributes] [markers]'",
        ));
    }
    let count = parse_usize(header[0], hline, "node count")?;
    let dim = parse_usize(header[1], hline, "dimension")?;
    if dim != 3 {
        return Err(parse_err(hline, format!("dimension must be 3, found {dim}")));
    }
    let nattr = header
        .get(2)
        .map(|t| parse_usize(t, hline, "attribute count"))
        .transpose()?
        .unwrap_or(0);
    let nmarker = header
        .get(3)
        .map(|t| parse_usize(t, hline, "marker flag"))
        .transpose()?
        .unwrap_or(0);
    if nmarker > 1 {
        return Err(parse_err(hline, "marker flag must be 0 or 1"));
    }
    let width = nattr
        .checked_add(4 + nmarker)
        .ok_or_else(|| parse_err(hline, "attribute count too large"))?;

    let mut first_index = 0;
    let mut points = Vec::new();
    let mut last_line = hline;
    for (line, toks) in lines {
        last_line = line;
        if points.len() == count {
            return Err(parse_err(line, format!("more than the {count} nodes declared")));
        }
        if toks.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}", toks.len()),
            ));
        }
        let index = parse_usize(toks[0], line, "node index")?;
        if points.is_empty() {
            if index > 1 {
                return Err(parse_err(line, "node numbering must start at 0 or 1"));
            }
            first_index = index;
        } else if index != first_index + points.len() {
            return Err(parse_err(
                line,
                format!(
                    "expected node index {}, found {index}",
                    first_index + points.len()
                ),
            ));
        }
        let x = parse_coord(toks[1], line)?;
        let y = parse_coord(toks[2], line)?;
        let z = parse_coord(toks[3], line)?;
        for t in &toks[4..] {
            parse_coord(t, line)?;
        }
        points.push(Point::new(x, y, z));
    }
    if points.len() != count {
        return Err(parse_err(
            last_line,
            format!("header declares {count} nodes, found {}", points.len()),
        ));
    }
    Ok(NodeFile { first_index, points })
}

pub fn parse_ele(text: &str) -> Result<EleFile> {
    let mut lines = data_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    if header.len() < 2 || header.len() > 3 {
        return Err(parse_err(
            hline,
            "header must be 'count nodes_per_tet [attributes]'",
        ));
    }
    let count = parse_usize(header[0], hline, "tet count")?;
    let per = parse_usize(header[1], hline, "nodes per tet")?;
    if per != 4 {
        return Err(parse_err(
            hline,
            format!("only linear tets (4 nodes) are supported, found {per}"),
        ));
    }
    let nattr = header
        .get(2)
        .map(|t| parse_usize(t, hline, "attribute count"))
        .transpose()?
        .unwrap_or(0);
    let width = nattr
        .checked_add(5)
        .ok_or_else(|| parse_err(hline, "attribute count too large"))?;

    let mut first_index = 0;
    let mut tets = Vec::new();
    let mut last_line = hline;
    for (line, toks) in lines {
        last_line = line;
        if tets.len() == count {
            return Err(parse_err(line, format!("more than the {count} tets declared")));
        }
        if toks.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}", toks.len()),
            ));
        }
        let index = parse_usize(toks[0], line, "tet index")?;
        if tets.is_empty() {
            if index > 1 {
                return Err(parse_err(line, "tet numbering must start at 0 or 1"));
            }
            first_index = index;
        } else if index != first_index + tets.len() {
            return Err(parse_err(
                line,
                format!("expected tet index {}, found {index}", first_index + tets.len()),
            ));
        }
        let mut tet = [0usize; 4];
        for k in 0..4 {
            tet[k] = parse_usize(toks[k + 1], line, "node index")?;
        }
        for t in &toks[5..] {
            parse_coord(t, line)?;
        }
        tets.push(tet);
    }
    if tets.len() != count {
        return Err(parse_err(
            last_line,
            format!("header declares {count} tets, found {}", tets.len()),
        ));
    }
    Ok(EleFile { first_index, tets })
}

/// Converts file indices to 0-based vertex indices and builds the mesh.
pub fn mesh_from_files(node: NodeFile, ele: EleFile) -> Result<TetMesh> {
    let base = node.first_index;
    let n = node.points.len();
    if !ele.tets.is_empty() && ele.first_index != base {
        return Err(parse_err(
            1,
            format!(
                "element numbering starts at {} but node numbering starts at {base}",
                ele.first_index
            ),
        ));
    }
    let mut tets = Vec::with_capacity(ele.tets.len());
    for (t, raw) in ele.tets.iter().enumerate() {
        let mut tet = [0usize; 4];
        for k in 0..4 {
            tet[k] = raw[k]
                .checked_sub(base)
                .filter(|&i| i < n)
                .ok_or(Error::IndexOutOfRange {
                    tet: t,
                    index: raw[k],
                    count: n,
                })?;
        }
        tets.push(tet);
    }
    TetMesh::new(node.points, tets)
}

pub fn load_tetgen(node_path: impl AsRef<Path>, ele_path: impl AsRef<Path>) -> Result<TetMesh> {
    let node = parse_node(&fs::read_to_string(node_path)?)?;
    let ele = parse_ele(&fs::read_to_string(ele_path)?)?;
    mesh_from_files(node, ele)
}

/// Reads a `.node` file of images for `source`, matched by position.
pub fn load_mapping(source: Arc<TetMesh>, images_path: impl AsRef<Path>) -> Result<Mapping> {
    let images = parse_node(&fs::read_to_string(images_path)?)?;
    Mapping::new(source, images.points)
}

pub fn write_node(points: &[Point]) -> String {
    let mut s = String::with_capacity(32 * points.len() + 16);
    let _ = writeln!(s, "{} 3 0 0", points.len());
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p.x, p.y, p.z);
    }
    s
}

pub fn write_ele(tets: &[[usize; 4]]) -> String {
    let mut s = String::with_capacity(24 * tets.len() + 16);
    let _ = writeln!(s, "{} 4 0", tets.len());
    for (t, tet) in tets.iter().enumerate() {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            t + 1,
            tet[0] + 1,
            tet[1] + 1,
            tet[2] + 1,
            tet[3] + 1
        );
    }
    s
}

pub fn save_tetgen(mesh: &TetMesh, node_path: impl AsRef<Path>, ele_path: impl AsRef<Path>) -> Result<()> {
    fs::write(node_path, write_node(mesh.vertices()))?;
    fs::write(ele_path, write_ele(mesh.tets()))?;
    Ok(())
}

pub fn save_points(points: &[Point], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_node(points))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NODE: &str = "# reference tet\n4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1 # apex\n";
    const ELE: &str = "1 4 0\n1 1 2 3 4\n";

    #[test]
    fn reads_reference_tet() {
        let m = mesh_from_files(parse_node(NODE).unwrap(), parse_ele(ELE).unwrap()).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.tet(0), [0, 1, 2, 3]);
        assert_eq!(m.volume(0), 1.0 / 6.0);
    }

    #[test]
    fn repairs_swapped_tet() {
        let ele = "1 4 0\n1 1 3 2 4\n";
        let m = mesh_from_files(parse_node(NODE).unwrap(), parse_ele(ele).unwrap()).unwrap();
        assert_eq!(m.tet(0), [0, 1, 2, 3]);
        assert_eq!(m.volume(0), 1.0 / 6.0);
        assert_eq!(m.repaired_tets(), &[0]);
    }

    #[test]
    fn zero_based_files_and_extras() {
        let node = "4 3 1 1\n0 0 0 0 7.5 1\n1 1 0 0 7.5 1\n2 0 1 0 7.5 0\n3 0 0 1 7.5 1\n";
        let ele = "1 4 1\n0 0 1 2 3 2.0\n";
        let m = mesh_from_files(parse_node(node).unwrap(), parse_ele(ele).unwrap()).unwrap();
        assert_eq!(m.tet(0), [0, 1, 2, 3]);
    }

    #[test]
    fn index_past_end_is_out_of_range() {
        let ele = "1 4 0\n1 1 2 3 5\n";
        let err = mesh_from_files(parse_node(NODE).unwrap(), parse_ele(ele).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::IndexOutOfRange {
                index: 5,
                count: 4,
                ..
            }
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "4 3 0 0\n1 0 0 0\n2 1 x 0\n3 0 1 0\n4 0 0 1\n";
        assert!(matches!(parse_node(bad), Err(Error::Parse { line: 3, .. })));
        let short = "4 3 0 0\n1 0 0 0\n2 1 0 0\n";
        assert!(matches!(parse_node(short), Err(Error::Parse { line: 3, .. })));
        let long = "1 4 0\n1 1 2 3 4\n2 1 2 3 4\n";
        assert!(matches!(parse_ele(long), Err(Error::Parse { line: 3, .. })));
        let skipped = "4 3 0 0\n1 0 0 0\n3 1 0 0\n3 0 1 0\n4 0 0 1\n";
        assert!(matches!(parse_node(skipped), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_ele("1 10 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_node("1 3 0 0\n1 nan 0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_node(""), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn huge_declared_count_does_not_allocate() {
        assert!(parse_node("18446744073709551615 3 0 0\n").is_err());
        assert!(parse_ele("18446744073709551615 4 18446744073709551615\n").is_err());
    }

    fn arb_points() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec(
            (any::<f64>(), any::<f64>(), any::<f64>())
                .prop_filter("finite", |(a, b, c)| {
                    a.is_finite() && b.is_finite() && c.is_finite()
                })
                .prop_map(|(a, b, c)| Point::new(a, b, c)),
            1..40,
        )
    }

    proptest! {
        #[test]
        fn node_writer_round_trips_bits(points in arb_points()) {
            let text = write_node(&points);
            let back = parse_node(&text).unwrap();
            prop_assert_eq!(back.first_index, 1);
            for (a, b) in points.iter().zip(&back.points) {
                for k in 0..3 {
                    prop_assert_eq!(a[k].to_bits(), b[k].to_bits());
                }
            }
            prop_assert_eq!(write_node(&back.points), text);
        }
    }
}
