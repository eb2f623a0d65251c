//! Text formats for measures.
//!
//! Tree measures use a line-oriented document:
//!
//! ```text
//! # mfdim tree v1
//! arity 2
//! depth 1
//! mode embedded
//! node - 1 1 0 1
//! node 0 0.3333333333333333 0.5 0 0.3333333333333333
//! node 1 0.3333333333333333 0.5 0.6666666666666667 0.3333333333333333
//! ```
//!
//! Each `node` line is `word ratio mass [left length]`, with `-` for the root
//! word and dot-separated symbols when the arity exceeds 10. Point clouds are
//! CSV with a `x1,...,xd,weight` header; leading `#` lines are comments.
//! Floats are written in shortest round-trip form, so save/load/save is
//! byte-identical.

use std::io::{BufRead, Write};

use super::{CylinderMeasure, MetricMode, Node, PointCloudMeasure};
use crate::{Error, Result};

pub const TREE_FORMAT_HEADER: &str = "# mfdim tree v1";

fn format_word(word: &[u8], arity: usize) -> String {
    if word.is_empty() {
        "-".to_string()
    } else if arity <= 10 {
        word.iter().map(|d| char::from(b'0' + d)).collect()
    } else {
        word.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

fn parse_word(text: &str, arity: usize, line: usize) -> Result<Vec<u8>> {
    if text == "-" {
        return Ok(Vec::new());
    }
    let symbols: Vec<&str> = if arity <= 10 {
        text.split("").filter(|s| !s.is_empty()).collect()
    } else {
        text.split('.').collect()
    };
    symbols
        .iter()
        .map(|s| match s.parse::<usize>() {
            Ok(d) if d < arity => Ok(d as u8),
            _ => Err(Error::parse(
                line,
                format!("bad symbol {s:?} in word {text:?}"),
            )),
        })
        .collect()
}

/// Writes a tree measure, one line per cylinder.
pub fn write_tree<W: Write>(measure: &CylinderMeasure, mut out: W) -> Result<()> {
    let arity = measure.arity();
    writeln!(out, "{TREE_FORMAT_HEADER}")?;
    writeln!(out, "arity {arity}")?;
    writeln!(out, "depth {}", measure.depth())?;
    writeln!(out, "mode {}", measure.mode().as_str())?;
    for level in 0..=measure.depth() {
        for index in 0..measure.level_width(level) {
            let node = measure.node(level, index);
            let word = format_word(&measure.word_of(level, index), arity);
            match node.interval {
                Some((left, len)) => {
                    writeln!(out, "node {word} {} {} {left} {len}", node.ratio, node.mass)?
                }
                None => writeln!(out, "node {word} {} {}", node.ratio, node.mass)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_f64(text: &str, line: usize, what: &str) -> Result<f64> {
    text.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("{what} {text:?} is not a number")))
}

/// Reads a tree measure written by [`write_tree`] and re-validates it.
pub fn read_tree<R: BufRead>(input: R) -> Result<CylinderMeasure> {
    let mut arity = None;
    let mut depth = None;
    let mut mode = None;
    let mut slots: Vec<Option<Node>> = Vec::new();
    let mut offsets: Vec<usize> = Vec::new();
    let mut last_line = 0;

    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "arity" | "depth" if fields.len() == 2 => {
                let v = fields[1].parse::<usize>().map_err(|_| {
                    Error::parse(lineno, format!("bad {} {:?}", fields[0], fields[1]))
                })?;
                if fields[0] == "arity" {
                    arity = Some(v);
                } else {
                    depth = Some(v);
                }
            }
            "mode" if fields.len() == 2 => {
                mode = Some(
                    fields[1]
                        .parse::<MetricMode>()
                        .map_err(|e| Error::parse(lineno, e.to_string()))?,
                );
            }
            "node" => {
                let (Some(b), Some(d), Some(m)) = (arity, depth, mode) else {
                    return Err(Error::parse(lineno, "node before arity/depth/mode header"));
                };
                if !(2..=256).contains(&b) || d == 0 || d > 40 {
                    return Err(Error::parse(
                        lineno,
                        format!("unsupported arity {b} / depth {d}"),
                    ));
                }
                if slots.is_empty() {
                    let mut acc = 0usize;
                    let mut width = 1usize;
                    for _ in 0..=d + 1 {
                        offsets.push(acc);
                        acc = acc
                            .checked_add(width)
                            .ok_or_else(|| Error::parse(lineno, "tree too large to materialize"))?;
                        width = width.saturating_mul(b);
                    }
                    if offsets[d + 1] > (1 << 28) {
                        return Err(Error::parse(lineno, "tree too large to materialize"));
                    }
                    slots = vec![None; offsets[d + 1]];
                }
                let expected = if m == MetricMode::Embedded { 6 } else { 4 };
                if fields.len() != expected {
                    return Err(Error::parse(
                        lineno,
                        format!(
                            "expected {} fields after 'node', got {}",
                            expected - 1,
                            fields.len() - 1
                        ),
                    ));
                }
                let word = parse_word(fields[1], b, lineno)?;
                if word.len() > d {
                    return Err(Error::parse(lineno, "word longer than depth"));
                }
                let index = word.iter().fold(0usize, |acc, s| acc * b + *s as usize);
                let ratio = parse_f64(fields[2], lineno, "ratio")?;
                let mass = parse_f64(fields[3], lineno, "mass")?;
                let interval = if m == MetricMode::Embedded {
                    Some((
                        parse_f64(fields[4], lineno, "left")?,
                        parse_f64(fields[5], lineno, "length")?,
                    ))
                } else {
                    None
                };
                let slot = &mut slots[offsets[word.len()] + index];
                if slot.is_some() {
                    return Err(Error::parse(
                        lineno,
                        format!("duplicate node {:?}", fields[1]),
                    ));
                }
                *slot = Some(Node {
                    ratio,
                    mass,
                    interval,
                });
            }
            other => {
                return Err(Error::parse(
                    lineno,
                    format!("unexpected line starting with {other:?}"),
                ))
            }
        }
    }
    let (Some(b), Some(d), Some(m)) = (arity, depth, mode) else {
        return Err(Error::parse(last_line, "missing arity/depth/mode header"));
    };
    if slots.is_empty() {
        return Err(Error::parse(last_line, "no nodes"));
    }
    let missing = slots.iter().filter(|s| s.is_none()).count();
    if missing > 0 {
        return Err(Error::parse(last_line, format!("{missing} nodes missing")));
    }
    CylinderMeasure::from_nodes(b, d, m, slots.into_iter().map(Option::unwrap).collect())
}

/// Writes a point cloud as `x1,...,xd,weight` CSV.
pub fn write_cloud<W: Write>(cloud: &PointCloudMeasure, mut out: W) -> Result<()> {
    let header: Vec<String> = (1..=cloud.dim()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{},weight", header.join(","))?;
    for (p, w) in cloud.points().zip(cloud.weights()) {
        for c in p {
            write!(out, "{c},")?;
        }
        writeln!(out, "{w}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a point cloud CSV. Weights are taken as written and must sum to 1.
pub fn read_cloud<R: BufRead>(input: R) -> Result<PointCloudMeasure> {
    let mut dim = None;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut last_line = 0;
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match dim {
            None => {
                let d = fields.len().saturating_sub(1);
                let ok = d >= 1
                    && fields.last() == Some(&"weight")
                    && fields[..d]
                        .iter()
                        .enumerate()
                        .all(|(j, f)| *f == format!("x{}", j + 1));
                if !ok {
                    return Err(Error::parse(lineno, "expected header x1,...,xd,weight"));
                }
                dim = Some(d);
            }
            Some(d) => {
                if fields.len() != d + 1 {
                    return Err(Error::parse(
                        lineno,
                        format!("expected {} fields, got {}", d + 1, fields.len()),
                    ));
                }
                for f in &fields[..d] {
                    coords.push(parse_f64(f, lineno, "coordinate")?);
                }
                weights.push(parse_f64(fields[d], lineno, "weight")?);
            }
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(last_line, "empty point cloud file"))?;
    PointCloudMeasure::from_flat(dim, coords, weights).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::parse(last_line, msg),
        other => other,
    })
}
