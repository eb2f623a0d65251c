use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_radius, BallMassOracle};
use crate::{Error, Result};

/// Normalization slack for cylinder masses and symbol probabilities.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// How cylinders are turned into a metric space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    /// Cylinders are nested closed sub-intervals of `[0, 1]`.
    Embedded,
    /// Coding space with `d(x, y) = b^-n`, `n` the common prefix length.
    Symbolic,
}

impl MetricMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricMode::Embedded => "embedded",
            MetricMode::Symbolic => "symbolic",
        }
    }
}

impl std::str::FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embedded" => Ok(MetricMode::Embedded),
            "symbolic" => Ok(MetricMode::Symbolic),
            other => Err(Error::arg(format!("unknown metric mode {other:?}"))),
        }
    }
}

/// One cylinder of the tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    /// Length of this cylinder relative to its parent (1 at the root).
    pub ratio: f64,
    /// Absolute mass of the cylinder.
    pub mass: f64,
    /// `(left, length)` of the interval in embedded mode.
    pub interval: Option<(f64, f64)>,
}

/// A point of a tree measure: its coding path, plus its coordinate in
/// embedded mode.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePoint {
    pub path: Vec<u8>,
    pub coord: Option<f64>,
}

impl TreePoint {
    pub fn word(path: Vec<u8>) -> Self {
        TreePoint { path, coord: None }
    }

    pub fn real(x: f64) -> Self {
        TreePoint {
            path: Vec::new(),
            coord: Some(x),
        }
    }
}

/// Per-node rule producing the children's values (ratios or mass fractions)
/// from the parent's word.
pub trait SplitRule {
    fn split(&self, word: &[u8]) -> Vec<f64>;
}

impl SplitRule for [f64; 2] {
    fn split(&self, _word: &[u8]) -> Vec<f64> {
        self.to_vec()
    }
}

impl SplitRule for Vec<f64> {
    fn split(&self, _word: &[u8]) -> Vec<f64> {
        self.clone()
    }
}

impl<F> SplitRule for F
where
    F: Fn(&[u8]) -> Vec<f64>,
{
    fn split(&self, word: &[u8]) -> Vec<f64> {
        self(word)
    }
}

/// Product (Bernoulli) measure on the coding space `{0..b-1}^depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliSpec {
    pub probabilities: Vec<f64>,
    pub depth: usize,
}

impl BernoulliSpec {
    pub fn new(probabilities: Vec<f64>, depth: usize) -> Result<Self> {
        let spec = BernoulliSpec {
            probabilities,
            depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(arity: usize, depth: usize) -> Result<Self> {
        Self::new(vec![1.0 / arity as f64; arity], depth)
    }

    pub fn arity(&self) -> usize {
        self.probabilities.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.probabilities;
        if p.len() < 2 || p.len() > 256 {
            return Err(Error::arg(format!(
                "alphabet size must be in 2..=256, got {}",
                p.len()
            )));
        }
        if let Some(bad) = p.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(Error::arg(format!(
                "symbol probabilities must lie in (0, 1], got {bad}"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::arg(format!(
                "symbol probabilities sum to {total}, not 1"
            )));
        }
        if self.depth == 0 {
            return Err(Error::arg("depth must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Storage {
    /// Every node, levels concatenated, each level in lexicographic order.
    Table(Vec<Node>),
    /// Cylinder masses are products of symbol probabilities.
    Product(Vec<f64>),
}

/// A Cantor-type measure coded by a finite `b`-ary tree.
///
/// Nodes are addressed by `(level, index)`, where `index` is the word read as
/// a base-`b` number.
#[derive(Clone, Debug)]
pub struct CylinderMeasure {
    arity: usize,
    depth: usize,
    mode: MetricMode,
    storage: Storage,
    offsets: Vec<usize>,
    resolution: f64,
}

fn level_offsets(arity: usize, depth: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(depth + 2);
    let mut acc = 0usize;
    let mut width = 1usize;
    for _ in 0..=depth + 1 {
        offsets.push(acc);
        acc += width;
        width = width.saturating_mul(arity);
    }
    offsets
}

fn word_of(arity: usize, level: usize, mut index: usize) -> Vec<u8> {
    let mut word = vec![0u8; level];
    for slot in word.iter_mut().rev() {
        *slot = (index % arity) as u8;
        index /= arity;
    }
    word
}

pub(crate) fn word_label(word: &[u8]) -> String {
    if word.is_empty() {
        return "(root)".to_string();
    }
    word.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(if word.iter().any(|d| *d > 9) { "." } else { "" })
}

impl CylinderMeasure {
    /// Builds a binary deranged Cantor measure on `[0, 1]`: each interval
    /// keeps a left and a right child of relative lengths given by `ratios`,
    /// with the middle open sub-interval removed, and passes its mass to the
    /// children in the proportions given by `masses`.
    pub fn deranged_cantor<R, M>(ratios: &R, masses: &M, depth: usize) -> Result<Self>
    where
        R: SplitRule + ?Sized,
        M: SplitRule + ?Sized,
    {
        if depth == 0 {
            return Err(Error::arg("depth must be at least 1"));
        }
        let arity = 2;
        let offsets = level_offsets(arity, depth);
        let mut nodes = Vec::with_capacity(offsets[depth + 1]);
        nodes.push(Node {
            ratio: 1.0,
            mass: 1.0,
            interval: Some((0.0, 1.0)),
        });
        for level in 0..depth {
            for index in 0..(offsets[level + 1] - offsets[level]) {
                let parent = nodes[offsets[level] + index];
                let word = word_of(arity, level, index);
                let c = ratios.split(&word);
                let f = masses.split(&word);
                if c.len() != 2 || f.len() != 2 {
                    return Err(Error::InvalidMeasure {
                        word: word_label(&word),
                        reason: "rules must produce exactly two children".into(),
                    });
                }
                for (s, ratio) in c.iter().enumerate() {
                    if !(*ratio > 0.0 && *ratio <= 0.5) {
                        let mut child = word.clone();
                        child.push(s as u8);
                        return Err(Error::InvalidMeasure {
                            word: word_label(&child),
                            reason: format!(
                                "ratio {ratio} outside (0, 1/2]; children would overlap"
                            ),
                        });
                    }
                }
                check_fractions(&word, &f)?;
                let (left, len) = parent.interval.expect("embedded node");
                nodes.push(Node {
                    ratio: c[0],
                    mass: parent.mass * f[0],
                    interval: Some((left, len * c[0])),
                });
                nodes.push(Node {
                    ratio: c[1],
                    mass: parent.mass * f[1],
                    interval: Some((left + len - len * c[1], len * c[1])),
                });
            }
        }
        Self::from_nodes(arity, depth, MetricMode::Embedded, nodes)
    }

    /// Symbolic tree measure whose children receive the parent's mass in the
    /// proportions produced by `masses`.
    pub fn symbolic<M>(arity: usize, depth: usize, masses: &M) -> Result<Self>
    where
        M: SplitRule + ?Sized,
    {
        if !(2..=256).contains(&arity) {
            return Err(Error::arg(format!("arity must be in 2..=256, got {arity}")));
        }
        if depth == 0 {
            return Err(Error::arg("depth must be at least 1"));
        }
        let offsets = level_offsets(arity, depth);
        let ratio = 1.0 / arity as f64;
        let mut nodes = Vec::with_capacity(offsets[depth + 1]);
        nodes.push(Node {
            ratio: 1.0,
            mass: 1.0,
            interval: None,
        });
        for level in 0..depth {
            for index in 0..(offsets[level + 1] - offsets[level]) {
                let parent_mass = nodes[offsets[level] + index].mass;
                let word = word_of(arity, level, index);
                let f = masses.split(&word);
                if f.len() != arity {
                    return Err(Error::InvalidMeasure {
                        word: word_label(&word),
                        reason: format!(
                            "mass rule produced {} fractions for arity {arity}",
                            f.len()
                        ),
                    });
                }
                check_fractions(&word, &f)?;
                nodes.extend(f.iter().map(|fi| Node {
                    ratio,
                    mass: parent_mass * fi,
                    interval: None,
                }));
            }
        }
        Self::from_nodes(arity, depth, MetricMode::Symbolic, nodes)
    }

    /// Bernoulli product measure in symbolic mode. Nodes are not stored;
    /// cylinder masses are recomputed as products on demand.
    pub fn bernoulli(spec: &BernoulliSpec) -> Result<Self> {
        spec.validate()?;
        let arity = spec.arity();
        Ok(CylinderMeasure {
            arity,
            depth: spec.depth,
            mode: MetricMode::Symbolic,
            storage: Storage::Product(spec.probabilities.clone()),
            offsets: level_offsets(arity, spec.depth),
            resolution: (arity as f64).powi(-(spec.depth as i32)),
        })
    }

    /// Builds a measure from an explicit node table (levels concatenated,
    /// lexicographic within a level) and checks every invariant.
    pub fn from_nodes(
        arity: usize,
        depth: usize,
        mode: MetricMode,
        nodes: Vec<Node>,
    ) -> Result<Self> {
        if !(2..=256).contains(&arity) {
            return Err(Error::arg(format!("arity must be in 2..=256, got {arity}")));
        }
        if depth == 0 {
            return Err(Error::arg("depth must be at least 1"));
        }
        let offsets = level_offsets(arity, depth);
        if nodes.len() != offsets[depth + 1] {
            return Err(Error::arg(format!(
                "expected {} nodes for arity {arity} and depth {depth}, got {}",
                offsets[depth + 1],
                nodes.len()
            )));
        }
        let invalid = |level: usize, index: usize, reason: String| Error::InvalidMeasure {
            word: word_label(&word_of(arity, level, index)),
            reason,
        };
        let root = nodes[0];
        if (root.mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(0, 0, format!("root mass {} is not 1", root.mass)));
        }
        if mode == MetricMode::Embedded {
            match root.interval {
                Some((l, len)) if l == 0.0 && len == 1.0 => {}
                _ => return Err(invalid(0, 0, "root interval must be [0, 1]".into())),
            }
        }
        let sym_ratio = 1.0 / arity as f64;
        let mut resolution: f64 = 0.0;
        for level in 0..=depth {
            for index in 0..(offsets[level + 1] - offsets[level]) {
                let node = nodes[offsets[level] + index];
                if !(node.mass >= 0.0 && node.mass <= 1.0 + MASS_TOLERANCE) {
                    return Err(invalid(
                        level,
                        index,
                        format!("mass {} outside [0, 1]", node.mass),
                    ));
                }
                if level > 0 && !(node.ratio > 0.0 && node.ratio < 1.0) {
                    return Err(invalid(
                        level,
                        index,
                        format!("ratio {} outside (0, 1)", node.ratio),
                    ));
                }
                match mode {
                    MetricMode::Symbolic => {
                        if level > 0 && (node.ratio - sym_ratio).abs() > 1e-12 {
                            return Err(invalid(
                                level,
                                index,
                                format!("symbolic ratio must be 1/{arity}, got {}", node.ratio),
                            ));
                        }
                        if node.interval.is_some() {
                            return Err(invalid(
                                level,
                                index,
                                "symbolic nodes carry no interval".into(),
                            ));
                        }
                    }
                    MetricMode::Embedded => {
                        if node.interval.is_none() {
                            return Err(invalid(
                                level,
                                index,
                                "embedded node without interval".into(),
                            ));
                        }
                    }
                }
                if level == depth {
                    if let Some((_, len)) = node.interval {
                        resolution = resolution.max(len);
                    }
                    continue;
                }
                let first = offsets[level + 1] + index * arity;
                let children = &nodes[first..first + arity];
                let total: f64 = children.iter().map(|c| c.mass).sum();
                if (total - node.mass).abs() > MASS_TOLERANCE {
                    return Err(invalid(
                        level,
                        index,
                        format!("children masses sum to {total}, parent has {}", node.mass),
                    ));
                }
                if let Some((left, len)) = node.interval {
                    let mut cursor = left;
                    for (s, child) in children.iter().enumerate() {
                        let (cl, clen) = child.interval.expect("checked above");
                        let slack = 1e-12 * len.max(f64::MIN_POSITIVE);
                        let bad = (clen - len * child.ratio).abs() > 1e-9 * clen.max(1e-300)
                            || cl < cursor - slack
                            || cl + clen > left + len + slack;
                        if bad {
                            return Err(invalid(
                                level + 1,
                                index * arity + s,
                                "child interval overlaps a sibling or leaves the parent".into(),
                            ));
                        }
                        cursor = cl + clen;
                    }
                }
            }
        }
        if mode == MetricMode::Symbolic {
            resolution = sym_ratio.powi(depth as i32);
        }
        Ok(CylinderMeasure {
            arity,
            depth,
            mode,
            storage: Storage::Table(nodes),
            offsets,
            resolution,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn mode(&self) -> MetricMode {
        self.mode
    }

    /// Total number of cylinders, root included.
    pub fn node_count(&self) -> usize {
        self.offsets[self.depth + 1]
    }

    pub fn level_width(&self, level: usize) -> usize {
        self.offsets[level + 1] - self.offsets[level]
    }

    /// The probabilities of a Bernoulli measure, if this is one.
    pub fn product_probabilities(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Product(p) => Some(p),
            Storage::Table(_) => None,
        }
    }

    /// Node at `(level, index)`.
    pub fn node(&self, level: usize, index: usize) -> Node {
        debug_assert!(level <= self.depth && index < self.level_width(level));
        match &self.storage {
            Storage::Table(nodes) => nodes[self.offsets[level] + index],
            Storage::Product(p) => {
                let mut mass = 1.0;
                let mut rest = index;
                for _ in 0..level {
                    mass *= p[rest % self.arity];
                    rest /= self.arity;
                }
                Node {
                    ratio: if level == 0 {
                        1.0
                    } else {
                        1.0 / self.arity as f64
                    },
                    mass,
                    interval: None,
                }
            }
        }
    }

    /// Index within its level of the cylinder coded by `word`.
    pub fn index_of(&self, word: &[u8]) -> Result<usize> {
        if word.len() > self.depth {
            return Err(Error::arg(format!(
                "word of length {} exceeds depth {}",
                word.len(),
                self.depth
            )));
        }
        word.iter().try_fold(0usize, |acc, d| {
            if (*d as usize) < self.arity {
                Ok(acc * self.arity + *d as usize)
            } else {
                Err(Error::arg(format!(
                    "symbol {d} outside alphabet of size {}",
                    self.arity
                )))
            }
        })
    }

    pub fn word_of(&self, level: usize, index: usize) -> Vec<u8> {
        word_of(self.arity, level, index)
    }

    /// Mass of the cylinder coded by `word`.
    pub fn cylinder_mass(&self, word: &[u8]) -> Result<f64> {
        Ok(self.node(word.len(), self.index_of(word)?).mass)
    }

    /// Diameter of the cylinder at `(level, index)`: interval length in
    /// embedded mode, `b^-level` in symbolic mode.
    pub fn diameter(&self, level: usize, index: usize) -> f64 {
        match self.node(level, index).interval {
            Some((_, len)) => len,
            None => (self.arity as f64).powi(-(level as i32)),
        }
    }

    /// `(mass, diameter)` of every generation-`level` cylinder, in order.
    pub fn level_cylinders(&self, level: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.level_width(level)).map(move |i| {
            let node = self.node(level, i);
            let diam = match node.interval {
                Some((_, len)) => len,
                None => (self.arity as f64).powi(-(level as i32)),
            };
            (node.mass, diam)
        })
    }

    /// Whether all generation-`level` cylinders share one diameter.
    pub fn uniform_diameters(&self, level: usize) -> bool {
        match self.mode {
            MetricMode::Symbolic => true,
            MetricMode::Embedded => {
                let first = self.diameter(level, 0);
                (0..self.level_width(level))
                    .all(|i| (self.diameter(level, i) - first).abs() <= 1e-15 * first)
            }
        }
    }

    /// Generation at which a closed symbolic ball of radius `r` is a cylinder.
    fn symbolic_level(&self, r: f64) -> usize {
        if r >= 1.0 {
            return 0;
        }
        let n = ((1.0 / r).ln() / (self.arity as f64).ln() - 1e-9).ceil();
        (n.max(0.0) as usize).min(self.depth)
    }

    fn embedded_ball_mass(&self, x: f64, r: f64) -> f64 {
        let (lo, hi) = (x - r, x + r);
        let mut total = 0.0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((level, index)) = stack.pop() {
            let node = self.node(level, index);
            if node.mass == 0.0 {
                continue;
            }
            let (left, len) = node.interval.expect("embedded node");
            let right = left + len;
            if right < lo || left > hi {
                continue;
            }
            if (left >= lo && right <= hi) || level == self.depth {
                total += node.mass;
                continue;
            }
            let first = index * self.arity;
            for s in (0..self.arity).rev() {
                stack.push((level + 1, first + s));
            }
        }
        total.min(1.0)
    }
}

fn check_fractions(word: &[u8], f: &[f64]) -> Result<()> {
    if let Some(bad) = f.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        return Err(Error::InvalidMeasure {
            word: word_label(word),
            reason: format!("mass fraction {bad} outside [0, 1]"),
        });
    }
    let total: f64 = f.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidMeasure {
            word: word_label(word),
            reason: format!("mass fractions sum to {total}, not 1"),
        });
    }
    Ok(())
}

impl BallMassOracle for CylinderMeasure {
    type Point = TreePoint;

    /// Closed-ball mass. Embedded mode sums every cylinder meeting
    /// `[x - r, x + r]`, resolving down to the leaves; symbolic mode returns
    /// the mass of the cylinder `B(x, r)` (clamped at the tree depth).
    fn ball_mass(&self, x: &TreePoint, r: f64) -> Result<f64> {
        check_radius(r)?;
        match self.mode {
            MetricMode::Embedded => {
                let coord = x
                    .coord
                    .ok_or_else(|| Error::arg("embedded measure needs a coordinate"))?;
                if !coord.is_finite() {
                    return Err(Error::arg("coordinate must be finite"));
                }
                Ok(self.embedded_ball_mass(coord, r))
            }
            MetricMode::Symbolic => {
                let n = self.symbolic_level(r);
                if x.path.len() < n {
                    return Err(Error::arg(format!(
                        "path of length {} too short for radius {r:e}",
                        x.path.len()
                    )));
                }
                self.cylinder_mass(&x.path[..n])
            }
        }
    }

    /// Walks root to leaf choosing children proportionally to mass.
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TreePoint {
        let mut path = Vec::with_capacity(self.depth);
        let mut index = 0usize;
        let mut node = self.node(0, 0);
        for level in 0..self.depth {
            let target = rng.random::<f64>() * node.mass;
            let first = index * self.arity;
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_positive = first;
            for s in 0..self.arity {
                let child = self.node(level + 1, first + s);
                if child.mass <= 0.0 {
                    continue;
                }
                last_positive = first + s;
                acc += child.mass;
                if target < acc {
                    chosen = Some(first + s);
                    break;
                }
            }
            index = chosen.unwrap_or(last_positive);
            path.push((index - first) as u8);
            node = self.node(level + 1, index);
        }
        let coord = node.interval.map(|(left, len)| left + 0.5 * len);
        TreePoint { path, coord }
    }

    fn resolution_radius(&self) -> Option<f64> {
        Some(self.resolution)
    }
}
