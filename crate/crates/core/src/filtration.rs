//! Weighted Čech filtrations. Every candidate simplex up to `d_max` is
//! assigned the squared power radius of its minimum enclosing ball, either in
//! the kernel feature space (through the Gram matrix) or among embedded
//! points with recomputed weights.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{GramMatrix, WeightedPointCloud};
use crate::meb::{meb_coordinates, meb_gram};
use crate::points::Points;

pub const DEFAULT_MAX_DIM: usize = 2;

/// A simplex with its filtration value (a squared power radius).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<usize>, value: f64) -> Self {
        vertices.sort_unstable();
        Simplex { vertices, value }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Codimension-one faces, each obtained by dropping one vertex.
    pub fn facets(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let k = self.vertices.len();
        (0..if k > 1 { k } else { 0 }).map(move |skip| {
            self.vertices
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| *v)
                .collect()
        })
    }
}

/// Canonical filtration order: value, then dimension, then vertices.
pub fn filtration_order(a: &Simplex, b: &Simplex) -> std::cmp::Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

/// A face-closed simplicial complex listed in filtration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    simplices: Vec<Simplex>,
    max_dim: usize,
}

impl FilteredComplex {
    /// Sorts into canonical order and checks face closure.
    pub fn new(mut simplices: Vec<Simplex>, max_dim: usize) -> Result<Self> {
        simplices.sort_by(filtration_order);
        Self::with_order(simplices, max_dim)
    }

    /// Keeps the given order, which must list every face before its cofaces.
    pub fn with_order(simplices: Vec<Simplex>, max_dim: usize) -> Result<Self> {
        let mut position: HashMap<&[usize], usize> = HashMap::with_capacity(simplices.len());
        for (idx, s) in simplices.iter().enumerate() {
            if s.vertices.is_empty() {
                return Err(Error::Integrity("empty simplex".into()));
            }
            if s.vertices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Integrity(format!(
                    "vertices of {:?} must be distinct and increasing",
                    s.vertices
                )));
            }
            if s.dim() > max_dim {
                return Err(Error::Integrity(format!(
                    "simplex {:?} exceeds dimension {max_dim}",
                    s.vertices
                )));
            }
            if s.value.is_nan() {
                return Err(Error::Integrity(format!("simplex {:?} has NaN value", s.vertices)));
            }
            for face in s.facets() {
                match position.get(face.as_slice()) {
                    Some(_) => {}
                    None => {
                        return Err(Error::Integrity(format!(
                            "face {face:?} of {:?} is missing or listed after it",
                            s.vertices
                        )))
                    }
                }
            }
            if position.insert(&s.vertices, idx).is_some() {
                return Err(Error::Integrity(format!("duplicate simplex {:?}", s.vertices)));
            }
        }
        drop(position);
        Ok(FilteredComplex { simplices, max_dim })
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Dimension bound the complex was built with.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Position of every simplex in the order.
    pub fn index(&self) -> HashMap<&[usize], usize> {
        self.simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.as_slice(), i))
            .collect()
    }

    pub fn value_of(&self, vertices: &[usize]) -> Option<f64> {
        self.simplices
            .iter()
            .find(|s| s.vertices == vertices)
            .map(|s| s.value)
    }

    /// The subcomplex of simplices with value at most `cap`, order preserved.
    pub fn truncate(&self, cap: f64) -> FilteredComplex {
        FilteredComplex {
            simplices: self
                .simplices
                .iter()
                .filter(|s| s.value <= cap)
                .cloned()
                .collect(),
            max_dim: self.max_dim,
        }
    }

    /// Line format `dim  v0 v1 ... vk  value`, in filtration order, after a
    /// `# max_dim d` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# max_dim {}\n", self.max_dim);
        for s in &self.simplices {
            let verts: Vec<String> = s.vertices.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}  {}  {:?}", s.dim(), verts.join(" "), s.value).expect("string write");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut max_dim = None;
        let mut simplices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("max_dim") {
                    let d = it
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::parse(format!("line {}: bad max_dim header", lineno + 1)))?;
                    max_dim = Some(d);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| Error::parse(format!("line {}: {what}", lineno + 1));
            let dim: usize = fields
                .first()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad("missing dimension"))?;
            if fields.len() != dim + 3 {
                return Err(bad("expected dim+1 vertices followed by a value"));
            }
            let vertices = fields[1..dim + 2]
                .iter()
                .map(|f| f.parse::<usize>().map_err(|_| bad("bad vertex index")))
                .collect::<Result<Vec<_>>>()?;
            let value: f64 = fields[dim + 2].parse().map_err(|_| bad("bad value"))?;
            simplices.push(Simplex { vertices, value });
        }
        let max_dim = max_dim
            .or_else(|| simplices.iter().map(Simplex::dim).max())
            .unwrap_or(0);
        Self::with_order(simplices, max_dim)
    }
}

/// Checks that every face precedes and does not exceed its cofaces.
pub fn assert_monotone(complex: &FilteredComplex) -> Result<()> {
    let index = complex.index();
    for (pos, s) in complex.simplices().iter().enumerate() {
        for face in s.facets() {
            let fi = *index
                .get(face.as_slice())
                .ok_or_else(|| Error::Integrity(format!("face {face:?} missing")))?;
            let f = &complex.simplices()[fi];
            if f.value > s.value || fi > pos {
                return Err(Error::NotMonotone {
                    face: f.vertices.clone(),
                    face_value: f.value,
                    simplex: s.vertices.clone(),
                    simplex_value: s.value,
                });
            }
        }
    }
    Ok(())
}

/// Source of squared power radii for vertex subsets.
pub trait PowerGeometry: Sync {
    fn n(&self) -> usize;

    /// Weight of vertex `i`; its filtration value is `-weight(i)`.
    fn weight(&self, i: usize) -> f64;

    /// Squared power radius of the minimum enclosing ball of `vertices` (at least two).
    fn radius_sq(&self, vertices: &[usize]) -> Result<f64>;
}

/// Kernel-space geometry: Gram matrix plus kernel weights.
#[derive(Debug, Clone)]
pub struct GkpdGeometry {
    gram: GramMatrix,
    weights: Vec<f64>,
    labels: Vec<usize>,
}

impl GkpdGeometry {
    pub fn new(cloud: &WeightedPointCloud) -> Self {
        GkpdGeometry {
            gram: cloud.gram(),
            weights: cloud.weights().to_vec(),
            labels: (0..cloud.n()).collect(),
        }
    }

    /// Restriction to a subset of vertices; weights are kept from the full cloud.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let labels = subset_labels(&self.labels, indices)?;
        Ok(GkpdGeometry {
            gram: self.gram.clone(),
            weights: self.weights.clone(),
            labels,
        })
    }
}

impl PowerGeometry for GkpdGeometry {
    fn n(&self) -> usize {
        self.labels.len()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights[self.labels[i]]
    }

    fn radius_sq(&self, vertices: &[usize]) -> Result<f64> {
        let global: Vec<usize> = vertices.iter().map(|&v| self.labels[v]).collect();
        let sub = self.gram.submatrix(&global);
        let w: Vec<f64> = global.iter().map(|&v| self.weights[v]).collect();
        Ok(meb_gram(&sub, &w)?.radius_sq)
    }
}

/// Explicit points (e.g. feature-map images) with weights recomputed among them.
#[derive(Debug, Clone)]
pub struct EuclideanGeometry {
    points: Points,
    weights: Vec<f64>,
    labels: Vec<usize>,
}

impl EuclideanGeometry {
    pub fn new(points: Points, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point set"));
        }
        check_dim(points.n(), weights.len())?;
        let labels = (0..points.n()).collect();
        Ok(EuclideanGeometry {
            points,
            weights,
            labels,
        })
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let labels = subset_labels(&self.labels, indices)?;
        Ok(EuclideanGeometry {
            points: self.points.clone(),
            weights: self.weights.clone(),
            labels,
        })
    }
}

impl PowerGeometry for EuclideanGeometry {
    fn n(&self) -> usize {
        self.labels.len()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights[self.labels[i]]
    }

    fn radius_sq(&self, vertices: &[usize]) -> Result<f64> {
        let global: Vec<usize> = vertices.iter().map(|&v| self.labels[v]).collect();
        let sub = self.points.select(&global)?;
        let w: Vec<f64> = global.iter().map(|&v| self.weights[v]).collect();
        Ok(meb_coordinates(&sub, &w)?.radius_sq)
    }
}

fn subset_labels(labels: &[usize], indices: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; labels.len()];
    indices
        .iter()
        .map(|&i| {
            if i >= labels.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: labels.len(),
                });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("index {i} repeated in subset")));
            }
            Ok(labels[i])
        })
        .collect()
}

/// Which geometry a filtration is built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiltrationMode {
    Gkpd,
    Euclidean,
}

impl std::str::FromStr for FiltrationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gkpd" => Ok(FiltrationMode::Gkpd),
            "euclidean" => Ok(FiltrationMode::Euclidean),
            other => Err(Error::invalid(format!(
                "unknown filtration mode {other:?}, expected gkpd or euclidean"
            ))),
        }
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let mut i = k;
        while i > 0 && current[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        current[i - 1] += 1;
        for j in i..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Every simplex of dimension at most `d_max` whose value is at most
/// `value_cap`. Vertices get `-w(p_i)`; higher simplices get the squared
/// power radius, raised to the maximum over their facets.
pub fn build_filtration<G: PowerGeometry>(
    geometry: &G,
    d_max: usize,
    value_cap: Option<f64>,
) -> Result<FilteredComplex> {
    let n = geometry.n();
    if n == 0 {
        return Err(Error::Empty("point set"));
    }
    let cap = value_cap.unwrap_or(f64::INFINITY);
    if cap.is_nan() {
        return Err(Error::invalid("value cap is NaN"));
    }
    let mut simplices = Vec::new();
    let mut previous: HashMap<Vec<usize>, f64> = HashMap::new();
    for i in 0..n {
        let v = -geometry.weight(i);
        if v <= cap {
            previous.insert(vec![i], v);
            simplices.push(Simplex { vertices: vec![i], value: v });
        }
    }
    for k in 2..=(d_max + 1).min(n) {
        let candidates: Vec<(Vec<usize>, f64)> = combinations(n, k)
            .into_iter()
            .filter_map(|verts| {
                let s = Simplex { vertices: verts, value: 0.0 };
                let mut floor = f64::NEG_INFINITY;
                for face in s.facets() {
                    floor = floor.max(*previous.get(&face)?);
                }
                Some((s.vertices, floor))
            })
            .collect();
        let evaluated: Vec<(Vec<usize>, f64)> = candidates
            .into_par_iter()
            .map(|(verts, floor)| {
                let r = geometry.radius_sq(&verts)?;
                Ok((verts, r.max(floor)))
            })
            .collect::<Result<_>>()?;
        previous = HashMap::with_capacity(evaluated.len());
        for (verts, v) in evaluated {
            if v <= cap {
                simplices.push(Simplex { vertices: verts.clone(), value: v });
                previous.insert(verts, v);
            }
        }
        if previous.is_empty() {
            break;
        }
    }
    let complex = FilteredComplex::new(simplices, d_max)?;
    assert_monotone(&complex)?;
    Ok(complex)
}
