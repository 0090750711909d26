//! Synthetic datasets, CSV point IO, and brute-force rank oracles used to
//! cross-check the persistence reduction.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::{FilteredComplex, Simplex};
use crate::persistence::{format_value, PersistenceDiagram, PersistencePair};
use crate::points::Points;
use crate::seed::{derive_seed, SeededRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    CircleWithOutliers,
    GaussianClusters,
    UniformCube,
    #[serde(rename = "embedded_circle_highD")]
    EmbeddedCircleHighD,
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle_with_outliers" => Ok(DatasetKind::CircleWithOutliers),
            "gaussian_clusters" => Ok(DatasetKind::GaussianClusters),
            "uniform_cube" => Ok(DatasetKind::UniformCube),
            "embedded_circle_highD" | "embedded_circle_highd" => Ok(DatasetKind::EmbeddedCircleHighD),
            other => Err(Error::invalid(format!("unknown dataset kind {other:?}"))),
        }
    }
}

/// Parameters of a synthetic point cloud. `n` counts the structured points;
/// `outliers` extra points are drawn uniformly from `[-2r, 2r]^dim` and
/// appended after them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n: usize,
    pub dim: usize,
    pub noise: f64,
    pub outliers: usize,
    pub radius: f64,
    pub clusters: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind, n: usize, dim: usize, seed: u64) -> Self {
        DatasetSpec {
            kind,
            n,
            dim,
            noise: 0.0,
            outliers: 0,
            radius: 1.0,
            clusters: 3,
            seed,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_outliers(mut self, outliers: usize) -> Self {
        self.outliers = outliers;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_clusters(mut self, clusters: usize) -> Self {
        self.clusters = clusters;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("dataset needs n ≥ 1"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dataset needs dim ≥ 1"));
        }
        let circle = matches!(
            self.kind,
            DatasetKind::CircleWithOutliers | DatasetKind::EmbeddedCircleHighD
        );
        if circle && self.dim < 2 {
            return Err(Error::invalid("circle datasets need dim ≥ 2"));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::invalid(format!("noise must be finite and ≥ 0, got {}", self.noise)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid(format!("radius must be finite and > 0, got {}", self.radius)));
        }
        if self.kind == DatasetKind::GaussianClusters && self.clusters == 0 {
            return Err(Error::invalid("gaussian_clusters needs clusters ≥ 1"));
        }
        Ok(())
    }
}

/// Deterministic per `spec.seed`.
pub fn generate(spec: &DatasetSpec) -> Result<Points> {
    spec.validate()?;
    let mut rng = SeededRng::new(derive_seed(spec.seed, Stream::Dataset));
    let (d, r) = (spec.dim, spec.radius);
    let mut data = Vec::with_capacity((spec.n + spec.outliers) * d);
    match spec.kind {
        DatasetKind::CircleWithOutliers => {
            for k in 0..spec.n {
                let mut row = vec![0.0; d];
                let theta = TAU * k as f64 / spec.n as f64;
                row[0] = r * theta.cos();
                row[1] = r * theta.sin();
                data.extend(row);
            }
        }
        DatasetKind::EmbeddedCircleHighD => {
            let rotation = random_rotation(&mut rng, d);
            for k in 0..spec.n {
                let theta = TAU * k as f64 / spec.n as f64;
                let (x, y) = (r * theta.cos(), r * theta.sin());
                data.extend((0..d).map(|i| rotation[(i, 0)] * x + rotation[(i, 1)] * y));
            }
        }
        DatasetKind::GaussianClusters => {
            let centers: Vec<Vec<f64>> = (0..spec.clusters)
                .map(|_| (0..d).map(|_| rng.uniform_in(-2.0 * r, 2.0 * r)).collect())
                .collect();
            for k in 0..spec.n {
                data.extend_from_slice(&centers[k % spec.clusters]);
            }
        }
        DatasetKind::UniformCube => {
            data.extend((0..spec.n * d).map(|_| rng.uniform_in(-r, r)));
        }
    }
    if spec.noise > 0.0 {
        for x in data.iter_mut() {
            *x += rng.normal(0.0, spec.noise);
        }
    }
    data.extend((0..spec.outliers * d).map(|_| rng.uniform_in(-2.0 * r, 2.0 * r)));
    Points::from_flat(data, d)
}

/// Orthogonal matrix from the QR factorization of a Gaussian matrix, with
/// column signs fixed so the result is Haar distributed.
fn random_rotation(rng: &mut SeededRng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.standard_normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// One point per row, comma separated, no header.
pub fn write_points_csv<W: Write>(mut writer: W, points: &Points) -> Result<()> {
    for row in points.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(writer, "{}", line.join(","))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(reader: R) -> Result<Points> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut dim = None;
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::parse(format!(
                    "row {} has {} columns, expected {d}",
                    line + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(format!("row {}: bad number {field:?}", line + 1)))?;
            data.push(v);
        }
    }
    match dim {
        None => Err(Error::Empty("point set")),
        Some(d) => Points::from_flat(data, d),
    }
}

/// One value per line.
pub fn write_values_csv<W: Write>(mut writer: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(writer, "{}", format_value(*v))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_values_csv<R: Read>(mut reader: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse().map_err(|_| Error::parse(format!("bad number {l:?}"))))
        .collect()
}

/// Random face-closed complex on at most `max_vertices` vertices with values
/// on a coarse grid, so ties between simplices are common.
pub fn random_complex(rng: &mut SeededRng, max_vertices: usize, d_max: usize) -> FilteredComplex {
    let n = 1 + rng.below(max_vertices.max(1));
    let mut simplices: Vec<Simplex> = (0..n)
        .map(|i| Simplex::new(vec![i], 0.5 * rng.below(3) as f64))
        .collect();
    let mut layer: HashMap<Vec<usize>, f64> =
        simplices.iter().map(|s| (s.vertices.clone(), s.value)).collect();
    for k in 2..=(d_max + 1).min(n) {
        let mut next = HashMap::new();
        for verts in subsets(n, k) {
            let probe = Simplex::new(verts, 0.0);
            let floor = probe
                .facets()
                .map(|f| layer.get(&f).copied())
                .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)));
            if let Some(floor) = floor {
                if rng.uniform() < 0.8 {
                    let value = floor + 0.5 * rng.below(3) as f64;
                    next.insert(probe.vertices.clone(), value);
                    simplices.push(Simplex::new(probe.vertices, value));
                }
            }
        }
        layer = next;
    }
    FilteredComplex::new(simplices, d_max).expect("random complex is face closed")
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for v in start..n {
            current.push(v);
            rec(v + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Dense GF(2) vector.
#[derive(Clone)]
struct BitVec(Vec<u64>);

impl BitVec {
    fn zeros(len: usize) -> Self {
        BitVec(vec![0; len.div_ceil(64).max(1)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }

    fn highest(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    fn xor(&mut self, other: &BitVec) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn mask(&mut self, keep: &BitVec) {
        for (a, b) in self.0.iter_mut().zip(&keep.0) {
            *a &= b;
        }
    }
}

fn gf2_rank(mut vectors: Vec<BitVec>) -> usize {
    let mut pivots: HashMap<usize, BitVec> = HashMap::new();
    for v in vectors.iter_mut() {
        while let Some(h) = v.highest() {
            match pivots.get(&h) {
                Some(p) => v.xor(p),
                None => {
                    pivots.insert(h, v.clone());
                    break;
                }
            }
        }
    }
    pivots.len()
}

/// Boundary data of a complex grouped by dimension.
struct RankTables {
    /// values[k][i] is the value of the i-th k-simplex
    values: Vec<Vec<f64>>,
    /// boundary[k][i] is the boundary of the i-th k-simplex over (k-1)-simplices
    boundary: Vec<Vec<BitVec>>,
}

impl RankTables {
    fn new(complex: &FilteredComplex) -> Self {
        let top = complex.max_dim() + 1;
        let mut values = vec![Vec::new(); top + 1];
        let mut position: HashMap<&[usize], usize> = HashMap::new();
        for s in complex.simplices() {
            position.insert(&s.vertices, values[s.dim()].len());
            values[s.dim()].push(s.value);
        }
        let mut boundary: Vec<Vec<BitVec>> = vec![Vec::new(); top + 1];
        for s in complex.simplices() {
            let k = s.dim();
            let width = if k == 0 { 0 } else { values[k - 1].len() };
            let mut col = BitVec::zeros(width);
            for f in s.facets() {
                col.set(position[f.as_slice()]);
            }
            boundary[k].push(col);
        }
        RankTables { values, boundary }
    }

    fn count(&self, k: usize, value: f64) -> usize {
        self.values[k].iter().filter(|v| **v <= value).count()
    }

    /// Rank of the boundary map out of k-simplices alive at `value`, after
    /// deleting rows of (k-1)-simplices alive at `hidden`.
    fn rank(&self, k: usize, value: f64, hidden: Option<f64>) -> usize {
        if k == 0 || k >= self.values.len() {
            return 0;
        }
        let keep = hidden.map(|h| {
            let mut m = BitVec::zeros(self.values[k - 1].len());
            for (i, v) in self.values[k - 1].iter().enumerate() {
                if *v > h {
                    m.set(i);
                }
            }
            m
        });
        let cols = self
            .boundary[k]
            .iter()
            .zip(&self.values[k])
            .filter(|(_, v)| **v <= value)
            .map(|(c, _)| {
                let mut c = c.clone();
                if let Some(m) = &keep {
                    c.mask(m);
                }
                c
            })
            .collect();
        gf2_rank(cols)
    }

    /// Rank of H_k(K_a) → H_k(K_b) for a ≤ b.
    fn persistent_betti(&self, k: usize, a: f64, b: f64) -> usize {
        let cycles = self.count(k, a) - self.rank(k, a, None);
        let boundaries = self.rank(k + 1, b, None);
        let boundaries_outside = self.rank(k + 1, b, Some(a));
        cycles - (boundaries - boundaries_outside)
    }
}

/// Betti numbers of the sublevel complex at `value`, in degrees
/// `0..max(d_max, 1)`; the top degree is left out since its boundaries are
/// not in the complex.
pub fn betti_oracle(complex: &FilteredComplex, value: f64) -> Vec<usize> {
    let tables = RankTables::new(complex);
    (0..complex.max_dim().max(1))
        .map(|k| tables.persistent_betti(k, value, value))
        .collect()
}

/// Diagram recovered from persistent Betti numbers by inclusion-exclusion over
/// consecutive critical values, independent of the column reduction.
pub fn diagram_oracle(complex: &FilteredComplex) -> Result<PersistenceDiagram> {
    let tables = RankTables::new(complex);
    let mut critical: Vec<f64> = complex.simplices().iter().map(|s| s.value).collect();
    critical.sort_by(f64::total_cmp);
    critical.dedup();
    let m = critical.len();
    let mut pairs = Vec::new();
    for k in 0..=complex.max_dim() {
        // beta(i, j) with index 0 standing for the empty sublevel
        let beta = |i: usize, j: usize| -> i64 {
            if i == 0 {
                0
            } else {
                tables.persistent_betti(k, critical[i - 1], critical[j - 1]) as i64
            }
        };
        for i in 1..=m {
            for j in (i + 1)..=m {
                let mult = beta(i, j - 1) - beta(i, j) - beta(i - 1, j - 1) + beta(i - 1, j);
                if mult < 0 {
                    return Err(Error::Integrity(format!(
                        "negative multiplicity {mult} in degree {k}"
                    )));
                }
                for _ in 0..mult {
                    pairs.push(PersistencePair {
                        degree: k,
                        birth: critical[i - 1],
                        death: critical[j - 1],
                    });
                }
            }
            let essential = beta(i, m) - beta(i - 1, m);
            if essential < 0 {
                return Err(Error::Integrity(format!("negative essential count in degree {k}")));
            }
            for _ in 0..essential {
                pairs.push(PersistencePair {
                    degree: k,
                    birth: critical[i - 1],
                    death: f64::INFINITY,
                });
            }
        }
    }
    PersistenceDiagram::new(pairs, complex.max_dim(), Some(complex.max_dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{build_filtration, EuclideanGeometry};
    use crate::points::sq_dist;

    fn equilateral() -> FilteredComplex {
        let h = 3f64.sqrt() / 2.0;
        let p = Points::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        build_filtration(&EuclideanGeometry::new(p, vec![0.0; 3]).unwrap(), 2, None).unwrap()
    }

    #[test]
    fn circle_exact() {
        let p = generate(&DatasetSpec::new(DatasetKind::CircleWithOutliers, 8, 2, 1)).unwrap();
        assert_eq!(p.n(), 8);
        for (k, row) in p.rows().enumerate() {
            let theta = TAU * k as f64 / 8.0;
            assert!((row[0] - theta.cos()).abs() < 1e-15);
            assert!((row[1] - theta.sin()).abs() < 1e-15);
            assert!((row[0].hypot(row[1]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn outliers_appended_in_box() {
        let spec = DatasetSpec::new(DatasetKind::CircleWithOutliers, 40, 50, 3).with_outliers(5);
        let p = generate(&spec).unwrap();
        assert_eq!((p.n(), p.dim()), (45, 50));
        assert!(p.rows().skip(40).all(|r| r.iter().all(|x| x.abs() <= 2.0)));
        assert!(p.rows().take(40).all(|r| r[2..].iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn deterministic_per_seed() {
        for kind in [
            DatasetKind::CircleWithOutliers,
            DatasetKind::GaussianClusters,
            DatasetKind::UniformCube,
            DatasetKind::EmbeddedCircleHighD,
        ] {
            let spec = DatasetSpec::new(kind, 20, 5, 9).with_noise(0.1).with_outliers(2);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
            let other = DatasetSpec { seed: 10, ..spec.clone() };
            assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
        }
    }

    #[test]
    fn embedded_circle_is_isometric() {
        let planar = generate(&DatasetSpec::new(DatasetKind::CircleWithOutliers, 12, 2, 0)).unwrap();
        let high = generate(&DatasetSpec::new(DatasetKind::EmbeddedCircleHighD, 12, 30, 5)).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let a = sq_dist(planar.row(i), planar.row(j)).sqrt();
                let b = sq_dist(high.row(i), high.row(j)).sqrt();
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn clusters_and_cube_shapes() {
        let spec = DatasetSpec::new(DatasetKind::UniformCube, 30, 3, 2).with_radius(0.5);
        let p = generate(&spec).unwrap();
        assert!(p.as_flat().iter().all(|x| x.abs() <= 0.5));
        let spec = DatasetSpec::new(DatasetKind::GaussianClusters, 9, 2, 2).with_clusters(3);
        let p = generate(&spec).unwrap();
        assert_eq!(p.row(0), p.row(3));
        assert_ne!(p.row(0), p.row(1));
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            DatasetSpec::new(DatasetKind::UniformCube, 0, 2, 0),
            DatasetSpec::new(DatasetKind::UniformCube, 3, 0, 0),
            DatasetSpec::new(DatasetKind::CircleWithOutliers, 3, 1, 0),
            DatasetSpec::new(DatasetKind::UniformCube, 3, 2, 0).with_noise(-1.0),
            DatasetSpec::new(DatasetKind::UniformCube, 3, 2, 0).with_radius(0.0),
            DatasetSpec::new(DatasetKind::GaussianClusters, 3, 2, 0).with_clusters(0),
        ];
        for spec in bad {
            assert!(generate(&spec).is_err(), "{spec:?}");
        }
        assert!("nope".parse::<DatasetKind>().is_err());
        assert_eq!(
            "embedded_circle_highD".parse::<DatasetKind>().unwrap(),
            DatasetKind::EmbeddedCircleHighD
        );
    }

    #[test]
    fn points_csv_round_trip() {
        let spec = DatasetSpec::new(DatasetKind::UniformCube, 7, 3, 4);
        let p = generate(&spec).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(read_points_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn points_csv_errors() {
        match read_points_csv("".as_bytes()) {
            Err(e) => assert_eq!(e.to_string(), "empty point set"),
            Ok(_) => panic!("empty input accepted"),
        }
        assert!(read_points_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points_csv("1,x\n".as_bytes()).is_err());
        assert_eq!(read_points_csv("1, 2\n\n3,4\n".as_bytes()).unwrap().n(), 2);
    }

    #[test]
    fn values_csv_round_trip() {
        let v = vec![-0.125, 1e-300, 3.0];
        let mut buf = Vec::new();
        write_values_csv(&mut buf, &v).unwrap();
        assert_eq!(read_values_csv(buf.as_slice()).unwrap(), v);
    }

    #[test]
    fn betti_examples() {
        let c = equilateral();
        assert_eq!(betti_oracle(&c, 0.26), vec![1, 1]);
        assert_eq!(betti_oracle(&c, 0.1), vec![3, 0]);
        assert_eq!(betti_oracle(&c, 1.0), vec![1, 0]);
    }

    #[test]
    fn gf2_rank_basics() {
        let mut a = BitVec::zeros(3);
        a.set(0);
        a.set(1);
        let mut b = BitVec::zeros(3);
        b.set(1);
        b.set(2);
        let mut c = BitVec::zeros(3);
        c.set(0);
        c.set(2);
        assert_eq!(gf2_rank(vec![a.clone(), b.clone()]), 2);
        assert_eq!(gf2_rank(vec![a, b, c]), 2);
        assert_eq!(gf2_rank(vec![BitVec::zeros(3)]), 0);
    }

    #[test]
    fn diagram_oracle_equilateral() {
        let d = diagram_oracle(&equilateral()).unwrap();
        assert_eq!(d.degree(0).len(), 3);
        assert_eq!(d.degree(1).len(), 1);
    }

    #[test]
    fn random_complexes_are_valid() {
        let mut rng = SeededRng::new(3);
        for _ in 0..20 {
            let c = random_complex(&mut rng, 7, 2);
            crate::filtration::assert_monotone(&c).unwrap();
            assert!(c.simplices().iter().all(|s| s.dim() <= 2));
        }
    }
}
