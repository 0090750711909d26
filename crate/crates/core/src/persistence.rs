//! Persistence diagrams by left-to-right boundary matrix reduction over Z/2.

use std::io::{Read, Write};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::filtration::{assert_monotone, FilteredComplex};

/// A bar `[birth, death)` in filtration-value (squared radius) units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub degree: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
}

impl PersistencePair {
    pub fn is_infinite(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    /// Alive on the half-open interval `[birth, death)`.
    pub fn alive_at(&self, value: f64) -> bool {
        self.birth <= value && value < self.death
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    max_degree: usize,
    /// Degree whose bars may be artifacts of the dimension bound.
    truncated_degree: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PersistenceOptions {
    pub keep_zero_persistence: bool,
}

impl PersistenceDiagram {
    pub fn new(
        mut pairs: Vec<PersistencePair>,
        max_degree: usize,
        truncated_degree: Option<usize>,
    ) -> Result<Self> {
        for p in &pairs {
            if p.degree > max_degree {
                return Err(Error::invalid(format!(
                    "pair in degree {} exceeds max degree {max_degree}",
                    p.degree
                )));
            }
            if p.birth.is_nan() || p.death.is_nan() || p.death < p.birth || p.birth == f64::INFINITY {
                return Err(Error::invalid(format!("invalid bar ({}, {})", p.birth, p.death)));
            }
        }
        if truncated_degree.is_some_and(|d| d > max_degree) {
            return Err(Error::invalid("truncated degree exceeds max degree"));
        }
        sort_pairs(&mut pairs);
        Ok(PersistenceDiagram {
            pairs,
            max_degree,
            truncated_degree,
        })
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn truncated_degree(&self) -> Option<usize> {
        self.truncated_degree
    }

    pub fn is_truncated(&self, degree: usize) -> bool {
        self.truncated_degree == Some(degree)
    }

    /// `(birth, death)` bars of one degree, sorted.
    pub fn degree(&self, degree: usize) -> Vec<(f64, f64)> {
        self.pairs
            .iter()
            .filter(|p| p.degree == degree)
            .map(|p| (p.birth, p.death))
            .collect()
    }

    pub fn bars_alive(&self, degree: usize, value: f64) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.degree == degree && p.alive_at(value))
            .count()
    }

    /// Alternating sum of bars alive at `value`.
    pub fn euler_characteristic_at(&self, value: f64) -> i64 {
        self.pairs
            .iter()
            .filter(|p| p.alive_at(value))
            .map(|p| if p.degree % 2 == 0 { 1 } else { -1 })
            .sum()
    }

    /// Bars with every endpoint multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut pairs: Vec<PersistencePair> = self
            .pairs
            .iter()
            .map(|p| PersistencePair {
                degree: p.degree,
                birth: p.birth * factor,
                death: p.death * factor,
            })
            .collect();
        sort_pairs(&mut pairs);
        PersistenceDiagram {
            pairs,
            max_degree: self.max_degree,
            truncated_degree: self.truncated_degree,
        }
    }

    /// One object per degree: `{"degree": k, "truncated": bool, "pairs": [[b, d], ...]}`
    /// with infinite deaths written as `"inf"`.
    pub fn to_json_value(&self) -> Value {
        let docs: Vec<Value> = (0..=self.max_degree)
            .map(|k| {
                let pairs: Vec<Value> = self
                    .degree(k)
                    .into_iter()
                    .map(|(b, d)| json!([b, encode_value(d)]))
                    .collect();
                json!({ "degree": k, "truncated": self.is_truncated(k), "pairs": pairs })
            })
            .collect();
        Value::Array(docs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("diagram serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(s)?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        let docs = value
            .as_array()
            .ok_or_else(|| Error::parse("diagram document must be an array of degrees"))?;
        let mut pairs = Vec::new();
        let mut max_degree = 0;
        let mut truncated = None;
        for doc in docs {
            let degree = doc
                .get("degree")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::parse("degree entry lacks a nonnegative integer \"degree\""))?
                as usize;
            max_degree = max_degree.max(degree);
            if doc.get("truncated").and_then(Value::as_bool).unwrap_or(false) {
                truncated = Some(degree);
            }
            let list = doc
                .get("pairs")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(format!("degree {degree} lacks a \"pairs\" array")))?;
            for item in list {
                let pair = item
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::parse("each pair must be [birth, death]"))?;
                pairs.push(PersistencePair {
                    degree,
                    birth: decode_value(&pair[0])?,
                    death: decode_value(&pair[1])?,
                });
            }
        }
        Self::new(pairs, max_degree, truncated)
    }

    /// Rows `degree,birth,death` under a header, `inf` for infinite deaths.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["degree", "birth", "death"])?;
        for p in &self.pairs {
            w.write_record([p.degree.to_string(), format_value(p.birth), format_value(p.death)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, max_degree: usize, truncated_degree: Option<usize>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut pairs = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 3 {
                return Err(Error::parse("diagram rows need degree,birth,death"));
            }
            let degree = record[0]
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("bad degree {:?}", &record[0])))?;
            pairs.push(PersistencePair {
                degree,
                birth: parse_value(&record[1])?,
                death: parse_value(&record[2])?,
            });
        }
        Self::new(pairs, max_degree, truncated_degree)
    }
}

fn sort_pairs(pairs: &mut [PersistencePair]) {
    pairs.sort_by(|a, b| {
        a.degree
            .cmp(&b.degree)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
}

pub(crate) fn encode_value(v: f64) -> Value {
    if v == f64::INFINITY {
        Value::from("inf")
    } else {
        json!(v)
    }
}

pub(crate) fn decode_value(v: &Value) -> Result<f64> {
    match v {
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::parse("non-finite number")),
        other => Err(Error::parse(format!("expected a number or \"inf\", found {other}"))),
    }
}

pub(crate) fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:?}")
    }
}

pub(crate) fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse().map_err(|_| Error::parse(format!("bad number {s:?}")))
}

/// Symmetric difference of two sorted index lists.
fn add_columns(target: &mut Vec<usize>, other: &[usize]) {
    let mut out = Vec::with_capacity(target.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                out.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&target[i..]);
    out.extend_from_slice(&other[j..]);
    *target = out;
}

/// Boundary columns as sorted lists of face positions.
pub(crate) fn boundary_columns(complex: &FilteredComplex) -> Result<Vec<Vec<usize>>> {
    let index = complex.index();
    complex
        .simplices()
        .iter()
        .map(|s| {
            let mut col = s
                .facets()
                .map(|f| {
                    index
                        .get(f.as_slice())
                        .copied()
                        .ok_or_else(|| Error::Integrity(format!("face {f:?} missing")))
                })
                .collect::<Result<Vec<usize>>>()?;
            col.sort_unstable();
            Ok(col)
        })
        .collect()
}

pub fn compute_persistence(complex: &FilteredComplex) -> Result<PersistenceDiagram> {
    compute_persistence_with(complex, PersistenceOptions::default())
}

pub fn compute_persistence_with(
    complex: &FilteredComplex,
    options: PersistenceOptions,
) -> Result<PersistenceDiagram> {
    assert_monotone(complex)?;
    let simplices = complex.simplices();
    let m = simplices.len();
    let mut columns = boundary_columns(complex)?;
    // owner[row] = column whose reduced lowest entry is `row`
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut paired = vec![false; m];
    let mut pairs = Vec::new();
    for j in 0..m {
        while let Some(&low) = columns[j].last() {
            match owner[low] {
                Some(k) => {
                    let pivot = std::mem::take(&mut columns[k]);
                    add_columns(&mut columns[j], &pivot);
                    columns[k] = pivot;
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].last() {
            owner[low] = Some(j);
            paired[low] = true;
            paired[j] = true;
            let birth = simplices[low].value;
            let death = simplices[j].value;
            if options.keep_zero_persistence || death > birth {
                pairs.push(PersistencePair {
                    degree: simplices[low].dim(),
                    birth,
                    death,
                });
            }
        }
    }
    for (j, s) in simplices.iter().enumerate() {
        if !paired[j] {
            pairs.push(PersistencePair {
                degree: s.dim(),
                birth: s.value,
                death: f64::INFINITY,
            });
        }
    }
    let max_degree = complex.max_dim();
    PersistenceDiagram::new(pairs, max_degree, Some(max_degree))
}
