//! Diagram comparison: bottleneck distance and the multiplicative
//! interleaving certificate on the squared-radius scale.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::persistence::{encode_value, PersistenceDiagram};

pub const DEFAULT_SLACK: f64 = 0.05;

/// One matched pair; `None` on a side means the bar is matched to the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEdge {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub cost: f64,
}

/// Indices refer to the bars of one degree in sorted order, as returned by
/// [`PersistenceDiagram::degree`].
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckMatching {
    pub distance: f64,
    pub edges: Vec<MatchEdge>,
}

fn linf(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

fn half_persistence(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / 2.0
}

/// Bipartite graph of the finite bars plus diagonal copies, thresholded at `c`.
struct FiniteMatcher<'a> {
    a: &'a [(f64, f64)],
    b: &'a [(f64, f64)],
}

impl FiniteMatcher<'_> {
    fn left(&self) -> usize {
        self.a.len() + self.b.len()
    }

    fn cost(&self, l: usize, r: usize) -> Option<f64> {
        let (na, nb) = (self.a.len(), self.b.len());
        match (l < na, r < nb) {
            (true, true) => Some(linf(self.a[l], self.b[r])),
            (true, false) => (r - nb == l).then(|| half_persistence(self.a[l])),
            (false, true) => (l - na == r).then(|| half_persistence(self.b[r])),
            (false, false) => Some(0.0),
        }
    }

    fn candidates(&self) -> Vec<f64> {
        let mut c = vec![0.0];
        for p in self.a {
            c.push(half_persistence(*p));
            c.extend(self.b.iter().map(|q| linf(*p, *q)));
        }
        c.extend(self.b.iter().map(|q| half_persistence(*q)));
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }

    /// Perfect matching with every edge cost at most `c`, as `right -> left`.
    fn perfect(&self, c: f64) -> Option<Vec<usize>> {
        let n = self.left();
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|l| (0..n).filter(|&r| self.cost(l, r).is_some_and(|x| x <= c)).collect())
            .collect();
        let mut owner: Vec<Option<usize>> = vec![None; n];
        for l in 0..n {
            let mut seen = vec![false; n];
            if !augment(l, &adj, &mut owner, &mut seen) {
                return None;
            }
        }
        Some(owner.into_iter().map(|o| o.expect("perfect matching")).collect())
    }
}

fn augment(l: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &r in &adj[l] {
        if !seen[r] {
            seen[r] = true;
            if owner[r].is_none_or(|o| augment(o, adj, owner, seen)) {
                owner[r] = Some(l);
                return true;
            }
        }
    }
    false
}

/// Bottleneck matching between two bar lists. Infinite bars match only
/// infinite bars, by sorted birth; unequal counts give `+inf`.
pub fn bottleneck_bars(a: &[(f64, f64)], b: &[(f64, f64)]) -> BottleneckMatching {
    let split = |bars: &[(f64, f64)]| {
        let mut finite = Vec::new();
        let mut infinite = Vec::new();
        for (i, p) in bars.iter().enumerate() {
            if p.1 == f64::INFINITY {
                infinite.push(i);
            } else {
                finite.push(i);
            }
        }
        infinite.sort_by(|&x, &y| bars[x].0.total_cmp(&bars[y].0));
        (finite, infinite)
    };
    let (fa, ia) = split(a);
    let (fb, ib) = split(b);
    if ia.len() != ib.len() {
        return BottleneckMatching {
            distance: f64::INFINITY,
            edges: Vec::new(),
        };
    }
    let mut edges: Vec<MatchEdge> = ia
        .iter()
        .zip(&ib)
        .map(|(&i, &j)| MatchEdge {
            a: Some(i),
            b: Some(j),
            cost: (a[i].0 - b[j].0).abs(),
        })
        .collect();
    let pa: Vec<(f64, f64)> = fa.iter().map(|&i| a[i]).collect();
    let pb: Vec<(f64, f64)> = fb.iter().map(|&j| b[j]).collect();
    let matcher = FiniteMatcher { a: &pa, b: &pb };
    let candidates = matcher.candidates();
    // the largest candidate always admits the all-diagonal matching
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if matcher.perfect(candidates[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let best = matcher.perfect(candidates[lo]).expect("diagonal matching exists");
    let (na, nb) = (pa.len(), pb.len());
    for (r, &l) in best.iter().enumerate() {
        let cost = matcher.cost(l, r).expect("matched edge exists");
        let edge = match (l < na, r < nb) {
            (true, true) => MatchEdge { a: Some(fa[l]), b: Some(fb[r]), cost },
            (true, false) => MatchEdge { a: Some(fa[l]), b: None, cost },
            (false, true) => MatchEdge { a: None, b: Some(fb[r]), cost },
            (false, false) => continue,
        };
        edges.push(edge);
    }
    edges.sort_by_key(|e| (e.a.is_none(), e.a, e.b));
    let distance = edges.iter().map(|e| e.cost).fold(0.0, f64::max);
    BottleneckMatching { distance, edges }
}

pub fn bottleneck_matching(a: &PersistenceDiagram, b: &PersistenceDiagram, degree: usize) -> BottleneckMatching {
    bottleneck_bars(&a.degree(degree), &b.degree(degree))
}

pub fn bottleneck(a: &PersistenceDiagram, b: &PersistenceDiagram, degree: usize) -> f64 {
    bottleneck_matching(a, b, degree).distance
}

/// Result of comparing one degree on the log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorReport {
    pub degree: usize,
    /// Smallest multiplicative matching factor on the squared scale.
    pub factor: f64,
    /// Bottleneck distance of the log-transformed diagrams.
    pub log_bottleneck: f64,
    /// Bars with birth ≤ 0 left out of the log transform, per diagram.
    pub excluded: (usize, usize),
    pub matching: Vec<MatchEdge>,
}

/// `v -> ln(v)/2`, so that a factor β on squared values is a shift of
/// `ln(β)/2`, and the bottleneck `b` maps back to the factor `exp(2b)`.
fn log_bars(bars: &[(f64, f64)]) -> (Vec<(f64, f64)>, Vec<usize>, usize) {
    let mut kept = Vec::new();
    let mut index = Vec::new();
    let mut excluded = 0;
    for (i, &(b, d)) in bars.iter().enumerate() {
        if b > 0.0 {
            kept.push((0.5 * b.ln(), 0.5 * d.ln()));
            index.push(i);
        } else {
            excluded += 1;
        }
    }
    (kept, index, excluded)
}

pub fn multiplicative_factor_report(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    degree: usize,
) -> Result<FactorReport> {
    let (bars_a, bars_b) = (a.degree(degree), b.degree(degree));
    let (la, ia, ea) = log_bars(&bars_a);
    let (lb, ib, eb) = log_bars(&bars_b);
    if la.is_empty() && lb.is_empty() && (ea > 0 || eb > 0) {
        return Err(Error::Undefined(format!(
            "degree {degree}: every bar has birth ≤ 0, the log scale is undefined"
        )));
    }
    let m = bottleneck_bars(&la, &lb);
    let matching = m
        .edges
        .iter()
        .map(|e| MatchEdge {
            a: e.a.map(|i| ia[i]),
            b: e.b.map(|j| ib[j]),
            cost: e.cost,
        })
        .collect();
    Ok(FactorReport {
        degree,
        factor: (2.0 * m.distance).exp(),
        log_bottleneck: m.distance,
        excluded: (ea, eb),
        matching,
    })
}

pub fn multiplicative_factor(a: &PersistenceDiagram, b: &PersistenceDiagram, degree: usize) -> Result<f64> {
    Ok(multiplicative_factor_report(a, b, degree)?.factor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeCertificate {
    pub report: FactorReport,
    /// False for the boundary-truncated degree, which is reported only.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterleavingCertificate {
    pub epsilon: f64,
    pub slack: f64,
    /// `(1 - ε)^-1`.
    pub factor_bound: f64,
    /// `factor_bound · (1 + slack)`.
    pub threshold: f64,
    /// Largest factor over the certified degrees.
    pub factor_measured: f64,
    pub pass: bool,
    pub degrees: Vec<DegreeCertificate>,
}

impl InterleavingCertificate {
    /// The same factor on the α scale.
    pub fn alpha_factor(&self) -> f64 {
        self.factor_measured.sqrt()
    }

    pub fn to_json_value(&self) -> Value {
        let degrees: Vec<Value> = self
            .degrees
            .iter()
            .map(|d| {
                let matching: Vec<Value> = d
                    .report
                    .matching
                    .iter()
                    .map(|e| json!({ "a": e.a, "b": e.b, "cost": encode_value(e.cost) }))
                    .collect();
                json!({
                    "degree": d.report.degree,
                    "certified": d.certified,
                    "factor": encode_value(d.report.factor),
                    "alpha_factor": encode_value(d.report.factor.sqrt()),
                    "log_bottleneck": encode_value(d.report.log_bottleneck),
                    "excluded_births": [d.report.excluded.0, d.report.excluded.1],
                    "matching": matching,
                })
            })
            .collect();
        json!({
            "epsilon": self.epsilon,
            "slack": self.slack,
            "factor_bound": self.factor_bound,
            "threshold": self.threshold,
            "factor_measured": encode_value(self.factor_measured),
            "alpha_factor": encode_value(self.alpha_factor()),
            "pass": self.pass,
            "degrees": degrees,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("certificate serializes")
    }
}

/// Passes when every certified degree has factor at most
/// `(1 - ε)^-1 · (1 + slack)`. Degrees below the truncated one are
/// certified; a vertex-only complex certifies degree 0.
pub fn certify_interleaving(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    epsilon: f64,
    slack: f64,
) -> Result<InterleavingCertificate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(Error::invalid(format!("slack must be finite and ≥ 0, got {slack}")));
    }
    let max_degree = a.max_degree().max(b.max_degree());
    let truncated = a.truncated_degree().or(b.truncated_degree());
    let factor_bound = 1.0 / (1.0 - epsilon);
    let threshold = factor_bound * (1.0 + slack);
    let mut degrees = Vec::with_capacity(max_degree + 1);
    for k in 0..=max_degree {
        let certified = match truncated {
            Some(t) => k < t || (t == 0 && k == 0),
            None => true,
        };
        let report = match multiplicative_factor_report(a, b, k) {
            Ok(r) => r,
            Err(e) if certified => return Err(e),
            Err(_) => continue,
        };
        degrees.push(DegreeCertificate { report, certified });
    }
    let factor_measured = degrees
        .iter()
        .filter(|d| d.certified)
        .map(|d| d.report.factor)
        .fold(1.0, f64::max);
    Ok(InterleavingCertificate {
        epsilon,
        slack,
        factor_bound,
        threshold,
        factor_measured,
        pass: factor_measured <= threshold,
        degrees,
    })
}
