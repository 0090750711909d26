//! Random Fourier feature embedding of the Gaussian kernel geometry.
//!
//! Each frequency `omega_i ~ N(0, sigma^-2 I_D)` contributes the block
//! `scale * (cos <omega_i, x>, sin <omega_i, x>)`; blocks are concatenated
//! into a `t`-dimensional vector. With `scale = sqrt(2 / t)` every image has
//! unit norm and `E |f(x) - f(y)|^2 = D_K^2(x, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{kernel_distance_sq, weights_from_sq_dists, KernelConfig, WeightedPointCloud};
use crate::points::{dot, sq_dist, Points};
use crate::seed::SeededRng;

/// A sampled feature map. Serializes to JSON so an embedding can be replayed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffMap {
    /// `t / 2` frequency vectors of length `dim`.
    omega: Vec<Vec<f64>>,
    sigma: f64,
    t: usize,
    seed: u64,
    scale: f64,
}

pub fn sample_rff(dim: usize, t: usize, cfg: &KernelConfig, seed: u64) -> Result<RffMap> {
    if dim == 0 {
        return Err(Error::invalid("ambient dimension must be positive"));
    }
    if t < 2 || !t.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "target dimension must be even and at least 2, got {t}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let std_dev = 1.0 / cfg.sigma();
    let omega = (0..t / 2)
        .map(|_| (0..dim).map(|_| rng.normal(0.0, std_dev)).collect())
        .collect();
    Ok(RffMap {
        omega,
        sigma: cfg.sigma(),
        t,
        seed,
        scale: (2.0 / t as f64).sqrt(),
    })
}

impl RffMap {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.omega[0].len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn omega(&self) -> &[Vec<f64>] {
        &self.omega
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = Vec::with_capacity(self.t);
        for w in &self.omega {
            let (s, c) = dot(w, x).sin_cos();
            out.push(self.scale * c);
            out.push(self.scale * s);
        }
        Ok(out)
    }

    /// Embeds every row of `points`.
    pub fn embed(&self, points: &Points) -> Result<Points> {
        check_dim(self.dim(), points.dim())?;
        let mut data = Vec::with_capacity(points.n() * self.t);
        for row in points.rows() {
            data.extend(self.apply(row)?);
        }
        Points::from_flat(data, self.t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let map: RffMap = serde_json::from_str(s)?;
        if map.omega.len() * 2 != map.t || map.omega.is_empty() {
            return Err(Error::parse("omega must have t/2 rows"));
        }
        let dim = map.omega[0].len();
        if dim == 0 || map.omega.iter().any(|w| w.len() != dim) {
            return Err(Error::parse("omega rows must share a positive length"));
        }
        if !(map.sigma > 0.0 && map.scale > 0.0) {
            return Err(Error::parse("sigma and scale must be positive"));
        }
        Ok(map)
    }
}

pub fn apply_rff(map: &RffMap, x: &[f64]) -> Result<Vec<f64>> {
    map.apply(x)
}

/// Which bound is used to pick the target dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionMode {
    /// `t = C eps^-2 ln(n / delta)` for an `n`-point set.
    PointCount,
    /// `t = C eps^-2 D ln(r D / (eps delta))` for sets with `|x - y| / sigma <= r`.
    Diameter,
}

impl std::str::FromStr for DimensionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point-count" => Ok(DimensionMode::PointCount),
            "diameter" => Ok(DimensionMode::Diameter),
            other => Err(Error::invalid(format!(
                "unknown dimension mode {other:?}, expected point-count or diameter"
            ))),
        }
    }
}

impl std::fmt::Display for DimensionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DimensionMode::PointCount => "point-count",
            DimensionMode::Diameter => "diameter",
        })
    }
}

pub const DEFAULT_DIMENSION_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDimensionRequest {
    pub mode: DimensionMode,
    /// Number of points (point-count mode).
    pub n: Option<usize>,
    /// Bound `r` on `|x - y| / sigma` (diameter mode).
    pub diameter_ratio: Option<f64>,
    /// Ambient dimension (diameter mode).
    pub ambient_dim: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub constant: f64,
}

impl TargetDimensionRequest {
    pub fn point_count(n: usize, epsilon: f64, delta: f64, constant: f64) -> Self {
        TargetDimensionRequest {
            mode: DimensionMode::PointCount,
            n: Some(n),
            diameter_ratio: None,
            ambient_dim: None,
            epsilon,
            delta,
            constant,
        }
    }

    pub fn diameter(r: f64, ambient_dim: usize, epsilon: f64, delta: f64, constant: f64) -> Self {
        TargetDimensionRequest {
            mode: DimensionMode::Diameter,
            n: None,
            diameter_ratio: Some(r),
            ambient_dim: Some(ambient_dim),
            epsilon,
            delta,
            constant,
        }
    }

    /// The bound before rounding to an even integer.
    pub fn raw_bound(&self) -> Result<f64> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.constant.is_finite() && self.constant > 0.0) {
            return Err(Error::invalid("dimension constant must be positive"));
        }
        let inv_eps_sq = 1.0 / (self.epsilon * self.epsilon);
        match self.mode {
            DimensionMode::PointCount => {
                let n = self
                    .n
                    .filter(|n| *n > 0)
                    .ok_or_else(|| Error::invalid("point-count mode needs n >= 1"))?;
                Ok(self.constant * inv_eps_sq * (n as f64 / self.delta).ln())
            }
            DimensionMode::Diameter => {
                let r = self
                    .diameter_ratio
                    .filter(|r| r.is_finite() && *r > 0.0)
                    .ok_or_else(|| Error::invalid("diameter mode needs a positive diameter ratio"))?;
                let d = self
                    .ambient_dim
                    .filter(|d| *d > 0)
                    .ok_or_else(|| Error::invalid("diameter mode needs the ambient dimension"))?
                    as f64;
                Ok(self.constant
                    * inv_eps_sq
                    * d
                    * (r * d / (self.epsilon * self.delta)).ln())
            }
        }
    }
}

/// Smallest even integer `t >= 2` at or above the requested bound.
pub fn target_dimension(req: &TargetDimensionRequest) -> Result<usize> {
    let raw = req.raw_bound()?;
    let t = raw.ceil().max(2.0) as usize;
    Ok(t + t % 2)
}

/// Kernel weights recomputed from squared Euclidean distances between images.
pub fn recompute_weights(images: &Points) -> Result<Vec<f64>> {
    if images.is_empty() {
        return Err(Error::Empty("image set"));
    }
    Ok(weights_from_sq_dists(images.n(), |i, j| {
        sq_dist(images.row(i), images.row(j))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistortion {
    pub i: usize,
    pub j: usize,
    pub kernel_sq: f64,
    pub image_sq: f64,
    /// `image_sq / kernel_sq - 1`.
    pub rel_error: f64,
}

/// Distortion of an embedding relative to the kernel geometry of a cloud.
/// Pairs at zero kernel distance (duplicates) and points of zero weight are
/// excluded, since their relative error is 0/0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub epsilon: f64,
    /// Largest `|rel_error|` over reported pairs.
    pub max_rel_error: f64,
    /// Fraction of reported pairs with `|rel_error| < epsilon`.
    pub fraction_within: f64,
    pub excluded_pairs: usize,
    pub pairs: Vec<PairDistortion>,
    pub original_weights: Vec<f64>,
    pub recomputed_weights: Vec<f64>,
    /// `|w_t - w| / |w|` per point, `None` where `w = 0`.
    pub weight_rel_errors: Vec<Option<f64>>,
    pub max_weight_rel_error: f64,
    /// Largest relative error over all power distances, diagonal included.
    pub max_power_rel_error: f64,
}

impl DistortionReport {
    /// True when every pair is within `(1 +- epsilon)` strictly.
    pub fn pairwise_certified(&self) -> bool {
        self.max_rel_error < self.epsilon
    }

    /// True when pairs and weights are both within `epsilon`.
    pub fn power_certified(&self) -> bool {
        self.pairwise_certified() && self.max_weight_rel_error <= self.epsilon
    }
}

pub fn distortion_report(
    cloud: &WeightedPointCloud,
    map: &RffMap,
    epsilon: f64,
) -> Result<DistortionReport> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid("epsilon must lie in (0, 1]"));
    }
    let images = map.embed(cloud.points())?;
    let recomputed = recompute_weights(&images)?;
    let n = cloud.n();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    let mut excluded = 0;
    let mut max_power = 0.0f64;
    for i in 0..n {
        let diag = -2.0 * cloud.weights()[i];
        if diag > 0.0 {
            max_power = max_power.max(((-2.0 * recomputed[i]) / diag - 1.0).abs());
        }
        for j in (i + 1)..n {
            let kernel_sq = kernel_distance_sq(cloud.points().row(i), cloud.points().row(j), cloud.config())?;
            let image_sq = sq_dist(images.row(i), images.row(j));
            let power = kernel_sq - cloud.weights()[i] - cloud.weights()[j];
            if power > 0.0 {
                let image_power = image_sq - recomputed[i] - recomputed[j];
                max_power = max_power.max((image_power / power - 1.0).abs());
            }
            if kernel_sq == 0.0 {
                excluded += 1;
                continue;
            }
            pairs.push(PairDistortion {
                i,
                j,
                kernel_sq,
                image_sq,
                rel_error: image_sq / kernel_sq - 1.0,
            });
        }
    }
    let max_rel_error = pairs.iter().map(|p| p.rel_error.abs()).fold(0.0, f64::max);
    let within = pairs.iter().filter(|p| p.rel_error.abs() < epsilon).count();
    let fraction_within = if pairs.is_empty() {
        1.0
    } else {
        within as f64 / pairs.len() as f64
    };
    let weight_rel_errors: Vec<Option<f64>> = cloud
        .weights()
        .iter()
        .zip(&recomputed)
        .map(|(w, wt)| (*w != 0.0).then(|| (wt - w).abs() / w.abs()))
        .collect();
    let max_weight_rel_error = weight_rel_errors.iter().flatten().fold(0.0f64, |a, b| a.max(*b));
    Ok(DistortionReport {
        epsilon,
        max_rel_error,
        fraction_within,
        excluded_pairs: excluded,
        pairs,
        original_weights: cloud.weights().to_vec(),
        recomputed_weights: recomputed,
        weight_rel_errors,
        max_weight_rel_error,
        max_power_rel_error: max_power,
    })
}
