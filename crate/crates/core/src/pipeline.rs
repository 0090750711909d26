//! End-to-end run: weights, feature map, both filtrations, diagrams, distortion
//! report and interleaving certificate.

use serde::{Deserialize, Serialize};

use crate::compare::{certify_interleaving, InterleavingCertificate, DEFAULT_SLACK};
use crate::error::{Error, Result};
use crate::filtration::{build_filtration, EuclideanGeometry, FilteredComplex, GkpdGeometry, DEFAULT_MAX_DIM};
use crate::kernel::{KernelConfig, WeightedPointCloud};
use crate::persistence::{compute_persistence, PersistenceDiagram};
use crate::points::{sq_dist, Points};
use crate::rff::{
    distortion_report, recompute_weights, sample_rff, target_dimension, DimensionMode, DistortionReport,
    RffMap, TargetDimensionRequest, DEFAULT_DIMENSION_CONSTANT,
};
use crate::seed::{derive_seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub sigma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub constant: f64,
    pub d_max: usize,
    pub value_cap: Option<f64>,
    pub t_override: Option<usize>,
    pub mode: DimensionMode,
    /// Bound on `|x - y| / sigma` for diameter mode; measured from the data
    /// when absent.
    pub diameter_ratio: Option<f64>,
    pub seed: u64,
    pub slack: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sigma: 1.0,
            epsilon: 0.25,
            delta: 0.1,
            constant: DEFAULT_DIMENSION_CONSTANT,
            d_max: DEFAULT_MAX_DIM,
            value_cap: None,
            t_override: None,
            mode: DimensionMode::PointCount,
            diameter_ratio: None,
            seed: 0,
            slack: DEFAULT_SLACK,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        KernelConfig::new(self.sigma)?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.constant.is_finite() && self.constant > 0.0) {
            return Err(Error::invalid("dimension constant must be positive"));
        }
        if let Some(t) = self.t_override {
            if t < 2 || t % 2 != 0 {
                return Err(Error::invalid(format!("t override must be an even integer ≥ 2, got {t}")));
            }
        }
        if self.value_cap.is_some_and(f64::is_nan) {
            return Err(Error::invalid("value cap is NaN"));
        }
        if self.diameter_ratio.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return Err(Error::invalid("diameter ratio must be positive"));
        }
        if !(self.slack.is_finite() && self.slack >= 0.0) {
            return Err(Error::invalid("slack must be finite and ≥ 0"));
        }
        Ok(())
    }
}

/// How the target dimension was chosen, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionChoice {
    pub request: TargetDimensionRequest,
    pub raw_bound: f64,
    pub bound_t: usize,
    pub t_override: Option<usize>,
    pub t: usize,
}

impl std::fmt::Display for DimensionChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = &self.request;
        write!(
            f,
            "mode={} C={} epsilon={} delta={} ",
            r.mode, r.constant, r.epsilon, r.delta
        )?;
        match r.mode {
            DimensionMode::PointCount => write!(f, "n={} ", r.n.unwrap_or(0))?,
            DimensionMode::Diameter => write!(
                f,
                "r={} D={} ",
                r.diameter_ratio.unwrap_or(f64::NAN),
                r.ambient_dim.unwrap_or(0)
            )?,
        }
        write!(f, "bound={:.4} t_bound={}", self.raw_bound, self.bound_t)?;
        if let Some(t) = self.t_override {
            write!(f, " t_override={t}")?;
        }
        write!(f, " t={}", self.t)
    }
}

/// Largest pairwise distance divided by `sigma`.
pub fn diameter_ratio(points: &Points, sigma: f64) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.n() {
        for j in (i + 1)..points.n() {
            best = best.max(sq_dist(points.row(i), points.row(j)));
        }
    }
    best.sqrt() / sigma
}

pub fn choose_dimension(points: &Points, config: &PipelineConfig) -> Result<DimensionChoice> {
    let request = match config.mode {
        DimensionMode::PointCount => {
            TargetDimensionRequest::point_count(points.n(), config.epsilon, config.delta, config.constant)
        }
        DimensionMode::Diameter => {
            let r = match config.diameter_ratio {
                Some(r) => r,
                None => diameter_ratio(points, config.sigma),
            };
            if r.is_nan() || r <= 0.0 {
                return Err(Error::invalid(
                    "diameter mode needs a positive diameter ratio; all points coincide",
                ));
            }
            TargetDimensionRequest::diameter(r, points.dim(), config.epsilon, config.delta, config.constant)
        }
    };
    let raw_bound = request.raw_bound()?;
    let bound_t = target_dimension(&request)?;
    Ok(DimensionChoice {
        request,
        raw_bound,
        bound_t,
        t_override: config.t_override,
        t: config.t_override.unwrap_or(bound_t),
    })
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub cloud: WeightedPointCloud,
    pub dimension: DimensionChoice,
    pub map: RffMap,
    pub embedded: Points,
    pub recomputed_weights: Vec<f64>,
    pub complex_gkpd: FilteredComplex,
    pub complex_euclidean: FilteredComplex,
    pub diagram_gkpd: PersistenceDiagram,
    pub diagram_euclidean: PersistenceDiagram,
    pub distortion: DistortionReport,
    pub certificate: InterleavingCertificate,
}

pub fn run_pipeline(points: Points, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let kernel = KernelConfig::new(config.sigma)?;
    let dimension = choose_dimension(&points, config)?;
    let cloud = WeightedPointCloud::new(points, kernel)?;
    let map = sample_rff(cloud.dim(), dimension.t, &kernel, derive_seed(config.seed, Stream::Rff))?;
    let embedded = map.embed(cloud.points())?;
    let recomputed_weights = recompute_weights(&embedded)?;
    let complex_gkpd = build_filtration(&GkpdGeometry::new(&cloud), config.d_max, config.value_cap)?;
    let euclidean = EuclideanGeometry::new(embedded.clone(), recomputed_weights.clone())?;
    let complex_euclidean = build_filtration(&euclidean, config.d_max, config.value_cap)?;
    let diagram_gkpd = compute_persistence(&complex_gkpd)?;
    let diagram_euclidean = compute_persistence(&complex_euclidean)?;
    let distortion = distortion_report(&cloud, &map, config.epsilon)?;
    let certificate = certify_interleaving(&diagram_gkpd, &diagram_euclidean, config.epsilon, config.slack)?;
    Ok(PipelineOutput {
        cloud,
        dimension,
        map,
        embedded,
        recomputed_weights,
        complex_gkpd,
        complex_euclidean,
        diagram_gkpd,
        diagram_euclidean,
        distortion,
        certificate,
    })
}
