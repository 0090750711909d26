//! Gaussian kernel quantities: kernel distance, kernel distance to the
//! empirical measure, the kernel weight function and the Gaussian kernel
//! power distance (GKPD).
//!
//! The lifting map into the reproducing kernel Hilbert space is never
//! materialized; everything is expressed through kernel evaluations.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::points::{sq_dist, Points};

/// Bandwidth of the Gaussian kernel `K(x, y) = exp(-|x - y|^2 / 2 sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    sigma: f64,
}

impl KernelConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(KernelConfig { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn kernel_of_sq(&self, sq: f64) -> f64 {
        (-sq / (2.0 * self.sigma * self.sigma)).exp()
    }
}

pub fn gaussian_kernel(x: &[f64], y: &[f64], cfg: &KernelConfig) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(cfg.kernel_of_sq(sq_dist(x, y)))
}

/// Squared kernel distance `D_K^2(x, y) = 2 (1 - K(x, y))`, in `[0, 2)`.
pub fn kernel_distance_sq(x: &[f64], y: &[f64], cfg: &KernelConfig) -> Result<f64> {
    Ok(2.0 * (1.0 - gaussian_kernel(x, y, cfg)?))
}

/// Mean kernel value over the product `P × Q`.
pub fn kappa(p: &Points, q: &Points, cfg: &KernelConfig) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Empty("point set"));
    }
    check_dim(p.dim(), q.dim())?;
    let mut total = 0.0;
    for x in p.rows() {
        for y in q.rows() {
            total += cfg.kernel_of_sq(sq_dist(x, y));
        }
    }
    Ok(total / (p.n() * q.n()) as f64)
}

/// Kernel weights `w(p) = -D_K^2(mu, p)` of every point of `points`, computed
/// from pairwise squared kernel distances.
pub fn kernel_weights(points: &Points, cfg: &KernelConfig) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    Ok(weights_from_sq_dists(points.n(), |i, j| {
        2.0 * (1.0 - cfg.kernel_of_sq(sq_dist(points.row(i), points.row(j))))
    }))
}

/// `w(i) = -(mean_j d2(i, j) - grand_mean(d2) / 2)` for a symmetric squared
/// distance with zero diagonal.
pub(crate) fn weights_from_sq_dists(n: usize, d2: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut row_sums = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = d2(i, j);
            row_sums[i] += d;
            row_sums[j] += d;
        }
    }
    let nf = n as f64;
    let grand = row_sums.iter().sum::<f64>() / (nf * nf);
    row_sums
        .iter()
        .map(|s| -(s / nf - 0.5 * grand))
        .collect()
}

/// Symmetric matrix of kernel values `K(p_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// The principal submatrix on `indices`, row-major.
    pub fn submatrix(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * indices.len());
        for &i in indices {
            for &j in indices {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

pub fn gram(points: &Points, cfg: &KernelConfig) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let n = points.n();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let k = cfg.kernel_of_sq(sq_dist(points.row(i), points.row(j)));
            entries[i * n + j] = k;
            entries[j * n + i] = k;
        }
    }
    Ok(GramMatrix { n, entries })
}

/// Points together with their kernel weights under the uniform empirical
/// measure. Weights are computed here and nowhere else, since they depend on
/// the whole set.
#[derive(Debug, Clone)]
pub struct WeightedPointCloud {
    points: Points,
    weights: Vec<f64>,
    config: KernelConfig,
}

impl WeightedPointCloud {
    pub fn new(points: Points, config: KernelConfig) -> Result<Self> {
        let weights = kernel_weights(&points, &config)?;
        Ok(WeightedPointCloud {
            points,
            weights,
            config,
        })
    }

    /// Accepts externally supplied weights after checking them against a
    /// fresh computation.
    pub fn with_weights(points: Points, weights: Vec<f64>, config: KernelConfig) -> Result<Self> {
        let fresh = kernel_weights(&points, &config)?;
        check_dim(fresh.len(), weights.len())?;
        for (i, (a, b)) in fresh.iter().zip(&weights).enumerate() {
            if (a - b).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "weight {i} is stale: supplied {b}, expected {a}"
                )));
            }
        }
        Ok(WeightedPointCloud {
            points,
            weights: fresh,
            config,
        })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.points.n()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn gram(&self) -> GramMatrix {
        gram(&self.points, &self.config).expect("cloud is nonempty")
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            })
        }
    }
}

/// `D_K^2(mu, delta_x) = kappa(P, P) + 1 - 2 kappa(P, {x})`.
pub fn dist_to_measure_sq(x: &[f64], cloud: &WeightedPointCloud) -> Result<f64> {
    check_dim(cloud.dim(), x.len())?;
    let query = Points::from_flat(x.to_vec(), x.len())?;
    let self_sim = kappa(cloud.points(), cloud.points(), cloud.config())?;
    let cross = kappa(cloud.points(), &query, cloud.config())?;
    Ok((self_sim + 1.0 - 2.0 * cross).max(0.0))
}

/// Power distance `D_K^2(p_i, p_j) - w(p_i) - w(p_j)` between two weighted
/// points of the cloud.
pub fn power_distance(i: usize, j: usize, cloud: &WeightedPointCloud) -> Result<f64> {
    cloud.check_index(i)?;
    cloud.check_index(j)?;
    let d2 = if i == j {
        0.0
    } else {
        kernel_distance_sq(cloud.points.row(i), cloud.points.row(j), &cloud.config)?
    };
    Ok(d2 - cloud.weights[i] - cloud.weights[j])
}

/// The full `n × n` power distance matrix, row-major.
pub fn power_distance_matrix(cloud: &WeightedPointCloud) -> Vec<f64> {
    let n = cloud.n();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = power_distance(i, j, cloud).expect("indices in range");
        }
    }
    out
}

/// Value of the Gaussian kernel power distance at `x` together with the
/// index of the minimizing point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkpdValue {
    pub value: f64,
    pub argmin: usize,
}

/// `f(x)^2 = min_p (D_K^2(x, p) - w(p))`.
pub fn gkpd_eval(x: &[f64], cloud: &WeightedPointCloud) -> Result<GkpdValue> {
    check_dim(cloud.dim(), x.len())?;
    let mut best = GkpdValue {
        value: f64::INFINITY,
        argmin: 0,
    };
    for (i, p) in cloud.points.rows().enumerate() {
        let v = kernel_distance_sq(x, p, &cloud.config)? - cloud.weights[i];
        if v < best.value {
            best = GkpdValue { value: v, argmin: i };
        }
    }
    Ok(best)
}
