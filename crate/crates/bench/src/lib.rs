//! Fixtures shared by the benchmarks.

use gkpd::{generate, DatasetKind, DatasetSpec, KernelConfig, Points, WeightedPointCloud};

/// Noisy circle of `n` points with a few outliers, embedded in `dim` dimensions.
pub fn circle(n: usize, dim: usize, seed: u64) -> Points {
    let spec = DatasetSpec::new(DatasetKind::CircleWithOutliers, n, dim, seed)
        .with_noise(0.05)
        .with_outliers((n / 8).max(1));
    generate(&spec).expect("valid dataset spec")
}

pub fn cloud(n: usize, dim: usize, sigma: f64) -> WeightedPointCloud {
    let cfg = KernelConfig::new(sigma).expect("positive sigma");
    WeightedPointCloud::new(circle(n, dim, 1), cfg).expect("nonempty cloud")
}
