//! Gaussian kernel power distance persistence with random Fourier feature
//! reduction and a multiplicative interleaving certificate.
//!
//! The crate builds weighted Čech filtrations in two geometries: the kernel
//! feature space (through the Gram matrix) and the explicit image of a random
//! Fourier feature map with weights recomputed there. Diagrams of both are
//! compared on the squared-radius scale.

pub mod compare;
pub mod error;
pub mod filtration;
pub mod harness;
pub mod kernel;
pub mod meb;
pub mod persistence;
pub mod pipeline;
pub mod points;
pub mod rff;
pub mod seed;

pub use compare::{
    bottleneck, bottleneck_matching, certify_interleaving, multiplicative_factor, BottleneckMatching,
    InterleavingCertificate, MatchEdge, DEFAULT_SLACK,
};
pub use error::{Error, Result};
pub use filtration::{
    assert_monotone, build_filtration, EuclideanGeometry, FilteredComplex, FiltrationMode,
    GkpdGeometry, PowerGeometry, Simplex,
};
pub use harness::{betti_oracle, generate, read_points_csv, write_points_csv, DatasetKind, DatasetSpec};
pub use kernel::{
    dist_to_measure_sq, gaussian_kernel, gkpd_eval, gram, kappa, kernel_distance_sq,
    kernel_weights, power_distance, power_distance_matrix, GkpdValue, GramMatrix, KernelConfig,
    WeightedPointCloud,
};
pub use meb::{meb_coordinates, meb_gram, MebSolution, MebSolver};
pub use persistence::{compute_persistence, PersistenceDiagram, PersistencePair};
pub use pipeline::{run_pipeline, DimensionChoice, PipelineConfig, PipelineOutput};
pub use points::Points;
pub use rff::{
    apply_rff, distortion_report, recompute_weights, sample_rff, target_dimension,
    DimensionMode, DistortionReport, RffMap, TargetDimensionRequest,
};
pub use seed::{derive_seed, SeededRng, Stream};
