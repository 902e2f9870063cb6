//! Content-adaptive lossy point cloud geometry codec.
//!
//! A cloud is split into a losslessly coded, downsampled *base* cloud and the
//! *interpolation patterns* needed to reverse the downsampling. The patterns
//! are not transmitted directly: a tiny one-hidden-layer network is overfitted
//! to predict them from local neighbor occupancy, and its quantized weights
//! travel as side information instead. The decoder reconstructs the base
//! cloud, runs the network once (twice for deeper downsampling factors), and
//! finishes with plain coordinate doubling when further scale is needed.
//!
//! Module map:
//!
//! - [`cloud`] / [`patterns`] / [`features`]: voxel cloud representation,
//!   2x downsampling, pattern extraction/application, neighbor occupancy.
//! - [`srnet`]: the MLP, its analytic gradients, and the Adam training loop.
//! - [`lut`]: per-feature-key majority-vote predictor, used as a reference
//!   bound on what any predictor over the same features can achieve.
//! - [`octree`] / [`range_coder`]: the lossless base-layer coder.
//! - [`container`]: the `.lsrn` container and binary16 parameter payload.
//! - [`pipeline`]: end-to-end encode/decode orchestration.
//! - [`metrics`]: D1 PSNR, bits per point, BD-rate.
//! - [`synth`]: deterministic synthetic clouds for tests and demos.

pub mod cloud;
pub mod container;
pub mod error;
pub mod features;
pub mod lut;
pub mod metrics;
pub mod octree;
pub mod patterns;
pub mod pipeline;
pub mod range_coder;
pub mod rng;
pub mod srnet;
pub mod synth;

pub use cloud::VoxelCloud;
pub use container::Header;
pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use patterns::InterpolationPatterns;
pub use pipeline::EncodeSettings;
pub use srnet::{MlpParams, TrainConfig};
