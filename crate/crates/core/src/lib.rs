//! Voxel models of as-manufactured shapes under additive-manufacturing
//! resolution limits, and comparative topological analysis of the
//! differences between a designed and a manufactured solid.
//!
//! The pipeline, module by module:
//!
//! - [`voxel`]: binary grids, boolean algebra, structuring elements, slicing, I/O.
//! - [`measure`]: the overlap-measure field of the design against a displaced
//!   deposit shape, by FFT correlation with a brute-force twin.
//! - [`morphology`]: threshold motion sets, sweeps, the as-manufactured family
//!   and its two extremes, non-uniform threshold fields.
//! - [`cubical`]: closed cubical complexes, Euler characteristic, labeling, Betti numbers.
//! - [`cta`]: under/over-deposition features, cut boundaries, Euler
//!   characteristic contributions and the global ledger.
//! - [`correct`]: local threshold-field adjustment removing non-simple features.

pub mod correct;
pub mod cta;
pub mod cubical;
pub mod error;
pub mod lambda;
pub mod measure;
pub mod morphology;
pub mod voxel;

pub use error::{Error, ParseError, Result};
pub use lambda::Lambda;
pub use voxel::{Frame, VoxelGrid};

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;
