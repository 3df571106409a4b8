//! Sparse Johnson–Lindenstrauss embeddings.
//!
//! The crate samples block-structured sparse embedding matrices (one `±1/√s`
//! entry per block of `m/s` rows in every column), plans their dimensions
//! with a sparsity that depends on both the number of points and the ambient
//! dimension, and ships the tooling needed to check them empirically:
//! distortion reports, Monte Carlo success rates, head/tail diagnostics,
//! subspace embeddings with sketch-and-solve regression, and lower-bound
//! hard instances.
//!
//! ```
//! use sparsejl::{plan_jl, Constants, SparseJlMatrix, SparseVector};
//!
//! let plan = plan_jl(1 << 20, 1 << 10, 0.1, Constants::default()).unwrap();
//! let a = SparseJlMatrix::sample(plan.m, 1 << 10, plan.s, 42).unwrap();
//! let y = a.apply_sparse(&SparseVector::basis(1 << 10, 7).unwrap()).unwrap();
//! assert_eq!(y.iter().filter(|v| **v != 0.0).count(), plan.s);
//! ```

pub mod diagnostics;
pub mod error;
pub mod hardness;
pub mod io;
pub mod linalg;
pub mod params;
pub mod rng;
pub mod sketch;
pub mod subspace;
pub mod vectors;

pub use diagnostics::{distortion, monte_carlo_success, DistortionReport, PairMode, WellBehavedReport};
pub use error::{Error, Result};
pub use hardness::HardInstance;
pub use linalg::DenseMatrix;
pub use params::{calibrate_constants, plan_jl, plan_subspace, Constants, EmbeddingPlan, Scenario, SubspacePlan};
pub use sketch::{MatrixHeader, SparseJlMatrix};
pub use subspace::{HalfNet, SubspaceBasis};
pub use vectors::{Dataset, SparseVector, SplitVector};
