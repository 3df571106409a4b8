//! Shared fixtures for the benchmarks.

use sparsejl::params::plan_jl;
use sparsejl::vectors::standard_dataset;
use sparsejl::{Constants, Dataset, SparseJlMatrix};

/// Constants found by calibrating `n = 1000, d = 256, eps = 0.25` on seed 0.
pub const CALIBRATED: Constants = Constants { c_m: 8.0, c_s: 1.0 };

/// A planned matrix together with the standard dataset it is sized for.
pub struct Fixture {
    pub matrix: SparseJlMatrix,
    pub data: Dataset,
}

impl Fixture {
    pub fn new(n: usize, d: usize, eps: f64, seed: u64) -> Self {
        let plan = plan_jl(n as u64, d as u64, eps, CALIBRATED).expect("valid benchmark plan");
        Self {
            matrix: SparseJlMatrix::sample(plan.m, d, plan.s, seed).expect("valid benchmark shape"),
            data: standard_dataset(n, d, seed),
        }
    }
}
