//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use qnls_core::model::{gaussian_bump, RadialField, RadialGrid};

pub fn bench_grid(n: usize) -> Arc<RadialGrid> {
    RadialGrid::build(3, 40.0, n).expect("bench grid")
}

pub fn bench_field(n: usize) -> RadialField {
    let grid = bench_grid(n);
    gaussian_bump(&grid, 3.0, 300.0).expect("bench field")
}
