//! Shared fixtures for the benchmarks under `benches/`.
use stabledt::{make_target, random_dt_target, BoolFn};

/// Tree-structured target of size `s` on `n` variables.
pub fn dt_target(n: usize, s: usize) -> BoolFn {
    random_dt_target(n, s, 17).expect("size fits the cube").f
}

pub fn parity(n: usize) -> BoolFn {
    make_target(&"parity:1,2".parse().expect("valid spec"), n).expect("n within cap")
}
