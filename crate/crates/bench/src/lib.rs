//! Criterion benchmarks for the ltbound kernels; see `benches/`.
