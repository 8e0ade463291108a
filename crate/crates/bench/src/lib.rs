//! Benchmarks for the numerical kernels of `cdma-core`; see `benches/`.
