//! Criterion benchmarks for `glmsel`; see `benches/`.
