//! Criterion benchmarks for the correction engine and the mechanism; see `benches/`.
