//! Criterion benchmarks for the engine simulator; see `benches/`.
