//! Criterion benchmarks for the handoff pipeline live in `benches/`.
