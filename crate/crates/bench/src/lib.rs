//! Criterion benchmarks for the `tailtrend` estimators; see `benches/`.
