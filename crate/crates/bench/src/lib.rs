//! Criterion benchmarks for the closed-form flow and the way-in/way-out map; see `benches/`.
