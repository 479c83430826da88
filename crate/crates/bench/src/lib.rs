//! Benchmarks for the nlrq solvers live in `benches/`.
