//! Benchmarks for the wall operator and cell solvers; see `benches/`.
