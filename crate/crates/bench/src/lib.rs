//! Criterion benchmarks for the `racah` pipeline; see `benches/pipeline.rs`.
