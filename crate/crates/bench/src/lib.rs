//! Criterion benchmarks for `harq-csi`; see `benches/throughput.rs`.
