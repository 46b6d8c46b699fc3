//! Workloads shared by the benchmarks.

use qgres_core::Complex64;
use qgres_core::{fixtures, MetricGraph, Window};

/// Graphs of increasing size: the two-cycle, the five-edge example and a
/// ten-vertex cycle.
pub fn graphs() -> Vec<(&'static str, MetricGraph)> {
    vec![
        ("fig2", fixtures::fig2()),
        ("example2", fixtures::example2()),
        ("cycle10", fixtures::cycle(10).expect("k >= 2")),
    ]
}

/// A generic complex frequency away from every spectral point used above.
pub fn probe() -> Complex64 {
    Complex64::new(2.345, -0.123)
}

pub fn search_window() -> Window {
    Window::new(1.0, 7.0, -0.5, 0.5).expect("valid window")
}
