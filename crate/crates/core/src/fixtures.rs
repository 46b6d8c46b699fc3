//! Built-in graphs and perturbation families used by the CLI, the tests and
//! the benches.

use crate::graph::{validate_graph, MetricGraph, PerturbationFamily, PerturbationMode, RawEdge, RawGraph, RawLead};

fn build(vertices: &[&str], edges: &[(&str, &str, &str, f64)], leads: &[(&str, &str)]) -> MetricGraph {
    let raw = RawGraph {
        vertices: vertices.iter().map(|s| s.to_string()).collect(),
        edges: edges
            .iter()
            .map(|(id, a, b, l)| RawEdge { id: id.to_string(), ends: [a.to_string(), b.to_string()], length: *l })
            .collect(),
        leads: leads.iter().map(|(id, v)| RawLead { id: id.to_string(), vertex: v.to_string() }).collect(),
    };
    validate_graph(&raw).expect("fixture graphs are valid")
}

/// Cycle of `k ≥ 2` unit edges with one lead per vertex. Edge `e_{k+j}` runs
/// from `v_j` to `v_{j+1}` (cyclically); lead `e_j` sits at `v_j`.
pub fn cycle(k: usize) -> Option<MetricGraph> {
    if k < 2 {
        return None;
    }
    let vertices: Vec<String> = (1..=k).map(|j| format!("v{j}")).collect();
    let raw = RawGraph {
        vertices: vertices.clone(),
        edges: (0..k)
            .map(|j| RawEdge {
                id: format!("e{}", k + j + 1),
                ends: [vertices[j].clone(), vertices[(j + 1) % k].clone()],
                length: 1.0,
            })
            .collect(),
        leads: (0..k).map(|j| RawLead { id: format!("e{}", j + 1), vertex: vertices[j].clone() }).collect(),
    };
    validate_graph(&raw).ok()
}

/// Two unit edges `e3`, `e4` joining `v1` and `v2`, leads `e1@v1`, `e2@v2`.
pub fn fig2() -> MetricGraph {
    cycle(2).expect("two-cycle")
}

/// Five unit edges on four vertices with leads at `v1` and `v2`:
/// `e3: v1→v3`, `e4: v2→v3`, `e5: v2→v4`, `e6: v1→v4`, `e7: v4→v3`.
pub fn example2() -> MetricGraph {
    build(
        &["v1", "v2", "v3", "v4"],
        &[
            ("e3", "v1", "v3", 1.0),
            ("e4", "v2", "v3", 1.0),
            ("e5", "v2", "v4", 1.0),
            ("e6", "v1", "v4", 1.0),
            ("e7", "v4", "v3", 1.0),
        ],
        &[("e1", "v1"), ("e2", "v2")],
    )
}

/// A single lead on one vertex.
pub fn halfline() -> MetricGraph {
    build(&["v1"], &[], &[("e1", "v1")])
}

/// One edge of length `length` with Neumann ends.
pub fn interval(length: f64) -> MetricGraph {
    build(&["v1", "v2"], &[("e1", "v1", "v2", length)], &[])
}

/// Two leads joined through one edge of length `length`.
pub fn line_through_edge(length: f64) -> MetricGraph {
    build(&["v1", "v2"], &[("e3", "v1", "v2", length)], &[("e1", "v1"), ("e2", "v2")])
}

/// Smallest nonzero root of `tan λ + 2 tan(λ/2) = 0`, namely `2 arctan √2`.
pub fn example2_lambda0() -> f64 {
    2.0 * 2f64.sqrt().atan()
}

/// Length-mode families (a)–(d) on the two-cycle.
pub fn fig2_family(g: &MetricGraph, case: char) -> PerturbationFamily {
    let e4: &[f64] = match case {
        'a' => &[1.0, -1.0],
        'b' => &[1.0],
        'c' => &[1.0, 1.0],
        'd' => &[1.0, 2.0],
        _ => panic!("unknown two-cycle family `{case}`"),
    };
    PerturbationFamily::from_entries(g, PerturbationMode::Length, &[("e3", &[1.0, -1.0]), ("e4", e4)])
        .expect("two-cycle family")
}

/// Length-mode families (a)–(c) on the five-edge graph: `ℓ_3 = 1−t`,
/// `ℓ_4 = 1+t`, `ℓ_5 = 1−t`, `ℓ_6 = 1+t` and `ℓ_7 ∈ {1, 1+t/2, 1+t}`.
pub fn fig3_family(g: &MetricGraph, case: char) -> PerturbationFamily {
    let e7: &[f64] = match case {
        'a' => &[1.0],
        'b' => &[1.0, 0.5],
        'c' => &[1.0, 1.0],
        _ => panic!("unknown five-edge family `{case}`"),
    };
    PerturbationFamily::from_entries(
        g,
        PerturbationMode::Length,
        &[("e3", &[1.0, -1.0]), ("e4", &[1.0, 1.0]), ("e5", &[1.0, -1.0]), ("e6", &[1.0, 1.0]), ("e7", e7)],
    )
    .expect("five-edge family")
}

/// Parses fixture names accepted by the CLI: `fig2`, `example2`, `halfline`,
/// `cycle:K`.
pub fn by_name(name: &str) -> Option<MetricGraph> {
    match name {
        "fig2" => Some(fig2()),
        "example2" => Some(example2()),
        "halfline" => Some(halfline()),
        _ => name.strip_prefix("cycle:").and_then(|k| k.parse().ok()).and_then(cycle),
    }
}

/// Named perturbation family for a fixture, e.g. `fig2` + `b`.
pub fn family_by_name(fixture: &str, g: &MetricGraph, case: char) -> Option<PerturbationFamily> {
    match (fixture, case) {
        ("fig2", 'a'..='d') => Some(fig2_family(g, case)),
        ("example2", 'a'..='c') => Some(fig3_family(g, case)),
        _ => None,
    }
}
