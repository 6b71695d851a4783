#![allow(dead_code)]

use proptest::prelude::*;
use wdn_estim::bench::synthetic::{synthetic_network, synthetic_layout, LayoutSpec, NetworkSpec};
use wdn_estim::{Graph, Layout};

/// Random connected geometric network with 2 inlets.
pub fn network(nodes: usize, extra: usize, seed: u64) -> Graph {
    synthetic_network(&NetworkSpec {
        nodes,
        edges: nodes - 1 + extra,
        seed,
        extent: 20.0 * nodes as f64,
        ..Default::default()
    })
    .unwrap()
}

pub fn layout(graph: &Graph, seed: u64) -> Layout {
    synthetic_layout(
        graph,
        &LayoutSpec {
            pressure: 0.25,
            amr: 0.25,
            flow: 0.1,
            seed,
        },
    )
    .unwrap()
}

pub fn arb_network() -> impl Strategy<Value = Graph> {
    (4usize..30, 0usize..12, any::<u64>()).prop_map(|(n, extra, seed)| network(n, extra, seed))
}
