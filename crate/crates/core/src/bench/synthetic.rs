//! Seeded synthetic networks, sensor layouts and leak scenarios.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{NetworkGraph, Node, NodeKind, Pipe, SensorLayout};
use crate::hydraulics::{Leak, NoiseLevels, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSpec {
    pub nodes: usize,
    /// Target edge count; the spanning tree uses `nodes - 1` of them.
    pub edges: usize,
    pub inlets: usize,
    pub inlet_head: f64,
    /// Side of the square the nodes are scattered over (m).
    pub extent: f64,
    pub seed: u64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            nodes: 200,
            edges: 260,
            inlets: 2,
            inlet_head: 76.0,
            extent: 1000.0,
            seed: 7,
        }
    }
}

/// Random geometric network: Euclidean minimum spanning tree plus the
/// shortest remaining node pairs. Inlets sit near opposite corners.
pub fn synthetic_network(spec: &NetworkSpec) -> Result<NetworkGraph<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.nodes.max(2);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random::<f64>() * spec.extent, rng.random::<f64>() * spec.extent))
        .collect();
    let dist = |a: usize, b: usize| ((pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2)).sqrt();

    // Prim on the complete graph.
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(spec.edges);
    in_tree[0] = true;
    for j in 1..n {
        best[j] = (dist(0, j), 0);
    }
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .expect("a node outside the tree");
        in_tree[next] = true;
        pairs.push((best[next].1, next));
        for j in 0..n {
            if !in_tree[j] {
                let d = dist(next, j);
                if d < best[j].0 {
                    best[j] = (d, next);
                }
            }
        }
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            candidates.push((dist(a, b), a, b));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used: std::collections::HashSet<(usize, usize)> =
        pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    for (_, a, b) in candidates {
        if pairs.len() >= spec.edges {
            break;
        }
        if used.insert((a, b)) {
            pairs.push((a, b));
        }
    }

    let corners = [(0.0, 0.0), (spec.extent, spec.extent), (0.0, spec.extent), (spec.extent, 0.0)];
    let mut inlets = Vec::new();
    for c in corners.iter().cycle().take(spec.inlets.max(1)) {
        let i = (0..n)
            .filter(|i| !inlets.contains(i))
            .min_by(|&a, &b| {
                let da = (pts[a].0 - c.0).powi(2) + (pts[a].1 - c.1).powi(2);
                let db = (pts[b].0 - c.0).powi(2) + (pts[b].1 - c.1).powi(2);
                da.total_cmp(&db)
            })
            .expect("enough nodes for the inlets");
        inlets.push(i);
    }

    let nodes = (0..n)
        .map(|i| {
            let id = format!("n{i}");
            if inlets.contains(&i) {
                Node::inlet(id, spec.inlet_head)
            } else {
                let slope = (pts[i].0 + pts[i].1) / (2.0 * spec.extent);
                Node::junction(id, 16.0 + 24.0 * slope + 8.0 * rng.random::<f64>())
            }
        })
        .collect();
    let diameters = [0.1, 0.125, 0.15, 0.2, 0.25, 0.3];
    let pipes = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let d = diameters[rng.random_range(0..diameters.len())];
            let c = rng.random_range(100.0..140.0);
            let length = dist(a, b).max(10.0);
            Pipe::new(format!("p{k}"), format!("n{a}"), format!("n{b}"), length, c, d)
        })
        .collect();
    NetworkGraph::new(nodes, pipes)
}

/// Fractions of junctions (pressure, AMR) and pipes (flow) carrying sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutSpec {
    pub pressure: f64,
    pub amr: f64,
    pub flow: f64,
    pub seed: u64,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        LayoutSpec {
            pressure: 0.10,
            amr: 0.15,
            flow: 0.02,
            seed: 11,
        }
    }
}

/// Pressure sensors by farthest-point sampling over hop distance (seeded
/// start), AMRs and flow meters uniformly at random. Inlets carry none.
pub fn synthetic_layout(graph: &NetworkGraph<f64>, spec: &LayoutSpec) -> Result<SensorLayout> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = graph.node_count();
    let junctions: Vec<usize> = (0..n).filter(|&i| graph.nodes()[i].kind == NodeKind::Junction).collect();
    let count = |f: f64, total: usize| ((f * total as f64).round() as usize).clamp(0, total);
    let n_s = count(spec.pressure, n).max(1).min(junctions.len());
    let n_a = count(spec.amr, n).min(junctions.len());
    let n_q = count(spec.flow, graph.edge_count());

    let adj = graph.adjacency_lists();
    let hops = |from: usize| {
        let mut d = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::from([from]);
        d[from] = 0;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &adj[i] {
                if d[j] == usize::MAX {
                    d[j] = d[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        d
    };
    let mut nearest: Vec<usize> = vec![usize::MAX; n];
    for i in graph.inlets() {
        for (m, d) in nearest.iter_mut().zip(hops(i)) {
            *m = (*m).min(d);
        }
    }
    let mut pressure = vec![junctions[rng.random_range(0..junctions.len())]];
    while pressure.len() < n_s {
        for (m, d) in nearest.iter_mut().zip(hops(*pressure.last().unwrap())) {
            *m = (*m).min(d);
        }
        let next = junctions
            .iter()
            .copied()
            .filter(|j| !pressure.contains(j))
            .max_by_key(|&j| (nearest[j], std::cmp::Reverse(j)))
            .expect("enough junctions");
        pressure.push(next);
    }

    let mut pool = junctions.clone();
    pool.shuffle(&mut rng);
    let amr: Vec<usize> = pool.into_iter().take(n_a).collect();
    let mut edges: Vec<usize> = (0..graph.edge_count()).collect();
    edges.shuffle(&mut rng);
    let flow: Vec<usize> = edges.into_iter().take(n_q).collect();

    let node_ids = |v: &[usize]| v.iter().map(|&i| graph.nodes()[i].id.clone()).collect::<Vec<_>>();
    let edge_ids: Vec<String> = flow.iter().map(|&k| graph.edges()[k].id.clone()).collect();
    SensorLayout::new(graph, &node_ids(&pressure), &node_ids(&amr), &edge_ids)
}

/// Demand, leak and noise ranges of the synthetic scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    /// Base junction demand range (m³/s).
    pub base_demand: (f64, f64),
    /// Scenario-wide demand multiplier range.
    pub multiplier: (f64, f64),
    /// Per-junction jitter on top of the multiplier.
    pub jitter: f64,
    /// Leak magnitude range (m³/s).
    pub leak: (f64, f64),
    pub noise: NoiseLevels,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            base_demand: (5e-5, 3e-4),
            multiplier: (0.8, 1.2),
            jitter: 0.1,
            leak: (2e-3, 5e-3),
            noise: NoiseLevels {
                pressure: 0.01,
                amr: 1e-5,
                flow: 1e-4,
            },
        }
    }
}

/// `count` scenarios with seeds `seed, seed + 1, ...`. Base demands depend
/// only on `seed`; leaks never sit on a sensed node.
pub fn synthetic_scenarios(
    graph: &NetworkGraph<f64>,
    layout: &SensorLayout,
    spec: &ScenarioSpec,
    count: usize,
    seed: u64,
) -> Vec<Scenario> {
    let junctions: Vec<usize> = (0..graph.node_count())
        .filter(|&i| graph.nodes()[i].kind == NodeKind::Junction)
        .collect();
    let mut base_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba5e);
    let base: Vec<f64> = junctions
        .iter()
        .map(|_| base_rng.random_range(spec.base_demand.0..=spec.base_demand.1))
        .collect();
    let leak_sites: Vec<usize> = junctions
        .iter()
        .copied()
        .filter(|i| !layout.pressure().contains(i) && !layout.amr().contains(i))
        .collect();
    let fixed_heads: BTreeMap<String, f64> = graph
        .inlets()
        .map(|i| (graph.nodes()[i].id.clone(), graph.nodes()[i].elevation))
        .collect();

    (0..count as u64)
        .map(|s| {
            let scenario_seed = seed + s;
            let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed);
            let m = rng.random_range(spec.multiplier.0..=spec.multiplier.1);
            let demands = junctions
                .iter()
                .zip(&base)
                .map(|(&i, &b)| {
                    let j = 1.0 + spec.jitter * (2.0 * rng.random::<f64>() - 1.0);
                    (graph.nodes()[i].id.clone(), b * m * j)
                })
                .collect();
            let leak = (!leak_sites.is_empty()).then(|| Leak {
                node: graph.nodes()[leak_sites[rng.random_range(0..leak_sites.len())]].id.clone(),
                emitter: rng.random_range(spec.leak.0..=spec.leak.1),
            });
            Scenario {
                demands,
                fixed_heads: fixed_heads.clone(),
                leak,
                noise: spec.noise,
                seed: scenario_seed,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_network_shape() {
        let g = synthetic_network(&NetworkSpec::default()).unwrap();
        assert_eq!(g.node_count(), 200);
        assert_eq!(g.edge_count(), 260);
        assert_eq!(g.inlets().count(), 2);
        let l = synthetic_layout(&g, &LayoutSpec::default()).unwrap();
        assert_eq!((l.n_s(), l.n_a(), l.n_q()), (20, 30, 5));
        assert!(l.pressure().iter().all(|&i| g.nodes()[i].kind == NodeKind::Junction));
    }

    #[test]
    fn seeded_and_reproducible() {
        let spec = NetworkSpec {
            nodes: 40,
            edges: 50,
            ..Default::default()
        };
        assert_eq!(synthetic_network(&spec).unwrap(), synthetic_network(&spec).unwrap());
        let g = synthetic_network(&spec).unwrap();
        let l = synthetic_layout(&g, &LayoutSpec::default()).unwrap();
        let a = synthetic_scenarios(&g, &l, &ScenarioSpec::default(), 3, 100);
        let b = synthetic_scenarios(&g, &l, &ScenarioSpec::default(), 3, 100);
        assert_eq!(a, b);
        assert_eq!(a[2].seed, 102);
        let leak = a[0].leak.as_ref().unwrap();
        let i = g.node_idx(&leak.node).unwrap();
        assert!(!l.pressure().contains(&i) && !l.amr().contains(&i));
    }
}
