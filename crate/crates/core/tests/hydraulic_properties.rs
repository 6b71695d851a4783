mod common;

use std::collections::BTreeMap;

use nalgebra::DVector;
use proptest::prelude::*;
use wdn_estim::graph::{pressure_incidence, resistance_coefficients, NodeKind};
use wdn_estim::hydraulics::{
    flows_from_heads, head_loss_residual, mass_balance_residual, solve_steady_state, Scenario, SolverOptions,
};
use wdn_estim::Graph;

fn scenario(g: &Graph, demands: &[f64]) -> Scenario {
    let fixed_heads: BTreeMap<String, f64> = g
        .inlets()
        .map(|i| (g.nodes()[i].id.clone(), g.nodes()[i].elevation))
        .collect();
    let demands = g
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Junction)
        .zip(demands.iter().cycle())
        .map(|(n, &d)| (n.id.clone(), d))
        .collect();
    Scenario {
        demands,
        fixed_heads,
        leak: None,
        noise: Default::default(),
        seed: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn converged_solves_are_sound(
        g in common::arb_network(),
        demands in prop::collection::vec(0.0f64..2e-3, 30),
    ) {
        let sc = scenario(&g, &demands);
        let state = solve_steady_state(&g, &sc, &SolverOptions::default()).unwrap();
        let (fixed, d) = sc.resolve(&g).unwrap();
        prop_assert!(mass_balance_residual(&g, &state, &fixed, &d) <= 1e-8);
        let tau = resistance_coefficients(&g).unwrap();
        prop_assert!(head_loss_residual(&g, &tau, &state) <= 1e-8);

        let b = pressure_incidence(&g, &state.heads).unwrap();
        let q = flows_from_heads(&tau, &b, &state.heads).unwrap();
        let scale = state.flows.amax().max(1e-12);
        let diff = &q - &state.flows;
        let k = diff.iamax();
        prop_assert!(diff.amax() <= 1e-6 * scale, "k={} q={} solver={} scale={} dh={}", k, q[k], state.flows[k], scale, (&b * &state.heads)[k]);
    }

    #[test]
    fn more_demand_never_raises_local_head(
        g in common::arb_network(),
        demands in prop::collection::vec(1e-5f64..1e-3, 30),
        pick in any::<prop::sample::Index>(),
        extra in 1e-4f64..2e-3,
    ) {
        let base = scenario(&g, &demands);
        let junctions: Vec<String> = base.demands.keys().cloned().collect();
        let id = pick.get(&junctions).clone();
        let mut bumped = base.clone();
        *bumped.demands.get_mut(&id).unwrap() += extra;

        let opts = SolverOptions::default();
        let h0 = solve_steady_state(&g, &base, &opts).unwrap().heads;
        let h1 = solve_steady_state(&g, &bumped, &opts).unwrap().heads;
        let i = g.node_idx(&id).unwrap();
        prop_assert!(h1[i] <= h0[i] + 1e-9);
    }
}

#[test]
fn zero_flow_network_is_flat() {
    let g = common::network(12, 4, 3);
    let state = solve_steady_state(&g, &scenario(&g, &[0.0]), &SolverOptions::default()).unwrap();
    // Both inlets share the same head, so nothing moves.
    let top = g.nodes()[g.inlets().next().unwrap()].elevation;
    assert!((&state.heads - DVector::from_element(12, top)).amax() < 1e-9);
    assert!(state.flows.amax() < 1e-9);
}
