mod common;

use proptest::prelude::*;
use wdn_estim::ingest::{parse_inp, write_inp, GraphOptions};
use wdn_estim::Graph;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn written_networks_parse_back(g in common::arb_network()) {
        let text = write_inp(&g);
        let inp = parse_inp(&text).unwrap();
        prop_assert!(inp.warnings.is_empty(), "{:?}", inp.warnings);
        let (back, warnings): (Graph, _) = inp.to_graph(&GraphOptions::default()).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(back.node_count(), g.node_count());
        prop_assert_eq!(back.edge_count(), g.edge_count());
        // INP groups junctions before reservoirs; nodes match by id.
        for a in g.nodes() {
            let b = &back.nodes()[back.node_idx(&a.id).unwrap()];
            prop_assert_eq!(a.kind, b.kind);
            prop_assert!(close(a.elevation, b.elevation));
        }
        for (a, b) in g.edges().iter().zip(back.edges()) {
            prop_assert_eq!(&a.id, &b.id);
            prop_assert_eq!(&g.nodes()[a.source].id, &back.nodes()[b.source].id);
            prop_assert_eq!(&g.nodes()[a.sink].id, &back.nodes()[b.sink].id);
            prop_assert!(close(a.length, b.length));
            prop_assert!(close(a.roughness, b.roughness));
            prop_assert!(close(a.diameter, b.diameter));
        }
        // Writing is a fixed point after one pass.
        prop_assert_eq!(write_inp(&back), text);
    }
}

#[test]
fn tolerates_crlf_tabs_and_comments() {
    let text = "[TITLE]\r\ndemo\r\n[JUNCTIONS]\r\n;ID\tElev\r\n J1\t10.5 ; note\r\n\r\n[RESERVOIRS]\r\nR1   50\r\n[PIPES]\r\nP1 R1 J1 100 300 120 0 Open\r\n[OPTIONS]\r\nUnits LPS\r\n[END]\r\n";
    let inp = parse_inp(text).unwrap();
    let (g, _): (Graph, _) = inp.to_graph(&GraphOptions::default()).unwrap();
    assert_eq!(g.node_count(), 2);
    assert_eq!(g.edges()[0].diameter, 0.3);
    assert_eq!(g.nodes()[g.node_idx("J1").unwrap()].elevation, 10.5);
}
