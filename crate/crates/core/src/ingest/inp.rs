//! EPANET INP subset.
//!
//! Read: `[JUNCTIONS]`, `[RESERVOIRS]`, `[PIPES]`, `[OPTIONS]` (units only).
//! Counted and skipped: `[TANKS]`, `[VALVES]`, `[PUMPS]`; pipes touching a
//! tank and closed pipes are dropped with a warning. Every other section is
//! ignored with a warning. Demands and patterns are not read.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{NetworkGraph, Node, NodeKind, Pipe};
use crate::scalar::{lit, to_f64, Scalar};

/// Length/diameter convention implied by the flow units option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnitSystem {
    /// m and mm.
    #[default]
    Si,
    /// ft and in.
    Us,
}

impl UnitSystem {
    fn from_flow_units(units: &str) -> Option<Self> {
        match units.to_ascii_uppercase().as_str() {
            "LPS" | "LPM" | "MLD" | "CMH" | "CMD" | "CMS" => Some(UnitSystem::Si),
            "CFS" | "GPM" | "MGD" | "IMGD" | "AFD" => Some(UnitSystem::Us),
            _ => None,
        }
    }

    fn length_to_m(self) -> f64 {
        match self {
            UnitSystem::Si => 1.0,
            UnitSystem::Us => 0.3048,
        }
    }

    fn diameter_to_m(self) -> f64 {
        match self {
            UnitSystem::Si => 1e-3,
            UnitSystem::Us => 0.0254,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpPipe {
    pub id: String,
    pub node1: String,
    pub node2: String,
    /// m
    pub length: f64,
    /// m
    pub diameter: f64,
    pub roughness: f64,
    pub line: usize,
}

/// Parsed file, in SI units, before graph construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InpNetwork {
    pub title: String,
    pub units: UnitSystem,
    /// `(id, elevation in m)`
    pub junctions: Vec<(String, f64)>,
    /// `(id, head in m)`
    pub reservoirs: Vec<(String, f64)>,
    pub tanks: Vec<String>,
    pub pipes: Vec<InpPipe>,
    /// Section name to number of skipped entries.
    pub skipped: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// Options for turning an [`InpNetwork`] into a graph.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GraphOptions {
    /// Remove reservoirs and make their neighbours inlets at this head.
    pub inlet_surgery: Option<f64>,
}

fn strip_comment(line: &str) -> &str {
    match line.find(';') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn number(token: &str, what: &str, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid {what} `{token}`"),
        })
}

fn need<'t>(fields: &[&'t str], n: usize, section: &str, line: usize) -> Result<()> {
    if fields.len() < n {
        return Err(Error::Parse {
            line,
            message: format!("{section} entry needs at least {n} fields, found {}", fields.len()),
        });
    }
    Ok(())
}

pub fn parse_inp(text: &str) -> Result<InpNetwork> {
    let mut net = InpNetwork::default();
    let mut section = String::new();
    let mut seen_sections = HashSet::new();
    let mut node_ids: HashMap<String, usize> = HashMap::new();
    let mut pipe_ids: HashSet<String> = HashSet::new();
    let mut raw_pipes: Vec<(Vec<String>, usize)> = Vec::new();
    let mut units: Option<String> = None;

    let mut add_node = |id: &str, line: usize| -> Result<()> {
        if node_ids.insert(id.to_string(), line).is_some() {
            return Err(Error::DuplicateId {
                kind: "node",
                id: id.to_string(),
            });
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if body.starts_with('[') {
            let name = body.trim_matches(|c| c == '[' || c == ']').trim().to_ascii_uppercase();
            seen_sections.insert(name.clone());
            section = name;
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match section.as_str() {
            "TITLE" => {
                if !net.title.is_empty() {
                    net.title.push('\n');
                }
                net.title.push_str(body);
            }
            "JUNCTIONS" => {
                need(&fields, 2, "junction", line)?;
                add_node(fields[0], line)?;
                net.junctions.push((fields[0].to_string(), number(fields[1], "elevation", line)?));
            }
            "RESERVOIRS" => {
                need(&fields, 2, "reservoir", line)?;
                add_node(fields[0], line)?;
                net.reservoirs.push((fields[0].to_string(), number(fields[1], "head", line)?));
            }
            "TANKS" => {
                need(&fields, 1, "tank", line)?;
                add_node(fields[0], line)?;
                net.tanks.push(fields[0].to_string());
                *net.skipped.entry("TANKS".into()).or_default() += 1;
            }
            "PIPES" => {
                need(&fields, 6, "pipe", line)?;
                if !pipe_ids.insert(fields[0].to_string()) {
                    return Err(Error::DuplicateId {
                        kind: "pipe",
                        id: fields[0].to_string(),
                    });
                }
                raw_pipes.push((fields.iter().map(|s| s.to_string()).collect(), line));
            }
            "VALVES" | "PUMPS" => {
                *net.skipped.entry(section.clone()).or_default() += 1;
            }
            "OPTIONS" => {
                if fields.len() >= 2 && fields[0].eq_ignore_ascii_case("UNITS") {
                    units = Some(fields[1].to_string());
                }
            }
            "" => {
                return Err(Error::Parse {
                    line,
                    message: "data before the first section header".into(),
                })
            }
            _ => {
                *net.skipped.entry(section.clone()).or_default() += 1;
            }
        }
    }

    for name in ["JUNCTIONS", "RESERVOIRS", "PIPES"] {
        if !seen_sections.contains(name) {
            return Err(Error::MissingSection(match name {
                "JUNCTIONS" => "JUNCTIONS",
                "RESERVOIRS" => "RESERVOIRS",
                _ => "PIPES",
            }));
        }
    }

    net.units = match units {
        None => UnitSystem::Si,
        Some(u) => UnitSystem::from_flow_units(&u).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unknown flow units `{u}`"),
        })?,
    };
    let (to_m, to_dm) = (net.units.length_to_m(), net.units.diameter_to_m());

    let tanks: HashSet<&str> = net.tanks.iter().map(String::as_str).collect();
    for (fields, line) in raw_pipes {
        for end in [&fields[1], &fields[2]] {
            if !node_ids.contains_key(end.as_str()) {
                return Err(Error::Parse {
                    line,
                    message: format!("pipe `{}` references unknown node `{end}`", fields[0]),
                });
            }
        }
        if fields.len() >= 8 && fields[7].eq_ignore_ascii_case("CLOSED") {
            net.warnings.push(format!("line {line}: closed pipe `{}` dropped", fields[0]));
            *net.skipped.entry("PIPES (closed)".into()).or_default() += 1;
            continue;
        }
        if tanks.contains(fields[1].as_str()) || tanks.contains(fields[2].as_str()) {
            net.warnings.push(format!("line {line}: pipe `{}` touches a tank and was dropped", fields[0]));
            *net.skipped.entry("PIPES (tank)".into()).or_default() += 1;
            continue;
        }
        net.pipes.push(InpPipe {
            id: fields[0].clone(),
            node1: fields[1].clone(),
            node2: fields[2].clone(),
            length: number(&fields[3], "length", line)? * to_m,
            diameter: number(&fields[4], "diameter", line)? * to_dm,
            roughness: number(&fields[5], "roughness", line)?,
            line,
        });
    }
    for (name, count) in &net.skipped {
        if !name.starts_with("PIPES") {
            net.warnings.push(format!("[{name}]: {count} entries skipped"));
        }
    }
    Ok(net)
}

impl InpNetwork {
    /// Builds the graph: junctions and reservoirs become nodes, and only the
    /// part connected to an inlet is kept. Returns the graph and warnings.
    pub fn to_graph<T: Scalar>(&self, options: &GraphOptions) -> Result<(NetworkGraph<T>, Vec<String>)> {
        let mut warnings = self.warnings.clone();
        let reservoirs: HashSet<&str> = self.reservoirs.iter().map(|r| r.0.as_str()).collect();

        let mut pipes: Vec<&InpPipe> = Vec::new();
        let mut pairs = HashSet::new();
        let mut new_inlets: HashSet<&str> = HashSet::new();
        for p in &self.pipes {
            if p.node1 == p.node2 {
                warnings.push(format!("line {}: self-loop pipe `{}` dropped", p.line, p.id));
                continue;
            }
            if options.inlet_surgery.is_some() {
                let (r1, r2) = (reservoirs.contains(p.node1.as_str()), reservoirs.contains(p.node2.as_str()));
                if r1 || r2 {
                    if !(r1 && r2) {
                        new_inlets.insert(if r1 { p.node2.as_str() } else { p.node1.as_str() });
                    }
                    continue;
                }
            }
            let key = if p.node1 < p.node2 {
                (p.node1.as_str(), p.node2.as_str())
            } else {
                (p.node2.as_str(), p.node1.as_str())
            };
            if !pairs.insert(key) {
                warnings.push(format!("line {}: parallel pipe `{}` dropped", p.line, p.id));
                continue;
            }
            pipes.push(p);
        }

        let mut nodes: Vec<Node<T>> = Vec::new();
        for (id, elevation) in &self.junctions {
            match options.inlet_surgery {
                Some(head) if new_inlets.contains(id.as_str()) => nodes.push(Node::inlet(id.clone(), lit(head))),
                _ => nodes.push(Node::junction(id.clone(), lit(*elevation))),
            }
        }
        if options.inlet_surgery.is_none() {
            for (id, head) in &self.reservoirs {
                nodes.push(Node::inlet(id.clone(), lit(*head)));
            }
        }

        // Keep the part reachable from an inlet.
        let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for p in &pipes {
            if let (Some(&a), Some(&b)) = (index.get(p.node1.as_str()), index.get(p.node2.as_str())) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut keep = vec![false; nodes.len()];
        let mut queue: VecDeque<usize> = (0..nodes.len()).filter(|&i| nodes[i].kind == NodeKind::Inlet).collect();
        if queue.is_empty() {
            return Err(Error::InvalidGraph("network has no inlet".into()));
        }
        for &i in &queue {
            keep[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !keep[j] {
                    keep[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let dropped = keep.iter().filter(|k| !**k).count();
        if dropped > 0 {
            warnings.push(format!("{dropped} nodes not connected to an inlet were dropped"));
        }
        let kept_ids: HashSet<String> = nodes
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(n, _)| n.id.clone())
            .collect();
        let nodes: Vec<Node<T>> = nodes.into_iter().zip(keep).filter(|(_, k)| *k).map(|(n, _)| n).collect();
        let pipes: Vec<Pipe<T>> = pipes
            .into_iter()
            .filter(|p| kept_ids.contains(&p.node1) && kept_ids.contains(&p.node2))
            .map(|p| {
                Pipe::new(
                    p.id.clone(),
                    p.node1.clone(),
                    p.node2.clone(),
                    lit(p.length),
                    lit(p.roughness),
                    lit(p.diameter),
                )
            })
            .collect();
        Ok((NetworkGraph::new(nodes, pipes)?, warnings))
    }
}

/// Writes the graph in the subset [`parse_inp`] reads (SI units).
pub fn write_inp<T: Scalar>(graph: &NetworkGraph<T>) -> String {
    let mut out = String::new();
    out.push_str("[TITLE]\nwdn-estim network\n\n[JUNCTIONS]\n;ID\tElev\tDemand\n");
    for n in graph.nodes().iter().filter(|n| n.kind == NodeKind::Junction) {
        let _ = writeln!(out, "{}\t{}\t0", n.id, to_f64(n.elevation));
    }
    out.push_str("\n[RESERVOIRS]\n;ID\tHead\n");
    for n in graph.nodes().iter().filter(|n| n.kind == NodeKind::Inlet) {
        let _ = writeln!(out, "{}\t{}", n.id, to_f64(n.elevation));
    }
    out.push_str("\n[PIPES]\n;ID\tNode1\tNode2\tLength\tDiameter\tRoughness\tMinorLoss\tStatus\n");
    for e in graph.edges() {
        let nodes = graph.nodes();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t0\tOpen",
            e.id,
            nodes[e.source].id,
            nodes[e.sink].id,
            to_f64(e.length),
            to_f64(e.diameter) * 1e3,
            to_f64(e.roughness)
        );
    }
    out.push_str("\n[OPTIONS]\nUnits\tLPS\nHeadloss\tH-W\n\n[END]\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[TITLE]
tiny

[JUNCTIONS]
;ID  Elev  Demand
 J1   12.5  0.3   ;comment

[RESERVOIRS]
 R1   80

[PIPES]
 P1  R1  J1  250  150  120  0  Open

[COORDINATES]
 J1 0 0

[END]
";

    #[test]
    fn minimal_file() {
        let net = parse_inp(MINIMAL).unwrap();
        assert_eq!(net.junctions, vec![("J1".to_string(), 12.5)]);
        let (g, _) = net.to_graph::<f64>(&GraphOptions::default()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.inlets().count(), 1);
        assert_eq!(g.edges()[0].diameter, 0.15);
        assert_eq!(net.skipped.get("COORDINATES"), Some(&1));
    }

    #[test]
    fn unknown_node_names_id_and_line() {
        let text = MINIMAL.replace("P1  R1  J1", "P1  R1  J9");
        match parse_inp(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 12);
                assert!(message.contains("J9"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_inp("[JUNCTIONS]\nJ1 1\n[PIPES]\n"),
            Err(Error::MissingSection("RESERVOIRS"))
        ));
        let dup = MINIMAL.replace("[RESERVOIRS]\n R1   80", "[RESERVOIRS]\n J1   80");
        assert!(matches!(parse_inp(&dup), Err(Error::DuplicateId { .. })));
        let bad = MINIMAL.replace("250", "2,50");
        assert!(matches!(parse_inp(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn tanks_valves_and_closed_pipes_are_reported() {
        let text = "\
[JUNCTIONS]
J1 10
J2 11
J3 12
[RESERVOIRS]
R1 70
[TANKS]
T1 30 1 0 5 10 0
[PIPES]
P1 R1 J1 100 200 120
P2 J1 J2 100 200 120 0 Closed
P3 J1 T1 100 200 120
P4 J1 J3 100 200 120
[VALVES]
V1 J2 J3 100 PRV 30 0
[OPTIONS]
Units GPM
";
        let net = parse_inp(text).unwrap();
        assert_eq!(net.units, UnitSystem::Us);
        assert_eq!(net.skipped["TANKS"], 1);
        assert_eq!(net.skipped["VALVES"], 1);
        assert_eq!(net.pipes.len(), 2);
        assert!((net.pipes[0].length - 30.48).abs() < 1e-12);
        assert!((net.pipes[0].diameter - 5.08).abs() < 1e-12);
        let (g, warnings) = net.to_graph::<f64>(&GraphOptions::default()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(warnings.iter().any(|w| w.contains("not connected")));
    }

    #[test]
    fn inlet_surgery_replaces_reservoirs() {
        let text = "\
[JUNCTIONS]
J1 10
J2 11
[RESERVOIRS]
R1 100
[PIPES]
P1 R1 J1 100 200 120
P2 J1 J2 100 200 120
";
        let net = parse_inp(text).unwrap();
        let (g, _) = net
            .to_graph::<f64>(&GraphOptions {
                inlet_surgery: Some(76.0),
            })
            .unwrap();
        assert_eq!(g.node_count(), 2);
        let j1 = g.node_idx("J1").unwrap();
        assert_eq!(g.nodes()[j1].kind, NodeKind::Inlet);
        assert_eq!(g.nodes()[j1].elevation, 76.0);
    }
}
