//! Network graph model and the structural matrices built from it.
//!
//! Node and edge insertion order is canonical: it fixes the row/column
//! indexing of every matrix produced here and of every state vector used by
//! the estimators.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Hazen-Williams head-loss exponent.
pub const HW_EXPONENT: f64 = 1.852;
/// SI Hazen-Williams resistance constant.
pub const HW_CONSTANT: f64 = 10.67;
/// Diameter exponent of the Hazen-Williams resistance.
pub const HW_DIAMETER_EXPONENT: f64 = 4.87;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Junction,
    /// Fixed-head boundary node.
    Inlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub id: String,
    /// Elevation in m. For inlets this doubles as the default fixed head.
    pub elevation: T,
    pub kind: NodeKind,
}

impl<T> Node<T> {
    pub fn junction(id: impl Into<String>, elevation: T) -> Self {
        Node {
            id: id.into(),
            elevation,
            kind: NodeKind::Junction,
        }
    }

    pub fn inlet(id: impl Into<String>, head: T) -> Self {
        Node {
            id: id.into(),
            elevation: head,
            kind: NodeKind::Inlet,
        }
    }
}

/// Pipe description referencing its end nodes by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipe<T> {
    pub id: String,
    pub source: String,
    pub sink: String,
    /// m
    pub length: T,
    /// Hazen-Williams coefficient (dimensionless).
    pub roughness: T,
    /// m
    pub diameter: T,
}

impl<T> Pipe<T> {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        sink: impl Into<String>,
        length: T,
        roughness: T,
        diameter: T,
    ) -> Self {
        Pipe {
            id: id.into(),
            source: source.into(),
            sink: sink.into(),
            length,
            roughness,
            diameter,
        }
    }
}

/// Edge with resolved node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub id: String,
    pub source: usize,
    pub sink: usize,
    pub length: T,
    pub roughness: T,
    pub diameter: T,
}

/// Simple, connected, directed pipe network with at least one inlet.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph<T> {
    nodes: Vec<Node<T>>,
    edges: Vec<Edge<T>>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl<T: Scalar> NetworkGraph<T> {
    pub fn new(nodes: Vec<Node<T>>, pipes: Vec<Pipe<T>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidGraph("no nodes".into()));
        }
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "node",
                    id: n.id.clone(),
                });
            }
        }
        if !nodes.iter().any(|n| n.kind == NodeKind::Inlet) {
            return Err(Error::InvalidGraph("no inlet node".into()));
        }

        let mut edge_index = HashMap::with_capacity(pipes.len());
        let mut pairs = HashSet::with_capacity(pipes.len());
        let mut edges = Vec::with_capacity(pipes.len());
        for (k, p) in pipes.into_iter().enumerate() {
            if edge_index.insert(p.id.clone(), k).is_some() {
                return Err(Error::DuplicateId {
                    kind: "pipe",
                    id: p.id,
                });
            }
            let source = *node_index.get(&p.source).ok_or_else(|| Error::UnknownId {
                kind: "node",
                id: p.source.clone(),
            })?;
            let sink = *node_index.get(&p.sink).ok_or_else(|| Error::UnknownId {
                kind: "node",
                id: p.sink.clone(),
            })?;
            if source == sink {
                return Err(Error::InvalidGraph(format!("pipe `{}` is a self-loop", p.id)));
            }
            if !pairs.insert((source.min(sink), source.max(sink))) {
                return Err(Error::InvalidGraph(format!(
                    "pipe `{}` duplicates the connection {} - {}",
                    p.id, p.source, p.sink
                )));
            }
            hazen_williams_resistance(&p.id, p.length, p.roughness, p.diameter)?;
            edges.push(Edge {
                id: p.id,
                source,
                sink,
                length: p.length,
                roughness: p.roughness,
                diameter: p.diameter,
            });
        }

        let graph = NetworkGraph {
            nodes,
            edges,
            node_index,
            edge_index,
        };
        if let Some(unreached) = graph.first_unreachable() {
            return Err(Error::InvalidGraph(format!(
                "graph is not connected (node `{}` unreachable)",
                graph.nodes[unreached].id
            )));
        }
        Ok(graph)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let adj = self.adjacency_lists();
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    /// Undirected neighbour lists: `(neighbour, edge index)`.
    pub fn adjacency_lists(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.source].push((e.sink, k));
            adj[e.sink].push((e.source, k));
        }
        adj
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_idx(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edge_idx(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub fn inlets(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Inlet)
            .map(|(i, _)| i)
    }

    /// Rebuilds the pipe list with node ids, in edge order.
    pub fn pipes(&self) -> Vec<Pipe<T>> {
        self.edges
            .iter()
            .map(|e| Pipe {
                id: e.id.clone(),
                source: self.nodes[e.source].id.clone(),
                sink: self.nodes[e.sink].id.clone(),
                length: e.length,
                roughness: e.roughness,
                diameter: e.diameter,
            })
            .collect()
    }
}

/// Hazen-Williams resistance `10.67 ρ / (μ^1.852 δ^4.87)` in SI units.
pub fn hazen_williams_resistance<T: Scalar>(
    edge: &str,
    length: T,
    roughness: T,
    diameter: T,
) -> Result<T> {
    for (value, attribute) in [(length, "length"), (roughness, "roughness"), (diameter, "diameter")] {
        if !(value > T::zero()) || !value.is_finite() {
            return Err(Error::NonPositiveAttribute {
                edge: edge.to_string(),
                attribute,
            });
        }
    }
    Ok(lit::<T>(HW_CONSTANT) * length
        / (roughness.powf(lit(HW_EXPONENT)) * diameter.powf(lit(HW_DIAMETER_EXPONENT))))
}

/// Incidence matrix `M` (n_E x n_V): +1 at each edge source, -1 at its sink.
pub fn build_incidence<T: Scalar>(graph: &NetworkGraph<T>) -> DMatrix<T> {
    let mut m = DMatrix::zeros(graph.edge_count(), graph.node_count());
    for (k, e) in graph.edges().iter().enumerate() {
        m[(k, e.source)] = T::one();
        m[(k, e.sink)] = -T::one();
    }
    m
}

/// Diagonal of the resistance matrix `T`.
pub fn resistance_coefficients<T: Scalar>(graph: &NetworkGraph<T>) -> Result<DVector<T>> {
    let taus = graph
        .edges()
        .iter()
        .map(|e| hazen_williams_resistance(&e.id, e.length, e.roughness, e.diameter))
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(taus))
}

/// Dense diagonal resistance matrix `T`.
pub fn resistance_matrix<T: Scalar>(graph: &NetworkGraph<T>) -> Result<DMatrix<T>> {
    Ok(DMatrix::from_diagonal(&resistance_coefficients(graph)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScheme {
    /// `w_ij = 1` for every pair of adjacent nodes.
    #[default]
    Unit,
}

/// Weighted adjacency `W`, degree `D` and Laplacian `L = D - W`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphWeights<T: Scalar> {
    pub adjacency: DMatrix<T>,
    pub degree: DVector<T>,
    pub laplacian: DMatrix<T>,
}

impl<T: Scalar> GraphWeights<T> {
    /// Builds `W`, `D`, `L` from one symmetric weight per edge.
    pub fn from_edge_weights(graph: &NetworkGraph<T>, weights: &[T]) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::Dimension(format!(
                "{} edge weights for {} edges",
                weights.len(),
                graph.edge_count()
            )));
        }
        let n = graph.node_count();
        let mut w = DMatrix::zeros(n, n);
        for (e, &wk) in graph.edges().iter().zip(weights) {
            w[(e.source, e.sink)] = wk;
            w[(e.sink, e.source)] = wk;
        }
        let degree = DVector::from_iterator(n, w.row_iter().map(|r| r.sum()));
        let laplacian = DMatrix::from_diagonal(&degree) - &w;
        Ok(GraphWeights {
            adjacency: w,
            degree,
            laplacian,
        })
    }

    pub fn degree_matrix(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&self.degree)
    }
}

pub fn structural_weights<T: Scalar>(
    graph: &NetworkGraph<T>,
    scheme: WeightScheme,
) -> GraphWeights<T> {
    let weights = match scheme {
        WeightScheme::Unit => vec![T::one(); graph.edge_count()],
    };
    GraphWeights::from_edge_weights(graph, &weights).expect("one weight per edge")
}

/// Orientation of edge `k` under heads `h`: `true` when the declared source is
/// the higher-head end (ties keep the declared orientation).
#[inline]
pub fn follows_declared<T: Scalar>(edge: &Edge<T>, h: &DVector<T>) -> bool {
    h[edge.source] >= h[edge.sink]
}

/// Pressure-based incidence `B(h)`: each row carries +1 at the higher-head end
/// and -1 at the lower-head end, so `B(h) h >= 0` entrywise.
pub fn pressure_incidence<T: Scalar>(graph: &NetworkGraph<T>, h: &DVector<T>) -> Result<DMatrix<T>> {
    check_len("head vector", h.len(), graph.node_count())?;
    let mut b = DMatrix::zeros(graph.edge_count(), graph.node_count());
    for (k, e) in graph.edges().iter().enumerate() {
        let (hi, lo) = if follows_declared(e, h) {
            (e.source, e.sink)
        } else {
            (e.sink, e.source)
        };
        b[(k, hi)] = T::one();
        b[(k, lo)] = -T::one();
    }
    Ok(b)
}

/// Validated sensor placement, kept both as ids (for I/O) and as indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorLayout {
    pressure_ids: Vec<String>,
    amr_ids: Vec<String>,
    flow_ids: Vec<String>,
    pressure: Vec<usize>,
    amr: Vec<usize>,
    flow: Vec<usize>,
}

impl SensorLayout {
    pub fn new<T: Scalar, S: AsRef<str>>(
        graph: &NetworkGraph<T>,
        pressure_nodes: &[S],
        amr_nodes: &[S],
        flow_edges: &[S],
    ) -> Result<Self> {
        fn resolve<S: AsRef<str>>(
            ids: &[S],
            kind: &'static str,
            lookup: impl Fn(&str) -> Option<usize>,
        ) -> Result<(Vec<String>, Vec<usize>)> {
            let mut seen = HashSet::new();
            let mut names = Vec::with_capacity(ids.len());
            let mut idx = Vec::with_capacity(ids.len());
            for id in ids {
                let id = id.as_ref();
                let i = lookup(id).ok_or_else(|| Error::UnknownId {
                    kind,
                    id: id.to_string(),
                })?;
                if !seen.insert(i) {
                    return Err(Error::DuplicateId {
                        kind,
                        id: id.to_string(),
                    });
                }
                names.push(id.to_string());
                idx.push(i);
            }
            Ok((names, idx))
        }

        let (pressure_ids, pressure) = resolve(pressure_nodes, "pressure sensor node", |s| graph.node_idx(s))?;
        let (amr_ids, amr) = resolve(amr_nodes, "AMR node", |s| graph.node_idx(s))?;
        let (flow_ids, flow) = resolve(flow_edges, "flow sensor pipe", |s| graph.edge_idx(s))?;
        if pressure.is_empty() {
            return Err(Error::InvalidLayout("at least one pressure sensor is required".into()));
        }
        Ok(SensorLayout {
            pressure_ids,
            amr_ids,
            flow_ids,
            pressure,
            amr,
            flow,
        })
    }

    pub fn pressure(&self) -> &[usize] {
        &self.pressure
    }
    pub fn amr(&self) -> &[usize] {
        &self.amr
    }
    pub fn flow(&self) -> &[usize] {
        &self.flow
    }
    pub fn pressure_ids(&self) -> &[String] {
        &self.pressure_ids
    }
    pub fn amr_ids(&self) -> &[String] {
        &self.amr_ids
    }
    pub fn flow_ids(&self) -> &[String] {
        &self.flow_ids
    }
    pub fn n_s(&self) -> usize {
        self.pressure.len()
    }
    pub fn n_a(&self) -> usize {
        self.amr.len()
    }
    pub fn n_q(&self) -> usize {
        self.flow.len()
    }
}

/// Column selector producing `B_c` (the AMR columns) from any `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrSelector {
    columns: Vec<usize>,
}

impl AmrSelector {
    pub fn new(columns: Vec<usize>) -> Self {
        AmrSelector { columns }
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn select<T: Scalar>(&self, b: &DMatrix<T>) -> DMatrix<T> {
        b.select_columns(self.columns.iter())
    }
}

/// Pressure sensorization `S`, flow sensorization `S_q` and the AMR selector.
pub fn sensor_matrices<T: Scalar>(
    layout: &SensorLayout,
    graph: &NetworkGraph<T>,
) -> Result<(DMatrix<T>, DMatrix<T>, AmrSelector)> {
    let (n_v, n_e) = (graph.node_count(), graph.edge_count());
    if let Some(&i) = layout.pressure().iter().chain(layout.amr()).find(|&&i| i >= n_v) {
        return Err(Error::UnknownId {
            kind: "node index",
            id: i.to_string(),
        });
    }
    if let Some(&k) = layout.flow().iter().find(|&&k| k >= n_e) {
        return Err(Error::UnknownId {
            kind: "edge index",
            id: k.to_string(),
        });
    }
    Ok((
        selection_matrix(layout.pressure(), n_v),
        selection_matrix(layout.flow(), n_e),
        AmrSelector::new(layout.amr().to_vec()),
    ))
}

/// Rows of the identity picked by `indices`.
pub fn selection_matrix<T: Scalar>(indices: &[usize], n: usize) -> DMatrix<T> {
    let mut s = DMatrix::zeros(indices.len(), n);
    for (r, &c) in indices.iter().enumerate() {
        s[(r, c)] = T::one();
    }
    s
}

/// Every structural matrix the estimators consume, built once per network.
#[derive(Debug, Clone)]
pub struct StructuralMatrices<T: Scalar> {
    pub incidence: DMatrix<T>,
    pub weights: GraphWeights<T>,
    pub resistance: DVector<T>,
    pub pressure_selector: DMatrix<T>,
    pub flow_selector: DMatrix<T>,
    pub amr: AmrSelector,
}

impl<T: Scalar> StructuralMatrices<T> {
    pub fn new(graph: &NetworkGraph<T>, layout: &SensorLayout) -> Result<Self> {
        let (pressure_selector, flow_selector, amr) = sensor_matrices(layout, graph)?;
        Ok(StructuralMatrices {
            incidence: build_incidence(graph),
            weights: structural_weights(graph, WeightScheme::Unit),
            resistance: resistance_coefficients(graph)?,
            pressure_selector,
            flow_selector,
            amr,
        })
    }
}

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what}: length {got}, expected {want}")));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub fn path3() -> NetworkGraph<f64> {
        NetworkGraph::new(
            vec![
                Node::inlet("v1", 10.0),
                Node::junction("v2", 0.0),
                Node::junction("v3", 0.0),
            ],
            vec![
                Pipe::new("p1", "v1", "v2", 100.0, 100.0, 0.1),
                Pipe::new("p2", "v2", "v3", 100.0, 100.0, 0.1),
            ],
        )
        .unwrap()
    }

    fn two_node() -> NetworkGraph<f64> {
        NetworkGraph::new(
            vec![Node::inlet("v1", 10.0), Node::junction("v2", 0.0)],
            vec![Pipe::new("p1", "v1", "v2", 100.0, 100.0, 0.1)],
        )
        .unwrap()
    }

    #[test]
    fn incidence_examples() {
        let m = build_incidence(&two_node());
        assert_eq!(m, DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        let m = build_incidence(&path3());
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0]));

        let tri = NetworkGraph::new(
            vec![Node::inlet("v1", 1.0), Node::junction("v2", 0.0), Node::junction("v3", 0.0)],
            vec![
                Pipe::new("a", "v1", "v2", 1.0, 100.0, 0.1),
                Pipe::new("b", "v2", "v3", 1.0, 100.0, 0.1),
                Pipe::new("c", "v1", "v3", 1.0, 100.0, 0.1),
            ],
        )
        .unwrap();
        let m = build_incidence(&tri);
        for r in m.row_iter() {
            assert_eq!(r.sum(), 0.0);
        }
    }

    #[test]
    fn resistance_examples() {
        let (mu, delta) = (100.0f64, 0.1f64);
        let rho = mu.powf(1.852) * delta.powf(4.87) / 10.67;
        assert_relative_eq!(hazen_williams_resistance("e", rho, mu, delta).unwrap(), 1.0, epsilon = 1e-12);

        // Frozen from an independent evaluation: 10.67*100/(100**1.852 * 0.1**4.87)
        let tau = hazen_williams_resistance("e", 100.0, 100.0, 0.1).unwrap();
        assert_relative_eq!(tau, 15637.395462999568, max_relative = 1e-9);

        let tau2 = hazen_williams_resistance("e", 200.0, 100.0, 0.1).unwrap();
        assert_relative_eq!(tau2, 2.0 * tau, max_relative = 1e-14);

        for (l, c, d) in [(0.0, 100.0, 0.1), (1.0, -1.0, 0.1), (1.0, 100.0, 0.0)] {
            assert!(matches!(
                hazen_williams_resistance("bad", l, c, d),
                Err(Error::NonPositiveAttribute { .. })
            ));
        }
    }

    #[test]
    fn weights_examples() {
        let w = structural_weights(&two_node(), WeightScheme::Unit);
        assert_eq!(w.adjacency, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(w.degree, DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(w.laplacian, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let w = structural_weights(&path3(), WeightScheme::Unit);
        assert_eq!(w.degree, DVector::from_vec(vec![1.0, 2.0, 1.0]));
        let ones = DVector::from_element(3, 1.0);
        assert_eq!(&w.laplacian * ones, DVector::zeros(3));
    }

    #[test]
    fn pressure_incidence_examples() {
        let g = two_node();
        let h = DVector::from_vec(vec![10.0, 9.0]);
        let b = pressure_incidence(&g, &h).unwrap();
        assert_eq!(b, DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert_eq!((&b * &h)[0], 1.0);

        let h = DVector::from_vec(vec![9.0, 10.0]);
        let b = pressure_incidence(&g, &h).unwrap();
        assert_eq!(b, DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));
        assert_eq!((&b * &h)[0], 1.0);

        let h = DVector::from_vec(vec![5.0, 5.0]);
        let b = pressure_incidence(&g, &h).unwrap();
        assert_eq!(b, build_incidence(&g));
        assert_eq!((&b * &h)[0], 0.0);

        assert!(pressure_incidence(&g, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn sensor_matrix_examples() {
        let g = path3();
        let layout = SensorLayout::new(&g, &["v2"], &[], &[]).unwrap();
        let (s, sq, amr) = sensor_matrices(&layout, &g).unwrap();
        assert_eq!(s, DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]));
        assert_eq!(sq.nrows(), 0);
        assert_eq!(sq.ncols(), 2);
        assert!(amr.columns().is_empty());

        let layout = SensorLayout::new(&g, &["v1", "v2", "v3"], &["v3"], &["p2"]).unwrap();
        let (s, sq, amr) = sensor_matrices::<f64>(&layout, &g).unwrap();
        assert_eq!(s, DMatrix::identity(3, 3));
        assert_eq!(sq, DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        let b = build_incidence(&g);
        assert_eq!(amr.select(&b), DMatrix::from_row_slice(2, 1, &[0.0, -1.0]));
    }

    #[test]
    fn layout_rejections() {
        let g = path3();
        let err = SensorLayout::new(&g, &["v9"], &[], &[]).unwrap_err();
        assert!(err.to_string().contains("v9"));
        assert!(matches!(
            SensorLayout::new(&g, &["v1", "v1"], &[], &[]),
            Err(Error::DuplicateId { .. })
        ));
        assert!(matches!(
            SensorLayout::new::<f64, &str>(&g, &[], &[], &[]),
            Err(Error::InvalidLayout(_))
        ));
        assert!(SensorLayout::new(&g, &["v1"], &[], &["nope"]).is_err());
    }

    #[test]
    fn graph_rejections() {
        let nodes = || vec![Node::inlet("a", 1.0), Node::junction("b", 0.0), Node::junction("c", 0.0)];
        let pipe = |id: &str, s: &str, t: &str| Pipe::new(id, s, t, 1.0, 100.0, 0.1);
        assert!(NetworkGraph::new(nodes(), vec![pipe("1", "a", "a"), pipe("2", "b", "c")]).is_err());
        assert!(NetworkGraph::new(nodes(), vec![pipe("1", "a", "b"), pipe("2", "b", "a"), pipe("3", "b", "c")]).is_err());
        assert!(NetworkGraph::new(nodes(), vec![pipe("1", "a", "b")]).is_err());
        assert!(NetworkGraph::new(nodes(), vec![pipe("1", "a", "b"), pipe("1", "b", "c")]).is_err());
        assert!(NetworkGraph::new(nodes(), vec![pipe("1", "a", "b"), pipe("2", "b", "x")]).is_err());
        let no_inlet = vec![Node::junction("a", 1.0), Node::junction("b", 0.0)];
        assert!(NetworkGraph::new(no_inlet, vec![pipe("1", "a", "b")]).is_err());
        let bad = Pipe::new("1", "a", "b", -1.0, 100.0, 0.1);
        assert!(NetworkGraph::new(nodes()[..2].to_vec(), vec![bad]).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let g = NetworkGraph::<f32>::new(
            vec![Node::inlet("a", 1.0), Node::junction("b", 0.0)],
            vec![Pipe::new("1", "a", "b", 1.0, 100.0, 0.1)],
        )
        .unwrap();
        let w = structural_weights(&g, WeightScheme::Unit);
        assert_eq!(w.laplacian[(0, 1)], -1.0f32);
    }
}
