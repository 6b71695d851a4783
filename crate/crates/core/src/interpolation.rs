//! Graph-based state interpolation (GSI) and its physics-weighted variant.
//!
//! GSI solves
//!
//! ```text
//! min ½ [hᵀ L D⁻² L h + ζ γ²]   s.t.  M h <= γ 1,  γ > 0,  S h = h_s
//! ```
//!
//! The equality constraints are eliminated by substituting the anchored
//! entries, which leaves a strictly convex inequality QP over the free heads
//! and `γ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{follows_declared, GraphWeights, NetworkGraph, NodeKind, SensorLayout, StructuralMatrices};
use crate::qp::{self, QpOptions, QpProblem};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsiConfig {
    /// Slack penalty `ζ`.
    pub zeta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Lower bound standing in for the strict `γ > 0`.
    pub gamma_floor: f64,
    /// Smallest physics-informed edge weight.
    pub weight_floor: f64,
}

impl Default for GsiConfig {
    fn default() -> Self {
        GsiConfig {
            zeta: 1.0,
            tolerance: 1e-9,
            max_iterations: 10_000,
            gamma_floor: 1e-6,
            weight_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsiSolution<T: Scalar> {
    pub heads: DVector<T>,
    pub gamma: T,
    pub objective: T,
    pub iterations: usize,
    pub kkt_residual: T,
}

/// Solves GSI for Laplacian `L`, degrees `d` (the diagonal of `D`), incidence
/// `M` and a row-selection matrix `S` with readings `h_s`.
pub fn gsi<T: Scalar>(
    laplacian: &DMatrix<T>,
    degree: &DVector<T>,
    incidence: &DMatrix<T>,
    selector: &DMatrix<T>,
    h_s: &DVector<T>,
    config: &GsiConfig,
) -> Result<GsiSolution<T>> {
    let n = laplacian.nrows();
    if laplacian.ncols() != n || degree.len() != n || incidence.ncols() != n || selector.ncols() != n {
        return Err(Error::Dimension("GSI matrices disagree on the node count".into()));
    }
    if selector.nrows() != h_s.len() {
        return Err(Error::Dimension(format!(
            "{} sensor rows for {} readings",
            selector.nrows(),
            h_s.len()
        )));
    }
    if selector.nrows() == 0 {
        return Err(Error::InvalidLayout("GSI needs at least one anchored node".into()));
    }
    if !(config.zeta > 0.0) {
        return Err(Error::Config(format!("zeta must be positive, got {}", config.zeta)));
    }
    if let Some(i) = degree.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::InvalidGraph(format!("node {i} has zero weighted degree")));
    }

    // Anchored node values, with duplicate rows required to agree.
    let mut anchor: Vec<Option<T>> = vec![None; n];
    for (r, row) in selector.row_iter().enumerate() {
        let cols: Vec<usize> = (0..n).filter(|&c| row[c] != T::zero()).collect();
        if cols.len() != 1 || row[cols[0]] != T::one() {
            return Err(Error::Dimension(format!("sensor row {r} is not a unit selection")));
        }
        let (c, v) = (cols[0], h_s[r]);
        match anchor[c] {
            Some(prev) if (prev - v).abs() > lit::<T>(config.tolerance) * (T::one() + v.abs()) => {
                return Err(Error::Infeasible(format!(
                    "node {c} is anchored to both {prev} and {v}"
                )));
            }
            _ => anchor[c] = Some(v),
        }
    }
    let fixed: Vec<usize> = (0..n).filter(|&i| anchor[i].is_some()).collect();
    let free: Vec<usize> = (0..n).filter(|&i| anchor[i].is_none()).collect();
    let h_a = DVector::from_iterator(fixed.len(), fixed.iter().map(|&i| anchor[i].unwrap()));

    // ½‖D⁻¹L h‖² with h = [h_F; h_A]
    let mut k = laplacian.clone();
    for (mut row, &d) in k.row_iter_mut().zip(degree.iter()) {
        row /= d;
    }
    let k_f = k.select_columns(free.iter());
    let k_a = k.select_columns(fixed.iter());
    let m_f = incidence.select_columns(free.iter());
    let m_a = incidence.select_columns(fixed.iter());
    let offset = &k_a * &h_a;

    let n_f = free.len();
    let n_e = incidence.nrows();
    let mut hessian = DMatrix::zeros(n_f + 1, n_f + 1);
    hessian.view_mut((0, 0), (n_f, n_f)).copy_from(&(k_f.transpose() * &k_f));
    hessian[(n_f, n_f)] = lit(config.zeta);
    let mut linear = DVector::zeros(n_f + 1);
    linear.rows_mut(0, n_f).copy_from(&(k_f.transpose() * &offset));

    // γ - M_F h_F >= M_A h_A per edge, and γ >= floor
    let mut constraints = DMatrix::zeros(n_e + 1, n_f + 1);
    constraints.view_mut((0, 0), (n_e, n_f)).copy_from(&(-m_f));
    for r in 0..=n_e {
        constraints[(r, n_f)] = T::one();
    }
    let mut bounds = DVector::zeros(n_e + 1);
    bounds.rows_mut(0, n_e).copy_from(&(&m_a * &h_a));
    bounds[n_e] = lit(config.gamma_floor);

    let problem = QpProblem {
        hessian,
        linear,
        constraints,
        bounds,
    };
    let options = QpOptions {
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
    };
    let sol = qp::solve(&problem, &options)?;

    let mut heads = DVector::zeros(n);
    for (j, &i) in free.iter().enumerate() {
        heads[i] = sol.x[j];
    }
    for (j, &i) in fixed.iter().enumerate() {
        heads[i] = h_a[j];
    }
    let smooth = &k * &heads;
    let gamma = sol.x[n_f];
    let objective = lit::<T>(0.5) * (smooth.norm_squared() + lit::<T>(config.zeta) * gamma * gamma);
    Ok(GsiSolution {
        heads,
        gamma,
        objective,
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
    })
}

/// Anchors for a network: the pressure readings plus the fixed head of every
/// inlet that carries no pressure sensor.
pub fn network_anchors<T: Scalar>(
    graph: &NetworkGraph<T>,
    layout: &SensorLayout,
    h_s: &DVector<T>,
) -> Result<(DMatrix<T>, DVector<T>)> {
    if h_s.len() != layout.n_s() {
        return Err(Error::Measurement(format!(
            "{} head readings for {} pressure sensors",
            h_s.len(),
            layout.n_s()
        )));
    }
    let mut nodes: Vec<usize> = layout.pressure().to_vec();
    let mut values: Vec<T> = h_s.iter().copied().collect();
    for i in graph.inlets() {
        if !layout.pressure().contains(&i) {
            nodes.push(i);
            values.push(graph.nodes()[i].elevation);
        }
    }
    Ok((
        crate::graph::selection_matrix(&nodes, graph.node_count()),
        DVector::from_vec(values),
    ))
}

/// GSI over a network with arbitrary edge weights, anchored at sensors and
/// inlets.
pub fn gsi_network<T: Scalar>(
    graph: &NetworkGraph<T>,
    weights: &GraphWeights<T>,
    incidence: &DMatrix<T>,
    layout: &SensorLayout,
    h_s: &DVector<T>,
    config: &GsiConfig,
) -> Result<GsiSolution<T>> {
    let (s, values) = network_anchors(graph, layout, h_s)?;
    gsi(&weights.laplacian, &weights.degree, incidence, &s, &values, config)
}

/// Physics-informed weights `w_k = τ_k^-0.54 |Δh̄_k|^(1 - 1/1.852)`, floored
/// at `floor`.
pub fn aw_weights<T: Scalar>(
    h_bar: &DVector<T>,
    resistance: &DVector<T>,
    graph: &NetworkGraph<T>,
    floor: T,
) -> Result<GraphWeights<T>> {
    crate::graph::check_len("baseline heads", h_bar.len(), graph.node_count())?;
    crate::graph::check_len("resistances", resistance.len(), graph.edge_count())?;
    let tau_exp = lit::<T>(-0.54);
    let drop_exp = T::one() - lit::<T>(1.0 / crate::graph::HW_EXPONENT);
    let weights: Vec<T> = graph
        .edges()
        .iter()
        .zip(resistance.iter())
        .map(|(e, &tau)| {
            let (hi, lo) = if follows_declared(e, h_bar) {
                (e.source, e.sink)
            } else {
                (e.sink, e.source)
            };
            let drop = h_bar[hi] - h_bar[lo];
            let w = if drop > T::zero() {
                tau.powf(tau_exp) * drop.powf(drop_exp)
            } else {
                T::zero()
            };
            w.max(floor)
        })
        .collect();
    GraphWeights::from_edge_weights(graph, &weights)
}

/// AW-GSI: GSI with weights derived from the baseline heads `h_bar`.
pub fn aw_gsi<T: Scalar>(
    graph: &NetworkGraph<T>,
    matrices: &StructuralMatrices<T>,
    layout: &SensorLayout,
    h_s: &DVector<T>,
    h_bar: &DVector<T>,
    config: &GsiConfig,
) -> Result<(GsiSolution<T>, GraphWeights<T>)> {
    let weights = aw_weights(h_bar, &matrices.resistance, graph, lit(config.weight_floor))?;
    let sol = gsi_network(graph, &weights, &matrices.incidence, layout, h_s, config)?;
    Ok((sol, weights))
}

/// Unit-weight GSI on leak-free readings, the default baseline for AW-GSI.
pub fn baseline_heads<T: Scalar>(
    graph: &NetworkGraph<T>,
    matrices: &StructuralMatrices<T>,
    layout: &SensorLayout,
    leak_free_h_s: &DVector<T>,
    config: &GsiConfig,
) -> Result<DVector<T>> {
    let unit = crate::graph::structural_weights(graph, crate::graph::WeightScheme::Unit);
    Ok(gsi_network(graph, &unit, &matrices.incidence, layout, leak_free_h_s, config)?.heads)
}

/// Largest violation of `M h <= γ 1` and of the anchoring, for diagnostics.
pub fn constraint_violation<T: Scalar>(
    sol: &GsiSolution<T>,
    incidence: &DMatrix<T>,
    selector: &DMatrix<T>,
    h_s: &DVector<T>,
) -> f64 {
    let directional = (incidence * &sol.heads)
        .iter()
        .map(|&v| to_f64(v - sol.gamma))
        .fold(0.0f64, f64::max);
    let anchoring = to_f64((selector * &sol.heads - h_s).amax());
    directional.max(anchoring)
}

/// Inlet ids and heads, in node order.
pub fn inlet_heads<T: Scalar>(graph: &NetworkGraph<T>) -> Vec<(usize, T)> {
    graph
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == NodeKind::Inlet)
        .map(|(i, n)| (i, n.elevation))
        .collect()
}
