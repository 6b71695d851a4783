//! Hazen-Williams steady-state hydraulics: ground-truth solver, the flow and
//! demand relations used inside the measurement functions, and synthetic
//! sensor snapshots.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::MeasurementBundle;
use crate::graph::{check_len, follows_declared, NetworkGraph, NodeKind, SensorLayout, HW_EXPONENT};
use crate::scalar::{lit, to_f64, Scalar};

/// Radicands of the flow relation down to `-FLOW_CLAMP_TOL` are clamped to 0.
pub const FLOW_CLAMP_TOL: f64 = 1e-9;

#[inline]
fn flow_exponent<T: Scalar>() -> T {
    lit(1.0 / HW_EXPONENT)
}

/// Steady-state heads and flows. Flows are magnitudes; `direction[k]` is +1
/// when pipe `k` carries water from its declared source to its sink.
#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicState<T: Scalar> {
    pub heads: DVector<T>,
    pub flows: DVector<T>,
    pub direction: Vec<i8>,
}

impl<T: Scalar> HydraulicState<T> {
    pub fn signed_flows(&self) -> DVector<T> {
        DVector::from_iterator(
            self.flows.len(),
            self.flows
                .iter()
                .zip(&self.direction)
                .map(|(&q, &d)| if d < 0 { -q } else { q }),
        )
    }
}

/// `q = (T^-1 B h)^(1/1.852)` with `B` given explicitly.
pub fn flows_from_heads<T: Scalar>(
    resistance: &DVector<T>,
    b: &DMatrix<T>,
    h: &DVector<T>,
) -> Result<DVector<T>> {
    flows_from_heads_with_tol(resistance, b, h, lit(FLOW_CLAMP_TOL))
}

pub fn flows_from_heads_with_tol<T: Scalar>(
    resistance: &DVector<T>,
    b: &DMatrix<T>,
    h: &DVector<T>,
    clamp: T,
) -> Result<DVector<T>> {
    check_len("resistance", resistance.len(), b.nrows())?;
    check_len("head vector", h.len(), b.ncols())?;
    let drops = b * h;
    let mut q = DVector::zeros(drops.len());
    for (k, (&dh, &tau)) in drops.iter().zip(resistance.iter()).enumerate() {
        let arg = dh / tau;
        if arg < -clamp {
            return Err(Error::InconsistentIncidence {
                edge: k,
                value: to_f64(arg),
            });
        }
        q[k] = if arg > T::zero() { arg.powf(flow_exponent()) } else { T::zero() };
    }
    Ok(q)
}

/// `c = -B_c^T q`: net consumption at the selected nodes implied by flows.
pub fn demands_from_flows<T: Scalar>(b_c: &DMatrix<T>, q: &DVector<T>) -> Result<DVector<T>> {
    check_len("flow vector", q.len(), b_c.nrows())?;
    Ok(-(b_c.transpose() * q))
}

/// Flow magnitudes implied by heads, `(|h_i - h_j| / tau_k)^(1/1.852)`.
///
/// Equivalent to [`flows_from_heads`] with `B = B(h)`, without building `B`.
pub fn flow_magnitudes<T: Scalar>(
    graph: &NetworkGraph<T>,
    resistance: &DVector<T>,
    h: &DVector<T>,
) -> DVector<T> {
    let p = flow_exponent::<T>();
    DVector::from_iterator(
        graph.edge_count(),
        graph.edges().iter().zip(resistance.iter()).map(|(e, &tau)| {
            let drop = (h[e.source] - h[e.sink]).abs();
            if drop > T::zero() {
                (drop / tau).powf(p)
            } else {
                T::zero()
            }
        }),
    )
}

/// Net inflow at every node when edge `k` carries `q[k]` from the higher-head
/// end to the lower-head end of `h`.
pub fn net_inflow<T: Scalar>(graph: &NetworkGraph<T>, h: &DVector<T>, q: &DVector<T>) -> DVector<T> {
    let mut inflow = DVector::zeros(graph.node_count());
    for (e, &qk) in graph.edges().iter().zip(q.iter()) {
        let (hi, lo) = if follows_declared(e, h) {
            (e.source, e.sink)
        } else {
            (e.sink, e.source)
        };
        inflow[lo] += qk;
        inflow[hi] -= qk;
    }
    inflow
}

/// Leak emitted at a junction, modelled as extra pressure-independent demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leak {
    pub node: String,
    /// Leak outflow in m³/s.
    pub emitter: f64,
}

/// Standard deviations of the additive Gaussian sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseLevels {
    /// m
    pub pressure: f64,
    /// m³/s
    pub amr: f64,
    /// m³/s
    pub flow: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        NoiseLevels {
            pressure: 0.0,
            amr: 0.0,
            flow: 0.0,
        }
    }
}

/// One steady-state operating point: demands, boundary heads, leak, noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Junction demands in m³/s; junctions not listed draw nothing.
    #[serde(default)]
    pub demands: BTreeMap<String, f64>,
    /// Head in m for every inlet.
    pub fixed_heads: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak: Option<Leak>,
    #[serde(default)]
    pub noise: NoiseLevels,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Boundary conditions in node order: fixed heads and total demands
    /// (including the leak).
    pub fn resolve<T: Scalar>(&self, graph: &NetworkGraph<T>) -> Result<(Vec<Option<T>>, DVector<T>)> {
        if self.fixed_heads.is_empty() {
            return Err(Error::Config("scenario has no fixed heads".into()));
        }
        let mut fixed = vec![None; graph.node_count()];
        for (id, &head) in &self.fixed_heads {
            let i = graph.node_idx(id).ok_or_else(|| Error::UnknownId {
                kind: "fixed-head node",
                id: id.clone(),
            })?;
            if graph.nodes()[i].kind != NodeKind::Inlet {
                return Err(Error::Config(format!("fixed head given for junction `{id}`")));
            }
            fixed[i] = Some(lit(head));
        }
        if let Some(i) = graph.inlets().find(|&i| fixed[i].is_none()) {
            return Err(Error::Config(format!(
                "inlet `{}` has no fixed head",
                graph.nodes()[i].id
            )));
        }
        let demands = self.junction_demands(graph, true)?;
        Ok((fixed, demands))
    }

    fn junction_demands<T: Scalar>(&self, graph: &NetworkGraph<T>, with_leak: bool) -> Result<DVector<T>> {
        let mut d = DVector::zeros(graph.node_count());
        let mut add = |id: &str, value: f64, what: &'static str| -> Result<()> {
            let i = graph.node_idx(id).ok_or_else(|| Error::UnknownId {
                kind: what,
                id: id.to_string(),
            })?;
            if graph.nodes()[i].kind == NodeKind::Inlet {
                return Err(Error::Config(format!("{what} `{id}` is an inlet")));
            }
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Config(format!("{what} at `{id}` must be >= 0, got {value}")));
            }
            d[i] += lit::<T>(value);
            Ok(())
        };
        for (id, &v) in &self.demands {
            add(id, v, "demand node")?;
        }
        if with_leak {
            if let Some(leak) = &self.leak {
                add(&leak.node, leak.emitter, "leak node")?;
            }
        }
        Ok(d)
    }

    pub fn without_leak(&self) -> Scenario {
        Scenario {
            leak: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Mass-balance tolerance in m³/s.
    pub tolerance: f64,
    /// Head drop below which the flow law is linearised, in m.
    pub cutoff: f64,
    /// Per pipe, the linear zone also ends where the flow reaches this (m³/s).
    pub flow_cutoff: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 200,
            tolerance: 1e-11,
            cutoff: 1e-8,
            flow_cutoff: 1e-10,
        }
    }
}

/// Regularised signed flow and its derivative with respect to the head drop.
#[inline]
fn regularised_flow<T: Scalar>(drop: T, tau: T, cutoff: T) -> (T, T) {
    let p = flow_exponent::<T>();
    let a = drop.abs();
    if a >= cutoff {
        let q = (a / tau).powf(p);
        (q.copysign(drop), p * q / a)
    } else {
        let slope = (cutoff / tau).powf(p) / cutoff;
        (slope * drop, slope)
    }
}

/// Newton iteration on junction heads with step halving.
pub fn solve_steady_state<T: Scalar>(
    graph: &NetworkGraph<T>,
    scenario: &Scenario,
    options: &SolverOptions,
) -> Result<HydraulicState<T>> {
    let (fixed, demand) = scenario.resolve(graph)?;
    let resistance = crate::graph::resistance_coefficients(graph)?;
    solve_with_boundary(graph, &resistance, &fixed, &demand, options)
}

pub(crate) fn solve_with_boundary<T: Scalar>(
    graph: &NetworkGraph<T>,
    resistance: &DVector<T>,
    fixed: &[Option<T>],
    demand: &DVector<T>,
    options: &SolverOptions,
) -> Result<HydraulicState<T>> {
    let n = graph.node_count();
    check_len("fixed heads", fixed.len(), n)?;
    check_len("demands", demand.len(), n)?;
    let anchors: Vec<T> = fixed.iter().flatten().copied().collect();
    if anchors.is_empty() {
        return Err(Error::Unsatisfiable("no fixed-head node".into()));
    }
    check_reachable(graph, fixed, demand)?;

    let unknown: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut slot = vec![usize::MAX; n];
    for (s, &i) in unknown.iter().enumerate() {
        slot[i] = s;
    }
    let mean_head = anchors.iter().fold(T::zero(), |a, &b| a + b) / lit(anchors.len() as f64);
    let mut h = DVector::from_iterator(n, fixed.iter().map(|f| f.unwrap_or(mean_head)));
    let e_hw = lit::<T>(HW_EXPONENT);
    let cutoffs: Vec<T> = resistance
        .iter()
        .map(|&tau| lit::<T>(options.cutoff).min(tau * lit::<T>(options.flow_cutoff).powf(e_hw)))
        .collect();
    let tol = lit::<T>(options.tolerance);

    let residual = |h: &DVector<T>| -> DVector<T> {
        let mut r = DVector::from_iterator(unknown.len(), unknown.iter().map(|&i| -demand[i]));
        for ((e, &tau), &cutoff) in graph.edges().iter().zip(resistance.iter()).zip(&cutoffs) {
            let (q, _) = regularised_flow(h[e.source] - h[e.sink], tau, cutoff);
            if slot[e.sink] != usize::MAX {
                r[slot[e.sink]] += q;
            }
            if slot[e.source] != usize::MAX {
                r[slot[e.source]] -= q;
            }
        }
        r
    };

    let mut r = residual(&h);
    let mut iterations = 0;
    while r.amax() > tol {
        if iterations == options.max_iterations {
            let worst = r.iamax();
            return Err(Error::NoConvergence {
                iterations,
                residual: to_f64(r[worst].abs()),
                node: graph.nodes()[unknown[worst]].id.clone(),
            });
        }
        iterations += 1;

        let m = unknown.len();
        let mut jac = DMatrix::<T>::zeros(m, m);
        for ((e, &tau), &cutoff) in graph.edges().iter().zip(resistance.iter()).zip(&cutoffs) {
            let (_, g) = regularised_flow(h[e.source] - h[e.sink], tau, cutoff);
            let (a, b) = (slot[e.source], slot[e.sink]);
            if a != usize::MAX {
                jac[(a, a)] += g;
            }
            if b != usize::MAX {
                jac[(b, b)] += g;
            }
            if a != usize::MAX && b != usize::MAX {
                jac[(a, b)] -= g;
                jac[(b, a)] -= g;
            }
        }
        // Heads carry about eps*|h| of roundoff, so no iterate can beat
        // eps*|h|*max conductance in mass balance.
        let scale = h.amax() * (0..m).fold(T::zero(), |a, i| a.max(jac[(i, i)]));
        if r.amax() <= lit::<T>(64.0 * f64::EPSILON) * scale {
            break;
        }
        let step = jac
            .cholesky()
            .ok_or_else(|| Error::Unsatisfiable("singular hydraulic Jacobian".into()))?
            .solve(&r);

        let norm = r.norm();
        let mut t = T::one();
        loop {
            let mut trial = h.clone();
            for (s, &i) in unknown.iter().enumerate() {
                trial[i] += t * step[s];
            }
            let r_trial = residual(&trial);
            if r_trial.norm() < norm || t < lit(1e-6) {
                h = trial;
                r = r_trial;
                break;
            }
            t *= lit(0.5);
        }
    }

    let mut flows = DVector::zeros(graph.edge_count());
    let mut direction = Vec::with_capacity(graph.edge_count());
    for (k, ((e, &tau), &cutoff)) in graph.edges().iter().zip(resistance.iter()).zip(&cutoffs).enumerate() {
        let (q, _) = regularised_flow(h[e.source] - h[e.sink], tau, cutoff);
        flows[k] = q.abs();
        direction.push(if follows_declared(e, &h) { 1 } else { -1 });
    }
    Ok(HydraulicState {
        heads: h,
        flows,
        direction,
    })
}

fn check_reachable<T: Scalar>(graph: &NetworkGraph<T>, fixed: &[Option<T>], demand: &DVector<T>) -> Result<()> {
    let adj = graph.adjacency_lists();
    let mut seen: Vec<bool> = fixed.iter().map(Option::is_some).collect();
    let mut stack: Vec<usize> = (0..seen.len()).filter(|&i| seen[i]).collect();
    while let Some(i) = stack.pop() {
        for &(j, _) in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    match (0..seen.len()).find(|&i| !seen[i] && demand[i] > T::zero()) {
        Some(i) => Err(Error::Unsatisfiable(format!(
            "demand node `{}` is not connected to any fixed head",
            graph.nodes()[i].id
        ))),
        None => Ok(()),
    }
}

/// Mass-balance residual `max |inflow - demand|` over non-fixed nodes.
pub fn mass_balance_residual<T: Scalar>(
    graph: &NetworkGraph<T>,
    state: &HydraulicState<T>,
    fixed: &[Option<T>],
    demand: &DVector<T>,
) -> T {
    let mut inflow = DVector::<T>::zeros(graph.node_count());
    for (k, e) in graph.edges().iter().enumerate() {
        let q = state.flows[k] * if state.direction[k] < 0 { -T::one() } else { T::one() };
        inflow[e.sink] += q;
        inflow[e.source] -= q;
    }
    (0..graph.node_count())
        .filter(|&i| fixed[i].is_none())
        .map(|i| (inflow[i] - demand[i]).abs())
        .fold(T::zero(), |a, b| a.max(b))
}

/// Worst violation of `h_i - h_j = sign * tau * q^1.852` over all pipes, in m.
pub fn head_loss_residual<T: Scalar>(
    graph: &NetworkGraph<T>,
    resistance: &DVector<T>,
    state: &HydraulicState<T>,
) -> T {
    let e_hw = lit::<T>(HW_EXPONENT);
    graph
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let sign = if state.direction[k] < 0 { -T::one() } else { T::one() };
            let loss = sign * resistance[k] * state.flows[k].powf(e_hw);
            (state.heads[e.source] - state.heads[e.sink] - loss).abs()
        })
        .fold(T::zero(), |a, b| a.max(b))
}

/// Ground truth and noisy sensor readings for one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioData<T: Scalar> {
    pub truth: HydraulicState<T>,
    /// The same operating point without the leak.
    pub leak_free: HydraulicState<T>,
    /// Readings at the leaky operating point; `baseline_heads` holds the noisy
    /// leak-free pressure readings.
    pub measurements: MeasurementBundle<T>,
}

/// Solves the scenario with and without its leak and samples sensor readings
/// with zero-mean Gaussian noise. Output depends only on the inputs and `seed`.
pub fn generate_scenario<T: Scalar>(
    graph: &NetworkGraph<T>,
    layout: &SensorLayout,
    scenario: &Scenario,
    seed: u64,
    options: &SolverOptions,
) -> Result<ScenarioData<T>> {
    let truth = solve_steady_state(graph, scenario, options)?;
    let leak_free = if scenario.leak.is_some() {
        solve_steady_state(graph, &scenario.without_leak(), options)?
    } else {
        truth.clone()
    };
    let customer = scenario.junction_demands::<T>(graph, false)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |value: T, sigma: f64| -> Result<T> {
        let dist = Normal::new(0.0, sigma)
            .map_err(|e| Error::Config(format!("invalid noise level {sigma}: {e}")))?;
        Ok(value + lit::<T>(dist.sample(&mut rng)))
    };
    let noise = scenario.noise;
    let heads = layout
        .pressure()
        .iter()
        .map(|&i| noisy(truth.heads[i], noise.pressure))
        .collect::<Result<Vec<_>>>()?;
    let demands = layout
        .amr()
        .iter()
        .map(|&i| noisy(customer[i], noise.amr))
        .collect::<Result<Vec<_>>>()?;
    let flows = layout
        .flow()
        .iter()
        .map(|&k| noisy(truth.flows[k], noise.flow))
        .collect::<Result<Vec<_>>>()?;
    let baseline = layout
        .pressure()
        .iter()
        .map(|&i| noisy(leak_free.heads[i], noise.pressure))
        .collect::<Result<Vec<_>>>()?;

    Ok(ScenarioData {
        truth,
        leak_free,
        measurements: MeasurementBundle {
            heads: DVector::from_vec(heads),
            demands: DVector::from_vec(demands),
            flows: DVector::from_vec(flows),
            baseline_heads: Some(DVector::from_vec(baseline)),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_incidence, pressure_incidence, resistance_coefficients, Node, Pipe};
    use approx::assert_relative_eq;

    fn scenario(fixed: &[(&str, f64)], demands: &[(&str, f64)]) -> Scenario {
        Scenario {
            demands: demands.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            fixed_heads: fixed.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            leak: None,
            noise: NoiseLevels::default(),
            seed: 0,
        }
    }

    /// Single pipe with resistance exactly 1.
    fn unit_pipe() -> NetworkGraph<f64> {
        let (mu, delta) = (100.0f64, 0.1f64);
        let rho = mu.powf(1.852) * delta.powf(4.87) / 10.67;
        NetworkGraph::new(
            vec![Node::inlet("r", 50.0), Node::junction("j", 0.0)],
            vec![Pipe::new("p", "r", "j", rho, mu, delta)],
        )
        .unwrap()
    }

    #[test]
    fn flows_from_heads_examples() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let one = DVector::from_element(1, 1.0);
        let q = flows_from_heads(&one, &b, &DVector::from_vec(vec![2.0, 1.0])).unwrap();
        assert_eq!(q[0], 1.0);
        let q = flows_from_heads(&one, &b, &DVector::from_vec(vec![2.0, 2.0])).unwrap();
        assert_eq!(q[0], 0.0);
        let q = flows_from_heads(&DVector::from_element(1, 2.0), &b, &DVector::from_vec(vec![4.0, 0.0])).unwrap();
        // python: 2**(1/1.852)
        assert_relative_eq!(q[0], 1.4539289837624991, max_relative = 1e-14);

        let err = flows_from_heads(&one, &b, &DVector::from_vec(vec![0.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::InconsistentIncidence { edge: 0, .. }));
        let q = flows_from_heads(&one, &b, &DVector::from_vec(vec![0.0, 1e-12])).unwrap();
        assert_eq!(q[0], 0.0);
    }

    #[test]
    fn demands_from_flows_examples() {
        // pipe into the AMR node: its B column entry is -1
        let bc = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert_eq!(demands_from_flows(&bc, &DVector::from_element(1, 1.0)).unwrap()[0], 1.0);
        assert_eq!(demands_from_flows(&bc, &DVector::from_element(1, 0.0)).unwrap()[0], 0.0);
        // path v1 -> v2 -> v3, AMR at v2: inflow 1, outflow 0.4
        let bc = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let c = demands_from_flows(&bc, &DVector::from_vec(vec![1.0, 0.4])).unwrap();
        assert_relative_eq!(c[0], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn fast_paths_match_dense_relations() {
        let g = crate::graph::tests::path3();
        let tau = resistance_coefficients(&g).unwrap();
        let h = DVector::from_vec(vec![10.0, 9.0, 9.5]);
        let b = pressure_incidence(&g, &h).unwrap();
        let dense = flows_from_heads(&tau, &b, &h).unwrap();
        let fast = flow_magnitudes(&g, &tau, &h);
        assert_eq!(dense, fast);
        let bc = b.select_columns([1usize, 2].iter());
        let c = demands_from_flows(&bc, &dense).unwrap();
        let inflow = net_inflow(&g, &h, &fast);
        assert_relative_eq!(c[0], inflow[1], epsilon = 1e-15);
        assert_relative_eq!(c[1], inflow[2], epsilon = 1e-15);
    }

    #[test]
    fn single_pipe_solve() {
        let g = unit_pipe();
        let s = solve_steady_state(&g, &scenario(&[("r", 50.0)], &[("j", 1.0)]), &SolverOptions::default()).unwrap();
        assert_relative_eq!(s.flows[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(s.heads[1], 49.0, epsilon = 1e-9);
        assert_eq!(s.direction, vec![1]);
    }

    #[test]
    fn zero_demand_gives_flat_heads() {
        let g = crate::graph::tests::path3();
        let s = solve_steady_state(&g, &scenario(&[("v1", 30.0)], &[]), &SolverOptions::default()).unwrap();
        assert!(s.flows.iter().all(|&q| q == 0.0));
        assert!(s.heads.iter().all(|&h| h == 30.0));
    }

    #[test]
    fn parallel_paths_split_equally() {
        let g = NetworkGraph::new(
            vec![
                Node::inlet("r", 60.0),
                Node::junction("a", 0.0),
                Node::junction("b", 0.0),
                Node::junction("d", 0.0),
            ],
            vec![
                Pipe::new("1", "r", "a", 200.0, 110.0, 0.2),
                Pipe::new("2", "a", "d", 200.0, 110.0, 0.2),
                Pipe::new("3", "r", "b", 200.0, 110.0, 0.2),
                Pipe::new("4", "b", "d", 200.0, 110.0, 0.2),
            ],
        )
        .unwrap();
        let sc = scenario(&[("r", 60.0)], &[("d", 0.02)]);
        let s = solve_steady_state(&g, &sc, &SolverOptions::default()).unwrap();
        for q in s.flows.iter() {
            assert_relative_eq!(*q, 0.01, max_relative = 1e-9);
        }
        let (fixed, demand) = sc.resolve(&g).unwrap();
        assert!(mass_balance_residual(&g, &s, &fixed, &demand) <= 1e-8);
        let tau = resistance_coefficients(&g).unwrap();
        assert!(head_loss_residual(&g, &tau, &s) <= 1e-8);
    }

    #[test]
    fn round_trip_and_signed_flows() {
        let g = crate::graph::tests::path3();
        let sc = scenario(&[("v1", 40.0)], &[("v2", 0.003), ("v3", 0.002)]);
        let s = solve_steady_state(&g, &sc, &SolverOptions::default()).unwrap();
        let tau = resistance_coefficients(&g).unwrap();
        let b = pressure_incidence(&g, &s.heads).unwrap();
        let q = flows_from_heads(&tau, &b, &s.heads).unwrap();
        for (a, b) in q.iter().zip(s.flows.iter()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-6);
        }
        let m = build_incidence(&g);
        let net = m.transpose() * s.signed_flows();
        assert_relative_eq!(net[1], -0.003, epsilon = 1e-10);
        assert_relative_eq!(net[2], -0.002, epsilon = 1e-10);
    }

    #[test]
    fn scenario_validation() {
        let g = crate::graph::tests::path3();
        let opts = SolverOptions::default();
        assert!(solve_steady_state(&g, &scenario(&[], &[]), &opts).is_err());
        assert!(solve_steady_state(&g, &scenario(&[("v2", 1.0)], &[]), &opts).is_err());
        assert!(solve_steady_state(&g, &scenario(&[("v1", 1.0)], &[("v2", -1.0)]), &opts).is_err());
        assert!(solve_steady_state(&g, &scenario(&[("v1", 1.0)], &[("zz", 1.0)]), &opts).is_err());
        assert!(solve_steady_state(&g, &scenario(&[("v1", 1.0)], &[("v1", 1.0)]), &opts).is_err());
    }

    #[test]
    fn non_convergence_reports_worst_node() {
        let g = crate::graph::tests::path3();
        let opts = SolverOptions {
            max_iterations: 1,
            ..SolverOptions::default()
        };
        let err = solve_steady_state(&g, &scenario(&[("v1", 40.0)], &[("v3", 0.01)]), &opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 1, .. }), "{err}");
    }

    #[test]
    fn scenario_generation_contracts() {
        let g = crate::graph::tests::path3();
        let layout = SensorLayout::new(&g, &["v2", "v3"], &["v3"], &["p1"]).unwrap();
        let mut sc = scenario(&[("v1", 40.0)], &[("v2", 0.003), ("v3", 0.002)]);
        let opts = SolverOptions::default();

        let exact = generate_scenario::<f64>(&g, &layout, &sc, 7, &opts).unwrap();
        assert_eq!(exact.measurements.heads[0], exact.truth.heads[1]);
        assert_eq!(exact.measurements.heads[1], exact.truth.heads[2]);
        assert_eq!(exact.measurements.demands[0], 0.002);
        assert_eq!(exact.measurements.flows[0], exact.truth.flows[0]);

        sc.noise = NoiseLevels {
            pressure: 0.01,
            amr: 1e-5,
            flow: 1e-4,
        };
        let a = generate_scenario::<f64>(&g, &layout, &sc, 7, &opts).unwrap();
        let b = generate_scenario::<f64>(&g, &layout, &sc, 7, &opts).unwrap();
        assert_eq!(a.measurements, b.measurements);
        assert_ne!(a.measurements.heads, exact.measurements.heads);

        sc.leak = Some(Leak {
            node: "v2".into(),
            emitter: 0.0,
        });
        let zero_leak = generate_scenario::<f64>(&g, &layout, &sc, 7, &opts).unwrap();
        assert_eq!(zero_leak.truth, a.truth);
        assert_eq!(zero_leak.measurements, a.measurements);
    }

    #[test]
    fn scenario_json_round_trip() {
        let mut sc = scenario(&[("v1", 40.0)], &[("v2", 0.003)]);
        sc.leak = Some(Leak {
            node: "v2".into(),
            emitter: 0.001,
        });
        sc.seed = 42;
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc);
        let minimal = Scenario::from_json(r#"{"fixed_heads": {"v1": 40.0}}"#).unwrap();
        assert!(minimal.demands.is_empty() && minimal.leak.is_none());
    }
}
