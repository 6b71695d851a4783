//! Head-only, dual and joint UKF estimators seeded by AW-GSI.
//!
//! All three share the diffusion process `F_h` and the Hazen-Williams
//! measurement model; they differ in how flows enter the state:
//!
//! * [`ukf_aw_gsi`]: heads only, measured through sensed heads and AMR demands.
//! * [`dual_ukf_aw_gsi`]: a head UKF and a linear flow KF exchanging their
//!   current estimates as virtual measurements every `k_ex` iterations.
//! * [`joint_ukf_aw_gsi`]: one UKF over the stacked `[h; q]` state.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bench::rmse;
use crate::error::{Error, Result};
use crate::filters::{
    kf_predict, kf_update, ukf_correct, ukf_measurement_stats, ut_weights_with, CovarianceWeightForm,
    GaussianBelief, UtWeights,
};
use crate::graph::{GraphWeights, NetworkGraph, SensorLayout, StructuralMatrices};
use crate::hydraulics::{flow_magnitudes, net_inflow, HydraulicState};
use crate::interpolation::{aw_gsi, baseline_heads, inlet_heads, GsiConfig, GsiSolution};
use crate::scalar::{lit, to_f64, Scalar};

/// Sensor readings for one snapshot, ordered as the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBundle<T: Scalar> {
    /// Pressure readings as heads (m).
    pub heads: DVector<T>,
    /// AMR demands (m³/s).
    pub demands: DVector<T>,
    /// Flow meter readings (m³/s).
    pub flows: DVector<T>,
    /// Leak-free pressure readings used to build the AW-GSI baseline.
    pub baseline_heads: Option<DVector<T>>,
}

impl<T: Scalar> MeasurementBundle<T> {
    pub fn check(&self, layout: &SensorLayout) -> Result<()> {
        let want = [
            ("head readings", self.heads.len(), layout.n_s()),
            ("demand readings", self.demands.len(), layout.n_a()),
            ("flow readings", self.flows.len(), layout.n_q()),
        ];
        for (what, got, n) in want {
            if got != n {
                return Err(Error::Measurement(format!("{got} {what} for {n} sensors")));
            }
        }
        if let Some(b) = &self.baseline_heads {
            if b.len() != layout.n_s() {
                return Err(Error::Measurement(format!(
                    "{} baseline head readings for {} sensors",
                    b.len(),
                    layout.n_s()
                )));
            }
        }
        Ok(())
    }
}

/// Noise covariances (diagonal values) of the dual estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualNoise {
    pub q_head: f64,
    pub q_flow: f64,
    pub r_pressure: f64,
    pub r_demand: f64,
    /// Head filter rows comparing `q(h)` with the flow estimate.
    pub r_head_flow: f64,
    pub r_flow: f64,
    /// Flow filter rows comparing flows with `q(ĥ)`.
    pub r_virtual_flow: f64,
}

impl Default for DualNoise {
    fn default() -> Self {
        DualNoise {
            q_head: 1.0,
            q_flow: 1e-5,
            r_pressure: 1e-4,
            r_demand: 1e-4,
            r_head_flow: 1e3,
            r_flow: 1e-6,
            r_virtual_flow: 1e-5,
        }
    }
}

/// Noise covariances (diagonal values) of the joint estimator, in the order
/// of the measurement blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JointNoise {
    pub q_head: f64,
    pub q_flow: f64,
    pub r_pressure: f64,
    pub r_flow: f64,
    pub r_demand: f64,
    pub r_head_flow: f64,
    pub r_virtual_flow: f64,
}

impl Default for JointNoise {
    fn default() -> Self {
        JointNoise {
            q_head: 1.0,
            q_flow: 1e-5,
            r_pressure: 1e-4,
            r_flow: 1e-6,
            r_demand: 1e-4,
            r_head_flow: 1e3,
            r_virtual_flow: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub alpha: f64,
    pub beta: f64,
    pub covariance_weight: CovarianceWeightForm,
    /// Virtual measurement refresh period.
    pub k_ex: usize,
    pub k_max: usize,
    /// Stop early once `‖x_k − x_{k−1}‖∞` drops below this.
    pub delta_tolerance: Option<f64>,
    /// Overrides the `n_a / n_V` diffusion blend.
    pub blend: Option<f64>,
    pub initial_head_variance: f64,
    pub initial_flow_variance: f64,
    /// Carry flows in l/s inside the filters.
    pub scale_flows: bool,
    pub dual: DualNoise,
    pub joint: JointNoise,
    pub gsi: GsiConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            alpha: 1e-3,
            beta: 2.0,
            covariance_weight: CovarianceWeightForm::BetaSquared,
            k_ex: 1,
            k_max: 50,
            delta_tolerance: None,
            blend: None,
            initial_head_variance: 1.0,
            initial_flow_variance: 1e-2,
            scale_flows: false,
            dual: DualNoise::default(),
            joint: JointNoise::default(),
            gsi: GsiConfig::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: EstimatorConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k_ex == 0 {
            return bad("k_ex must be at least 1".into());
        }
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return bad(format!("alpha must be nonzero, got {}", self.alpha));
        }
        if let Some(t) = self.delta_tolerance {
            if !(t > 0.0) {
                return bad(format!("delta_tolerance must be positive, got {t}"));
            }
        }
        if let Some(b) = self.blend {
            if !(0.0..=1.0).contains(&b) {
                return bad(format!("blend must lie in [0, 1], got {b}"));
            }
        }
        let d = &self.dual;
        let j = &self.joint;
        let positive = [
            ("initial_head_variance", self.initial_head_variance),
            ("initial_flow_variance", self.initial_flow_variance),
            ("dual.q_head", d.q_head),
            ("dual.q_flow", d.q_flow),
            ("dual.r_pressure", d.r_pressure),
            ("dual.r_demand", d.r_demand),
            ("dual.r_head_flow", d.r_head_flow),
            ("dual.r_flow", d.r_flow),
            ("dual.r_virtual_flow", d.r_virtual_flow),
            ("joint.q_head", j.q_head),
            ("joint.q_flow", j.q_flow),
            ("joint.r_pressure", j.r_pressure),
            ("joint.r_flow", j.r_flow),
            ("joint.r_demand", j.r_demand),
            ("joint.r_head_flow", j.r_head_flow),
            ("joint.r_virtual_flow", j.r_virtual_flow),
            ("gsi.zeta", self.gsi.zeta),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    fn flow_scale(&self) -> f64 {
        if self.scale_flows {
            1e3
        } else {
            1.0
        }
    }
}

/// Stop rule for the filter loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePolicy {
    pub k_max: usize,
    pub delta_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    DeltaTolerance,
}

/// `Some(reason)` once iteration `k` should be the last one.
pub fn convergence_check<T: Scalar>(
    k: usize,
    previous: &DVector<T>,
    current: &DVector<T>,
    policy: &ConvergencePolicy,
) -> Option<StopReason> {
    if k >= policy.k_max {
        return Some(StopReason::MaxIterations);
    }
    match policy.delta_tolerance {
        Some(tol) if previous.len() == current.len() && to_f64((current - previous).amax()) < tol => {
            Some(StopReason::DeltaTolerance)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    HeadOnly,
    Dual,
    Joint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::HeadOnly => "ukf",
            Method::Dual => "dual",
            Method::Joint => "joint",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ukf" | "head" | "head_only" => Ok(Method::HeadOnly),
            "dual" => Ok(Method::Dual),
            "joint" => Ok(Method::Joint),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Loop time up to and including this iteration.
    pub elapsed: Duration,
    /// Head RMSE in m, when the truth is known.
    pub rmse_h: Option<f64>,
    /// Flow RMSE in m³/s, when the truth is known.
    pub rmse_q: Option<f64>,
}

/// Accumulated wall time per phase of the filter loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimes {
    pub predict: Duration,
    pub propagate: Duration,
    pub correct: Duration,
    pub exchange: Duration,
}

/// Frobenius norms of the blocks of the joint covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceBlocks {
    pub head: f64,
    pub flow: f64,
    pub cross: f64,
}

#[derive(Debug, Clone)]
pub struct EstimationReport<T: Scalar> {
    pub method: Method,
    pub heads: DVector<T>,
    /// Flow magnitudes (m³/s).
    pub flows: DVector<T>,
    pub initial_heads: DVector<T>,
    pub initial_flows: DVector<T>,
    pub initial_rmse_h: Option<f64>,
    pub initial_rmse_q: Option<f64>,
    pub iterations: usize,
    pub reason: StopReason,
    pub trace: Vec<IterationRecord>,
    pub elapsed: Duration,
    pub phases: PhaseTimes,
    /// Head (or joint) covariance after the last iteration.
    pub covariance: DMatrix<T>,
    pub flow_covariance: Option<DMatrix<T>>,
    /// Largest `|P − Pᵀ|` seen after any correction.
    pub max_asymmetry: f64,
    pub blocks: Option<CovarianceBlocks>,
}

impl<T: Scalar> EstimationReport<T> {
    pub fn final_rmse_h(&self) -> Option<f64> {
        self.trace.last().map_or(self.initial_rmse_h, |r| r.rmse_h)
    }

    pub fn final_rmse_q(&self) -> Option<f64> {
        self.trace.last().map_or(self.initial_rmse_q, |r| r.rmse_q)
    }

    /// The trace entry for iteration `k`, or the initial guess for `k = 0`.
    pub fn at(&self, k: usize) -> Option<IterationRecord> {
        if k == 0 {
            return Some(IterationRecord {
                iteration: 0,
                elapsed: Duration::ZERO,
                rmse_h: self.initial_rmse_h,
                rmse_q: self.initial_rmse_q,
            });
        }
        self.trace.get(k - 1).copied()
    }
}

/// Everything the estimators share for one network and snapshot: the
/// structural matrices, the AW weights and the AW-GSI initial guess.
#[derive(Debug, Clone)]
pub struct EstimationSetup<'a, T: Scalar> {
    pub graph: &'a NetworkGraph<T>,
    pub layout: &'a SensorLayout,
    pub matrices: &'a StructuralMatrices<T>,
    pub aw: GraphWeights<T>,
    pub initial: GsiSolution<T>,
    pub baseline: DVector<T>,
}

impl<'a, T: Scalar> EstimationSetup<'a, T> {
    /// Baseline from a unit-weight GSI pass over the leak-free readings (or
    /// the current readings when none are given), then AW-GSI.
    pub fn prepare(
        graph: &'a NetworkGraph<T>,
        layout: &'a SensorLayout,
        matrices: &'a StructuralMatrices<T>,
        bundle: &MeasurementBundle<T>,
        config: &GsiConfig,
    ) -> Result<Self> {
        bundle.check(layout)?;
        let readings = bundle.baseline_heads.as_ref().unwrap_or(&bundle.heads);
        let baseline = baseline_heads(graph, matrices, layout, readings, config)?;
        Self::with_baseline(graph, layout, matrices, bundle, baseline, config)
    }

    pub fn with_baseline(
        graph: &'a NetworkGraph<T>,
        layout: &'a SensorLayout,
        matrices: &'a StructuralMatrices<T>,
        bundle: &MeasurementBundle<T>,
        baseline: DVector<T>,
        config: &GsiConfig,
    ) -> Result<Self> {
        bundle.check(layout)?;
        let (initial, aw) = aw_gsi(graph, matrices, layout, &bundle.heads, &baseline, config)?;
        Ok(EstimationSetup {
            graph,
            layout,
            matrices,
            aw,
            initial,
            baseline,
        })
    }
}

/// `F_h = a (I − Φ⁻¹Ω) + Φ⁻¹Ω` with `Φ = D^AW`, `Ω = W^AW` and blend `a`.
pub fn build_process_matrix_fh<T: Scalar>(weights: &GraphWeights<T>, blend: T) -> Result<DMatrix<T>> {
    let n = weights.degree.len();
    let mut walk = weights.adjacency.clone();
    for (i, (mut row, &d)) in walk.row_iter_mut().zip(weights.degree.iter()).enumerate() {
        if !(d > T::zero()) {
            return Err(Error::InvalidGraph(format!("node {i} has zero weighted degree")));
        }
        row /= d;
    }
    let id = DMatrix::<T>::identity(n, n);
    Ok((&id - &walk) * blend + walk)
}

/// The default blend `n_a / n_V`.
pub fn default_blend<T: Scalar>(n_a: usize, n_v: usize) -> T {
    lit::<T>(n_a as f64) / lit::<T>(n_v as f64)
}

/// Hazen-Williams quantities evaluated at arbitrary heads.
struct HeadModel<'m, T: Scalar> {
    graph: &'m NetworkGraph<T>,
    matrices: &'m StructuralMatrices<T>,
    flow_scale: T,
}

impl<T: Scalar> HeadModel<'_, T> {
    fn flows(&self, h: &DVector<T>) -> DVector<T> {
        flow_magnitudes(self.graph, &self.matrices.resistance, h)
    }

    /// `−B_cᵀ q(h)` and `q(h)` in one pass.
    fn demands_and_flows(&self, h: &DVector<T>) -> (DVector<T>, DVector<T>) {
        let q = self.flows(h);
        let inflow = net_inflow(self.graph, h, &q);
        let amr = self.matrices.amr.columns();
        (DVector::from_iterator(amr.len(), amr.iter().map(|&i| inflow[i])), q)
    }
}

/// `[S h; −B_cᵀ (T⁻¹ B h)^(1/1.852)]` with `B` rebuilt from `h`.
pub fn g_head<T: Scalar>(
    h: &DVector<T>,
    graph: &NetworkGraph<T>,
    matrices: &StructuralMatrices<T>,
) -> DVector<T> {
    let model = HeadModel {
        graph,
        matrices,
        flow_scale: T::one(),
    };
    let sensed = &matrices.pressure_selector * h;
    let (c, _) = model.demands_and_flows(h);
    stack(&[sensed.as_slice(), c.as_slice()])
}

/// `[S h; S_q q; −B_cᵀ q(h); q(h); q]` for the stacked state `x = [h; q]`.
pub fn g_joint<T: Scalar>(
    x: &DVector<T>,
    graph: &NetworkGraph<T>,
    matrices: &StructuralMatrices<T>,
) -> DVector<T> {
    let model = HeadModel {
        graph,
        matrices,
        flow_scale: T::one(),
    };
    joint_measurement(&model, x)
}

fn joint_measurement<T: Scalar>(model: &HeadModel<'_, T>, x: &DVector<T>) -> DVector<T> {
    let n_v = model.graph.node_count();
    let n_e = model.graph.edge_count();
    let h = x.rows(0, n_v).into_owned();
    let q = x.rows(n_v, n_e);
    let sensed = &model.matrices.pressure_selector * &h;
    let sensed_q = &model.matrices.flow_selector * q;
    let (c, qh) = model.demands_and_flows(&h);
    let qh = qh * model.flow_scale;
    stack(&[sensed.as_slice(), sensed_q.as_slice(), c.as_slice(), qh.as_slice(), q.as_slice()])
}

fn stack<T: Scalar>(parts: &[&[T]]) -> DVector<T> {
    let len = parts.iter().map(|p| p.len()).sum();
    DVector::from_iterator(len, parts.iter().flat_map(|p| p.iter().copied()))
}

fn diag<T: Scalar>(blocks: &[(usize, f64)]) -> DMatrix<T> {
    let len = blocks.iter().map(|b| b.0).sum();
    DMatrix::from_diagonal(&DVector::from_iterator(
        len,
        blocks.iter().flat_map(|&(n, v)| std::iter::repeat_n(lit::<T>(v), n)),
    ))
}

fn asymmetry<T: Scalar>(p: &DMatrix<T>) -> f64 {
    to_f64((p - p.transpose()).amax())
}

/// Shared per-run state of the three loops.
struct Run<'s, 'a, T: Scalar> {
    setup: &'s EstimationSetup<'a, T>,
    truth: Option<&'s HydraulicState<T>>,
    model: HeadModel<'a, T>,
    inlets: Vec<(usize, T)>,
    weights: UtWeights<T>,
    f_h: DMatrix<T>,
    policy: ConvergencePolicy,
    trace: Vec<IterationRecord>,
    phases: PhaseTimes,
    elapsed: Duration,
    max_asymmetry: f64,
}

impl<'s, 'a, T: Scalar> Run<'s, 'a, T> {
    fn new(
        setup: &'s EstimationSetup<'a, T>,
        config: &'s EstimatorConfig,
        truth: Option<&'s HydraulicState<T>>,
        state_dim: usize,
    ) -> Result<Self> {
        config.validate()?;
        let graph = setup.graph;
        let blend = config
            .blend
            .map(lit::<T>)
            .unwrap_or_else(|| default_blend(setup.layout.n_a(), graph.node_count()));
        if let Some(t) = truth {
            if t.heads.len() != graph.node_count() || t.flows.len() != graph.edge_count() {
                return Err(Error::Dimension("truth does not match the network".into()));
            }
        }
        Ok(Run {
            setup,
            truth,
            model: HeadModel {
                graph,
                matrices: setup.matrices,
                flow_scale: lit(config.flow_scale()),
            },
            inlets: inlet_heads(graph),
            weights: ut_weights_with(
                state_dim,
                lit(config.alpha),
                lit(config.beta),
                config.covariance_weight,
            )?,
            f_h: build_process_matrix_fh(&setup.aw, blend)?,
            policy: ConvergencePolicy {
                k_max: config.k_max,
                delta_tolerance: config.delta_tolerance,
            },
            trace: Vec::new(),
            phases: PhaseTimes::default(),
            elapsed: Duration::ZERO,
            max_asymmetry: 0.0,
        })
    }

    fn n_v(&self) -> usize {
        self.setup.graph.node_count()
    }

    fn n_e(&self) -> usize {
        self.setup.graph.edge_count()
    }

    fn scale(&self) -> T {
        self.model.flow_scale
    }

    fn clamp(&self, h: &mut DVector<T>, offset: usize) {
        for &(i, head) in &self.inlets {
            h[offset + i] = head;
        }
    }

    fn errors(&self, h: &DVector<T>, q: &DVector<T>) -> Result<(Option<f64>, Option<f64>)> {
        match self.truth {
            Some(t) => Ok((Some(rmse(&t.heads, h)?), Some(rmse(&t.flows, q)?))),
            None => Ok((None, None)),
        }
    }

    fn record(&mut self, k: usize, step: Duration, h: &DVector<T>, q: &DVector<T>) -> Result<()> {
        self.elapsed += step;
        let (rmse_h, rmse_q) = self.errors(h, q)?;
        self.trace.push(IterationRecord {
            iteration: k,
            elapsed: self.elapsed,
            rmse_h,
            rmse_q,
        });
        Ok(())
    }

    fn timed<R>(slot: &mut Duration, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        *slot += start.elapsed();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        method: Method,
        heads: DVector<T>,
        flows: DVector<T>,
        iterations: usize,
        reason: StopReason,
        covariance: DMatrix<T>,
        flow_covariance: Option<DMatrix<T>>,
        blocks: Option<CovarianceBlocks>,
    ) -> Result<EstimationReport<T>> {
        let initial_heads = self.setup.initial.heads.clone();
        let mut clamped = initial_heads.clone();
        self.clamp(&mut clamped, 0);
        let initial_flows = self.model.flows(&clamped);
        let (initial_rmse_h, initial_rmse_q) = self.errors(&clamped, &initial_flows)?;
        Ok(EstimationReport {
            method,
            heads,
            flows,
            initial_heads,
            initial_flows,
            initial_rmse_h,
            initial_rmse_q,
            iterations,
            reason,
            trace: self.trace,
            elapsed: self.elapsed,
            phases: self.phases,
            covariance,
            flow_covariance,
            max_asymmetry: self.max_asymmetry,
            blocks,
        })
    }
}

fn initial_state<T: Scalar>(run: &Run<'_, '_, T>) -> (DVector<T>, DVector<T>) {
    let mut h0 = run.setup.initial.heads.clone();
    run.clamp(&mut h0, 0);
    let q0 = run.model.flows(&h0);
    (h0, q0)
}

fn reason_at_zero(policy: &ConvergencePolicy) -> Option<StopReason> {
    (policy.k_max == 0).then_some(StopReason::MaxIterations)
}

/// Head-only UKF: diffusion prediction, head and demand correction.
pub fn ukf_aw_gsi<T: Scalar>(
    setup: &EstimationSetup<'_, T>,
    bundle: &MeasurementBundle<T>,
    config: &EstimatorConfig,
    truth: Option<&HydraulicState<T>>,
) -> Result<EstimationReport<T>> {
    bundle.check(setup.layout)?;
    let mut run = Run::new(setup, config, truth, setup.graph.node_count())?;
    let (n_v, n_s, n_a) = (run.n_v(), setup.layout.n_s(), setup.layout.n_a());
    let noise = config.dual;
    let q_h = diag::<T>(&[(n_v, noise.q_head)]);
    let r = diag::<T>(&[(n_s, noise.r_pressure), (n_a, noise.r_demand)]);
    let z = stack(&[bundle.heads.as_slice(), bundle.demands.as_slice()]);

    let (h0, _) = initial_state(&run);
    let mut belief = GaussianBelief::new(h0, diag(&[(n_v, config.initial_head_variance)]))?;
    let mut k = 0;
    let mut reason = reason_at_zero(&run.policy);
    while reason.is_none() {
        k += 1;
        let start = Instant::now();
        let prev = belief.mean.clone();
        let predicted = Run::<T>::timed(&mut run.phases.predict, || kf_predict(&belief, &run.f_h, &q_h))?;
        let stats = Run::<T>::timed(&mut run.phases.propagate, || {
            ukf_measurement_stats(
                &predicted,
                |h| {
                    let (c, _) = run.model.demands_and_flows(h);
                    stack(&[(&setup.matrices.pressure_selector * h).as_slice(), c.as_slice()])
                },
                &r,
                &run.weights,
            )
        })?;
        belief = Run::<T>::timed(&mut run.phases.correct, || ukf_correct(&predicted, &stats, &z))?;
        run.clamp(&mut belief.mean, 0);
        let step = start.elapsed();
        run.max_asymmetry = run.max_asymmetry.max(asymmetry(&belief.cov));
        let q = run.model.flows(&belief.mean);
        run.record(k, step, &belief.mean, &q)?;
        reason = convergence_check(k, &prev, &belief.mean, &run.policy);
    }
    let flows = run.model.flows(&belief.mean);
    let reason = reason.unwrap_or(StopReason::MaxIterations);
    run.finish(Method::HeadOnly, belief.mean, flows, k, reason, belief.cov, None, None)
}

/// Head UKF paired with a linear flow KF through virtual measurements.
pub fn dual_ukf_aw_gsi<T: Scalar>(
    setup: &EstimationSetup<'_, T>,
    bundle: &MeasurementBundle<T>,
    config: &EstimatorConfig,
    truth: Option<&HydraulicState<T>>,
) -> Result<EstimationReport<T>> {
    bundle.check(setup.layout)?;
    let mut run = Run::new(setup, config, truth, setup.graph.node_count())?;
    let (n_v, n_e) = (run.n_v(), run.n_e());
    let (n_s, n_a, n_q) = (setup.layout.n_s(), setup.layout.n_a(), setup.layout.n_q());
    let s = run.scale();
    let s2 = to_f64(s * s);
    let noise = config.dual;

    let q_h = diag::<T>(&[(n_v, noise.q_head)]);
    let r_h = diag::<T>(&[(n_s, noise.r_pressure), (n_a, noise.r_demand), (n_e, noise.r_head_flow * s2)]);
    let f_q = DMatrix::<T>::identity(n_e, n_e);
    let q_q = diag::<T>(&[(n_e, noise.q_flow * s2)]);
    let mut g_q = DMatrix::<T>::zeros(n_q + n_e, n_e);
    g_q.view_mut((0, 0), (n_q, n_e)).copy_from(&setup.matrices.flow_selector);
    g_q.view_mut((n_q, 0), (n_e, n_e)).fill_with_identity();
    let r_q = diag::<T>(&[(n_q, noise.r_flow * s2), (n_e, noise.r_virtual_flow * s2)]);

    let (h0, q0) = initial_state(&run);
    let q0 = q0 * s;
    let flows_sensed = &bundle.flows * s;
    let mut z_h = stack(&[bundle.heads.as_slice(), bundle.demands.as_slice(), q0.as_slice()]);
    let mut z_q = stack(&[flows_sensed.as_slice(), q0.as_slice()]);

    let mut head = GaussianBelief::new(h0, diag(&[(n_v, config.initial_head_variance)]))?;
    let mut flow = GaussianBelief::new(q0, diag(&[(n_e, config.initial_flow_variance * s2)]))?;
    let mut k = 0;
    let mut reason = reason_at_zero(&run.policy);
    while reason.is_none() {
        k += 1;
        let start = Instant::now();
        let prev = head.mean.clone();
        let (head_pred, flow_pred) = Run::<T>::timed(&mut run.phases.predict, || {
            Ok::<_, Error>((kf_predict(&head, &run.f_h, &q_h)?, kf_predict(&flow, &f_q, &q_q)?))
        })?;
        let stats = Run::<T>::timed(&mut run.phases.propagate, || {
            ukf_measurement_stats(
                &head_pred,
                |h| {
                    let (c, qh) = run.model.demands_and_flows(h);
                    let qh = qh * s;
                    stack(&[
                        (&setup.matrices.pressure_selector * h).as_slice(),
                        c.as_slice(),
                        qh.as_slice(),
                    ])
                },
                &r_h,
                &run.weights,
            )
        })?;
        (head, flow) = Run::<T>::timed(&mut run.phases.correct, || {
            Ok::<_, Error>((
                ukf_correct(&head_pred, &stats, &z_h)?,
                kf_update(&flow_pred, &g_q, &r_q, &z_q)?,
            ))
        })?;
        run.clamp(&mut head.mean, 0);
        if k % config.k_ex == 0 {
            Run::<T>::timed(&mut run.phases.exchange, || {
                z_h.rows_mut(n_s + n_a, n_e).copy_from(&flow.mean);
                let qh = run.model.flows(&head.mean) * s;
                z_q.rows_mut(n_q, n_e).copy_from(&qh);
            });
        }
        let step = start.elapsed();
        run.max_asymmetry = run
            .max_asymmetry
            .max(asymmetry(&head.cov))
            .max(asymmetry(&flow.cov));
        let q = &flow.mean / s;
        run.record(k, step, &head.mean, &q)?;
        reason = convergence_check(k, &prev, &head.mean, &run.policy);
    }
    let reason = reason.unwrap_or(StopReason::MaxIterations);
    let flows = &flow.mean / s;
    let flow_cov = &flow.cov / (s * s);
    run.finish(Method::Dual, head.mean, flows, k, reason, head.cov, Some(flow_cov), None)
}

/// One UKF over the stacked state `[h; q]`.
pub fn joint_ukf_aw_gsi<T: Scalar>(
    setup: &EstimationSetup<'_, T>,
    bundle: &MeasurementBundle<T>,
    config: &EstimatorConfig,
    truth: Option<&HydraulicState<T>>,
) -> Result<EstimationReport<T>> {
    bundle.check(setup.layout)?;
    let n_v = setup.graph.node_count();
    let n_e = setup.graph.edge_count();
    let mut run = Run::new(setup, config, truth, n_v + n_e)?;
    let (n_s, n_a, n_q) = (setup.layout.n_s(), setup.layout.n_a(), setup.layout.n_q());
    let s = run.scale();
    let s2 = to_f64(s * s);
    let noise = config.joint;

    let mut f_x = DMatrix::<T>::zeros(n_v + n_e, n_v + n_e);
    f_x.view_mut((0, 0), (n_v, n_v)).copy_from(&run.f_h);
    f_x.view_mut((n_v, n_v), (n_e, n_e)).fill_with_identity();
    let q_x = diag::<T>(&[(n_v, noise.q_head), (n_e, noise.q_flow * s2)]);
    let r_x = diag::<T>(&[
        (n_s, noise.r_pressure),
        (n_q, noise.r_flow * s2),
        (n_a, noise.r_demand),
        (n_e, noise.r_head_flow * s2),
        (n_e, noise.r_virtual_flow * s2),
    ]);

    let (h0, q0) = initial_state(&run);
    let q0 = q0 * s;
    let flows_sensed = &bundle.flows * s;
    let mut z_x = stack(&[
        bundle.heads.as_slice(),
        flows_sensed.as_slice(),
        bundle.demands.as_slice(),
        q0.as_slice(),
        q0.as_slice(),
    ]);
    let virtual_at = n_s + n_q + n_a;

    let x0 = stack(&[h0.as_slice(), q0.as_slice()]);
    let p0 = diag(&[(n_v, config.initial_head_variance), (n_e, config.initial_flow_variance * s2)]);
    let mut belief = GaussianBelief::new(x0, p0)?;
    let mut k = 0;
    let mut reason = reason_at_zero(&run.policy);
    while reason.is_none() {
        k += 1;
        let start = Instant::now();
        let prev = belief.mean.clone();
        let predicted = Run::<T>::timed(&mut run.phases.predict, || kf_predict(&belief, &f_x, &q_x))?;
        let stats = Run::<T>::timed(&mut run.phases.propagate, || {
            ukf_measurement_stats(&predicted, |x| joint_measurement(&run.model, x), &r_x, &run.weights)
        })?;
        belief = Run::<T>::timed(&mut run.phases.correct, || ukf_correct(&predicted, &stats, &z_x))?;
        run.clamp(&mut belief.mean, 0);
        if k % config.k_ex == 0 {
            Run::<T>::timed(&mut run.phases.exchange, || {
                let h = belief.mean.rows(0, n_v).into_owned();
                let qh = run.model.flows(&h) * s;
                let q = belief.mean.rows(n_v, n_e).into_owned();
                z_x.rows_mut(virtual_at, n_e).copy_from(&q);
                z_x.rows_mut(virtual_at + n_e, n_e).copy_from(&qh);
            });
        }
        let step = start.elapsed();
        run.max_asymmetry = run.max_asymmetry.max(asymmetry(&belief.cov));
        let h = belief.mean.rows(0, n_v).into_owned();
        let q = belief.mean.rows(n_v, n_e) / s;
        run.record(k, step, &h, &q)?;
        reason = convergence_check(k, &prev, &belief.mean, &run.policy);
    }
    let reason = reason.unwrap_or(StopReason::MaxIterations);
    let heads = belief.mean.rows(0, n_v).into_owned();
    let flows = belief.mean.rows(n_v, n_e) / s;
    let mut cov = belief.cov;
    if s != T::one() {
        let inv = T::one() / s;
        for i in 0..n_v + n_e {
            for j in 0..n_v + n_e {
                let f = if i >= n_v { inv } else { T::one() } * if j >= n_v { inv } else { T::one() };
                cov[(i, j)] *= f;
            }
        }
    }
    let blocks = CovarianceBlocks {
        head: to_f64(cov.view((0, 0), (n_v, n_v)).norm()),
        flow: to_f64(cov.view((n_v, n_v), (n_e, n_e)).norm()),
        cross: to_f64(cov.view((0, n_v), (n_v, n_e)).norm()),
    };
    run.finish(Method::Joint, heads, flows, k, reason, cov, None, Some(blocks))
}

/// Dispatches to the estimator for `method`.
pub fn estimate<T: Scalar>(
    method: Method,
    setup: &EstimationSetup<'_, T>,
    bundle: &MeasurementBundle<T>,
    config: &EstimatorConfig,
    truth: Option<&HydraulicState<T>>,
) -> Result<EstimationReport<T>> {
    match method {
        Method::HeadOnly => ukf_aw_gsi(setup, bundle, config, truth),
        Method::Dual => dual_ukf_aw_gsi(setup, bundle, config, truth),
        Method::Joint => joint_ukf_aw_gsi(setup, bundle, config, truth),
    }
}
