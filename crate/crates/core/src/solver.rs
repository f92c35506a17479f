//! Fixed-point iteration q ← T(q) for the steady-state water-flow equations.
//!
//! Each application of the map freezes the Hazen-Williams conductances
//! G = A⁻¹·|q|^-0.852 at the current flows, solves the weighted-Laplacian
//! system Z·y = s for the junction head offsets y = h - h₀, and returns the
//! flows G ⊙ (𝓘ᵀy) that this head field would drive through the pipes.
//! A spanning tree makes T constant; loops give T a nontrivial derivative.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::hydraulics::{self, FluidProperties, HW_FLOW_EXPONENT};
use crate::network::{Incidence, Network};
use crate::units::{cfs_to_gpm, gpm_to_cfs};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialFlow {
    /// Same flow on every pipe, GPM.
    Uniform(f64),
    /// One flow per pipe, GPM.
    PerPipe(Vec<f64>),
}

impl Default for InitialFlow {
    fn default() -> Self {
        InitialFlow::Uniform(600.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once ‖q − T(q)‖∞ ≤ this, GPM.
    pub tolerance_gpm: f64,
    pub max_iterations: usize,
    pub initial_flow: InitialFlow,
    /// Lower bound on |q| inside the conductances, cfs.
    pub flow_floor_cfs: f64,
    pub fluid: FluidProperties,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance_gpm: 1e-3,
            max_iterations: 1000,
            initial_flow: InitialFlow::default(),
            flow_floor_cfs: 1e-8,
            fluid: FluidProperties::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_gpm > 0.0 && self.tolerance_gpm.is_finite()) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance_gpm
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.flow_floor_cfs > 0.0 && self.flow_floor_cfs.is_finite()) {
            return Err(Error::Config(format!(
                "flow floor must be positive, got {}",
                self.flow_floor_cfs
            )));
        }
        if let InitialFlow::PerPipe(v) = &self.initial_flow {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("initial flows must be finite".into()));
            }
        }
        self.fluid.validate()
    }

    /// q⁰ in cfs.
    pub fn initial_flows_cfs(&self, pipe_count: usize) -> Result<DVector<f64>> {
        match &self.initial_flow {
            InitialFlow::Uniform(gpm) => Ok(DVector::repeat(pipe_count, gpm_to_cfs(*gpm))),
            InitialFlow::PerPipe(v) if v.len() == pipe_count => {
                Ok(DVector::from_iterator(pipe_count, v.iter().map(|&x| gpm_to_cfs(x))))
            }
            InitialFlow::PerPipe(v) => Err(Error::FlowLength {
                expected: pipe_count,
                got: v.len(),
            }),
        }
    }
}

/// G_ℓ = max(|q_ℓ|, floor)^-0.852 / A_ℓ.
pub fn conductance(q: &DVector<f64>, resistance: &DVector<f64>, floor: f64) -> DVector<f64> {
    q.zip_map(resistance, |q, a| q.abs().max(floor).powf(-HW_FLOW_EXPONENT) / a)
}

/// Number of entries where the conductance floor is active.
pub fn floor_activations(q: &DVector<f64>, floor: f64) -> usize {
    q.iter().filter(|x| x.abs() < floor).count()
}

/// Network data prepared for repeated map evaluations, in cfs and feet.
#[derive(Debug, Clone)]
pub struct System {
    network: Network,
    incidence: Incidence,
    resistance: DVector<f64>,
    injections: DVector<f64>,
    reservoir_head: f64,
    flow_floor: f64,
}

impl System {
    pub fn new(network: &Network) -> Result<Self> {
        Self::with_flow_floor(network, SolverConfig::default().flow_floor_cfs)
    }

    pub fn with_flow_floor(network: &Network, flow_floor: f64) -> Result<Self> {
        if !(flow_floor > 0.0 && flow_floor.is_finite()) {
            return Err(Error::Config(format!("flow floor must be positive, got {flow_floor}")));
        }
        let incidence = Incidence::build(network)?;
        let resistance = hydraulics::resistance_vector(network.pipes())?;
        Ok(Self {
            network: network.clone(),
            incidence,
            resistance,
            injections: network.injections_cfs(),
            reservoir_head: network.reservoir().head_ft,
            flow_floor,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    /// A, one entry per pipe.
    pub fn resistance(&self) -> &DVector<f64> {
        &self.resistance
    }

    /// s in cfs.
    pub fn injections(&self) -> &DVector<f64> {
        &self.injections
    }

    pub fn reservoir_head(&self) -> f64 {
        self.reservoir_head
    }

    pub fn flow_floor(&self) -> f64 {
        self.flow_floor
    }

    pub fn node_count(&self) -> usize {
        self.incidence.node_count()
    }

    pub fn pipe_count(&self) -> usize {
        self.incidence.pipe_count()
    }

    pub(crate) fn check_flow_len(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.pipe_count() {
            return Err(Error::FlowLength {
                expected: self.pipe_count(),
                got: q.len(),
            });
        }
        Ok(())
    }

    pub fn conductance(&self, q: &DVector<f64>) -> DVector<f64> {
        conductance(q, &self.resistance, self.flow_floor)
    }

    /// Z = 𝓘·diag(G)·𝓘ᵀ.
    pub fn laplacian(&self, g: &DVector<f64>) -> DMatrix<f64> {
        self.incidence.weighted_laplacian(g)
    }

    pub(crate) fn factor(&self, g: &DVector<f64>) -> Result<Cholesky<f64, Dyn>> {
        self.laplacian(g)
            .cholesky()
            .ok_or(Error::NumericallyDisconnected)
    }

    /// Head offsets y = Z(q)⁻¹·s, feet.
    fn head_offsets(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.factor(g)?.solve(&self.injections))
    }

    /// T(q) in cfs.
    pub fn apply_map(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_flow_len(q)?;
        let g = self.conductance(q);
        let y = self.head_offsets(&g)?;
        Ok(g.component_mul(&(self.incidence.reduced.tr_mul(&y))))
    }

    /// h = Z(q)⁻¹·s + h₀·1, feet.
    pub fn recover_heads(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_flow_len(q)?;
        if self.injections.iter().all(|&s| s == 0.0) {
            return Ok(DVector::repeat(self.node_count(), self.reservoir_head));
        }
        let g = self.conductance(q);
        Ok(self.head_offsets(&g)?.add_scalar(self.reservoir_head))
    }

    /// s₀ = 𝓘₀·q, GPM.
    pub fn reservoir_intake_gpm(&self, q: &DVector<f64>) -> f64 {
        reservoir_intake_gpm(q, &self.incidence)
    }

    pub fn residuals(&self, q: &DVector<f64>, h: &DVector<f64>) -> Residuals {
        let continuity = &self.incidence.reduced * q - &self.injections;
        let drop = self.incidence.reduced.tr_mul(&h.add_scalar(-self.reservoir_head));
        let energy = hydraulics::head_loss(q, &self.resistance) - drop;
        Residuals {
            continuity_gpm: cfs_to_gpm(continuity.amax()),
            energy_ft: energy.amax(),
        }
    }
}

pub fn reservoir_intake_gpm(q: &DVector<f64>, incidence: &Incidence) -> f64 {
    cfs_to_gpm(incidence.reservoir_row.dot(q))
}

/// ∞-norms of the continuity (GPM) and energy (ft) equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub continuity_gpm: f64,
    pub energy_ft: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// k ≥ 1; the record describes the update that produced qᵏ.
    pub iter: usize,
    /// ‖qᵏ − qᵏ⁻¹‖∞, GPM.
    pub step_inf_gpm: f64,
    /// step_k / step_{k-1}; absent for k = 1.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowFlowWarning {
    pub pipe: usize,
    pub flow_gpm: f64,
    pub min_turbulent_gpm: f64,
}

impl fmt::Display for LowFlowWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pipe {}: |q| = {:.4} GPM below turbulent minimum {:.4} GPM",
            self.pipe,
            self.flow_gpm.abs(),
            self.min_turbulent_gpm
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub flows_cfs: DVector<f64>,
    pub heads_ft: DVector<f64>,
    pub reservoir_intake_gpm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// ‖q* − T(q*)‖∞ at the returned flows, GPM.
    pub final_step_gpm: f64,
    pub trace: Vec<TraceRecord>,
    pub residuals: Residuals,
    /// Conductance evaluations that hit the flow floor, summed over iterations.
    pub floor_activations: usize,
    pub warnings: Vec<LowFlowWarning>,
}

impl SolveResult {
    pub fn flows_gpm(&self) -> DVector<f64> {
        self.flows_cfs.map(cfs_to_gpm)
    }

    /// Ratio of the last two trace steps, if there are at least two.
    pub fn last_ratio(&self) -> Option<f64> {
        self.trace.last().and_then(|r| r.ratio)
    }
}

pub fn solve(network: &Network, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let system = System::with_flow_floor(network, config.flow_floor_cfs)?;
    solve_system(&system, config)
}

/// Runs the iteration on a prepared system. Non-convergence is reported in
/// the result, not as an error.
pub fn solve_system(system: &System, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let l = system.pipe_count();
    let mut q = config.initial_flows_cfs(l)?;

    if system.injections().iter().all(|&s| s == 0.0) {
        return Ok(finish(system, config, DVector::zeros(l), 0, true, 0.0, Vec::new(), 0));
    }

    let floor = system.flow_floor();
    let mut floor_hits = floor_activations(&q, floor);
    let mut next = system.apply_map(&q)?;
    let mut step = cfs_to_gpm((&q - &next).amax());
    let mut trace = Vec::new();
    let mut previous: Option<f64> = None;
    let mut k = 0;

    while step > config.tolerance_gpm && step.is_finite() && k < config.max_iterations {
        k += 1;
        trace.push(TraceRecord {
            iter: k,
            step_inf_gpm: step,
            ratio: previous.map(|p| step / p),
        });
        previous = Some(step);
        q = next;
        floor_hits += floor_activations(&q, floor);
        next = system.apply_map(&q)?;
        step = cfs_to_gpm((&q - &next).amax());
    }

    let converged = step <= config.tolerance_gpm;
    Ok(finish(system, config, q, k, converged, step, trace, floor_hits))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    system: &System,
    config: &SolverConfig,
    q: DVector<f64>,
    iterations: usize,
    converged: bool,
    final_step_gpm: f64,
    trace: Vec<TraceRecord>,
    floor_activations: usize,
) -> SolveResult {
    let heads = system
        .recover_heads(&q)
        .unwrap_or_else(|_| DVector::from_element(system.node_count(), f64::NAN));
    let residuals = system.residuals(&q, &heads);
    let warnings = low_flow_warnings(system, &q, &config.fluid);
    SolveResult {
        reservoir_intake_gpm: system.reservoir_intake_gpm(&q),
        flows_cfs: q,
        heads_ft: heads,
        iterations,
        converged,
        final_step_gpm,
        trace,
        residuals,
        floor_activations,
        warnings,
    }
}

/// Pipes whose flow sits below the turbulent-regime minimum.
pub fn low_flow_warnings(system: &System, q: &DVector<f64>, fluid: &FluidProperties) -> Vec<LowFlowWarning> {
    system
        .network()
        .pipes()
        .iter()
        .zip(q.iter())
        .filter_map(|(pipe, &flow)| {
            let q_min = hydraulics::min_turbulent_flow(pipe, fluid);
            (flow.abs() < q_min).then(|| LowFlowWarning {
                pipe: pipe.id,
                flow_gpm: cfs_to_gpm(flow),
                min_turbulent_gpm: cfs_to_gpm(q_min),
            })
        })
        .collect()
}
