//! Network graph: one fixed-head reservoir (node 0), demand junctions
//! (nodes 1..=N) and Hazen-Williams pipes (links 1..=L).
//!
//! Quantities are stored in the units they are written in (GPM, inches, feet);
//! the solver converts to cfs and feet when it prepares a [`crate::System`].

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::units::{gpm_to_cfs, inches_to_feet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservoir {
    /// Total head, feet.
    pub head_ft: f64,
}

impl Reservoir {
    pub const ID: usize = 0;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub id: usize,
    /// Consumption, GPM. Stored positive; the model injects `-demand`.
    pub demand_gpm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pipe {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub length_ft: f64,
    pub diameter_in: f64,
    /// Hazen-Williams C.
    pub roughness: f64,
}

impl Pipe {
    pub fn diameter_ft(&self) -> f64 {
        inches_to_feet(self.diameter_in)
    }

    /// Cross-sectional area, ft².
    pub fn area_ft2(&self) -> f64 {
        let d = self.diameter_ft();
        std::f64::consts::PI * d * d / 4.0
    }
}

/// A single broken model assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ReservoirHead(f64),
    NoJunctions,
    JunctionId { expected: usize, found: usize },
    NegativeDemand { junction: usize, demand: f64 },
    PipeId { expected: usize, found: usize },
    PipeParameter { pipe: usize, parameter: &'static str, value: f64 },
    SelfLoop { pipe: usize },
    DanglingEndpoint { pipe: usize, node: usize },
    Disconnected { unreachable: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ReservoirHead(h) => {
                write!(f, "reservoir head must be finite and positive, got {h}")
            }
            Violation::NoJunctions => f.write_str("network has no junctions"),
            Violation::JunctionId { expected, found } => {
                write!(f, "junction ids not contiguous: expected {expected}, found {found}")
            }
            Violation::NegativeDemand { junction, demand } => {
                write!(f, "junction {junction} has negative demand {demand}")
            }
            Violation::PipeId { expected, found } => {
                write!(f, "pipe ids not contiguous: expected {expected}, found {found}")
            }
            Violation::PipeParameter { pipe, parameter, value } => {
                write!(f, "pipe {pipe} {parameter} must be positive and finite, got {value}")
            }
            Violation::SelfLoop { pipe } => write!(f, "self-loop pipe {pipe}"),
            Violation::DanglingEndpoint { pipe, node } => {
                write!(f, "pipe {pipe} references missing node {node}")
            }
            Violation::Disconnected { unreachable } => {
                write!(f, "disconnected: nodes {unreachable:?} unreachable from reservoir")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidNetwork(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    reservoir: Reservoir,
    junctions: Vec<Junction>,
    pipes: Vec<Pipe>,
}

impl Network {
    /// Assembles a network without checking it. See [`Network::validate`].
    pub fn new(reservoir: Reservoir, junctions: Vec<Junction>, pipes: Vec<Pipe>) -> Self {
        Self {
            reservoir,
            junctions,
            pipes,
        }
    }

    /// Assembles a network and rejects it on the first violation.
    pub fn checked(reservoir: Reservoir, junctions: Vec<Junction>, pipes: Vec<Pipe>) -> Result<Self> {
        let net = Self::new(reservoir, junctions, pipes);
        net.validate().into_result()?;
        Ok(net)
    }

    pub fn reservoir(&self) -> &Reservoir {
        &self.reservoir
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn pipes(&self) -> &[Pipe] {
        &self.pipes
    }

    /// Number of junctions, N.
    pub fn node_count(&self) -> usize {
        self.junctions.len()
    }

    /// Number of pipes, L.
    pub fn pipe_count(&self) -> usize {
        self.pipes.len()
    }

    /// Number of independent loops, L - N.
    pub fn loop_count(&self) -> usize {
        self.pipes.len().saturating_sub(self.junctions.len())
    }

    pub fn total_demand_gpm(&self) -> f64 {
        self.junctions.iter().map(|j| j.demand_gpm).sum()
    }

    /// Nodal injections s in cfs (negative for consumption).
    pub fn injections_cfs(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.junctions.len(),
            self.junctions.iter().map(|j| -gpm_to_cfs(j.demand_gpm)),
        )
    }

    /// Same network with every demand multiplied by `factor`.
    pub fn with_scaled_demands(&self, factor: f64) -> Self {
        let mut net = self.clone();
        for j in &mut net.junctions {
            j.demand_gpm *= factor;
        }
        net
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.junctions.len();

        if !(self.reservoir.head_ft.is_finite() && self.reservoir.head_ft > 0.0) {
            violations.push(Violation::ReservoirHead(self.reservoir.head_ft));
        }
        if n == 0 {
            violations.push(Violation::NoJunctions);
        }
        for (i, j) in self.junctions.iter().enumerate() {
            if j.id != i + 1 {
                violations.push(Violation::JunctionId {
                    expected: i + 1,
                    found: j.id,
                });
            }
            if !(j.demand_gpm >= 0.0 && j.demand_gpm.is_finite()) {
                violations.push(Violation::NegativeDemand {
                    junction: j.id,
                    demand: j.demand_gpm,
                });
            }
        }

        for (i, p) in self.pipes.iter().enumerate() {
            if p.id != i + 1 {
                violations.push(Violation::PipeId {
                    expected: i + 1,
                    found: p.id,
                });
            }
            for (parameter, value) in [
                ("length", p.length_ft),
                ("diameter", p.diameter_in),
                ("roughness", p.roughness),
            ] {
                if !(value > 0.0 && value.is_finite()) {
                    violations.push(Violation::PipeParameter {
                        pipe: p.id,
                        parameter,
                        value,
                    });
                }
            }
            if p.from == p.to {
                violations.push(Violation::SelfLoop { pipe: p.id });
            }
            for node in [p.from, p.to] {
                if node > n {
                    violations.push(Violation::DanglingEndpoint { pipe: p.id, node });
                }
            }
        }

        let unreachable = self.unreachable_nodes();
        if !unreachable.is_empty() {
            violations.push(Violation::Disconnected { unreachable });
        }

        ValidationReport { violations }
    }

    /// Nodes with no undirected path to the reservoir. Dangling pipes are ignored.
    fn unreachable_nodes(&self) -> Vec<usize> {
        let n = self.junctions.len();
        let mut adjacency = vec![Vec::new(); n + 1];
        for p in &self.pipes {
            if p.from <= n && p.to <= n && p.from != p.to {
                adjacency[p.from].push(p.to);
                adjacency[p.to].push(p.from);
            }
        }
        let mut seen = vec![false; n + 1];
        let mut queue = VecDeque::from([Reservoir::ID]);
        seen[Reservoir::ID] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        (1..=n).filter(|&i| !seen[i]).collect()
    }
}

/// Signed node-by-pipe incidence: +1 at a pipe's `from` node, -1 at its `to` node.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    /// (N+1)×L, row 0 is the reservoir.
    pub full: DMatrix<f64>,
    /// Row 0 of `full`.
    pub reservoir_row: DVector<f64>,
    /// Rows 1..=N of `full`.
    pub reduced: DMatrix<f64>,
    /// (from, to) per pipe, for sparse stamping.
    endpoints: Vec<(usize, usize)>,
}

impl Incidence {
    pub fn build(network: &Network) -> Result<Self> {
        network.validate().into_result()?;
        let n = network.node_count();
        let l = network.pipe_count();
        let mut full = DMatrix::zeros(n + 1, l);
        let mut endpoints = Vec::with_capacity(l);
        for (k, p) in network.pipes().iter().enumerate() {
            full[(p.from, k)] = 1.0;
            full[(p.to, k)] = -1.0;
            endpoints.push((p.from, p.to));
        }
        let reservoir_row = full.row(0).transpose();
        let reduced = full.rows(1, n).into_owned();
        Ok(Self {
            full,
            reservoir_row,
            reduced,
            endpoints,
        })
    }

    pub fn node_count(&self) -> usize {
        self.reduced.nrows()
    }

    pub fn pipe_count(&self) -> usize {
        self.reduced.ncols()
    }

    /// (from, to) node indices of each pipe, 0 being the reservoir.
    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    /// 𝓘·diag(w)·𝓘ᵀ over the junction rows, assembled by stamping.
    pub fn weighted_laplacian(&self, weights: &DVector<f64>) -> DMatrix<f64> {
        let n = self.node_count();
        let mut z = DMatrix::zeros(n, n);
        for (&(a, b), &w) in self.endpoints.iter().zip(weights.iter()) {
            if a > 0 {
                z[(a - 1, a - 1)] += w;
            }
            if b > 0 {
                z[(b - 1, b - 1)] += w;
            }
            if a > 0 && b > 0 {
                z[(a - 1, b - 1)] -= w;
                z[(b - 1, a - 1)] -= w;
            }
        }
        z
    }
}
