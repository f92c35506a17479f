//! Machine-readable outputs: the JSON solution document and the trace CSV.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::jacobian::ContractionReport;
use crate::solver::{Residuals, SolveResult, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualsDoc {
    pub continuity_gpm: f64,
    pub energy_ft: f64,
}

impl From<Residuals> for ResidualsDoc {
    fn from(r: Residuals) -> Self {
        Self {
            continuity_gpm: r.continuity_gpm,
            energy_ft: r.energy_ft,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionDoc {
    pub rho: f64,
    pub alpha: f64,
    pub local_contraction: bool,
    pub empirical_ratio: Option<f64>,
    pub eigenvalue_magnitudes: Vec<f64>,
    pub fixed_point_residual_gpm: f64,
}

impl From<&ContractionReport> for ContractionDoc {
    fn from(r: &ContractionReport) -> Self {
        Self {
            rho: r.spectral_radius,
            alpha: r.rate_estimate,
            local_contraction: r.is_local_contraction,
            empirical_ratio: r.empirical_ratio,
            eigenvalue_magnitudes: r.eigenvalue_magnitudes.clone(),
            fixed_point_residual_gpm: r.fixed_point_residual_gpm,
        }
    }
}

/// Flows are per pipe (ids 1..=L), heads per junction (ids 1..=N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub flows_gpm: Vec<f64>,
    pub heads_ft: Vec<f64>,
    pub reservoir_intake_gpm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: ResidualsDoc,
    pub contraction: Option<ContractionDoc>,
    pub warnings: Vec<String>,
}

impl SolutionDocument {
    pub fn from_result(result: &SolveResult, contraction: Option<&ContractionReport>) -> Self {
        let mut warnings: Vec<String> = result.warnings.iter().map(|w| w.to_string()).collect();
        if result.floor_activations > 0 {
            warnings.push(format!(
                "flow floor active in {} conductance evaluations",
                result.floor_activations
            ));
        }
        Self {
            flows_gpm: result.flows_gpm().iter().copied().collect(),
            heads_ft: result.heads_ft.iter().copied().collect(),
            reservoir_intake_gpm: result.reservoir_intake_gpm,
            iterations: result.iterations,
            converged: result.converged,
            residuals: result.residuals.into(),
            contraction: contraction.map(ContractionDoc::from),
            warnings,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Two-decimal table for people.
    pub fn write_table(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "pipe  flow_gpm")?;
        for (i, q) in self.flows_gpm.iter().enumerate() {
            writeln!(out, "{:>4}  {:>10.2}", i + 1, q)?;
        }
        writeln!(out, "node  head_ft")?;
        for (i, h) in self.heads_ft.iter().enumerate() {
            writeln!(out, "{:>4}  {:>10.2}", i + 1, h)?;
        }
        writeln!(out, "reservoir intake {:.2} GPM", self.reservoir_intake_gpm)?;
        writeln!(
            out,
            "{} after {} iterations",
            if self.converged { "converged" } else { "NOT converged" },
            self.iterations
        )
    }
}

/// `iter,step_inf_gpm,ratio`, LF endings, blank ratio for the first row.
pub fn write_trace_csv(out: &mut dyn Write, trace: &[TraceRecord]) -> io::Result<()> {
    writeln!(out, "iter,step_inf_gpm,ratio")?;
    for r in trace {
        match r.ratio {
            Some(ratio) => writeln!(out, "{},{},{}", r.iter, r.step_inf_gpm, ratio)?,
            None => writeln!(out, "{},{},", r.iter, r.step_inf_gpm)?,
        }
    }
    Ok(())
}
