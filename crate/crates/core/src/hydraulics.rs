//! Hazen-Williams resistance and head loss, Reynolds number and the
//! turbulent-flow threshold. Customary U.S. units: feet, cfs.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::network::Pipe;

/// Head-loss exponent on |q|·q, so ℏ ∝ |q|^1.852.
pub const HW_EXPONENT: f64 = 1.852;
/// HW_EXPONENT - 1.
pub const HW_FLOW_EXPONENT: f64 = 0.852;
/// Coefficient of the resistance formula in ft/cfs units.
pub const HW_COEFFICIENT: f64 = 4.727;
/// Diameter exponent of the resistance formula.
pub const HW_DIAMETER_EXPONENT: f64 = 4.871;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProperties {
    /// ft²/s
    pub kinematic_viscosity: f64,
    pub turbulence_threshold: f64,
}

impl Default for FluidProperties {
    fn default() -> Self {
        // water at about 60 °F
        Self {
            kinematic_viscosity: 1.21e-5,
            turbulence_threshold: 4000.0,
        }
    }
}

impl FluidProperties {
    pub fn validate(&self) -> Result<()> {
        if !(self.kinematic_viscosity > 0.0 && self.kinematic_viscosity.is_finite()) {
            return Err(Error::Config(format!(
                "kinematic viscosity must be positive, got {}",
                self.kinematic_viscosity
            )));
        }
        if !(self.turbulence_threshold > 0.0 && self.turbulence_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "turbulence threshold must be positive, got {}",
                self.turbulence_threshold
            )));
        }
        Ok(())
    }
}

/// Resistance A = 4.727·C^-1.852·d^-4.871·l, with d in feet.
pub fn resistance_coefficient(pipe: &Pipe) -> Result<f64> {
    for (parameter, value) in [
        ("length", pipe.length_ft),
        ("diameter", pipe.diameter_in),
        ("roughness", pipe.roughness),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::PipeParameter {
                pipe: pipe.id,
                parameter,
                value,
            });
        }
    }
    Ok(HW_COEFFICIENT
        * pipe.roughness.powf(-HW_EXPONENT)
        * pipe.diameter_ft().powf(-HW_DIAMETER_EXPONENT)
        * pipe.length_ft)
}

pub fn resistance_vector(pipes: &[Pipe]) -> Result<DVector<f64>> {
    let values = pipes
        .iter()
        .map(resistance_coefficient)
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(values))
}

/// ℏ = A·|q|^0.852·q for a single pipe.
#[inline]
pub fn pipe_head_loss(q: f64, resistance: f64) -> f64 {
    resistance * q.abs().powf(HW_FLOW_EXPONENT) * q
}

/// dℏ/dq = 1.852·A·|q|^0.852.
#[inline]
pub fn pipe_head_loss_slope(q: f64, resistance: f64) -> f64 {
    HW_EXPONENT * resistance * q.abs().powf(HW_FLOW_EXPONENT)
}

pub fn head_loss(q: &DVector<f64>, resistance: &DVector<f64>) -> DVector<f64> {
    q.zip_map(resistance, pipe_head_loss)
}

/// Re = d·|q| / (v·S), S = πd²/4.
pub fn reynolds_number(pipe: &Pipe, q: f64, fluid: &FluidProperties) -> f64 {
    pipe.diameter_ft() * q.abs() / (fluid.kinematic_viscosity * pipe.area_ft2())
}

/// Flow magnitude (cfs) at which the Reynolds number reaches the turbulence threshold.
pub fn min_turbulent_flow(pipe: &Pipe, fluid: &FluidProperties) -> f64 {
    fluid.turbulence_threshold * fluid.kinematic_viscosity * pipe.area_ft2() / pipe.diameter_ft()
}
