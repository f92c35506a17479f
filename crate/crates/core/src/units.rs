//! Unit handling at the I/O boundary.
//!
//! Everything inside the solver is cubic feet per second and feet. Files and
//! reports use gallons per minute and inches.

use std::fmt;
use std::str::FromStr;

use crate::error::UnitError;

/// Gallons per minute in one cubic foot per second.
pub const GPM_PER_CFS: f64 = 448.8312;

/// Inches per foot.
pub const INCHES_PER_FOOT: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Gpm,
    Cfs,
    Inches,
    Feet,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Gpm => "gpm",
            Unit::Cfs => "cfs",
            Unit::Inches => "in",
            Unit::Feet => "ft",
        })
    }
}

impl FromStr for Unit {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gpm" => Ok(Unit::Gpm),
            "cfs" => Ok(Unit::Cfs),
            "in" | "inch" | "inches" => Ok(Unit::Inches),
            "ft" | "foot" | "feet" => Ok(Unit::Feet),
            _ => Err(UnitError::Unknown(s.to_string())),
        }
    }
}

/// Converts `value` between the supported unit pairs (GPM/cfs and inches/feet).
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64, UnitError> {
    use Unit::*;
    match (from, to) {
        (a, b) if a == b => Ok(value),
        (Gpm, Cfs) => Ok(value / GPM_PER_CFS),
        (Cfs, Gpm) => Ok(value * GPM_PER_CFS),
        (Inches, Feet) => Ok(value / INCHES_PER_FOOT),
        (Feet, Inches) => Ok(value * INCHES_PER_FOOT),
        (a, b) => Err(UnitError::Incompatible(a, b)),
    }
}

#[inline]
pub fn gpm_to_cfs(gpm: f64) -> f64 {
    gpm / GPM_PER_CFS
}

#[inline]
pub fn cfs_to_gpm(cfs: f64) -> f64 {
    cfs * GPM_PER_CFS
}

#[inline]
pub fn inches_to_feet(inches: f64) -> f64 {
    inches / INCHES_PER_FOOT
}
