use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, FieldAmplitude, Result};

/// Broadband phase shifter with optional insertion loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseShifterDevice {
    pub phase: f64,
    #[serde(default)]
    pub insertion_loss_db: f64,
}

impl PhaseShifterDevice {
    pub fn new(phase: f64) -> Self {
        PhaseShifterDevice {
            phase,
            insertion_loss_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(Error::invalid("insertion_loss_db", "must be >= 0"));
        }
        Ok(())
    }

    /// Field factor applied by the device.
    pub fn factor(&self) -> Complex64 {
        Complex64::from_polar(10f64.powf(-self.insertion_loss_db / 20.0), self.phase)
    }
}

pub fn phase_shifter_transfer(ps: &PhaseShifterDevice, input: FieldAmplitude) -> FieldAmplitude {
    input * ps.factor()
}

/// Push-pull Mach-Zehnder modulator without chirp.
///
/// `extinction_ratio_db = None` models an ideal device with a perfect null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MzmDevice {
    pub phase_difference: f64,
    #[serde(default)]
    pub extinction_ratio_db: Option<f64>,
}

impl MzmDevice {
    pub fn ideal(phase_difference: f64) -> Self {
        MzmDevice {
            phase_difference,
            extinction_ratio_db: None,
        }
    }

    /// Phase difference giving field transmission `magnitude` in [0, 1].
    pub fn for_magnitude(magnitude: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&magnitude) {
            return Err(Error::Unencodable {
                target: magnitude,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(MzmDevice::ideal(2.0 * magnitude.acos()))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phase_difference.is_finite() {
            return Err(Error::invalid("phase_difference", "must be finite"));
        }
        if let Some(er) = self.extinction_ratio_db {
            if !(er > 0.0) {
                return Err(Error::invalid("extinction_ratio_db", "must be positive"));
            }
        }
        Ok(())
    }

    /// Real field factor `cos(dphi/2)`, floored in magnitude by the extinction ratio.
    pub fn factor(&self) -> f64 {
        let c = (0.5 * self.phase_difference).cos();
        let floor = self
            .extinction_ratio_db
            .map_or(0.0, |er| 10f64.powf(-er / 20.0));
        if c.abs() >= floor {
            c
        } else if c < 0.0 {
            -floor
        } else {
            floor
        }
    }
}

pub fn mzm_transfer(mzm: &MzmDevice, input: FieldAmplitude) -> FieldAmplitude {
    input * mzm.factor()
}
