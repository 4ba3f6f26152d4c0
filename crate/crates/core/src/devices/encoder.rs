use serde::{Deserialize, Serialize};

use super::ring::{RingDesign, RingDevice, V_OFF, V_ON};
use crate::{Error, Result};

/// Bias setting that realises a target through-port magnitude at the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub voltage: f64,
    pub magnitude: f64,
    /// Residual transmission phase at the probe, in (-pi, pi].
    pub phase: f64,
}

const BISECTION_STEPS: usize = 80;

/// Inverts the ring magnitude response at a fixed probe wavelength.
///
/// The ring is calibrated so its resonance sits on the probe at `V_OFF`
/// and is detuned to the red at `V_ON`. Between the two biases the probe
/// magnitude rises monotonically as the bias decreases, so a target is
/// found by bisection on voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingEncoder {
    ring: RingDevice,
    probe_nm: f64,
}

impl RingEncoder {
    pub fn new(design: &RingDesign, probe_nm: f64, detuning_linewidths: f64) -> Result<Self> {
        let ring = design.calibrate_binary(probe_nm, detuning_linewidths)?;
        Ok(RingEncoder { ring, probe_nm })
    }

    pub fn from_ring(ring: RingDevice, probe_nm: f64) -> Self {
        RingEncoder { ring, probe_nm }
    }

    pub fn probe_nm(&self) -> f64 {
        self.probe_nm
    }

    /// Calibrated ring at its current bias.
    pub fn ring(&self) -> &RingDevice {
        &self.ring
    }

    pub fn ring_at(&self, voltage: f64) -> Result<RingDevice> {
        self.ring.with_voltage(voltage)
    }

    fn magnitude_at(&self, voltage: f64) -> f64 {
        RingDevice {
            voltage,
            ..self.ring
        }
        .transfer_unchecked(self.probe_nm)
        .norm()
    }

    /// Magnitude representing logical "1" (bias `V_ON`).
    pub fn unit(&self) -> f64 {
        self.magnitude_at(V_ON)
    }

    /// Residual magnitude at logical "0" (bias `V_OFF`).
    pub fn floor(&self) -> f64 {
        self.magnitude_at(V_OFF)
    }

    fn encoding_at(&self, voltage: f64) -> Encoding {
        let e = RingDevice {
            voltage,
            ..self.ring
        }
        .transfer_unchecked(self.probe_nm);
        Encoding {
            voltage,
            magnitude: e.norm(),
            phase: e.arg(),
        }
    }

    /// Encodes a device-level magnitude. Targets at or below the floor map
    /// to `V_OFF`.
    pub fn encode_magnitude(&self, target: f64) -> Result<Encoding> {
        let (lo, hi) = (self.floor(), self.unit());
        if !target.is_finite() || target < 0.0 || target > hi * (1.0 + 1e-9) {
            return Err(Error::Unencodable {
                target,
                min: lo,
                max: hi,
            });
        }
        if target <= lo {
            return Ok(self.encoding_at(V_OFF));
        }
        if target >= hi {
            return Ok(self.encoding_at(V_ON));
        }
        // magnitude decreases from V_ON to V_OFF
        let (mut v_lo, mut v_hi) = (V_ON, V_OFF);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (v_lo + v_hi);
            if self.magnitude_at(mid) > target {
                v_lo = mid;
            } else {
                v_hi = mid;
            }
        }
        Ok(self.encoding_at(0.5 * (v_lo + v_hi)))
    }

    /// Binary encoding: "1" at `V_ON`, "0" at `V_OFF`.
    pub fn encode_bit(&self, bit: bool) -> Encoding {
        self.encoding_at(if bit { V_ON } else { V_OFF })
    }
}

/// Sets the transmission phase of a lossless ring at one wavelength.
///
/// The ring resonates on `wavelength_nm` at `center_voltage`, where its
/// field factor is -1. Detuning by up to `span_linewidths` on either side
/// rotates the factor monotonically, which gives a wavelength-selective
/// phase shifter with unit magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRingEncoder {
    ring: RingDevice,
    wavelength_nm: f64,
    v_lo: f64,
    v_hi: f64,
}

impl PhaseRingEncoder {
    pub const CENTER_VOLTAGE: f64 = 1.0;
    pub const HALF_SPAN_V: f64 = 0.5;

    pub fn new(design: &RingDesign, wavelength_nm: f64, span_linewidths: f64) -> Result<Self> {
        let shift = span_linewidths * design.linewidth_nm(wavelength_nm) / Self::HALF_SPAN_V;
        let ring = design.calibrate(wavelength_nm, Self::CENTER_VOLTAGE, shift)?;
        Ok(PhaseRingEncoder {
            ring,
            wavelength_nm,
            v_lo: Self::CENTER_VOLTAGE - Self::HALF_SPAN_V,
            v_hi: Self::CENTER_VOLTAGE + Self::HALF_SPAN_V,
        })
    }

    pub fn ring(&self) -> &RingDevice {
        &self.ring
    }

    /// Phase relative to the on-resonance value, i.e. `arg(-E)`.
    fn relative_phase(&self, voltage: f64) -> f64 {
        (-RingDevice {
            voltage,
            ..self.ring
        }
        .transfer_unchecked(self.wavelength_nm))
        .arg()
    }

    /// Reachable range of the relative phase.
    pub fn range(&self) -> (f64, f64) {
        (self.relative_phase(self.v_hi), self.relative_phase(self.v_lo))
    }

    /// Bias giving relative phase `psi` (the ring's field factor is then
    /// `-exp(i psi)`).
    pub fn encode_relative_phase(&self, psi: f64) -> Result<RingDevice> {
        let (min, max) = self.range();
        if !(min..=max).contains(&psi) {
            return Err(Error::Unencodable {
                target: psi,
                min,
                max,
            });
        }
        // relative phase decreases with voltage
        let (mut lo, mut hi) = (self.v_lo, self.v_hi);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.relative_phase(mid) > psi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.ring.with_voltage(0.5 * (lo + hi))
    }
}
