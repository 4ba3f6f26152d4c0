//! Analytic transfer functions for the photonic elements and the
//! voltage-to-optical tuning model of the rings.
//!
//! Every device is an immutable parameter record; transfers are pure
//! functions of those records and can be evaluated from any thread.

mod encoder;
mod modulators;
mod ring;

pub use encoder::{Encoding, PhaseRingEncoder, RingEncoder};
pub use modulators::{mzm_transfer, phase_shifter_transfer, MzmDevice, PhaseShifterDevice};
pub use ring::{
    apply_bias, ring_phase_winding, ring_transfer, CouplingRegime, DiodeModel, RingDesign,
    RingDevice, CRITICAL_COUPLING_TOL, PROBE_WAVELENGTH_NM, V_OFF, V_ON,
};
