use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, FieldAmplitude, Result};

/// Probe wavelength used throughout the logic gate experiment.
pub const PROBE_WAVELENGTH_NM: f64 = 1526.0;

/// Tolerance used when classifying a ring as critically coupled.
pub const CRITICAL_COUPLING_TOL: f64 = 1e-9;

/// Global bias pair used to encode logical values on the rings.
pub const V_ON: f64 = 1.2;
pub const V_OFF: f64 = 1.4;

/// All-pass micro-ring resonator with a linearised voltage tuning model.
///
/// The round-trip phase uses a first-order expansion of the propagation
/// constant in optical frequency around `reference_wavelength_nm`:
///
/// `theta(lambda, V) = 2 pi L [ n_g / lambda + (n_eff(V) - n_g) / lambda_ref ]`
///
/// so `theta(lambda_ref) = 2 pi L n_eff / lambda_ref` and resonances are exactly
/// equally spaced in optical frequency with a spacing set by the group index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingDevice {
    /// Self-coupling coefficient. The cross-coupling is derived.
    pub r: f64,
    /// Round-trip amplitude at zero bias.
    pub a0: f64,
    pub roundtrip_length_um: f64,
    /// Effective index at zero bias and at the reference wavelength.
    pub n_eff0: f64,
    pub n_group: f64,
    /// Effective index change per volt (negative: blue shift).
    pub dn_dv: f64,
    /// Round-trip amplitude change per volt.
    pub da_dv: f64,
    pub voltage: f64,
    #[serde(default = "default_reference_wavelength")]
    pub reference_wavelength_nm: f64,
    #[serde(default = "default_voltage_range")]
    pub voltage_range: (f64, f64),
}

fn default_reference_wavelength() -> f64 {
    PROBE_WAVELENGTH_NM
}

fn default_voltage_range() -> (f64, f64) {
    (0.0, 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingRegime {
    OverCoupled,
    CriticallyCoupled,
    UnderCoupled,
}

impl CouplingRegime {
    pub fn classify(a: f64, r: f64, tol: f64) -> Self {
        if (a - r).abs() <= tol {
            CouplingRegime::CriticallyCoupled
        } else if a > r {
            CouplingRegime::OverCoupled
        } else {
            CouplingRegime::UnderCoupled
        }
    }
}

impl RingDevice {
    /// Validates the parameter record.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.r) {
            return Err(Error::invalid("r", format!("{} not in [0, 1)", self.r)));
        }
        if !(self.a0 > 0.0 && self.a0 <= 1.0) {
            return Err(Error::invalid("a0", format!("{} not in (0, 1]", self.a0)));
        }
        for (name, v) in [
            ("roundtrip_length_um", self.roundtrip_length_um),
            ("n_eff0", self.n_eff0),
            ("n_group", self.n_group),
            ("reference_wavelength_nm", self.reference_wavelength_nm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("{v} must be positive")));
            }
        }
        if !self.dn_dv.is_finite() || !self.da_dv.is_finite() {
            return Err(Error::invalid("dn_dv/da_dv", "must be finite"));
        }
        let (lo, hi) = self.voltage_range;
        if !(lo <= hi) {
            return Err(Error::invalid("voltage_range", "min exceeds max"));
        }
        if !(lo..=hi).contains(&self.voltage) {
            return Err(Error::OutOfEnvelope {
                voltage: self.voltage,
                min: lo,
                max: hi,
            });
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        (1.0 - self.r * self.r).sqrt()
    }

    /// Effective round-trip amplitude at the applied bias, clamped to [0, 1].
    pub fn round_trip_amplitude(&self) -> f64 {
        (self.a0 + self.da_dv * self.voltage).clamp(0.0, 1.0)
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff0 + self.dn_dv * self.voltage
    }

    fn length_nm(&self) -> f64 {
        self.roundtrip_length_um * 1e3
    }

    /// Round-trip phase in radians (not reduced modulo 2 pi).
    pub fn round_trip_phase(&self, wavelength_nm: f64) -> f64 {
        TAU * self.length_nm()
            * (self.n_group / wavelength_nm
                + (self.n_eff() - self.n_group) / self.reference_wavelength_nm)
    }

    /// Complex field transmission of the through port.
    pub fn transfer(&self, wavelength_nm: f64) -> Result<FieldAmplitude> {
        if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
            return Err(Error::invalid(
                "wavelength_nm",
                format!("{wavelength_nm} must be positive"),
            ));
        }
        Ok(self.transfer_unchecked(wavelength_nm))
    }

    pub(crate) fn transfer_unchecked(&self, wavelength_nm: f64) -> FieldAmplitude {
        let theta = self.round_trip_phase(wavelength_nm).rem_euclid(TAU);
        let a = self.round_trip_amplitude();
        let r = self.r;
        let z = Complex64::from_polar(1.0, theta);
        let num = a - r * z.conj();
        let den = 1.0 - r * a * z;
        Complex64::from_polar(1.0, PI + theta) * num / den
    }

    /// Free spectral range at `wavelength_nm`.
    pub fn fsr_nm(&self, wavelength_nm: f64) -> f64 {
        wavelength_nm * wavelength_nm / (self.n_group * self.length_nm())
    }

    /// Full width at half depth of the resonance.
    pub fn linewidth_nm(&self, wavelength_nm: f64) -> f64 {
        let ra = self.r * self.round_trip_amplitude();
        self.fsr_nm(wavelength_nm) * (1.0 - ra) / (PI * ra.sqrt())
    }

    /// Resonant wavelength of the longitudinal mode closest to `wavelength_nm`.
    pub fn resonance_near(&self, wavelength_nm: f64) -> f64 {
        let order = (self.round_trip_phase(wavelength_nm) / TAU).round();
        let l = self.length_nm();
        self.n_group
            / (order / l - (self.n_eff() - self.n_group) / self.reference_wavelength_nm)
    }

    pub fn coupling_regime(&self) -> CouplingRegime {
        CouplingRegime::classify(self.round_trip_amplitude(), self.r, CRITICAL_COUPLING_TOL)
    }

    /// Returns a copy biased at `voltage`.
    pub fn with_voltage(&self, voltage: f64) -> Result<RingDevice> {
        let (lo, hi) = self.voltage_range;
        if !(voltage.is_finite() && (lo..=hi).contains(&voltage)) {
            return Err(Error::OutOfEnvelope {
                voltage,
                min: lo,
                max: hi,
            });
        }
        Ok(RingDevice { voltage, ..*self })
    }
}

/// Analytic through-port transmission of an all-pass ring.
pub fn ring_transfer(ring: &RingDevice, wavelength_nm: f64) -> Result<FieldAmplitude> {
    ring.transfer(wavelength_nm)
}

/// Applies a new bias to a ring, checking the operating envelope.
pub fn apply_bias(ring: &RingDevice, voltage: f64) -> Result<RingDevice> {
    ring.with_voltage(voltage)
}

/// Winding number of the transmission phase over `[start_nm, stop_nm]`.
///
/// Over one free spectral range the through-port phase wraps once when the
/// ring is over-coupled and not at all when it is under-coupled. Intervals
/// whose phase step exceeds pi/4 are bisected so narrow resonances are not
/// aliased by a coarse grid.
pub fn ring_phase_winding(
    ring: &RingDevice,
    start_nm: f64,
    stop_nm: f64,
    samples: usize,
) -> Result<u32> {
    if samples < 16 {
        return Err(Error::invalid("samples", "sweep needs at least 16 samples"));
    }
    if !(start_nm > 0.0 && stop_nm > start_nm) {
        return Err(Error::invalid("sweep", "need 0 < start < stop"));
    }
    let step = (stop_nm - start_nm) / (samples - 1) as f64;
    let mut total = 0.0;
    let mut prev_l = start_nm;
    let mut prev = ring.transfer_unchecked(prev_l);
    for i in 1..samples {
        let l = start_nm + step * i as f64;
        let e = ring.transfer_unchecked(l);
        total += phase_step(ring, prev_l, prev, l, e, 48);
        prev_l = l;
        prev = e;
    }
    Ok((total / TAU).round().abs() as u32)
}

fn phase_step(ring: &RingDevice, la: f64, ea: Complex64, lb: f64, eb: Complex64, depth: u32) -> f64 {
    let d = (eb * ea.conj()).arg();
    if d.abs() < PI / 4.0 || depth == 0 {
        return d;
    }
    let lm = 0.5 * (la + lb);
    let em = ring.transfer_unchecked(lm);
    phase_step(ring, la, ea, lm, em, depth - 1) + phase_step(ring, lm, em, lb, eb, depth - 1)
}

/// Geometry and coupling design from which calibrated rings are produced.
///
/// The round-trip amplitude follows `a(V) = r + |da_dv| (V_crit - V)`: the
/// ring is over-coupled below `critical_voltage` and under-coupled above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingDesign {
    pub roundtrip_length_um: f64,
    pub r: f64,
    pub n_group: f64,
    pub n_eff_nominal: f64,
    pub critical_voltage: f64,
    /// Magnitude of the loss slope; zero gives a lossless (a = 1) phase ring.
    pub loss_slope_per_v: f64,
    pub lossless: bool,
    pub reference_wavelength_nm: f64,
    pub voltage_range: (f64, f64),
}

impl Default for RingDesign {
    fn default() -> Self {
        RingDesign::small()
    }
}

impl RingDesign {
    /// 5 um radius ring used for inputs and weights.
    pub fn small() -> Self {
        RingDesign {
            roundtrip_length_um: TAU * 5.0,
            r: 0.99,
            n_group: 4.2,
            n_eff_nominal: 2.45,
            critical_voltage: 1.1,
            loss_slope_per_v: 1e-5,
            lossless: false,
            reference_wavelength_nm: PROBE_WAVELENGTH_NM,
            voltage_range: (0.0, 2.0),
        }
    }

    /// Large input ring whose free spectral range equals `spacing_nm`.
    pub fn large_for_spacing(spacing_nm: f64) -> Self {
        let small = RingDesign::small();
        let length_nm =
            PROBE_WAVELENGTH_NM * PROBE_WAVELENGTH_NM / (small.n_group * spacing_nm);
        RingDesign {
            roundtrip_length_um: length_nm * 1e-3,
            ..small
        }
    }

    /// Lossless small ring used as a wavelength-selective phase element.
    pub fn phase_ring() -> Self {
        RingDesign {
            lossless: true,
            loss_slope_per_v: 0.0,
            ..RingDesign::small()
        }
    }

    pub fn fsr_nm(&self, wavelength_nm: f64) -> f64 {
        wavelength_nm * wavelength_nm / (self.n_group * self.roundtrip_length_um * 1e3)
    }

    /// Linewidth evaluated at the critical-coupling point (a = r), or at a = 1
    /// for lossless designs.
    pub fn linewidth_nm(&self, wavelength_nm: f64) -> f64 {
        let a = if self.lossless { 1.0 } else { self.r };
        let ra = self.r * a;
        self.fsr_nm(wavelength_nm) * (1.0 - ra) / (PI * ra.sqrt())
    }

    /// Builds a ring that resonates at `resonance_nm` when biased at
    /// `at_voltage`, tuning by `shift_nm_per_v` (positive value: blue shift
    /// with increasing voltage). The returned ring is biased at `at_voltage`.
    pub fn calibrate(
        &self,
        resonance_nm: f64,
        at_voltage: f64,
        shift_nm_per_v: f64,
    ) -> Result<RingDevice> {
        if !(resonance_nm > 0.0) {
            return Err(Error::invalid("resonance_nm", "must be positive"));
        }
        let l = self.roundtrip_length_um * 1e3;
        let lref = self.reference_wavelength_nm;
        let order = (l * self.n_eff_nominal / lref).round();
        let n_eff_at = self.n_group + lref * (order / l - self.n_group / resonance_nm);
        let dn_dv = -shift_nm_per_v * self.n_group * lref / (resonance_nm * resonance_nm);
        let (a0, da_dv) = if self.lossless {
            (1.0, 0.0)
        } else {
            (
                self.r + self.loss_slope_per_v * self.critical_voltage,
                -self.loss_slope_per_v,
            )
        };
        let ring = RingDevice {
            r: self.r,
            a0: a0.min(1.0),
            roundtrip_length_um: self.roundtrip_length_um,
            n_eff0: n_eff_at - dn_dv * at_voltage,
            n_group: self.n_group,
            dn_dv,
            da_dv,
            voltage: at_voltage,
            reference_wavelength_nm: lref,
            voltage_range: self.voltage_range,
        };
        ring.validate()?;
        Ok(ring)
    }

    /// Calibrates against the global bias pair: the resonance sits on
    /// `probe_nm` at `V_OFF` (logical "0", deep extinction) and is detuned to
    /// the red by `detuning_linewidths` at `V_ON` (logical "1").
    pub fn calibrate_binary(&self, probe_nm: f64, detuning_linewidths: f64) -> Result<RingDevice> {
        let shift = detuning_linewidths * self.linewidth_nm(probe_nm) / (V_OFF - V_ON);
        self.calibrate(probe_nm, V_OFF, shift)
    }
}

/// Shockley diode used to report an informational tuning power.
///
/// No I-V data is available for the modulator, so the saturation current is
/// chosen to draw roughly 12 mW at the top of the binary bias pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeModel {
    pub saturation_current_a: f64,
    pub ideality: f64,
    pub thermal_voltage: f64,
}

impl Default for DiodeModel {
    fn default() -> Self {
        DiodeModel {
            saturation_current_a: 1.5e-14,
            ideality: 2.0,
            thermal_voltage: 0.025852,
        }
    }
}

impl DiodeModel {
    pub fn power_mw(&self, voltage: f64) -> f64 {
        let i = self.saturation_current_a
            * ((voltage / (self.ideality * self.thermal_voltage)).exp() - 1.0);
        voltage * i * 1e3
    }
}
