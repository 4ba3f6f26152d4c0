//! Ring-based linear neurons with one or more wavelength channels.
//!
//! Each branch carries input rings, one weight ring per channel and a
//! broadband sign phase shifter. With more than one channel, a lossless
//! phase ring per channel provides the channel-selective part of the sign
//! and residual-phase correction, since the shared phase shifter can only
//! fix one phase per branch.
//!
//! Weight rings and phase rings are solved per branch by fixed-point
//! iteration: for every channel, the product of all other devices at that
//! channel is computed and the channel's own weight ring and phase ring are
//! re-encoded so the branch transfer equals the complex target. Because
//! rings of other channels are only weakly detuned from unity, a handful of
//! sweeps converges to numerical precision.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Branch, CircuitGraph, Device};
use crate::devices::{PhaseRingEncoder, PhaseShifterDevice, RingDesign, RingEncoder, PROBE_WAVELENGTH_NM};
use crate::{Error, Result};

const SOLVER_SWEEPS: usize = 12;
const SOLVER_TOL: f64 = 1e-9;

/// Channel grid and ring calibration shared by the multi-channel builders.
///
/// Channels sit on a uniform optical-frequency grid starting at `probe_nm`
/// and stepping to the red; `spacing_nm` is the spacing at the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WdmLayout {
    pub channels: usize,
    pub spacing_nm: f64,
    pub probe_nm: f64,
    /// Red detuning of an amplitude ring at `V_ON`, in linewidths.
    pub detuning_linewidths: f64,
    /// Minimum channel spacing, in small-ring linewidths.
    pub min_spacing_linewidths: f64,
    /// Phase ring tuning span either side of resonance, in its linewidths.
    pub phase_span_linewidths: f64,
    /// Logical-one product level relative to the product of ring units, kept
    /// below one so weight rings can absorb crosstalk from other channels.
    pub product_margin: f64,
    /// Override for the large input ring; must give FSR = spacing within 1%.
    #[serde(default)]
    pub input_ring_length_um: Option<f64>,
}

impl WdmLayout {
    pub fn new(channels: usize, spacing_nm: f64) -> Self {
        WdmLayout {
            channels,
            spacing_nm,
            probe_nm: PROBE_WAVELENGTH_NM,
            detuning_linewidths: 8.0,
            min_spacing_linewidths: 10.0,
            phase_span_linewidths: 3.0,
            product_margin: if channels > 1 { 0.98 } else { 1.0 },
            input_ring_length_um: None,
        }
    }

    /// Spacing expressed in small-ring linewidths.
    pub fn with_spacing_linewidths(channels: usize, linewidths: f64) -> Self {
        let lw = RingDesign::small().linewidth_nm(PROBE_WAVELENGTH_NM);
        WdmLayout::new(channels, linewidths * lw)
    }

    pub fn channel_wavelength(&self, j: usize) -> f64 {
        let step = self.spacing_nm / (self.probe_nm * self.probe_nm);
        1.0 / (1.0 / self.probe_nm - j as f64 * step)
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        (0..self.channels).map(|j| self.channel_wavelength(j)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::invalid("channels", "need at least one channel"));
        }
        if !(self.product_margin > 0.0 && self.product_margin <= 1.0) {
            return Err(Error::invalid("product_margin", "must be in (0, 1]"));
        }
        if self.channels > 1 {
            let small = RingDesign::small();
            let lw = small.linewidth_nm(self.probe_nm);
            if !(self.spacing_nm >= self.min_spacing_linewidths * lw) {
                return Err(Error::invalid(
                    "channel_spacing",
                    format!(
                        "{} nm is below the minimum isolation spacing {} nm",
                        self.spacing_nm,
                        self.min_spacing_linewidths * lw
                    ),
                ));
            }
            let window = small.fsr_nm(self.probe_nm);
            let span = self.channels as f64 * self.spacing_nm;
            if span >= window {
                return Err(Error::invalid(
                    "channels",
                    format!("{span} nm of channels do not fit the {window} nm ring FSR"),
                ));
            }
        }
        Ok(())
    }
}

/// Weight ring slot: device index in the branch and its channel encoder.
#[derive(Debug, Clone, Copy)]
pub struct TunableRing {
    pub device_index: usize,
    pub encoder: RingEncoder,
}

#[derive(Debug, Clone, Copy)]
struct PhaseSlot {
    device_index: usize,
    encoder: PhaseRingEncoder,
}

/// Complex branch transfer required at each channel wavelength.
pub type BranchTargets = Vec<Complex64>;

fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Midpoint of the largest circular gap between the given angles.
fn largest_gap_midpoint(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let mut a: Vec<f64> = angles.iter().map(|x| x.rem_euclid(TAU)).collect();
    a.sort_by(f64::total_cmp);
    let mut best = (a[0] + TAU - a[a.len() - 1], a[a.len() - 1]);
    for w in a.windows(2) {
        let gap = w[1] - w[0];
        if gap > best.0 {
            best = (gap, w[0]);
        }
    }
    (best.1 + best.0 / 2.0).rem_euclid(TAU)
}

fn product_excluding(branch: &Branch, wavelength_nm: f64, skip: &[usize]) -> Complex64 {
    branch
        .devices
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .fold(Complex64::new(1.0, 0.0), |acc, (_, d)| acc * d.transfer(wavelength_nm))
}

/// Solves weight-ring biases, phase-ring biases and the sign phase shifter of
/// one branch so that its transfer at `wavelengths[j]` equals `targets[j]`.
///
/// `weight_slots[j]` and (when present) `phase_slots[j]` belong to channel
/// `j`; `sign_slot` indexes the broadband phase shifter. Other devices are
/// left untouched.
pub fn solve_branch(
    branch: &mut Branch,
    wavelengths: &[f64],
    targets: &[Complex64],
    weight_slots: &[TunableRing],
    phase_slots: &[(usize, PhaseRingEncoder)],
    sign_slot: usize,
) -> Result<()> {
    let m = wavelengths.len();
    if targets.len() != m || weight_slots.len() != m {
        return Err(Error::invalid("targets", "one target and weight ring per channel"));
    }
    if !phase_slots.is_empty() && phase_slots.len() != m {
        return Err(Error::invalid("phase_slots", "one phase ring per channel"));
    }
    if m > 1 && phase_slots.is_empty() {
        return Err(Error::invalid("phase_slots", "multi-channel branches need phase rings"));
    }
    let phase_slots: Vec<PhaseSlot> = phase_slots
        .iter()
        .map(|&(device_index, encoder)| PhaseSlot {
            device_index,
            encoder,
        })
        .collect();

    let mut needed = vec![0.0; m];
    let mut floor_limited = vec![false; m];
    for _ in 0..SOLVER_SWEEPS {
        for j in 0..m {
            let l = wavelengths[j];
            let w = weight_slots[j];
            let mut skip = vec![w.device_index, sign_slot];
            if let Some(p) = phase_slots.get(j) {
                skip.push(p.device_index);
            }
            let rest = product_excluding(branch, l, &skip);
            let want = targets[j].norm();
            let mag = if want == 0.0 || rest.norm() < 1e-300 {
                0.0
            } else {
                want / rest.norm()
            };
            floor_limited[j] = mag <= w.encoder.floor();
            let enc = w.encoder.encode_magnitude(mag)?;
            branch.devices[w.device_index] = Device::Ring(w.encoder.ring_at(enc.voltage)?);
            let ew = branch.devices[w.device_index].transfer(l);
            needed[j] = targets[j].arg() - (rest * ew).arg();
        }

        let sign_phase = if phase_slots.is_empty() {
            needed[0].rem_euclid(TAU)
        } else {
            let active: Vec<f64> = (0..m)
                .filter(|&j| targets[j].norm() > 0.0)
                .map(|j| needed[j])
                .collect();
            let offset = largest_gap_midpoint(&active);
            for (j, slot) in phase_slots.iter().enumerate() {
                let psi = if targets[j].norm() > 0.0 {
                    wrap_pi(needed[j] - offset - PI)
                } else {
                    0.0
                };
                branch.devices[slot.device_index] =
                    Device::PhaseRing(slot.encoder.encode_relative_phase(psi)?);
            }
            offset
        };
        branch.devices[sign_slot] = Device::PhaseShifter(PhaseShifterDevice::new(sign_phase));
    }

    // channels whose target lies below the weight ring's floor keep the floor
    let residual = (0..m)
        .filter(|&j| !floor_limited[j])
        .map(|j| (branch.transfer(wavelengths[j]) - targets[j]).norm())
        .fold(0.0, f64::max);
    if residual > SOLVER_TOL {
        return Err(Error::Numerical(format!(
            "branch solver residual {residual:.3e} exceeds {SOLVER_TOL:.0e}"
        )));
    }
    Ok(())
}

fn signed_target(value: f64, unit: f64) -> Complex64 {
    Complex64::new(value * unit, 0.0)
}

fn check_matrix(name: &str, rows: &[Vec<f64>], m: usize, n: usize, signed: bool) -> Result<()> {
    if rows.len() != m || rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid(name, format!("expected {m} channels x {n} branches")));
    }
    for (j, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            let ok = if signed {
                (-1.0..=1.0).contains(&v)
            } else {
                (0.0..=1.0).contains(&v)
            };
            if !ok {
                return Err(Error::invalid(format!("{name}[{j}][{i}]"), format!("{v} out of range")));
            }
        }
    }
    Ok(())
}

fn check_collisions(branch: &Branch, index: usize, channel_of: &[Option<usize>], wavelengths: &[f64]) -> Result<()> {
    let lw = RingDesign::small().linewidth_nm(wavelengths[0]);
    let rings: Vec<(usize, f64)> = branch
        .devices
        .iter()
        .zip(channel_of)
        .filter_map(|(d, ch)| match (d, ch) {
            (Device::Ring(r), Some(c)) => Some((*c, r.resonance_near(wavelengths[*c]))),
            _ => None,
        })
        .collect();
    for (a, &(ca, ra)) in rings.iter().enumerate() {
        for &(cb, rb) in &rings[a + 1..] {
            if ca != cb && (ra - rb).abs() <= lw {
                return Err(Error::ChannelCollision {
                    branch: index,
                    first_nm: ra,
                    second_nm: rb,
                });
            }
        }
    }
    Ok(())
}

struct ChannelEncoders {
    input: Vec<RingEncoder>,
    weight: Vec<RingEncoder>,
    phase: Vec<PhaseRingEncoder>,
}

fn channel_encoders(layout: &WdmLayout, input_design: Option<RingDesign>) -> Result<ChannelEncoders> {
    let small = RingDesign::small();
    let wavelengths = layout.wavelengths();
    let weight = wavelengths
        .iter()
        .map(|&l| RingEncoder::new(&small, l, layout.detuning_linewidths))
        .collect::<Result<Vec<_>>>()?;
    let input = match input_design {
        Some(large) => vec![RingEncoder::new(&large, layout.probe_nm, layout.detuning_linewidths)?],
        None => wavelengths
            .iter()
            .map(|&l| RingEncoder::new(&small, l, layout.detuning_linewidths))
            .collect::<Result<Vec<_>>>()?,
    };
    let phase = if layout.channels > 1 {
        wavelengths
            .iter()
            .map(|&l| PhaseRingEncoder::new(&RingDesign::phase_ring(), l, layout.phase_span_linewidths))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(ChannelEncoders {
        input,
        weight,
        phase,
    })
}

/// Naive multi-channel neuron: per branch and channel one input ring and one
/// weight ring (2NM amplitude rings in total).
///
/// `weights[j][n]` in [-1, 1] and `inputs[j][n]` in [0, 1] are indexed by
/// channel then branch. At channel `j` the circuit output equals
/// `U_j / N * sum_n w[j][n] x[j][n]` where `U_j` is the logical-one product
/// level of that channel.
pub fn build_wdipln_naive(
    weights: &[Vec<f64>],
    inputs: &[Vec<f64>],
    layout: &WdmLayout,
) -> Result<CircuitGraph> {
    layout.validate()?;
    let m = layout.channels;
    let n = weights.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::invalid("weights", "need at least one branch"));
    }
    check_matrix("weights", weights, m, n, true)?;
    check_matrix("inputs", inputs, m, n, false)?;
    let enc = channel_encoders(layout, None)?;
    let wavelengths = layout.wavelengths();

    let mut branches = Vec::with_capacity(n);
    for b in 0..n {
        let mut devices = Vec::new();
        let mut channel_of = Vec::new();
        let mut weight_slots = Vec::new();
        for (j, row) in inputs.iter().enumerate() {
            let x = row[b];
            let e = enc.input[j].encode_magnitude(x * enc.input[j].unit())?;
            devices.push(Device::Ring(enc.input[j].ring_at(e.voltage)?));
            channel_of.push(Some(j));
            weight_slots.push(TunableRing {
                device_index: devices.len(),
                encoder: enc.weight[j],
            });
            devices.push(Device::Ring(*enc.weight[j].ring()));
            channel_of.push(Some(j));
        }
        let phase_slots = push_phase_rings(&mut devices, &mut channel_of, &enc.phase);
        let sign_slot = devices.len();
        devices.push(Device::PhaseShifter(PhaseShifterDevice::new(0.0)));
        channel_of.push(None);

        let targets: Vec<Complex64> = (0..m)
            .map(|j| {
                let unit = layout.product_margin * enc.input[j].unit() * enc.weight[j].unit();
                signed_target(weights[j][b] * inputs[j][b], unit)
            })
            .collect();
        let mut branch = Branch::new(devices);
        solve_branch(&mut branch, &wavelengths, &targets, &weight_slots, &phase_slots, sign_slot)?;
        check_collisions(&branch, b, &channel_of, &wavelengths)?;
        branches.push(branch);
    }
    CircuitGraph::new(branches)
}

fn push_phase_rings(
    devices: &mut Vec<Device>,
    channel_of: &mut Vec<Option<usize>>,
    encoders: &[PhaseRingEncoder],
) -> Vec<(usize, PhaseRingEncoder)> {
    encoders
        .iter()
        .map(|p| {
            devices.push(Device::PhaseRing(*p.ring()));
            channel_of.push(None);
            (devices.len() - 1, *p)
        })
        .collect()
}

/// Nominal multi-channel neuron: per branch one large input ring whose FSR
/// equals the channel spacing, so every channel sees the same input, plus
/// one small weight ring per channel (N(M+1) amplitude rings in total).
///
/// `weights[j][n]` is indexed by channel then branch; `inputs[n]` is shared
/// by all channels.
pub fn build_wdipln_nominal(
    weights: &[Vec<f64>],
    inputs: &[f64],
    layout: &WdmLayout,
) -> Result<CircuitGraph> {
    layout.validate()?;
    let m = layout.channels;
    let n = inputs.len();
    if n == 0 {
        return Err(Error::invalid("inputs", "need at least one branch"));
    }
    check_matrix("weights", weights, m, n, true)?;
    check_matrix("inputs", &[inputs.to_vec()], 1, n, false)?;

    let mut large = RingDesign::large_for_spacing(layout.spacing_nm);
    if let Some(len) = layout.input_ring_length_um {
        let candidate = RingDesign {
            roundtrip_length_um: len,
            ..large
        };
        let fsr = candidate.fsr_nm(layout.probe_nm);
        if (fsr - layout.spacing_nm).abs() > 0.01 * layout.spacing_nm {
            return Err(Error::FsrMismatch {
                fsr_nm: fsr,
                spacing_nm: layout.spacing_nm,
            });
        }
        large = candidate;
    }
    let enc = channel_encoders(layout, Some(large))?;
    let input_enc = enc.input[0];
    let wavelengths = layout.wavelengths();

    let mut branches = Vec::with_capacity(n);
    for b in 0..n {
        let x = inputs[b];
        let e = input_enc.encode_magnitude(x * input_enc.unit())?;
        let mut devices = vec![Device::Ring(input_enc.ring_at(e.voltage)?)];
        let mut channel_of = vec![None];
        let mut weight_slots = Vec::new();
        for j in 0..m {
            weight_slots.push(TunableRing {
                device_index: devices.len(),
                encoder: enc.weight[j],
            });
            devices.push(Device::Ring(*enc.weight[j].ring()));
            channel_of.push(Some(j));
        }
        let phase_slots = push_phase_rings(&mut devices, &mut channel_of, &enc.phase);
        let sign_slot = devices.len();
        devices.push(Device::PhaseShifter(PhaseShifterDevice::new(0.0)));
        channel_of.push(None);

        let targets: Vec<Complex64> = (0..m)
            .map(|j| {
                let unit = layout.product_margin * input_enc.unit() * enc.weight[j].unit();
                signed_target(weights[j][b] * x, unit)
            })
            .collect();
        let mut branch = Branch::new(devices);
        solve_branch(&mut branch, &wavelengths, &targets, &weight_slots, &phase_slots, sign_slot)?;
        check_collisions(&branch, b, &channel_of, &wavelengths)?;
        branches.push(branch);
    }
    CircuitGraph::new(branches)
}
