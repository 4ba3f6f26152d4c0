use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Branch, CircuitGraph, Device};
use crate::devices::{MzmDevice, PhaseShifterDevice, RingDesign, V_OFF, V_ON};
use crate::{Error, Result};

fn check_unit_interval(name: &str, values: &[f64], signed: bool) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        let ok = if signed {
            (-1.0..=1.0).contains(&v)
        } else {
            (0.0..=1.0).contains(&v)
        };
        if !ok {
            let range = if signed { "[-1, 1]" } else { "[0, 1]" };
            return Err(Error::invalid(format!("{name}[{i}]"), format!("{v} not in {range}")));
        }
    }
    Ok(())
}

/// MZM-based coherent linear neuron: per branch an input MZM, a weight MZM
/// and a sign phase shifter (0 or pi).
pub fn build_coln(weights: &[f64], inputs: &[f64]) -> Result<CircuitGraph> {
    if weights.is_empty() {
        return Err(Error::invalid("weights", "need at least one branch"));
    }
    if weights.len() != inputs.len() {
        return Err(Error::invalid(
            "inputs",
            format!("{} inputs for {} weights", inputs.len(), weights.len()),
        ));
    }
    check_unit_interval("weights", weights, true)?;
    check_unit_interval("inputs", inputs, false)?;
    let branches = weights
        .iter()
        .zip(inputs)
        .map(|(&w, &x)| {
            let sign = if w < 0.0 { PI } else { 0.0 };
            Ok(Branch::new(vec![
                Device::Mzm(MzmDevice::for_magnitude(x)?),
                Device::Mzm(MzmDevice::for_magnitude(w.abs())?),
                Device::PhaseShifter(PhaseShifterDevice::new(sign)),
            ]))
        })
        .collect::<Result<Vec<_>>>()?;
    CircuitGraph::new(branches)
}

/// Three-ring add/subtract circuit: a bias branch (R0, PS0) in parallel
/// with an inner two-branch network (R1 + PS1, R2).
///
/// `ring_states` are the resonance wavelengths of R0, R1, R2. Each ring is
/// biased at `V_OFF` where it sits slightly under-coupled.
pub fn build_addsub(ring_states: [f64; 3], phase0: f64, phase1: f64) -> Result<CircuitGraph> {
    let design = RingDesign::small();
    let ring = |res: f64| -> Result<Device> {
        let shift = 8.0 * design.linewidth_nm(res) / (V_OFF - V_ON);
        Ok(Device::Ring(design.calibrate(res, V_OFF, shift)?))
    };
    let inner = vec![
        Branch::new(vec![
            ring(ring_states[1])?,
            Device::PhaseShifter(PhaseShifterDevice::new(phase1)),
        ]),
        Branch::new(vec![ring(ring_states[2])?]),
    ];
    let bias = Branch::new(vec![
        ring(ring_states[0])?,
        Device::PhaseShifter(PhaseShifterDevice::new(phase0)),
    ]);
    CircuitGraph::new(inner)?.with_bias_branch(bias)
}

/// One panel of the 3x4 add/subtract configuration matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddSubPanel {
    pub label: String,
    /// 1: all co-resonant, 2: R0 detuned, 3: all distinct.
    pub row: usize,
    /// 1: +R0+R1+R2, 2: -R0+R1+R2, 3: +R0-R1+R2, 4: -R0-R1+R2.
    pub column: usize,
    pub ring_states: [f64; 3],
    pub phase0: f64,
    pub phase1: f64,
}

pub const ADDSUB_PANELS: [&str; 12] = [
    "i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x", "xi", "xii",
];

impl AddSubPanel {
    /// All twelve panels, row-major. Detuned rings sit `detuning_nm` below
    /// (R0) or above (R2) the probe.
    pub fn all(probe_nm: f64, detuning_nm: f64) -> Vec<AddSubPanel> {
        let rows = [
            [probe_nm, probe_nm, probe_nm],
            [probe_nm - detuning_nm, probe_nm, probe_nm],
            [probe_nm - detuning_nm, probe_nm, probe_nm + detuning_nm],
        ];
        let cols = [(0.0, 0.0), (PI, 0.0), (0.0, PI), (PI, PI)];
        let mut out = Vec::with_capacity(12);
        for (ri, states) in rows.iter().enumerate() {
            for (ci, &(phase0, phase1)) in cols.iter().enumerate() {
                out.push(AddSubPanel {
                    label: ADDSUB_PANELS[ri * 4 + ci].to_string(),
                    row: ri + 1,
                    column: ci + 1,
                    ring_states: *states,
                    phase0,
                    phase1,
                });
            }
        }
        out
    }

    pub fn build(&self) -> Result<CircuitGraph> {
        build_addsub(self.ring_states, self.phase0, self.phase1)
    }
}
