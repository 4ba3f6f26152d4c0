//! Mapping of signed weight and input vectors onto device settings.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    build_coln, build_wdipln_naive, solve_branch, Branch, CircuitGraph, Device, TunableRing,
    WdmLayout,
};
use crate::devices::{MzmDevice, PhaseShifterDevice, RingDesign, RingEncoder, PROBE_WAVELENGTH_NM};
use crate::{Error, FieldAmplitude, Result};

/// Red detuning of an encoding ring at `V_ON`, in linewidths.
pub const DETUNING_LINEWIDTHS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronConfig {
    pub weights: Vec<f64>,
    pub inputs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(default = "default_probe")]
    pub probe_wavelength_nm: f64,
    /// Channel of each vector index, for multi-channel neurons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_assignments: Option<Vec<usize>>,
}

fn default_probe() -> f64 {
    PROBE_WAVELENGTH_NM
}

impl NeuronConfig {
    pub fn new(weights: Vec<f64>, inputs: Vec<f64>) -> Self {
        NeuronConfig {
            weights,
            inputs,
            bias: None,
            probe_wavelength_nm: PROBE_WAVELENGTH_NM,
            channel_assignments: None,
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::invalid("weights", "need at least one weight"));
        }
        if self.weights.len() != self.inputs.len() {
            return Err(Error::invalid(
                "inputs",
                format!("{} inputs for {} weights", self.inputs.len(), self.weights.len()),
            ));
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if !(-1.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!("weights[{i}]"), format!("{w} not in [-1, 1]")));
            }
        }
        for (i, &x) in self.inputs.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::invalid(format!("inputs[{i}]"), format!("{x} not in [0, 1]")));
            }
        }
        if let Some(b) = self.bias {
            if !(b.is_finite() && b.abs() <= self.weights.len() as f64) {
                return Err(Error::invalid("bias", format!("|{b}| exceeds the branch count")));
            }
        }
        if !(self.probe_wavelength_nm.is_finite() && self.probe_wavelength_nm > 0.0) {
            return Err(Error::invalid("probe_wavelength_nm", "must be positive"));
        }
        if let Some(c) = &self.channel_assignments {
            if c.len() != self.weights.len() {
                return Err(Error::invalid("channel_assignments", "one channel per vector index"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: NeuronConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Same shape with every weight and input set to one and the bias (if
    /// any) set to zero: the logical-one reference.
    pub fn reference(&self) -> NeuronConfig {
        NeuronConfig {
            weights: vec![1.0; self.len()],
            inputs: vec![1.0; self.len()],
            bias: self.bias.map(|_| 0.0),
            ..self.clone()
        }
    }
}

/// `(1/N)(sum w_n x_n + bias)`.
pub fn expected_mac(config: &NeuronConfig) -> f64 {
    let n = config.weights.len() as f64;
    let dot: f64 = config.weights.iter().zip(&config.inputs).map(|(w, x)| w * x).sum();
    (dot + config.bias.unwrap_or(0.0)) / n
}

/// `sqrt(power / reference_power)`.
pub fn readout(field: FieldAmplitude, reference_power: f64) -> f64 {
    (field.norm_sqr() / reference_power).sqrt()
}

/// Phase of `field` relative to `reference`, in (-pi, pi].
pub fn relative_phase(field: FieldAmplitude, reference: FieldAmplitude) -> f64 {
    (field * reference.conj()).arg()
}

/// Readout carrying the sign of the projection onto `reference`.
pub fn signed_readout(field: FieldAmplitude, reference: FieldAmplitude) -> f64 {
    let r = readout(field, reference.norm_sqr());
    if (field * reference.conj()).re < 0.0 {
        -r
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputEncoding {
    /// Input rings bisected to any magnitude in [0, 1].
    Continuous,
    /// Inputs must be 0 or 1 and map to `V_OFF` / `V_ON`.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Coln,
    Ring(InputEncoding),
}

fn single_channel_encoder(probe_nm: f64) -> Result<RingEncoder> {
    RingEncoder::new(&RingDesign::small(), probe_nm, DETUNING_LINEWIDTHS)
}

/// Builds the circuit for `config`. With a bias, the bias branch is summed
/// at equal power with the inner network, so the reference of
/// [`NeuronConfig::reference`] must be used for readout.
pub fn configure(config: &NeuronConfig, topology: Topology) -> Result<CircuitGraph> {
    config.validate()?;
    let n = config.len() as f64;
    match topology {
        Topology::Coln => {
            let g = build_coln(&config.weights, &config.inputs)?;
            match config.bias {
                Some(b) => g.with_bias_branch(Branch::new(vec![
                    Device::Mzm(MzmDevice::for_magnitude(b.abs() / n)?),
                    Device::PhaseShifter(PhaseShifterDevice::new(if b < 0.0 { PI } else { 0.0 })),
                ])),
                None => Ok(g),
            }
        }
        Topology::Ring(encoding) => {
            let probe = config.probe_wavelength_nm;
            let enc = single_channel_encoder(probe)?;
            let unit = enc.unit() * enc.unit();
            let mut branches = Vec::with_capacity(config.len());
            for (i, (&w, &x)) in config.weights.iter().zip(&config.inputs).enumerate() {
                let input = match encoding {
                    InputEncoding::Continuous => enc.encode_magnitude(x * enc.unit())?,
                    InputEncoding::Binary => {
                        if x != 0.0 && x != 1.0 {
                            return Err(Error::invalid(
                                format!("inputs[{i}]"),
                                format!("{x} is not a binary level"),
                            ));
                        }
                        enc.encode_bit(x == 1.0)
                    }
                };
                let mut branch = Branch::new(vec![
                    Device::Ring(enc.ring_at(input.voltage)?),
                    Device::Ring(*enc.ring()),
                    Device::PhaseShifter(PhaseShifterDevice::new(0.0)),
                ]);
                let slot = TunableRing {
                    device_index: 1,
                    encoder: enc,
                };
                let target = Complex64::new(w * x * unit, 0.0);
                solve_branch(&mut branch, &[probe], &[target], &[slot], &[], 2)?;
                branches.push(branch);
            }
            let g = CircuitGraph::new(branches)?;
            match config.bias {
                Some(b) => {
                    let mut bias = Branch::new(vec![
                        Device::Ring(*enc.ring()),
                        Device::PhaseShifter(PhaseShifterDevice::new(0.0)),
                    ]);
                    let slot = TunableRing {
                        device_index: 0,
                        encoder: enc,
                    };
                    let target = Complex64::new(b / n * unit, 0.0);
                    solve_branch(&mut bias, &[probe], &[target], &[slot], &[], 1)?;
                    g.with_bias_branch(bias)
                }
                None => Ok(g),
            }
        }
    }
}

/// Configures `config` and its reference and returns the signed readout at
/// the probe wavelength.
pub fn configured_readout(config: &NeuronConfig, topology: Topology) -> Result<f64> {
    let g = configure(config, topology)?;
    let r = configure(&config.reference(), topology)?;
    let l = config.probe_wavelength_nm;
    Ok(signed_readout(g.evaluate(l)?, r.evaluate(l)?))
}

/// Groups vector indices by channel into `[channel][branch]` matrices,
/// padding short channels with zero weight and zero input.
type Matrix = Vec<Vec<f64>>;

fn channel_matrices(config: &NeuronConfig, channels: usize) -> Result<(Matrix, Matrix)> {
    let assign = config
        .channel_assignments
        .as_ref()
        .ok_or_else(|| Error::invalid("channel_assignments", "required for multi-channel neurons"))?;
    let mut w = vec![Vec::new(); channels];
    let mut x = vec![Vec::new(); channels];
    for (i, &c) in assign.iter().enumerate() {
        if c >= channels {
            return Err(Error::invalid(
                format!("channel_assignments[{i}]"),
                format!("channel {c} outside {channels} channels"),
            ));
        }
        w[c].push(config.weights[i]);
        x[c].push(config.inputs[i]);
    }
    let n = w.iter().map(Vec::len).max().unwrap_or(0);
    for c in 0..channels {
        w[c].resize(n, 0.0);
        x[c].resize(n, 0.0);
    }
    Ok((w, x))
}

/// Per-channel `(1/N) sum w x`, with N the branch count of the multi-channel
/// circuit (the largest channel group).
pub fn expected_mac_per_channel(config: &NeuronConfig, channels: usize) -> Result<Vec<f64>> {
    let (w, x) = channel_matrices(config, channels)?;
    Ok(w.iter()
        .zip(&x)
        .map(|(wr, xr)| wr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>() / wr.len() as f64)
        .collect())
}

/// Builds the naive multi-channel circuit for a config with channel
/// assignments. Biases are not supported here.
pub fn configure_channels(config: &NeuronConfig, layout: &WdmLayout) -> Result<CircuitGraph> {
    config.validate()?;
    if config.bias.is_some() {
        return Err(Error::invalid("bias", "not supported on multi-channel neurons"));
    }
    let (w, x) = channel_matrices(config, layout.channels)?;
    build_wdipln_naive(&w, &x, layout)
}

/// One calibration entry: the voltage that realizes `target` and the
/// residual phase the ring imprints there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingRow {
    pub device: usize,
    pub target: f64,
    pub voltage: f64,
    pub residual_phase: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodingTable {
    pub probe_nm: f64,
    pub rows: Vec<EncodingRow>,
}

impl EncodingTable {
    /// Tabulates `encoder` at `samples` evenly spaced fractions of its unit.
    pub fn calibrate(device: usize, encoder: &RingEncoder, samples: usize) -> Result<Self> {
        let samples = samples.max(2);
        let rows = (0..samples)
            .map(|k| {
                let target = encoder.unit() * k as f64 / (samples - 1) as f64;
                let e = encoder.encode_magnitude(target)?;
                Ok(EncodingRow {
                    device,
                    target,
                    voltage: e.voltage,
                    residual_phase: e.phase,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EncodingTable {
            probe_nm: encoder.probe_nm(),
            rows,
        })
    }

    /// Reads back the settings of every amplitude ring in a configured graph.
    /// Devices are numbered across branches in order, bias branch last.
    pub fn from_graph(graph: &CircuitGraph, probe_nm: f64) -> Self {
        let rows = graph
            .branches()
            .iter()
            .chain(graph.bias_branch())
            .flat_map(|b| b.devices.iter())
            .filter_map(|d| match d {
                Device::Ring(r) => Some(r),
                _ => None,
            })
            .enumerate()
            .map(|(device, r)| {
                let e = r.transfer_unchecked(probe_nm);
                EncodingRow {
                    device,
                    target: e.norm(),
                    voltage: r.voltage,
                    residual_phase: e.arg(),
                }
            })
            .collect();
        EncodingTable { probe_nm, rows }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "device,target,voltage,residual_phase")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.device, r.target, r.voltage, r.residual_phase)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_mac_examples() {
        assert_eq!(expected_mac(&NeuronConfig::new(vec![1.0, 1.0], vec![1.0, 1.0])), 1.0);
        assert_eq!(expected_mac(&NeuronConfig::new(vec![1.0, -1.0], vec![1.0, 1.0])), 0.0);
        let c = NeuronConfig::new(vec![0.5, -0.25, 0.75], vec![1.0, 1.0, 0.5]);
        assert!((expected_mac(&c) - 0.625 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn readout_examples() {
        let one = Complex64::new(0.3, 0.4);
        assert_eq!(readout(one, one.norm_sqr()), 1.0);
        assert_eq!(readout(Complex64::new(0.0, 0.0), 1.0), 0.0);
        assert!((readout(Complex64::new(0.5, 0.0), 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn configure_examples() {
        for t in [Topology::Coln, Topology::Ring(InputEncoding::Continuous)] {
            let c = NeuronConfig::new(vec![1.0, 1.0], vec![1.0, 1.0]);
            assert!((configured_readout(&c, t).unwrap() - 1.0).abs() < 1e-3);
            let c = NeuronConfig::new(vec![1.0, -1.0], vec![1.0, 1.0]);
            assert!(configured_readout(&c, t).unwrap().abs() <= 1e-3);
            let c = NeuronConfig::new(vec![0.5, -0.25, 0.75], vec![1.0, 1.0, 0.5]);
            assert!((configured_readout(&c, t).unwrap() - 0.625 / 3.0).abs() < 1e-3);
        }
    }

    #[test]
    fn bias_and_sign() {
        for t in [Topology::Coln, Topology::Ring(InputEncoding::Binary)] {
            let c = NeuronConfig::new(vec![0.5, -1.0], vec![1.0, 1.0]).with_bias(-0.3);
            let got = configured_readout(&c, t).unwrap();
            assert!((got - expected_mac(&c)).abs() < 1e-3, "{t:?} {got}");
        }
    }

    #[test]
    fn binary_levels_are_global_voltages() {
        let c = NeuronConfig::new(vec![0.7, 0.7], vec![1.0, 0.0]);
        let g = configure(&c, Topology::Ring(InputEncoding::Binary)).unwrap();
        let v = |b: usize| match &g.branches()[b].devices[0] {
            Device::Ring(r) => r.voltage,
            _ => unreachable!(),
        };
        assert_eq!(v(0), crate::devices::V_ON);
        assert_eq!(v(1), crate::devices::V_OFF);
        let c = NeuronConfig::new(vec![0.7], vec![0.5]);
        assert!(configure(&c, Topology::Ring(InputEncoding::Binary)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = NeuronConfig::new(vec![0.5, -0.2], vec![0.1, 1.0]).with_bias(0.4);
        assert_eq!(NeuronConfig::from_json(&c.to_json()).unwrap(), c);
        assert!(NeuronConfig::from_json(r#"{"weights": [2.0], "inputs": [1.0]}"#).is_err());
    }

    #[test]
    fn encoding_table_is_monotone() {
        let enc = single_channel_encoder(PROBE_WAVELENGTH_NM).unwrap();
        let t = EncodingTable::calibrate(0, &enc, 20).unwrap();
        // larger magnitude: further from resonance, lower voltage
        assert!(t.rows.windows(2).all(|w| w[1].voltage < w[0].voltage));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 21);
    }

    #[test]
    fn two_channel_readouts() {
        let mut c = NeuronConfig::new(vec![0.5, -0.8, 0.9, 0.3], vec![1.0, 0.6, 0.2, 0.7]);
        c.channel_assignments = Some(vec![0, 0, 1, 1]);
        let layout = WdmLayout::with_spacing_linewidths(2, 20.0);
        let g = configure_channels(&c, &layout).unwrap();
        let mut r = c.reference();
        r.channel_assignments = c.channel_assignments.clone();
        let refg = configure_channels(&r, &layout).unwrap();
        let want = expected_mac_per_channel(&c, 2).unwrap();
        for (j, w) in want.iter().enumerate() {
            let l = layout.channel_wavelength(j);
            let got = signed_readout(g.evaluate(l).unwrap(), refg.evaluate(l).unwrap());
            assert!((got - w).abs() < 0.01 * w.abs().max(1e-3) + 1e-3, "{j}: {got} vs {w}");
        }
    }
}
