//! Feed-forward interferometric circuits built from device chains.
//!
//! A [`CircuitGraph`] is a balanced 1-to-N fan-out, N device chains and a
//! balanced N-to-1 fan-in. Each splitter stage contributes `1/sqrt(N)` per
//! branch, so N empty branches recombine to unit transmission. An optional
//! bias branch bypasses the inner fan-out: the input is first split 50/50
//! between the bias path and the inner N-branch network, and the two are
//! recombined by a second 50/50 combiner.

mod builders;
mod netlist;
mod sweep;
mod wdm;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::devices::{MzmDevice, PhaseShifterDevice, RingDevice};
use crate::{Error, FieldAmplitude, Result};

pub use builders::{build_addsub, build_coln, AddSubPanel, ADDSUB_PANELS};
pub use netlist::{parse_netlist, Netlist, NetlistImbalance};
pub use sweep::{find_dips, to_db, Dip, SpectralGrid, SweepPoint, SweepResult, DB_FLOOR};
pub use wdm::{
    build_wdipln_naive, build_wdipln_nominal, solve_branch, BranchTargets, TunableRing,
    WdmLayout,
};

/// One element of a branch chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Device {
    /// Amplitude-encoding ring (input or weight).
    Ring(RingDevice),
    /// Lossless ring used as a wavelength-selective phase element.
    PhaseRing(RingDevice),
    PhaseShifter(PhaseShifterDevice),
    Mzm(MzmDevice),
}

impl Device {
    pub fn transfer(&self, wavelength_nm: f64) -> FieldAmplitude {
        match self {
            Device::Ring(r) | Device::PhaseRing(r) => r.transfer_unchecked(wavelength_nm),
            Device::PhaseShifter(p) => p.factor(),
            Device::Mzm(m) => Complex64::new(m.factor(), 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Device::Ring(r) | Device::PhaseRing(r) => r.validate(),
            Device::PhaseShifter(p) => p.validate(),
            Device::Mzm(m) => m.validate(),
        }
    }
}

/// Static path imbalance of a branch: field amplitude factor and phase offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Imbalance {
    pub amplitude: f64,
    pub phase: f64,
}

impl Default for Imbalance {
    fn default() -> Self {
        Imbalance {
            amplitude: 1.0,
            phase: 0.0,
        }
    }
}

impl Imbalance {
    pub fn factor(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    pub fn is_identity(&self) -> bool {
        self.amplitude == 1.0 && self.phase == 0.0
    }
}

/// Ranges for random per-branch imbalance injection.
///
/// Amplitude factors are drawn from `[1 - amplitude, 1]` and phases from
/// `[-phase, phase]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSpec {
    pub amplitude: f64,
    pub phase: f64,
}

impl ImbalanceSpec {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Imbalance {
        let amplitude = 1.0 - self.amplitude * rng.gen::<f64>();
        let phase = self.phase * (2.0 * rng.gen::<f64>() - 1.0);
        Imbalance { amplitude, phase }
    }
}

/// Chain of devices between one fan-out port and one fan-in port.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Branch {
    pub devices: Vec<Device>,
}

impl Branch {
    pub fn new(devices: Vec<Device>) -> Self {
        Branch { devices }
    }

    pub fn transfer(&self, wavelength_nm: f64) -> FieldAmplitude {
        self.devices
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, d| acc * d.transfer(wavelength_nm))
    }
}

/// Extra propagation length of the bias path relative to the inner network.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BiasPath {
    pub delta_length_um: f64,
    pub n_eff: f64,
}

impl BiasPath {
    pub fn phase(&self, wavelength_nm: f64) -> f64 {
        std::f64::consts::TAU * self.delta_length_um * 1e3 * self.n_eff / wavelength_nm
    }
}

/// Immutable feed-forward circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGraph {
    branches: Vec<Branch>,
    imbalance: Vec<Imbalance>,
    bias_branch: Option<Branch>,
    bias_imbalance: Imbalance,
    bias_path: BiasPath,
}

impl CircuitGraph {
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::MalformedCircuit("at least one branch required".into()));
        }
        for (i, b) in branches.iter().enumerate() {
            for (j, d) in b.devices.iter().enumerate() {
                d.validate().map_err(|e| {
                    Error::MalformedCircuit(format!("branches[{i}].devices[{j}]: {e}"))
                })?;
            }
        }
        let n = branches.len();
        Ok(CircuitGraph {
            branches,
            imbalance: vec![Imbalance::default(); n],
            bias_branch: None,
            bias_imbalance: Imbalance::default(),
            bias_path: BiasPath::default(),
        })
    }

    pub fn with_bias_branch(mut self, bias: Branch) -> Result<Self> {
        for (j, d) in bias.devices.iter().enumerate() {
            d.validate()
                .map_err(|e| Error::MalformedCircuit(format!("bias_branch.devices[{j}]: {e}")))?;
        }
        self.bias_branch = Some(bias);
        Ok(self)
    }

    pub fn with_bias_path(mut self, path: BiasPath) -> Result<Self> {
        if !path.delta_length_um.is_finite() || !path.n_eff.is_finite() {
            return Err(Error::MalformedCircuit("bias path must be finite".into()));
        }
        self.bias_path = path;
        Ok(self)
    }

    /// Sets per-branch imbalance; `branches` must have one entry per branch.
    pub fn with_imbalance(mut self, branches: Vec<Imbalance>, bias: Imbalance) -> Result<Self> {
        if branches.len() != self.branches.len() {
            return Err(Error::MalformedCircuit(format!(
                "imbalance has {} entries for {} branches",
                branches.len(),
                self.branches.len()
            )));
        }
        for im in branches.iter().chain(std::iter::once(&bias)) {
            if !(im.amplitude >= 0.0 && im.amplitude.is_finite() && im.phase.is_finite()) {
                return Err(Error::MalformedCircuit(
                    "imbalance amplitude must be >= 0 and finite".into(),
                ));
            }
        }
        self.imbalance = branches;
        self.bias_imbalance = bias;
        Ok(self)
    }

    /// Draws an independent imbalance for every branch (and the bias path).
    pub fn with_random_imbalance<R: Rng + ?Sized>(
        self,
        spec: &ImbalanceSpec,
        rng: &mut R,
    ) -> Result<Self> {
        let branches = (0..self.branches.len()).map(|_| spec.sample(rng)).collect();
        let bias = spec.sample(rng);
        self.with_imbalance(branches, bias)
    }

    pub fn fanout_n(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn bias_branch(&self) -> Option<&Branch> {
        self.bias_branch.as_ref()
    }

    pub fn imbalance(&self) -> &[Imbalance] {
        &self.imbalance
    }

    pub fn bias_imbalance(&self) -> Imbalance {
        self.bias_imbalance
    }

    pub fn bias_path(&self) -> BiasPath {
        self.bias_path
    }

    /// Number of amplitude-encoding rings in the inner branches.
    pub fn ring_count(&self) -> usize {
        self.branches
            .iter()
            .flat_map(|b| &b.devices)
            .filter(|d| matches!(d, Device::Ring(_)))
            .count()
    }

    /// Contribution of branch `i` alone to the output field.
    pub fn branch_contribution(&self, i: usize, wavelength_nm: f64) -> FieldAmplitude {
        let n = self.branches.len() as f64;
        let mut c = self.branches[i].transfer(wavelength_nm) * self.imbalance[i].factor() / n;
        if self.bias_branch.is_some() {
            c *= 0.5;
        }
        c
    }

    /// Contribution of the bias path alone (zero when there is none).
    pub fn bias_contribution(&self, wavelength_nm: f64) -> FieldAmplitude {
        match &self.bias_branch {
            None => Complex64::new(0.0, 0.0),
            Some(b) => {
                0.5 * b.transfer(wavelength_nm)
                    * self.bias_imbalance.factor()
                    * Complex64::from_polar(1.0, self.bias_path.phase(wavelength_nm))
            }
        }
    }

    /// Output field for unit input field.
    pub fn evaluate(&self, wavelength_nm: f64) -> Result<FieldAmplitude> {
        if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
            return Err(Error::invalid(
                "wavelength_nm",
                format!("{wavelength_nm} must be positive"),
            ));
        }
        Ok(self.evaluate_unchecked(wavelength_nm))
    }

    pub(crate) fn evaluate_unchecked(&self, wavelength_nm: f64) -> FieldAmplitude {
        let inner: FieldAmplitude = (0..self.branches.len())
            .map(|i| self.branch_contribution(i, wavelength_nm))
            .sum();
        inner + self.bias_contribution(wavelength_nm)
    }
}

/// Free function form of [`CircuitGraph::evaluate`].
pub fn evaluate(circuit: &CircuitGraph, wavelength_nm: f64) -> Result<FieldAmplitude> {
    circuit.evaluate(wavelength_nm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ps(phase: f64) -> Branch {
        Branch::new(vec![Device::PhaseShifter(PhaseShifterDevice::new(phase))])
    }

    #[test]
    fn two_branch_interference() {
        let c = CircuitGraph::new(vec![ps(0.0), ps(0.0)]).unwrap();
        assert!((c.evaluate(1550.0).unwrap().norm() - 1.0).abs() < 1e-12);
        let d = CircuitGraph::new(vec![ps(0.0), ps(PI)]).unwrap();
        assert!(d.evaluate(1550.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn identity_circuit_is_lossless() {
        for n in 1..=64 {
            let c = CircuitGraph::new(vec![Branch::default(); n]).unwrap();
            assert!((c.evaluate(1526.0).unwrap().norm() - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn construction_rejects_malformed() {
        assert!(CircuitGraph::new(vec![]).is_err());
        let bad = Branch::new(vec![Device::PhaseShifter(PhaseShifterDevice {
            phase: 0.0,
            insertion_loss_db: -1.0,
        })]);
        assert!(CircuitGraph::new(vec![bad]).is_err());
        let c = CircuitGraph::new(vec![Branch::default(); 2]).unwrap();
        assert!(c.with_imbalance(vec![Imbalance::default()], Imbalance::default()).is_err());
    }

    #[test]
    fn bias_branch_splits_half_and_half() {
        let c = CircuitGraph::new(vec![ps(0.0), ps(0.0)])
            .unwrap()
            .with_bias_branch(ps(PI))
            .unwrap();
        assert!(c.evaluate(1526.0).unwrap().norm() < 1e-12);
        let c = CircuitGraph::new(vec![ps(0.0)])
            .unwrap()
            .with_bias_branch(ps(0.0))
            .unwrap();
        assert!((c.evaluate(1526.0).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_wavelength() {
        let c = CircuitGraph::new(vec![Branch::default()]).unwrap();
        assert!(c.evaluate(0.0).is_err());
        assert!(c.evaluate(f64::NAN).is_err());
    }
}
