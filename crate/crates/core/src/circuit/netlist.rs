//! JSON netlist schema.
//!
//! ```json
//! {
//!   "fanout_n": 2,
//!   "branches": [
//!     {"devices": [{"kind": "ring", "r": 0.99, "a0": 0.99, ...},
//!                  {"kind": "phase_shifter", "phase": 3.14159}]},
//!     {"devices": []}
//!   ],
//!   "bias_branch": {"devices": [...]},
//!   "imbalance": {"branches": [{"amplitude": 1.0, "phase": 0.0}, ...],
//!                 "bias": {"amplitude": 0.96, "phase": 0.03}},
//!   "bias_path": {"delta_length_um": 0.0, "n_eff": 2.45}
//! }
//! ```
//!
//! Device kinds are `ring`, `phase_ring`, `phase_shifter` and `mzm`; their
//! remaining fields are the parameter records of [`crate::devices`].

use serde::{Deserialize, Serialize};

use super::{BiasPath, Branch, CircuitGraph, Imbalance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Netlist {
    pub fanout_n: usize,
    pub branches: Vec<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_branch: Option<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imbalance: Option<NetlistImbalance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_path: Option<BiasPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistImbalance {
    pub branches: Vec<Imbalance>,
    #[serde(default)]
    pub bias: Imbalance,
}

impl TryFrom<Netlist> for CircuitGraph {
    type Error = Error;

    fn try_from(n: Netlist) -> Result<Self> {
        if n.fanout_n != n.branches.len() {
            return Err(Error::MalformedCircuit(format!(
                "fanout_n: {} does not match {} branches",
                n.fanout_n,
                n.branches.len()
            )));
        }
        let mut g = CircuitGraph::new(n.branches)?;
        if let Some(b) = n.bias_branch {
            g = g.with_bias_branch(b)?;
        }
        if let Some(im) = n.imbalance {
            g = g
                .with_imbalance(im.branches, im.bias)
                .map_err(|e| Error::MalformedCircuit(format!("imbalance: {e}")))?;
        }
        if let Some(p) = n.bias_path {
            g = g.with_bias_path(p)?;
        }
        Ok(g)
    }
}

impl From<&CircuitGraph> for Netlist {
    fn from(g: &CircuitGraph) -> Self {
        let has_imbalance = !g.bias_imbalance.is_identity()
            || g.imbalance.iter().any(|i| !i.is_identity());
        Netlist {
            fanout_n: g.fanout_n(),
            branches: g.branches.clone(),
            bias_branch: g.bias_branch.clone(),
            imbalance: has_imbalance.then(|| NetlistImbalance {
                branches: g.imbalance.clone(),
                bias: g.bias_imbalance,
            }),
            bias_path: (g.bias_path != BiasPath::default()).then_some(g.bias_path),
        }
    }
}

impl CircuitGraph {
    pub fn to_netlist(&self) -> Netlist {
        Netlist::from(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_netlist()).expect("netlist serialises")
    }
}

/// Parses and validates a netlist. Errors name the offending field path and,
/// for syntax or type errors, the line and column.
pub fn parse_netlist(text: &str) -> Result<CircuitGraph> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let netlist: Netlist = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::MalformedCircuit(format!(
            "{path}: {inner} (line {}, column {})",
            inner.line(),
            inner.column()
        ))
    })?;
    CircuitGraph::try_from(netlist)
}
