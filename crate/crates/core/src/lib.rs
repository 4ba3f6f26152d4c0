//! Simulation of wavelength-diverse integrated photonic linear neurons.
//!
//! The crate models micro-ring resonators, Mach-Zehnder modulators and phase
//! shifters as complex field transfer functions, composes them into
//! fan-out/fan-in interferometric circuits, maps signed dot products onto
//! those circuits, and runs small multilayer perceptrons on them by
//! reconfiguring one physical linear stage per layer.
//!
//! Module map:
//!
//! - [`devices`]: analytic transfer functions and the voltage tuning model.
//! - [`circuit`]: branch graphs, spectral sweeps and topology builders.
//! - [`neuron`]: weight/input encoding and the analytic MAC oracle.
//! - [`mlp`]: the 2-2-1 logic gate network and the configure-recycle run.
//! - [`scaling`]: element counts, footprint and electrical I/O estimates.
//! - [`cli`]: the `wdipln` command line front end.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod cli;
pub mod devices;
pub mod error;
pub mod mlp;
pub mod neuron;
pub mod scaling;

pub use error::{Error, Result};

/// Complex optical field amplitude. Power is the squared magnitude.
pub type FieldAmplitude = num_complex::Complex64;

/// Optical power carried by a field amplitude.
#[inline]
pub fn power(field: FieldAmplitude) -> f64 {
    field.norm_sqr()
}
