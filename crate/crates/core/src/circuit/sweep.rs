use std::f64::consts::{PI, TAU};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CircuitGraph;
use crate::{Error, FieldAmplitude, Result};

/// Transmission reported for a perfectly dark point.
pub const DB_FLOOR: f64 = -300.0;

/// Uniform wavelength grid. `step_pm` is in picometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_pm: f64,
}

impl SpectralGrid {
    pub fn new(start_nm: f64, stop_nm: f64, step_pm: f64) -> Result<Self> {
        let g = SpectralGrid {
            start_nm,
            stop_nm,
            step_pm,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid centred on `center_nm` spanning `half_width_pm` either side.
    pub fn centered(center_nm: f64, half_width_pm: f64, step_pm: f64) -> Result<Self> {
        SpectralGrid::new(
            center_nm - half_width_pm * 1e-3,
            center_nm + half_width_pm * 1e-3,
            step_pm,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_nm.is_finite() && self.start_nm > 0.0) {
            return Err(Error::invalid("start_nm", "must be positive"));
        }
        if !(self.stop_nm.is_finite() && self.stop_nm > self.start_nm) {
            return Err(Error::invalid("stop_nm", "must exceed start_nm"));
        }
        if !(self.step_pm.is_finite() && self.step_pm > 0.0) {
            return Err(Error::invalid("step_pm", "must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        let span_pm = (self.stop_nm - self.start_nm) * 1e3;
        (span_pm / self.step_pm + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.start_nm + i as f64 * self.step_pm * 1e-3)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub wavelength_nm: f64,
    pub transmission_db: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    #[serde(skip)]
    pub fields: Vec<FieldAmplitude>,
}

pub fn to_db(field: FieldAmplitude) -> f64 {
    let p = field.norm_sqr();
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

fn unwrap_phase(fields: &[FieldAmplitude]) -> Vec<f64> {
    let mut out = Vec::with_capacity(fields.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for f in fields {
        let p = f.arg();
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= TAU;
            } else if d < -PI {
                offset += TAU;
            }
        }
        prev = Some(p);
        out.push(p + offset);
    }
    out
}

impl SweepResult {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transmission_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.transmission_db).collect()
    }

    /// Net phase winding across the sweep, in turns.
    pub fn winding(&self) -> i64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => ((b.phase_rad - a.phase_rad) / TAU).round() as i64,
            _ => 0,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "wavelength_nm,transmission_db,phase_rad")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.wavelength_nm, p.transmission_db, p.phase_rad)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

impl CircuitGraph {
    /// Evaluates the circuit on every grid point. Points are evaluated in
    /// parallel and collected in grid order, so results are bit-identical
    /// from run to run.
    pub fn sweep(&self, grid: &SpectralGrid) -> Result<SweepResult> {
        grid.validate()?;
        let wavelengths = grid.wavelengths();
        let fields: Vec<FieldAmplitude> = wavelengths
            .par_iter()
            .map(|&l| self.evaluate_unchecked(l))
            .collect();
        let phases = unwrap_phase(&fields);
        let points = wavelengths
            .iter()
            .zip(&fields)
            .zip(phases)
            .map(|((&wavelength_nm, &f), phase_rad)| SweepPoint {
                wavelength_nm,
                transmission_db: to_db(f),
                phase_rad,
            })
            .collect();
        Ok(SweepResult { points, fields })
    }
}

/// Local transmission minimum with its topographic prominence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    pub index: usize,
    pub depth_db: f64,
    pub prominence_db: f64,
}

/// Finds dips whose prominence is at least `min_prominence_db`.
///
/// Prominence follows the usual peak definition applied to the negated
/// trace: the dip depth relative to the higher of the two highest points
/// reached before the trace falls below the dip level again on each side.
/// Flat minima report their centre sample.
pub fn find_dips(trace_db: &[f64], min_prominence_db: f64) -> Vec<Dip> {
    let n = trace_db.len();
    let mut dips = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if trace_db[i] < trace_db[i - 1] {
            // extend across a plateau
            let mut j = i;
            while j + 1 < n && trace_db[j + 1] == trace_db[i] {
                j += 1;
            }
            if j + 1 < n && trace_db[j + 1] > trace_db[i] {
                let idx = (i + j) / 2;
                let level = trace_db[idx];
                let mut left_max = level;
                for k in (0..i).rev() {
                    if trace_db[k] < level {
                        break;
                    }
                    left_max = left_max.max(trace_db[k]);
                }
                let mut right_max = level;
                for &v in &trace_db[j + 1..] {
                    if v < level {
                        break;
                    }
                    right_max = right_max.max(v);
                }
                let prominence = left_max.min(right_max) - level;
                if prominence >= min_prominence_db {
                    dips.push(Dip {
                        index: idx,
                        depth_db: level,
                        prominence_db: prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    dips
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Branch, Device};
    use crate::devices::{RingDesign, PROBE_WAVELENGTH_NM};

    #[test]
    fn grid_point_count() {
        let g = SpectralGrid::new(1525.0, 1527.0, 10.0).unwrap();
        assert_eq!(g.len(), 201);
        let g = SpectralGrid::new(1525.0, 1525.0095, 1.0).unwrap();
        assert_eq!(g.len(), 10);
        assert!(SpectralGrid::new(1527.0, 1525.0, 1.0).is_err());
        assert!(SpectralGrid::new(1525.0, 1527.0, 0.0).is_err());
    }

    #[test]
    fn empty_branch_is_flat() {
        let c = CircuitGraph::new(vec![Branch::default()]).unwrap();
        let s = c.sweep(&SpectralGrid::new(1520.0, 1530.0, 50.0).unwrap()).unwrap();
        assert!(s.points.iter().all(|p| p.transmission_db.abs() < 1e-12));
        assert_eq!(s.winding(), 0);
    }

    #[test]
    fn single_ring_dip_matches_point_evaluation() {
        let ring = RingDesign::small().calibrate_binary(PROBE_WAVELENGTH_NM, 8.0).unwrap();
        let ring = ring.with_voltage(1.3).unwrap();
        let res = ring.resonance_near(PROBE_WAVELENGTH_NM);
        let c = CircuitGraph::new(vec![Branch::new(vec![Device::Ring(ring)])]).unwrap();
        let half = ring.fsr_nm(res) / 2.0;
        let grid = SpectralGrid::new(res - half, res + half, 0.5).unwrap();
        let s = c.sweep(&grid).unwrap();
        let dips = find_dips(&s.transmission_db(), 3.0);
        assert_eq!(dips.len(), 1);
        let at_dip = s.points[dips[0].index].wavelength_nm;
        let point = to_db(ring.transfer(at_dip).unwrap());
        assert!((dips[0].depth_db - point).abs() < 1e-9);
        assert!((at_dip - res).abs() < 1e-3);
        assert!(s.points.iter().all(|p| p.transmission_db <= 1e-9));
    }

    #[test]
    fn dip_finder_basics() {
        let trace = [0.0, -1.0, -10.0, -1.0, 0.0, -0.5, 0.0, -20.0, -20.0, -5.0, 0.0];
        let dips = find_dips(&trace, 3.0);
        assert_eq!(dips.iter().map(|d| d.index).collect::<Vec<_>>(), vec![2, 7]);
        assert_eq!(dips[0].prominence_db, 10.0);
        assert!(find_dips(&[0.0, 0.0, 0.0], 0.1).is_empty());
    }

    #[test]
    fn csv_header_and_rows() {
        let c = CircuitGraph::new(vec![Branch::default()]).unwrap();
        let s = c.sweep(&SpectralGrid::new(1526.0, 1526.002, 1.0).unwrap()).unwrap();
        let csv = s.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("wavelength_nm,transmission_db,phase_rad"));
        assert_eq!(lines.count(), 3);
    }
}
