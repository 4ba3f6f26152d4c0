//! Element counts, component footprint and electrical I/O of the four
//! architecture variants.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    ColnNominal,
    ColnThermal,
    WdiplnNaive,
    WdiplnNominal,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ColnNominal,
        Variant::ColnThermal,
        Variant::WdiplnNaive,
        Variant::WdiplnNominal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::ColnNominal => "COLN (nominal)",
            Variant::ColnThermal => "COLN (w/ thermal MZI)",
            Variant::WdiplnNaive => "WDIPLN (naive)",
            Variant::WdiplnNominal => "WDIPLN (nominal)",
        }
    }

    pub fn input_element(self) -> &'static str {
        match self {
            Variant::ColnNominal | Variant::ColnThermal => "MZM",
            Variant::WdiplnNaive => "Small MRD",
            Variant::WdiplnNominal => "Large MRD",
        }
    }

    pub fn weight_element(self) -> &'static str {
        match self {
            Variant::ColnNominal => "MZM",
            Variant::ColnThermal => "Thermal MZI",
            Variant::WdiplnNaive | Variant::WdiplnNominal => "Small MRD",
        }
    }

    /// Default (input, weight) element areas in mm^2.
    pub fn default_sizes(self) -> (f64, f64) {
        match self {
            Variant::ColnNominal => (0.8, 0.8),
            Variant::ColnThermal => (0.8, 1e-1),
            Variant::WdiplnNaive => (1e-4, 1e-4),
            Variant::WdiplnNominal => (1e-2, 1e-4),
        }
    }

    pub fn scaling_rule(self) -> &'static str {
        match self {
            Variant::WdiplnNominal => "N(M+1)",
            _ => "2NM",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coln-nominal" => Ok(Variant::ColnNominal),
            "coln-thermal" => Ok(Variant::ColnThermal),
            "wdipln-naive" => Ok(Variant::WdiplnNaive),
            "wdipln-nominal" => Ok(Variant::WdiplnNominal),
            _ => Err(Error::invalid("variant", format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub variant: Variant,
    pub n: usize,
    pub m: usize,
    pub input_element_mm2: f64,
    pub weight_element_mm2: f64,
    pub io_per_element: usize,
}

impl ArchitectureSpec {
    pub fn new(variant: Variant, n: usize, m: usize) -> Self {
        let (input_element_mm2, weight_element_mm2) = variant.default_sizes();
        ArchitectureSpec {
            variant,
            n,
            m,
            input_element_mm2,
            weight_element_mm2,
            io_per_element: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("n, m", "must be at least 1"));
        }
        if !(self.input_element_mm2 > 0.0 && self.weight_element_mm2 > 0.0) {
            return Err(Error::invalid("element size", "must be positive"));
        }
        Ok(())
    }

    pub fn input_element_count(&self) -> usize {
        match self.variant {
            Variant::WdiplnNominal => self.n,
            _ => self.n * self.m,
        }
    }

    pub fn weight_element_count(&self) -> usize {
        self.n * self.m
    }
}

pub fn element_count(spec: &ArchitectureSpec) -> usize {
    spec.input_element_count() + spec.weight_element_count()
}

pub fn footprint(spec: &ArchitectureSpec) -> f64 {
    spec.input_element_count() as f64 * spec.input_element_mm2
        + spec.weight_element_count() as f64 * spec.weight_element_mm2
}

pub fn electrical_io(spec: &ArchitectureSpec) -> usize {
    spec.io_per_element * element_count(spec)
}

/// Area of a `rows x cols` pad grid at `pitch_um`, in mm^2.
pub fn pad_area(pad_count: usize, pad_size_um: f64, pitch_um: f64, rows: usize, cols: usize) -> Result<f64> {
    if pad_count > rows * cols {
        return Err(Error::PadCapacity {
            pads: pad_count,
            rows,
            cols,
        });
    }
    if !(pad_size_um > 0.0 && pitch_um >= pad_size_um) {
        return Err(Error::invalid("pitch_um", "must be at least the pad size"));
    }
    Ok((rows * cols) as f64 * pitch_um * pitch_um / 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub spec: ArchitectureSpec,
    pub element_count: usize,
    pub input_element_count: usize,
    pub weight_element_count: usize,
    pub footprint_mm2: f64,
    pub electrical_io: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pad_area_mm2: Option<f64>,
}

impl ScalingReport {
    pub fn new(spec: ArchitectureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(ScalingReport {
            spec,
            element_count: element_count(&spec),
            input_element_count: spec.input_element_count(),
            weight_element_count: spec.weight_element_count(),
            footprint_mm2: footprint(&spec),
            electrical_io: electrical_io(&spec),
            pad_area_mm2: None,
        })
    }

    /// Adds the area of a pad grid sized for this report's I/O count.
    pub fn with_pads(mut self, pad_size_um: f64, pitch_um: f64, rows: usize, cols: usize) -> Result<Self> {
        self.pad_area_mm2 = Some(pad_area(self.electrical_io, pad_size_um, pitch_um, rows, cols)?);
        Ok(self)
    }
}

/// Formats an area the way the comparison table prints it: plain decimals
/// from 0.1 upwards, scientific notation below.
pub fn format_area(mm2: f64) -> String {
    if mm2 >= 0.1 {
        let s = format!("{mm2:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        let s = format!("{mm2:.2e}");
        let (mant, exp) = s.split_once('e').expect("scientific format");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{exp}")
    }
}

/// Side-by-side table of the four variants at two (N, M) points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub points: Vec<(usize, usize)>,
    pub reports: Vec<Vec<ScalingReport>>,
}

impl ScalingTable {
    pub fn new(points: &[(usize, usize)]) -> Result<Self> {
        let reports = points
            .iter()
            .map(|&(n, m)| {
                Variant::ALL
                    .iter()
                    .map(|&v| ScalingReport::new(ArchitectureSpec::new(v, n, m)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalingTable {
            points: points.to_vec(),
            reports,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialises")
    }
}

impl fmt::Display for ScalingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows: Vec<[String; 5]> = Vec::new();
        let head = |name: &str, g: &dyn Fn(Variant) -> String| -> [String; 5] {
            let mut r: [String; 5] = Default::default();
            r[0] = name.to_string();
            for (i, v) in Variant::ALL.iter().enumerate() {
                r[i + 1] = g(*v);
            }
            r
        };
        rows.push(head("Architecture", &|v| v.label().to_string()));
        rows.push(head("Input Element", &|v| v.input_element().to_string()));
        rows.push(head("  Size (mm^2)", &|v| format_area(v.default_sizes().0)));
        rows.push(head("Weight Element", &|v| v.weight_element().to_string()));
        rows.push(head("  Size (mm^2)", &|v| format_area(v.default_sizes().1)));
        rows.push(head("Scaling Rule", &|v| v.scaling_rule().to_string()));
        let section = |title: &str| -> [String; 5] {
            let mut r: [String; 5] = Default::default();
            r[0] = title.to_string();
            r
        };
        rows.push(section("Physical Size (mm^2): Component Size Only (no routing considered)"));
        for (i, &(n, m)) in self.points.iter().enumerate() {
            rows.push(head(&format!("  N={n}, M={m}"), &|v| {
                let k = Variant::ALL.iter().position(|x| *x == v).expect("variant");
                format_area(self.reports[i][k].footprint_mm2)
            }));
        }
        rows.push(section("Electrical I/O: 4 per element"));
        for (i, &(n, m)) in self.points.iter().enumerate() {
            rows.push(head(&format!("  N={n}, M={m}"), &|v| {
                let k = Variant::ALL.iter().position(|x| *x == v).expect("variant");
                self.reports[i][k].electrical_io.to_string()
            }));
        }
        let mut widths = [0; 5];
        for r in &rows {
            if r[1..].iter().all(String::is_empty) {
                continue;
            }
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        for r in &rows {
            if r[1..].iter().all(String::is_empty) {
                writeln!(f, "{}", r[0])?;
                continue;
            }
            write!(f, "{:<w$}", r[0], w = widths[0])?;
            for (c, w) in r[1..].iter().zip(&widths[1..]) {
                write!(f, "  {c:>w$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
