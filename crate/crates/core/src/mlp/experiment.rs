use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{activation_3db, GateTask, MlpModel, INPUT_PAIRS, OUTPUT_THRESHOLD};
use crate::circuit::{CircuitGraph, Imbalance, ImbalanceSpec, SpectralGrid};
use crate::devices::PROBE_WAVELENGTH_NM;
use crate::neuron::{configure, readout, InputEncoding, NeuronConfig, Topology};
use crate::{Error, Result};

/// Half width of the readout averaging window, in picometres.
pub const WINDOW_HALF_PM: f64 = 50.0;
const WINDOW_STEP_PM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Independent imbalance per branch, redrawn for every stage.
    Random { spec: ImbalanceSpec, seed: u64 },
    /// Fixed imbalance on every inner branch and on the bias path.
    Static { branch: Imbalance, bias: Imbalance },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub input_pair: [f64; 2],
    pub config: NeuronConfig,
    /// Signed readout at the probe, rescaled to network units.
    pub raw_readout: f64,
    pub activated: f64,
    pub software_pre: f64,
    pub software_activated: f64,
    pub window_mean: f64,
    pub window_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: String,
    pub weights: [f64; 2],
    pub bias: f64,
    pub input_scale: f64,
    pub weight_scale: f64,
    pub encoding: InputEncoding,
    pub rows: Vec<StageRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub task: GateTask,
    pub model: MlpModel,
    pub probe_nm: f64,
    pub noise: Option<NoiseModel>,
    pub stages: Vec<StageLog>,
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
    pub accuracy: f64,
}

impl ExperimentLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serialises")
    }

    /// Largest gap between circuit and software values over all stages.
    pub fn max_stage_error(&self) -> f64 {
        self.stages
            .iter()
            .flat_map(|s| &s.rows)
            .map(|r| {
                (r.raw_readout - r.software_pre)
                    .abs()
                    .max((r.activated - r.software_activated).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Output-stage rows as `input_pair,raw_readout,activated,target,correct`,
    /// with the network input pair written as two digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "input_pair,raw_readout,activated,target,correct")?;
        if let Some(out) = self.stages.last() {
            for (i, r) in out.rows.iter().enumerate() {
                writeln!(
                    w,
                    "{}{},{},{},{},{}",
                    INPUT_PAIRS[i][0],
                    INPUT_PAIRS[i][1],
                    r.raw_readout,
                    r.activated,
                    self.targets[i],
                    self.predictions[i] == self.targets[i]
                )?;
            }
        }
        Ok(())
    }
}

fn apply_noise(
    g: CircuitGraph,
    noise: Option<&NoiseModel>,
    draw: &mut Option<(Vec<Imbalance>, Imbalance)>,
    rng: &mut ChaCha8Rng,
) -> Result<CircuitGraph> {
    match noise {
        None => Ok(g),
        Some(NoiseModel::Static { branch, bias }) => {
            let n = g.fanout_n();
            g.with_imbalance(vec![*branch; n], *bias)
        }
        Some(NoiseModel::Random { spec, .. }) => {
            let (b, bias) = draw.get_or_insert_with(|| {
                let b = (0..g.fanout_n()).map(|_| spec.sample(rng)).collect();
                (b, spec.sample(rng))
            });
            g.with_imbalance(b.clone(), *bias)
        }
    }
}

struct Stage<'a> {
    name: &'a str,
    weights: [f64; 2],
    bias: f64,
    inputs: [[f64; 2]; 4],
    software: [(f64, f64); 4],
    encoding: InputEncoding,
}

fn run_stage(
    stage: &Stage,
    probe_nm: f64,
    noise: Option<&NoiseModel>,
    rng: &mut ChaCha8Rng,
) -> Result<StageLog> {
    let m = stage
        .inputs
        .iter()
        .flatten()
        .fold(1.0_f64, |acc, &x| acc.max(x));
    let mut k = stage.weights[0].abs().max(stage.weights[1].abs()).max(stage.bias.abs() / m);
    if k == 0.0 {
        k = 1.0;
    }
    let n = 2.0;
    let topology = Topology::Ring(stage.encoding);
    let grid = SpectralGrid::centered(probe_nm, WINDOW_HALF_PM, WINDOW_STEP_PM)?;
    let mut draw = None;
    let mut rows = Vec::with_capacity(4);
    for (x, &(software_pre, software_activated)) in stage.inputs.iter().zip(&stage.software) {
        let mut config = NeuronConfig::new(
            vec![stage.weights[0] / k, stage.weights[1] / k],
            vec![x[0] / m, x[1] / m],
        )
        .with_bias(stage.bias / (m * k));
        config.probe_wavelength_nm = probe_nm;
        let g = apply_noise(configure(&config, topology)?, noise, &mut draw, rng)?;
        let r = apply_noise(configure(&config.reference(), topology)?, noise, &mut draw, rng)?;
        let scale = m * k * n;
        let ref_field = r.evaluate(probe_nm)?;
        let ref_power = ref_field.norm_sqr();
        let value = |l: f64| -> Result<f64> {
            let f = g.evaluate(l)?;
            let sign = if (f * r.evaluate(l)?.conj()).re < 0.0 { -1.0 } else { 1.0 };
            Ok(sign * scale * readout(f, ref_power))
        };
        let raw = value(probe_nm)?;
        let window = grid.wavelengths().into_iter().map(value).collect::<Result<Vec<_>>>()?;
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / window.len() as f64;
        rows.push(StageRow {
            input_pair: *x,
            config,
            raw_readout: raw,
            activated: activation_3db(raw, 1.0),
            software_pre,
            software_activated,
            window_mean: mean,
            window_std: var.sqrt(),
        });
    }
    Ok(StageLog {
        stage: stage.name.to_string(),
        weights: stage.weights,
        bias: stage.bias,
        input_scale: m,
        weight_scale: k,
        encoding: stage.encoding,
        rows,
    })
}

/// Runs the configure-recycle protocol: two hidden-node stages fed with the
/// four binary input pairs, then the output stage fed with the recorded
/// activated hidden values.
pub fn run_gate_experiment(
    task: GateTask,
    model: &MlpModel,
    noise: Option<&NoiseModel>,
) -> Result<ExperimentLog> {
    model.validate()?;
    let probe_nm = PROBE_WAVELENGTH_NM;
    let seed = match noise {
        Some(NoiseModel::Random { seed, .. }) => *seed,
        _ => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fwd = INPUT_PAIRS.map(|x| model.forward_deployed(x));
    let wrap = |name: &str| {
        let name = name.to_string();
        move |e: Error| Error::Stage {
            stage: name,
            source: Box::new(e),
        }
    };

    let mut stages = Vec::with_capacity(3);
    for (k, name) in ["h1", "h2"].into_iter().enumerate() {
        let s = Stage {
            name,
            weights: [model.w[0][k], model.w[1][k]],
            bias: model.hidden_bias[k],
            inputs: INPUT_PAIRS,
            software: fwd.map(|f| (f.hidden_pre[k], f.hidden[k])),
            encoding: InputEncoding::Binary,
        };
        stages.push(run_stage(&s, probe_nm, noise, &mut rng).map_err(wrap(name))?);
    }
    let hidden: [[f64; 2]; 4] =
        std::array::from_fn(|i| [stages[0].rows[i].activated, stages[1].rows[i].activated]);
    let out = Stage {
        name: "out",
        weights: model.t,
        bias: model.output_bias,
        inputs: hidden,
        software: fwd.map(|f| (f.output_pre, f.output)),
        encoding: InputEncoding::Continuous,
    };
    stages.push(run_stage(&out, probe_nm, noise, &mut rng).map_err(wrap("out"))?);

    let targets: Vec<f64> = task.truth_table().iter().map(|r| r.1).collect();
    let predictions: Vec<f64> = stages[2]
        .rows
        .iter()
        .map(|r| if r.activated >= OUTPUT_THRESHOLD { 1.0 } else { 0.0 })
        .collect();
    let correct = predictions.iter().zip(&targets).filter(|(p, t)| p == t).count();
    Ok(ExperimentLog {
        task,
        model: *model,
        probe_nm,
        noise: noise.copied(),
        stages,
        accuracy: correct as f64 / targets.len() as f64,
        predictions,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{train, TrainParams};

    #[test]
    fn noiseless_gates_match_software() {
        for task in GateTask::ALL {
            let m = train(task, 11, &TrainParams::default()).unwrap();
            let log = run_gate_experiment(task, &m, None).unwrap();
            assert_eq!(log.accuracy, 1.0, "{task:?}");
            assert!(log.max_stage_error() < 5e-3, "{task:?} {}", log.max_stage_error());
            assert_eq!(log.stages.len(), 3);
            assert!(log.stages.iter().all(|s| s.rows.len() == 4));
        }
    }

    #[test]
    fn csv_columns() {
        let m = train(GateTask::Or, 2, &TrainParams::default()).unwrap();
        let log = run_gate_experiment(GateTask::Or, &m, None).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("input_pair,raw_readout,activated,target,correct\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
