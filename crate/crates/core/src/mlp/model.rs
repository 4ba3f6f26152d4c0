use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateTask {
    And,
    Or,
    Xor,
}

pub const INPUT_PAIRS: [[f64; 2]; 4] = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];

impl GateTask {
    pub const ALL: [GateTask; 3] = [GateTask::And, GateTask::Or, GateTask::Xor];

    pub fn truth_table(self) -> [([f64; 2], f64); 4] {
        INPUT_PAIRS.map(|p| {
            let (a, b) = (p[0] == 1.0, p[1] == 1.0);
            let y = match self {
                GateTask::And => a && b,
                GateTask::Or => a || b,
                GateTask::Xor => a != b,
            };
            (p, if y { 1.0 } else { 0.0 })
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            GateTask::And => "AND",
            GateTask::Or => "OR",
            GateTask::Xor => "XOR",
        }
    }
}

impl std::str::FromStr for GateTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AND" => Ok(GateTask::And),
            "OR" => Ok(GateTask::Or),
            "XOR" => Ok(GateTask::Xor),
            _ => Err(Error::invalid("gate", format!("unknown gate {s:?}"))),
        }
    }
}

/// Prediction threshold on the activated output.
pub const OUTPUT_THRESHOLD: f64 = 0.5;

/// 2-2-1 network. `w[i][k]` connects input `i` to hidden node `k`, so stage
/// `k` of the photonic protocol uses the pair `[w[0][k], w[1][k]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MlpModel {
    pub w: [[f64; 2]; 2],
    pub t: [f64; 2],
    pub hidden_bias: [f64; 2],
    pub output_bias: f64,
}

/// Layer values of one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forward {
    pub hidden_pre: [f64; 2],
    pub hidden: [f64; 2],
    pub output_pre: f64,
    pub output: f64,
}

/// ReLU followed by a cutoff at half the reference power: values whose square
/// falls below `reference / 2` are zeroed.
pub fn activation_3db(readout: f64, reference: f64) -> f64 {
    let v = readout.max(0.0);
    if v * v < reference / 2.0 {
        0.0
    } else {
        v
    }
}

fn relu(z: f64) -> f64 {
    z.max(0.0)
}

/// Activation applied by the deployed network, whose cutoff reference is a
/// logical one.
pub fn deployed_activation(z: f64) -> f64 {
    activation_3db(z, 1.0)
}

impl MlpModel {
    pub const PARAMS: usize = 9;

    pub fn validate(&self) -> Result<()> {
        if self.to_params().iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("model", "non-finite parameter"))
        }
    }

    pub fn to_params(&self) -> [f64; 9] {
        [
            self.w[0][0],
            self.w[0][1],
            self.w[1][0],
            self.w[1][1],
            self.hidden_bias[0],
            self.hidden_bias[1],
            self.t[0],
            self.t[1],
            self.output_bias,
        ]
    }

    pub fn from_params(p: &[f64; 9]) -> Self {
        MlpModel {
            w: [[p[0], p[1]], [p[2], p[3]]],
            hidden_bias: [p[4], p[5]],
            t: [p[6], p[7]],
            output_bias: p[8],
        }
    }

    fn forward_with(&self, x: [f64; 2], act: impl Fn(f64) -> f64) -> Forward {
        let mut hidden_pre = [0.0; 2];
        let mut hidden = [0.0; 2];
        for k in 0..2 {
            hidden_pre[k] = self.w[0][k] * x[0] + self.w[1][k] * x[1] + self.hidden_bias[k];
            hidden[k] = act(hidden_pre[k]);
        }
        let output_pre = self.t[0] * hidden[0] + self.t[1] * hidden[1] + self.output_bias;
        Forward {
            hidden_pre,
            hidden,
            output_pre,
            output: act(output_pre),
        }
    }

    /// Training-time forward pass with plain ReLU.
    pub fn forward(&self, x: [f64; 2]) -> Forward {
        self.forward_with(x, relu)
    }

    /// Forward pass with the 3 dB cutoff activation the photonic run applies.
    pub fn forward_deployed(&self, x: [f64; 2]) -> Forward {
        self.forward_with(x, deployed_activation)
    }

    pub fn predict(&self, x: [f64; 2]) -> f64 {
        if self.forward_deployed(x).output >= OUTPUT_THRESHOLD {
            1.0
        } else {
            0.0
        }
    }

    pub fn accuracy(&self, task: GateTask) -> f64 {
        let rows = task.truth_table();
        rows.iter().filter(|(x, y)| self.predict(*x) == *y).count() as f64 / rows.len() as f64
    }

    /// Half squared error of the ReLU forward pass on one datapoint.
    pub fn loss(&self, x: [f64; 2], y: f64) -> f64 {
        let d = self.forward(x).output - y;
        0.5 * d * d
    }

    /// Analytic gradient of [`MlpModel::loss`] in [`MlpModel::to_params`] order.
    pub fn gradient(&self, x: [f64; 2], y: f64) -> [f64; 9] {
        let f = self.forward(x);
        let step = |z: f64| if z > 0.0 { 1.0 } else { 0.0 };
        let d_out = (f.output - y) * step(f.output_pre);
        let mut g = [0.0; 9];
        g[6] = d_out * f.hidden[0];
        g[7] = d_out * f.hidden[1];
        g[8] = d_out;
        for k in 0..2 {
            let d_h = d_out * self.t[k] * step(f.hidden_pre[k]);
            g[k] = d_h * x[0];
            g[2 + k] = d_h * x[1];
            g[4 + k] = d_h;
        }
        g
    }
}

/// Max over parameters of `|analytic - numeric| / max(1, |analytic|)`, using
/// central differences of step `eps`. Parameters whose perturbation moves a
/// pre-activation across zero are skipped.
pub fn gradient_check(model: &MlpModel, x: [f64; 2], y: f64, eps: f64) -> f64 {
    let analytic = model.gradient(x, y);
    let base = model.to_params();
    let f0 = model.forward(x);
    let sides = |f: &Forward| {
        [
            f.hidden_pre[0] > 0.0,
            f.hidden_pre[1] > 0.0,
            f.output_pre > 0.0,
        ]
    };
    let mut worst: f64 = 0.0;
    for i in 0..MlpModel::PARAMS {
        let mut plus = base;
        let mut minus = base;
        plus[i] += eps;
        minus[i] -= eps;
        let mp = MlpModel::from_params(&plus);
        let mm = MlpModel::from_params(&minus);
        if sides(&mp.forward(x)) != sides(&f0) || sides(&mm.forward(x)) != sides(&f0) {
            continue;
        }
        let numeric = (mp.loss(x, y) - mm.loss(x, y)) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub max_restarts: usize,
    /// Initial parameters are drawn uniformly from `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Minimum distance of every deployed pre-activation from the cutoff.
    pub cutoff_margin: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.05,
            epochs: 3000,
            max_restarts: 200,
            init_scale: 1.5,
            cutoff_margin: 0.02,
        }
    }
}

fn deployable(model: &MlpModel, task: GateTask, margin: f64) -> bool {
    let cutoff = std::f64::consts::FRAC_1_SQRT_2;
    task.truth_table().iter().all(|(x, y)| {
        let f = model.forward_deployed(*x);
        let clear = |z: f64| (z - cutoff).abs() >= margin;
        model.predict(*x) == *y && clear(f.hidden_pre[0]) && clear(f.hidden_pre[1]) && clear(f.output_pre)
    })
}

/// Full-batch gradient descent with random restarts. A restart is accepted
/// once the deployed forward pass classifies the whole truth table with every
/// pre-activation at least `cutoff_margin` from the cutoff.
pub fn train(task: GateTask, seed: u64, params: &TrainParams) -> Result<MlpModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = task.truth_table();
    for _ in 0..params.max_restarts {
        let mut p = [0.0; 9];
        for v in &mut p {
            *v = rng.gen_range(-params.init_scale..=params.init_scale);
        }
        let mut model = MlpModel::from_params(&p);
        for _ in 0..params.epochs {
            let mut g = [0.0; 9];
            for (x, y) in &rows {
                for (gi, di) in g.iter_mut().zip(model.gradient(*x, *y)) {
                    *gi += di / rows.len() as f64;
                }
            }
            let mut p = model.to_params();
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi -= params.learning_rate * gi;
            }
            model = MlpModel::from_params(&p);
        }
        if model.validate().is_ok() && deployable(&model, task, params.cutoff_margin) {
            return Ok(model);
        }
    }
    Err(Error::TrainingFailed {
        seed,
        restarts: params.max_restarts,
    })
}
