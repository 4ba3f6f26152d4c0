//! The 2-2-1 logic-gate network and its photonic configure-recycle run.

mod experiment;
mod model;

pub use experiment::{run_gate_experiment, ExperimentLog, NoiseModel, StageLog, StageRow, WINDOW_HALF_PM};
pub use model::{
    activation_3db, deployed_activation, gradient_check, train, Forward, GateTask, MlpModel, TrainParams,
    INPUT_PAIRS, OUTPUT_THRESHOLD,
};
