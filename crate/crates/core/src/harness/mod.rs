//! Synthetic experiments, metrics, and file formats behind the CLI.

pub mod eval;
pub mod io;
pub mod synth;

pub use eval::{evaluate, evaluate_scorer, predict_batch, EvalMeta, EvalReport};
pub use synth::{
    build_attribute_graph, build_hierarchy_task, build_task, build_zero_shot_task, SyntheticTask,
    SyntheticTaskSpec, TaskKind,
};
