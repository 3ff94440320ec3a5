//! The `phex` command-line tool.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ClampSet, MarginalTable};
use crate::graph::{LabelGraph, Spin};
use crate::harness::io::{read_instances, read_scores_csv, write_instances};
use crate::harness::synth::{build_task, SyntheticTaskSpec, TaskKind};
use crate::harness::{evaluate_scorer, EvalReport};
use crate::infer::{CrfModel, Inference};
use crate::lbp::LbpOptions;
use crate::learning::{
    finite_difference_check, grid_search_strength, train_linear, LinearScorer, StrengthMode, Target,
    TrainConfig, DEFAULT_STRENGTH_GRID,
};
use crate::par;

#[derive(Debug, Parser)]
#[command(name = "phex", version, about = "Probabilistic label-relation graphs: compile, infer, train, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the compiled Ising model of a graph as JSON.
    Compile {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Marginals for every score row.
    Infer {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// Clamp a label, e.g. `dog=+1`. Repeatable.
        #[arg(long = "clamp", value_name = "LABEL=±1")]
        clamps: Vec<String>,
        #[command(flatten)]
        inference: InferenceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the analytic score gradient with central differences.
    Gradcheck {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// Row of the score file to check.
        #[arg(long, default_value_t = 0)]
        row: usize,
        /// Observed label, e.g. `dog=+1`. Repeatable.
        #[arg(long = "target", value_name = "LABEL=±1", required = true)]
        targets: Vec<String>,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[command(flatten)]
        inference: InferenceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a linear scorer by SGD and write it as JSON.
    Train {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `task.json` written by `synth`; supplies frozen labels.
        #[arg(long)]
        task_file: Option<PathBuf>,
        #[command(flatten)]
        strength: StrengthArgs,
        #[command(flatten)]
        training: TrainingArgs,
        #[command(flatten)]
        inference: InferenceArgs,
    },
    /// Write a synthetic dataset.
    Synth {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relabel fraction for the hierarchy task.
        #[arg(long)]
        rho: Option<f64>,
        /// Full task spec as JSON; `--seed` and `--rho` still override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a trained model on labeled data and write an evaluation report.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        labels: LabelSetArgs,
        #[command(flatten)]
        strength: StrengthArgs,
        #[command(flatten)]
        inference: InferenceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train at each strength and write an accuracy-versus-u table.
    Sweep {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Comma-separated strengths; defaults to 0,0.1,0.3,0.5,0.7,1.0,1.5.
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Constant)]
        mode: ModeArg,
        #[command(flatten)]
        labels: LabelSetArgs,
        #[command(flatten)]
        training: TrainingArgs,
        #[command(flatten)]
        inference: InferenceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Lbp,
    Hex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Hierarchy,
    Zeroshot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Constant,
    Scale,
}

impl From<ModeArg> for StrengthMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Constant => StrengthMode::Constant,
            ModeArg::Scale => StrengthMode::Scale,
        }
    }
}

#[derive(Debug, Args)]
struct InferenceArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Lbp)]
    method: MethodArg,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
}

impl InferenceArgs {
    fn inference(&self) -> Result<Inference> {
        Ok(match self.method {
            MethodArg::Exact => Inference::Exact,
            MethodArg::Hex => Inference::Hex,
            MethodArg::Lbp => {
                let opts = LbpOptions { max_iterations: self.max_iters, tolerance: self.tol, damping: self.damping };
                opts.validate()?;
                Inference::Lbp(opts)
            }
        })
    }
}

#[derive(Debug, Args)]
struct StrengthArgs {
    /// Override edge strengths before use.
    #[arg(long)]
    u: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Constant)]
    mode: ModeArg,
}

impl StrengthArgs {
    fn apply(&self, graph: LabelGraph) -> Result<LabelGraph> {
        match self.u {
            Some(u) => StrengthMode::from(self.mode).apply(&graph, u),
            None => Ok(graph),
        }
    }
}

#[derive(Debug, Args)]
struct TrainingArgs {
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated labels whose scorers stay fixed.
    #[arg(long, value_delimiter = ',')]
    frozen: Vec<String>,
}

impl TrainingArgs {
    fn config(&self, graph: &LabelGraph, inference: Inference, task: Option<&TaskFile>) -> Result<TrainConfig> {
        let mut frozen = labels_by_name(graph, &self.frozen)?;
        if let Some(t) = task {
            frozen.extend(labels_by_name(graph, &t.frozen)?);
        }
        frozen.sort_unstable();
        frozen.dedup();
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidArgument("learning rate must be finite and >= 0".into()));
        }
        Ok(TrainConfig {
            learning_rate: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            inference,
            frozen,
        })
    }
}

#[derive(Debug, Args)]
struct LabelSetArgs {
    /// Comma-separated labels ranked at evaluation; defaults to the MECE
    /// group, or every label.
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<String>,
    /// `task.json` written by `synth`; supplies candidates and frozen labels.
    #[arg(long)]
    task_file: Option<PathBuf>,
}

impl LabelSetArgs {
    fn task(&self) -> Result<Option<TaskFile>> {
        self.task_file.as_deref().map(TaskFile::load).transpose()
    }

    fn resolve(&self, graph: &LabelGraph) -> Result<Vec<usize>> {
        if !self.candidates.is_empty() {
            return labels_by_name(graph, &self.candidates);
        }
        if let Some(task) = self.task()? {
            return labels_by_name(graph, &task.eval_labels);
        }
        Ok(match &graph.mece {
            Some(g) => g.members.clone(),
            None => (0..graph.n()).collect(),
        })
    }
}

/// Metadata written next to a synthetic dataset.
#[derive(Debug, Serialize, Deserialize)]
struct TaskFile {
    kind: TaskKind,
    spec: SyntheticTaskSpec,
    eval_labels: Vec<String>,
    frozen: Vec<String>,
}

impl TaskFile {
    fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn labels_by_name(graph: &LabelGraph, names: &[String]) -> Result<Vec<usize>> {
    names.iter().map(|n| graph.require_label(n)).collect()
}

fn parse_assignment(graph: &LabelGraph, text: &str) -> Result<(usize, Spin)> {
    let (name, value) = text
        .rsplit_once('=')
        .ok_or_else(|| Error::Parse(format!("expected LABEL=±1, got {text:?}")))?;
    let spin = value
        .trim()
        .parse::<i64>()
        .ok()
        .and_then(Spin::from_sign)
        .ok_or_else(|| Error::Parse(format!("state must be +1 or -1 in {text:?}")))?;
    Ok((graph.require_label(name.trim())?, spin))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Serialize)]
struct InferOutput<'a> {
    method: &'static str,
    labels: &'a [String],
    results: Vec<MarginalTable>,
}

#[derive(Serialize)]
struct SweepRow {
    u: f64,
    selected: bool,
    val_top1: f64,
    val_per_class_mean: f64,
    test_top1: Option<f64>,
    test_top5: Option<f64>,
    test_per_class_mean: Option<f64>,
    final_loss: Option<f64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile { graph, out } => {
            let model = CrfModel::new(LabelGraph::load(graph)?)?;
            let ising = model.ising().ok_or_else(|| {
                let e = model.graph().edges.iter().find(|e| e.strength.is_hard()).expect("hard edge");
                Error::HardEdgeUnsupported { a: e.a, b: e.b }
            })?;
            emit(out.as_deref(), &to_json(&ising.to_json())?)
        }
        Command::Infer { graph, scores, clamps, inference, out } => {
            let graph = LabelGraph::load(graph)?;
            let rows = read_scores_csv(&graph, scores)?;
            let mut clamp_set = ClampSet::new();
            for c in &clamps {
                let (label, spin) = parse_assignment(&graph, c)?;
                clamp_set = clamp_set.with(label, spin);
            }
            let inference = inference.inference()?;
            let model = CrfModel::new(graph)?;
            let results = par::map(&rows, |z| model.marginals(z, &clamp_set, &inference))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let output = InferOutput { method: inference.name(), labels: &model.graph().labels, results };
            emit(out.as_deref(), &to_json(&output)?)
        }
        Command::Gradcheck { graph, scores, row, targets, eps, inference, out } => {
            let graph = LabelGraph::load(graph)?;
            let rows = read_scores_csv(&graph, scores)?;
            let z = rows
                .get(row)
                .ok_or_else(|| Error::InvalidArgument(format!("score file has no row {row}")))?;
            let targets = targets
                .iter()
                .map(|t| parse_assignment(&graph, t).map(|(label, state)| Target { label, state }))
                .collect::<Result<Vec<_>>>()?;
            let inference = inference.inference()?;
            let model = CrfModel::new(graph)?;
            let report = finite_difference_check(&model, z, &targets, &inference, eps)?;
            emit(out.as_deref(), &to_json(&report)?)
        }
        Command::Train { graph, data, out, task_file, strength, training, inference } => {
            let graph = strength.apply(LabelGraph::load(graph)?)?;
            let data = read_instances(&graph, data)?;
            let task = task_file.as_deref().map(TaskFile::load).transpose()?;
            let config = training.config(&graph, inference.inference()?, task.as_ref())?;
            let dim = data.first().map_or(0, |i| i.x.len());
            let model = CrfModel::new(graph)?;
            let report = train_linear(LinearScorer::zeros(model.n(), dim), &data, &model, &config)?;
            if let Some(last) = report.epoch_losses.last() {
                log::info!("final mean training loss {last:.6}");
            }
            report.scorer.save(&model.graph().labels, out)
        }
        Command::Synth { task, seed, rho, spec, out_dir } => {
            let kind = match task {
                TaskArg::Hierarchy => TaskKind::Hierarchy,
                TaskArg::Zeroshot => TaskKind::Zeroshot,
            };
            let mut spec = match spec {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None if kind == TaskKind::Hierarchy => SyntheticTaskSpec::hierarchy(seed),
                None => SyntheticTaskSpec::zero_shot(seed),
            };
            spec.seed = seed;
            if let Some(r) = rho {
                spec.relabel_fraction = r;
            }
            let task = build_task(kind, &spec)?;
            std::fs::create_dir_all(&out_dir)?;
            task.graph.save(out_dir.join("graph.json"))?;
            write_instances(&task.graph, &task.train, out_dir.join("train.jsonl"))?;
            write_instances(&task.graph, &task.val, out_dir.join("val.jsonl"))?;
            write_instances(&task.graph, &task.test, out_dir.join("test.jsonl"))?;
            let names = |ids: &[usize]| ids.iter().map(|&i| task.graph.labels[i].clone()).collect();
            let file = TaskFile {
                kind,
                spec: task.spec.clone(),
                eval_labels: names(&task.eval_labels),
                frozen: names(&task.frozen),
            };
            std::fs::write(out_dir.join("task.json"), to_json(&file)?)?;
            Ok(())
        }
        Command::Eval { graph, model, data, labels, strength, inference, out } => {
            let u = strength.u;
            let graph = strength.apply(LabelGraph::load(graph)?)?;
            let scorer = LinearScorer::load(&graph.labels, model)?;
            let data = read_instances(&graph, data)?;
            let candidates = labels.resolve(&graph)?;
            let inference = inference.inference()?;
            let model = CrfModel::new(graph)?;
            let report = evaluate_scorer(&model, &scorer, &data, &candidates, &inference, u)?;
            emit(out.as_deref(), &to_json(&report)?)
        }
        Command::Sweep { graph, train, val, test, u, mode, labels, training, inference, out } => {
            let graph = LabelGraph::load(graph)?;
            let train = read_instances(&graph, train)?;
            let val = read_instances(&graph, val)?;
            let test = test.map(|p| read_instances(&graph, p)).transpose()?;
            let candidates = labels.resolve(&graph)?;
            let inference = inference.inference()?;
            let config = training.config(&graph, inference, labels.task()?.as_ref())?;
            let grid = if u.is_empty() { DEFAULT_STRENGTH_GRID.to_vec() } else { u };
            let dim = train.first().map_or(0, |i| i.x.len());
            let initial = LinearScorer::zeros(graph.n(), dim);
            let search = grid_search_strength(&grid, &graph, mode.into(), &initial, &train, &config, |m, s| {
                evaluate_scorer(m, s, &val, &candidates, &inference, None).map(|r| r.top1)
            })?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for (i, point) in search.points.iter().enumerate() {
                let val_report = evaluate_scorer(&point.model, &point.scorer, &val, &candidates, &inference, Some(point.u))?;
                let test_report: Option<EvalReport> = test
                    .as_ref()
                    .map(|t| evaluate_scorer(&point.model, &point.scorer, t, &candidates, &inference, Some(point.u)))
                    .transpose()?;
                w.serialize(SweepRow {
                    u: point.u,
                    selected: i == search.best,
                    val_top1: val_report.top1,
                    val_per_class_mean: val_report.per_class_mean,
                    test_top1: test_report.as_ref().map(|r| r.top1),
                    test_top5: test_report.as_ref().map(|r| r.top5),
                    test_per_class_mean: test_report.as_ref().map(|r| r.per_class_mean),
                    final_loss: point.epoch_losses.last().copied(),
                })?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            emit(out.as_deref(), &String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code:
/// 0 on success, 1 on usage or validation errors, 2 on numerical failure.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_parsing() {
        let g = LabelGraph::new(["animal", "dog"]).unwrap();
        assert_eq!(parse_assignment(&g, "dog=+1").unwrap(), (1, Spin::Up));
        assert_eq!(parse_assignment(&g, "animal=-1").unwrap(), (0, Spin::Down));
        assert_eq!(parse_assignment(&g, "dog=1").unwrap(), (1, Spin::Up));
        assert!(parse_assignment(&g, "dog=0").is_err());
        assert!(parse_assignment(&g, "dog").is_err());
        assert!(matches!(parse_assignment(&g, "cat=1"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(cli_main(["phex"]), 1);
        assert_eq!(cli_main(["phex", "bogus"]), 1);
        assert_eq!(cli_main(["phex", "--help"]), 0);
    }

    #[test]
    fn missing_file_exits_one() {
        assert_eq!(cli_main(["phex", "compile", "--graph", "/nonexistent/graph.json"]), 1);
    }
}
