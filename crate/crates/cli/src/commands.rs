//! Subcommand implementations. Each writes its primary output to `out`.

use std::io::Write;
use std::path::{Path, PathBuf};

use amn_core::ir::{graph_from_json, parse_sexpr, serialize_mapping, Format};
use amn_core::matcher::{solve_exact, solve_greedy, SearchBudget, SearchMode};
use amn_core::synth::{read_dataset, write_dataset, GenParams, TrainingExample};
use amn_core::RelGraph;
use amn_model::sem::sem_select;
use amn_model::{Ablation, Amn};
use anyhow::{bail, Context, Result};

use crate::config::ExperimentConfig;
use crate::eval::{evaluate, Baseline, EvalOptions};

/// Reads a graph from `.json` (graph schema) or s-expression text.
pub fn read_graph(path: &Path) -> Result<RelGraph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let g = if path.extension().is_some_and(|e| e == "json") { graph_from_json(&text) } else { parse_sexpr(&text) };
    g.with_context(|| format!("parsing {}", path.display()))
}

pub fn read_examples(path: &Path, limit: Option<usize>) -> Result<Vec<TrainingExample>> {
    let reader = read_dataset(path).with_context(|| format!("opening dataset {}", path.display()))?;
    let mut out = Vec::new();
    for ex in reader.take(limit.unwrap_or(usize::MAX)) {
        out.push(ex.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(out)
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Default,
    Small,
}

pub struct GenerateArgs {
    pub n: u64,
    pub seed: Option<u64>,
    pub preset: Preset,
    pub params: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let mut params = match &a.params {
        Some(p) => load_config(Some(p))?.generator,
        None => match a.preset {
            Preset::Default => GenParams::default(),
            Preset::Small => GenParams::small(),
        },
    };
    if let Some(s) = a.seed {
        params.seed = s;
    }
    write_dataset(&a.out, a.n, &params).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(out, "wrote {} examples to {}", a.n, a.out.display())?;
    Ok(())
}

pub struct TrainArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub steps: Option<u64>,
    pub batch: Option<usize>,
    pub lambda: Option<f64>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub ablate: Option<Ablation>,
    pub ckpt: PathBuf,
    pub log_every: u64,
}

pub fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.steps {
        cfg.train.steps = v;
    }
    if let Some(v) = a.batch {
        cfg.train.batch = v;
    }
    if let Some(v) = a.lambda {
        cfg.train.lambda = v;
    }
    if let Some(v) = a.lr {
        cfg.train.adam.lr = v;
    }
    if let Some(v) = a.seed {
        cfg.train.seed = v;
    }
    if let Some(v) = a.ablate {
        cfg.model.ablation = v;
    }
    if cfg.train.batch == 0 {
        bail!("batch must be positive");
    }
    let examples = read_examples(&a.data, None)?;
    let model = crate::train::train(&examples, cfg.model.clone(), &cfg.train, a.log_every, |p| {
        eprintln!("step {:>7}  corr {:.4}  ci {:.4}  {:.1}s", p.step, p.loss_corr, p.loss_ci, p.seconds);
    })?;
    model.save(&a.ckpt).with_context(|| format!("writing {}", a.ckpt.display()))?;
    writeln!(out, "saved checkpoint to {}", a.ckpt.display())?;
    Ok(())
}

pub struct MatchArgs {
    pub ckpt: PathBuf,
    pub base: PathBuf,
    pub target: PathBuf,
    pub runs: usize,
    pub seed: u64,
    pub format: Format,
}

pub fn match_pair(a: &MatchArgs, out: &mut dyn Write) -> Result<()> {
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let model = Amn::load(&a.ckpt).with_context(|| format!("loading checkpoint {}", a.ckpt.display()))?;
    let (b, t) = (read_graph(&a.base)?, read_graph(&a.target)?);
    let m = sem_select(&model, &b, &t, a.runs, a.seed)?;
    writeln!(out, "{}", serialize_mapping(&b, &t, &m, a.format))?;
    Ok(())
}

pub struct OracleArgs {
    pub base: PathBuf,
    pub target: PathBuf,
    pub mode: SearchMode,
    pub format: Format,
}

pub fn oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<()> {
    let (b, t) = (read_graph(&a.base)?, read_graph(&a.target)?);
    let m = match a.mode {
        SearchMode::Exact => solve_exact(&b, &t, &SearchBudget::default())?,
        SearchMode::Greedy => solve_greedy(&b, &t),
    };
    writeln!(out, "{}", serialize_mapping(&b, &t, &m, a.format))?;
    Ok(())
}

pub struct EvalArgs {
    pub ckpt: Option<PathBuf>,
    pub oracle_only: bool,
    pub data: PathBuf,
    pub runs: usize,
    pub seed: u64,
    pub baseline: Baseline,
    pub limit: Option<usize>,
    pub report: Option<PathBuf>,
}

pub fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = match (&a.ckpt, a.oracle_only) {
        (Some(p), false) => Some(Amn::load(p).with_context(|| format!("loading checkpoint {}", p.display()))?),
        (None, true) => None,
        (None, false) => bail!("missing checkpoint: pass --ckpt or --oracle-only"),
        (Some(_), true) => bail!("--ckpt and --oracle-only are exclusive"),
    };
    let examples = read_examples(&a.data, a.limit)?;
    let opts = EvalOptions { runs: a.runs, seed: a.seed, baseline: a.baseline, ..EvalOptions::default() };
    let report = evaluate(model.as_ref(), &examples, &opts)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &a.report {
        Some(p) => {
            std::fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
            writeln!(
                out,
                "n={} r={} struct_perf={:.3} error_free={:.3} equivalent={:.3} larger={:.3} ci_f1={:.3}",
                report.n,
                report.r,
                report.struct_perf,
                report.rates.error_free,
                report.rates.equivalent,
                report.rates.larger,
                report.ci.f1
            )?;
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(())
}

/// Prints one line per check; fails if any check fails.
pub fn gradcheck(out: &mut dyn Write) -> Result<()> {
    let results = crate::gradcheck::full_suite()?;
    let mut failed = 0;
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        if !r.passed() {
            failed += 1;
        }
        writeln!(
            out,
            "{status:<4} {:<36} max rel err {:.2e} over {} elements",
            r.name, r.report.max_rel_error, r.report.checked
        )?;
    }
    if failed > 0 {
        bail!("{failed} of {} gradient checks failed", results.len());
    }
    Ok(())
}
