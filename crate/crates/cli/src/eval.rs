//! Structural evaluation of predicted mappings against gold or oracle sets.
//!
//! The empty mapping counts as error-free: it violates no constraint. It is
//! only equivalent when the comparison set also scores zero.

use std::collections::BTreeSet;

use amn_core::matcher::{solve, SearchBudget};
use amn_core::smt::{self, CorrSet};
use amn_core::synth::TrainingExample;
use amn_core::{Mapping, NodeId, RelGraph};
use amn_model::sem::sem_select;
use amn_model::Amn;
use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = "amn-eval-report";
pub const REPORT_VERSION: u32 = 1;

/// What predictions are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// The generator's gold mapping.
    #[default]
    Gold,
    /// The exact matcher's output.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rates {
    pub larger: f64,
    pub equivalent: f64,
    pub error_free: f64,
}

/// Mean fraction of predicted correspondences in each violation category.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrRates {
    pub one_to_one: f64,
    pub pc: f64,
    pub degenerate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CiMetrics {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    /// Averaged over examples that have at least one non-inference node;
    /// `None` when no example has one.
    pub specificity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub version: u32,
    pub n: usize,
    pub r: usize,
    pub baseline: Baseline,
    pub struct_perf: f64,
    pub rates: Rates,
    pub err_rates: ErrRates,
    pub ci: CiMetrics,
}

/// Per-example measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleEval {
    pub struct_perf: f64,
    pub error_free: bool,
    pub equivalent: bool,
    pub larger: bool,
    pub err: ErrRates,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub specificity: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores one prediction. `comparison` is scored as is; the prediction only
/// through its valid correspondences.
pub fn evaluate_example(base: &RelGraph, target: &RelGraph, predicted: &Mapping, comparison: &CorrSet) -> ExampleEval {
    let m = &predicted.correspondences;
    let report = smt::violations(base, target, m);
    let error_free = report.is_error_free();
    let ours = smt::score(base, target, m).total;
    let theirs = smt::score(base, target, comparison).total;
    let struct_perf = if theirs == 0 {
        if ours == 0 {
            1.0
        } else {
            ours as f64
        }
    } else {
        ours as f64 / theirs as f64
    };
    let frac = |k: usize| if m.is_empty() { 0.0 } else { k as f64 / m.len() as f64 };
    let err = ErrRates {
        one_to_one: frac(report.one_to_one_members().len()),
        pc: frac(report.parallel_connectivity.len()),
        degenerate: frac(report.degenerate.len()),
    };

    let matched: BTreeSet<NodeId> = m.iter().map(|c| c.0).collect();
    let universe = base.ids().filter(|n| !matched.contains(n)).count();
    let truth = smt::candidate_inferences(base, m);
    let chosen: BTreeSet<NodeId> = predicted.inferences.difference(&matched).copied().collect();
    let tp = chosen.intersection(&truth).count();
    let fp = chosen.len() - tp;
    let fn_ = truth.len() - tp;
    let tn = universe - tp - fp - fn_;
    ExampleEval {
        struct_perf,
        error_free,
        equivalent: error_free && ours == theirs,
        larger: error_free && ours > theirs,
        err,
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        accuracy: ratio(tp + tn, universe),
        specificity: (tn + fp > 0).then(|| tn as f64 / (tn + fp) as f64),
    }
}

/// Averages per-example measurements in order.
pub fn aggregate(evals: &[ExampleEval], r: usize, baseline: Baseline) -> EvalReport {
    let n = evals.len();
    let mean = |f: &dyn Fn(&ExampleEval) -> f64| {
        if n == 0 {
            0.0
        } else {
            evals.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let spec: Vec<f64> = evals.iter().filter_map(|e| e.specificity).collect();
    EvalReport {
        schema: REPORT_SCHEMA.to_string(),
        version: REPORT_VERSION,
        n,
        r,
        baseline,
        struct_perf: mean(&|e| e.struct_perf),
        rates: Rates {
            larger: mean(&|e| flag(e.larger)),
            equivalent: mean(&|e| flag(e.equivalent)),
            error_free: mean(&|e| flag(e.error_free)),
        },
        err_rates: ErrRates {
            one_to_one: mean(&|e| e.err.one_to_one),
            pc: mean(&|e| e.err.pc),
            degenerate: mean(&|e| e.err.degenerate),
        },
        ci: CiMetrics {
            f1: mean(&|e| e.f1),
            precision: mean(&|e| e.precision),
            recall: mean(&|e| e.recall),
            accuracy: mean(&|e| e.accuracy),
            specificity: (!spec.is_empty()).then(|| spec.iter().sum::<f64>() / spec.len() as f64),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Stochastic runs per example for SEM selection.
    pub runs: usize,
    pub seed: u64,
    pub baseline: Baseline,
    pub budget: SearchBudget,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { runs: 8, seed: 0, baseline: Baseline::Gold, budget: SearchBudget::default() }
    }
}

/// Seed for the runs on example `index`. Run `k` of example `i` is the same
/// encoding whatever the number of runs, so `r = 1` is a prefix of `r = 8`.
pub fn example_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Predicts every example with the model (or the exact matcher when `model`
/// is `None`) and scores the predictions.
pub fn evaluate(model: Option<&Amn>, examples: &[TrainingExample], opts: &EvalOptions) -> Result<EvalReport> {
    if examples.is_empty() {
        bail!("empty dataset");
    }
    if opts.runs == 0 {
        bail!("at least one run is required");
    }
    let evals = examples
        .par_iter()
        .enumerate()
        .map(|(i, ex)| {
            let predicted = match model {
                Some(m) => sem_select(m, &ex.base, &ex.target, opts.runs, example_seed(opts.seed, i))?,
                None => solve(&ex.base, &ex.target, &opts.budget),
            };
            let comparison = match opts.baseline {
                Baseline::Gold => ex.gold_m.clone(),
                Baseline::Oracle => solve(&ex.base, &ex.target, &opts.budget).correspondences,
            };
            Ok(evaluate_example(&ex.base, &ex.target, &predicted, &comparison))
        })
        .collect::<Result<Vec<_>>>()?;
    let r = if model.is_some() { opts.runs } else { 1 };
    Ok(aggregate(&evals, r, opts.baseline))
}
