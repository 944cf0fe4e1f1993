//! `fit` and `compare`.

use std::collections::BTreeMap;

use coordfit::network::{NetworkSpec, TrainingSet};
use coordfit::optimizers::{Budget, OptimizerConfig, OptimizerKind, PsnrScale};
use coordfit::tasks::{fit, subsample, FitResult};

use super::{abort_reason, check_io_dims, run_result, write_reconstruction, Outcome};
use crate::args::{CompareArgs, FitArgs};
use crate::artifacts::{convergence_csv, CompareSummary, LogRow, ModelFile, OutDir, RunSummary};
use crate::config::{CommandConfig, CompareConfig, FitConfig, Input, Signal};
use crate::error::CliResult;

pub fn fit_config(a: &FitArgs) -> CliResult<FitConfig> {
    let input = Input::from_args(&a.input)?;
    let signal = input.load()?;
    let cfg = FitConfig {
        input,
        network: a.network.spec(signal.input_dim(), signal.channels())?,
        optimizer: OptimizerConfig::new(a.optimizer),
        iters: a.iters,
        target_psnr: a.target_psnr,
        max_samples: a.max_samples,
        log_every: a.log_every,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn compare_config(a: &CompareArgs) -> CliResult<CompareConfig> {
    let input = Input::from_args(&a.input)?;
    let signal = input.load()?;
    let mut adam = OptimizerConfig::new(OptimizerKind::Adam);
    adam.adam.lr = a.lr;
    let cfg = CompareConfig {
        input,
        network: a.network.spec(signal.input_dim(), signal.channels())?,
        lbfgs: OptimizerConfig::new(OptimizerKind::Lbfgs),
        adam,
        iters: a.iters,
        target_psnr: a.target_psnr,
        max_samples: a.max_samples,
        log_every: a.log_every,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// The signal, its full training set, and the (possibly subsampled) set trained on.
fn prepare(input: &Input, spec: &NetworkSpec, max_samples: Option<usize>) -> CliResult<(Signal, TrainingSet, TrainingSet)> {
    let signal = input.load()?;
    check_io_dims(spec, &signal)?;
    let full = signal.training_set()?;
    let train = match max_samples {
        Some(n) => subsample(&full, n, spec.seed)?,
        None => full.clone(),
    };
    Ok((signal, full, train))
}

fn initial_row(res: &FitResult, scale: PsnrScale) -> LogRow {
    LogRow {
        iter: 0,
        elapsed_ms: 0.0,
        loss: res.initial_loss,
        grad_norm: Some(res.initial_grad_norm),
        psnr: Some(scale.psnr(res.initial_loss)),
    }
}

pub fn run_fit(cfg: &FitConfig, dir: &mut OutDir) -> CliResult<Outcome> {
    cfg.validate()?;
    let (signal, full, train) = prepare(&cfg.input, &cfg.network, cfg.max_samples)?;
    let scale = signal.psnr_scale();
    let mut budget = Budget::iterations(cfg.iters);
    if let Some(t) = cfg.target_psnr {
        budget = budget.with_target_psnr(t);
    }
    let res = fit(&cfg.network, &train, &cfg.optimizer, &budget, Some(scale))?;
    dir.write_text("convergence", "convergence.csv", &convergence_csv(initial_row(&res, scale), &res.trace, cfg.log_every))?;
    let final_psnr = write_reconstruction(dir, "reconstruction", "reconstruction", &signal, &full.x, &cfg.network, &res.params)?;
    let model = dir.path("model.json")?;
    ModelFile::new(&cfg.network, &res.params).write(&model)?;
    dir.record("model", "model.json");

    let mut summary = RunSummary::new(CommandConfig::Fit(cfg.clone()), cfg.network.seed);
    summary.result = Some(run_result(res.final_loss(), final_psnr, &res.trace, &res.termination, &res.stats));
    Ok(Outcome {
        summary,
        abort: abort_reason(&res.termination),
    })
}

/// First iteration whose training PSNR reaches `target`.
fn iters_to_target(res: &FitResult, scale: PsnrScale, target: f64) -> Option<usize> {
    if scale.psnr(res.initial_loss) >= target {
        return Some(0);
    }
    res.trace.iter().find(|r| r.psnr.is_some_and(|p| p >= target)).map(|r| r.iter)
}

pub fn run_compare(cfg: &CompareConfig, dir: &mut OutDir) -> CliResult<Outcome> {
    cfg.validate()?;
    let (signal, full, train) = prepare(&cfg.input, &cfg.network, cfg.max_samples)?;
    let scale = signal.psnr_scale();
    let budget = Budget::iterations(cfg.iters).with_target_psnr(cfg.target_psnr);
    let mut phases = BTreeMap::new();
    let mut runs = Vec::new();
    for (name, opt) in [("lbfgs", &cfg.lbfgs), ("adam", &cfg.adam)] {
        let res = fit(&cfg.network, &train, opt, &budget, Some(scale))?;
        phases.insert(format!("{name}_seconds"), res.trace.last().map_or(0.0, |r| r.elapsed_ms) / 1e3);
        dir.write_text(name, &format!("{name}.csv"), &convergence_csv(initial_row(&res, scale), &res.trace, cfg.log_every))?;
        let psnr = write_reconstruction(
            dir,
            &format!("{name}_reconstruction"),
            &format!("{name}_reconstruction"),
            &signal,
            &full.x,
            &cfg.network,
            &res.params,
        )?;
        let summary = run_result(res.final_loss(), psnr, &res.trace, &res.termination, &res.stats);
        runs.push((res, summary));
    }
    let (adam, adam_result) = runs.pop().expect("two runs");
    let (lbfgs, lbfgs_result) = runs.pop().expect("two runs");
    let l = iters_to_target(&lbfgs, scale, cfg.target_psnr);
    let a = iters_to_target(&adam, scale, cfg.target_psnr);
    let abort = abort_reason(&lbfgs.termination).or_else(|| abort_reason(&adam.termination));
    let mut summary = RunSummary::new(CommandConfig::Compare(cfg.clone()), cfg.network.seed);
    summary.compare = Some(CompareSummary {
        target_psnr: cfg.target_psnr,
        lbfgs_iters_to_target: l,
        adam_iters_to_target: a,
        iteration_ratio: match (l, a) {
            (Some(l), Some(a)) if l > 0 => Some(a as f64 / l as f64),
            _ => None,
        },
        lbfgs: lbfgs_result,
        adam: adam_result,
    });
    summary.timing.phases = phases;
    Ok(Outcome { summary, abort })
}
