//! `kilofit`: one small network per tile, stitched into a single image.

use std::fmt::Write as _;

use coordfit::optimizers::OptimizerConfig;
use coordfit::tasks::{kilo_fit, KiloConfig};

use super::{run_result, Outcome};
use crate::args::KilofitArgs;
use crate::artifacts::{convergence_csv, KiloSummary, LogRow, OutDir, RunSummary, TileSummary};
use crate::codec::encode_pnm;
use crate::config::{CommandConfig, Input, KilofitConfig};
use crate::error::{CliError, CliResult};

pub fn kilofit_config(a: &KilofitArgs) -> CliResult<KilofitConfig> {
    let input = Input::image(&a.image, None)?;
    let img = input.load_image()?;
    let cfg = KilofitConfig {
        input,
        network: a.network.spec(2, img.channels())?,
        optimizer: OptimizerConfig::new(a.optimizer),
        tile_w: a.tile_w,
        tile_h: a.tile_h,
        iters_per_tile: a.iters_per_tile,
        report_every: a.log_every,
        max_samples: a.max_samples,
        parallel: a.parallel,
        inject_fault: a.inject_fault,
    };
    Ok(cfg)
}

pub fn run(cfg: &KilofitConfig, dir: &mut OutDir) -> CliResult<Outcome> {
    let img = cfg.input.load_image()?;
    let kc = KiloConfig {
        tile_w: cfg.tile_w,
        tile_h: cfg.tile_h,
        network: cfg.network.clone(),
        optimizer: cfg.optimizer,
        iters_per_tile: cfg.iters_per_tile,
        report_every: cfg.report_every,
        max_samples: cfg.max_samples,
        parallel: cfg.parallel,
        inject_fault: cfg.inject_fault,
    };
    let res = kilo_fit(&img, &kc)?;
    let ext = if img.channels() == 1 { "pgm" } else { "ppm" };
    let rel = format!("stitched.{ext}");
    let p = dir.path(&rel)?;
    std::fs::write(&p, encode_pnm(&res.stitched)?).map_err(|e| CliError::io(&p, e))?;
    dir.record("stitched", &rel);

    let mut psnr_csv = String::from("iter,psnr\n");
    for g in &res.global_psnr {
        let _ = writeln!(psnr_csv, "{},{}", g.iter, g.psnr);
    }
    dir.write_text("global_psnr", "global_psnr.csv", &psnr_csv)?;

    let mut tiles = Vec::with_capacity(res.tiles.len());
    let mut loss_sum = 0.0;
    let mut stats = coordfit::optimizers::OptimizerStats::default();
    for t in &res.tiles {
        let csv_rel = format!("tiles/tile_{:04}.csv", t.index);
        let initial = LogRow {
            iter: 0,
            elapsed_ms: 0.0,
            loss: t.initial_loss.unwrap_or(f64::NAN),
            grad_norm: t.initial_grad_norm,
            psnr: None,
        };
        dir.write_text(&format!("tile_{:04}", t.index), &csv_rel, &convergence_csv(initial, &t.trace, 1))?;
        let final_loss = t.final_loss();
        loss_sum += final_loss.unwrap_or(f64::NAN);
        stats.evaluations += t.stats.evaluations;
        stats.line_search_warnings += t.stats.line_search_warnings;
        stats.skipped_updates += t.stats.skipped_updates;
        stats.history_resets += t.stats.history_resets;
        stats.newton_shifts += t.stats.newton_shifts;
        stats.max_secant_residual = stats.max_secant_residual.max(t.stats.max_secant_residual);
        tiles.push(TileSummary {
            index: t.index,
            seed: t.seed,
            samples: t.samples,
            final_loss,
            iterations: t.trace.last().map_or(0, |r| r.iter),
            termination: t.termination.as_ref().map_or("max_iters", |x| x.name()).to_string(),
            failure: t.failure.clone(),
            csv: csv_rel,
        });
    }
    let global = res.global_psnr.last().map_or(f64::NAN, |g| g.psnr);
    let mut summary = RunSummary::new(CommandConfig::Kilofit(cfg.clone()), cfg.network.seed);
    let mut result = run_result(
        loss_sum / res.tiles.len() as f64,
        global,
        &[],
        &coordfit::optimizers::Termination::MaxIters,
        &stats,
    );
    result.iterations = tiles.iter().map(|t| t.iterations).max().unwrap_or(0);
    if !res.failures.is_empty() {
        result.termination = "tile_failures".into();
    }
    summary.result = Some(result);
    summary.kilo = Some(KiloSummary {
        tiles: res.tiles.len(),
        global_psnr: global,
        failures: res.failures.clone(),
        tile: tiles,
    });
    let abort = (!res.failures.is_empty()).then(|| {
        let list: Vec<String> = res.failures.iter().map(|i| i.to_string()).collect();
        format!("tile(s) {} diverged", list.join(", "))
    });
    Ok(Outcome { summary, abort })
}
