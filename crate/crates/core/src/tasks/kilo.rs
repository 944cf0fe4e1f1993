//! Tiled ("kilo") fitting: one small network per tile, trained independently
//! and in lockstep so the stitched image can be scored at fixed intervals.
//!
//! Each tile is a sequential, self-seeded unit of work, so the stitched result
//! does not depend on how many tiles run at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{init_params, NetworkSpec, ParamVector, TrainingSet};
use crate::optimizers::{
    Budget, IterationRecord, NetworkObjective, OptimizerConfig, OptimizerStats, PsnrScale, StepDiagnostics,
    Termination, Trainer,
};
use crate::tasks::fit::subsample;
use crate::tasks::signal::{psnr, ImageSignal};
use crate::tasks::tiles::{make_tiles, stitch, tile_training_set, TileGrid};

/// Per-tile cap on training samples.
pub const MAX_TILE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct KiloConfig {
    pub tile_w: usize,
    pub tile_h: usize,
    /// Per-tile architecture; `seed` is the global seed.
    pub network: NetworkSpec,
    pub optimizer: OptimizerConfig,
    pub iters_per_tile: usize,
    /// Iterations between stitched-PSNR reports; 0 reports only at the end.
    pub report_every: usize,
    pub max_samples: usize,
    /// Worker threads; 0 uses the global pool.
    pub parallel: usize,
    /// Testing hook: scales one tile's targets so its loss overflows.
    pub inject_fault: Option<usize>,
}

impl KiloConfig {
    pub fn new(tile_w: usize, tile_h: usize, network: NetworkSpec, optimizer: OptimizerConfig, iters_per_tile: usize) -> Self {
        Self {
            tile_w,
            tile_h,
            network,
            optimizer,
            iters_per_tile,
            report_every: 0,
            max_samples: MAX_TILE_SAMPLES,
            parallel: 0,
            inject_fault: None,
        }
    }

    pub fn tile_seed(&self, index: usize) -> u64 {
        self.network.seed ^ index as u64
    }

    pub fn tile_spec(&self, index: usize) -> NetworkSpec {
        self.network.clone().with_seed(self.tile_seed(index))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileOutcome {
    pub index: usize,
    pub seed: u64,
    pub samples: usize,
    pub initial_loss: Option<f64>,
    pub initial_grad_norm: Option<f64>,
    pub trace: Vec<IterationRecord>,
    /// Why the tile stopped early, if it did.
    pub termination: Option<Termination>,
    pub stats: OptimizerStats,
    pub diagnostics: StepDiagnostics,
    /// Set when the tile aborted on a non-finite loss.
    pub failure: Option<String>,
}

impl TileOutcome {
    pub fn final_loss(&self) -> Option<f64> {
        self.trace.last().map(|r| r.loss).or(self.initial_loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalPsnr {
    pub iter: usize,
    pub psnr: f64,
}

#[derive(Debug, Clone)]
pub struct KiloResult {
    pub grid: TileGrid,
    pub tiles: Vec<TileOutcome>,
    pub global_psnr: Vec<GlobalPsnr>,
    pub stitched: ImageSignal,
    /// Indices of tiles that aborted.
    pub failures: Vec<usize>,
}

struct TileJob {
    spec: NetworkSpec,
    data: TrainingSet,
}

struct TileRun<'o> {
    trainer: Option<Trainer<'o, NetworkObjective<'o>>>,
    outcome: TileOutcome,
    fallback: ParamVector,
}

impl TileRun<'_> {
    fn advance_to(&mut self, iter: usize) -> Result<()> {
        let Some(trainer) = self.trainer.as_mut() else {
            return Ok(());
        };
        if self.outcome.termination.is_some() {
            return Ok(());
        }
        let report = trainer.run(&Budget::iterations(iter))?;
        self.outcome.trace.extend(report.trace);
        match report.termination {
            Termination::MaxIters => {}
            Termination::NonFinite(msg) => {
                self.outcome.failure = Some(msg.clone());
                self.outcome.termination = Some(Termination::NonFinite(msg));
            }
            other => self.outcome.termination = Some(other),
        }
        self.outcome.stats = trainer.stats().clone();
        self.outcome.diagnostics = trainer.diagnostics().cloned().unwrap_or_default();
        Ok(())
    }

    fn params(&self, spec: &NetworkSpec) -> Result<ParamVector> {
        match &self.trainer {
            Some(t) => ParamVector::from_flat(spec, t.theta().to_vec()),
            None => Ok(self.fallback.clone()),
        }
    }
}

pub fn kilo_fit(img: &ImageSignal, cfg: &KiloConfig) -> Result<KiloResult> {
    cfg.network.validate()?;
    cfg.optimizer.validate()?;
    crate::error::check_dims("network input_dim", 2, cfg.network.input_dim)?;
    crate::error::check_dims("network output_dim vs image channels", img.channels(), cfg.network.output_dim)?;
    if cfg.max_samples == 0 {
        return Err(Error::Rejected("max_samples must be positive".into()));
    }
    let mut grid = make_tiles(img, cfg.tile_w, cfg.tile_h)?;
    let jobs: Vec<TileJob> = grid
        .tiles
        .iter()
        .map(|t| {
            let full = tile_training_set(img, t)?;
            let mut data = subsample(&full, cfg.max_samples, cfg.tile_seed(t.index))?;
            if cfg.inject_fault == Some(t.index) {
                for v in data.y.as_mut_slice() {
                    *v = 1e300 * (1.0 + *v);
                }
            }
            Ok(TileJob {
                spec: cfg.tile_spec(t.index),
                data,
            })
        })
        .collect::<Result<_>>()?;
    let objectives: Vec<NetworkObjective> = jobs
        .iter()
        .map(|j| NetworkObjective::new(&j.spec, &j.data))
        .collect::<Result<_>>()?;
    let psnr_scale = PsnrScale {
        peak: 1.0,
        channels: img.channels(),
    };
    let mut runs: Vec<TileRun> = objectives
        .iter()
        .zip(&jobs)
        .enumerate()
        .map(|(index, (obj, job))| {
            let init = init_params(&job.spec)?;
            let mut outcome = TileOutcome {
                index,
                seed: job.spec.seed,
                samples: job.data.len(),
                initial_loss: None,
                initial_grad_norm: None,
                trace: Vec::new(),
                termination: None,
                stats: OptimizerStats::default(),
                diagnostics: StepDiagnostics::default(),
                failure: None,
            };
            let trainer = match Trainer::new(obj, init.flat.clone(), cfg.optimizer) {
                Ok(t) => {
                    outcome.initial_loss = Some(t.loss());
                    outcome.initial_grad_norm = Some(t.grad_norm());
                    Some(t.with_psnr(psnr_scale).record_diagnostics())
                }
                Err(Error::NonFinite(msg)) => {
                    outcome.failure = Some(msg.clone());
                    outcome.termination = Some(Termination::NonFinite(msg));
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(TileRun {
                trainer,
                outcome,
                fallback: init,
            })
        })
        .collect::<Result<_>>()?;

    let interval = if cfg.report_every == 0 { cfg.iters_per_tile.max(1) } else { cfg.report_every };
    let mut checkpoints: Vec<usize> = (interval..cfg.iters_per_tile).step_by(interval).collect();
    checkpoints.push(cfg.iters_per_tile);

    let pool = if cfg.parallel > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.parallel)
                .build()
                .map_err(|e| Error::Rejected(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let stitch_now = |grid: &mut TileGrid, runs: &[TileRun]| -> Result<ImageSignal> {
        for (tile, run) in grid.tiles.iter_mut().zip(runs) {
            tile.params = Some(run.params(&cfg.network)?);
        }
        stitch(grid, &cfg.network)
    };

    let mut global_psnr = vec![GlobalPsnr {
        iter: 0,
        psnr: psnr(img, &stitch_now(&mut grid, &runs)?)?,
    }];
    let mut stitched = None;
    for &target in &checkpoints {
        let step_all = |runs: &mut Vec<TileRun>| -> Result<()> {
            runs.par_iter_mut().map(|r| r.advance_to(target)).collect::<Result<Vec<()>>>()?;
            Ok(())
        };
        match &pool {
            Some(p) => p.install(|| step_all(&mut runs))?,
            None => step_all(&mut runs)?,
        }
        let img_now = stitch_now(&mut grid, &runs)?;
        if target > 0 {
            global_psnr.push(GlobalPsnr {
                iter: target,
                psnr: psnr(img, &img_now)?,
            });
        }
        stitched = Some(img_now);
    }
    let stitched = match stitched {
        Some(s) => s,
        None => stitch_now(&mut grid, &runs)?,
    };
    let tiles: Vec<TileOutcome> = runs.into_iter().map(|r| r.outcome).collect();
    let failures = tiles.iter().filter(|t| t.failure.is_some()).map(|t| t.index).collect();
    Ok(KiloResult {
        grid,
        tiles,
        global_psnr,
        stitched,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;
    use crate::optimizers::OptimizerKind;
    use crate::tasks::fit::fit;
    use crate::tasks::signal::image_to_training_set;
    use crate::tasks::synthetic::test_image;

    fn small_cfg(tile: usize, iters: usize) -> KiloConfig {
        let spec = NetworkSpec::new(2, vec![8, 8], 1, Activation::Sine { omega: 3.0 }).with_seed(21);
        KiloConfig::new(tile, tile, spec, OptimizerConfig::new(OptimizerKind::Lbfgs), iters)
    }

    #[test]
    fn constant_image_tiles_fit_quickly() {
        let img = ImageSignal::filled(24, 16, 1, 0.5).unwrap();
        let res = kilo_fit(&img, &small_cfg(8, 20)).unwrap();
        assert_eq!(res.tiles.len(), 6);
        for t in &res.tiles {
            assert!(t.final_loss().unwrap() < 1e-6, "tile {} loss {:?}", t.index, t.final_loss());
        }
    }

    #[test]
    fn parallel_degree_does_not_change_result() {
        let img = test_image(32, 24).unwrap();
        let mut cfg = small_cfg(12, 6);
        cfg.report_every = 2;
        cfg.parallel = 1;
        let a = kilo_fit(&img, &cfg).unwrap();
        cfg.parallel = 3;
        let b = kilo_fit(&img, &cfg).unwrap();
        assert_eq!(a.stitched, b.stitched);
        assert_eq!(a.global_psnr, b.global_psnr);
        assert_eq!(a.global_psnr.len(), 4);
    }

    #[test]
    fn single_tile_matches_plain_fit() {
        let img = test_image(20, 14).unwrap();
        let mut cfg = small_cfg(64, 7);
        cfg.report_every = 3;
        let kilo = kilo_fit(&img, &cfg).unwrap();
        let ts = image_to_training_set(&img).unwrap();
        let plain = fit(&cfg.network, &ts, &cfg.optimizer, &Budget::iterations(7), None).unwrap();
        assert_eq!(kilo.grid.tiles[0].params.as_ref().unwrap().flat, plain.params.flat);
    }

    #[test]
    fn injected_fault_isolated() {
        let img = test_image(16, 16).unwrap();
        let mut cfg = small_cfg(8, 3);
        cfg.inject_fault = Some(2);
        let res = kilo_fit(&img, &cfg).unwrap();
        assert_eq!(res.failures, vec![2]);
        for t in &res.tiles {
            if t.index != 2 {
                assert_eq!(t.trace.len(), 3);
            }
        }
        assert!(res.stitched.pixels().iter().all(|p| p.is_finite()));
    }
}
