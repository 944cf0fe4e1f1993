//! Signal-fitting tasks: images and audio, PSNR, and tiled training.

pub mod fit;
pub mod kilo;
pub mod signal;
pub mod synthetic;
pub mod tiles;

pub use fit::{fit, fit_from, subsample, FitResult, SAMPLE_SALT};
pub use kilo::{kilo_fit, GlobalPsnr, KiloConfig, KiloResult, TileOutcome, MAX_TILE_SAMPLES};
pub use signal::{
    audio_psnr, audio_to_training_set, grid_coordinates, image_to_training_set, mse, normalized_coordinate, psnr,
    psnr_from_mse, AudioSignal, ImageSignal, AUDIO_PEAK,
};
pub use synthetic::{test_image, test_image_rgb};
pub use tiles::{make_tiles, stitch, tile_training_set, Tile, TileGrid, TileRect};
