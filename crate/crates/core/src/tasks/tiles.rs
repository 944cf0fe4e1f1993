//! Partitioning an image into tiles with local coordinate frames, and
//! stitching per-tile network outputs back together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{forward, NetworkSpec, ParamVector, TrainingSet};
use crate::numerics::RealMatrix;
use crate::tasks::signal::{clamp_unit, grid_coordinates, ImageSignal};

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    /// Position in row-major tile order.
    pub index: usize,
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
    pub params: Option<ParamVector>,
}

impl Tile {
    pub fn pixel_count(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.y0..self.y0 + self.h).contains(&row) && (self.x0..self.x0 + self.w).contains(&col)
    }
}

/// Serializable geometry of a tile, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRect {
    pub index: usize,
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileGrid {
    pub tile_w: usize,
    pub tile_h: usize,
    pub image_w: usize,
    pub image_h: usize,
    pub tiles: Vec<Tile>,
}

impl TileGrid {
    pub fn cols(&self) -> usize {
        self.image_w.div_ceil(self.tile_w)
    }

    pub fn rows(&self) -> usize {
        self.image_h.div_ceil(self.tile_h)
    }

    pub fn rects(&self) -> Vec<TileRect> {
        self.tiles
            .iter()
            .map(|t| TileRect {
                index: t.index,
                x0: t.x0,
                y0: t.y0,
                w: t.w,
                h: t.h,
            })
            .collect()
    }

    /// Index of the tile owning pixel `(row, col)`.
    pub fn owner(&self, row: usize, col: usize) -> usize {
        (row / self.tile_h) * self.cols() + col / self.tile_w
    }
}

/// Row-major tiling; right and bottom tiles carry the remainders. A tile
/// larger than the image is clipped to a single tile covering it.
pub fn make_tiles(img: &ImageSignal, tile_w: usize, tile_h: usize) -> Result<TileGrid> {
    if tile_w < 2 || tile_h < 2 {
        return Err(Error::Rejected(format!("tiles must be at least 2x2, got {tile_w}x{tile_h}")));
    }
    let (iw, ih) = (img.width(), img.height());
    let (tile_w, tile_h) = (tile_w.min(iw), tile_h.min(ih));
    let mut tiles = Vec::new();
    for y0 in (0..ih).step_by(tile_h) {
        for x0 in (0..iw).step_by(tile_w) {
            tiles.push(Tile {
                index: tiles.len(),
                x0,
                y0,
                w: tile_w.min(iw - x0),
                h: tile_h.min(ih - y0),
                params: None,
            });
        }
    }
    Ok(TileGrid {
        tile_w,
        tile_h,
        image_w: iw,
        image_h: ih,
        tiles,
    })
}

/// All pixels of `tile` with coordinates normalized to `[−1, 1]²` within the tile.
pub fn tile_training_set(img: &ImageSignal, tile: &Tile) -> Result<TrainingSet> {
    let crop = img.crop(tile.x0, tile.y0, tile.w, tile.h)?;
    let x = grid_coordinates(tile.w, tile.h);
    let y = RealMatrix::from_vec(tile.pixel_count(), img.channels(), crop.into_pixels())?;
    TrainingSet::new(x, y)
}

/// Evaluates every pixel with its owning tile's network, clamped to `[0, 1]`.
pub fn stitch(grid: &TileGrid, spec: &NetworkSpec) -> Result<ImageSignal> {
    let missing: Vec<usize> = grid.tiles.iter().filter(|t| t.params.is_none()).map(|t| t.index).collect();
    if !missing.is_empty() {
        return Err(Error::Rejected(format!("tiles without parameters: {missing:?}")));
    }
    let channels = spec.output_dim;
    let mut pixels = vec![0.0; grid.image_w * grid.image_h * channels];
    for tile in &grid.tiles {
        let params = tile.params.as_ref().expect("checked above");
        let out = forward(spec, params, &grid_coordinates(tile.w, tile.h))?;
        for r in 0..tile.h {
            for c in 0..tile.w {
                let src = out.row(r * tile.w + c);
                let at = ((tile.y0 + r) * grid.image_w + tile.x0 + c) * channels;
                for (dst, v) in pixels[at..at + channels].iter_mut().zip(src) {
                    *dst = clamp_unit(*v);
                }
            }
        }
    }
    ImageSignal::new(grid.image_w, grid.image_h, channels, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;
    use crate::numerics::RngStream;

    #[test]
    fn counts_and_remainders() {
        let img = ImageSignal::filled(100, 100, 1, 0.0).unwrap();
        assert_eq!(make_tiles(&img, 50, 50).unwrap().tiles.len(), 4);
        let img = ImageSignal::filled(70, 50, 1, 0.0).unwrap();
        let g = make_tiles(&img, 50, 50).unwrap();
        assert_eq!(g.tiles.iter().map(|t| t.w).collect::<Vec<_>>(), vec![50, 20]);
    }

    #[test]
    fn oversized_tile_covers_image() {
        let img = ImageSignal::filled(30, 20, 1, 0.0).unwrap();
        let g = make_tiles(&img, 64, 64).unwrap();
        assert_eq!(g.tiles.len(), 1);
        assert_eq!((g.tiles[0].w, g.tiles[0].h), (30, 20));
    }

    #[test]
    fn coverage_census_over_random_sizes() {
        let mut rng = RngStream::new(12);
        for _ in 0..40 {
            let (w, h) = (2 + rng.index(90), 2 + rng.index(90));
            let (tw, th) = (2 + rng.index(40), 2 + rng.index(40));
            let img = ImageSignal::filled(w, h, 1, 0.0).unwrap();
            let g = make_tiles(&img, tw, th).unwrap();
            let mut seen = vec![0u32; w * h];
            for t in &g.tiles {
                for r in t.y0..t.y0 + t.h {
                    for c in t.x0..t.x0 + t.w {
                        seen[r * w + c] += 1;
                    }
                }
            }
            assert!(seen.iter().all(|&n| n == 1), "{w}x{h} by {tw}x{th}");
            assert_eq!(g.tiles.iter().map(Tile::pixel_count).sum::<usize>(), w * h);
            for (r, c) in [(0, 0), (h - 1, w - 1), (h / 2, w / 3)] {
                assert!(g.tiles[g.owner(r, c)].contains(r, c));
            }
        }
    }

    #[test]
    fn local_frames_span_unit_square() {
        let img = ImageSignal::filled(70, 50, 1, 0.3).unwrap();
        let g = make_tiles(&img, 32, 32).unwrap();
        for t in &g.tiles {
            let ts = tile_training_set(&img, t).unwrap();
            for axis in 0..2 {
                let col = ts.x.column(axis);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!((lo, hi), (-1.0, 1.0));
            }
        }
    }

    #[test]
    fn bias_only_tiles_give_mean_mosaic() {
        let spec = NetworkSpec::new(2, vec![3], 1, Activation::sine());
        let img = ImageSignal::filled(6, 4, 1, 0.0).unwrap();
        let mut g = make_tiles(&img, 3, 2).unwrap();
        let means = [0.1, 0.2, 0.3, 1.3];
        for (t, m) in g.tiles.iter_mut().zip(means) {
            let mut p = ParamVector::zeros(&spec);
            p.bias_mut(1)[0] = m;
            t.params = Some(p);
        }
        let out = stitch(&g, &spec).unwrap();
        assert_eq!(out.pixel(0, 0)[0], 0.1);
        assert_eq!(out.pixel(1, 5)[0], 0.2);
        assert_eq!(out.pixel(2, 2)[0], 0.3);
        assert_eq!(out.pixel(3, 4)[0], 1.0);
    }

    #[test]
    fn missing_params_listed() {
        let spec = NetworkSpec::new(2, vec![3], 1, Activation::sine());
        let img = ImageSignal::filled(4, 4, 1, 0.0).unwrap();
        let mut g = make_tiles(&img, 2, 2).unwrap();
        g.tiles[0].params = Some(ParamVector::zeros(&spec));
        let err = stitch(&g, &spec).unwrap_err().to_string();
        assert!(err.contains("[1, 2, 3]"), "{err}");
    }

    #[test]
    fn small_tiles_rejected() {
        let img = ImageSignal::filled(4, 4, 1, 0.0).unwrap();
        assert!(make_tiles(&img, 1, 4).is_err());
    }
}
