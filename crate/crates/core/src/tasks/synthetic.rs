//! Procedural test images, resolution independent and fully deterministic.
//!
//! The grayscale scene is a photographer on a field: a smooth sky, distant
//! buildings on the horizon, a textured lawn, and a dark figure behind a camera
//! on a tripod. It mixes flat regions, sharp edges, thin lines and fine
//! texture, which is what coordinate networks find easy and hard respectively.

use crate::error::Result;
use crate::tasks::signal::ImageSignal;

/// Supersampling factor per axis.
const AA: usize = 3;

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Distance from `p` to the segment `a–b`.
fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

fn inside_ellipse(p: (f64, f64), c: (f64, f64), r: (f64, f64)) -> bool {
    let (u, v) = ((p.0 - c.0) / r.0, (p.1 - c.1) / r.1);
    u * u + v * v <= 1.0
}

/// Scene intensity at `(u, v) ∈ [0, 1]²`, `v` pointing down.
fn scene(u: f64, v: f64) -> f64 {
    let horizon = 0.62 + 0.015 * (7.0 * u).sin();
    let mut val = if v < horizon {
        let clouds = 0.04 * (5.0 * u + 3.0 * v).sin() * (9.0 * v - 2.0 * u).cos();
        0.88 - 0.25 * v + clouds
    } else {
        let depth = (v - horizon) / (1.0 - horizon);
        let grass = 0.06 * (90.0 * u + 40.0 * v).sin() * (70.0 * v - 25.0 * u).sin()
            + 0.04 * (150.0 * u * (1.0 + depth)).sin();
        0.52 - 0.18 * depth + grass
    };
    // Buildings on the horizon.
    for (x0, x1, top, shade) in [(0.05, 0.12, 0.50, 0.62), (0.14, 0.18, 0.46, 0.58), (0.72, 0.80, 0.53, 0.66), (0.83, 0.9, 0.49, 0.6)] {
        if u >= x0 && u <= x1 && v >= top && v < horizon {
            val = shade;
            let (wx, wy) = (((u - x0) * 120.0).fract(), ((v - top) * 90.0).fract());
            if wx > 0.5 && wy > 0.5 {
                val -= 0.12;
            }
        }
    }
    // Tripod legs and camera.
    let apex = (0.62, 0.44);
    for foot in [(0.54, 0.93), (0.66, 0.95), (0.72, 0.9)] {
        if segment_distance((u, v), apex, foot) < 0.006 {
            val = 0.12;
        }
    }
    if (0.57..0.67).contains(&u) && (0.38..0.44).contains(&v) {
        val = 0.07;
    }
    if inside_ellipse((u, v), (0.66, 0.41), (0.018, 0.018)) {
        val = 0.35;
    }
    // The photographer.
    let body = inside_ellipse((u, v), (0.45, 0.58), (0.085, 0.2));
    let head = inside_ellipse((u, v), (0.47, 0.31), (0.045, 0.055));
    let hat = (0.42..0.52).contains(&u) && (0.255..0.275).contains(&v);
    let arm = segment_distance((u, v), (0.48, 0.45), (0.58, 0.41)) < 0.02;
    let legs = segment_distance((u, v), (0.43, 0.7), (0.40, 0.93)) < 0.022
        || segment_distance((u, v), (0.48, 0.7), (0.52, 0.92)) < 0.022;
    if body || arm || legs || hat {
        val = 0.06 + 0.03 * (60.0 * v).sin() * smoothstep(0.4, 0.5, u);
    }
    if head {
        val = 0.22 + 0.1 * smoothstep(0.44, 0.5, u);
    }
    val.clamp(0.0, 1.0)
}

fn render(width: usize, height: usize, f: impl Fn(f64, f64) -> [f64; 3], channels: usize) -> Result<ImageSignal> {
    let mut pixels = Vec::with_capacity(width * height * channels);
    let inv = 1.0 / (AA * AA) as f64;
    for row in 0..height {
        for col in 0..width {
            let mut acc = [0.0; 3];
            for sy in 0..AA {
                for sx in 0..AA {
                    let u = (col as f64 + (sx as f64 + 0.5) / AA as f64) / width as f64;
                    let v = (row as f64 + (sy as f64 + 0.5) / AA as f64) / height as f64;
                    let s = f(u, v);
                    for c in 0..3 {
                        acc[c] += s[c];
                    }
                }
            }
            for a in acc.iter().take(channels) {
                pixels.push((a * inv).clamp(0.0, 1.0));
            }
        }
    }
    ImageSignal::new(width, height, channels, pixels)
}

/// Grayscale photographer scene.
pub fn test_image(width: usize, height: usize) -> Result<ImageSignal> {
    render(width, height, |u, v| [scene(u, v); 3], 1)
}

/// The same scene tinted: warm ground, blue sky.
pub fn test_image_rgb(width: usize, height: usize) -> Result<ImageSignal> {
    render(
        width,
        height,
        |u, v| {
            let s = scene(u, v);
            let sky = smoothstep(0.7, 0.5, v);
            [
                (s * (1.0 - 0.15 * sky) + 0.05 * (1.0 - sky)).clamp(0.0, 1.0),
                (s * (1.0 - 0.05 * sky)).clamp(0.0, 1.0),
                (s * (1.0 + 0.12 * sky) - 0.05 * (1.0 - sky)).clamp(0.0, 1.0),
            ]
        },
        3,
    )
}
