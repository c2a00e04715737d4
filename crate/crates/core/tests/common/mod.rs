//! Sub-aperture measurement of a large lens: Shack-Hartmann per tile,
//! local reconstruction, stitching, second-difference power.

use std::f64::consts::PI;

use ws_optics::wavefront::{
    disk_lattice, reconstruct_range, refractive_power, sh_forward, stitch, Axis, Tile,
};
use ws_optics::zernike::{decompose, DiskPoint};
use ws_optics::{DiskGrid, WavefrontMap};

pub const APERTURE_RADIUS_M: f64 = 0.05;
pub const TILE_RADIUS: f64 = 0.35;
pub const F_SH_M: f64 = 5e-3;
pub const NOISE_M: f64 = 0.1e-6;
pub const GLOBAL_N: usize = 128;

pub struct StitchedPower {
    pub mean_dx: f64,
    pub mean_dy: f64,
    pub overlap_rms_m: f64,
    pub samples: usize,
}

pub fn tile_centres() -> Vec<(f64, f64)> {
    let mut c = vec![(0.0, 0.0)];
    for (count, r) in [(6, 0.4), (8, 0.75)] {
        for k in 0..count {
            let t = 2.0 * PI * k as f64 / count as f64;
            c.push((r * t.cos(), r * t.sin()));
        }
    }
    c
}

/// `w` takes physical coordinates in meters and returns meters.
pub fn measure(w: impl Fn(f64, f64) -> f64 + Copy, seed: u64) -> StitchedPower {
    let rho = APERTURE_RADIUS_M;
    let r_tile = TILE_RADIUS * rho;
    let global = DiskGrid::new(GLOBAL_N, rho).unwrap();
    let lenslets = disk_lattice(10);
    let mut tiles = Vec::new();
    for (i, &(cx, cy)) in tile_centres().iter().enumerate() {
        let local_grid = DiskGrid::new(64, r_tile).unwrap();
        let local = WavefrontMap::from_fn(local_grid, |u, v| {
            w(cx * rho + u * r_tile, cy * rho + v * r_tile)
        });
        let truth = decompose(&local, 9).unwrap().coefficients;
        let field = sh_forward(&truth, &lenslets, F_SH_M, r_tile)
            .unwrap()
            .field
            .with_displacement_noise(NOISE_M, seed + i as u64)
            .unwrap();
        let rec = reconstruct_range(&field, 1, 9).unwrap().coefficients;

        let span = |c: f64| {
            let lo = global.index_of((c - TILE_RADIUS).max(-0.999_999)).unwrap();
            let hi = global.index_of((c + TILE_RADIUS).min(0.999_999)).unwrap();
            (lo, hi - lo + 1)
        };
        let ((col0, cols), (row0, rows)) = (span(cx), span(cy));
        let mut values = Vec::with_capacity(rows * cols);
        let mut weights = Vec::with_capacity(rows * cols);
        for row in row0..row0 + rows {
            for col in col0..col0 + cols {
                let (x, y) = global.point(row, col);
                let (u, v) = ((x - cx) / TILE_RADIUS, (y - cy) / TILE_RADIUS);
                let inside = global.in_disk(row, col) && u * u + v * v <= 1.0;
                values.push(inside.then(|| rec.evaluate(DiskPoint::new(u, v).unwrap())));
                weights.push(if inside { 1.0 - (u * u + v * v) } else { 0.0 });
            }
        }
        tiles.push(
            Tile::new(row0, col0, rows, cols, values)
                .unwrap()
                .with_weights(weights)
                .unwrap(),
        );
    }
    let stitched = stitch(&tiles, global).unwrap();
    let dx = refractive_power(&stitched.map, Axis::X).unwrap();
    let dy = refractive_power(&stitched.map, Axis::Y).unwrap();
    StitchedPower {
        mean_dx: dx.mean().unwrap(),
        mean_dy: dy.mean().unwrap(),
        overlap_rms_m: stitched.overlap_rms_m,
        samples: dx.valid_count(),
    }
}
