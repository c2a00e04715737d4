//! Sub-aperture stitching.
//!
//! Each tile is a window of the global grid carrying its own wavefront
//! estimate. Piston and tilt are unobservable from the measurement, so every
//! tile gets a free `p + tx*x + ty*y` correction; these are fitted by least
//! squares on the overlaps with the first tile held fixed, then the corrected
//! tiles are blended by weighted average.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{DiskGrid, WavefrontMap};

/// A rectangular window `[row0, row0 + rows) x [col0, col0 + cols)` of the
/// global grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
    values: Vec<Option<f64>>,
    weights: Option<Vec<f64>>,
}

impl Tile {
    pub fn new(
        row0: usize,
        col0: usize,
        rows: usize,
        cols: usize,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "tile has {} samples for a {rows}x{cols} window",
                values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "tile contains non-finite values".into(),
            ));
        }
        Ok(Self {
            row0,
            col0,
            rows,
            cols,
            values,
            weights: None,
        })
    }

    /// Crops a window out of a global map.
    pub fn from_map(
        map: &WavefrontMap,
        row0: usize,
        col0: usize,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        if row0 + rows > map.n() || col0 + cols > map.n() {
            return Err(Error::Geometry(
                "tile window exceeds the global grid".into(),
            ));
        }
        let values = (row0..row0 + rows)
            .flat_map(|r| (col0..col0 + cols).map(move |c| (r, c)))
            .map(|(r, c)| map.get(r, c))
            .collect();
        Self::new(row0, col0, rows, cols, values)
    }

    /// Blending weights, one per sample; non-positive weights exclude a
    /// sample from the blend but not from the overlap fit.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.values.len() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(
                "tile weights do not match tile samples".into(),
            ));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.row0, self.col0)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn samples(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.values.iter().enumerate().filter_map(move |(k, v)| {
            let w = self.weights.as_ref().map_or(1.0, |w| w[k]);
            v.map(|v| (self.row0 + k / self.cols, self.col0 + k % self.cols, v, w))
        })
    }
}

/// Piston and tilt added to one tile, in meters and meters per unit
/// normalized coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TileCorrection {
    pub piston_m: f64,
    pub tilt_x_m: f64,
    pub tilt_y_m: f64,
}

#[derive(Debug, Clone)]
pub struct Stitched {
    pub map: WavefrontMap,
    pub corrections: Vec<TileCorrection>,
    /// RMS disagreement between corrected tiles and the blend, over
    /// samples covered by more than one tile.
    pub overlap_rms_m: f64,
    pub overlap_max_m: f64,
}

/// Minimum shared samples for two tiles to constrain each other's tilt.
const MIN_OVERLAP: usize = 3;

pub fn stitch(tiles: &[Tile], global: DiskGrid) -> Result<Stitched> {
    if tiles.is_empty() {
        return Err(Error::Stitching("no tiles".into()));
    }
    let n = global.n();
    for (i, t) in tiles.iter().enumerate() {
        if t.row0 + t.rows > n || t.col0 + t.cols > n {
            return Err(Error::Stitching(format!(
                "tile {i} exceeds the global grid"
            )));
        }
    }

    // Per global sample: (tile, value, weight).
    let mut cover: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n * n];
    for (t, tile) in tiles.iter().enumerate() {
        for (r, c, v, w) in tile.samples() {
            if global.in_disk(r, c) {
                cover[r * n + c].push((t, v, w));
            }
        }
    }

    let corrections = fit_corrections(tiles.len(), &cover, global)?;

    let correct = |t: usize, v: f64, x: f64, y: f64| {
        let k = corrections[t];
        v + k.piston_m + k.tilt_x_m * x + k.tilt_y_m * y
    };

    let mut map = WavefrontMap::empty(global);
    let (mut ss, mut count, mut max_dev) = (0.0, 0usize, 0.0f64);
    for r in 0..n {
        for c in 0..n {
            let cell = &cover[r * n + c];
            if cell.is_empty() {
                continue;
            }
            let (x, y) = global.point(r, c);
            let (mut num, mut den) = (0.0, 0.0);
            for &(t, v, w) in cell {
                if w > 0.0 {
                    num += w * correct(t, v, x, y);
                    den += w;
                }
            }
            let blended = if den > 0.0 {
                num / den
            } else {
                cell.iter()
                    .map(|&(t, v, _)| correct(t, v, x, y))
                    .sum::<f64>()
                    / cell.len() as f64
            };
            map.set(r, c, Some(blended));
            if cell.len() > 1 {
                for &(t, v, _) in cell {
                    let d = correct(t, v, x, y) - blended;
                    ss += d * d;
                    count += 1;
                    max_dev = max_dev.max(d.abs());
                }
            }
        }
    }

    Ok(Stitched {
        map,
        corrections,
        overlap_rms_m: if count > 0 {
            (ss / count as f64).sqrt()
        } else {
            0.0
        },
        overlap_max_m: max_dev,
    })
}

fn fit_corrections(
    n_tiles: usize,
    cover: &[Vec<(usize, f64, f64)>],
    global: DiskGrid,
) -> Result<Vec<TileCorrection>> {
    if n_tiles == 1 {
        return Ok(vec![TileCorrection::default()]);
    }
    let n = global.n();

    // Overlap graph, requiring samples that span both axes.
    let mut overlap_rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_tiles * n_tiles];
    for (k, cell) in cover.iter().enumerate() {
        for a in 0..cell.len() {
            for b in a + 1..cell.len() {
                let (ta, tb) = (cell[a].0.min(cell[b].0), cell[a].0.max(cell[b].0));
                if ta != tb {
                    overlap_rows[ta * n_tiles + tb].push((k / n, k % n));
                }
            }
        }
    }
    let linked = |a: usize, b: usize| {
        let s = &overlap_rows[a.min(b) * n_tiles + a.max(b)];
        s.len() >= MIN_OVERLAP && s.iter().any(|p| p.0 != s[0].0) && s.iter().any(|p| p.1 != s[0].1)
    };
    let mut seen = vec![false; n_tiles];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(a) = queue.pop_front() {
        for (b, s) in seen.iter_mut().enumerate() {
            if !*s && linked(a, b) {
                *s = true;
                queue.push_back(b);
            }
        }
    }
    if let Some(orphan) = seen.iter().position(|s| !s) {
        return Err(Error::Stitching(format!(
            "tile {orphan} is not connected to tile 0 through overlaps of at least {MIN_OVERLAP} non-collinear samples"
        )));
    }

    // Unknowns (p, tx, ty) for tiles 1.., tile 0 is the gauge.
    let dim = 3 * (n_tiles - 1);
    let mut ata = DMatrix::<f64>::zeros(dim, dim);
    let mut atb = DVector::<f64>::zeros(dim);
    let mut row = vec![0.0; dim];
    for (k, cell) in cover.iter().enumerate() {
        if cell.len() < 2 {
            continue;
        }
        let (x, y) = global.point(k / n, k % n);
        let basis = [1.0, x, y];
        for a in 0..cell.len() {
            for b in a + 1..cell.len() {
                let (ta, va, _) = cell[a];
                let (tb, vb, _) = cell[b];
                // (va + corr_a) - (vb + corr_b) = 0
                row.iter_mut().for_each(|r| *r = 0.0);
                if ta > 0 {
                    for q in 0..3 {
                        row[3 * (ta - 1) + q] += basis[q];
                    }
                }
                if tb > 0 {
                    for q in 0..3 {
                        row[3 * (tb - 1) + q] -= basis[q];
                    }
                }
                let rhs = vb - va;
                let nz: Vec<usize> = (0..dim).filter(|&i| row[i] != 0.0).collect();
                for &i in &nz {
                    atb[i] += row[i] * rhs;
                    for &j in &nz {
                        ata[(i, j)] += row[i] * row[j];
                    }
                }
            }
        }
    }
    let svd = ata.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if s_min.is_nan() || s_min <= 1e-12 * s_max {
        return Err(Error::Stitching(
            "overlap geometry leaves piston/tilt undetermined".into(),
        ));
    }
    let sol = svd
        .solve(&atb, 0.0)
        .map_err(|e| Error::Stitching(format!("solve failed: {e}")))?;
    let mut out = vec![TileCorrection::default(); n_tiles];
    for t in 1..n_tiles {
        out[t] = TileCorrection {
            piston_m: sol[3 * (t - 1)],
            tilt_x_m: sol[3 * (t - 1) + 1],
            tilt_y_m: sol[3 * (t - 1) + 2],
        };
    }
    Ok(out)
}
