//! Regular Cartesian sampling of the unit-disk pupil.
//!
//! Samples sit at cell centres of an `n x n` grid over `[-1, 1]^2` in
//! normalized coordinates; row index follows `y`, column index follows `x`.
//! Samples outside the disk are stored as `None`, never as zero.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskGrid {
    n: usize,
    aperture_radius_m: f64,
}

impl DiskGrid {
    pub fn new(n: usize, aperture_radius_m: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Resolution {
                what: "disk grid",
                required: 3,
                actual: n,
            });
        }
        if !(aperture_radius_m.is_finite() && aperture_radius_m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "aperture radius must be positive, got {aperture_radius_m}"
            )));
        }
        Ok(Self {
            n,
            aperture_radius_m,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn aperture_radius_m(&self) -> f64 {
        self.aperture_radius_m
    }

    /// Sample spacing in normalized units.
    pub fn spacing(&self) -> f64 {
        2.0 / self.n as f64
    }

    /// Sample spacing in meters.
    pub fn spacing_m(&self) -> f64 {
        self.spacing() * self.aperture_radius_m
    }

    /// Normalized coordinate of grid index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.spacing()
    }

    /// Nearest grid index for normalized coordinate `c`, if on the grid.
    pub fn index_of(&self, c: f64) -> Option<usize> {
        let f = (c + 1.0) / self.spacing() - 0.5;
        let i = f.round();
        if i < 0.0 || i >= self.n as f64 {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Normalized `(x, y)` of sample `(row, col)`.
    pub fn point(&self, row: usize, col: usize) -> (f64, f64) {
        (self.coord(col), self.coord(row))
    }

    pub fn in_disk(&self, row: usize, col: usize) -> bool {
        let (x, y) = self.point(row, col);
        x * x + y * y <= 1.0
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Scalar samples over a [`DiskGrid`], with an explicit invalid marker.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    grid: DiskGrid,
    values: Vec<Option<f64>>,
}

/// Optical path difference in meters.
pub type WavefrontMap = GridMap;
/// Derived per-sample quantity (power, curvature, ...).
pub type ScalarMap = GridMap;

impl GridMap {
    pub fn new(grid: DiskGrid, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "map has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("map contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// All samples invalid.
    pub fn empty(grid: DiskGrid) -> Self {
        Self {
            values: vec![None; grid.len()],
            grid,
        }
    }

    /// Samples `f(x, y)` (normalized coordinates) at every in-disk sample.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: DiskGrid, f: F) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for row in 0..n {
            for col in 0..n {
                values.push(if grid.in_disk(row, col) {
                    let (x, y) = grid.point(row, col);
                    Some(f(x, y))
                } else {
                    None
                });
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn aperture_radius_m(&self) -> f64 {
        self.grid.aperture_radius_m
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.grid.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Option<f64>) {
        self.values[row * self.grid.n + col] = v;
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// `(row, col, x, y, value)` for every valid sample.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + '_ {
        let n = self.grid.n;
        self.values.iter().enumerate().filter_map(move |(k, v)| {
            v.map(|v| {
                let (row, col) = (k / n, k % n);
                let (x, y) = self.grid.point(row, col);
                (row, col, x, y, v)
            })
        })
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().flatten().count()
    }

    pub fn mean(&self) -> Option<f64> {
        let c = self.valid_count();
        (c > 0).then(|| self.values.iter().flatten().sum::<f64>() / c as f64)
    }

    pub fn max_abs(&self) -> Option<f64> {
        self.values
            .iter()
            .flatten()
            .map(|v| v.abs())
            .reduce(f64::max)
    }

    /// Pointwise map over valid samples.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v.map(&f)).collect(),
        }
    }

    /// Pointwise combination; valid only where both inputs are valid.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("maps have different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => Some(f(*a, *b)),
                    _ => None,
                })
                .collect(),
        })
    }
}
