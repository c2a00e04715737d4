//! Local refractive power as the curvature of the wavefront map.
//!
//! All second derivatives use central differences with the physical sample
//! spacing. A sample whose stencil touches an invalid neighbour is itself
//! invalid; nothing is extrapolated across the pupil edge.

use crate::error::{Error, Result};
use crate::grid::{ScalarMap, WavefrontMap};

/// Fewest samples across the aperture accepted for differentiation.
pub const MIN_POWER_SAMPLES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    /// Mixed derivative `d2W / dx dy`.
    XY,
}

/// `D_x`, `D_y` and the cross term, in diopters.
#[derive(Debug, Clone)]
pub struct RefractivePowerMap {
    pub dx: ScalarMap,
    pub dy: ScalarMap,
    pub dxy: ScalarMap,
}

impl RefractivePowerMap {
    pub fn compute(w: &WavefrontMap) -> Result<Self> {
        Ok(Self {
            dx: refractive_power(w, Axis::X)?,
            dy: refractive_power(w, Axis::Y)?,
            dxy: refractive_power(w, Axis::XY)?,
        })
    }
}

/// Symmetric 2x2 Hessian of the wavefront at one point, diopters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DioptricPowerMatrix {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl DioptricPowerMatrix {
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn determinant(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// `tr(D^2)`.
    pub fn trace_of_square(&self) -> f64 {
        self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy
    }

    /// `((tr D)^2 - tr(D^2)) / 2`, equal to the determinant for 2x2 matrices.
    pub fn determinant_from_traces(&self) -> f64 {
        0.5 * (self.trace().powi(2) - self.trace_of_square())
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }
}

fn check_resolution(w: &WavefrontMap) -> Result<()> {
    if w.n() < MIN_POWER_SAMPLES {
        return Err(Error::Resolution {
            what: "wavefront map for second differences",
            required: MIN_POWER_SAMPLES,
            actual: w.n(),
        });
    }
    Ok(())
}

fn second_difference(w: &WavefrontMap, row: usize, col: usize, axis: Axis) -> Option<f64> {
    let n = w.n();
    if row == 0 || col == 0 || row + 1 >= n || col + 1 >= n {
        return None;
    }
    let h = w.grid().spacing_m();
    let inv_h2 = 1.0 / (h * h);
    match axis {
        Axis::X => {
            let (a, b, c) = (w.get(row, col - 1)?, w.get(row, col)?, w.get(row, col + 1)?);
            Some((a - 2.0 * b + c) * inv_h2)
        }
        Axis::Y => {
            let (a, b, c) = (w.get(row - 1, col)?, w.get(row, col)?, w.get(row + 1, col)?);
            Some((a - 2.0 * b + c) * inv_h2)
        }
        Axis::XY => {
            let pp = w.get(row + 1, col + 1)?;
            let pm = w.get(row + 1, col - 1)?;
            let mp = w.get(row - 1, col + 1)?;
            let mm = w.get(row - 1, col - 1)?;
            Some((pp - pm - mp + mm) * 0.25 * inv_h2)
        }
    }
}

/// Second derivative of `w` along `axis`, diopters (1/m).
pub fn refractive_power(w: &WavefrontMap, axis: Axis) -> Result<ScalarMap> {
    check_resolution(w)?;
    let n = w.n();
    let mut out = ScalarMap::empty(*w.grid());
    for row in 0..n {
        for col in 0..n {
            out.set(row, col, second_difference(w, row, col, axis));
        }
    }
    Ok(out)
}

/// Hessian of `w` at grid sample `(row, col)`.
pub fn dioptric_matrix(w: &WavefrontMap, row: usize, col: usize) -> Result<DioptricPowerMatrix> {
    check_resolution(w)?;
    let d = |axis| second_difference(w, row, col, axis).ok_or(Error::InvalidPoint { row, col });
    Ok(DioptricPowerMatrix {
        xx: d(Axis::X)?,
        xy: d(Axis::XY)?,
        yy: d(Axis::Y)?,
    })
}

fn per_point<F: Fn(&DioptricPowerMatrix) -> f64>(w: &WavefrontMap, f: F) -> Result<ScalarMap> {
    check_resolution(w)?;
    let n = w.n();
    let mut out = ScalarMap::empty(*w.grid());
    for row in 0..n {
        for col in 0..n {
            let m = (|| {
                Some(DioptricPowerMatrix {
                    xx: second_difference(w, row, col, Axis::X)?,
                    xy: second_difference(w, row, col, Axis::XY)?,
                    yy: second_difference(w, row, col, Axis::Y)?,
                })
            })();
            out.set(row, col, m.as_ref().map(&f));
        }
    }
    Ok(out)
}

/// `det(Hessian W)` per sample, dpt^2. Proportional to the ray-optics blur
/// ellipse area; the raw determinant is reported.
pub fn blur_ellipse_proxy(w: &WavefrontMap) -> Result<ScalarMap> {
    per_point(w, DioptricPowerMatrix::determinant)
}

/// `D_x + D_y = Laplacian(W)` per sample, diopters.
pub fn laplace_trace(w: &WavefrontMap) -> Result<ScalarMap> {
    per_point(w, DioptricPowerMatrix::trace)
}
