//! Slanted-edge spatial frequency response.
//!
//! The estimator follows the usual slanted-edge recipe: per-row edge
//! centroids from first differences, a straight-line fit, projection of every
//! pixel onto the edge normal into quarter-pixel bins, differentiation to a
//! line spread function, a Hamming window and a DFT normalized at zero
//! frequency. The result includes the pixel aperture. The quarter-pixel
//! binning and the finite difference each attenuate like `sinc(nu/4)`; that
//! attenuation is divided out.

pub mod render;

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub use render::{render_edge, Blur, EdgeImage, EdgeSpec};

/// Bins per pixel in the projected edge spread function.
pub const OVERSAMPLING: usize = 4;
/// Minimum distance from the fitted edge to either side of the ROI, pixels.
pub const MIN_EDGE_MARGIN_PX: f64 = 20.0;
/// Minimum edge contrast over far-field noise.
pub const MIN_SNR: f64 = 20.0;
/// Default frequency for the single-number summary, cycles/pixel.
pub const DEFAULT_REFERENCE_FREQUENCY: f64 = 0.25;
/// Highest reported frequency, cycles/pixel.
pub const MAX_REPORTED_FREQUENCY: f64 = 1.0;
/// Slack on the accepted edge angle range for fitted angles, degrees.
pub const ANGLE_SLACK_DEG: f64 = 0.25;
/// Bin-averaging and differencing corrections are capped at this divisor.
const MIN_CORRECTION: f64 = 0.1;

/// Rectangular region of interest, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SFRCurve {
    /// Cycles per pixel along the edge normal.
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    /// Fitted edge angle from the ROI's vertical (or horizontal, for
    /// near-horizontal edges), degrees.
    pub edge_angle_deg: f64,
    pub horizontal_edge: bool,
    /// Edge contrast over far-field noise; infinite for noiseless images.
    pub snr: f64,
}

impl SFRCurve {
    /// Linear interpolation on the frequency grid.
    pub fn value_at(&self, nu: f64) -> Option<f64> {
        let f = &self.frequencies;
        let i = f.windows(2).position(|w| w[0] <= nu && nu <= w[1])?;
        let t = (nu - f[i]) / (f[i + 1] - f[i]);
        Some(self.values[i] + t * (self.values[i + 1] - self.values[i]))
    }

    /// Single-number summary at `nu` cycles/pixel.
    pub fn summary(&self, nu: f64) -> Option<f64> {
        self.value_at(nu)
    }
}

/// `|sin(pi x) / (pi x)|`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        ((PI * x).sin() / (PI * x)).abs()
    }
}

fn measurement(msg: impl Into<String>) -> Error {
    Error::MeasurementValidity(msg.into())
}

/// ROI pixels as a `rows x cols` array, transposed when the edge is closer to
/// horizontal so that the edge always runs down the rows.
fn extract(img: &EdgeImage, roi: Roi) -> Result<(Vec<f64>, usize, usize, bool)> {
    if roi.rows == 0
        || roi.cols == 0
        || roi.row0 + roi.rows > img.height
        || roi.col0 + roi.cols > img.width
    {
        return Err(Error::InvalidInput("ROI outside the image".into()));
    }
    let at = |r: usize, c: usize| img.get(roi.row0 + r, roi.col0 + c);
    let (mut gx, mut gy) = (0.0, 0.0);
    for r in 0..roi.rows - 1 {
        for c in 0..roi.cols - 1 {
            gx += (at(r, c + 1) - at(r, c)).abs();
            gy += (at(r + 1, c) - at(r, c)).abs();
        }
    }
    if gy > gx {
        let data = (0..roi.cols)
            .flat_map(|c| (0..roi.rows).map(move |r| (r, c)))
            .map(|(r, c)| at(r, c))
            .collect();
        Ok((data, roi.cols, roi.rows, true))
    } else {
        let data = (0..roi.rows)
            .flat_map(|r| (0..roi.cols).map(move |c| (r, c)))
            .map(|(r, c)| at(r, c))
            .collect();
        Ok((data, roi.rows, roi.cols, false))
    }
}

/// Least-squares line `x = a + b t`.
fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let (mt, mx) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut stt, mut stx) = (0.0, 0.0);
    for &(t, x) in points {
        stt += (t - mt) * (t - mt);
        stx += (t - mt) * (x - mx);
    }
    if stt == 0.0 {
        return None;
    }
    let b = stx / stt;
    Some((mx - b * mt, b))
}

/// Centroid of the row's first differences, optionally restricted to
/// `centre +- half` with a Hamming taper. Returned in pixel coordinates where
/// pixel `j` spans `[j, j+1]`.
fn row_centroid(row: &[f64], window: Option<(f64, f64)>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..row.len() - 1 {
        let pos = j as f64 + 1.0;
        let w = match window {
            Some((c, half)) => {
                let d = (pos - c) / half;
                if d.abs() > 1.0 {
                    continue;
                }
                0.54 + 0.46 * (PI * d).cos()
            }
            None => 1.0,
        };
        let d = w * (row[j + 1] - row[j]);
        num += pos * d;
        den += d;
    }
    (den.abs() > 1e-12).then(|| num / den)
}

pub fn estimate_sfr(img: &EdgeImage, roi: Option<Roi>) -> Result<SFRCurve> {
    let roi = roi.unwrap_or(Roi {
        row0: 0,
        col0: 0,
        rows: img.height,
        cols: img.width,
    });
    let (mut data, rows, cols, transposed) = extract(img, roi)?;
    if rows < 8 || cols < 2 * MIN_EDGE_MARGIN_PX as usize {
        return Err(measurement(format!(
            "ROI {rows}x{cols} too small for an edge fit"
        )));
    }

    // Dark to bright along +x.
    let left: f64 = (0..rows).map(|r| data[r * cols]).sum();
    let right: f64 = (0..rows).map(|r| data[r * cols + cols - 1]).sum();
    if left > right {
        data.iter_mut().for_each(|v| *v = -*v);
    }
    let row = |r: usize| &data[r * cols..(r + 1) * cols];

    // Two passes: raw centroids, then windowed around the first fit.
    let mut fit = None;
    for _ in 0..2 {
        let pts: Vec<(f64, f64)> = (0..rows)
            .filter_map(|r| {
                let t = r as f64 + 0.5;
                let window = fit.map(|(a, b): (f64, f64)| (a + b * t, MIN_EDGE_MARGIN_PX));
                row_centroid(row(r), window).map(|x| (t, x))
            })
            .collect();
        if pts.len() < rows / 2 {
            return Err(measurement("no edge found in the ROI"));
        }
        fit = fit_line(&pts);
        if fit.is_none() {
            return Err(measurement("edge fit failed"));
        }
    }
    let (a, b) = fit.expect("checked above");
    let angle = b.atan();
    let angle_deg = angle.to_degrees();
    let lo = render::MIN_EDGE_ANGLE_DEG - ANGLE_SLACK_DEG;
    let hi = render::MAX_EDGE_ANGLE_DEG + ANGLE_SLACK_DEG;
    if !(lo..=hi).contains(&angle_deg.abs()) {
        return Err(measurement(format!(
            "edge angle {angle_deg:.2} deg outside [{}, {}]",
            render::MIN_EDGE_ANGLE_DEG,
            render::MAX_EDGE_ANGLE_DEG
        )));
    }
    let ends = [a, a + b * rows as f64];
    let margin = ends
        .iter()
        .map(|&x| x.min(cols as f64 - x))
        .fold(f64::INFINITY, f64::min);
    if margin < MIN_EDGE_MARGIN_PX {
        return Err(measurement(format!(
            "edge is {margin:.1} px from the ROI border, need {MIN_EDGE_MARGIN_PX}"
        )));
    }

    // Project onto the edge normal.
    let cos = angle.cos();
    let half_range = (margin * cos).floor() - 1.0;
    let step = 1.0 / OVERSAMPLING as f64;
    let nbins = (2.0 * half_range * OVERSAMPLING as f64) as usize;
    let mut sums = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    let mut samples = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let edge = a + b * (r as f64 + 0.5);
        for (c, &v) in row(r).iter().enumerate() {
            let s = (c as f64 + 0.5 - edge) * cos;
            samples.push((s, v));
            let k = ((s + half_range) / step).floor();
            if k >= 0.0 && (k as usize) < nbins {
                sums[k as usize] += v;
                counts[k as usize] += 1;
            }
        }
    }
    let esf = fill_bins(&sums, &counts)
        .ok_or_else(|| measurement("edge spread function has no samples"))?;

    let lsf: Vec<f64> = esf.windows(2).map(|w| w[1] - w[0]).collect();
    let snr = estimate_snr(&esf, &samples, half_range, step);
    if snr < MIN_SNR {
        return Err(measurement(format!("edge SNR {snr:.1} below {MIN_SNR}")));
    }

    // Hamming window centred on the LSF centroid.
    let total: f64 = lsf.iter().sum();
    if total.abs() < 1e-12 {
        return Err(measurement("edge has no contrast"));
    }
    let centre = lsf
        .iter()
        .enumerate()
        .map(|(i, v)| i as f64 * v)
        .sum::<f64>()
        / total;
    let m = lsf.len();
    let half = centre.min(m as f64 - 1.0 - centre).max(1.0);
    let windowed: Vec<Complex<f64>> = lsf
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let d = (i as f64 - centre) / half;
            let w = if d.abs() <= 1.0 {
                0.54 + 0.46 * (PI * d).cos()
            } else {
                0.0
            };
            Complex::new(v * w, 0.0)
        })
        .collect();
    let mut spectrum = windowed;
    FftPlanner::<f64>::new()
        .plan_fft_forward(m)
        .process(&mut spectrum);
    let dc = spectrum[0].norm();
    let df = 1.0 / (m as f64 * step);
    let count = ((MAX_REPORTED_FREQUENCY / df).floor() as usize + 1).min(m / 2 + 1);
    let mut frequencies = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for (q, bin) in spectrum.iter().enumerate().take(count) {
        let nu = q as f64 * df;
        let correction = (sinc(nu * step) * sinc(nu * step)).max(MIN_CORRECTION);
        frequencies.push(nu);
        values.push(if q == 0 {
            1.0
        } else {
            bin.norm() / dc / correction
        });
    }
    Ok(SFRCurve {
        frequencies,
        values,
        edge_angle_deg: angle_deg,
        horizontal_edge: transposed,
        snr,
    })
}

/// Bin means with empty bins filled by linear interpolation.
fn fill_bins(sums: &[f64], counts: &[usize]) -> Option<Vec<f64>> {
    let filled: Vec<usize> = (0..sums.len()).filter(|&i| counts[i] > 0).collect();
    if filled.is_empty() {
        return None;
    }
    let mean = |i: usize| sums[i] / counts[i] as f64;
    let mut out = vec![0.0; sums.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let next = filled.partition_point(|&k| k < i);
        *o = if next < filled.len() && filled[next] == i {
            mean(i)
        } else if next == 0 {
            mean(filled[0])
        } else if next == filled.len() {
            mean(filled[next - 1])
        } else {
            let (l, r) = (filled[next - 1], filled[next]);
            mean(l) + (mean(r) - mean(l)) * (i - l) as f64 / (r - l) as f64
        };
    }
    Some(out)
}

/// Contrast between the flat far fields over their pooled noise.
fn estimate_snr(esf: &[f64], samples: &[(f64, f64)], half_range: f64, step: f64) -> f64 {
    let (lo, hi) = (esf[0], esf[esf.len() - 1]);
    let crossing = |frac: f64| {
        let level = lo + frac * (hi - lo);
        esf.iter()
            .position(|&v| v >= level)
            .unwrap_or(esf.len() - 1) as f64
            * step
            - half_range
    };
    let width = (crossing(0.9) - crossing(0.1)).abs();
    let far = (2.0 * width).max(4.0);
    let stats = |pick: &dyn Fn(f64) -> bool| {
        let vals: Vec<f64> = samples.iter().filter(|p| pick(p.0)).map(|p| p.1).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        (mean, var, vals.len())
    };
    let (md, vd, nd) = stats(&|s| s < -far);
    let (mb, vb, nb) = stats(&|s| s > far);
    if nd < 2 || nb < 2 {
        return 0.0;
    }
    let noise = ((vd + vb) / (nd + nb - 2) as f64).sqrt();
    let contrast = (mb - md).abs();
    if noise <= contrast * 1e-12 {
        f64::INFINITY
    } else {
        contrast / noise
    }
}
