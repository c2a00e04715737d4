//! Point spread function as the squared modulus of the Fourier-transformed
//! pupil phasor.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{MTFCurve, Orientation, PupilSpec};
use crate::error::{Error, Result};
use crate::zernike::ZernikeCoefficients;

/// Smallest ratio of array size to pupil diameter, in samples.
pub const MIN_PADDING_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsfGrid {
    /// Samples across the pupil diameter.
    pub pupil_samples: usize,
    /// Side of the zero-padded array.
    pub size: usize,
}

impl Default for PsfGrid {
    fn default() -> Self {
        Self {
            pupil_samples: 256,
            size: 1024,
        }
    }
}

/// PSF samples, row-major, with the optical axis at `(size/2, size/2)` and
/// unit total sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    size: usize,
    values: Vec<f64>,
    pixel_pitch_m: f64,
    wavelength_m: f64,
    /// Image-plane frequency per unit DFT lag, cycles/m.
    frequency_step: f64,
}

pub(crate) fn fft2(data: &mut [Complex<f64>], n: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = data[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            data[r * n + c] = col[r];
        }
    }
}

pub fn psf_from_pupil(
    c: &ZernikeCoefficients,
    pupil: &PupilSpec,
    wavelength_m: f64,
    grid: PsfGrid,
) -> Result<Psf> {
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "wavelength must be positive, got {wavelength_m}"
        )));
    }
    if grid.pupil_samples < 8 {
        return Err(Error::Resolution {
            what: "pupil samples for the point spread function",
            required: 8,
            actual: grid.pupil_samples,
        });
    }
    let factor = grid.size as f64 / grid.pupil_samples as f64;
    if factor < MIN_PADDING_FACTOR {
        return Err(Error::Aliasing {
            factor,
            required: MIN_PADDING_FACTOR,
        });
    }
    let (n, d) = (grid.size, grid.pupil_samples);
    let offset = (n - d) / 2;
    let h = 2.0 / d as f64;
    let wavenumber = 2.0 * PI / wavelength_m;
    let mut field = vec![Complex::new(0.0, 0.0); n * n];
    for r in 0..d {
        let y = -1.0 + (r as f64 + 0.5) * h;
        for s in 0..d {
            let x = -1.0 + (s as f64 + 0.5) * h;
            if x * x + y * y <= 1.0 {
                field[(r + offset) * n + s + offset] =
                    Complex::from_polar(1.0, wavenumber * c.value_xy(x, y));
            }
        }
    }
    fft2(&mut field, n);
    let total: f64 = field.iter().map(|z| z.norm_sqr()).sum();
    let half = n / 2;
    let mut values = vec![0.0; n * n];
    for r in 0..n {
        for s in 0..n {
            values[((r + half) % n) * n + (s + half) % n] = field[r * n + s].norm_sqr() / total;
        }
    }
    let pupil_pitch_m = 2.0 * pupil.aperture_radius_m() / d as f64;
    Ok(Psf {
        size: n,
        values,
        pixel_pitch_m: wavelength_m * pupil.distance_m() / (n as f64 * pupil_pitch_m),
        wavelength_m,
        frequency_step: pupil_pitch_m / (wavelength_m * pupil.distance_m()),
    })
}

impl Psf {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    pub fn pixel_pitch_m(&self) -> f64 {
        self.pixel_pitch_m
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    /// Image-plane frequency of DFT lag `m`, cycles/m.
    pub fn lag_frequency(&self, m: usize) -> f64 {
        m as f64 * self.frequency_step
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(row, col)` of the largest sample.
    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .values
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |best, (k, &v)| if v > best.1 { (k, v) } else { best },
            )
            .0;
        (k / self.size, k % self.size)
    }

    /// Signed offsets from the optical axis of sample `(row, col)`, meters.
    pub fn position_m(&self, row: usize, col: usize) -> (f64, f64) {
        let half = (self.size / 2) as f64;
        (
            (col as f64 - half) * self.pixel_pitch_m,
            (row as f64 - half) * self.pixel_pitch_m,
        )
    }

    /// Side of the smallest centred square holding `fraction` of the energy,
    /// meters.
    pub fn ensquared_width_m(&self, fraction: f64) -> f64 {
        let n = self.size;
        let c = n / 2;
        let mut inside = self.get(c, c);
        let mut half = 0usize;
        while inside < fraction && half < c {
            half += 1;
            let (lo, hi) = (c - half, (c + half).min(n - 1));
            for k in lo..=hi {
                inside += self.get(lo, k);
                if hi != lo {
                    inside += self.get(hi, k);
                }
            }
            for k in lo + 1..hi {
                inside += self.get(k, lo);
                if hi != lo {
                    inside += self.get(k, hi);
                }
            }
        }
        (2 * half + 1) as f64 * self.pixel_pitch_m
    }

    /// Modulus of the PSF's discrete Fourier transform at lags `0..=max_lag`
    /// along the horizontal or vertical frequency axis.
    pub fn mtf_along(&self, orientation: Orientation, max_lag: usize) -> Result<MTFCurve> {
        let horizontal = orientation == Orientation::horizontal();
        if !horizontal && orientation != Orientation::vertical() {
            return Err(Error::InvalidInput(
                "PSF transfer is sampled along x or y only".into(),
            ));
        }
        if max_lag >= self.size / 2 {
            return Err(Error::InvalidInput(format!(
                "lag {max_lag} beyond half the PSF grid ({})",
                self.size / 2
            )));
        }
        let n = self.size;
        let mut data: Vec<Complex<f64>> =
            self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft2(&mut data, n);
        let dc = data[0].norm();
        let values = (0..=max_lag)
            .map(|m| {
                let z = if horizontal { data[m] } else { data[m * n] };
                (z.norm() / dc).min(1.0)
            })
            .collect();
        Ok(MTFCurve {
            frequencies: (0..=max_lag).map(|m| self.lag_frequency(m)).collect(),
            values,
            orientation,
            wavelength_m: self.wavelength_m,
        })
    }
}
