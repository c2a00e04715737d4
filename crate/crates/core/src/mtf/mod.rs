//! Modulation transfer function from Zernike wavefront coefficients.
//!
//! The MTF at image-plane frequency `k` is the modulus of the phasor
//! `exp(i 2pi/lambda [W(xi + d) - W(xi - d)])` integrated over the overlap of
//! two copies of the pupil displaced by `+-d`, normalized by the pupil area.
//! Pupil coordinates are normalized by the aperture radius, so
//! `d = lambda * z * k / (2R)` and the cutoff `k_c = 2R / (lambda z)` is where
//! the overlap becomes empty.
//!
//! The overlap integral is evaluated on a cell-centred raster of the pupil.

pub mod psf;

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::zernike::ZernikeCoefficients;

pub use psf::{psf_from_pupil, Psf, PsfGrid, MIN_PADDING_FACTOR};

/// Photopic reference wavelength used when none is given.
pub const DEFAULT_WAVELENGTH_M: f64 = 550e-9;
/// Raster samples across the pupil diameter.
pub const DEFAULT_RESOLUTION: usize = 512;
/// Largest accepted disagreement between the full and half resolution rasters.
pub const DEFAULT_ACCURACY_TOLERANCE: f64 = 1e-2;
/// Tolerance on the normalization of a [`SpectralDensity`].
pub const PSD_NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Circular top-hat pupil of radius `R` at distance `z` from the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PupilSpec {
    aperture_radius_m: f64,
    distance_m: f64,
}

impl PupilSpec {
    pub fn new(aperture_radius_m: f64, distance_m: f64) -> Result<Self> {
        for (name, v) in [
            ("aperture radius", aperture_radius_m),
            ("pupil distance", distance_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            aperture_radius_m,
            distance_m,
        })
    }

    /// Pupil at the focal length, `R = f / (2N)`.
    pub fn from_lens(focal_length_m: f64, f_number: f64) -> Result<Self> {
        if !(f_number.is_finite() && f_number > 0.0) {
            return Err(Error::InvalidInput(format!(
                "f-number must be positive, got {f_number}"
            )));
        }
        Self::new(focal_length_m / (2.0 * f_number), focal_length_m)
    }

    pub fn aperture_radius_m(&self) -> f64 {
        self.aperture_radius_m
    }

    pub fn distance_m(&self) -> f64 {
        self.distance_m
    }

    /// Incoherent cutoff in cycles per meter.
    pub fn cutoff(&self, wavelength_m: f64) -> f64 {
        2.0 * self.aperture_radius_m / (wavelength_m * self.distance_m)
    }

    /// Normalized pupil displacement `|d|` for frequency `k`.
    pub fn shift(&self, wavelength_m: f64, k: f64) -> f64 {
        wavelength_m * self.distance_m * k / (2.0 * self.aperture_radius_m)
    }
}

/// Unit direction of the frequency vector in the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    x: f64,
    y: f64,
}

impl Orientation {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let n = x.hypot(y);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(
                "orientation must be a nonzero vector".into(),
            ));
        }
        Ok(Self { x: x / n, y: y / n })
    }

    /// Frequency vector along `x`.
    pub fn horizontal() -> Self {
        Self { x: 1.0, y: 0.0 }
    }

    pub fn vertical() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn from_angle_deg(deg: f64) -> Self {
        let r = deg.to_radians();
        Self {
            x: r.cos(),
            y: r.sin(),
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Discrete spectrum: wavelengths (m) with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    lines: Vec<(f64, f64)>,
}

impl SpectralDensity {
    /// Weights are rescaled to sum to one.
    pub fn new(lines: Vec<(f64, f64)>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::InvalidInput("spectral density is empty".into()));
        }
        for &(l, w) in &lines {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "wavelength must be positive, got {l}"
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "spectral weight must be nonnegative, got {w}"
                )));
            }
        }
        let total: f64 = lines.iter().map(|l| l.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("spectral weights sum to zero".into()));
        }
        Ok(Self {
            lines: lines.into_iter().map(|(l, w)| (l, w / total)).collect(),
        })
    }

    pub fn monochromatic(wavelength_m: f64) -> Result<Self> {
        Self::new(vec![(wavelength_m, 1.0)])
    }

    /// Samples of a continuous density, integrated by the trapezoid rule.
    pub fn from_density(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Self::new(samples.to_vec());
        }
        if samples
            .windows(2)
            .any(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidInput(
                "density wavelengths must increase strictly".into(),
            ));
        }
        let n = samples.len();
        let lines = (0..n)
            .map(|i| {
                let left = if i > 0 {
                    samples[i].0 - samples[i - 1].0
                } else {
                    0.0
                };
                let right = if i + 1 < n {
                    samples[i + 1].0 - samples[i].0
                } else {
                    0.0
                };
                (samples[i].0, samples[i].1 * 0.5 * (left + right))
            })
            .collect();
        Self::new(lines)
    }

    pub fn lines(&self) -> &[(f64, f64)] {
        &self.lines
    }

    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.1).sum()
    }

    pub fn mean_wavelength(&self) -> f64 {
        self.lines.iter().map(|(l, w)| l * w).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MTFCurve {
    /// Cycles per meter in the image plane.
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub orientation: Orientation,
    /// Wavelength, or the weighted mean wavelength for polychromatic curves.
    pub wavelength_m: f64,
}

impl MTFCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequencies_cyc_per_mm(&self) -> Vec<f64> {
        self.frequencies.iter().map(|k| k * 1e-3).collect()
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn value_at(&self, k: f64) -> Option<f64> {
        let f = &self.frequencies;
        let i = f.windows(2).position(|w| w[0] <= k && k <= w[1])?;
        let t = if f[i + 1] > f[i] {
            (k - f[i]) / (f[i + 1] - f[i])
        } else {
            0.0
        };
        Some(self.values[i] + t * (self.values[i + 1] - self.values[i]))
    }
}

/// Image-plane frequency in cycles/m to cycles per degree of field for a
/// lens of focal length `f`.
pub fn cycles_per_degree(k_cyc_per_m: f64, focal_length_m: f64) -> f64 {
    k_cyc_per_m * focal_length_m * 1f64.to_radians().tan()
}

/// `n` equally spaced frequencies on `[0, k_max]`.
pub fn linspace(k_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| k_max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Closed-form diffraction-limited MTF of a circular pupil at `s = k / k_c`.
pub fn diffraction_limited(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else if s <= 0.0 {
        1.0
    } else {
        2.0 / PI * (s.acos() - s * (1.0 - s * s).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtfOptions {
    pub resolution: usize,
    /// When set, the curve is recomputed at half resolution and an accuracy
    /// error is raised if the two differ by more than this anywhere.
    pub accuracy_tolerance: Option<f64>,
}

impl Default for MtfOptions {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            accuracy_tolerance: Some(DEFAULT_ACCURACY_TOLERANCE),
        }
    }
}

/// Cell-centred pupil raster, `resolution` samples across the diameter.
struct PupilRaster {
    points: Vec<(f64, f64)>,
}

impl PupilRaster {
    fn new(resolution: usize) -> Self {
        let h = 2.0 / resolution as f64;
        let c = |i: usize| -1.0 + (i as f64 + 0.5) * h;
        let mut points = Vec::new();
        for r in 0..resolution {
            for s in 0..resolution {
                let (x, y) = (c(s), c(r));
                if x * x + y * y <= 1.0 {
                    points.push((x, y));
                }
            }
        }
        Self { points }
    }

    fn overlap(&self, c: &ZernikeCoefficients, wavenumber: f64, dx: f64, dy: f64) -> f64 {
        let aberrated = c.values().iter().any(|&v| v != 0.0);
        let (mut re, mut im) = (0.0, 0.0);
        for &(x, y) in &self.points {
            let (px, py, mx, my) = (x + dx, y + dy, x - dx, y - dy);
            if px * px + py * py > 1.0 || mx * mx + my * my > 1.0 {
                continue;
            }
            if aberrated {
                let phase = wavenumber * (c.value_xy(px, py) - c.value_xy(mx, my));
                let (s, co) = phase.sin_cos();
                re += co;
                im += s;
            } else {
                re += 1.0;
            }
        }
        re.hypot(im) / self.points.len() as f64
    }

    fn curve(
        &self,
        c: &ZernikeCoefficients,
        pupil: &PupilSpec,
        wavelength_m: f64,
        k: &[f64],
        o: Orientation,
    ) -> Vec<f64> {
        let wavenumber = 2.0 * PI / wavelength_m;
        k.par_iter()
            .map(|&k| {
                let d = pupil.shift(wavelength_m, k.abs());
                if d >= 1.0 {
                    0.0
                } else {
                    self.overlap(c, wavenumber, d * o.x, d * o.y).min(1.0)
                }
            })
            .collect()
    }
}

fn check_inputs(wavelength_m: f64, k: &[f64], opts: &MtfOptions) -> Result<()> {
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "wavelength must be positive, got {wavelength_m}"
        )));
    }
    if k.iter().any(|k| !k.is_finite()) {
        return Err(Error::InvalidInput(
            "frequency samples must be finite".into(),
        ));
    }
    if opts.resolution < 16 {
        return Err(Error::Resolution {
            what: "pupil raster",
            required: 16,
            actual: opts.resolution,
        });
    }
    Ok(())
}

/// Monochromatic MTF with default options.
pub fn mtf_mono(
    c: &ZernikeCoefficients,
    pupil: &PupilSpec,
    wavelength_m: f64,
    k: &[f64],
    orientation: Orientation,
) -> Result<MTFCurve> {
    mtf_mono_with(
        c,
        pupil,
        wavelength_m,
        k,
        orientation,
        &MtfOptions::default(),
    )
}

pub fn mtf_mono_with(
    c: &ZernikeCoefficients,
    pupil: &PupilSpec,
    wavelength_m: f64,
    k: &[f64],
    orientation: Orientation,
    opts: &MtfOptions,
) -> Result<MTFCurve> {
    check_inputs(wavelength_m, k, opts)?;
    let values = PupilRaster::new(opts.resolution).curve(c, pupil, wavelength_m, k, orientation);
    if let Some(tol) = opts.accuracy_tolerance {
        let coarse =
            PupilRaster::new(opts.resolution / 2).curve(c, pupil, wavelength_m, k, orientation);
        let residual = values
            .iter()
            .zip(&coarse)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual > tol {
            return Err(Error::Accuracy { residual });
        }
    }
    Ok(MTFCurve {
        frequencies: k.to_vec(),
        values,
        orientation,
        wavelength_m,
    })
}

/// PSD-weighted sum of monochromatic curves on a common frequency axis.
pub fn mtf_poly(
    c: &ZernikeCoefficients,
    pupil: &PupilSpec,
    psd: &SpectralDensity,
    k: &[f64],
    orientation: Orientation,
) -> Result<MTFCurve> {
    mtf_poly_with(c, pupil, psd, k, orientation, &MtfOptions::default())
}

pub fn mtf_poly_with(
    c: &ZernikeCoefficients,
    pupil: &PupilSpec,
    psd: &SpectralDensity,
    k: &[f64],
    orientation: Orientation,
    opts: &MtfOptions,
) -> Result<MTFCurve> {
    if psd.lines.is_empty() {
        return Err(Error::InvalidInput("spectral density is empty".into()));
    }
    if (psd.total_weight() - 1.0).abs() > PSD_NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidInput(
            "spectral density is not normalized".into(),
        ));
    }
    let mut values = vec![0.0; k.len()];
    for &(l, w) in &psd.lines {
        let mono = mtf_mono_with(c, pupil, l, k, orientation, opts)?;
        for (acc, v) in values.iter_mut().zip(&mono.values) {
            *acc += w * v;
        }
    }
    Ok(MTFCurve {
        frequencies: k.to_vec(),
        values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        orientation,
        wavelength_m: psd.mean_wavelength(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LAMBDA: f64 = 550e-9;

    fn pupil() -> PupilSpec {
        PupilSpec::from_lens(6e-3, 2.0).unwrap()
    }

    fn coeffs(pairs: &[(usize, f64)]) -> ZernikeCoefficients {
        let mut c = ZernikeCoefficients::zeros(9).unwrap();
        for &(j, v) in pairs {
            c.set(j, v).unwrap();
        }
        c
    }

    fn fast() -> MtfOptions {
        MtfOptions {
            resolution: 256,
            accuracy_tolerance: None,
        }
    }

    #[test]
    fn unity_at_zero_frequency() {
        let c = coeffs(&[(4, 0.3e-6), (7, 0.1e-6), (9, -0.2e-6)]);
        let m = mtf_mono_with(
            &c,
            &pupil(),
            LAMBDA,
            &[0.0],
            Orientation::horizontal(),
            &fast(),
        )
        .unwrap();
        assert!((m.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_emerges_from_geometry() {
        let p = pupil();
        let kc = p.cutoff(LAMBDA);
        // f/2 at 550 nm.
        assert!((kc - 1.0 / (LAMBDA * 2.0)).abs() < 1e-6 * kc);
        let c = coeffs(&[(5, 0.1e-6)]);
        let m = mtf_mono_with(
            &c,
            &p,
            LAMBDA,
            &[kc, 1.2 * kc],
            Orientation::vertical(),
            &fast(),
        )
        .unwrap();
        assert_eq!(m.values, vec![0.0, 0.0]);
        let just_below = mtf_mono_with(
            &c,
            &p,
            LAMBDA,
            &[0.98 * kc],
            Orientation::vertical(),
            &fast(),
        )
        .unwrap();
        assert!(just_below.values[0] > 0.0);
    }

    #[test]
    fn half_cutoff_matches_closed_form() {
        let p = pupil();
        let want = 2.0 / PI * (0.5f64.acos() - 0.5 * 0.75f64.sqrt());
        assert!((diffraction_limited(0.5) - want).abs() < 1e-15);
        let m = mtf_mono(
            &coeffs(&[]),
            &p,
            LAMBDA,
            &[0.5 * p.cutoff(LAMBDA)],
            Orientation::horizontal(),
        )
        .unwrap();
        assert!((m.values[0] - 0.391).abs() < 1e-3, "{}", m.values[0]);
    }

    // Monte-Carlo area of the lens-shaped overlap of two unit disks.
    #[test]
    fn diffraction_limit_against_monte_carlo_overlap() {
        let p = pupil();
        let kc = p.cutoff(LAMBDA);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 400_000;
        let ks = [0.1 * kc, 0.3 * kc, 0.6 * kc, 0.85 * kc];
        let m = mtf_mono(
            &coeffs(&[]),
            &p,
            LAMBDA,
            &ks,
            Orientation::from_angle_deg(30.0),
        )
        .unwrap();
        for (i, &k) in ks.iter().enumerate() {
            let d = p.shift(LAMBDA, k);
            let mut hits = 0usize;
            for _ in 0..draws {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                if (x - d).powi(2) + y * y <= 1.0 && (x + d).powi(2) + y * y <= 1.0 {
                    hits += 1;
                }
            }
            let mc = 4.0 * hits as f64 / draws as f64 / PI;
            assert!(
                (m.values[i] - mc).abs() < 5e-3,
                "k={k}: {} vs {mc}",
                m.values[i]
            );
        }
    }

    #[test]
    fn tilt_and_piston_do_not_change_the_curve() {
        let p = pupil();
        let k = linspace(p.cutoff(LAMBDA), 17);
        let base = coeffs(&[(4, 0.2e-6), (8, 0.05e-6)]);
        let tilted = coeffs(&[
            (0, 3e-6),
            (1, -2.5e-6),
            (2, 1e-3),
            (4, 0.2e-6),
            (8, 0.05e-6),
        ]);
        let a = mtf_mono_with(
            &base,
            &p,
            LAMBDA,
            &k,
            Orientation::from_angle_deg(20.0),
            &fast(),
        )
        .unwrap();
        let b = mtf_mono_with(
            &tilted,
            &p,
            LAMBDA,
            &k,
            Orientation::from_angle_deg(20.0),
            &fast(),
        )
        .unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn aberrations_never_exceed_diffraction_limit() {
        let p = pupil();
        let k = linspace(p.cutoff(LAMBDA), 21);
        let ideal = mtf_mono_with(
            &coeffs(&[]),
            &p,
            LAMBDA,
            &k,
            Orientation::horizontal(),
            &fast(),
        )
        .unwrap();
        let c = coeffs(&[(3, 0.1e-6), (4, -0.15e-6), (6, 0.07e-6), (9, 0.05e-6)]);
        let ab = mtf_mono_with(&c, &p, LAMBDA, &k, Orientation::horizontal(), &fast()).unwrap();
        for (a, i) in ab.values.iter().zip(&ideal.values) {
            assert!(*a <= i + 1e-9);
        }
        assert!(ab.values[5] < ideal.values[5]);
    }

    #[test]
    fn undersampled_phase_is_an_accuracy_error() {
        // Several waves of defocus are not resolved by the half-resolution raster.
        let c = coeffs(&[(4, 4e-6)]);
        let p = pupil();
        let opts = MtfOptions {
            resolution: 64,
            accuracy_tolerance: Some(1e-3),
        };
        let r = mtf_mono_with(
            &c,
            &p,
            LAMBDA,
            &[0.05 * p.cutoff(LAMBDA), 0.2 * p.cutoff(LAMBDA)],
            Orientation::horizontal(),
            &opts,
        );
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }

    #[test]
    fn polychromatic_line_spectra() {
        let p = pupil();
        let k = linspace(0.9 / (450e-9 * 2.0), 9);
        let c = coeffs(&[(4, 0.1e-6)]);
        let o = Orientation::horizontal();
        let single = mtf_poly_with(
            &c,
            &p,
            &SpectralDensity::monochromatic(LAMBDA).unwrap(),
            &k,
            o,
            &fast(),
        )
        .unwrap();
        let mono = mtf_mono_with(&c, &p, LAMBDA, &k, o, &fast()).unwrap();
        assert_eq!(single.values, mono.values);

        let two = SpectralDensity::new(vec![(450e-9, 3.0), (650e-9, 3.0)]).unwrap();
        let poly = mtf_poly_with(&c, &p, &two, &k, o, &fast()).unwrap();
        let a = mtf_mono_with(&c, &p, 450e-9, &k, o, &fast()).unwrap();
        let b = mtf_mono_with(&c, &p, 650e-9, &k, o, &fast()).unwrap();
        for i in 0..k.len() {
            assert!((poly.values[i] - 0.5 * (a.values[i] + b.values[i])).abs() < 1e-12);
            assert!(poly.values[i] <= a.values[i].max(b.values[i]) + 1e-12);
        }
    }

    #[test]
    fn spectral_density_validation() {
        assert!(SpectralDensity::new(vec![]).is_err());
        assert!(SpectralDensity::new(vec![(500e-9, -1.0)]).is_err());
        assert!(SpectralDensity::new(vec![(500e-9, 0.0)]).is_err());
        let d =
            SpectralDensity::from_density(&[(500e-9, 1.0), (550e-9, 1.0), (600e-9, 1.0)]).unwrap();
        assert!((d.total_weight() - 1.0).abs() < 1e-12);
        assert!((d.lines()[1].1 - 0.5).abs() < 1e-12);
        assert!((d.mean_wavelength() - 550e-9).abs() < 1e-18);
    }

    #[test]
    fn curve_helpers() {
        let m = MTFCurve {
            frequencies: vec![0.0, 1000.0, 2000.0],
            values: vec![1.0, 0.5, 0.0],
            orientation: Orientation::horizontal(),
            wavelength_m: LAMBDA,
        };
        assert_eq!(m.value_at(500.0), Some(0.75));
        assert_eq!(m.value_at(3000.0), None);
        assert_eq!(m.frequencies_cyc_per_mm(), vec![0.0, 1.0, 2.0]);
        assert!((cycles_per_degree(100e3, 6e-3) - 600.0 * 1f64.to_radians().tan()).abs() < 1e-9);
    }
}
