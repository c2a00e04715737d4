//! Synthetic slanted-edge targets.
//!
//! A step edge through the image centre, tilted from vertical, is blurred by
//! a Gaussian or a sampled PSF and integrated exactly over each square pixel.
//! Pixel `(r, c)` covers `[c, c+1] x [r, r+1]` in pixel units.
//!
//! Because the blurred edge depends on position only through the signed
//! distance `s` to the edge, the pixel integral reduces to second
//! antiderivatives `H` of the edge spread function evaluated at the four
//! corners: `(H(s11) - H(s10) - H(s01) + H(s00)) / (a b)`. On the bright
//! side the same sum is formed from the complementary antiderivative to avoid
//! cancelling large quadratic terms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::mtf::Psf;

pub const MIN_IMAGE_SIZE: usize = 64;
pub const MIN_EDGE_ANGLE_DEG: f64 = 2.0;
pub const MAX_EDGE_ANGLE_DEG: f64 = 10.0;
pub const DARK_LEVEL: f64 = 0.1;
pub const BRIGHT_LEVEL: f64 = 0.9;
/// Fraction of PSF energy that has to fit inside the image.
const PSF_ENERGY_FRACTION: f64 = 0.99;
/// Projection bins per PSF sample when building the edge spread function.
const PSF_SUBBINS: f64 = 4.0;

#[derive(Debug, Clone, Copy)]
pub enum Blur<'a> {
    None,
    Gaussian { sigma_px: f64 },
    Psf(&'a Psf),
}

/// Grayscale raster in linear intensity, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
    pub pixel_pitch_m: f64,
    /// Nominal angle of the edge from vertical, when known.
    pub edge_angle_deg: Option<f64>,
}

impl EdgeImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, pixel_pitch_m: f64) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "image has {} pixels, expected {width}x{height}",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(
                "image contains non-finite pixels".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
            pixel_pitch_m,
            edge_angle_deg: None,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub size: usize,
    pub angle_deg: f64,
    pub pixel_pitch_m: f64,
    /// Standard deviation of additive noise, in units of full scale.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for EdgeSpec {
    fn default() -> Self {
        Self {
            size: 128,
            angle_deg: 5.0,
            pixel_pitch_m: 3e-6,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Second antiderivatives of an edge spread function `E`: `h'' = E` with
/// `h(-inf) = 0`, and `hc'' = 1 - E` with `hc(+inf) = 0`.
trait EdgeProfile {
    fn h(&self, s: f64) -> f64;
    fn hc(&self, s: f64) -> f64;
}

struct Step;

impl EdgeProfile for Step {
    fn h(&self, s: f64) -> f64 {
        let p = s.max(0.0);
        0.5 * p * p
    }

    fn hc(&self, s: f64) -> f64 {
        self.h(-s)
    }
}

struct GaussianEdge {
    sigma: f64,
}

pub(crate) fn normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl EdgeProfile for GaussianEdge {
    fn h(&self, s: f64) -> f64 {
        let t = s / self.sigma;
        self.sigma * self.sigma * (0.5 * (t * t + 1.0) * normal_cdf(t) + 0.5 * t * normal_pdf(t))
    }

    fn hc(&self, s: f64) -> f64 {
        self.h(-s)
    }
}

/// Edge spread of a sampled PSF: samples projected onto the edge normal and
/// histogrammed, giving a piecewise-linear ESF integrated exactly.
struct TabulatedEdge {
    forward: Table,
    /// Same distribution mirrored, for the complementary antiderivative.
    mirrored: Table,
}

struct Table {
    start: f64,
    width: f64,
    mass: Vec<f64>,
    cum: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl TabulatedEdge {
    fn from_psf(psf: &Psf, normal: (f64, f64), pixel_pitch_m: f64) -> Self {
        let n = psf.size();
        let scale = 1.0 / pixel_pitch_m;
        let width = psf.pixel_pitch_m() * scale / PSF_SUBBINS;
        let proj: Vec<(f64, f64)> = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| {
                let (x, y) = psf.position_m(r, c);
                ((x * normal.0 + y * normal.1) * scale, psf.get(r, c))
            })
            .collect();
        let lo = proj.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - width;
        let hi = proj.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + width;
        let bins = ((hi - lo) / width).ceil() as usize + 1;
        let mut mass = vec![0.0; bins];
        for (s, w) in proj {
            mass[((s - lo) / width) as usize] += w;
        }
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= total);
        let mirrored_mass = mass.iter().rev().copied().collect();
        Self {
            forward: Table::new(lo, width, mass),
            mirrored: Table::new(-(lo + bins as f64 * width), width, mirrored_mass),
        }
    }
}

impl Table {
    fn new(start: f64, width: f64, mass: Vec<f64>) -> Self {
        let bins = mass.len();
        // ESF, its integral and double integral at the left edge of each bin.
        let (mut cum, mut first, mut second) = (
            vec![0.0; bins + 1],
            vec![0.0; bins + 1],
            vec![0.0; bins + 1],
        );
        for i in 0..bins {
            let w = mass[i];
            cum[i + 1] = cum[i] + w;
            first[i + 1] = first[i] + width * (cum[i] + 0.5 * w);
            second[i + 1] = second[i] + width * first[i] + width * width * (0.5 * cum[i] + w / 6.0);
        }
        Self {
            start,
            width,
            mass,
            cum,
            first,
            second,
        }
    }

    fn h(&self, s: f64) -> f64 {
        let x = s - self.start;
        if x <= 0.0 {
            return 0.0;
        }
        let bins = self.mass.len();
        let i = (x / self.width) as usize;
        if i >= bins {
            let t = x - bins as f64 * self.width;
            let (c, f, g) = (self.cum[bins], self.first[bins], self.second[bins]);
            return g + f * t + 0.5 * c * t * t;
        }
        let t = x - i as f64 * self.width;
        let rho = self.mass[i] / self.width;
        self.second[i] + self.first[i] * t + 0.5 * self.cum[i] * t * t + rho * t * t * t / 6.0
    }
}

impl EdgeProfile for TabulatedEdge {
    fn h(&self, s: f64) -> f64 {
        self.forward.h(s)
    }

    fn hc(&self, s: f64) -> f64 {
        self.mirrored.h(-s)
    }
}

fn validate(spec: &EdgeSpec) -> Result<()> {
    if spec.size < MIN_IMAGE_SIZE {
        return Err(Error::Resolution {
            what: "edge image side",
            required: MIN_IMAGE_SIZE,
            actual: spec.size,
        });
    }
    let a = spec.angle_deg.abs();
    if !(MIN_EDGE_ANGLE_DEG..=MAX_EDGE_ANGLE_DEG).contains(&a) {
        return Err(Error::InvalidInput(format!(
            "edge angle {} deg outside [{MIN_EDGE_ANGLE_DEG}, {MAX_EDGE_ANGLE_DEG}]",
            spec.angle_deg
        )));
    }
    if !(spec.pixel_pitch_m.is_finite() && spec.pixel_pitch_m > 0.0) {
        return Err(Error::InvalidInput("pixel pitch must be positive".into()));
    }
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidInput(
            "noise sigma must be nonnegative".into(),
        ));
    }
    Ok(())
}

pub fn render_edge(blur: Blur<'_>, spec: &EdgeSpec) -> Result<EdgeImage> {
    validate(spec)?;
    let size = spec.size;
    let a = spec.angle_deg.to_radians();
    // Unit normal pointing to the bright side; the edge runs downward tilted
    // by `a` towards +x.
    let normal = (a.cos(), -a.sin());
    let profile: Box<dyn EdgeProfile> = match blur {
        Blur::None => Box::new(Step),
        Blur::Gaussian { sigma_px } => {
            if !(sigma_px.is_finite() && sigma_px > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "blur sigma must be positive, got {sigma_px}"
                )));
            }
            if 6.0 * sigma_px > size as f64 {
                return Err(Error::Geometry(format!(
                    "Gaussian blur of sigma {sigma_px} px is wider than the {size} px image"
                )));
            }
            Box::new(GaussianEdge { sigma: sigma_px })
        }
        Blur::Psf(psf) => {
            let w = psf.ensquared_width_m(PSF_ENERGY_FRACTION) / spec.pixel_pitch_m;
            if w > size as f64 {
                return Err(Error::Geometry(format!(
                    "PSF spans {w:.1} px, wider than the {size} px image"
                )));
            }
            Box::new(TabulatedEdge::from_psf(psf, normal, spec.pixel_pitch_m))
        }
    };
    let centre = 0.5 * size as f64;
    let dist = |u: f64, v: f64| (u - centre) * normal.0 + (v - centre) * normal.1;
    let inv_area = 1.0 / (normal.0 * normal.1);
    let mut pixels = Vec::with_capacity(size * size);
    for r in 0..size {
        let (v0, v1) = (r as f64, r as f64 + 1.0);
        for c in 0..size {
            let (u0, u1) = (c as f64, c as f64 + 1.0);
            let s = [dist(u1, v1), dist(u1, v0), dist(u0, v1), dist(u0, v0)];
            let mixed = |f: &dyn Fn(f64) -> f64| (f(s[0]) - f(s[1]) - f(s[2]) + f(s[3])) * inv_area;
            let coverage = if s.iter().all(|&x| x > 0.0) {
                1.0 - mixed(&|x| profile.hc(x))
            } else {
                mixed(&|x| profile.h(x))
            };
            let coverage = coverage.clamp(0.0, 1.0);
            pixels.push(DARK_LEVEL + (BRIGHT_LEVEL - DARK_LEVEL) * coverage);
        }
    }
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        for p in &mut pixels {
            *p += normal.sample(&mut rng);
        }
    }
    Ok(EdgeImage {
        width: size,
        height: size,
        pixels,
        pixel_pitch_m: spec.pixel_pitch_m,
        edge_angle_deg: Some(spec.angle_deg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtf::{psf_from_pupil, PsfGrid, PupilSpec};
    use crate::quadrature::gauss_legendre;
    use crate::zernike::ZernikeCoefficients;

    fn spec(angle: f64) -> EdgeSpec {
        EdgeSpec {
            size: 64,
            angle_deg: angle,
            ..EdgeSpec::default()
        }
    }

    #[test]
    fn unblurred_edge_is_two_level_except_on_the_edge() {
        let img = render_edge(Blur::None, &spec(5.0)).unwrap();
        let partial = img
            .pixels
            .iter()
            .filter(|&&p| (p - DARK_LEVEL).abs() > 1e-12 && (p - BRIGHT_LEVEL).abs() > 1e-12)
            .count();
        // At most two partially covered pixels per row.
        assert!((64..=2 * 64).contains(&partial));
        assert!((img.get(10, 0) - DARK_LEVEL).abs() < 1e-12);
        assert!((img.get(10, 63) - BRIGHT_LEVEL).abs() < 1e-12);
    }

    // Pixel averages of the Gaussian edge by 2-D Gauss-Legendre quadrature.
    #[test]
    fn gaussian_edge_matches_pixel_quadrature() {
        let s = spec(5.0);
        let img = render_edge(Blur::Gaussian { sigma_px: 1.0 }, &s).unwrap();
        let (nodes, weights) = gauss_legendre(12);
        let a = 5f64.to_radians();
        let mut worst = 0.0f64;
        for r in [0usize, 17, 31, 32, 50, 63] {
            for c in 20..44 {
                let mut acc = 0.0;
                for (i, xi) in nodes.iter().enumerate() {
                    for (j, yj) in nodes.iter().enumerate() {
                        let u = c as f64 + 0.5 + 0.5 * xi;
                        let v = r as f64 + 0.5 + 0.5 * yj;
                        let d = (u - 32.0) * a.cos() - (v - 32.0) * a.sin();
                        acc += 0.25 * weights[i] * weights[j] * normal_cdf(d);
                    }
                }
                let want = DARK_LEVEL + (BRIGHT_LEVEL - DARK_LEVEL) * acc;
                worst = worst.max((img.get(r, c) - want).abs());
            }
        }
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn psf_edge_matches_gaussian_for_gaussian_like_blur() {
        // Pupil blur sampled finely enough gives a smooth monotone edge.
        let pupil = PupilSpec::from_lens(6e-3, 2.0).unwrap();
        let psf = psf_from_pupil(
            &ZernikeCoefficients::zeros(4).unwrap(),
            &pupil,
            550e-9,
            PsfGrid {
                pupil_samples: 64,
                size: 256,
            },
        )
        .unwrap();
        let s = EdgeSpec {
            pixel_pitch_m: 1.1e-6,
            ..spec(5.0)
        };
        let img = render_edge(Blur::Psf(&psf), &s).unwrap();
        for r in 0..64 {
            let row = &img.pixels[r * 64..(r + 1) * 64];
            assert!(row[0] < 0.11 && row[63] > 0.89);
        }
        let mid = &img.pixels[32 * 64..33 * 64];
        assert!(mid.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn same_seed_same_image() {
        let s = EdgeSpec {
            noise_sigma: 0.01,
            seed: 7,
            ..spec(4.0)
        };
        let a = render_edge(Blur::Gaussian { sigma_px: 1.0 }, &s).unwrap();
        let b = render_edge(Blur::Gaussian { sigma_px: 1.0 }, &s).unwrap();
        assert_eq!(a, b);
        let c = render_edge(Blur::Gaussian { sigma_px: 1.0 }, &EdgeSpec { seed: 8, ..s }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_requests() {
        assert!(matches!(
            render_edge(
                Blur::None,
                &EdgeSpec {
                    size: 32,
                    ..spec(5.0)
                }
            ),
            Err(Error::Resolution { .. })
        ));
        assert!(render_edge(Blur::None, &spec(1.0)).is_err());
        assert!(render_edge(Blur::None, &spec(12.0)).is_err());
        assert!(matches!(
            render_edge(Blur::Gaussian { sigma_px: 20.0 }, &spec(5.0)),
            Err(Error::Geometry(_))
        ));
        let pupil = PupilSpec::from_lens(6e-3, 2.0).unwrap();
        let psf = psf_from_pupil(
            &ZernikeCoefficients::zeros(4).unwrap(),
            &pupil,
            550e-9,
            PsfGrid::default(),
        )
        .unwrap();
        // Pitch so fine that the PSF core covers more than the image.
        let tiny = EdgeSpec {
            pixel_pitch_m: 0.01e-6,
            ..spec(5.0)
        };
        assert!(matches!(
            render_edge(Blur::Psf(&psf), &tiny),
            Err(Error::Geometry(_))
        ));
    }
}
