//! Zernike polynomials up to the third radial order, ANSI single-index order.
//!
//! | j | Cartesian form                 | harmonic |
//! |---|--------------------------------|----------|
//! | 0 | 1                              | yes      |
//! | 1 | 2y                             | yes      |
//! | 2 | 2x                             | yes      |
//! | 3 | 2√6 xy                         | yes      |
//! | 4 | √3 (2x² + 2y² − 1)             | no       |
//! | 5 | √6 (x² − y²)                   | yes      |
//! | 6 | √8 (3x²y − y³)                 | yes      |
//! | 7 | √8 (3x²y + 3y³ − 2y)           | no       |
//! | 8 | √8 (3x³ + 3xy² − 2x)           | no       |
//! | 9 | √8 (x³ − 3xy²)                 | yes      |
//!
//! The normalization makes `<Z_i, Z_j> = pi * delta_ij` on the unit disk with
//! the plain area measure. The Cartesian forms are canonical; the polar forms
//! are provided for cross-checking.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DiskGrid, WavefrontMap};
use crate::quadrature::DiskQuadrature;

/// Highest ANSI index with a closed form here.
pub const MAX_INDEX: usize = 9;

const S3: f64 = 1.732_050_807_568_877_2;
const S6: f64 = 2.449_489_742_783_178;
const S8: f64 = 2.828_427_124_746_190_3;

/// Smallest grid (samples across the diameter) accepted by [`decompose`].
pub const MIN_DECOMPOSE_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZernikeIndex(usize);

impl ZernikeIndex {
    pub fn new(index: usize) -> Result<Self> {
        if index > MAX_INDEX {
            return Err(Error::UnsupportedIndex {
                index,
                max: MAX_INDEX,
            });
        }
        Ok(Self(index))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ZernikeIndex> {
        (0..=MAX_INDEX).map(ZernikeIndex)
    }
}

impl TryFrom<usize> for ZernikeIndex {
    type Error = Error;
    fn try_from(value: usize) -> Result<Self> {
        Self::new(value)
    }
}

/// Point in the closed unit disk, normalized Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    x: f64,
    y: f64,
}

impl DiskPoint {
    const SLACK: f64 = 1e-12;

    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || x * x + y * y > 1.0 + Self::SLACK {
            return Err(Error::OutsideDisk { x, y });
        }
        Ok(Self { x, y })
    }

    pub fn from_polar(rho: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0 + Self::SLACK).contains(&rho) {
            return Err(Error::OutsideDisk {
                x: rho * phi.cos(),
                y: rho * phi.sin(),
            });
        }
        Self::new(rho * phi.cos(), rho * phi.sin())
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn rho(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn phi(&self) -> f64 {
        let p = self.y.atan2(self.x);
        if p < 0.0 {
            p + std::f64::consts::TAU
        } else {
            p
        }
    }
}

/// `Z_j(x, y)` without domain checks.
#[inline]
pub(crate) fn value_xy(j: usize, x: f64, y: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => 2.0 * y,
        2 => 2.0 * x,
        3 => 2.0 * S6 * x * y,
        4 => S3 * (2.0 * x * x + 2.0 * y * y - 1.0),
        5 => S6 * (x * x - y * y),
        6 => S8 * (3.0 * x * x * y - y * y * y),
        7 => S8 * (3.0 * x * x * y + 3.0 * y * y * y - 2.0 * y),
        8 => S8 * (3.0 * x * x * x + 3.0 * x * y * y - 2.0 * x),
        9 => S8 * (x * x * x - 3.0 * x * y * y),
        _ => unreachable!("index checked by caller"),
    }
}

#[inline]
pub(crate) fn gradient_xy(j: usize, x: f64, y: f64) -> (f64, f64) {
    match j {
        0 => (0.0, 0.0),
        1 => (0.0, 2.0),
        2 => (2.0, 0.0),
        3 => (2.0 * S6 * y, 2.0 * S6 * x),
        4 => (4.0 * S3 * x, 4.0 * S3 * y),
        5 => (2.0 * S6 * x, -2.0 * S6 * y),
        6 => (6.0 * S8 * x * y, S8 * (3.0 * x * x - 3.0 * y * y)),
        7 => (6.0 * S8 * x * y, S8 * (3.0 * x * x + 9.0 * y * y - 2.0)),
        8 => (S8 * (9.0 * x * x + 3.0 * y * y - 2.0), 6.0 * S8 * x * y),
        9 => (S8 * (3.0 * x * x - 3.0 * y * y), -6.0 * S8 * x * y),
        _ => unreachable!("index checked by caller"),
    }
}

/// `[d2/dx2, d2/dxdy, d2/dy2]`.
#[inline]
pub(crate) fn hessian_xy(j: usize, x: f64, y: f64) -> [f64; 3] {
    match j {
        0..=2 => [0.0; 3],
        3 => [0.0, 2.0 * S6, 0.0],
        4 => [4.0 * S3, 0.0, 4.0 * S3],
        5 => [2.0 * S6, 0.0, -2.0 * S6],
        6 => [6.0 * S8 * y, 6.0 * S8 * x, -6.0 * S8 * y],
        7 => [6.0 * S8 * y, 6.0 * S8 * x, 18.0 * S8 * y],
        8 => [18.0 * S8 * x, 6.0 * S8 * y, 6.0 * S8 * x],
        9 => [6.0 * S8 * x, -6.0 * S8 * y, -6.0 * S8 * x],
        _ => unreachable!("index checked by caller"),
    }
}

pub fn eval(index: ZernikeIndex, p: DiskPoint) -> f64 {
    value_xy(index.0, p.x, p.y)
}

/// Polar form, used to cross-check the Cartesian table.
pub fn eval_polar(index: ZernikeIndex, rho: f64, phi: f64) -> f64 {
    let r2 = rho * rho;
    let r3 = r2 * rho;
    match index.0 {
        0 => 1.0,
        1 => 2.0 * rho * phi.sin(),
        2 => 2.0 * rho * phi.cos(),
        3 => S6 * r2 * (2.0 * phi).sin(),
        4 => S3 * (2.0 * r2 - 1.0),
        5 => S6 * r2 * (2.0 * phi).cos(),
        6 => S8 * r3 * (3.0 * phi).sin(),
        7 => S8 * (3.0 * r3 - 2.0 * rho) * phi.sin(),
        8 => S8 * (3.0 * r3 - 2.0 * rho) * phi.cos(),
        9 => S8 * r3 * (3.0 * phi).cos(),
        _ => unreachable!(),
    }
}

/// Partial derivatives with respect to the normalized coordinates.
pub fn eval_gradient(index: ZernikeIndex, p: DiskPoint) -> (f64, f64) {
    gradient_xy(index.0, p.x, p.y)
}

/// Second derivatives `[xx, xy, yy]` with respect to normalized coordinates.
pub fn eval_hessian(index: ZernikeIndex, p: DiskPoint) -> [f64; 3] {
    hessian_xy(index.0, p.x, p.y)
}

/// Whether `Z_j` satisfies the Laplace equation.
pub fn is_harmonic(index: ZernikeIndex) -> bool {
    !matches!(index.0, 4 | 7 | 8)
}

/// Coefficients `c_0..c_N` in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeCoefficients {
    values: Vec<f64>,
}

/// One entry of the JSON coefficient file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub index: usize,
    pub value_m: f64,
}

impl ZernikeCoefficients {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("coefficient vector is empty".into()));
        }
        if values.len() > MAX_INDEX + 1 {
            return Err(Error::UnsupportedIndex {
                index: values.len() - 1,
                max: MAX_INDEX,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coefficient c{i} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(max_index: usize) -> Result<Self> {
        ZernikeIndex::new(max_index)?;
        Ok(Self {
            values: vec![0.0; max_index + 1],
        })
    }

    /// Builds from sparse `(index, value)` pairs; unspecified entries are zero.
    pub fn from_entries(entries: &[CoefficientEntry]) -> Result<Self> {
        let max = entries.iter().map(|e| e.index).max().unwrap_or(0);
        ZernikeIndex::new(max)?;
        let mut values = vec![0.0; max + 1];
        let mut seen = vec![false; max + 1];
        for e in entries {
            if seen[e.index] {
                return Err(Error::InvalidInput(format!("duplicate index {}", e.index)));
            }
            seen[e.index] = true;
            values[e.index] = e.value_m;
        }
        Self::new(values)
    }

    pub fn entries(&self) -> Vec<CoefficientEntry> {
        self.values
            .iter()
            .enumerate()
            .map(|(index, &value_m)| CoefficientEntry { index, value_m })
            .collect()
    }

    pub fn max_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coefficient `c_j`, zero beyond `max_index`.
    pub fn get(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, j: usize, v: f64) -> Result<()> {
        ZernikeIndex::new(j)?;
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coefficient c{j} is not finite"
            )));
        }
        if j >= self.values.len() {
            self.values.resize(j + 1, 0.0);
        }
        self.values[j] = v;
        Ok(())
    }

    /// Sum of two expansions, padded to the longer one.
    pub fn plus(&self, other: &Self) -> Self {
        let n = self.values.len().max(other.values.len());
        Self {
            values: (0..n).map(|j| self.get(j) + other.get(j)).collect(),
        }
    }

    pub(crate) fn value_xy(&self, x: f64, y: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| c * value_xy(j, x, y))
            .sum()
    }

    pub(crate) fn gradient_xy(&self, x: f64, y: f64) -> (f64, f64) {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .fold((0.0, 0.0), |(gx, gy), (j, c)| {
                let (dx, dy) = gradient_xy(j, x, y);
                (gx + c * dx, gy + c * dy)
            })
    }

    /// `W(p) = sum c_n Z_n(p)`.
    pub fn evaluate(&self, p: DiskPoint) -> f64 {
        self.value_xy(p.x, p.y)
    }

    pub fn gradient(&self, p: DiskPoint) -> (f64, f64) {
        self.gradient_xy(p.x, p.y)
    }
}

fn default_quadrature() -> &'static DiskQuadrature {
    static Q: OnceLock<DiskQuadrature> = OnceLock::new();
    Q.get_or_init(DiskQuadrature::default)
}

fn coarse_quadrature() -> &'static DiskQuadrature {
    static Q: OnceLock<DiskQuadrature> = OnceLock::new();
    Q.get_or_init(|| {
        DiskQuadrature::new(
            DiskQuadrature::DEFAULT_RADIAL / 2,
            DiskQuadrature::DEFAULT_ANGULAR / 2,
        )
    })
}

/// Relative tolerance for [`inner_product`]'s convergence check.
pub const INNER_PRODUCT_TOLERANCE: f64 = 1e-8;

/// `<f, g> = int_0^{2pi} int_0^1 f g rho drho dphi` by tensor-product quadrature.
///
/// The same integral on a half-resolution rule serves as a residual
/// estimate; disagreement beyond [`INNER_PRODUCT_TOLERANCE`] is an error.
pub fn inner_product<F, G>(f: F, g: G) -> Result<f64>
where
    F: Fn(DiskPoint) -> f64,
    G: Fn(DiskPoint) -> f64,
{
    inner_product_with(
        default_quadrature(),
        coarse_quadrature(),
        INNER_PRODUCT_TOLERANCE,
        f,
        g,
    )
}

pub fn inner_product_with<F, G>(
    fine: &DiskQuadrature,
    coarse: &DiskQuadrature,
    tolerance: f64,
    f: F,
    g: G,
) -> Result<f64>
where
    F: Fn(DiskPoint) -> f64,
    G: Fn(DiskPoint) -> f64,
{
    let integrand = |x: f64, y: f64| {
        let p = DiskPoint { x, y };
        f(p) * g(p)
    };
    let hi = fine.integrate(integrand);
    let lo = coarse.integrate(integrand);
    let residual = (hi - lo).abs();
    if !hi.is_finite() || residual > tolerance * (1.0 + hi.abs()) {
        return Err(Error::Accuracy { residual });
    }
    Ok(hi)
}

/// Convenience: `<Z_i, Z_j>`.
pub fn basis_inner_product(i: ZernikeIndex, j: ZernikeIndex) -> Result<f64> {
    inner_product(|p| eval(i, p), |p| eval(j, p))
}

/// Result of projecting a sampled map onto the basis.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub coefficients: ZernikeCoefficients,
    /// RMS of `W - synthesize(c)` over valid samples, meters.
    pub residual_rms_m: f64,
}

/// Projects a sampled map onto `Z_0..Z_max_index`.
///
/// The discrete inner products over the masked grid are corrected by the
/// discrete Gram matrix of the basis on the same samples, so an expansion
/// that lies in the span is recovered exactly; as the grid is refined this
/// converges to `c_n = <W, Z_n> / pi`.
pub fn decompose(w: &WavefrontMap, max_index: usize) -> Result<Decomposition> {
    ZernikeIndex::new(max_index)?;
    if w.n() < MIN_DECOMPOSE_SAMPLES {
        return Err(Error::Resolution {
            what: "wavefront map (samples across diameter)",
            required: MIN_DECOMPOSE_SAMPLES,
            actual: w.n(),
        });
    }
    let k = max_index + 1;
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    let mut z = vec![0.0; k];
    for (_, _, x, y, v) in w.iter_valid() {
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = value_xy(j, x, y);
        }
        for a in 0..k {
            rhs[a] += v * z[a];
            for b in a..k {
                gram[(a, b)] += z[a] * z[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let chol = gram.cholesky().ok_or(Error::Resolution {
        what: "valid samples for decomposition",
        required: k,
        actual: w.valid_count(),
    })?;
    let c = chol.solve(&rhs);
    let coefficients = ZernikeCoefficients::new(c.iter().copied().collect())?;
    let (mut ss, mut count) = (0.0, 0usize);
    for (_, _, x, y, v) in w.iter_valid() {
        let r = v - coefficients.value_xy(x, y);
        ss += r * r;
        count += 1;
    }
    Ok(Decomposition {
        coefficients,
        residual_rms_m: (ss / count.max(1) as f64).sqrt(),
    })
}

/// Samples `W = sum c_n Z_n` on `grid`.
pub fn synthesize(c: &ZernikeCoefficients, grid: DiskGrid) -> WavefrontMap {
    WavefrontMap::from_fn(grid, |x, y| c.value_xy(x, y))
}
