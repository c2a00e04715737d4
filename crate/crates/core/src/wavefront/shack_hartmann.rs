//! Shack–Hartmann forward model and modal least-squares reconstruction.
//!
//! A lenslet at normalized position `x_i` focuses its wavefront snippet onto
//! a spot displaced by `d`. The local slope of the optical path difference is
//! `beta = d / sqrt(f_sh^2 + d^2)`, and in the Zernike expansion
//! `beta = (1 / rho_a) * M * c` where `M` stacks the x- then y-derivatives of
//! `Z_first..Z_N` at every lenslet.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::zernike::{self, ZernikeCoefficients, ZernikeIndex};

/// First coefficient fitted by default; lower orders are piston, tilt and
/// oblique astigmatism, which the design matrix omits.
pub const DEFAULT_FIRST_INDEX: usize = 4;

/// Gramian condition number above which a layout is declared degenerate.
pub const MAX_GRAMIAN_CONDITION: f64 = 1e12;

/// Default standard deviation of synthetic spot-displacement noise, meters.
pub const DEFAULT_DISPLACEMENT_NOISE_M: f64 = 0.1e-6;

/// Spot displacements measured behind a lenslet array.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    lenslets: Vec<(f64, f64)>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    f_sh_m: f64,
    aperture_radius_m: f64,
}

impl GradientField {
    pub fn new(
        lenslets: Vec<(f64, f64)>,
        dx: Vec<f64>,
        dy: Vec<f64>,
        f_sh_m: f64,
        aperture_radius_m: f64,
    ) -> Result<Self> {
        if lenslets.is_empty() {
            return Err(Error::InvalidInput("gradient field has no lenslets".into()));
        }
        if dx.len() != lenslets.len() || dy.len() != lenslets.len() {
            return Err(Error::InvalidInput(format!(
                "{} lenslets but {}/{} displacements",
                lenslets.len(),
                dx.len(),
                dy.len()
            )));
        }
        if !(f_sh_m.is_finite() && f_sh_m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lenslet focal length must be positive, got {f_sh_m}"
            )));
        }
        if !(aperture_radius_m.is_finite() && aperture_radius_m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "aperture radius must be positive, got {aperture_radius_m}"
            )));
        }
        for (i, &(x, y)) in lenslets.iter().enumerate() {
            if !(x.is_finite() && y.is_finite()) || x * x + y * y > 1.0 + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "lenslet {i} at ({x}, {y}) lies outside the unit disk"
                )));
            }
        }
        if dx.iter().chain(&dy).any(|d| !d.is_finite()) {
            return Err(Error::InvalidInput("non-finite spot displacement".into()));
        }
        Ok(Self {
            lenslets,
            dx,
            dy,
            f_sh_m,
            aperture_radius_m,
        })
    }

    pub fn lenslets(&self) -> &[(f64, f64)] {
        &self.lenslets
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    pub fn f_sh_m(&self) -> f64 {
        self.f_sh_m
    }

    pub fn aperture_radius_m(&self) -> f64 {
        self.aperture_radius_m
    }

    pub fn len(&self) -> usize {
        self.lenslets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lenslets.is_empty()
    }

    /// Local slopes `[beta_x(1..m), beta_y(1..m)]`.
    pub fn slopes(&self) -> Vec<f64> {
        let f2 = self.f_sh_m * self.f_sh_m;
        self.dx
            .iter()
            .chain(&self.dy)
            .map(|d| d / (f2 + d * d).sqrt())
            .collect()
    }

    /// Copy with additive Gaussian noise on every displacement component.
    pub fn with_displacement_noise(&self, sigma_m: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma_m)
            .map_err(|e| Error::InvalidInput(format!("noise sigma {sigma_m}: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for d in out.dx.iter_mut().chain(out.dy.iter_mut()) {
            *d += normal.sample(&mut rng);
        }
        Ok(out)
    }
}

/// Output of [`sh_forward`].
#[derive(Debug, Clone)]
pub struct ForwardModel {
    pub field: GradientField,
    /// Nonzero input coefficients below [`DEFAULT_FIRST_INDEX`]. They shift
    /// spots (image displacement) but are outside the default fit.
    pub distortion_terms: Vec<usize>,
}

/// Spot displacements produced by wavefront `c` at the given lenslets.
pub fn sh_forward(
    c: &ZernikeCoefficients,
    lenslets: &[(f64, f64)],
    f_sh_m: f64,
    aperture_radius_m: f64,
) -> Result<ForwardModel> {
    if !(aperture_radius_m.is_finite() && aperture_radius_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "aperture radius must be positive, got {aperture_radius_m}"
        )));
    }
    let mut dx = Vec::with_capacity(lenslets.len());
    let mut dy = Vec::with_capacity(lenslets.len());
    for (i, &(x, y)) in lenslets.iter().enumerate() {
        let (gx, gy) = c.gradient_xy(x, y);
        for (g, out) in [(gx, &mut dx), (gy, &mut dy)] {
            let beta = g / aperture_radius_m;
            if beta.is_nan() || beta.abs() >= 1.0 {
                return Err(Error::NonphysicalGradient {
                    lenslet: i,
                    beta: beta.abs(),
                });
            }
            out.push(f_sh_m * beta / (1.0 - beta * beta).sqrt());
        }
    }
    let distortion_terms = (0..DEFAULT_FIRST_INDEX.min(c.values().len()))
        .filter(|&j| c.get(j) != 0.0)
        .collect();
    let field = GradientField::new(lenslets.to_vec(), dx, dy, f_sh_m, aperture_radius_m)?;
    Ok(ForwardModel {
        field,
        distortion_terms,
    })
}

/// Zernike-gradient design matrix, `2m x (N - first + 1)`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    first_index: usize,
    max_index: usize,
    matrix: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(lenslets: &[(f64, f64)], first_index: usize, max_index: usize) -> Result<Self> {
        ZernikeIndex::new(max_index)?;
        if first_index == 0 || first_index > max_index {
            return Err(Error::InvalidInput(format!(
                "fit range Z{first_index}..Z{max_index} is empty or includes piston"
            )));
        }
        let m = lenslets.len();
        let k = max_index - first_index + 1;
        let mut matrix = DMatrix::zeros(2 * m, k);
        for (i, &(x, y)) in lenslets.iter().enumerate() {
            for col in 0..k {
                let (gx, gy) = zernike::gradient_xy(first_index + col, x, y);
                matrix[(i, col)] = gx;
                matrix[(m + i, col)] = gy;
            }
        }
        Ok(Self {
            first_index,
            max_index,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn gramian(&self) -> DMatrix<f64> {
        self.matrix.transpose() * &self.matrix
    }
}

/// Output of [`reconstruct`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// `c_0..c_N`; entries listed in `unobservable` are zero by construction.
    pub coefficients: ZernikeCoefficients,
    pub first_index: usize,
    /// Indices this fit cannot observe.
    pub unobservable: Vec<usize>,
    /// RMS of the slope residual `beta - M c / rho_a`, radians.
    pub residual_rms: f64,
    /// Condition number of `M^T M`.
    pub gramian_condition: f64,
}

/// Least-squares fit of `c_4..c_N` to measured spot displacements.
pub fn reconstruct(g: &GradientField, max_index: usize) -> Result<Reconstruction> {
    reconstruct_range(g, DEFAULT_FIRST_INDEX, max_index)
}

/// Least-squares fit of `c_first..c_N`; `first` must be at least 1.
///
/// The system is solved by SVD of `M` rather than by forming the normal
/// equations; the Gramian's condition number (`(s_max / s_min)^2`) is
/// still what decides degeneracy.
pub fn reconstruct_range(
    g: &GradientField,
    first_index: usize,
    max_index: usize,
) -> Result<Reconstruction> {
    let design = DesignMatrix::new(g.lenslets(), first_index, max_index)?;
    let k = max_index - first_index + 1;
    if g.len() < k {
        return Err(Error::Resolution {
            what: "lenslets for the requested fit",
            required: k,
            actual: g.len(),
        });
    }
    let svd = design.matrix.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition = if s_min > 0.0 {
        (s_max / s_min).powi(2)
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition > MAX_GRAMIAN_CONDITION {
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let threshold = s_max / MAX_GRAMIAN_CONDITION.sqrt();
        let directions = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= threshold)
            .map(|(r, _)| {
                (0..k)
                    .filter_map(|col| {
                        let w = v_t[(r, col)];
                        (w.abs() > 1e-3).then_some((first_index + col, w))
                    })
                    .collect()
            })
            .collect();
        return Err(Error::DegenerateLayout {
            reason: format!(
                "Gramian condition number {condition:.3e} exceeds {MAX_GRAMIAN_CONDITION:.0e}"
            ),
            directions,
        });
    }

    check_layout_spans_plane(g.lenslets())?;

    let beta = DVector::from_vec(g.slopes());
    let rhs = &beta * g.aperture_radius_m();
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::InvalidInput(format!("least-squares solve failed: {e}")))?;
    let fitted = &design.matrix * &sol / g.aperture_radius_m();
    let residual_rms = ((&beta - fitted).norm_squared() / beta.len() as f64).sqrt();

    let mut values = vec![0.0; max_index + 1];
    values[first_index..].copy_from_slice(sol.as_slice());
    Ok(Reconstruction {
        coefficients: ZernikeCoefficients::new(values)?,
        first_index,
        unobservable: (0..first_index).collect(),
        residual_rms,
        gramian_condition: condition,
    })
}

/// Lenslets on a single line leave the slope normal to it unmeasured.
fn check_layout_spans_plane(lenslets: &[(f64, f64)]) -> Result<()> {
    let m = lenslets.len() as f64;
    let (mx, my) = lenslets
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in lenslets {
        let (u, v) = (x - mx, y - my);
        sxx += u * u;
        sxy += u * v;
        syy += v * v;
    }
    // Eigen-decomposition of the 2x2 scatter matrix.
    let tr = sxx + syy;
    let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let (l_max, l_min) = (0.5 * (tr + disc), 0.5 * (tr - disc));
    if l_max <= 0.0 || l_min <= 1e-18 * l_max.max(1.0) || l_min / l_max < 1e-12 {
        // Principal axis of the line, then its normal.
        let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let (nx, ny) = (-angle.sin(), angle.cos());
        return Err(Error::DegenerateLayout {
            reason: format!(
                "lenslets are collinear along ({:.4}, {:.4}); slopes along the normal ({nx:.4}, {ny:.4}) are unconstrained",
                angle.cos(),
                angle.sin()
            ),
            directions: Vec::new(),
        });
    }
    Ok(())
}

/// Square lenslet lattice clipped to the unit disk.
pub fn disk_lattice(per_side: usize) -> Vec<(f64, f64)> {
    let step = 2.0 / per_side as f64;
    let mut out = Vec::new();
    for i in 0..per_side {
        for j in 0..per_side {
            let x = -1.0 + (j as f64 + 0.5) * step;
            let y = -1.0 + (i as f64 + 0.5) * step;
            if x * x + y * y <= 1.0 {
                out.push((x, y));
            }
        }
    }
    out
}
