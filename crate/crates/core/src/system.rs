//! Camera behind a windscreen: field curvature plus windscreen focus shift,
//! combined as a signed defocus and turned into an MTF.
//!
//! Sign convention: `dz > 0` puts the best focus behind the sensor. A
//! converging windscreen (`D > 0`) shortens the focal length, `dz_ws < 0`.
//! Defocus enters the pupil as `c4 = dz / (16 sqrt(3) N^2)`, which is the
//! paraxial relation for rays following the reference sphere plus the
//! wavefront gradient.

use crate::error::{Error, Result};
use crate::mtf::{mtf_mono, MTFCurve, Orientation, PupilSpec};
use crate::zernike::ZernikeCoefficients;

/// Largest `|D f|` accepted by the first-order focus shift.
pub const MAX_THIN_ELEMENT_STRENGTH: f64 = 0.1;
/// Frequency (cycles/m) at which system MTFs are compared by default. Low
/// enough that the through-focus MTF of the default lens decreases
/// monotonically for defocus up to 100 um.
pub const DEFAULT_REFERENCE_FREQUENCY: f64 = 15e3;
/// Deviation of the separability ratio from 1 that counts as non-separable.
pub const SEPARABILITY_THRESHOLD: f64 = 0.05;
/// Ratio is only evaluated below this fraction of the cutoff.
pub const SEPARABILITY_BAND: f64 = 0.8;
/// Denominators below this leave the ratio undefined.
const RATIO_FLOOR: f64 = 1e-6;

/// Direction of the measured frequency vector; selects which windscreen
/// power applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementOrientation {
    /// Frequency along `x`, governed by the horizontal power `D_h`.
    Horizontal,
    /// Frequency along `y`, governed by `D_v`.
    Vertical,
}

impl MeasurementOrientation {
    pub fn frequency_direction(self) -> Orientation {
        match self {
            Self::Horizontal => Orientation::horizontal(),
            Self::Vertical => Orientation::vertical(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Horizontal => "horizontal",
            Self::Vertical => "vertical",
        }
    }
}

/// Piecewise-linear interpolation on sorted `(x, y)` pairs.
fn interpolate(table: &[(f64, f64)], x: f64, what: &str) -> Result<f64> {
    let (first, last) = (table[0].0, table[table.len() - 1].0);
    if !(first..=last).contains(&x) {
        return Err(Error::Domain(format!(
            "field angle {x} deg outside the {what} range [{first}, {last}]"
        )));
    }
    if table.len() == 1 {
        return Ok(table[0].1);
    }
    let i = table
        .windows(2)
        .position(|w| x <= w[1].0)
        .unwrap_or(table.len() - 2);
    let (a, b) = (table[i], table[i + 1]);
    let t = (x - a.0) / (b.0 - a.0);
    Ok(a.1 + t * (b.1 - a.1))
}

fn sorted_by_field<T: Clone>(items: &[T], field: impl Fn(&T) -> f64, what: &str) -> Result<Vec<T>> {
    let mut v = items.to_vec();
    if v.iter().any(|i| !field(i).is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} field angles must be finite"
        )));
    }
    v.sort_by(|a, b| field(a).total_cmp(&field(b)));
    if v.windows(2).any(|w| field(&w[0]) == field(&w[1])) {
        return Err(Error::InvalidInput(format!(
            "duplicate field angle in {what}"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LensModel {
    focal_length_m: f64,
    f_number: f64,
    /// `(field_deg, dz_fc_m)`, sorted by field.
    field_curvature: Vec<(f64, f64)>,
}

impl LensModel {
    pub fn new(
        focal_length_m: f64,
        f_number: f64,
        field_curvature: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if !(focal_length_m.is_finite() && focal_length_m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "focal length must be positive, got {focal_length_m}"
            )));
        }
        if !(f_number.is_finite() && f_number > 0.0) {
            return Err(Error::InvalidInput(format!(
                "f-number must be positive, got {f_number}"
            )));
        }
        if field_curvature.iter().any(|p| !p.1.is_finite()) {
            return Err(Error::InvalidInput(
                "field curvature offsets must be finite".into(),
            ));
        }
        Ok(Self {
            focal_length_m,
            f_number,
            field_curvature: sorted_by_field(&field_curvature, |p| p.0, "field curvature")?,
        })
    }

    /// 6 mm, f/2, no field curvature.
    pub fn default_demo() -> Self {
        Self::new(6e-3, 2.0, Vec::new()).expect("valid constants")
    }

    pub fn focal_length_m(&self) -> f64 {
        self.focal_length_m
    }

    pub fn f_number(&self) -> f64 {
        self.f_number
    }

    pub fn aperture_radius_m(&self) -> f64 {
        self.focal_length_m / (2.0 * self.f_number)
    }

    pub fn field_curvature(&self) -> &[(f64, f64)] {
        &self.field_curvature
    }

    pub fn pupil(&self) -> PupilSpec {
        PupilSpec::from_lens(self.focal_length_m, self.f_number).expect("validated lens")
    }

    /// Field-curvature offset; zero everywhere when no table is given.
    pub fn field_curvature_at(&self, field_deg: f64) -> Result<f64> {
        if self.field_curvature.is_empty() {
            return Ok(0.0);
        }
        interpolate(&self.field_curvature, field_deg, "field curvature")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindscreenPatch {
    pub field_deg: f64,
    pub d_h_dpt: f64,
    pub d_v_dpt: f64,
    /// Optional higher-order wavefront added at the pupil.
    pub zernike: Option<ZernikeCoefficients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindscreenModel {
    patches: Vec<WindscreenPatch>,
    /// Windscreen inclination, carried as metadata only.
    pub inclination_deg: Option<f64>,
}

impl WindscreenModel {
    pub fn new(patches: Vec<WindscreenPatch>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::InvalidInput(
                "windscreen needs at least one patch".into(),
            ));
        }
        if patches
            .iter()
            .any(|p| !(p.d_h_dpt.is_finite() && p.d_v_dpt.is_finite()))
        {
            return Err(Error::InvalidInput(
                "windscreen powers must be finite".into(),
            ));
        }
        Ok(Self {
            patches: sorted_by_field(&patches, |p| p.field_deg, "windscreen patches")?,
            inclination_deg: None,
        })
    }

    /// Same power everywhere in the cutout.
    pub fn uniform(d_h_dpt: f64, d_v_dpt: f64, field_range_deg: (f64, f64)) -> Result<Self> {
        let patch = |f| WindscreenPatch {
            field_deg: f,
            d_h_dpt,
            d_v_dpt,
            zernike: None,
        };
        if field_range_deg.0 == field_range_deg.1 {
            Self::new(vec![patch(field_range_deg.0)])
        } else {
            Self::new(vec![patch(field_range_deg.0), patch(field_range_deg.1)])
        }
    }

    pub fn patches(&self) -> &[WindscreenPatch] {
        &self.patches
    }

    /// Interpolated power for the given orientation, diopters.
    pub fn power_at(&self, field_deg: f64, orientation: MeasurementOrientation) -> Result<f64> {
        let table: Vec<(f64, f64)> = self
            .patches
            .iter()
            .map(|p| {
                let d = match orientation {
                    MeasurementOrientation::Horizontal => p.d_h_dpt,
                    MeasurementOrientation::Vertical => p.d_v_dpt,
                };
                (p.field_deg, d)
            })
            .collect();
        interpolate(&table, field_deg, "windscreen cutout")
    }

    /// Extra Zernike terms of the patch nearest to `field_deg`.
    pub fn zernike_at(&self, field_deg: f64) -> Option<&ZernikeCoefficients> {
        self.patches
            .iter()
            .min_by(|a, b| {
                (a.field_deg - field_deg)
                    .abs()
                    .total_cmp(&(b.field_deg - field_deg).abs())
            })
            .and_then(|p| p.zernike.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemOffset {
    pub dz_ws_m: f64,
    pub dz_fc_m: f64,
    pub dz_m: f64,
}

/// First-order focus shift of a weak thin element in front of the lens,
/// `-f^2 D`.
pub fn windscreen_defocus(d_ws_dpt: f64, lens: &LensModel) -> Result<f64> {
    let f = lens.focal_length_m;
    let strength = d_ws_dpt * f;
    if !strength.is_finite() || strength.abs() > MAX_THIN_ELEMENT_STRENGTH {
        return Err(Error::ApproximationValidity {
            value: strength.abs(),
            limit: MAX_THIN_ELEMENT_STRENGTH,
        });
    }
    Ok(-f * f * d_ws_dpt)
}

/// `dz = dz_ws + dz_fc` at a field angle. Without a windscreen `dz_ws = 0`.
pub fn combined_offset(
    lens: &LensModel,
    ws: Option<&WindscreenModel>,
    field_deg: f64,
    orientation: MeasurementOrientation,
) -> Result<SystemOffset> {
    let dz_fc_m = lens.field_curvature_at(field_deg)?;
    let dz_ws_m = match ws {
        Some(ws) => windscreen_defocus(ws.power_at(field_deg, orientation)?, lens)?,
        None => 0.0,
    };
    Ok(SystemOffset {
        dz_ws_m,
        dz_fc_m,
        dz_m: dz_ws_m + dz_fc_m,
    })
}

pub fn defocus_to_c4(dz_m: f64, lens: &LensModel) -> f64 {
    dz_m / (16.0 * 3f64.sqrt() * lens.f_number * lens.f_number)
}

pub fn c4_to_defocus(c4_m: f64, lens: &LensModel) -> f64 {
    c4_m * 16.0 * 3f64.sqrt() * lens.f_number * lens.f_number
}

fn pupil_coefficients(
    dz_m: f64,
    lens: &LensModel,
    extra: Option<&ZernikeCoefficients>,
) -> Result<ZernikeCoefficients> {
    let mut c = ZernikeCoefficients::zeros(4)?;
    c.set(4, defocus_to_c4(dz_m, lens))?;
    Ok(match extra {
        Some(e) => c.plus(e),
        None => c,
    })
}

/// MTF of the lens behind the windscreen at one field point.
pub fn system_mtf(
    lens: &LensModel,
    ws: Option<&WindscreenModel>,
    field_deg: f64,
    orientation: MeasurementOrientation,
    wavelength_m: f64,
    k: &[f64],
) -> Result<MTFCurve> {
    let offset = combined_offset(lens, ws, field_deg, orientation)?;
    let c = pupil_coefficients(offset.dz_m, lens, ws.and_then(|w| w.zernike_at(field_deg)))?;
    mtf_mono(
        &c,
        &lens.pupil(),
        wavelength_m,
        k,
        orientation.frequency_direction(),
    )
}

#[derive(Debug, Clone)]
pub struct SeparabilityReport {
    pub frequencies: Vec<f64>,
    pub joint: Vec<f64>,
    pub lens_only: Vec<f64>,
    /// Windscreen alone through the same pupil, relative to the
    /// diffraction-limited MTF.
    pub windscreen_only: Vec<f64>,
    /// `joint / (lens_only * windscreen_only)` where defined.
    pub ratio: Vec<Option<f64>>,
    pub max_ratio_deviation: f64,
    pub non_separable: bool,
    pub reference_frequency: f64,
    /// Joint MTF above lens-only at the reference frequency; a product with
    /// a factor no larger than one cannot do this.
    pub sharpened: bool,
}

pub fn separability_report(
    lens: &LensModel,
    ws: &WindscreenModel,
    field_deg: f64,
    orientation: MeasurementOrientation,
    wavelength_m: f64,
    k: &[f64],
    reference_frequency: f64,
) -> Result<SeparabilityReport> {
    let pupil = lens.pupil();
    let dir = orientation.frequency_direction();
    let kc = pupil.cutoff(wavelength_m);
    let mut freqs: Vec<f64> = k.to_vec();
    freqs.push(reference_frequency);

    let offset = combined_offset(lens, Some(ws), field_deg, orientation)?;
    let extra = ws.zernike_at(field_deg);
    let curve = |dz: f64, extra: Option<&ZernikeCoefficients>| -> Result<Vec<f64>> {
        let c = pupil_coefficients(dz, lens, extra)?;
        Ok(mtf_mono(&c, &pupil, wavelength_m, &freqs, dir)?.values)
    };
    let mut joint = curve(offset.dz_m, extra)?;
    let mut lens_only = curve(offset.dz_fc_m, None)?;
    let ws_raw = curve(offset.dz_ws_m, extra)?;
    let diffraction = curve(0.0, None)?;
    let mut windscreen_only: Vec<f64> = ws_raw
        .iter()
        .zip(&diffraction)
        .map(|(w, d)| {
            if *d >= RATIO_FLOOR {
                (w / d).min(1.0)
            } else {
                0.0
            }
        })
        .collect();

    let ref_joint = joint.pop().expect("reference appended");
    let ref_lens = lens_only.pop().expect("reference appended");
    windscreen_only.pop();
    freqs.pop();

    let ratio: Vec<Option<f64>> = (0..freqs.len())
        .map(|i| {
            let den = lens_only[i] * windscreen_only[i];
            (den >= RATIO_FLOOR).then(|| joint[i] / den)
        })
        .collect();
    let max_ratio_deviation = freqs
        .iter()
        .zip(&ratio)
        .filter(|(f, _)| f.abs() < SEPARABILITY_BAND * kc)
        .filter_map(|(_, r)| r.map(|r| (r - 1.0).abs()))
        .fold(0.0, f64::max);
    Ok(SeparabilityReport {
        frequencies: freqs,
        joint,
        lens_only,
        windscreen_only,
        ratio,
        max_ratio_deviation,
        non_separable: max_ratio_deviation > SEPARABILITY_THRESHOLD,
        reference_frequency,
        sharpened: ref_joint > ref_lens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtf::linspace;

    const LAMBDA: f64 = 550e-9;

    fn lens_with_fc(dz: f64) -> LensModel {
        LensModel::new(6e-3, 2.0, vec![(0.0, dz), (30.0, dz)]).unwrap()
    }

    #[test]
    fn windscreen_focus_shift_examples() {
        let lens = LensModel::default_demo();
        assert_eq!(windscreen_defocus(0.0, &lens).unwrap(), 0.0);
        let dz = windscreen_defocus(0.1, &lens).unwrap();
        assert!((dz + 3.6e-6).abs() < 1e-15);
        assert_eq!(windscreen_defocus(-0.1, &lens).unwrap(), -dz);
        assert!(matches!(
            windscreen_defocus(20.0, &lens),
            Err(Error::ApproximationValidity { .. })
        ));
    }

    // Thin element in contact with the lens: 1/f' = 1/f + D.
    #[test]
    fn focus_shift_agrees_with_exact_composition() {
        let lens = LensModel::default_demo();
        let f = lens.focal_length_m();
        for d in [-5.0, -0.2, 0.05, 0.1, 0.2, 3.0] {
            let exact = 1.0 / (1.0 / f + d) - f;
            let approx = windscreen_defocus(d, &lens).unwrap();
            let rel = ((approx - exact) / exact).abs();
            assert!(rel <= 1.01 * (d * f).abs(), "D={d}: {approx} vs {exact}");
        }
    }

    #[test]
    fn offsets_add_and_cancel() {
        let ws = WindscreenModel::uniform(0.1, -0.05, (-20.0, 20.0)).unwrap();
        let lens = lens_with_fc(3.6e-6);
        let o = combined_offset(&lens, Some(&ws), 5.0, MeasurementOrientation::Horizontal).unwrap();
        assert!(o.dz_m.abs() < 1e-15);
        assert_eq!(o.dz_m, o.dz_ws_m + o.dz_fc_m);
        let v = combined_offset(&lens, Some(&ws), 5.0, MeasurementOrientation::Vertical).unwrap();
        assert!(v.dz_m > o.dz_m);
        let none = combined_offset(&lens, None, 5.0, MeasurementOrientation::Vertical).unwrap();
        assert_eq!(none.dz_m, 3.6e-6);
        let flat = WindscreenModel::uniform(0.0, 0.0, (-20.0, 20.0)).unwrap();
        let z = combined_offset(&lens, Some(&flat), 0.0, MeasurementOrientation::Vertical).unwrap();
        assert_eq!(z.dz_m, z.dz_fc_m);
    }

    #[test]
    fn field_outside_cutout_is_a_domain_error() {
        let ws = WindscreenModel::uniform(0.1, 0.1, (-10.0, 10.0)).unwrap();
        let lens = lens_with_fc(0.0);
        assert!(matches!(
            combined_offset(&lens, Some(&ws), 12.0, MeasurementOrientation::Horizontal),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            lens.field_curvature_at(45.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn field_tables_interpolate_linearly() {
        let lens =
            LensModel::new(6e-3, 2.0, vec![(20.0, 20e-6), (0.0, 0.0), (10.0, 4e-6)]).unwrap();
        assert!((lens.field_curvature_at(5.0).unwrap() - 2e-6).abs() < 1e-18);
        assert!((lens.field_curvature_at(15.0).unwrap() - 12e-6).abs() < 1e-18);
        assert!(LensModel::new(6e-3, 2.0, vec![(1.0, 0.0), (1.0, 1e-6)]).is_err());
    }

    #[test]
    fn defocus_conversion() {
        let lens = LensModel::default_demo();
        assert_eq!(defocus_to_c4(0.0, &lens), 0.0);
        // f/2, 10 um.
        assert!((defocus_to_c4(10e-6, &lens) - 0.0902e-6).abs() < 1e-10);
        let f1 = LensModel::new(6e-3, 1.0, Vec::new()).unwrap();
        assert!((defocus_to_c4(10e-6, &f1) - 0.3608e-6).abs() < 1e-10);
        for dz in [-7.3e-5, 1e-9, 10e-6, 123.456e-6] {
            let back = c4_to_defocus(defocus_to_c4(dz, &lens), &lens);
            assert!(((back - dz) / dz).abs() <= 1e-15);
        }
    }

    // Rays leave the pupil along the reference direction plus the wavefront
    // gradient; the plane of smallest RMS spot is found by golden-section
    // search and its distance from the focal plane compared with dz.
    #[test]
    fn c4_matches_ray_traced_best_focus() {
        let lens = LensModel::default_demo();
        let (f, r) = (lens.focal_length_m(), lens.aperture_radius_m());
        for dz in [10e-6, -25e-6, 50e-6] {
            let c4 = defocus_to_c4(dz, &lens);
            let rays: Vec<(f64, f64, f64, f64)> = (0..41)
                .flat_map(|i| (0..41).map(move |j| (i, j)))
                .filter_map(|(i, j)| {
                    let (x, y) = (-1.0 + i as f64 / 20.0, -1.0 + j as f64 / 20.0);
                    (x * x + y * y <= 1.0).then(|| {
                        // d/dX of c4 * sqrt(3) (2 rho^2 - 1) with rho = X / R.
                        let g = 4.0 * 3f64.sqrt() * c4 / (r * r);
                        (x * r, y * r, -x * r / f + g * x * r, -y * r / f + g * y * r)
                    })
                })
                .collect();
            let spot = |z: f64| {
                rays.iter()
                    .map(|&(x, y, u, v)| (x + z * u).powi(2) + (y + z * v).powi(2))
                    .sum::<f64>()
            };
            let (mut a, mut b) = (f - 200e-6, f + 200e-6);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let (m1, m2) = (b - phi * (b - a), a + phi * (b - a));
                if spot(m1) < spot(m2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            let best = 0.5 * (a + b) - f;
            assert!(((best - dz) / dz).abs() < 0.01, "dz {dz}: traced {best}");
        }
    }

    #[test]
    fn reference_mtf_falls_with_defocus_up_to_100_um() {
        let k = [DEFAULT_REFERENCE_FREQUENCY];
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let lens = lens_with_fc(i as f64 * 5e-6);
            let v = system_mtf(
                &lens,
                None,
                0.0,
                MeasurementOrientation::Vertical,
                LAMBDA,
                &k,
            )
            .unwrap()
            .values[0];
            assert!(v < last, "dz {} um", i * 5);
            last = v;
        }
    }

    #[test]
    fn no_windscreen_is_lens_only() {
        let lens = lens_with_fc(20e-6);
        let k = linspace(100e3, 5);
        let a = system_mtf(
            &lens,
            None,
            0.0,
            MeasurementOrientation::Horizontal,
            LAMBDA,
            &k,
        )
        .unwrap();
        let mut c = ZernikeCoefficients::zeros(4).unwrap();
        c.set(4, defocus_to_c4(20e-6, &lens)).unwrap();
        let b = mtf_mono(&c, &lens.pupil(), LAMBDA, &k, Orientation::horizontal()).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn cancellation_sharpens_and_same_sign_degrades() {
        let lens = lens_with_fc(50e-6);
        let f = lens.focal_length_m();
        let d_cancel = 50e-6 / (f * f);
        let kc = lens.pupil().cutoff(LAMBDA);
        let k = [0.25 * kc, DEFAULT_REFERENCE_FREQUENCY];
        let h = MeasurementOrientation::Horizontal;
        let base = system_mtf(&lens, None, 0.0, h, LAMBDA, &k).unwrap();
        let cancel = WindscreenModel::uniform(d_cancel, d_cancel, (-10.0, 10.0)).unwrap();
        let sharp = system_mtf(&lens, Some(&cancel), 0.0, h, LAMBDA, &k).unwrap();
        assert!(sharp.values[0] > base.values[0]);
        assert!(sharp.values[1] > base.values[1]);
        let same = WindscreenModel::uniform(-0.5, -0.5, (-10.0, 10.0)).unwrap();
        let worse = system_mtf(&lens, Some(&same), 0.0, h, LAMBDA, &k).unwrap();
        assert!(worse.values[1] < base.values[1]);
    }

    #[test]
    fn orientation_matters_only_with_anisotropic_power() {
        let lens = lens_with_fc(10e-6);
        let k = [DEFAULT_REFERENCE_FREQUENCY, 100e3];
        let run = |ws: &WindscreenModel, o| {
            system_mtf(&lens, Some(ws), 0.0, o, LAMBDA, &k)
                .unwrap()
                .values
        };
        let aniso = WindscreenModel::uniform(0.2, -0.1, (-10.0, 10.0)).unwrap();
        assert_ne!(
            run(&aniso, MeasurementOrientation::Horizontal),
            run(&aniso, MeasurementOrientation::Vertical)
        );
        let iso = WindscreenModel::uniform(0.2, 0.2, (-10.0, 10.0)).unwrap();
        let (h, v) = (
            run(&iso, MeasurementOrientation::Horizontal),
            run(&iso, MeasurementOrientation::Vertical),
        );
        for (a, b) in h.iter().zip(&v) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn separability() {
        let lens = lens_with_fc(50e-6);
        let f = lens.focal_length_m();
        let kc = lens.pupil().cutoff(LAMBDA);
        let k = linspace(0.9 * kc, 37);
        let h = MeasurementOrientation::Horizontal;

        let flat = WindscreenModel::uniform(0.0, 0.0, (-10.0, 10.0)).unwrap();
        let r = separability_report(&lens, &flat, 0.0, h, LAMBDA, &k, 0.25 * kc).unwrap();
        for x in r.ratio.iter().flatten() {
            assert!((x - 1.0).abs() < 1e-9);
        }
        assert!(!r.non_separable && !r.sharpened);

        let d = 50e-6 / (f * f);
        let cancel = WindscreenModel::uniform(d, d, (-10.0, 10.0)).unwrap();
        let r = separability_report(&lens, &cancel, 0.0, h, LAMBDA, &k, 0.25 * kc).unwrap();
        assert!(r.sharpened && r.non_separable);

        let same = WindscreenModel::uniform(-d / 2.0, -d / 2.0, (-10.0, 10.0)).unwrap();
        let r = separability_report(
            &lens,
            &same,
            0.0,
            h,
            LAMBDA,
            &k,
            DEFAULT_REFERENCE_FREQUENCY,
        )
        .unwrap();
        assert!(!r.sharpened);
        let below = r
            .frequencies
            .iter()
            .zip(&r.ratio)
            .any(|(f, x)| *f < SEPARABILITY_BAND * kc && x.is_some_and(|x| x < 0.95));
        assert!(below);
    }

    #[test]
    fn patch_zernike_terms_are_applied() {
        let mut extra = ZernikeCoefficients::zeros(9).unwrap();
        extra.set(8, 0.1e-6).unwrap();
        let ws = WindscreenModel::new(vec![
            WindscreenPatch {
                field_deg: 0.0,
                d_h_dpt: 0.0,
                d_v_dpt: 0.0,
                zernike: Some(extra),
            },
            WindscreenPatch {
                field_deg: 10.0,
                d_h_dpt: 0.0,
                d_v_dpt: 0.0,
                zernike: None,
            },
        ])
        .unwrap();
        let lens = LensModel::default_demo();
        let k = [200e3];
        let near = system_mtf(
            &lens,
            Some(&ws),
            1.0,
            MeasurementOrientation::Horizontal,
            LAMBDA,
            &k,
        )
        .unwrap();
        let far = system_mtf(
            &lens,
            Some(&ws),
            9.0,
            MeasurementOrientation::Horizontal,
            LAMBDA,
            &k,
        )
        .unwrap();
        assert!(near.values[0] < far.values[0]);
    }
}
