//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ws_optics::mtf::{linspace, mtf_mono, psf_from_pupil, Orientation, PsfGrid, PupilSpec};
use ws_optics::sfr::{estimate_sfr, render_edge, Blur, EdgeSpec};
use ws_optics::system::{
    separability_report, system_mtf, LensModel, MeasurementOrientation, WindscreenModel,
    DEFAULT_REFERENCE_FREQUENCY,
};
use ws_optics::wavefront::{blur_ellipse_proxy, laplace_trace, reconstruct, sh_forward};
use ws_optics::zernike::{basis_inner_product, synthesize, ZernikeCoefficients, ZernikeIndex};
use ws_optics::{DiskGrid, Error};

const LAMBDA: f64 = 550e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Circular-aperture autocorrelation, normalized.
fn circ_mtf(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        2.0 / PI * (s.acos() - s * (1.0 - s * s).sqrt())
    }
}

fn zeros() -> ZernikeCoefficients {
    ZernikeCoefficients::zeros(9).unwrap()
}

fn orthogonality() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..=9 {
        for j in 0..=9 {
            let v =
                basis_inner_product(ZernikeIndex::new(i).unwrap(), ZernikeIndex::new(j).unwrap())
                    .unwrap();
            let want = if i == j { PI } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-6 && secs < 1.0,
        format!("max error {worst:.2e}, {secs:.3} s"),
    )
}

fn reference_lens() -> Outcome {
    let d = 0.1003;
    let start = Instant::now();
    let p = common::measure(|x, _| 0.5 * d * x * x, 2024);
    let secs = start.elapsed().as_secs_f64();
    let (dx, dy) = (p.mean_dx * 1e3, p.mean_dy * 1e3);
    outcome(
        (dx - 100.3).abs() <= 1.0 && dy.abs() <= 1.0 && secs < 10.0,
        format!(
            "mean Dx {dx:.3} mdpt, mean Dy {dy:.3} mdpt over {} samples, overlap rms {:.2e} m, {secs:.2} s",
            p.samples, p.overlap_rms_m
        ),
    )
}

fn blind_spot() -> Outcome {
    let rho = 0.05;
    let grid = DiskGrid::new(128, rho).unwrap();
    // Coefficient giving 50 mdpt of curvature for each mode.
    let scale = |j: usize| {
        let k = match j {
            3 | 5 => 2.0 * 6f64.sqrt(),
            6 | 9 => 6.0 * 8f64.sqrt(),
            _ => unreachable!(),
        };
        0.05 * rho * rho / k
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_trace, mut weakest_det) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let mut c = zeros();
        for j in [3, 5, 6, 9] {
            c.set(j, rng.random_range(-1.0..1.0) * scale(j)).unwrap();
        }
        let w = synthesize(&c, grid);
        worst_trace = worst_trace.max(laplace_trace(&w).unwrap().max_abs().unwrap() * 1e3);
        weakest_det = weakest_det.min(blur_ellipse_proxy(&w).unwrap().max_abs().unwrap() * 1e6);
    }
    let bound = 1e-3;
    outcome(
        worst_trace < bound && weakest_det > 1e3 * bound,
        format!("max |tr D| {worst_trace:.2e} mdpt, smallest max |det| {weakest_det:.3e} mdpt^2"),
    )
}

fn tilt_invariance() -> Outcome {
    let pupil = PupilSpec::from_lens(6e-3, 2.0).unwrap();
    let k = linspace(pupil.cutoff(LAMBDA), 40);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for trial in 0..6 {
        let mut c = zeros();
        for j in 0..=2 {
            let v = if trial == 0 {
                5.0 * LAMBDA
            } else {
                rng.random_range(-5.0..5.0) * LAMBDA
            };
            c.set(j, v).unwrap();
        }
        let o = Orientation::from_angle_deg(30.0 * trial as f64);
        let base = mtf_mono(&zeros(), &pupil, LAMBDA, &k, o).unwrap();
        let m = mtf_mono(&c, &pupil, LAMBDA, &k, o).unwrap();
        for (a, b) in m.values.iter().zip(&base.values) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst < 1e-6, format!("max deviation {worst:.2e}"))
}

fn diffraction_limit() -> Outcome {
    let pupil = PupilSpec::from_lens(6e-3, 2.0).unwrap();
    let kc = pupil.cutoff(LAMBDA);
    let k: Vec<f64> = (0..50).map(|i| kc * i as f64 / 49.0).collect();
    let m = mtf_mono(&zeros(), &pupil, LAMBDA, &k, Orientation::horizontal()).unwrap();
    let worst = k
        .iter()
        .zip(&m.values)
        .map(|(ki, v)| (v - circ_mtf(ki / kc)).abs())
        .fold(0.0, f64::max);
    let half = mtf_mono(
        &zeros(),
        &pupil,
        LAMBDA,
        &[0.5 * kc],
        Orientation::horizontal(),
    )
    .unwrap()
    .values[0];
    outcome(
        worst < 1e-3 && (half - 0.391).abs() <= 1e-3,
        format!("max error {worst:.2e} at 50 frequencies, MTF(0.5 kc) = {half:.4}"),
    )
}

fn cross_route() -> Outcome {
    let pupil = PupilSpec::from_lens(6e-3, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut c = zeros();
        for j in 1..=9 {
            c.set(j, rng.random_range(-0.5..0.5) * LAMBDA).unwrap();
        }
        let psf = psf_from_pupil(&c, &pupil, LAMBDA, PsfGrid::default()).unwrap();
        for o in [Orientation::horizontal(), Orientation::vertical()] {
            let lags: Vec<usize> = (0..=255).step_by(5).collect();
            let dft = psf.mtf_along(o, 255).unwrap();
            let k: Vec<f64> = lags.iter().map(|&m| psf.lag_frequency(m)).collect();
            let overlap = mtf_mono(&c, &pupil, LAMBDA, &k, o).unwrap();
            for (i, &m) in lags.iter().enumerate() {
                worst = worst.max((dft.values[m] - overlap.values[i]).abs());
            }
        }
    }
    outcome(
        worst < 1e-3,
        format!("max disagreement {worst:.2e} over 10 sets, |c_j| <= lambda/2"),
    )
}

fn sfr_fidelity() -> Outcome {
    let sigma = 1.0;
    let img = render_edge(Blur::Gaussian { sigma_px: sigma }, &EdgeSpec::default()).unwrap();
    let s = estimate_sfr(&img, None).unwrap();
    let mut worst: f64 = 0.0;
    for (nu, v) in s.frequencies.iter().zip(&s.values) {
        if *nu > 0.8 {
            break;
        }
        let pix = if *nu == 0.0 {
            1.0
        } else {
            ((PI * nu).sin() / (PI * nu)).abs()
        };
        let want = (-2.0 * PI * PI * sigma * sigma * nu * nu).exp() * pix;
        worst = worst.max((v - want).abs());
    }
    outcome(
        worst < 0.02,
        format!("max error {worst:.4} for nu <= 0.8 cyc/px"),
    )
}

fn windscreen_sharpening() -> Outcome {
    let f = 6e-3;
    let lens = LensModel::new(f, 2.0, vec![(0.0, 50e-6), (30.0, 50e-6)]).unwrap();
    let h = MeasurementOrientation::Horizontal;
    // Positive power pulls focus in by f^2 D, against the +50 um offset.
    let d = 30e-6 / (f * f);
    let cancel = WindscreenModel::uniform(d, d, (0.0, 30.0)).unwrap();
    let same = WindscreenModel::uniform(-d, -d, (0.0, 30.0)).unwrap();
    let k_ref = [DEFAULT_REFERENCE_FREQUENCY];
    let at = |ws: Option<&WindscreenModel>| {
        system_mtf(&lens, ws, 0.0, h, LAMBDA, &k_ref)
            .unwrap()
            .values[0]
    };
    let (alone, sharp, dull) = (at(None), at(Some(&cancel)), at(Some(&same)));
    let k = linspace(0.8 * lens.pupil().cutoff(LAMBDA), 40);
    let report = separability_report(
        &lens,
        &cancel,
        0.0,
        h,
        LAMBDA,
        &k,
        DEFAULT_REFERENCE_FREQUENCY,
    )
    .unwrap();
    let at_ref = separability_report(
        &lens,
        &cancel,
        0.0,
        h,
        LAMBDA,
        &k_ref,
        DEFAULT_REFERENCE_FREQUENCY,
    )
    .unwrap();
    let ref_dev = at_ref.ratio[0].map_or(f64::NAN, |r| (r - 1.0).abs());
    outcome(
        sharp > alone && dull < alone && report.max_ratio_deviation > 0.05 && ref_dev > 0.05,
        format!(
            "at 15 cyc/mm: lens {alone:.4}, cancelling {sharp:.4}, same-sign {dull:.4}; |ratio - 1| {ref_dev:.3} there, {:.3e} max below 0.8 kc",
            report.max_ratio_deviation
        ),
    )
}

fn degenerate_layouts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rejected = 0;
    for _ in 0..100 {
        let a: f64 = rng.random_range(0.0..PI);
        let off: f64 = rng.random_range(-0.6..0.6);
        let m = rng.random_range(20..120);
        let (u, n) = ((a.cos(), a.sin()), (-a.sin(), a.cos()));
        let lenslets: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                let t: f64 = rng.random_range(-0.75..0.75);
                (off * n.0 + t * u.0, off * n.1 + t * u.1)
            })
            .collect();
        let mut c = zeros();
        for j in 4..=9 {
            c.set(j, rng.random_range(-1e-6..1e-6)).unwrap();
        }
        let g = sh_forward(&c, &lenslets, 5e-3, 0.05).unwrap().field;
        if matches!(reconstruct(&g, 9), Err(Error::DegenerateLayout { .. })) {
            rejected += 1;
        }
    }
    outcome(
        rejected == 100,
        format!("{rejected}/100 collinear layouts rejected"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("zernike orthogonality", orthogonality),
        ("reference lens stitched round trip", reference_lens),
        ("refractive power blind spot", blind_spot),
        ("piston and tilt invariance", tilt_invariance),
        ("diffraction-limit oracle", diffraction_limit),
        ("PSF and overlap routes agree", cross_route),
        ("slanted-edge SFR fidelity", sfr_fidelity),
        (
            "windscreen sharpening and non-separability",
            windscreen_sharpening,
        ),
        ("collinear layouts rejected", degenerate_layouts),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {}. {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
