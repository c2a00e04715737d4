use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ws_optics::io::{self as wio, CoefficientReport, Num};
use ws_optics::mtf::{
    linspace, mtf_mono, mtf_poly, psf_from_pupil, Orientation, PsfGrid, PupilSpec,
};
use ws_optics::sfr::{estimate_sfr, render_edge, Blur, EdgeSpec, Roi};
use ws_optics::system::{
    separability_report, system_mtf, MeasurementOrientation, DEFAULT_REFERENCE_FREQUENCY,
};
use ws_optics::wavefront::{blur_ellipse_proxy, laplace_trace, reconstruct, RefractivePowerMap};
use ws_optics::zernike::{decompose, is_harmonic, synthesize, ZernikeCoefficients, ZernikeIndex};
use ws_optics::{DiskGrid, Error, Result};

use crate::{Command, Direction, LensArgs, Output, Sampling};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))
}

fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "input file {} does not exist",
            path.display()
        )))
    }
}

fn check_output(path: Option<&Path>) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "output directory {} does not exist",
            parent.display()
        )))
    }
}

/// Buffers the whole output so a failed run leaves no partial file.
fn emit(out: &Output, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    match &out.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn lambda_m(nm: f64) -> Result<f64> {
    if nm.is_finite() && nm > 0.0 {
        Ok(nm * 1e-9)
    } else {
        Err(Error::InvalidInput(format!(
            "wavelength must be positive, got {nm} nm"
        )))
    }
}

fn frequencies(s: &Sampling, cutoff: f64) -> Result<Vec<f64>> {
    if s.samples < 2 {
        return Err(Error::InvalidInput(
            "need at least 2 frequency samples".into(),
        ));
    }
    let k_max = match s.k_max_cyc_per_mm {
        Some(k) if k.is_finite() && k > 0.0 => k * 1e3,
        Some(k) => return Err(Error::InvalidInput(format!("bad maximum frequency {k}"))),
        None => cutoff,
    };
    Ok(linspace(k_max, s.samples))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Decompose {
            input,
            out,
            max_index,
        } => {
            check_input(&input)?;
            check_output(out.output.as_deref())?;
            ZernikeIndex::new(max_index)?;
            let w = wio::read_wavefront(open(&input)?)?;
            let d = decompose(&w, max_index)?;
            emit(&out, |buf| {
                wio::write_coefficient_report(
                    buf,
                    &CoefficientReport {
                        coefficients: d.coefficients.entries(),
                        residual_rms_m: Some(d.residual_rms_m),
                        unobservable: None,
                        gramian_condition: None,
                    },
                )
            })
        }
        Command::Reconstruct {
            input,
            out,
            max_index,
        } => {
            check_input(&input)?;
            check_output(out.output.as_deref())?;
            let g = wio::read_gradients(open(&input)?)?;
            let r = reconstruct(&g, max_index)?;
            emit(&out, |buf| {
                wio::write_coefficient_report(
                    buf,
                    &CoefficientReport {
                        coefficients: r.coefficients.entries(),
                        residual_rms_m: Some(r.residual_rms),
                        unobservable: Some(r.unobservable.clone()),
                        gramian_condition: Some(r.gramian_condition),
                    },
                )
            })
        }
        Command::Refpower { input, out } => {
            check_input(&input)?;
            check_output(out.output.as_deref())?;
            let w = wio::read_wavefront(open(&input)?)?;
            let p = RefractivePowerMap::compute(&w)?;
            emit(&out, |buf| wio::write_power_map(buf, &p))
        }
        Command::Mtf {
            input,
            out,
            lens,
            sampling,
            psd,
            orientation_deg,
        } => {
            check_input(&input)?;
            if let Some(p) = &psd {
                check_input(p)?;
            }
            check_output(out.output.as_deref())?;
            let c = wio::read_coefficients(open(&input)?)?;
            let pupil = PupilSpec::from_lens(lens.f_m, lens.f_number)?;
            let o = Orientation::from_angle_deg(orientation_deg);
            let curve = match &psd {
                Some(p) => {
                    let psd = wio::read_psd(open(p)?)?;
                    let shortest = psd
                        .lines()
                        .iter()
                        .map(|l| l.0)
                        .fold(f64::INFINITY, f64::min);
                    let k = frequencies(&sampling, pupil.cutoff(shortest))?;
                    mtf_poly(&c, &pupil, &psd, &k, o)?
                }
                None => {
                    let lambda = lambda_m(lens.lambda_nm)?;
                    let k = frequencies(&sampling, pupil.cutoff(lambda))?;
                    mtf_mono(&c, &pupil, lambda, &k, o)?
                }
            };
            emit(&out, |buf| wio::write_mtf(buf, &curve))
        }
        Command::Sfr {
            input,
            out,
            roi,
            reference_cyc_per_px,
        } => {
            check_input(&input)?;
            check_output(out.output.as_deref())?;
            let img = if is_csv(&input) {
                wio::read_raster_csv(open(&input)?)?
            } else {
                wio::read_pgm(open(&input)?)?
            };
            if roi.as_ref().is_some_and(|r| r.len() != 4) {
                return Err(Error::InvalidInput(
                    "--roi takes row0,col0,rows,cols".into(),
                ));
            }
            let roi = roi.map(|r| Roi {
                row0: r[0],
                col0: r[1],
                rows: r[2],
                cols: r[3],
            });
            let curve = estimate_sfr(&img, roi)?;
            let summary = curve.summary(reference_cyc_per_px).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "reference frequency {reference_cyc_per_px} cyc/px is outside the curve"
                ))
            })?;
            emit(&out, |buf| {
                wio::write_sfr(buf, &curve, reference_cyc_per_px)
            })?;
            let line = serde_json::json!({
                "sfr_at_reference": summary,
                "reference_cyc_per_px": reference_cyc_per_px,
                "edge_angle_deg": curve.edge_angle_deg,
                "snr": curve.snr,
            });
            if out.output.is_some() {
                println!("{line}");
            }
            Ok(())
        }
        Command::RenderEdge {
            out,
            sigma_px,
            coefficients,
            lens,
            angle_deg,
            size,
            pixel_pitch_um,
            noise,
            seed,
        } => render(
            out,
            sigma_px,
            coefficients,
            lens,
            angle_deg,
            size,
            pixel_pitch_um,
            noise,
            seed,
        ),
        Command::SystemMtf {
            input,
            out,
            field_deg,
            orientation,
            lambda_nm,
            sampling,
            lens_only,
            report,
        } => {
            check_input(&input)?;
            check_output(out.output.as_deref())?;
            check_output(report.as_deref())?;
            let (lens, ws) = wio::read_system(open(&input)?)?.build()?;
            let orient = match orientation {
                Direction::Horizontal => MeasurementOrientation::Horizontal,
                Direction::Vertical => MeasurementOrientation::Vertical,
            };
            let lambda = lambda_m(lambda_nm)?;
            let k = frequencies(&sampling, lens.pupil().cutoff(lambda))?;
            let ws = if lens_only { None } else { ws };
            let curve = system_mtf(&lens, ws.as_ref(), field_deg, orient, lambda, &k)?;
            let at_ref = |w| {
                system_mtf(
                    &lens,
                    w,
                    field_deg,
                    orient,
                    lambda,
                    &[DEFAULT_REFERENCE_FREQUENCY],
                )
            };
            let joint = at_ref(ws.as_ref())?.values[0];
            let alone = at_ref(None)?.values[0];
            let sep = match (&report, &ws) {
                (Some(_), Some(w)) => Some(separability_report(
                    &lens,
                    w,
                    field_deg,
                    orient,
                    lambda,
                    &k,
                    DEFAULT_REFERENCE_FREQUENCY,
                )?),
                (Some(_), None) => {
                    return Err(Error::InvalidInput(
                        "a separability report needs a windscreen".into(),
                    ));
                }
                _ => None,
            };
            emit(&out, |buf| wio::write_mtf(buf, &curve))?;
            if let (Some(path), Some(r)) = (&report, &sep) {
                let mut buf = Vec::new();
                writeln!(buf, "# non_separable={}", r.non_separable)?;
                writeln!(buf, "# max_ratio_deviation={}", Num(r.max_ratio_deviation))?;
                writeln!(buf, "# sharpened={}", r.sharpened)?;
                writeln!(buf, "freq_cyc_per_mm,joint,lens_only,windscreen_only,ratio")?;
                for i in 0..r.frequencies.len() {
                    let ratio =
                        r.ratio[i].map_or_else(|| "nan".to_string(), |v| Num(v).to_string());
                    writeln!(
                        buf,
                        "{},{},{},{},{ratio}",
                        Num(r.frequencies[i] * 1e-3),
                        Num(r.joint[i]),
                        Num(r.lens_only[i]),
                        Num(r.windscreen_only[i])
                    )?;
                }
                std::fs::write(path, buf)?;
            }
            let line = serde_json::json!({
                "reference_cyc_per_mm": DEFAULT_REFERENCE_FREQUENCY * 1e-3,
                "mtf_at_reference": joint,
                "lens_only_at_reference": alone,
            });
            if out.output.is_some() {
                println!("{line}");
            }
            Ok(())
        }
        Command::DemoBlindspot {
            out,
            grid,
            amplitude_um,
            aperture_radius_mm,
        } => {
            check_output(out.output.as_deref())?;
            let rho = aperture_radius_mm * 1e-3;
            let amp = amplitude_um * 1e-6;
            if !(amp.is_finite() && amp > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "amplitude must be positive, got {amplitude_um} um"
                )));
            }
            let g = DiskGrid::new(grid, rho)?;
            let mut rows = Vec::new();
            for j in std::iter::once(0).chain(3..=9) {
                let mut c = ZernikeCoefficients::zeros(9)?;
                c.set(j, amp)?;
                let w = synthesize(&c, g);
                let tr = laplace_trace(&w)?;
                let det = blur_ellipse_proxy(&w)?;
                rows.push((j, tr, det));
            }
            emit(&out, |buf| {
                writeln!(buf, "# aperture_radius_m={}", Num(rho))?;
                writeln!(buf, "# coefficient_m={}", Num(amp))?;
                writeln!(buf, "index,harmonic,mean_trace_dpt,max_abs_trace_dpt,mean_blur_proxy_dpt2,max_abs_blur_proxy_dpt2")?;
                for (j, tr, det) in &rows {
                    writeln!(
                        buf,
                        "{j},{},{},{},{},{}",
                        is_harmonic(ZernikeIndex::new(*j)?),
                        Num(tr.mean().unwrap_or(f64::NAN)),
                        Num(tr.max_abs().unwrap_or(f64::NAN)),
                        Num(det.mean().unwrap_or(f64::NAN)),
                        Num(det.max_abs().unwrap_or(f64::NAN))
                    )?;
                }
                Ok(())
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn render(
    out: Output,
    sigma_px: f64,
    coefficients: Option<PathBuf>,
    lens: LensArgs,
    angle_deg: f64,
    size: usize,
    pixel_pitch_um: f64,
    noise: f64,
    seed: Option<u64>,
) -> Result<()> {
    if let Some(c) = &coefficients {
        check_input(c)?;
    }
    check_output(out.output.as_deref())?;
    if !(sigma_px.is_finite() && sigma_px >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "blur must be non-negative, got {sigma_px} px"
        )));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise must be non-negative, got {noise}"
        )));
    }
    let seed = match seed {
        Some(s) => s,
        None if noise > 0.0 => {
            return Err(Error::InvalidInput(
                "--seed is required when --noise is nonzero".into(),
            ));
        }
        None => 0,
    };
    let spec = EdgeSpec {
        size,
        angle_deg,
        pixel_pitch_m: pixel_pitch_um * 1e-6,
        noise_sigma: noise,
        seed,
    };
    let img = match &coefficients {
        Some(path) => {
            let c = wio::read_coefficients(open(path)?)?;
            let pupil = PupilSpec::from_lens(lens.f_m, lens.f_number)?;
            let psf = psf_from_pupil(&c, &pupil, lambda_m(lens.lambda_nm)?, PsfGrid::default())?;
            render_edge(Blur::Psf(&psf), &spec)?
        }
        None if sigma_px > 0.0 => render_edge(Blur::Gaussian { sigma_px }, &spec)?,
        None => render_edge(Blur::None, &spec)?,
    };
    let csv = out.output.as_deref().is_some_and(is_csv);
    emit(&out, |buf| {
        if csv {
            wio::write_raster_csv(buf, &img)
        } else {
            wio::write_pgm(buf, &img)
        }
    })
}
