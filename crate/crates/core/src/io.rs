//! Text formats: coefficient JSON, CSV tables with `# key=value` metadata
//! lines, 16-bit PGM images and the system model JSON.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so output
//! is deterministic and re-reads bit-exactly.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DiskGrid, WavefrontMap};
use crate::mtf::{MTFCurve, Orientation, SpectralDensity};
use crate::sfr::{EdgeImage, SFRCurve};
use crate::system::{LensModel, WindscreenModel, WindscreenPatch};
use crate::wavefront::{GradientField, RefractivePowerMap};
use crate::zernike::{CoefficientEntry, ZernikeCoefficients};

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn json_err(e: serde_json::Error) -> Error {
    parse_err(e.line() as u64, e.to_string())
}

/// `# key=value` lines anywhere in the text, with their line numbers.
fn metadata(text: &str) -> HashMap<String, (String, u64)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let body = l.trim().strip_prefix('#')?;
            let (k, v) = body.split_once('=')?;
            Some((k.trim().to_string(), (v.trim().to_string(), i as u64 + 1)))
        })
        .collect()
}

fn meta_f64(meta: &HashMap<String, (String, u64)>, key: &str) -> Result<f64> {
    let (v, line) = meta
        .get(key)
        .ok_or_else(|| parse_err(1, format!("missing metadata line `# {key}=`")))?;
    v.parse::<f64>()
        .map_err(|_| parse_err(*line, format!("`{key}` is not a number: {v}")))
}

fn meta_f64_opt(meta: &HashMap<String, (String, u64)>, key: &str) -> Result<Option<f64>> {
    if meta.contains_key(key) {
        meta_f64(meta, key).map(Some)
    } else {
        Ok(None)
    }
}

/// Rows of a headed CSV table as `(line, fields)`, after checking the header.
fn read_table(text: &str, header: &[&str]) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let found = rdr
        .headers()
        .map_err(|e| parse_err(csv_line(&e), e.to_string()))?
        .clone();
    let header_line = text
        .lines()
        .position(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map_or(1, |i| i as u64 + 1);
    if found.is_empty() {
        return Err(parse_err(
            1,
            format!("empty input, expected header `{}`", header.join(",")),
        ));
    }
    if found.iter().collect::<Vec<_>>() != header {
        return Err(parse_err(
            header_line,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(csv_line(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, vals));
    }
    Ok(rows)
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

fn read_all(mut r: impl Read) -> Result<String> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    Ok(s)
}

/// Shortest round-trip form, with an exponent outside `[1e-4, 1e15)`.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// `nan` for invalid samples.
fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| Num(v).to_string())
}

// ---- coefficients ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub coefficients: Vec<CoefficientEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual_rms_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unobservable: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gramian_condition: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoefficientInput {
    Bare(Vec<CoefficientEntry>),
    Report(CoefficientReport),
}

/// Accepts a bare `[{index, value_m}]` array or an object with a
/// `coefficients` field.
pub fn read_coefficients(r: impl Read) -> Result<ZernikeCoefficients> {
    let text = read_all(r)?;
    if text.trim().is_empty() {
        return Err(parse_err(1, "empty coefficient file"));
    }
    let entries = match serde_json::from_str::<CoefficientInput>(&text) {
        Ok(CoefficientInput::Bare(e)) => e,
        Ok(CoefficientInput::Report(r)) => r.coefficients,
        Err(_) => {
            // Re-run the strict parse for a located message.
            return Err(serde_json::from_str::<Vec<CoefficientEntry>>(&text)
                .map(|_| parse_err(1, "unrecognized coefficient layout"))
                .unwrap_or_else(json_err));
        }
    };
    ZernikeCoefficients::from_entries(&entries)
}

pub fn write_coefficient_report(w: impl Write, report: &CoefficientReport) -> Result<()> {
    let mut w = w;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    Ok(())
}

// ---- wavefront maps ----

pub fn read_wavefront(r: impl Read) -> Result<WavefrontMap> {
    let text = read_all(r)?;
    let meta = metadata(&text);
    let aperture = meta_f64(&meta, "aperture_radius_m")?;
    let rows = read_table(&text, &["x", "y", "w_m"])?;
    if rows.is_empty() {
        return Err(parse_err(1, "wavefront file has no samples"));
    }
    let mut xs: Vec<f64> = rows.iter().flat_map(|r| [r.1[0], r.1[1]]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let spacing = xs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if !spacing.is_finite() {
        return Err(parse_err(
            rows[0].0,
            "cannot infer grid spacing from a single coordinate",
        ));
    }
    let n = (2.0 / spacing).round() as usize;
    let grid = DiskGrid::new(n, aperture).map_err(|e| parse_err(1, e.to_string()))?;
    let mut map = WavefrontMap::empty(grid);
    for (line, v) in rows {
        let (x, y, w) = (v[0], v[1], v[2]);
        let (col, row) = match (grid.index_of(x), grid.index_of(y)) {
            (Some(c), Some(r)) => (c, r),
            _ => {
                return Err(parse_err(
                    line,
                    format!("({x}, {y}) is off the {n}x{n} grid"),
                ))
            }
        };
        if (grid.coord(col) - x).abs() > 1e-6 || (grid.coord(row) - y).abs() > 1e-6 {
            return Err(parse_err(
                line,
                format!("({x}, {y}) is not a cell centre of the {n}x{n} grid"),
            ));
        }
        if !grid.in_disk(row, col) {
            if w.is_nan() {
                continue;
            }
            return Err(parse_err(
                line,
                format!("({x}, {y}) lies outside the unit disk"),
            ));
        }
        if w.is_infinite() {
            return Err(parse_err(line, "infinite wavefront value"));
        }
        map.set(row, col, (!w.is_nan()).then_some(w));
    }
    Ok(map)
}

/// Every in-disk sample, invalid ones as `nan`.
pub fn write_wavefront(w: impl Write, map: &WavefrontMap) -> Result<()> {
    let mut w = w;
    writeln!(w, "# aperture_radius_m={}", Num(map.aperture_radius_m()))?;
    writeln!(w, "x,y,w_m")?;
    let g = map.grid();
    for row in 0..g.n() {
        for col in 0..g.n() {
            if g.in_disk(row, col) {
                let (x, y) = g.point(row, col);
                writeln!(w, "{},{},{}", Num(x), Num(y), opt(map.get(row, col)))?;
            }
        }
    }
    Ok(())
}

// ---- Shack-Hartmann gradients ----

pub fn read_gradients(r: impl Read) -> Result<GradientField> {
    let text = read_all(r)?;
    let meta = metadata(&text);
    let f_sh = meta_f64(&meta, "f_sh_m")?;
    let aperture = meta_f64(&meta, "aperture_radius_m")?;
    let rows = read_table(&text, &["x_norm", "y_norm", "dx_m", "dy_m"])?;
    if rows.is_empty() {
        return Err(parse_err(1, "gradient file has no lenslets"));
    }
    let mut lenslets = Vec::with_capacity(rows.len());
    let (mut dx, mut dy) = (Vec::new(), Vec::new());
    for (line, v) in &rows {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(*line, "gradient rows must be finite"));
        }
        lenslets.push((v[0], v[1]));
        dx.push(v[2]);
        dy.push(v[3]);
    }
    GradientField::new(lenslets, dx, dy, f_sh, aperture)
}

pub fn write_gradients(w: impl Write, g: &GradientField) -> Result<()> {
    let mut w = w;
    writeln!(w, "# f_sh_m={}", Num(g.f_sh_m()))?;
    writeln!(w, "# aperture_radius_m={}", Num(g.aperture_radius_m()))?;
    writeln!(w, "x_norm,y_norm,dx_m,dy_m")?;
    for (i, (x, y)) in g.lenslets().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            Num(*x),
            Num(*y),
            Num(g.dx()[i]),
            Num(g.dy()[i])
        )?;
    }
    Ok(())
}

// ---- refractive power ----

pub fn write_power_map(w: impl Write, p: &RefractivePowerMap) -> Result<()> {
    let mut w = w;
    writeln!(w, "# aperture_radius_m={}", Num(p.dx.aperture_radius_m()))?;
    writeln!(w, "x,y,Dx_dpt,Dy_dpt,Dxy_dpt")?;
    let g = p.dx.grid();
    for row in 0..g.n() {
        for col in 0..g.n() {
            if g.in_disk(row, col) {
                let (x, y) = g.point(row, col);
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    Num(x),
                    Num(y),
                    opt(p.dx.get(row, col)),
                    opt(p.dy.get(row, col)),
                    opt(p.dxy.get(row, col))
                )?;
            }
        }
    }
    Ok(())
}

// ---- MTF and spectra ----

fn orientation_label(o: Orientation) -> String {
    if o == Orientation::horizontal() {
        "horizontal".into()
    } else if o == Orientation::vertical() {
        "vertical".into()
    } else {
        format!("{};{}", Num(o.x()), Num(o.y()))
    }
}

fn parse_orientation(s: &str, line: u64) -> Result<Orientation> {
    match s {
        "horizontal" => Ok(Orientation::horizontal()),
        "vertical" => Ok(Orientation::vertical()),
        _ => {
            let (a, b) = s
                .split_once(';')
                .ok_or_else(|| parse_err(line, format!("unknown orientation `{s}`")))?;
            let p = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad orientation `{s}`")))
            };
            Orientation::new(p(a)?, p(b)?).map_err(|e| parse_err(line, e.to_string()))
        }
    }
}

/// Values are written to 1e-6, far below the model accuracy, so curves that
/// differ only by rounding noise give identical files.
pub fn write_mtf(w: impl Write, m: &MTFCurve) -> Result<()> {
    let mut w = w;
    writeln!(w, "# lambda_m={}", Num(m.wavelength_m))?;
    writeln!(w, "# orientation={}", orientation_label(m.orientation))?;
    writeln!(w, "freq_cyc_per_mm,mtf")?;
    for (k, v) in m.frequencies_cyc_per_mm().iter().zip(&m.values) {
        writeln!(w, "{},{:.6}", Num(*k), v)?;
    }
    Ok(())
}

pub fn read_mtf(r: impl Read) -> Result<MTFCurve> {
    let text = read_all(r)?;
    let meta = metadata(&text);
    let wavelength_m = meta_f64(&meta, "lambda_m")?;
    let orientation = match meta.get("orientation") {
        Some((s, line)) => parse_orientation(s, *line)?,
        None => Orientation::horizontal(),
    };
    let rows = read_table(&text, &["freq_cyc_per_mm", "mtf"])?;
    Ok(MTFCurve {
        frequencies: rows.iter().map(|r| r.1[0] * 1e3).collect(),
        values: rows.iter().map(|r| r.1[1]).collect(),
        orientation,
        wavelength_m,
    })
}

/// Rows are discrete lines unless a `# kind=density` line marks them as
/// samples of a continuous density.
pub fn read_psd(r: impl Read) -> Result<SpectralDensity> {
    let text = read_all(r)?;
    let meta = metadata(&text);
    let rows = read_table(&text, &["lambda_m", "weight"])?;
    if rows.is_empty() {
        return Err(parse_err(1, "spectral density has no rows"));
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.1[0], r.1[1])).collect();
    let density = match meta.get("kind") {
        None => false,
        Some((k, _)) if k == "lines" => false,
        Some((k, _)) if k == "density" => true,
        Some((k, line)) => return Err(parse_err(*line, format!("unknown spectrum kind `{k}`"))),
    };
    let result = if density {
        SpectralDensity::from_density(&pairs)
    } else {
        SpectralDensity::new(pairs)
    };
    result.map_err(|e| parse_err(rows[0].0, e.to_string()))
}

// ---- SFR ----

pub fn write_sfr(w: impl Write, c: &SFRCurve, reference_frequency: f64) -> Result<()> {
    let mut w = w;
    writeln!(w, "# edge_angle_deg={}", Num(c.edge_angle_deg))?;
    writeln!(w, "# snr={}", Num(c.snr))?;
    writeln!(
        w,
        "# reference_freq_cyc_per_px={}",
        Num(reference_frequency)
    )?;
    writeln!(
        w,
        "# sfr_at_reference={}",
        opt(c.summary(reference_frequency))
    )?;
    writeln!(w, "freq_cyc_per_px,sfr")?;
    for (f, v) in c.frequencies.iter().zip(&c.values) {
        writeln!(w, "{},{}", Num(*f), Num(*v))?;
    }
    Ok(())
}

// ---- images ----

const PGM_MAX: f64 = 65535.0;

/// Binary 16-bit PGM with pitch and nominal angle in header comments.
/// Intensities are clamped to [0, 1] and quantized to 16 bits.
pub fn write_pgm(w: impl Write, img: &EdgeImage) -> Result<()> {
    let mut w = w;
    writeln!(w, "P5")?;
    writeln!(w, "# pixel_pitch_m={}", Num(img.pixel_pitch_m))?;
    if let Some(a) = img.edge_angle_deg {
        writeln!(w, "# edge_angle_deg={}", Num(a))?;
    }
    writeln!(w, "{} {}", img.width, img.height)?;
    writeln!(w, "65535")?;
    let mut buf = Vec::with_capacity(2 * img.pixels.len());
    for p in &img.pixels {
        let q = (p.clamp(0.0, 1.0) * PGM_MAX).round() as u16;
        buf.extend_from_slice(&q.to_be_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads ASCII (P2) or binary (P5) PGM up to 16 bits; intensities are
/// scaled to [0, 1] by the header maximum.
pub fn read_pgm(r: impl Read) -> Result<EdgeImage> {
    let mut r = r;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut line = 1u64;
    let mut comments = Vec::new();
    // Header tokens, skipping comments.
    let next_token =
        |pos: &mut usize, line: &mut u64, comments: &mut Vec<(String, u64)>| -> Option<String> {
            loop {
                while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                    if bytes[*pos] == b'\n' {
                        *line += 1;
                    }
                    *pos += 1;
                }
                if *pos < bytes.len() && bytes[*pos] == b'#' {
                    let start = *pos;
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                    comments.push((
                        String::from_utf8_lossy(&bytes[start..*pos]).into_owned(),
                        *line,
                    ));
                    continue;
                }
                break;
            }
            let start = *pos;
            while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
                *pos += 1;
            }
            (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        };
    let magic = next_token(&mut pos, &mut line, &mut comments)
        .ok_or_else(|| parse_err(1, "empty image file"))?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        m => {
            return Err(parse_err(
                1,
                format!("unsupported image format `{m}`, expected P2 or P5"),
            ))
        }
    };
    let mut header = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let t = next_token(&mut pos, &mut line, &mut comments)
            .ok_or_else(|| parse_err(line, format!("missing {name}")))?;
        header[i] = t
            .parse()
            .map_err(|_| parse_err(line, format!("{name} `{t}` is not a positive integer")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(parse_err(
            line,
            format!("bad header {width}x{height} maxval {maxval}"),
        ));
    }
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if bytes.len() < pos + need {
            return Err(parse_err(
                line,
                format!("raster truncated: need {need} bytes"),
            ));
        }
        for i in 0..count {
            let v = if wide {
                u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]) as usize
            } else {
                bytes[pos + i] as usize
            };
            if v > maxval {
                return Err(parse_err(
                    line,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            pixels.push(v as f64 / maxval as f64);
        }
    } else {
        for _ in 0..count {
            let t = next_token(&mut pos, &mut line, &mut comments)
                .ok_or_else(|| parse_err(line, "raster truncated"))?;
            let v: usize = t
                .parse()
                .map_err(|_| parse_err(line, format!("`{t}` is not a sample value")))?;
            if v > maxval {
                return Err(parse_err(
                    line,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            pixels.push(v as f64 / maxval as f64);
        }
    }
    let text: String = comments.iter().map(|(c, _)| format!("{c}\n")).collect();
    let meta = metadata(&text);
    let pitch = meta_f64_opt(&meta, "pixel_pitch_m")?.unwrap_or(1.0);
    let mut img = EdgeImage::new(width, height, pixels, pitch)?;
    img.edge_angle_deg = meta_f64_opt(&meta, "edge_angle_deg")?;
    Ok(img)
}

/// Comma-separated raster, one image row per line.
pub fn write_raster_csv(w: impl Write, img: &EdgeImage) -> Result<()> {
    let mut w = w;
    writeln!(w, "# pixel_pitch_m={}", Num(img.pixel_pitch_m))?;
    if let Some(a) = img.edge_angle_deg {
        writeln!(w, "# edge_angle_deg={}", Num(a))?;
    }
    for row in img.pixels.chunks(img.width) {
        let cells: Vec<String> = row.iter().map(|v| Num(*v).to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_raster_csv(r: impl Read) -> Result<EdgeImage> {
    let text = read_all(r)?;
    let meta = metadata(&text);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut pixels = Vec::new();
    let mut width = 0;
    let mut height = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(csv_line(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        for f in rec.iter() {
            pixels.push(
                f.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("`{f}` is not a number")))?,
            );
        }
        width = rec.len();
        height += 1;
    }
    if height == 0 {
        return Err(parse_err(1, "raster has no rows"));
    }
    let pitch = meta_f64_opt(&meta, "pixel_pitch_m")?.unwrap_or(1.0);
    let mut img = EdgeImage::new(width, height, pixels, pitch)?;
    img.edge_angle_deg = meta_f64_opt(&meta, "edge_angle_deg")?;
    Ok(img)
}

// ---- system model ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldCurvatureEntry {
    pub field_deg: f64,
    pub dz_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LensSpec {
    pub f_m: f64,
    pub f_number: f64,
    #[serde(default)]
    pub field_curvature: Vec<FieldCurvatureEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub field_deg: f64,
    #[serde(rename = "Dh_dpt")]
    pub dh_dpt: f64,
    #[serde(rename = "Dv_dpt")]
    pub dv_dpt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zernike: Option<Vec<CoefficientEntry>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindscreenSpec {
    pub patches: Vec<PatchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclination_deg: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub lens: LensSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windscreen: Option<WindscreenSpec>,
}

impl SystemSpec {
    pub fn build(&self) -> Result<(LensModel, Option<WindscreenModel>)> {
        let lens = LensModel::new(
            self.lens.f_m,
            self.lens.f_number,
            self.lens
                .field_curvature
                .iter()
                .map(|e| (e.field_deg, e.dz_m))
                .collect(),
        )?;
        let ws = match &self.windscreen {
            None => None,
            Some(spec) => {
                let patches = spec
                    .patches
                    .iter()
                    .map(|p| {
                        Ok(WindscreenPatch {
                            field_deg: p.field_deg,
                            d_h_dpt: p.dh_dpt,
                            d_v_dpt: p.dv_dpt,
                            zernike: p
                                .zernike
                                .as_deref()
                                .map(ZernikeCoefficients::from_entries)
                                .transpose()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut ws = WindscreenModel::new(patches)?;
                ws.inclination_deg = spec.inclination_deg;
                Some(ws)
            }
        };
        Ok((lens, ws))
    }
}

pub fn read_system(r: impl Read) -> Result<SystemSpec> {
    let text = read_all(r)?;
    serde_json::from_str(&text).map_err(json_err)
}
