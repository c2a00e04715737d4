use thiserror::Error;

/// Broad failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or out-of-domain input.
    Input,
    /// A numerical procedure could not produce a trustworthy answer.
    Numerical,
    /// A measurement was attempted on data that cannot support it.
    MeasurementValidity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Zernike index {index} (implemented up to {max})")]
    UnsupportedIndex { index: usize, max: usize },

    #[error("point ({x}, {y}) lies outside the unit disk")]
    OutsideDisk { x: f64, y: f64 },

    #[error("integration did not reach tolerance: estimated residual {residual:.3e}")]
    Accuracy { residual: f64 },

    #[error("insufficient sampling: {what} needs at least {required} samples, got {actual}")]
    Resolution {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-physical wavefront gradient |beta| = {beta:.6} at lenslet {lenslet}")]
    NonphysicalGradient { lenslet: usize, beta: f64 },

    #[error("degenerate lenslet layout: {reason}; unconstrained directions: {}", format_directions(.directions))]
    DegenerateLayout {
        reason: String,
        /// Each direction is a list of (Zernike index, weight) pairs, or a
        /// single pseudo-entry describing a spatial direction.
        directions: Vec<Vec<(usize, f64)>>,
    },

    #[error("point ({row}, {col}) has no complete finite-difference stencil")]
    InvalidPoint { row: usize, col: usize },

    #[error("stitching failed: {0}")]
    Stitching(String),

    #[error("pupil sampling aliases: padding factor {factor:.2} below required {required}")]
    Aliasing { factor: f64, required: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("measurement not valid: {0}")]
    MeasurementValidity(String),

    #[error("first-order approximation invalid: |D*f| = {value:.4} exceeds {limit}")]
    ApproximationValidity { value: f64, limit: f64 },

    #[error("outside model domain: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_directions(dirs: &[Vec<(usize, f64)>]) -> String {
    dirs.iter()
        .map(|d| {
            let terms: Vec<String> = d.iter().map(|(i, w)| format!("{w:+.3}*Z{i}")).collect();
            format!("[{}]", terms.join(" "))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::UnsupportedIndex { .. }
            | Error::OutsideDisk { .. }
            | Error::Resolution { .. }
            | Error::InvalidInput(_)
            | Error::InvalidPoint { .. }
            | Error::Geometry(_)
            | Error::Domain(_)
            | Error::Parse { .. }
            | Error::Io(_) => ErrorCategory::Input,
            Error::Accuracy { .. }
            | Error::NonphysicalGradient { .. }
            | Error::DegenerateLayout { .. }
            | Error::Stitching(_)
            | Error::Aliasing { .. }
            | Error::ApproximationValidity { .. } => ErrorCategory::Numerical,
            Error::MeasurementValidity(_) => ErrorCategory::MeasurementValidity,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedIndex { .. } => "unsupported_order",
            Error::OutsideDisk { .. } => "domain",
            Error::Accuracy { .. } => "accuracy",
            Error::Resolution { .. } => "resolution",
            Error::InvalidInput(_) => "invalid_input",
            Error::NonphysicalGradient { .. } => "nonphysical_gradient",
            Error::DegenerateLayout { .. } => "degenerate_layout",
            Error::InvalidPoint { .. } => "invalid_point",
            Error::Stitching(_) => "stitching",
            Error::Aliasing { .. } => "aliasing",
            Error::Geometry(_) => "geometry",
            Error::MeasurementValidity(_) => "measurement_validity",
            Error::ApproximationValidity { .. } => "approximation_validity",
            Error::Domain(_) => "domain",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
