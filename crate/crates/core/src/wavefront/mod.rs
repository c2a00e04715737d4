//! Wavefront measurement: Shack-Hartmann slopes, local refractive power and
//! sub-aperture stitching.

pub mod power;
pub mod shack_hartmann;
pub mod stitch;

pub use crate::grid::WavefrontMap;
pub use power::{
    blur_ellipse_proxy, dioptric_matrix, laplace_trace, refractive_power, Axis,
    DioptricPowerMatrix, RefractivePowerMap,
};
pub use shack_hartmann::{
    disk_lattice, reconstruct, reconstruct_range, sh_forward, DesignMatrix, ForwardModel,
    GradientField, Reconstruction,
};
pub use stitch::{stitch, Stitched, Tile, TileCorrection};
