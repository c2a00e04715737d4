//! Quadrature rules on the interval and on the unit disk.
//!
//! The disk rule is a tensor product of Gauss–Legendre nodes in the radius
//! (with the polar Jacobian `rho` folded into the weights) and the uniform
//! trapezoid rule in the angle. With `nr` radial nodes it integrates
//! `rho * p(rho)` exactly for polynomials `p` of degree `<= 2*nr - 2`, and the
//! angular rule is exact for trigonometric polynomials of degree `< nphi`.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// A single quadrature node on the unit disk, in Cartesian coordinates.
#[derive(Debug, Clone, Copy)]
pub struct DiskNode {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

/// Tensor-product quadrature on the closed unit disk.
#[derive(Debug, Clone)]
pub struct DiskQuadrature {
    radial: usize,
    angular: usize,
    nodes: Vec<DiskNode>,
}

impl DiskQuadrature {
    pub const DEFAULT_RADIAL: usize = 64;
    pub const DEFAULT_ANGULAR: usize = 128;

    pub fn new(radial: usize, angular: usize) -> Self {
        assert!(radial > 0 && angular > 0);
        let (gx, gw) = gauss_legendre(radial);
        let dphi = 2.0 * PI / angular as f64;
        let mut nodes = Vec::with_capacity(radial * angular);
        for (x, w) in gx.iter().zip(&gw) {
            // [-1, 1] -> [0, 1], Jacobian 1/2, polar Jacobian rho.
            let rho = 0.5 * (x + 1.0);
            let wr = 0.5 * w * rho;
            for k in 0..angular {
                let phi = k as f64 * dphi;
                nodes.push(DiskNode {
                    x: rho * phi.cos(),
                    y: rho * phi.sin(),
                    weight: wr * dphi,
                });
            }
        }
        Self {
            radial,
            angular,
            nodes,
        }
    }

    pub fn radial(&self) -> usize {
        self.radial
    }

    pub fn angular(&self) -> usize {
        self.angular
    }

    pub fn nodes(&self) -> &[DiskNode] {
        &self.nodes
    }

    /// Integrates `f(x, y)` over the unit disk.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n.x, n.y)).sum()
    }
}

impl Default for DiskQuadrature {
    fn default() -> Self {
        Self::new(Self::DEFAULT_RADIAL, Self::DEFAULT_ANGULAR)
    }
}
