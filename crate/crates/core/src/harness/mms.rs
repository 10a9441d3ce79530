//! Manufactured solution on the unit square and its sources.
//!
//! With `U`, `K`, `P` the spatial profiles below, the exact fields are
//! `u = t⁴U`, `H = t⁴K`, `p = t⁴P`. Both profiles are divergence free,
//! `U` vanishes on ∂Ω and `K × n` vanishes on ∂Ω. The sources were
//! derived symbolically and are hard-coded term by term.

use std::f64::consts::PI;

use crate::assembly::PhysParams;
use crate::scheme::{Fields, Forcing};

fn sincos(a: f64) -> (f64, f64) {
    a.sin_cos()
}

/// `U(x, y)`.
pub fn velocity_profile(x: f64, y: f64) -> [f64; 2] {
    let (spx, spy) = ((PI * x).sin(), (PI * y).sin());
    let (s2x, s2y) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin());
    [spx * spx * s2y, -s2x * spy * spy]
}

/// `K(x, y)`.
pub fn magnetic_profile(x: f64, y: f64) -> [f64; 2] {
    let (s2x, c2x) = sincos(2.0 * PI * x);
    let (s2y, c2y) = sincos(2.0 * PI * y);
    [-s2y * c2x, s2x * c2y]
}

/// `P(x, y)`, zero mean.
pub fn pressure_profile(x: f64, y: f64) -> f64 {
    (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
}

/// Jacobian rows `[∇U_x, ∇U_y]`.
pub fn velocity_jacobian(x: f64, y: f64) -> [[f64; 2]; 2] {
    let (spx, cpx) = sincos(PI * x);
    let (spy, cpy) = sincos(PI * y);
    let (s2x, c2x) = sincos(2.0 * PI * x);
    let (s2y, c2y) = sincos(2.0 * PI * y);
    [
        [2.0 * PI * spx * cpx * s2y, 2.0 * PI * spx * spx * c2y],
        [-2.0 * PI * c2x * spy * spy, -2.0 * PI * s2x * spy * cpy],
    ]
}

/// Jacobian rows `[∇K_x, ∇K_y]`.
pub fn magnetic_jacobian(x: f64, y: f64) -> [[f64; 2]; 2] {
    let (s2x, c2x) = sincos(2.0 * PI * x);
    let (s2y, c2y) = sincos(2.0 * PI * y);
    [
        [2.0 * PI * s2y * s2x, -2.0 * PI * c2y * c2x],
        [2.0 * PI * c2x * c2y, -2.0 * PI * s2x * s2y],
    ]
}

/// Exact solution `(t⁴U, t⁴K, t⁴P)` with sources for the given coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedSolution {
    pub params: PhysParams,
}

impl ManufacturedSolution {
    pub fn new(params: PhysParams) -> Self {
        ManufacturedSolution { params }
    }

    /// `g = μ ∂ₜH + σ⁻¹ ∇×∇×H − μ ∇×(u × H)`.
    pub fn g(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let PhysParams { mu, sigma, .. } = self.params;
        let (t3, t4) = (t.powi(3), t.powi(4));
        let t8 = t4 * t4;
        let (s2x, c2x) = sincos(2.0 * PI * x);
        let (s2y, c2y) = sincos(2.0 * PI * y);
        let (spx, spy) = ((PI * x).sin(), (PI * y).sin());
        let k = [-s2y * c2x, s2x * c2y];
        let curlcurl = [-8.0 * PI * PI * s2y * c2x, 8.0 * PI * PI * s2x * c2y];
        let d = spx * spx - spy * spy;
        let c4x = (4.0 * PI * x).cos();
        let c4y = (4.0 * PI * y).cos();
        let curl_uk = [
            2.0 * PI * (d * c2y + 0.25 * c4y - 0.25) * s2x,
            2.0 * PI * (-d * c2x + 0.25 * c4x - 0.25) * s2y,
        ];
        [0, 1].map(|i| mu * 4.0 * t3 * k[i] + t4 * curlcurl[i] / sigma - mu * t8 * curl_uk[i])
    }

    /// `f = ∂ₜu + u·∇u − ν Δu + ∇p + μ H × (∇×H)`.
    pub fn f(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let PhysParams { mu, nu, .. } = self.params;
        let (t3, t4) = (t.powi(3), t.powi(4));
        let t8 = t4 * t4;
        let (spx, cpx) = sincos(PI * x);
        let (spy, cpy) = sincos(PI * y);
        let (s2x, c2x) = sincos(2.0 * PI * x);
        let (s2y, c2y) = sincos(2.0 * PI * y);
        let u = velocity_profile(x, y);
        let conv = [
            4.0 * PI * spx.powi(3) * spy * spy * cpx,
            4.0 * PI * spx * spx * spy.powi(3) * cpy,
        ];
        let lap = [
            2.0 * PI * PI * (2.0 * c2x - 1.0) * s2y,
            2.0 * PI * PI * (1.0 - 2.0 * c2y) * s2x,
        ];
        let grad_p = [2.0 * PI * s2y * c2x, 2.0 * PI * s2x * c2y];
        let lorentz = [
            4.0 * PI * s2x * c2x * c2y * c2y,
            4.0 * PI * s2y * c2x * c2x * c2y,
        ];
        [0, 1].map(|i| 4.0 * t3 * u[i] + t8 * conv[i] - nu * t4 * lap[i] + t4 * grad_p[i] + mu * t8 * lorentz[i])
    }
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        Self::new(PhysParams::default())
    }
}

impl Fields for ManufacturedSolution {
    fn velocity(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        velocity_profile(x, y).map(|v| t.powi(4) * v)
    }

    fn magnetic(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        magnetic_profile(x, y).map(|v| t.powi(4) * v)
    }

    fn pressure(&self, t: f64, x: f64, y: f64) -> f64 {
        t.powi(4) * pressure_profile(x, y)
    }
}

impl Forcing for ManufacturedSolution {
    fn magnetic(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        self.g(t, x, y)
    }

    fn momentum(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        self.f(t, x, y)
    }
}

/// Time-independent initial data of the energy experiment: the profiles
/// `U`, `K`, `P` themselves.
#[derive(Clone, Copy, Debug, Default)]
pub struct InitialVortex;

impl Fields for InitialVortex {
    fn velocity(&self, _: f64, x: f64, y: f64) -> [f64; 2] {
        velocity_profile(x, y)
    }

    fn magnetic(&self, _: f64, x: f64, y: f64) -> [f64; 2] {
        magnetic_profile(x, y)
    }

    fn pressure(&self, _: f64, x: f64, y: f64) -> f64 {
        pressure_profile(x, y)
    }
}
