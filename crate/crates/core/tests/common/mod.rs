//! Shared helpers for the integration tests: random states and a
//! finite-difference oracle for the manufactured sources.

#![allow(dead_code)]

use mhd_core::fem::{DofMap, FieldVec};
use mhd_core::scheme::{Fields, Forcing, State, Stepper};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_free(map: &DofMap, rng: &mut ChaCha8Rng) -> FieldVec {
    let free: Vec<f64> = (0..map.num_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FieldVec::from_free(map, &free)
}

pub fn random_full(map: &DofMap, rng: &mut ChaCha8Rng) -> FieldVec {
    FieldVec::from_values(map, (0..map.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_pressure(s: &Stepper, rng: &mut ChaCha8Rng) -> FieldVec {
    let mut p = random_full(&s.forms().pressure, rng);
    s.center_pressure(&mut p);
    p
}

pub fn random_state(s: &Stepper, rng: &mut ChaCha8Rng) -> State {
    let f = s.forms();
    State {
        n: 1,
        h: random_free(&f.magnetic, rng),
        h_prev: random_free(&f.magnetic, rng),
        u: random_free(&f.velocity, rng),
        u_prev: random_free(&f.velocity, rng),
        u_hat: FieldVec::zeros(&f.velocity),
        p: random_pressure(s, rng),
    }
}

/// Zero sources that still go through load assembly.
pub struct ExplicitZero;

impl Forcing for ExplicitZero {
    fn magnetic(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn momentum(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }
}

const H: f64 = 1e-3;

/// Fourth-order central first derivative.
pub fn d1(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (-f(x + 2.0 * H) + 8.0 * f(x + H) - 8.0 * f(x - H) + f(x - 2.0 * H)) / (12.0 * H)
}

/// Fourth-order central second derivative.
pub fn d2(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (-f(x + 2.0 * H) + 16.0 * f(x + H) - 30.0 * f(x) + 16.0 * f(x - H) - f(x - 2.0 * H)) / (12.0 * H * H)
}

fn curl_at(fields: &dyn Fields, t: f64, x: f64, y: f64) -> f64 {
    d1(|s| fields.magnetic(t, s, y)[1], x) - d1(|s| fields.magnetic(t, x, s)[0], y)
}

/// `μ ∂ₜH + σ⁻¹ ∇×∇×H − μ ∇×(u × H)` from differences of the fields alone.
pub fn fd_magnetic_source(fields: &dyn Fields, mu: f64, sigma: f64, t: f64, x: f64, y: f64) -> [f64; 2] {
    let cross = |t: f64, x: f64, y: f64| {
        let (u, h) = (fields.velocity(t, x, y), fields.magnetic(t, x, y));
        u[0] * h[1] - u[1] * h[0]
    };
    // curl of a scalar w is (∂y w, −∂x w)
    let curlcurl = [
        d1(|s| curl_at(fields, t, x, s), y),
        -d1(|s| curl_at(fields, t, s, y), x),
    ];
    let curl_cross = [d1(|s| cross(t, x, s), y), -d1(|s| cross(t, s, y), x)];
    [0, 1].map(|i| mu * d1(|s| fields.magnetic(s, x, y)[i], t) + curlcurl[i] / sigma - mu * curl_cross[i])
}

/// `∂ₜu + u·∇u − ν Δu + ∇p + μ H × (∇×H)` from differences of the fields alone.
pub fn fd_momentum_source(fields: &dyn Fields, mu: f64, nu: f64, t: f64, x: f64, y: f64) -> [f64; 2] {
    let u = fields.velocity(t, x, y);
    let h = fields.magnetic(t, x, y);
    let c = curl_at(fields, t, x, y);
    let lorentz = [h[1] * c, -h[0] * c];
    [0, 1].map(|i| {
        let dt = d1(|s| fields.velocity(s, x, y)[i], t);
        let dx = d1(|s| fields.velocity(t, s, y)[i], x);
        let dy = d1(|s| fields.velocity(t, x, s)[i], y);
        let lap = d2(|s| fields.velocity(t, s, y)[i], x) + d2(|s| fields.velocity(t, x, s)[i], y);
        let gp = if i == 0 {
            d1(|s| fields.pressure(t, s, y), x)
        } else {
            d1(|s| fields.pressure(t, x, s), y)
        };
        dt + u[0] * dx + u[1] * dy - nu * lap + gp + mu * lorentz[i]
    })
}

pub fn rel_err(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    d / (b[0].powi(2) + b[1].powi(2)).sqrt()
}
