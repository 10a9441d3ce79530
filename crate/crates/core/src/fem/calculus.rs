//! Planar vector calculus. In 2D the curl of a vector field is a scalar,
//! the curl of a scalar is a vector, and the cross product of two vectors
//! is a scalar.

pub type Vec2 = [f64; 2];

/// `∇ × v = ∂x v_y − ∂y v_x`, given the Jacobian rows `[∇v_x, ∇v_y]`.
#[inline]
pub fn curl_vec(grad_vx: Vec2, grad_vy: Vec2) -> f64 {
    grad_vy[0] - grad_vx[1]
}

/// `∇ × w = (∂y w, −∂x w)` for a scalar `w` with gradient `grad_w`.
#[inline]
pub fn curl_scalar(grad_w: Vec2) -> Vec2 {
    [grad_w[1], -grad_w[0]]
}

/// `u × H = u_x H_y − u_y H_x`.
#[inline]
pub fn cross_vv(u: Vec2, h: Vec2) -> f64 {
    u[0] * h[1] - u[1] * h[0]
}

/// `H × w = (H_y w, −H_x w)` for a vector `H` and a scalar `w`.
#[inline]
pub fn cross_vs(h: Vec2, w: f64) -> Vec2 {
    [h[1] * w, -h[0] * w]
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
