//! Unit-sphere operations for the orientation block.

use crate::Vec3;

/// Orthogonal projection onto the tangent space at `x`: `u - <x, u> x`.
pub fn project(x: &Vec3, u: &Vec3) -> Vec3 {
    u - x.dot(u) * x
}

/// Retraction `(x + u) / sqrt(1 + |u|^2)` for a tangent vector `u` at a unit `x`.
pub fn retract(x: &Vec3, u: &Vec3) -> Vec3 {
    (x + u) / (1.0 + u.norm_squared()).sqrt()
}

/// Gradient step on the sphere: `R_x(-step * P_x(grad))`.
pub fn riemannian_step(x: &Vec3, grad: &Vec3, step: f64) -> Vec3 {
    retract(x, &(-step * project(x, grad)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_step_is_identity() {
        let x = Vec3::new(0.6, 0.0, 0.8);
        assert_eq!(retract(&x, &Vec3::zeros()), x);
    }

    #[test]
    fn radial_gradient_does_not_move() {
        let x = Vec3::new(0.0, 0.6, 0.8);
        let y = riemannian_step(&x, &(3.0 * x), 1.0);
        assert!((y - x).norm() < 1e-15);
    }
}
