//! Small rotation helpers: elementary rotations, hat/vee and column-stacking.

use nalgebra::{Matrix3, SVector, Vector3};

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// d/dα of [`rot_z`].
pub fn rot_z_derivative(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// d/dα of [`rot_y`].
pub fn rot_y_derivative(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

/// `v^`, so that `hat(a) * b == a.cross(&b)`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] using the antisymmetric part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Column-stacking vectorization.
pub fn vec9(m: &Matrix3<f64>) -> SVector<f64, 9> {
    SVector::<f64, 9>::from_column_slice(m.as_slice())
}

/// `‖RᵀR − I‖_F`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_vee_roundtrip() {
        let v = Vector3::new(0.3, -1.2, 2.5);
        assert_eq!(vee(&hat(&v)), v);
        let w = Vector3::new(-0.7, 0.1, 0.4);
        assert!((hat(&v) * w - v.cross(&w)).norm() < 1e-15);
    }

    #[test]
    fn vec_is_column_major() {
        let m = Matrix3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        let v = vec9(&m);
        assert_eq!(v.as_slice(), &[1.0, 4.0, 7.0, 2.0, 5.0, 8.0, 3.0, 6.0, 9.0]);
    }

    #[test]
    fn elementary_derivatives_match_differences() {
        let h = 1e-6;
        for a in [-2.0, 0.0, 0.4, 1.9] {
            let fz = (rot_z(a + h) - rot_z(a - h)) / (2.0 * h);
            let fy = (rot_y(a + h) - rot_y(a - h)) / (2.0 * h);
            assert!((fz - rot_z_derivative(a)).norm() < 1e-9);
            assert!((fy - rot_y_derivative(a)).norm() < 1e-9);
        }
    }
}
