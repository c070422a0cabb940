// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small fixed-size complex matrices and closed-form SU(2) helpers.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Unitary2 = Matrix2<C64>;
pub type Unitary4 = Matrix4<C64>;
pub type Mat3 = Matrix3<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> Unitary2 {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Unitary2 {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Unitary2 {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// exp(-i θ n·σ / 2) for a unit vector `n`.
pub fn su2_axis_angle(n: [f64; 3], theta: f64) -> Unitary2 {
    let (s, co) = (0.5 * theta).sin_cos();
    Matrix2::new(
        c(co, -s * n[2]),
        c(-s * n[1], -s * n[0]),
        c(s * n[1], -s * n[0]),
        c(co, s * n[2]),
    )
}

/// exp(-i t h·σ) for an arbitrary real vector `h` (angular units).
pub fn expm_pauli(h: [f64; 3], t: f64) -> Unitary2 {
    let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    if norm == 0.0 {
        return Unitary2::identity();
    }
    su2_axis_angle([h[0] / norm, h[1] / norm, h[2] / norm], 2.0 * norm * t)
}

pub fn rx(theta: f64) -> Unitary2 {
    su2_axis_angle([1.0, 0.0, 0.0], theta)
}

pub fn ry(theta: f64) -> Unitary2 {
    su2_axis_angle([0.0, 1.0, 0.0], theta)
}

pub fn rz(theta: f64) -> Unitary2 {
    su2_axis_angle([0.0, 0.0, 1.0], theta)
}

/// Phase-invariant trace fidelity |tr(U†V)| / d.
pub fn trace_fidelity2(u: &Unitary2, v: &Unitary2) -> f64 {
    (u.adjoint() * v).trace().norm() / 2.0
}

pub fn trace_fidelity4(u: &Unitary4, v: &Unitary4) -> f64 {
    (u.adjoint() * v).trace().norm() / 4.0
}

pub fn infidelity2(u: &Unitary2, v: &Unitary2) -> f64 {
    1.0 - trace_fidelity2(u, v)
}

/// Rescales `u` so that det = 1 with the branch chosen to make Re tr ≥ 0.
pub fn to_special(u: &Unitary2) -> Unitary2 {
    let d = u.determinant();
    let mut s = u / d.sqrt();
    if s.trace().re < 0.0 {
        s = -s;
    }
    s
}

pub fn to_special4(u: &Unitary4) -> Unitary4 {
    let d = u.determinant();
    let r = d.powf(0.25);
    u / r
}

/// Rotation axis (unit vector) and angle in [0, π] of an SU(2) matrix.
pub fn axis_angle(u: &Unitary2) -> ([f64; 3], f64) {
    let s = to_special(u);
    let a0 = 0.5 * (s[(0, 0)] + s[(1, 1)]).re;
    let ax = -0.5 * (s[(0, 1)] + s[(1, 0)]).im;
    let ay = 0.5 * (s[(1, 0)] - s[(0, 1)]).re;
    let az = -0.5 * (s[(0, 0)] - s[(1, 1)]).im;
    let sn = (ax * ax + ay * ay + az * az).sqrt();
    let theta = 2.0 * sn.atan2(a0);
    if sn < 1e-300 {
        return ([0.0, 0.0, 1.0], 0.0);
    }
    ([ax / sn, ay / sn, az / sn], theta)
}

pub fn kron2(a: &Unitary2, b: &Unitary2) -> Unitary4 {
    Unitary4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

pub fn max_abs_diff<const N: usize>(
    a: &nalgebra::SMatrix<C64, N, N>,
    b: &nalgebra::SMatrix<C64, N, N>,
) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn unitarity_error<const N: usize>(u: &nalgebra::SMatrix<C64, N, N>) -> f64 {
    let id = nalgebra::SMatrix::<C64, N, N>::identity();
    max_abs_diff(&(u.adjoint() * u), &id)
}

/// Bloch vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩) of a normalized 2-component state.
pub fn bloch(psi: &nalgebra::Vector2<C64>) -> Vector3<f64> {
    let a = psi[0];
    let b = psi[1];
    let ab = a.conj() * b;
    Vector3::new(2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr())
}

/// Wraps an angle into (-π, π].
pub fn wrap_pi(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}
