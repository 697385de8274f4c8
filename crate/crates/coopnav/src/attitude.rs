//! Quaternion and rotation-matrix algebra with the small-angle attitude error
//! model used by the error-state filters.
//!
//! Conventions, used consistently across the crate:
//! - Quaternions are Hamilton, scalar-first `(w, x, y, z)`, and represent the
//!   body-to-navigation rotation: `C_b^n = quat_to_rotmat(q)`.
//! - The attitude error `φ` is a navigation-side phi-angle: an estimate with
//!   error `φ` relative to the true attitude satisfies
//!   `C_hat = (I - φ×) C_true` to first order (`C_hat = exp(-φ×) C_true`
//!   exactly). Error feedback therefore composes `exp(+φ̂×)` with the nominal
//!   attitude, which is [`correct_attitude`] called with the negated
//!   estimate; see [`crate::ins::NominalState::apply_error_feedback`].

use crate::{Mat3, Quat, Vec3};

/// Unit-norm tolerance accepted before operations renormalize defensively.
const NORM_DRIFT: f64 = 1e-6;

/// Rotation matrix `C_b^n` of a unit quaternion.
///
/// Renormalizes first if the norm has drifted by more than 1e-6.
pub fn quat_to_rotmat(q: &Quat) -> Mat3 {
    let norm = q.as_ref().norm();
    if (norm - 1.0).abs() > NORM_DRIFT {
        let fixed = Quat::new_normalize(*q.as_ref());
        return fixed.to_rotation_matrix().into_inner();
    }
    q.to_rotation_matrix().into_inner()
}

/// Antisymmetric cross-product matrix: `skew(v) * w == v × w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Exponential map from a rotation vector; `quat_to_rotmat(quat_exp(φ))`
/// equals the matrix exponential of `skew(φ)`.
pub fn quat_exp(phi: &Vec3) -> Quat {
    Quat::from_scaled_axis(*phi)
}

/// First-order perturbation `(I - φ×) C` of a rotation matrix.
///
/// Deliberately not re-orthonormalized: this is the linearized model used by
/// the observation equations, not a feedback path.
pub fn perturb_rotation(c: &Mat3, phi: &Vec3) -> Mat3 {
    (Mat3::identity() - skew(phi)) * c
}

/// Error feedback on the navigation side: composes the exact exponential map
/// of `-phi_est` with the nominal attitude, so the result satisfies
/// `C_new = exp(-φ×) C_hat`. Result is renormalized.
pub fn correct_attitude(q_hat: &Quat, phi_est: &Vec3) -> Quat {
    let corrected = quat_exp(&-phi_est) * q_hat;
    Quat::new_normalize(*corrected.as_ref())
}

/// Navigation-side attitude error `φ` of an estimate relative to truth, i.e.
/// the vector with `C_hat = exp(-φ×) C_true`.
///
/// This matches the sign convention of the error-state covariance, so the
/// result can be used directly in NEES and correlation computations.
pub fn attitude_error(q_hat: &Quat, q_true: &Quat) -> Vec3 {
    // C_hat C_true^T = exp(-φ×)  =>  φ = -log(C_hat C_true^T)
    -(q_hat * q_true.inverse()).scaled_axis()
}
